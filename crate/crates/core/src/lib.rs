//! Numerical and symbolic tools for the quadratic polynomial automorphisms
//! f(x,y,z) = (y, z, yz + by + cz + dx + e) of C^3.
//!
//! * [`map`]: f, f^{-1}, the involution tau, fixed points and orbits.
//! * [`atlas`]: the blow-up X of P^3 along L = (Y = T = 0), its charts and
//!   the indeterminacy curves of f and f^{-1}.
//! * [`cohomology`]: the pullback on H^{1,1}(X), dynamical degrees, the
//!   invariant class and an exact symbolic degree oracle ([`poly`]).
//! * [`green`]: escape-rate Green functions G+ and G-.
//! * [`partition`]: wedge neighbourhoods of the points at infinity,
//!   itineraries and the search for linearly escaping orbits.
//! * [`phi`]: the renormalized potential on linearly escaping orbits.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod cohomology;
pub mod error;
pub mod green;
pub mod logmag;
pub mod map;
pub mod partition;
pub mod phi;
pub mod poly;

pub use error::{Error, IndeterminacyKind, Result};
pub use map::{AffinePoint, Direction, OrbitRecord, OrbitStatus, Params};
