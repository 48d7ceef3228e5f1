//! The automorphism f(x,y,z) = (y, z, yz + by + cz + dx + e) of C^3, its
//! inverse, the involution tau and bounded-horizon orbits.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max-norm above which an evaluation is reported as an overflow instead of
/// producing huge or infinite coordinates.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// The golden mean, spectral radius of the pullback on H^{1,1}.
pub fn golden_mean() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    b: Complex64,
    c: Complex64,
    d: Complex64,
    e: Complex64,
    sigma: f64,
    log_abs_d: f64,
}

impl Params {
    pub fn new(b: Complex64, c: Complex64, d: Complex64, e: Complex64) -> Result<Self> {
        if d == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroD);
        }
        let all = [b, c, d, e];
        if all.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(Params {
            b,
            c,
            d,
            e,
            sigma: golden_mean(),
            log_abs_d: d.norm().ln(),
        })
    }

    /// Shorthand for real coefficients.
    pub fn real(b: f64, c: f64, d: f64, e: f64) -> Result<Self> {
        Self::new(b.into(), c.into(), d.into(), e.into())
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }
    pub fn c(&self) -> Complex64 {
        self.c
    }
    pub fn d(&self) -> Complex64 {
        self.d
    }
    pub fn e(&self) -> Complex64 {
        self.e
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn log_abs_d(&self) -> f64 {
        self.log_abs_d
    }
    pub fn abs_d(&self) -> f64 {
        self.d.norm()
    }

    /// Conservative absorbing radius for bounded orbits: 10 (1 + |b| + |c| + |d| + |e|).
    pub fn absorbing_radius(&self) -> f64 {
        10.0 * (1.0 + self.b.norm() + self.c.norm() + self.d.norm() + self.e.norm())
    }

    /// Fails unless |d| > 1.
    pub fn require_expanding(&self) -> Result<()> {
        if self.abs_d() > 1.0 {
            Ok(())
        } else {
            Err(Error::DNotExpanding(self.abs_d()))
        }
    }

    /// The translation q -> q + (k,k,k) by a fixed-point coordinate k conjugates
    /// f to a member of the family with e = 0.
    pub fn e_normalization(&self) -> ENormalization {
        let roots = fixed_point_coordinates(self);
        let k = roots.0[0];
        let params = Params::new(self.b + k, self.c + k, self.d, Complex64::new(0.0, 0.0))
            .expect("d unchanged");
        ENormalization { shift: k, params }
    }

    /// Parameters h and scale s with f^{-1} = tau o S o h o S^{-1} o tau, where
    /// S multiplies by s = -d.
    pub fn inverse_conjugate(&self) -> (Params, Complex64) {
        let d = self.d;
        let h = Params::new(-self.c / d, -self.b / d, d.inv(), self.e / (d * d))
            .expect("1/d is nonzero");
        (h, -d)
    }
}

/// Result of [`Params::e_normalization`]: f(q + k) - k is the map with `params`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ENormalization {
    pub shift: Complex64,
    pub params: Params,
}

pub fn make_params(b: Complex64, c: Complex64, d: Complex64, e: Complex64) -> Result<Params> {
    Params::new(b, c, d, e)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffinePoint {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl AffinePoint {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        AffinePoint { x, y, z }
    }

    pub fn real(x: f64, y: f64, z: f64) -> Self {
        AffinePoint::new(x.into(), y.into(), z.into())
    }

    pub fn origin() -> Self {
        Self::default()
    }

    pub fn coords(&self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_coords(c: [Complex64; 3]) -> Self {
        AffinePoint::new(c[0], c[1], c[2])
    }

    /// max(|x|, |y|, |z|)
    pub fn norm_max(&self) -> f64 {
        self.x.norm().max(self.y.norm()).max(self.z.norm())
    }

    pub fn norm2_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// The involution tau(x,y,z) = (z,y,x).
    pub fn tau(&self) -> Self {
        AffinePoint::new(self.z, self.y, self.x)
    }
}

impl Add for AffinePoint {
    type Output = AffinePoint;
    fn add(self, o: AffinePoint) -> AffinePoint {
        AffinePoint::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for AffinePoint {
    type Output = AffinePoint;
    fn sub(self, o: AffinePoint) -> AffinePoint {
        AffinePoint::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<Complex64> for AffinePoint {
    type Output = AffinePoint;
    fn mul(self, s: Complex64) -> AffinePoint {
        AffinePoint::new(self.x * s, self.y * s, self.z * s)
    }
}

fn guarded(q: AffinePoint) -> Result<AffinePoint> {
    if q.is_finite() && q.norm_max() <= OVERFLOW_GUARD {
        Ok(q)
    } else {
        Err(Error::Overflow { step: 0 })
    }
}

/// The third coordinate of f without the guard.
#[inline]
pub fn third_component(p: &Params, q: &AffinePoint) -> Complex64 {
    q.y * q.z + p.b * q.y + p.c * q.z + p.d * q.x + p.e
}

/// Unguarded f, for hot loops that check norms themselves.
#[inline]
pub fn apply_raw(p: &Params, q: &AffinePoint) -> AffinePoint {
    AffinePoint::new(q.y, q.z, third_component(p, q))
}

/// Unguarded f^{-1}.
#[inline]
pub fn apply_inverse_raw(p: &Params, q: &AffinePoint) -> AffinePoint {
    let first = (q.z - q.x * q.y - p.b * q.x - p.c * q.y - p.e) / p.d;
    AffinePoint::new(first, q.x, q.y)
}

pub fn apply(p: &Params, q: &AffinePoint) -> Result<AffinePoint> {
    guarded(apply_raw(p, q))
}

pub fn apply_inverse(p: &Params, q: &AffinePoint) -> Result<AffinePoint> {
    guarded(apply_inverse_raw(p, q))
}

/// Determinant of Df. Constant, equal to d.
pub fn jacobian_det(p: &Params) -> Complex64 {
    let m = jacobian(p, &AffinePoint::origin());
    det3(&m)
}

/// Df at q, rows indexed by output component.
pub fn jacobian(p: &Params, q: &AffinePoint) -> [[Complex64; 3]; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    [
        [zero, one, zero],
        [zero, zero, one],
        [p.d, q.z + p.b, q.y + p.c],
    ]
}

pub fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// (tau o f o tau)(q) with tau(x,y,z) = (z,y,x).
pub fn conjugate_by_tau(p: &Params, q: &AffinePoint) -> Result<AffinePoint> {
    apply(p, &q.tau()).map(|w| w.tau())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoints {
    pub points: Vec<AffinePoint>,
    /// Set when the diagonal equation has a double root (returned once).
    pub double_root: bool,
}

/// Roots of x^2 + (b+c+d-1)x + e = 0, the diagonal fixed-point equation.
fn fixed_point_coordinates(p: &Params) -> (Vec<Complex64>, bool) {
    let one = Complex64::new(1.0, 0.0);
    let lin = p.b + p.c + p.d - one;
    let disc = lin * lin - p.e * 4.0;
    if disc.norm() <= 1e-12 * (1.0 + lin.norm_sqr()) {
        return (vec![-lin / 2.0], true);
    }
    let mut s = disc.sqrt();
    if (lin.conj() * s).re < 0.0 {
        s = -s;
    }
    let big = -(lin + s) / 2.0;
    // big has the larger modulus, so the product formula is stable for the other root
    let small = if big.norm() > 0.0 { p.e / big } else { Complex64::new(0.0, 0.0) };
    (vec![big, small], false)
}

pub fn fixed_points(p: &Params) -> FixedPoints {
    let (roots, double_root) = fixed_point_coordinates(p);
    FixedPoints {
        points: roots.into_iter().map(|x| AffinePoint::new(x, x, x)).collect(),
        double_root,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitStatus {
    /// Stayed within the escape radius for this many steps.
    Bounded(usize),
    /// norms[index] exceeded the escape radius.
    Escaped(usize),
    /// The step at this index would have exceeded [`OVERFLOW_GUARD`].
    OverflowGuard(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub points: Vec<AffinePoint>,
    pub norms: Vec<f64>,
    pub status: OrbitStatus,
}

/// Iterates f (or f^{-1}) from q until the max-norm exceeds `escape_radius`,
/// the overflow guard trips, or `max_steps` steps have been taken.
pub fn orbit(
    p: &Params,
    q: &AffinePoint,
    max_steps: usize,
    escape_radius: f64,
    direction: Direction,
) -> Result<OrbitRecord> {
    if max_steps < 1 {
        return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
    }
    if !(escape_radius > 1.0) {
        return Err(Error::InvalidArgument("escape_radius must exceed 1".into()));
    }
    let step = match direction {
        Direction::Forward => apply_raw,
        Direction::Backward => apply_inverse_raw,
    };
    let mut points = vec![*q];
    let mut norms = vec![q.norm_max()];
    if norms[0] > escape_radius {
        return Ok(OrbitRecord { points, norms, status: OrbitStatus::Escaped(0) });
    }
    let mut cur = *q;
    for i in 1..=max_steps {
        let next = step(p, &cur);
        let n = next.norm_max();
        if !next.is_finite() || n > OVERFLOW_GUARD {
            return Ok(OrbitRecord { points, norms, status: OrbitStatus::OverflowGuard(i) });
        }
        points.push(next);
        norms.push(n);
        if n > escape_radius {
            return Ok(OrbitRecord { points, norms, status: OrbitStatus::Escaped(i) });
        }
        cur = next;
    }
    Ok(OrbitRecord { points, norms, status: OrbitStatus::Bounded(max_steps) })
}
