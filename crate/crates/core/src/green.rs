//! Escape-rate Green functions G+ = lim sigma^{-n} P o f^n and
//! G- = lim sigma^{-n} P o f^{-n}, with P = u + v the potential below.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmag::{potential_terms_log, SafePoint};
use crate::map::{AffinePoint, Direction, Params};

/// u(q) = log(1 + |y|^2) / (2 sigma).
pub fn potential_u(p: &Params, q: &AffinePoint) -> f64 {
    potential_split(p, q).0
}

/// v(q) = log(1 + |x|^2 + |y|^2 + |z|^2) / 2.
pub fn potential_v(p: &Params, q: &AffinePoint) -> f64 {
    potential_split(p, q).1
}

fn potential_split(p: &Params, q: &AffinePoint) -> (f64, f64) {
    potential_terms_log(p.sigma(), q.x.norm().ln(), q.y.norm().ln(), q.z.norm().ln())
}

/// u(q) + v(q), evaluated without overflow for any finite q.
pub fn potential_total(p: &Params, q: &AffinePoint) -> f64 {
    crate::logmag::potential_total(p, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenOptions {
    pub max_iters: usize,
    /// Convergence threshold on successive renormalized terms, relative to 1 + G.
    pub tol: f64,
    pub positivity_threshold: f64,
    /// Bounded-orbit radius; `None` uses the parameter-dependent default.
    pub bounded_radius: Option<f64>,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions { max_iters: 200, tol: 1e-13, positivity_threshold: 1e-8, bounded_radius: None }
    }
}

impl GreenOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("max_iters >= 1 and tol > 0 required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GreenMode {
    DirectIteration,
    LogSurrogate,
    ConvergedZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GreenStatus {
    Converged,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenResult {
    pub value: f64,
    pub iterations: usize,
    pub mode: GreenMode,
    pub status: GreenStatus,
    pub error_bound: f64,
}

/// Radius beyond which an orbit counts as escaping in the given direction.
pub fn bounded_radius(p: &Params, direction: Direction, opts: &GreenOptions) -> f64 {
    if let Some(r) = opts.bounded_radius {
        return r;
    }
    match direction {
        Direction::Forward => p.absorbing_radius(),
        Direction::Backward => {
            let (h, s) = p.inverse_conjugate();
            p.absorbing_radius().max(s.norm() * h.absorbing_radius())
        }
    }
}

/// G+ (forward) or G- (backward) at q.
pub fn green_value(p: &Params, q: &AffinePoint, direction: Direction, opts: &GreenOptions) -> Result<GreenResult> {
    opts.validate()?;
    if !q.is_finite() {
        return Err(Error::InvalidArgument("point must be finite".into()));
    }
    let log_rk = bounded_radius(p, direction, opts).ln();
    let log_sigma = p.sigma().ln();
    // geometric tail factor r/(1-r) with r = 1/sigma
    let tail = 1.0 / (p.sigma() - 1.0);

    let mut state = SafePoint::Direct(*q);
    let mut prev = potential_total(p, q);
    let mut last_delta = f64::INFINITY;
    let mut escaped = q.norm_max().ln() > log_rk;
    let mut used_log = false;
    let mode_of = |used_log: bool| if used_log { GreenMode::LogSurrogate } else { GreenMode::DirectIteration };

    for n in 1..=opts.max_iters {
        state = match state.step(p, direction, n) {
            Ok(s) => s,
            Err(_) => {
                return Ok(GreenResult {
                    value: prev,
                    iterations: n - 1,
                    mode: mode_of(used_log),
                    status: GreenStatus::Unresolved,
                    error_bound: last_delta * tail,
                })
            }
        };
        used_log |= matches!(state, SafePoint::Log(_));
        let scale = (-(n as f64) * log_sigma).exp();
        let (pot, perr) = state.potential(p);
        let value = scale * pot;
        let delta = (value - prev).abs();
        if state.log_norm() > log_rk {
            escaped = true;
            if delta <= opts.tol * (1.0 + value) {
                return Ok(GreenResult {
                    value,
                    iterations: n,
                    mode: mode_of(used_log),
                    status: GreenStatus::Converged,
                    error_bound: delta * tail + scale * perr,
                });
            }
        }
        prev = value;
        last_delta = delta;
    }

    if !escaped {
        return Ok(GreenResult {
            value: 0.0,
            iterations: opts.max_iters,
            mode: GreenMode::ConvergedZero,
            status: GreenStatus::Converged,
            error_bound: prev,
        });
    }
    // escaped late: the remaining mass is below tolerance or unresolved
    let bound = last_delta * tail;
    let status = if prev + bound <= opts.tol { GreenStatus::Converged } else { GreenStatus::Unresolved };
    Ok(GreenResult { value: prev, iterations: opts.max_iters, mode: mode_of(used_log), status, error_bound: bound })
}

/// sigma^{-n} P(f^{+-n}(q)) at a fixed depth n.
pub fn green_at_depth(p: &Params, q: &AffinePoint, direction: Direction, n: usize) -> Result<f64> {
    let mut state = SafePoint::Direct(*q);
    for k in 1..=n {
        state = state.step(p, direction, k)?;
    }
    Ok((-(n as f64) * p.sigma().ln()).exp() * state.potential(p).0)
}

/// G- evaluated as G+ of the conjugate map h at tau(q)/s, using
/// f^{-1} = tau o S o h o S^{-1} o tau.
pub fn green_minus_by_symmetry(p: &Params, q: &AffinePoint, opts: &GreenOptions) -> Result<GreenResult> {
    let (h, s) = p.inverse_conjugate();
    green_value(&h, &(q.tau() * s.inv()), Direction::Forward, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasinMembership {
    InBasin,
    NotInBasin,
    Unresolved,
}

/// Thresholds a computed value against `threshold`.
pub fn classify_green(r: &GreenResult, threshold: f64) -> BasinMembership {
    let certain = r.status == GreenStatus::Converged && r.error_bound < threshold / 2.0;
    match (r.value > threshold, certain || r.mode == GreenMode::ConvergedZero) {
        (_, false) => BasinMembership::Unresolved,
        (true, true) => BasinMembership::InBasin,
        (false, true) => BasinMembership::NotInBasin,
    }
}

pub fn basin_membership(p: &Params, q: &AffinePoint, opts: &GreenOptions) -> Result<BasinMembership> {
    let r = green_value(p, q, Direction::Forward, opts)?;
    Ok(classify_green(&r, opts.positivity_threshold))
}

/// Five-point Laplacian of t -> g(t) at t = 0 on the complex line:
/// (g(h) + g(-h) + g(ih) + g(-ih) - 4 g(0)) / h^2.
pub fn complex_line_laplacian<F: FnMut(Complex64) -> f64>(mut g: F, h: f64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    let hc = Complex64::new(h, 0.0);
    (g(hc) + g(-hc) + g(i * hc) + g(-i * hc) - 4.0 * g(Complex64::new(0.0, 0.0))) / (h * h)
}

/// Default finite-difference step max(1e-4, 1e-6 |q|).
pub fn default_step(q: &AffinePoint) -> f64 {
    (1e-6 * q.norm_max()).max(1e-4)
}

/// Complex-line Laplacian of G+ through q along `dir` (unit Euclidean norm).
/// All stencil points are evaluated at the same depth, the one at which G+(q)
/// converged.
pub fn pluriharmonic_defect(p: &Params, q: &AffinePoint, dir: &[Complex64; 3], h: f64, opts: &GreenOptions) -> Result<f64> {
    let norm = dir.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction must have unit norm (got {norm})")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let center = green_value(p, q, Direction::Forward, opts)?;
    if center.status != GreenStatus::Converged || center.value <= 10.0 * h {
        return Err(Error::Premise(format!("G+ = {} is not above 10 h in the basin", center.value)));
    }
    let depth = center.iterations;
    let d = AffinePoint::from_coords(*dir);
    let mut failure = None;
    let lap = complex_line_laplacian(
        |t| match green_at_depth(p, &(*q + d * t), Direction::Forward, depth) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        h,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(lap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{apply, golden_mean};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn potential_examples() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        assert_eq!(potential_total(&p, &AffinePoint::origin()), 0.0);
        let v = potential_total(&p, &AffinePoint::real(0.0, 1.0, 0.0));
        let expect = 2f64.ln() / (2.0 * golden_mean()) + 0.5 * 2f64.ln();
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.5608).abs() < 1e-4);
        let big = AffinePoint::real(1e200, 0.0, 0.0);
        assert_eq!(potential_u(&p, &big), 0.0);
        assert!((potential_v(&p, &big) - 1e200f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_is_zero() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let r = green_value(&p, &AffinePoint::origin(), Direction::Forward, &GreenOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.mode, GreenMode::ConvergedZero);
        assert_eq!(basin_membership(&p, &AffinePoint::origin(), &GreenOptions::default()).unwrap(), BasinMembership::NotInBasin);
    }

    #[test]
    fn escaping_point_positive_and_functional_equation() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let q = AffinePoint::real(10.0, 10.0, 10.0);
        let opts = GreenOptions::default();
        let g = green_value(&p, &q, Direction::Forward, &opts).unwrap();
        assert!(g.value > 0.0);
        assert_eq!(g.status, GreenStatus::Converged);
        let g1 = green_value(&p, &apply(&p, &q).unwrap(), Direction::Forward, &opts).unwrap();
        assert!((g1.value - p.sigma() * g.value).abs() < 1e-9 * (1.0 + g.value));
        assert_eq!(basin_membership(&p, &q, &opts).unwrap(), BasinMembership::InBasin);
    }

    #[test]
    fn unresolved_when_error_overlaps() {
        let r = GreenResult {
            value: 2e-8,
            iterations: 10,
            mode: GreenMode::DirectIteration,
            status: GreenStatus::Converged,
            error_bound: 1e-8,
        };
        assert_eq!(classify_green(&r, 1e-8), BasinMembership::Unresolved);
    }

    #[test]
    fn backward_matches_symmetry() {
        let p = Params::new(c(0.3, 0.1), c(-0.2, 0.0), c(2.0, 0.5), c(0.1, 0.0)).unwrap();
        let opts = GreenOptions::default();
        for q in [AffinePoint::real(8.0, -3.0, 1.0), AffinePoint::new(c(1.0, 2.0), c(5.0, 0.0), c(-0.5, 0.3))] {
            let a = green_value(&p, &q, Direction::Backward, &opts).unwrap();
            let b = green_minus_by_symmetry(&p, &q, &opts).unwrap();
            assert!((a.value - b.value).abs() < 1e-9 * (1.0 + a.value), "{a:?} {b:?}");
        }
    }

    #[test]
    fn calibrations() {
        let quad = complex_line_laplacian(|t| t.norm_sqr(), 1e-3);
        assert!((quad - 4.0).abs() < 0.04);
        let a = c(5.0, 5.0);
        let harm = complex_line_laplacian(|t| (t - a).norm().ln(), 1e-3);
        assert!(harm.abs() < 1e-8, "{harm}");
    }

    #[test]
    fn pluriharmonic_in_basin() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let q = AffinePoint::new(c(3.0, 1.0), c(4.0, -2.0), c(2.0, 2.0));
        let s = 3f64.sqrt().recip();
        let dir = [c(s, 0.0), c(0.0, s), c(-s, 0.0)];
        let opts = GreenOptions::default();
        let g = green_value(&p, &q, Direction::Forward, &opts).unwrap().value;
        let d = pluriharmonic_defect(&p, &q, &dir, 1e-3, &opts).unwrap();
        assert!(d.abs() < 1e-4 * g.max(1.0), "{d}");
    }

    #[test]
    fn defect_rejects_bad_direction() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let q = AffinePoint::real(10.0, 10.0, 10.0);
        let dir = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert!(pluriharmonic_defect(&p, &q, &dir, 1e-3, &GreenOptions::default()).is_err());
    }
}
