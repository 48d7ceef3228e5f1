//! Log-magnitude surrogate for orbits that outgrow double precision.
//!
//! Once the quadratic term dominates the other terms of the map, an orbit is
//! tracked by the logarithms of its coordinate moduli only. The dropped
//! factor |1 + delta| is bounded by interval arithmetic and accumulated into
//! an error bound on each log-coordinate.

use crate::error::{Error, Result};
use crate::map::{apply_inverse_raw, apply_raw, AffinePoint, Direction, Params, OVERFLOW_GUARD};

/// Minimum dominance margin, log(10^4), for a surrogate step.
pub const DOMINANCE_MARGIN: f64 = 9.210340371976184;

/// log(sum exp(a_i)), exact for -inf entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogTriple {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    /// Absolute error bounds on lx, ly, lz.
    pub err: [f64; 3],
    /// Set once any step dropped phase information.
    pub phase_lost: bool,
}

impl LogTriple {
    pub fn from_point(q: &AffinePoint) -> Self {
        LogTriple {
            lx: q.x.norm().ln(),
            ly: q.y.norm().ln(),
            lz: q.z.norm().ln(),
            err: [0.0; 3],
            phase_lost: false,
        }
    }

    /// log of the max-norm.
    pub fn log_norm_max(&self) -> f64 {
        self.lx.max(self.ly).max(self.lz)
    }

    pub fn max_err(&self) -> f64 {
        self.err[0].max(self.err[1]).max(self.err[2])
    }

    /// Margin -log|delta|_max of the dominant quadratic term over the rest.
    pub fn margin(&self, p: &Params, direction: Direction) -> f64 {
        let lnabs = |v: num_complex::Complex64| v.norm().ln();
        match direction {
            Direction::Forward => {
                let rest = log_sum_exp(&[
                    lnabs(p.b()) + self.ly,
                    lnabs(p.c()) + self.lz,
                    lnabs(p.d()) + self.lx,
                    lnabs(p.e()),
                ]);
                self.ly + self.lz - rest
            }
            Direction::Backward => {
                let rest = log_sum_exp(&[
                    self.lz,
                    lnabs(p.b()) + self.lx,
                    lnabs(p.c()) + self.ly,
                    lnabs(p.e()),
                ]);
                self.lx + self.ly - rest
            }
        }
    }

    /// One surrogate step, or `None` if the margin is below [`DOMINANCE_MARGIN`].
    pub fn step(&self, p: &Params, direction: Direction) -> Option<LogTriple> {
        let margin = self.margin(p, direction);
        if !(margin >= DOMINANCE_MARGIN) {
            return None;
        }
        let delta = (-margin).exp();
        // |log|1 + delta'|| <= -log(1 - delta) for |delta'| <= delta
        let drop = -(-delta).ln_1p();
        let next = match direction {
            Direction::Forward => LogTriple {
                lx: self.ly,
                ly: self.lz,
                lz: self.ly + self.lz,
                err: [self.err[1], self.err[2], self.err[1] + self.err[2] + drop],
                phase_lost: true,
            },
            Direction::Backward => LogTriple {
                lx: self.lx + self.ly - p.log_abs_d(),
                ly: self.lx,
                lz: self.ly,
                err: [self.err[0] + self.err[1] + drop, self.err[0], self.err[1]],
                phase_lost: true,
            },
        };
        Some(next)
    }
}

/// The two terms of the potential u + v, from log-moduli:
/// u = log(1 + |y|^2) / (2 sigma), v = log(1 + |x|^2 + |y|^2 + |z|^2) / 2.
pub fn potential_terms_log(sigma: f64, lx: f64, ly: f64, lz: f64) -> (f64, f64) {
    let u = 0.5 * log_sum_exp(&[0.0, 2.0 * ly]) / sigma;
    let v = 0.5 * log_sum_exp(&[0.0, 2.0 * lx, 2.0 * ly, 2.0 * lz]);
    (u, v)
}

/// Iteration hands over to the log surrogate before the orbit exceeds this norm.
pub const SURROGATE_SWITCH: f64 = 1e100;

/// u + v at an exact point.
pub fn potential_total(p: &Params, q: &AffinePoint) -> f64 {
    let (u, v) = potential_terms_log(p.sigma(), q.x.norm().ln(), q.y.norm().ln(), q.z.norm().ln());
    u + v
}

/// An orbit point, exact while representable and as log-moduli afterwards.
#[derive(Clone, Copy, Debug)]
pub enum SafePoint {
    Direct(AffinePoint),
    Log(LogTriple),
}

impl SafePoint {
    pub fn log_norm(&self) -> f64 {
        match self {
            SafePoint::Direct(q) => q.norm_max().ln(),
            SafePoint::Log(l) => l.log_norm_max(),
        }
    }

    /// Potential and an absolute error bound for it.
    pub fn potential(&self, p: &Params) -> (f64, f64) {
        match self {
            SafePoint::Direct(q) => (potential_total(p, q), 0.0),
            SafePoint::Log(l) => {
                let (u, v) = potential_terms_log(p.sigma(), l.lx, l.ly, l.lz);
                (u + v, l.err[1] / p.sigma() + l.max_err())
            }
        }
    }

    pub fn step(&self, p: &Params, direction: Direction, n: usize) -> Result<SafePoint> {
        match self {
            SafePoint::Direct(q) => {
                let next = match direction {
                    Direction::Forward => apply_raw(p, q),
                    Direction::Backward => apply_inverse_raw(p, q),
                };
                if !next.is_finite() || next.norm_max() > SURROGATE_SWITCH {
                    if let Some(l) = LogTriple::from_point(q).step(p, direction) {
                        return Ok(SafePoint::Log(l));
                    }
                }
                if !next.is_finite() || next.norm_max() > OVERFLOW_GUARD {
                    return Err(Error::Overflow { step: n });
                }
                Ok(SafePoint::Direct(next))
            }
            SafePoint::Log(l) => l.step(p, direction).map(SafePoint::Log).ok_or(Error::DominanceLost { step: n }),
        }
    }
}

/// log of the max-norm along `steps` iterates (index 0 is q itself).
pub fn log_norm_orbit(p: &Params, q: &AffinePoint, steps: usize, direction: Direction) -> Result<Vec<f64>> {
    let mut state = SafePoint::Direct(*q);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.log_norm());
    for n in 1..=steps {
        state = state.step(p, direction, n)?;
        out.push(state.log_norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn lse_matches_naive() {
        let v = [0.3, -1.2, 2.5];
        let naive = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - naive).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]), 0.0);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn forward_step_tracks_true_orbit() {
        let p = Params::real(0.5, -0.3, 2.0, 0.1).unwrap();
        let q = AffinePoint::new(Complex64::new(3.0, 1.0), Complex64::new(1e5, 2e4), Complex64::new(-3e7, 1e6));
        let exact = crate::map::apply_raw(&p, &q);
        let lt = LogTriple::from_point(&q).step(&p, Direction::Forward).unwrap();
        assert!((lt.lz - exact.z.norm().ln()).abs() <= lt.err[2] + 1e-12);
        assert_eq!(lt.lx, q.y.norm().ln());
    }

    #[test]
    fn backward_step_tracks_true_orbit() {
        let p = Params::real(0.5, -0.3, 2.0, 0.1).unwrap();
        let q = AffinePoint::new(Complex64::new(2e7, 1.0), Complex64::new(1e6, 2e4), Complex64::new(-3.0, 1.0));
        let exact = crate::map::apply_inverse_raw(&p, &q);
        let lt = LogTriple::from_point(&q).step(&p, Direction::Backward).unwrap();
        assert!((lt.lx - exact.x.norm().ln()).abs() <= lt.err[0] + 1e-12);
    }

    #[test]
    fn no_step_without_dominance() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        // dx dominates yz
        let q = AffinePoint::real(1e10, 1.0, 1.0);
        assert!(LogTriple::from_point(&q).step(&p, Direction::Forward).is_none());
    }

    #[test]
    fn potential_terms_at_small_points() {
        let s = crate::map::golden_mean();
        let (u, v) = potential_terms_log(s, f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY);
        assert!((u - 2f64.ln() / (2.0 * s)).abs() < 1e-15);
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
    }
}
