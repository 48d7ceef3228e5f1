//! The renormalized potential phi = lim (log+ ||f^{3n}|| - n log|d|) on
//! linearly escaping orbits, its regularizations and scalar averages.
//! Every entry point requires |d| > 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmag::log_norm_orbit;
use crate::map::{apply_raw, AffinePoint, Direction, Params};
use crate::partition::{classify_rate, correction_limit, correction_sum, envelope_log_sums, RateClass, RateOptions};

pub fn log_plus(v: f64) -> f64 {
    v.max(1.0).ln()
}

/// Default cutoff A = log(10 R) for the absorbing radius R.
pub fn default_cutoff(p: &Params) -> f64 {
    (10.0 * p.absorbing_radius()).ln()
}

fn log_norm_at(p: &Params, q: &AffinePoint, steps: usize) -> Result<f64> {
    Ok(*log_norm_orbit(p, q, steps, Direction::Forward)?.last().unwrap())
}

/// psi_n(q) = log+ ||f^{3n}(q)|| - n log|d|.
pub fn psi_n(p: &Params, q: &AffinePoint, n: usize) -> Result<f64> {
    p.require_expanding()?;
    Ok(log_norm_at(p, q, 3 * n)?.max(0.0) - n as f64 * p.log_abs_d())
}

/// psi_0, ..., psi_{n_max} along one orbit.
pub fn psi_table(p: &Params, q: &AffinePoint, n_max: usize) -> Result<Vec<f64>> {
    p.require_expanding()?;
    let ln = log_norm_orbit(p, q, 3 * n_max, Direction::Forward)?;
    Ok(psi_from_log_norms(p, &ln))
}

fn psi_from_log_norms(p: &Params, log_norms: &[f64]) -> Vec<f64> {
    log_norms.iter().step_by(3).enumerate().map(|(k, l)| l.max(0.0) - k as f64 * p.log_abs_d()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhiValue {
    Finite(f64),
    NegInfinity,
    Undefined,
}

impl PhiValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            PhiValue::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiRegime {
    OnWprime,
    OnK,
    SuperEscape,
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiResult {
    pub value: PhiValue,
    pub n_used: usize,
    pub regime: PhiRegime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiOptions {
    pub rate: RateOptions,
    /// Number of trailing psi_n values that must agree.
    pub cauchy_window: usize,
    pub cauchy_tol: f64,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { rate: RateOptions::default(), cauchy_window: 5, cauchy_tol: 1e-6 }
    }
}

/// First n at which the last `window` values of `psi` span at most `tol`.
fn cauchy_index(psi: &[f64], window: usize, tol: f64) -> Option<usize> {
    (window.max(1) - 1..psi.len()).find(|&n| {
        let w = &psi[n + 1 - window.max(1)..=n];
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        hi - lo <= tol
    })
}

/// Regime first, then the limit of psi_n on linear-rate orbits.
pub fn phi_infinity(p: &Params, q: &AffinePoint, opts: &PhiOptions) -> Result<PhiResult> {
    p.require_expanding()?;
    let rep = classify_rate(p, q, &opts.rate)?;
    let n_run = rep.steps / 3;
    let result = |value, n_used, regime| Ok(PhiResult { value, n_used, regime });
    match rep.class {
        RateClass::Bounded => result(PhiValue::NegInfinity, n_run, PhiRegime::OnK),
        RateClass::Super => result(PhiValue::Undefined, n_run, PhiRegime::SuperEscape),
        RateClass::Unresolved => result(PhiValue::Undefined, n_run, PhiRegime::Unresolved),
        RateClass::Linear => {
            let psi = psi_from_log_norms(p, &rep.log_norms);
            match cauchy_index(&psi, opts.cauchy_window, opts.cauchy_tol) {
                Some(n) => result(PhiValue::Finite(psi[n]), n, PhiRegime::OnWprime),
                None => result(PhiValue::Undefined, n_run, PhiRegime::Unresolved),
            }
        }
    }
}

/// phi'_n = log^A ||f^{3n}|| - sum_{k=1..n} log(|d| + eps / (|d| - eps)^{k-1}).
pub fn phi_prime_n(p: &Params, q: &AffinePoint, n: usize, eps: f64, cutoff: f64) -> Result<f64> {
    p.require_expanding()?;
    if !(eps > 0.0 && eps < p.abs_d() - 1.0) {
        return Err(Error::InvalidArgument("0 < eps < |d| - 1 required".into()));
    }
    let (_, upper) = envelope_log_sums(p.abs_d(), eps, n)?;
    Ok(log_norm_at(p, q, 3 * n)?.max(cutoff) - upper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KVerdict {
    InK,
    Escapes,
    Unresolved,
}

/// Bounded-forward-orbit predicate. `Escapes` once the norm exceeds
/// `radius`; `InK` when the orbit stays below `radius` and its last quarter
/// stays inside the absorbing radius.
pub fn k_membership(p: &Params, q: &AffinePoint, radius: f64, budget: usize) -> Result<KVerdict> {
    let rk = p.absorbing_radius();
    if !(radius > rk) {
        return Err(Error::InvalidArgument(format!("radius must exceed the absorbing radius {rk}")));
    }
    let mut cur = *q;
    let mut tail_max: f64 = 0.0;
    let tail_start = budget - budget / 4;
    for n in 0..=budget {
        if n > 0 {
            cur = apply_raw(p, &cur);
        }
        let norm = cur.norm_max();
        if !norm.is_finite() || norm > radius {
            return Ok(KVerdict::Escapes);
        }
        if n >= tail_start {
            tail_max = tail_max.max(norm);
        }
    }
    Ok(if tail_max < rk { KVerdict::InK } else { KVerdict::Unresolved })
}

/// (1/n) sum_{i<n} max(A, log ||f^i(q)||).
pub fn birkhoff_log_average(p: &Params, q: &AffinePoint, n: usize, cutoff: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n >= 1 required".into()));
    }
    let ln = log_norm_orbit(p, q, n - 1, Direction::Forward)?;
    Ok(ln.iter().map(|l| l.max(cutoff)).sum::<f64>() / n as f64)
}

/// 2 (avg(2n) - avg(n)) / n: the per-step slope of log ||f^i|| recovered
/// from two averages. Tends to log|d|/3 on linear-rate orbits.
pub fn birkhoff_growth_slope(p: &Params, q: &AffinePoint, n: usize, cutoff: f64) -> Result<f64> {
    let a1 = birkhoff_log_average(p, q, n, cutoff)?;
    let a2 = birkhoff_log_average(p, q, 2 * n, cutoff)?;
    Ok(2.0 * (a2 - a1) / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CEpsRow {
    pub eps: f64,
    pub sigma_10: f64,
    pub sigma_20: f64,
    pub sigma_40: f64,
    pub c_eps: f64,
}

/// sigma_{n,eps} for n = 10, 20, 40 and its limit, per eps.
pub fn c_eps_sweep(abs_d: f64, eps_list: &[f64]) -> Result<Vec<CEpsRow>> {
    eps_list
        .iter()
        .map(|&eps| {
            Ok(CEpsRow {
                eps,
                sigma_10: correction_sum(abs_d, eps, 10)?,
                sigma_20: correction_sum(abs_d, eps, 20)?,
                sigma_40: correction_sum(abs_d, eps, 40)?,
                c_eps: correction_limit(abs_d, eps)?,
            })
        })
        .collect()
}

/// max over n <= n_max of |psi_n(q) - log+ ||q|||.
pub fn psi_deviation(p: &Params, q: &AffinePoint, n_max: usize) -> Result<f64> {
    let base = log_plus(q.norm_max());
    Ok(psi_table(p, q, n_max)?.iter().map(|v| (v - base).abs()).fold(0.0, f64::max))
}
