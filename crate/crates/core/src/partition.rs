//! Neighbourhoods of the points at infinity, itineraries of escaping orbits,
//! the f^3 growth envelope and a search for linearly escaping points.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmag::{log_norm_orbit, SafePoint};
use crate::map::{apply_raw, AffinePoint, Direction, Params};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InfinitySymbol {
    Aplus,
    Aminus,
    Cpoint,
    Bpair,
    None,
}

impl InfinitySymbol {
    /// Exchange of A+ and A- under the involution tau.
    pub fn mirror(self) -> Self {
        match self {
            InfinitySymbol::Aplus => InfinitySymbol::Aminus,
            InfinitySymbol::Aminus => InfinitySymbol::Aplus,
            s => s,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            InfinitySymbol::Aplus => "A+",
            InfinitySymbol::Aminus => "A-",
            InfinitySymbol::Cpoint => "C",
            InfinitySymbol::Bpair => "B",
            InfinitySymbol::None => ".",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeParams {
    pub epsilon: f64,
    pub norm_floor: f64,
}

impl Default for WedgeParams {
    fn default() -> Self {
        WedgeParams { epsilon: 0.05, norm_floor: 1e3 }
    }
}

impl WedgeParams {
    pub fn validate(&self, p: &Params) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < p.abs_d()) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, |d|), got {}", self.epsilon)));
        }
        if !(self.norm_floor > 1.0) {
            return Err(Error::InvalidArgument("norm_floor must exceed 1".into()));
        }
        Ok(())
    }
}

/// Ratio band |x|/|z| in [1/B, B] of the B-wedge.
pub const B_WEDGE_BAND: f64 = 10.0;

/// |yz + by + cz| < eps |d x|
pub fn in_v_aplus(p: &Params, q: &AffinePoint, eps: f64) -> bool {
    (q.y * q.z + p.b() * q.y + p.c() * q.z).norm() < eps * (p.d() * q.x).norm()
}

/// |xy + bx + cy| < eps |d z|
pub fn in_v_aminus(p: &Params, q: &AffinePoint, eps: f64) -> bool {
    (q.x * q.y + p.b() * q.x + p.c() * q.y).norm() < eps * (p.d() * q.z).norm()
}

/// |xz + by + cz| < eps |d y|, taken verbatim.
pub fn in_v_c(p: &Params, q: &AffinePoint, eps: f64) -> bool {
    (q.x * q.z + p.b() * q.y + p.c() * q.z).norm() < eps * (p.d() * q.y).norm()
}

/// |y| <= eps min(|x|,|z|), |x|,|z| above the floor, |x|/|z| in the band.
pub fn in_v_b(q: &AffinePoint, eps: f64, norm_floor: f64) -> bool {
    let (ax, ay, az) = (q.x.norm(), q.y.norm(), q.z.norm());
    ax > norm_floor
        && az > norm_floor
        && ay <= eps * ax.min(az)
        && ax / az >= 1.0 / B_WEDGE_BAND
        && ax / az <= B_WEDGE_BAND
}

fn primary_set(p: &Params, q: &AffinePoint, eps: f64) -> Vec<InfinitySymbol> {
    let mut s = Vec::with_capacity(3);
    if in_v_aplus(p, q, eps) {
        s.push(InfinitySymbol::Aplus);
    }
    if in_v_aminus(p, q, eps) {
        s.push(InfinitySymbol::Aminus);
    }
    if in_v_c(p, q, eps) {
        s.push(InfinitySymbol::Cpoint);
    }
    s
}

/// Number of times epsilon is halved to break a tie.
const TIE_HALVINGS: usize = 4;

/// Symbol of q. Ties between wedges are re-tested at eps/2, eps/4, ...; a
/// unique survivor wins, and if every wedge drops out the highest-priority
/// member (A+ > A- > C) of the last tied set wins. A tie that persists
/// through all halvings yields `None`.
pub fn wedge_membership(p: &Params, q: &AffinePoint, w: &WedgeParams) -> Result<InfinitySymbol> {
    let norm = q.norm_max();
    if norm < w.norm_floor {
        return Err(Error::BelowFloor { norm, floor: w.norm_floor });
    }
    Ok(wedge_symbol_unchecked(p, q, w))
}

fn wedge_symbol_unchecked(p: &Params, q: &AffinePoint, w: &WedgeParams) -> InfinitySymbol {
    let mut eps = w.epsilon;
    let mut set = primary_set(p, q, eps);
    match set.len() {
        0 => {
            return if in_v_b(q, eps, w.norm_floor) { InfinitySymbol::Bpair } else { InfinitySymbol::None };
        }
        1 => return set[0],
        _ => {}
    }
    for _ in 0..TIE_HALVINGS {
        eps /= 2.0;
        let next = primary_set(p, q, eps);
        match next.len() {
            0 => return set[0],
            1 => return next[0],
            _ => set = next,
        }
    }
    InfinitySymbol::None
}

/// delta with third(f(q)) = d x (1 + delta).
pub fn wedge_image_delta(p: &Params, q: &AffinePoint) -> Complex64 {
    let fz = apply_raw(p, q).z;
    fz / (p.d() * q.x) - 1.0
}

/// Rejection samples of V_{A+,eps} with max-norm at least `norm_floor`.
pub fn sample_v_aplus(p: &Params, eps: f64, norm_floor: f64, count: usize, seed: u64) -> Vec<AffinePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = norm_floor * 10f64.powf(rng.gen_range(0.0..3.0));
        let x = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        let s = (eps * p.abs_d() * r).sqrt();
        let y = Complex64::from_polar(s * rng.gen_range(0.0..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let z = Complex64::from_polar(s * rng.gen_range(0.0..1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        let q = AffinePoint::new(x, y, z);
        if q.norm_max() >= norm_floor && in_v_aplus(p, &q, eps) {
            out.push(q);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Period {
    P3,
    P5,
    Aperiodic,
    TooShort,
}

const CYCLE3: [InfinitySymbol; 3] = [InfinitySymbol::Aplus, InfinitySymbol::Aminus, InfinitySymbol::Cpoint];
const CYCLE5: [InfinitySymbol; 5] = [
    InfinitySymbol::Aplus,
    InfinitySymbol::Aminus,
    InfinitySymbol::Cpoint,
    InfinitySymbol::Bpair,
    InfinitySymbol::Cpoint,
];

fn tail_matches_cycle(symbols: &[InfinitySymbol], cycle: &[InfinitySymbol], cycles: usize) -> bool {
    let len = cycle.len() * cycles;
    if symbols.len() < len {
        return false;
    }
    let tail = &symbols[symbols.len() - len..];
    (0..cycle.len()).any(|shift| tail.iter().enumerate().all(|(i, s)| *s == cycle[(i + shift) % cycle.len()]))
}

/// Eventual cycle (A+, A-, C)* over the last two periods.
pub fn matches_p3(symbols: &[InfinitySymbol]) -> bool {
    tail_matches_cycle(symbols, &CYCLE3, 2)
}

/// Eventual cycle (A+, A-, C, B, C)* over the last two periods.
pub fn matches_p5(symbols: &[InfinitySymbol]) -> bool {
    tail_matches_cycle(symbols, &CYCLE5, 2)
}

pub fn detect_period(symbols: &[InfinitySymbol]) -> Period {
    if symbols.len() < 6 {
        Period::TooShort
    } else if matches_p3(symbols) {
        Period::P3
    } else if matches_p5(symbols) {
        Period::P5
    } else {
        Period::Aperiodic
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Budget of map applications (a multiple of 3 is used).
    pub max_steps: usize,
    /// Relative tolerance of f^3 ratios around |d|.
    pub rate_tol: f64,
    /// Number of trailing f^3 ratios that must lie within tolerance.
    pub persist: usize,
    /// Escape radius; `None` uses the parameter-dependent absorbing radius.
    pub bounded_radius: Option<f64>,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { max_steps: 600, rate_tol: 0.01, persist: 10, bounded_radius: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateClass {
    Bounded,
    Linear,
    Super,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub class: RateClass,
    /// Median of the last max(5, n/4) f^3 norm ratios (NaN without ratios).
    pub rate_estimate: f64,
    /// log max-norm of f^i(q), i = 0..=steps.
    pub log_norms: Vec<f64>,
    pub steps: usize,
}

impl RateReport {
    /// f^3 norm ratios computed from `log_norms`.
    pub fn ratios(&self) -> Vec<f64> {
        f3_ratios(&self.log_norms)
    }
}

fn f3_ratios(log_norms: &[f64]) -> Vec<f64> {
    let k = (log_norms.len().saturating_sub(1)) / 3;
    (0..k).map(|i| (log_norms[3 * (i + 1)] - log_norms[3 * i]).exp()).collect()
}

/// Median of the last max(5, n/4) ratios.
pub fn rate_estimate(ratios: &[f64]) -> f64 {
    if ratios.is_empty() {
        return f64::NAN;
    }
    let m = (ratios.len() / 4).max(5).min(ratios.len());
    let mut tail: Vec<f64> = ratios[ratios.len() - m..].to_vec();
    tail.sort_by(|a, b| a.total_cmp(b));
    let h = tail.len() / 2;
    if tail.len() % 2 == 1 {
        tail[h]
    } else {
        0.5 * (tail[h - 1] + tail[h])
    }
}

/// f^3 ratio above which growth is called super-linear.
const SUPER_RATIO_FACTOR: f64 = 1e3;

/// Bounded, linear (f^3 ratio -> |d|), super-exponential or unresolved.
///
/// Iteration stops early once `persist` consecutive f^3 ratios beyond the
/// escape radius lie within `rate_tol` of |d|.
pub fn classify_rate(p: &Params, q: &AffinePoint, opts: &RateOptions) -> Result<RateReport> {
    if opts.max_steps < 3 || opts.persist == 0 || !(opts.rate_tol > 0.0) {
        return Err(Error::InvalidArgument("max_steps >= 3, persist >= 1, rate_tol > 0 required".into()));
    }
    let log_rk = opts.bounded_radius.unwrap_or_else(|| p.absorbing_radius()).ln();
    let target = p.abs_d();
    let steps = opts.max_steps - opts.max_steps % 3;
    let mut state = SafePoint::Direct(*q);
    let mut log_norms = vec![state.log_norm()];
    let mut ever_out = log_norms[0] > log_rk;
    let mut linear_run = 0usize;
    let report = |class, log_norms: Vec<f64>| {
        let steps = log_norms.len() - 1;
        RateReport { class, rate_estimate: rate_estimate(&f3_ratios(&log_norms)), log_norms, steps }
    };
    for n in 1..=steps {
        state = match state.step(p, Direction::Forward, n) {
            Ok(s) => s,
            Err(_) => return Ok(report(RateClass::Super, log_norms)),
        };
        let ln = state.log_norm();
        log_norms.push(ln);
        ever_out |= ln > log_rk;
        if n % 3 == 0 {
            let ratio = (ln - log_norms[n - 3]).exp();
            let start_out = log_norms[n - 3] > log_rk;
            if start_out && ratio > SUPER_RATIO_FACTOR * target.max(1.0) {
                return Ok(report(RateClass::Super, log_norms));
            }
            if start_out && (ratio - target).abs() <= opts.rate_tol * target {
                linear_run += 1;
                if linear_run >= opts.persist {
                    return Ok(report(RateClass::Linear, log_norms));
                }
            } else {
                linear_run = 0;
            }
        }
    }
    let class = if ever_out { RateClass::Unresolved } else { RateClass::Bounded };
    Ok(report(class, log_norms))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Itinerary {
    pub symbols: Vec<InfinitySymbol>,
    pub period: Period,
    pub rate_estimate: f64,
    pub rate_class: RateClass,
}

/// Symbols of f^n(q) from the first iterate reaching the norm floor on.
/// Super-exponential escape is reported as `Aperiodic`.
pub fn itinerary(p: &Params, q: &AffinePoint, steps: usize, w: &WedgeParams) -> Result<Itinerary> {
    if steps < 6 {
        return Err(Error::InvalidArgument("itinerary needs at least 6 steps".into()));
    }
    w.validate(p)?;
    let mut symbols = Vec::new();
    let mut reached = false;
    let mut cur = *q;
    let mut log_norms = vec![cur.norm_max().ln()];
    let mut blew_up = false;
    for n in 0..=steps {
        if n > 0 {
            let next = apply_raw(p, &cur);
            if !next.is_finite() || next.norm_max() > crate::map::OVERFLOW_GUARD {
                blew_up = true;
                break;
            }
            cur = next;
            log_norms.push(cur.norm_max().ln());
        }
        if cur.norm_max() >= w.norm_floor {
            reached = true;
        }
        if reached {
            symbols.push(wedge_symbol_unchecked(p, &cur, w));
        }
    }
    let ratios = f3_ratios(&log_norms);
    let rate = rate_estimate(&ratios);
    let super_growth = blew_up || ratios.last().is_some_and(|r| *r > SUPER_RATIO_FACTOR * p.abs_d().max(1.0));
    let (period, rate_class) = if super_growth {
        (Period::Aperiodic, RateClass::Super)
    } else if !reached {
        (Period::TooShort, RateClass::Bounded)
    } else {
        let tol = 0.01 * p.abs_d();
        let lin = ratios.len() >= 5 && ratios[ratios.len() - 5..].iter().all(|r| (r - p.abs_d()).abs() <= tol);
        (detect_period(&symbols), if lin { RateClass::Linear } else { RateClass::Unresolved })
    };
    Ok(Itinerary { symbols, period, rate_estimate: rate, rate_class })
}

/// Lower and upper envelope products
/// prod_{i=1..n} (|d| -+ eps / (|d| - eps)^{i-1}).
pub fn envelope_products(abs_d: f64, eps: f64, n: usize) -> Result<(f64, f64)> {
    let (lo, hi) = envelope_log_sums(abs_d, eps, n)?;
    Ok((lo.exp(), hi.exp()))
}

/// Logarithms of [`envelope_products`].
pub fn envelope_log_sums(abs_d: f64, eps: f64, n: usize) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < abs_d) {
        return Err(Error::InvalidArgument("0 < eps < |d| required".into()));
    }
    let base = abs_d - eps;
    let (mut lo, mut hi) = (0.0, 0.0);
    for i in 1..=n {
        let t = eps / base.powi(i as i32 - 1);
        if abs_d - t <= 0.0 {
            return Err(Error::InvalidArgument(format!("lower envelope factor {i} is not positive")));
        }
        lo += (abs_d - t).ln();
        hi += (abs_d + t).ln();
    }
    Ok((lo, hi))
}

/// Correction sum sigma_{n,eps}: upper minus lower log-envelope, summed as
/// log(1 + t_i) - log(1 - t_i) with t_i = eps / (|d| (|d| - eps)^{i-1}).
pub fn correction_sum(abs_d: f64, eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < abs_d) {
        return Err(Error::InvalidArgument("0 < eps < |d| required".into()));
    }
    let base = abs_d - eps;
    let mut s = 0.0;
    for i in 1..=n {
        let t = eps / (abs_d * base.powi(i as i32 - 1));
        if t >= 1.0 {
            return Err(Error::InvalidArgument(format!("correction term {i} is not summable")));
        }
        s += t.ln_1p() - (-t).ln_1p();
    }
    Ok(s)
}

/// Bound on c_eps - sigma_{n,eps} from log((1+t)/(1-t)) <= 2t/(1-t) and the
/// geometric decay of t_i with ratio 1/(|d| - eps).
pub fn correction_tail_bound(abs_d: f64, eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && abs_d - eps > 1.0) {
        return Err(Error::InvalidArgument("0 < eps < |d| - 1 required".into()));
    }
    let base = abs_d - eps;
    let t = eps / (abs_d * base.powi(n as i32));
    Ok(2.0 * t / (1.0 - t) / (1.0 - 1.0 / base))
}

/// c_eps = lim sigma_{n,eps}; needs |d| - eps > 1.
pub fn correction_limit(abs_d: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && abs_d - eps > 1.0) {
        return Err(Error::InvalidArgument("0 < eps < |d| - 1 required".into()));
    }
    let base = abs_d - eps;
    let mut s = 0.0;
    let mut i = 1;
    loop {
        let t = eps / (abs_d * base.powi(i - 1));
        let term = t.ln_1p() - (-t).ln_1p();
        s += term;
        if term < 1e-18 * s.max(1e-300) || i > 100_000 {
            return Ok(s);
        }
        i += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// log ||f^{3i}||_+ minus log of the lower bound, i = 1..n.
    pub lower_margins: Vec<f64>,
    /// log of the upper bound minus log ||f^{3i}||_+, i = 1..n.
    pub upper_margins: Vec<f64>,
    /// First i (1-based) where either inequality fails.
    pub first_violation: Option<usize>,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks the two product inequalities for i = 1..n along the orbit of q.
/// Every visited point must be beyond the floor and in the A+, A- or C
/// wedge at level eps, otherwise the inequalities carry no claim.
pub fn growth_envelope_check(p: &Params, q: &AffinePoint, w: &WedgeParams, n: usize) -> Result<EnvelopeReport> {
    w.validate(p)?;
    let mut pts = vec![*q];
    for _ in 0..3 * n {
        let next = apply_raw(p, pts.last().unwrap());
        if !next.is_finite() || next.norm_max() > crate::map::OVERFLOW_GUARD {
            return Err(Error::Premise("orbit overflows before 3n steps".into()));
        }
        pts.push(next);
    }
    for (i, pt) in pts.iter().enumerate() {
        if pt.norm_max() < w.norm_floor {
            return Err(Error::Premise(format!("iterate {i} is below the norm floor")));
        }
        match wedge_symbol_unchecked(p, pt, w) {
            InfinitySymbol::Aplus | InfinitySymbol::Aminus | InfinitySymbol::Cpoint => {}
            s => return Err(Error::Premise(format!("iterate {i} lies in wedge {s:?}"))),
        }
    }
    let log_plus = |v: f64| v.max(1.0).ln();
    let l0 = log_plus(q.norm_max());
    let mut rep = EnvelopeReport { lower_margins: Vec::new(), upper_margins: Vec::new(), first_violation: None };
    for i in 1..=n {
        let (lo, hi) = envelope_log_sums(p.abs_d(), w.epsilon, i)?;
        let li = log_plus(pts[3 * i].norm_max());
        let (ml, mu) = (li - (l0 + lo), (l0 + hi) - li);
        if rep.first_violation.is_none() && (ml < 0.0 || mu < 0.0) {
            rep.first_violation = Some(i);
        }
        rep.lower_margins.push(ml);
        rep.upper_margins.push(mu);
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindOptions {
    /// Initial sample count along a segment.
    pub samples: usize,
    /// Bisection depth between differently classified neighbours.
    pub bisect_depth: usize,
    pub rate: RateOptions,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions { samples: 64, bisect_depth: 48, rate: RateOptions::default() }
    }
}

/// One classified point of a search, kept as evidence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSample {
    pub point: AffinePoint,
    pub class: RateClass,
    pub rate_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    /// Re-verified linear-rate points.
    pub candidates: Vec<AffinePoint>,
    pub log: Vec<SearchSample>,
}

fn lerp(a: &AffinePoint, b: &AffinePoint, t: f64) -> AffinePoint {
    *a + (*b - *a) * Complex64::new(t, 0.0)
}

fn classify_sample(p: &Params, q: AffinePoint, opts: &RateOptions) -> Result<SearchSample> {
    let r = classify_rate(p, &q, opts)?;
    Ok(SearchSample { point: q, class: r.class, rate_estimate: r.rate_estimate })
}

/// Re-runs the classifier; true when the rate is within `rate_tol` of |d|.
pub fn verify_candidate(p: &Params, q: &AffinePoint, opts: &RateOptions) -> bool {
    match classify_rate(p, q, opts) {
        Ok(r) => r.class == RateClass::Linear && (r.rate_estimate - p.abs_d()).abs() <= opts.rate_tol * p.abs_d(),
        Err(_) => false,
    }
}

/// Samples the segment, then bisects every pair of neighbours with
/// different classes, collecting midpoints that escape at rate |d|.
pub fn find_linear_escape(p: &Params, segment: (AffinePoint, AffinePoint), opts: &FindOptions) -> Result<SearchOutcome> {
    p.require_expanding()?;
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("at least two segment samples required".into()));
    }
    let (a, b) = segment;
    let ts: Vec<f64> = (0..opts.samples).map(|i| i as f64 / (opts.samples - 1) as f64).collect();
    let samples: Vec<SearchSample> = ts
        .par_iter()
        .map(|&t| classify_sample(p, lerp(&a, &b, t), &opts.rate))
        .collect::<Result<_>>()?;

    let brackets: Vec<usize> = (0..samples.len() - 1).filter(|&i| samples[i].class != samples[i + 1].class).collect();
    let refined: Vec<Vec<SearchSample>> = brackets
        .par_iter()
        .map(|&i| {
            let (mut lo, mut hi) = (ts[i], ts[i + 1]);
            let (lo_class, mut trail) = (samples[i].class, Vec::new());
            for _ in 0..opts.bisect_depth {
                let mid = 0.5 * (lo + hi);
                let s = classify_sample(p, lerp(&a, &b, mid), &opts.rate)?;
                let class = s.class;
                trail.push(s);
                if class == RateClass::Linear {
                    break;
                }
                if class == lo_class {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(trail)
        })
        .collect::<Result<_>>()?;

    let mut log = samples;
    log.extend(refined.into_iter().flatten());
    let candidates = collect_candidates(p, &log, &opts.rate);
    Ok(SearchOutcome { candidates, log })
}

fn collect_candidates(p: &Params, log: &[SearchSample], opts: &RateOptions) -> Vec<AffinePoint> {
    let mut out: Vec<AffinePoint> = Vec::new();
    for s in log.iter().filter(|s| s.class == RateClass::Linear) {
        if verify_candidate(p, &s.point, opts) && !out.contains(&s.point) {
            out.push(s.point);
        }
    }
    out
}

/// Seeds for the wedge {|x| < eps, |y| < eps2} near infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeSearch {
    pub eps: f64,
    pub eps2: f64,
    /// Grid points per real axis of the x and y discs (odd keeps the centre).
    pub grid: usize,
    /// Moduli of the z seeds.
    pub z_moduli: Vec<f64>,
    /// Arguments of the z seeds per modulus.
    pub z_phases: usize,
}

impl Default for WedgeSearch {
    fn default() -> Self {
        WedgeSearch { eps: 0.05, eps2: 0.0025, grid: 3, z_moduli: vec![1e3, 1e4, 1e5, 1e6, 1e7], z_phases: 4 }
    }
}

fn disc_grid(radius: f64, grid: usize) -> Vec<Complex64> {
    if grid <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let mut out = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let s = -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
            let t = -1.0 + 2.0 * j as f64 / (grid - 1) as f64;
            let c = Complex64::new(s, t) * (0.99 * radius / 2f64.sqrt());
            out.push(c);
        }
    }
    out
}

/// Classifies a grid of seeds in the wedge and keeps the linear-rate ones.
pub fn find_linear_escape_in_wedge(p: &Params, search: &WedgeSearch, opts: &RateOptions) -> Result<SearchOutcome> {
    p.require_expanding()?;
    let xs = disc_grid(search.eps, search.grid);
    let ys = disc_grid(search.eps2, search.grid);
    let mut seeds = Vec::new();
    for &r in &search.z_moduli {
        for k in 0..search.z_phases.max(1) {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / search.z_phases.max(1) as f64);
            for &x in &xs {
                for &y in &ys {
                    seeds.push(AffinePoint::new(x, y, z));
                }
            }
        }
    }
    let log: Vec<SearchSample> = seeds.par_iter().map(|q| classify_sample(p, *q, opts)).collect::<Result<_>>()?;
    let candidates = collect_candidates(p, &log, opts);
    Ok(SearchOutcome { candidates, log })
}

/// log ||f^{3n}(q)|| for n = 0..=n_max, overflow-safe.
pub fn f3_log_norms(p: &Params, q: &AffinePoint, n_max: usize) -> Result<Vec<f64>> {
    let all = log_norm_orbit(p, q, 3 * n_max, Direction::Forward)?;
    Ok(all.into_iter().step_by(3).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> Params {
        Params::real(0.0, 0.0, 2.0, 0.0).unwrap()
    }

    #[test]
    fn wedge_examples() {
        let p = p0();
        let w = WedgeParams { epsilon: 0.1, norm_floor: 1e3 };
        assert_eq!(wedge_membership(&p, &AffinePoint::real(1e6, 1.0, 1.0), &w).unwrap(), InfinitySymbol::Aplus);
        assert_eq!(wedge_membership(&p, &AffinePoint::real(1.0, 1.0, 1e6), &w).unwrap(), InfinitySymbol::Aminus);
        assert_eq!(wedge_membership(&p, &AffinePoint::real(1.0, 1e6, 1.0), &w).unwrap(), InfinitySymbol::Cpoint);
        assert!(matches!(wedge_membership(&p, &AffinePoint::real(1.0, 1.0, 1.0), &w), Err(Error::BelowFloor { .. })));
    }

    #[test]
    fn b_wedge() {
        let p = p0();
        let w = WedgeParams { epsilon: 0.05, norm_floor: 1e3 };
        // large comparable x, z with small y: |yz| and |xy| are not small
        // relative to |dx|, |dz| once y ~ 1e2
        let q = AffinePoint::real(1e6, 1e2, 2e6);
        assert_eq!(wedge_membership(&p, &q, &w).unwrap(), InfinitySymbol::Bpair);
    }

    #[test]
    fn tie_resolution() {
        let p = p0();
        let w = WedgeParams { epsilon: 0.1, norm_floor: 1e3 };
        // A+ and A- both hold at eps and both fail at eps/2: priority decides
        let q = AffinePoint::real(1e6, 0.15, 1e6);
        assert!(in_v_aplus(&p, &q, 0.1) && in_v_aminus(&p, &q, 0.1));
        assert_eq!(wedge_membership(&p, &q, &w).unwrap(), InfinitySymbol::Aplus);
        // a tie that survives every halving
        let q = AffinePoint::real(1e6, 1e-9, 1e6);
        assert_eq!(wedge_membership(&p, &q, &w).unwrap(), InfinitySymbol::None);
    }

    #[test]
    fn axis_orbit_is_period_three() {
        let p = p0();
        let q = AffinePoint::real(1e4, 0.0, 0.0);
        let it = itinerary(&p, &q, 60, &WedgeParams::default()).unwrap();
        assert_eq!(it.period, Period::P3);
        assert!((it.rate_estimate - 2.0).abs() < 0.02);
        assert_eq!(&it.symbols[..3], &CYCLE3);
    }

    #[test]
    fn generic_large_seed_is_aperiodic() {
        let p = p0();
        let it = itinerary(&p, &AffinePoint::real(10.0, 10.0, 10.0), 60, &WedgeParams::default()).unwrap();
        assert_eq!(it.period, Period::Aperiodic);
        assert_eq!(it.rate_class, RateClass::Super);
    }

    #[test]
    fn period_patterns_are_exclusive() {
        use InfinitySymbol::*;
        let p3 = [Aplus, Aminus, Cpoint, Aplus, Aminus, Cpoint, Aplus];
        let p5 = [Cpoint, Bpair, Cpoint, Aplus, Aminus, Cpoint, Bpair, Cpoint, Aplus, Aminus];
        assert_eq!(detect_period(&p3), Period::P3);
        assert_eq!(detect_period(&p5), Period::P5);
        assert!(!(matches_p3(&p5) && matches_p5(&p5)));
        assert_eq!(detect_period(&p3[..4]), Period::TooShort);
    }

    #[test]
    fn rate_classes() {
        let p = p0();
        let o = RateOptions::default();
        assert_eq!(classify_rate(&p, &AffinePoint::origin(), &o).unwrap().class, RateClass::Bounded);
        assert_eq!(classify_rate(&p, &AffinePoint::real(10.0, 10.0, 10.0), &o).unwrap().class, RateClass::Super);
        let lin = classify_rate(&p, &AffinePoint::real(0.0, 0.0, 1e3), &o).unwrap();
        assert_eq!(lin.class, RateClass::Linear);
        assert!((lin.rate_estimate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_rate() {
        assert_eq!(rate_estimate(&[1.0, 9.0, 2.0, 2.0, 2.0, 3.0]), 2.0);
        assert!(rate_estimate(&[]).is_nan());
    }

    #[test]
    fn envelope_on_axis_orbit() {
        let p = p0();
        let w = WedgeParams { epsilon: 0.05, norm_floor: 1e3 };
        let rep = growth_envelope_check(&p, &AffinePoint::real(1e4, 0.0, 0.0), &w, 10).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.lower_margins.len(), 10);
        let bounded = growth_envelope_check(&p, &AffinePoint::origin(), &w, 3);
        assert!(matches!(bounded, Err(Error::Premise(_))));
    }

    #[test]
    fn correction_sums_converge() {
        let s10 = correction_sum(2.0, 0.1, 10).unwrap();
        let s20 = correction_sum(2.0, 0.1, 20).unwrap();
        let s40 = correction_sum(2.0, 0.1, 40).unwrap();
        let s80 = correction_sum(2.0, 0.1, 80).unwrap();
        assert!(s10 < s20 && s20 < s40);
        assert!((s10 - s40).abs() <= correction_tail_bound(2.0, 0.1, 10).unwrap());
        assert!((s20 - s40).abs() <= correction_tail_bound(2.0, 0.1, 20).unwrap());
        assert!((s40 - s80).abs() < 1e-10);
        let c = correction_limit(2.0, 0.1).unwrap();
        assert!((c - s80).abs() < 1e-13);
        let (lo, hi) = envelope_log_sums(2.0, 0.1, 7).unwrap();
        assert!((hi - lo - correction_sum(2.0, 0.1, 7).unwrap()).abs() < 1e-12);
        assert!(correction_limit(2.0, 1.5).is_err());
    }

    #[test]
    fn wedge_law_on_samples() {
        let p = Params::new(Complex64::new(0.3, 0.2), Complex64::new(-0.1, 0.0), Complex64::new(2.0, 1.0), Complex64::new(0.0, 0.0)).unwrap();
        for q in sample_v_aplus(&p, 0.05, 1e3, 200, 3) {
            assert!(wedge_image_delta(&p, &q).norm() < 0.05);
        }
    }

    #[test]
    fn tau_mirrors_a_wedges() {
        // swapping b and c and applying tau exchanges the A+ and A- wedges
        let p = Params::new(Complex64::new(0.3, 0.2), Complex64::new(-0.7, 0.1), Complex64::new(2.0, 1.0), Complex64::new(0.0, 0.0)).unwrap();
        let ps = Params::new(p.c(), p.b(), p.d(), p.e()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 10f64.powf(rng.gen_range(0.0..6.0));
            let q = AffinePoint::new(c(), c(), c());
            assert_eq!(in_v_aplus(&p, &q, 0.05), in_v_aminus(&ps, &q.tau(), 0.05));
            assert_eq!(in_v_aminus(&p, &q, 0.05), in_v_aplus(&ps, &q.tau(), 0.05));
        }
    }

    #[test]
    fn wedge_finder_finds_axis_orbits() {
        let p = p0();
        let out = find_linear_escape_in_wedge(&p, &WedgeSearch::default(), &RateOptions::default()).unwrap();
        assert!(!out.candidates.is_empty());
        for c in &out.candidates {
            assert!(verify_candidate(&p, c, &RateOptions::default()));
        }
    }

    #[test]
    fn bounded_segment_finds_nothing() {
        let p = p0();
        let seg = (AffinePoint::origin(), AffinePoint::real(0.01, 0.01, 0.01));
        let opts = FindOptions { samples: 8, ..FindOptions::default() };
        let out = find_linear_escape(&p, seg, &opts).unwrap();
        assert!(out.candidates.is_empty());
    }
}
