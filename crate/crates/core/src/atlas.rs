//! The compactification X of C^3: P^3 blown up along L = (Y = T = 0).
//!
//! A point of X is stored globally as a point of P^3 together with a
//! direction `[xi1 : xi2]` satisfying `xi1 T = xi2 Y`; off L the direction is
//! forced to be `[Y : T]`. Four charts are provided:
//!
//! | chart   | domain            | coordinates (w1, w2, w3)      | E        |
//! |---------|-------------------|-------------------------------|----------|
//! | `ZXi1`  | Z != 0, xi1 != 0  | (X/Z, Y/Z, xi2/xi1)           | w2 = 0   |
//! | `ZXi2`  | Z != 0, xi2 != 0  | (X/Z, xi1/xi2, T/Z)           | w3 = 0   |
//! | `XXi2`  | X != 0, xi2 != 0  | (xi1/xi2, Z/X, T/X)           | w3 = 0   |
//! | `Y`     | Y != 0 (P^3 only) | (X/Y, Z/Y, T/Y)               | -        |
//!
//! The strict transform of the hyperplane at infinity is `w3 = 0` in `ZXi1`
//! and `w3 = 0` in `Y`; it does not meet the two `xi2` charts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, IndeterminacyKind, Result};
use crate::map::{AffinePoint, Direction, Params};

/// Chart denominators below this modulus are treated as vanishing.
pub const DENOMINATOR_THRESHOLD: f64 = 1e-13;
/// Relative tolerance for membership in the lines L, L', L''.
pub const LINE_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HomPoint {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
    pub t: Complex64,
}

impl HomPoint {
    pub fn new(x: Complex64, y: Complex64, z: Complex64, t: Complex64) -> Self {
        HomPoint { x, y, z, t }
    }

    pub fn real(x: f64, y: f64, z: f64, t: f64) -> Self {
        HomPoint::new(x.into(), y.into(), z.into(), t.into())
    }

    pub fn from_affine(q: &AffinePoint) -> Self {
        HomPoint::new(q.x, q.y, q.z, ONE)
    }

    pub fn coords(&self) -> [Complex64; 4] {
        [self.x, self.y, self.z, self.t]
    }

    fn from_coords(c: [Complex64; 4]) -> Self {
        HomPoint::new(c[0], c[1], c[2], c[3])
    }

    pub fn max_modulus(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.max_modulus() == 0.0
    }

    /// Divides by the largest-modulus coordinate, which becomes exactly 1.
    pub fn normalize(&self) -> HomPoint {
        let c = self.coords();
        let k = (0..4)
            .max_by(|&i, &j| c[i].norm().total_cmp(&c[j].norm()))
            .unwrap();
        if c[k].norm() == 0.0 {
            return *self;
        }
        let s = c[k];
        let mut out = c.map(|v| v / s);
        out[k] = ONE;
        HomPoint::from_coords(out)
    }

    pub fn at_infinity(&self) -> bool {
        self.t.norm() < 1e-14 * self.max_modulus()
    }

    /// Affine representative when T != 0.
    pub fn to_affine(&self) -> Option<AffinePoint> {
        if self.at_infinity() || self.is_zero() {
            None
        } else {
            Some(AffinePoint::new(self.x / self.t, self.y / self.t, self.z / self.t))
        }
    }

    /// Fubini-Study chordal distance, computed from the wedge product so it
    /// stays accurate for nearby points.
    pub fn chordal_distance(&self, other: &HomPoint) -> f64 {
        let a = self.coords();
        let b = other.coords();
        let na: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
        let mut wedge = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
            }
        }
        (wedge / (na * nb)).sqrt()
    }
}

/// p+ = [1:0:0:0]
pub fn p_plus() -> HomPoint {
    HomPoint::real(1.0, 0.0, 0.0, 0.0)
}

/// p- = [0:0:1:0]
pub fn p_minus() -> HomPoint {
    HomPoint::real(0.0, 0.0, 1.0, 0.0)
}

/// Homogeneous extension [YT : ZT : YZ+bYT+cZT+dXT+eT^2 : T^2], unnormalized.
fn homogeneous_raw(p: &Params, h: &HomPoint) -> HomPoint {
    let (x, y, z, t) = (h.x, h.y, h.z, h.t);
    HomPoint::new(
        y * t,
        z * t,
        y * z + p.b() * y * t + p.c() * z * t + p.d() * x * t + p.e() * t * t,
        t * t,
    )
}

fn inverse_homogeneous_raw(p: &Params, h: &HomPoint) -> HomPoint {
    let (x, y, z, t) = (h.x, h.y, h.z, h.t);
    HomPoint::new(
        (z * t - x * y - p.b() * x * t - p.c() * y * t - p.e() * t * t) / p.d(),
        x * t,
        y * t,
        t * t,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndeterminacyStatus {
    Regular,
    OnL,
    OnLprime,
    OnLdoubleprime,
}

/// Membership in I_f = L u L' (forward) or I_{f^-1} = L u L'' (backward).
pub fn indeterminacy_status(_p: &Params, h: &HomPoint, direction: Direction) -> IndeterminacyStatus {
    let n = h.normalize();
    let small = |v: Complex64| v.norm() < LINE_TOLERANCE;
    if small(n.t) && small(n.y) {
        return IndeterminacyStatus::OnL;
    }
    match direction {
        Direction::Forward if small(n.t) && small(n.z) => IndeterminacyStatus::OnLprime,
        Direction::Backward if small(n.t) && small(n.x) => IndeterminacyStatus::OnLdoubleprime,
        _ => IndeterminacyStatus::Regular,
    }
}

fn check_regular(p: &Params, h: &HomPoint, direction: Direction) -> Result<()> {
    if h.is_zero() {
        return Err(Error::InvalidArgument("homogeneous point with all coordinates zero".into()));
    }
    match indeterminacy_status(p, h, direction) {
        IndeterminacyStatus::Regular => Ok(()),
        IndeterminacyStatus::OnL => Err(Error::Indeterminate(IndeterminacyKind::LineL)),
        IndeterminacyStatus::OnLprime => Err(Error::Indeterminate(IndeterminacyKind::LineLPrime)),
        IndeterminacyStatus::OnLdoubleprime => {
            Err(Error::Indeterminate(IndeterminacyKind::LineLDoublePrime))
        }
    }
}

/// f on P^3, normalized.
pub fn apply_homogeneous(p: &Params, h: &HomPoint) -> Result<HomPoint> {
    check_regular(p, &h.normalize(), Direction::Forward)?;
    let img = homogeneous_raw(p, &h.normalize());
    if img.max_modulus() < LINE_TOLERANCE {
        return Err(Error::Indeterminate(IndeterminacyKind::LineL));
    }
    Ok(img.normalize())
}

/// f^{-1} on P^3, normalized.
pub fn apply_inverse_homogeneous(p: &Params, h: &HomPoint) -> Result<HomPoint> {
    check_regular(p, &h.normalize(), Direction::Backward)?;
    let img = inverse_homogeneous_raw(p, &h.normalize());
    if img.max_modulus() < LINE_TOLERANCE {
        return Err(Error::Indeterminate(IndeterminacyKind::LineL));
    }
    Ok(img.normalize())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ChartId {
    /// Z != 0, xi1 != 0. Its origin is p-.
    ZXi1,
    /// Z != 0, xi2 != 0.
    ZXi2,
    /// X != 0, xi2 != 0.
    XXi2,
    /// Y != 0, an affine chart of P^3.
    Y,
}

pub const ALL_CHARTS: [ChartId; 4] = [ChartId::ZXi1, ChartId::ZXi2, ChartId::XXi2, ChartId::Y];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub w1: Complex64,
    pub w2: Complex64,
    pub w3: Complex64,
}

impl ChartPoint {
    pub fn new(chart: ChartId, w1: Complex64, w2: Complex64, w3: Complex64) -> Self {
        ChartPoint { chart, w1, w2, w3 }
    }

    pub fn real(chart: ChartId, w1: f64, w2: f64, w3: f64) -> Self {
        ChartPoint::new(chart, w1.into(), w2.into(), w3.into())
    }

    pub fn coords(&self) -> [Complex64; 3] {
        [self.w1, self.w2, self.w3]
    }

    pub fn norm(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Local equation of the exceptional divisor E, if E meets this chart.
    pub fn e_equation(&self) -> Option<Complex64> {
        match self.chart {
            ChartId::ZXi1 => Some(self.w2),
            ChartId::ZXi2 | ChartId::XXi2 => Some(self.w3),
            ChartId::Y => None,
        }
    }

    /// Local equation of the strict transform of H_inf, if it meets this chart.
    pub fn h_inf_equation(&self) -> Option<Complex64> {
        match self.chart {
            ChartId::ZXi1 | ChartId::Y => Some(self.w3),
            ChartId::ZXi2 | ChartId::XXi2 => None,
        }
    }
}

/// A point of X in chart-free form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupPoint {
    pub base: HomPoint,
    pub xi: [Complex64; 2],
}

impl BlowupPoint {
    /// Lift of a point of P^3 off L.
    pub fn lift(h: &HomPoint) -> Result<BlowupPoint> {
        let n = h.normalize();
        if n.y.norm() < LINE_TOLERANCE && n.t.norm() < LINE_TOLERANCE {
            return Err(Error::Indeterminate(IndeterminacyKind::LineL));
        }
        Ok(BlowupPoint { base: n, xi: [n.y, n.t] })
    }
}

/// Chart coordinates to the global description.
pub fn to_global(q: &ChartPoint) -> BlowupPoint {
    let (w1, w2, w3) = (q.w1, q.w2, q.w3);
    match q.chart {
        ChartId::ZXi1 => BlowupPoint { base: HomPoint::new(w1, w2, ONE, w2 * w3), xi: [ONE, w3] },
        ChartId::ZXi2 => BlowupPoint { base: HomPoint::new(w1, w2 * w3, ONE, w3), xi: [w2, ONE] },
        ChartId::XXi2 => BlowupPoint { base: HomPoint::new(ONE, w1 * w3, w2, w3), xi: [w1, ONE] },
        ChartId::Y => BlowupPoint { base: HomPoint::new(w1, ONE, w2, w3), xi: [ONE, w3] },
    }
}

/// The blow-down map pi: X -> P^3 read in the given chart.
pub fn blowdown(q: &ChartPoint) -> HomPoint {
    to_global(q).base
}

fn nonzero(v: Complex64, scale: f64) -> bool {
    v.norm() > DENOMINATOR_THRESHOLD * scale
}

/// Global description to chart coordinates.
pub fn from_global(g: &BlowupPoint, chart: ChartId) -> Result<ChartPoint> {
    let h = g.base.normalize();
    let [xi1, xi2] = g.xi;
    let xs = xi1.norm().max(xi2.norm());
    let ok = match chart {
        ChartId::ZXi1 => nonzero(h.z, 1.0) && nonzero(xi1, xs),
        ChartId::ZXi2 => nonzero(h.z, 1.0) && nonzero(xi2, xs),
        ChartId::XXi2 => nonzero(h.x, 1.0) && nonzero(xi2, xs),
        ChartId::Y => nonzero(h.y, 1.0),
    };
    if !ok {
        return Err(Error::ChartDomain(chart));
    }
    let (a, b, c) = match chart {
        ChartId::ZXi1 => (h.x / h.z, h.y / h.z, xi2 / xi1),
        ChartId::ZXi2 => (h.x / h.z, xi1 / xi2, h.t / h.z),
        ChartId::XXi2 => (xi1 / xi2, h.z / h.x, h.t / h.x),
        ChartId::Y => (h.x / h.y, h.z / h.y, h.t / h.y),
    };
    Ok(ChartPoint::new(chart, a, b, c))
}

pub fn change_chart(q: &ChartPoint, chart: ChartId) -> Result<ChartPoint> {
    if q.chart == chart {
        return Ok(*q);
    }
    from_global(&to_global(q), chart)
}

fn denominator(v: Complex64) -> Result<Complex64> {
    if v.norm() < DENOMINATOR_THRESHOLD {
        Err(Error::Indeterminate(IndeterminacyKind::Denominator))
    } else {
        Ok(v)
    }
}

/// A = 1 + b w2 w3 + c w3 + d w1 w3 (+ e w2 w3^2) in chart `ZXi1`.
pub fn denominator_a(p: &Params, q: &ChartPoint) -> Complex64 {
    ONE + p.b() * q.w2 * q.w3 + p.c() * q.w3 + p.d() * q.w1 * q.w3 + p.e() * q.w2 * q.w3 * q.w3
}

/// B = w2 + b w2 w3 + c + d w1 (+ e w3) in chart `ZXi2`.
pub fn denominator_b(p: &Params, q: &ChartPoint) -> Complex64 {
    q.w2 + p.b() * q.w2 * q.w3 + p.c() + p.d() * q.w1 + p.e() * q.w3
}

/// C = w1 w2 + b w1 w3 + c w2 + d (+ e w3) in chart `XXi2`.
pub fn denominator_c(p: &Params, q: &ChartPoint) -> Complex64 {
    q.w1 * q.w2 + p.b() * q.w1 * q.w3 + p.c() * q.w2 + p.d() + p.e() * q.w3
}

/// The denominator the chart map divides by for this input, if any.
pub fn chart_denominator(p: &Params, q: &ChartPoint) -> Option<Complex64> {
    match q.chart {
        ChartId::ZXi1 => Some(denominator_a(p, q)),
        ChartId::ZXi2 => Some(denominator_b(p, q)),
        ChartId::XXi2 => Some(denominator_c(p, q)),
        ChartId::Y => None,
    }
}

/// The image of `input` under the lift of f, in its native output chart.
fn apply_native(p: &Params, q: &ChartPoint, output: ChartId) -> Result<ChartPoint> {
    let (w1, w2, w3) = (q.w1, q.w2, q.w3);
    match q.chart {
        ChartId::ZXi1 => {
            let a = denominator(denominator_a(p, q))?;
            Ok(ChartPoint::new(ChartId::ZXi1, w2 * w3 / a, w3 / a, w2 * w3))
        }
        ChartId::ZXi2 if output == ChartId::Y => {
            Ok(ChartPoint::new(ChartId::Y, w2 * w3, denominator_b(p, q), w3))
        }
        ChartId::ZXi2 => {
            let b = denominator(denominator_b(p, q))?;
            Ok(ChartPoint::new(ChartId::ZXi1, w2 * w3 / b, b.inv(), w3))
        }
        ChartId::XXi2 => {
            let c = denominator(denominator_c(p, q))?;
            let scale = 1.0 + q.norm();
            if w3.norm() >= w2.norm() && nonzero(w3, scale) {
                Ok(ChartPoint::new(ChartId::ZXi2, w1 * w3 / c, w2 / w3, w3 / c))
            } else if nonzero(w2, scale) {
                Ok(ChartPoint::new(ChartId::ZXi1, w1 * w3 / c, w2 / c, w3 / w2))
            } else {
                Err(Error::Indeterminate(IndeterminacyKind::CurveCPrimePlus))
            }
        }
        ChartId::Y => {
            let g = to_global(q);
            if nonzero(g.base.z, q.norm().max(1.0)) {
                let inner = from_global(&g, ChartId::ZXi1)?;
                return apply_native(p, &inner, output);
            }
            let img = apply_homogeneous(p, &g.base)?;
            let lifted = BlowupPoint::lift(&img)?;
            from_global(&lifted, ChartId::Y)
        }
    }
}

/// The lift of f to X, from `input` to the requested output chart.
pub fn apply_chart(p: &Params, input: &ChartPoint, output_chart: ChartId) -> Result<ChartPoint> {
    let native = apply_native(p, input, output_chart)?;
    change_chart(&native, output_chart)
}

/// Indeterminacy curves on the exceptional divisor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CurveId {
    /// E n (I_{f^2} \ I_f)
    Cplus,
    /// E n (I_{f^-2} \ I_{f^-1})
    Cminus,
    /// E n I_f, the fibre of E over p+.
    CprimePlus,
    /// E n I_{f^-1}, the fibre of E over p-.
    CprimeMinus,
}

/// The curve's own equation (beside the equation of E) and its gradient size,
/// or `None` when the chart does not carry the curve.
fn curve_equation(p: &Params, curve: CurveId, q: &ChartPoint) -> Option<(Complex64, f64)> {
    let (w1, w2, w3) = (q.w1, q.w2, q.w3);
    let (b, c, d) = (p.b(), p.c(), p.d());
    match (curve, q.chart) {
        (CurveId::Cplus, ChartId::ZXi1) => {
            let g = (d * w3).norm() + (c + d * w1).norm();
            Some((ONE + c * w3 + d * w1 * w3, g))
        }
        (CurveId::Cplus, ChartId::ZXi2) => Some((w2 + c + d * w1, 1.0 + d.norm())),
        (CurveId::Cminus, ChartId::ZXi1) => {
            let g = (ONE + b * w3).norm() + (ONE - b * w1).norm();
            Some((w3 - w1 - b * w1 * w3, g))
        }
        (CurveId::Cminus, ChartId::XXi2) => {
            let g = (ONE + c * w3).norm() + 1.0 + (c * w1).norm();
            Some((w2 - w1 - b - c * w1 * w3, g))
        }
        (CurveId::CprimePlus, ChartId::XXi2) => Some((w2, 1.0)),
        (CurveId::CprimeMinus, ChartId::ZXi2) => Some((w1, 1.0)),
        _ => None,
    }
}

/// Residual of membership in `curve`: the larger of |E equation| and the
/// curve equation divided by its local gradient size.
pub fn curve_residual(p: &Params, curve: CurveId, q: &ChartPoint) -> Option<f64> {
    let (eq, grad) = curve_equation(p, curve, q)?;
    let e = q.e_equation()?;
    Some(e.norm().max(eq.norm() / grad.max(1e-300)))
}

pub fn on_curve(p: &Params, curve: CurveId, q: &ChartPoint, tol: f64) -> Option<bool> {
    curve_residual(p, curve, q).map(|r| r <= tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpecialPointsB {
    pub b: ChartPoint,
    pub b_prime: ChartPoint,
    /// Set when (b-c)^2 - 4d vanishes and B = B'.
    pub coincident: bool,
}

/// The two points of C+ n C- on E. In chart `ZXi1` they solve
/// d w1^2 + (c - b) w1 + 1 = 0 with w3 = w1 / (1 - b w1) and w2 = 0.
pub fn special_points_b(p: &Params) -> SpecialPointsB {
    let (b, c, d) = (p.b(), p.c(), p.d());
    let lin = c - b;
    let disc = lin * lin - d * 4.0;
    let coincident = disc.norm() <= 1e-12;
    let roots = if coincident {
        [-lin / (d * 2.0); 2]
    } else {
        let mut s = disc.sqrt();
        if (lin.conj() * s).re < 0.0 {
            s = -s;
        }
        let big = -(lin + s) / 2.0;
        // roots of d w^2 + lin w + 1: big/d and 1/big (product 1/d)
        [big / d, big.inv()]
    };
    let to_point = |w1: Complex64| {
        let den = ONE - b * w1;
        if den.norm() > 1e-6 * (1.0 + w1.norm()) {
            ChartPoint::new(ChartId::ZXi1, w1, ZERO, w1 / den)
        } else {
            // w3 leaves ZXi1; same point in ZXi2 where w2 = 1/w3
            ChartPoint::new(ChartId::ZXi2, w1, den / w1, ZERO)
        }
    };
    SpecialPointsB { b: to_point(roots[0]), b_prime: to_point(roots[1]), coincident }
}

/// Number of points of I+ n I-: 5 when (b-c)^2 - 4d != 0, else 4.
pub fn intersection_count(p: &Params) -> u32 {
    let diff = p.b() - p.c();
    let disc = diff * diff - p.d() * 4.0;
    if disc.norm() <= 1e-12 {
        4
    } else {
        5
    }
}

fn random_complex(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius))
}

/// Counts and worst residuals of [`verify_infinity_flow`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub h_inf_samples: usize,
    pub h_inf_to_p_minus: usize,
    pub h_inf_max_distance: f64,
    pub e_samples: usize,
    pub e_to_l_double_prime: usize,
    pub e_max_l_double_prime_residual: f64,
    pub e_second_to_p_minus: usize,
    pub e_second_max_distance: f64,
}

impl FlowReport {
    pub fn all_pass(&self) -> bool {
        self.h_inf_to_p_minus == self.h_inf_samples
            && self.e_to_l_double_prime == self.e_samples
            && self.e_second_to_p_minus == self.e_samples
    }
}

/// Distance from a point to p- measured in chart `ZXi1`, where p- is the origin.
fn distance_to_p_minus(q: &ChartPoint) -> f64 {
    match change_chart(q, ChartId::ZXi1) {
        Ok(z) => z.norm(),
        Err(_) => f64::INFINITY,
    }
}

/// max(|X|, |T|) of the normalized blow-down: zero exactly on L''.
fn l_double_prime_residual(q: &ChartPoint) -> f64 {
    let h = blowdown(q).normalize();
    h.x.norm().max(h.t.norm())
}

/// Samples H_inf \ I_f and E \ I_f and checks the flow at infinity:
/// H_inf goes to p-, E goes to L'' and then to p-.
pub fn verify_infinity_flow(p: &Params, samples: usize, seed: u64) -> FlowReport {
    const FLOW_TOL: f64 = 1e-8;
    const LINE_TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FlowReport {
        h_inf_samples: 0,
        h_inf_to_p_minus: 0,
        h_inf_max_distance: 0.0,
        e_samples: 0,
        e_to_l_double_prime: 0,
        e_max_l_double_prime_residual: 0.0,
        e_second_to_p_minus: 0,
        e_second_max_distance: 0.0,
    };

    for i in 0..samples {
        let q = if i % 2 == 0 {
            ChartPoint::new(ChartId::ZXi1, random_complex(&mut rng, 2.0), random_complex(&mut rng, 2.0), ZERO)
        } else {
            // H_inf seen from the Y chart, kept away from L' (Z = 0)
            let mut w2 = random_complex(&mut rng, 2.0);
            if w2.norm() < 0.1 {
                w2 += Complex64::new(0.5, 0.0);
            }
            ChartPoint::new(ChartId::Y, random_complex(&mut rng, 2.0), w2, ZERO)
        };
        report.h_inf_samples += 1;
        let dist = apply_chart(p, &q, ChartId::ZXi1).map(|img| distance_to_p_minus(&img)).unwrap_or(f64::INFINITY);
        report.h_inf_max_distance = report.h_inf_max_distance.max(dist);
        if dist < FLOW_TOL {
            report.h_inf_to_p_minus += 1;
        }
    }

    let charts = [ChartId::ZXi1, ChartId::ZXi2, ChartId::XXi2];
    let mut taken = 0;
    while taken < samples {
        let chart = charts[taken % 3];
        let (a, b) = (random_complex(&mut rng, 2.0), random_complex(&mut rng, 2.0));
        let q = match chart {
            ChartId::ZXi1 => ChartPoint::new(chart, a, ZERO, b),
            _ => ChartPoint::new(chart, a, b, ZERO),
        };
        // stay off C+, C'+ and the denominators' zero sets
        let den = chart_denominator(p, &q).unwrap();
        if den.norm() < 0.1 || (chart == ChartId::XXi2 && q.w2.norm() < 0.1) {
            continue;
        }
        taken += 1;
        report.e_samples += 1;
        let first = apply_chart(p, &q, ChartId::ZXi1);
        let res = first.as_ref().map(l_double_prime_residual).unwrap_or(f64::INFINITY);
        report.e_max_l_double_prime_residual = report.e_max_l_double_prime_residual.max(res);
        if res < LINE_TOL {
            report.e_to_l_double_prime += 1;
        }
        let dist = first
            .and_then(|img| apply_chart(p, &img, ChartId::ZXi1))
            .map(|img| distance_to_p_minus(&img))
            .unwrap_or(f64::INFINITY);
        report.e_second_max_distance = report.e_second_max_distance.max(dist);
        if dist < FLOW_TOL {
            report.e_second_to_p_minus += 1;
        }
    }
    report
}

/// One commutation check: chordal distance between pi(F(q)) and f(pi(q)).
pub fn commutation_residual(p: &Params, q: &ChartPoint, output: ChartId) -> Result<f64> {
    let img = apply_chart(p, q, output)?;
    let lhs = blowdown(&img);
    let rhs = apply_homogeneous(p, &blowdown(q))?;
    Ok(lhs.chordal_distance(&rhs))
}

/// The (input, output) chart pairs for which an explicit formula exists.
pub const NATIVE_ROUTES: [(ChartId, ChartId); 4] = [
    (ChartId::ZXi1, ChartId::ZXi1),
    (ChartId::ZXi2, ChartId::ZXi1),
    (ChartId::ZXi2, ChartId::Y),
    (ChartId::XXi2, ChartId::ZXi2),
];

/// Commutation residuals at `samples` random points per native route, drawn
/// with denominators (and |w3| for the XXi2 route) above `min_denominator`.
pub fn commutation_residuals(p: &Params, samples: usize, seed: u64, min_denominator: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples * NATIVE_ROUTES.len());
    for &(input, output) in &NATIVE_ROUTES {
        let mut taken = 0;
        while taken < samples {
            let q = ChartPoint::new(
                input,
                random_complex(&mut rng, 2.0),
                random_complex(&mut rng, 2.0),
                random_complex(&mut rng, 2.0),
            );
            let den = chart_denominator(p, &q).map_or(f64::INFINITY, |v| v.norm());
            let e = q.e_equation().map_or(f64::INFINITY, |v| v.norm());
            if den <= min_denominator || e <= min_denominator {
                continue;
            }
            if let Ok(r) = commutation_residual(p, &q, output) {
                out.push(r);
                taken += 1;
            }
        }
    }
    out
}

/// Nearest-rank percentile of unsorted data (0 <= pct <= 100).
pub fn percentile(data: &[f64], pct: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// Residuals of the curve maps f(C'+) = C'- and f^{-1}(C'-) = C'+, computed at
/// points approaching each curve at distance `eta` along a transverse path.
/// Returns the worst residual of the image against the target curve.
pub fn primed_curve_flow_residual(p: &Params, samples: usize, seed: u64, eta: f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut forward: f64 = 0.0;
    let mut backward: f64 = 0.0;
    let eta_c = Complex64::new(eta, 0.0);
    for _ in 0..samples {
        let w1 = random_complex(&mut rng, 2.0);
        let kappa = random_complex(&mut rng, 2.0);
        // near C'+ in XXi2: (w1, kappa eta, eta)
        let q = ChartPoint::new(ChartId::XXi2, w1, kappa * eta_c, eta_c);
        let r = apply_chart(p, &q, ChartId::ZXi2)
            .ok()
            .and_then(|img| curve_residual(p, CurveId::CprimeMinus, &img))
            .unwrap_or(f64::INFINITY);
        forward = forward.max(r);

        // near C'- in ZXi2: (kappa eta, w2, eta), pulled back with f^{-1}
        let q = ChartPoint::new(ChartId::ZXi2, kappa * eta_c, w1, eta_c);
        let r = apply_inverse_homogeneous(p, &blowdown(&q))
            .and_then(|h| BlowupPoint::lift(&h))
            .and_then(|g| from_global(&g, ChartId::XXi2))
            .ok()
            .and_then(|img| curve_residual(p, CurveId::CprimePlus, &img))
            .unwrap_or(f64::INFINITY);
        backward = backward.max(r);
    }
    (forward, backward)
}
