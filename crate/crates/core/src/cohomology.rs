//! Action of f on H^{1,1}(X, R) in the basis ({H_inf}, {E}), dynamical
//! degrees, the invariant class and a symbolic degree-growth oracle.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::{golden_mean, Params};
use crate::poly::{GaussRat, SparsePoly3, TERM_LIMIT};

/// Largest iterate accepted by [`degree_sequence`].
pub const MAX_SYMBOLIC_ITERATE: usize = 12;

/// 2x2 integer matrix acting on (h, e) coefficient columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PullbackMatrix(pub [[i64; 2]; 2]);

impl PullbackMatrix {
    pub fn identity() -> Self {
        PullbackMatrix([[1, 0], [0, 1]])
    }

    pub fn mul(&self, o: &PullbackMatrix) -> PullbackMatrix {
        let (a, b) = (self.0, o.0);
        let mut m = [[0i64; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        PullbackMatrix(m)
    }

    pub fn pow(&self, n: u32) -> PullbackMatrix {
        (0..n).fold(PullbackMatrix::identity(), |acc, _| acc.mul(self))
    }

    pub fn apply(&self, v: &ClassVector) -> ClassVector {
        let m = self.0;
        ClassVector {
            h: m[0][0] as f64 * v.h + m[0][1] as f64 * v.e,
            e: m[1][0] as f64 * v.h + m[1][1] as f64 * v.e,
        }
    }
}

/// Coefficients of a class in the basis ({H_inf}, {E}).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassVector {
    pub h: f64,
    pub e: f64,
}

/// The invariant class sigma {H_inf} + {E}.
pub fn invariant_class() -> ClassVector {
    ClassVector { h: golden_mean(), e: 1.0 }
}

/// f^* sends {H_inf} to {H_inf} + {E} and {E} to {H_inf}.
pub fn pullback_matrix() -> PullbackMatrix {
    PullbackMatrix([[1, 1], [1, 0]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub matrix: PullbackMatrix,
    /// (leading, other)
    pub eigenvalues: (f64, f64),
    pub leading_eigenvector: ClassVector,
}

pub fn pullback_spectrum() -> Spectrum {
    let s5 = 5f64.sqrt();
    Spectrum {
        matrix: pullback_matrix(),
        eigenvalues: ((1.0 + s5) / 2.0, (1.0 - s5) / 2.0),
        leading_eigenvector: invariant_class(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DynamicalDegrees {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub not_cohomologically_hyperbolic: bool,
}

/// (sigma, sigma, 1); lambda2 is the known value, not recomputed.
pub fn dynamical_degrees() -> DynamicalDegrees {
    let s = golden_mean();
    let (l1, l2, l3) = (s, s, 1.0);
    let strictly_dominant = [l1, l2, l3]
        .iter()
        .enumerate()
        .any(|(i, &a)| [l1, l2, l3].iter().enumerate().all(|(j, &b)| i == j || a > b));
    DynamicalDegrees { lambda1: l1, lambda2: l2, lambda3: l3, not_cohomologically_hyperbolic: !strictly_dominant }
}

/// alpha^3 = 1 + 3/sigma.
pub fn invariant_class_volume() -> f64 {
    1.0 + 3.0 / golden_mean()
}

/// The same number written as 3 sigma - 2.
pub fn invariant_class_volume_alt() -> f64 {
    3.0 * golden_mean() - 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    /// Estimate of the integral of (dd^c v)^3 over the ball.
    pub cube_term: f64,
    /// Estimate of 3 times the integral of (dd^c v)^2 ^ dd^c u over the ball.
    pub mixed_term: f64,
    pub total: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of the volume over the Euclidean ball of radius
/// `radius`, with u = log(1+|y|^2)/(2 sigma) and v = log(1+|q|^2)/2.
///
/// Points are drawn from the Fubini-Study probability measure, whose
/// density is that of (dd^c v)^3. The mixed form has density ratio
/// (1+|q|^2) / (3 sigma (1+|y|^2)) with respect to it.
pub fn invariant_class_volume_monte_carlo(samples: usize, radius: f64, seed: u64) -> VolumeEstimate {
    let sigma = golden_mean();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    };
    let (mut cube, mut mixed) = (0.0, 0.0);
    for _ in 0..samples {
        let g0 = normal();
        let (x, y, z) = (normal() / g0, normal() / g0, normal() / g0);
        let r2 = x.norm_sqr() + y.norm_sqr() + z.norm_sqr();
        if r2 > radius * radius {
            continue;
        }
        cube += 1.0;
        mixed += (1.0 + r2) / (sigma * (1.0 + y.norm_sqr()));
    }
    let n = samples.max(1) as f64;
    let (cube, mixed) = (cube / n, mixed / n);
    VolumeEstimate { cube_term: cube, mixed_term: mixed, total: cube + mixed, samples }
}

/// Total degrees of the three components of f^n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeRow {
    pub n: usize,
    pub degrees: [u32; 3],
}

impl DegreeRow {
    pub fn max(&self) -> u32 {
        *self.degrees.iter().max().unwrap()
    }
}

/// Exact composition f^{n+1} = f o f^n for n = 1..n_max.
pub fn degree_sequence(p: &Params, n_max: usize) -> Result<Vec<DegreeRow>> {
    if !(1..=MAX_SYMBOLIC_ITERATE).contains(&n_max) {
        return Err(Error::InvalidArgument(format!("n_max must lie in 1..={MAX_SYMBOLIC_ITERATE}")));
    }
    let (b, c, d, e) = (
        GaussRat::from_complex(p.b())?,
        GaussRat::from_complex(p.c())?,
        GaussRat::from_complex(p.d())?,
        GaussRat::from_complex(p.e())?,
    );
    let mut comps = [SparsePoly3::var(0), SparsePoly3::var(1), SparsePoly3::var(2)];
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let [p1, p2, p3] = comps;
        if p2.len().saturating_mul(p3.len()) > TERM_LIMIT.saturating_mul(10) {
            return Err(Error::TermExplosion { limit: TERM_LIMIT });
        }
        let mut third = p2.try_mul(&p3, TERM_LIMIT)?;
        third = &third + &p2.scale(&b);
        third = &third + &p3.scale(&c);
        third = &third + &p1.scale(&d);
        third = &third + &SparsePoly3::constant(e.clone());
        if third.len() > TERM_LIMIT {
            return Err(Error::TermExplosion { limit: TERM_LIMIT });
        }
        comps = [p2, p3, third];
        let deg = |q: &SparsePoly3| q.total_degree().unwrap_or(0);
        rows.push(DegreeRow { n, degrees: [deg(&comps[0]), deg(&comps[1]), deg(&comps[2])] });
    }
    Ok(rows)
}
