//! Sparse polynomials in x, y, z with exact Gaussian-rational coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Monomial-count ceiling for symbolic products.
pub const TERM_LIMIT: usize = 10_000_000;

/// a + b i with a, b rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRat::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// Exact conversion of the binary values of a double-precision complex.
    pub fn from_complex(c: Complex64) -> Result<Self> {
        let conv = |v: f64| {
            BigRational::from_float(v)
                .ok_or_else(|| Error::InvalidArgument(format!("non-finite coefficient {v}")))
        };
        Ok(GaussRat::new(conv(c.re)?, conv(c.im)?))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        use num_traits::ToPrimitive;
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat::new(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        GaussRat::is_zero(self)
    }
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        &self + &o
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-&self.re, -&self.im)
    }
}

/// Exponent triple (i, j, k) of x^i y^j z^k.
pub type Monomial = [u32; 3];

/// Sparse polynomial; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparsePoly3 {
    terms: BTreeMap<Monomial, GaussRat>,
}

impl SparsePoly3 {
    pub fn zero() -> Self {
        SparsePoly3 { terms: BTreeMap::new() }
    }

    pub fn constant(c: GaussRat) -> Self {
        let mut p = SparsePoly3::zero();
        p.add_term([0, 0, 0], c);
        p
    }

    /// The coordinate x (0), y (1) or z (2).
    pub fn var(index: usize) -> Self {
        assert!(index < 3, "variable index out of range");
        let mut m = [0u32; 3];
        m[index] = 1;
        let mut p = SparsePoly3::zero();
        p.add_term(m, GaussRat::from_int(1));
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&m) {
            Some(v) => {
                *v = &*v + &c;
                v.is_zero()
            }
            None => {
                self.terms.insert(m, c);
                false
            }
        };
        if remove {
            self.terms.remove(&m);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussRat)> {
        self.terms.iter()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m[0] + m[1] + m[2]).max()
    }

    pub fn scale(&self, c: &GaussRat) -> Self {
        let mut out = SparsePoly3::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, v * c);
        }
        out
    }

    /// Exact product, refusing results above `limit` monomials.
    pub fn try_mul(&self, other: &Self, limit: usize) -> Result<Self> {
        let mut out = SparsePoly3::zero();
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                let m = [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]];
                out.add_term(m, va * vb);
            }
            if out.len() > limit {
                return Err(Error::TermExplosion { limit });
            }
        }
        Ok(out)
    }

    /// Floating-point evaluation.
    pub fn eval(&self, x: Complex64, y: Complex64, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, v)| v.to_complex() * x.powu(m[0]) * y.powu(m[1]) * z.powu(m[2]))
            .sum()
    }
}

impl Add for &SparsePoly3 {
    type Output = SparsePoly3;
    fn add(self, o: &SparsePoly3) -> SparsePoly3 {
        let mut out = self.clone();
        for (m, v) in &o.terms {
            out.add_term(*m, v.clone());
        }
        out
    }
}

impl Sub for &SparsePoly3 {
    type Output = SparsePoly3;
    fn sub(self, o: &SparsePoly3) -> SparsePoly3 {
        let mut out = self.clone();
        for (m, v) in &o.terms {
            out.add_term(*m, -v);
        }
        out
    }
}

/// Unit rational, handy in tests.
pub fn one() -> GaussRat {
    GaussRat::new(BigRational::one(), BigRational::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_removes_terms() {
        let x = SparsePoly3::var(0);
        let d = &x - &x;
        assert!(d.is_empty());
        assert_eq!(d.total_degree(), None);
    }

    #[test]
    fn product_degree_and_eval() {
        let x = SparsePoly3::var(0);
        let y = SparsePoly3::var(1);
        let s = &x + &y;
        let sq = s.try_mul(&s, TERM_LIMIT).unwrap();
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.total_degree(), Some(2));
        let v = sq.eval(Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0));
        let expect = Complex64::new(3.0, 1.0).powu(2);
        assert!((v - expect).norm() < 1e-12);
    }

    #[test]
    fn term_limit_enforced() {
        let s = &(&SparsePoly3::var(0) + &SparsePoly3::var(1)) + &SparsePoly3::var(2);
        let sq = s.try_mul(&s, TERM_LIMIT).unwrap();
        assert!(matches!(sq.try_mul(&sq, 5), Err(Error::TermExplosion { limit: 5 })));
    }

    #[test]
    fn exact_float_conversion() {
        let g = GaussRat::from_complex(Complex64::new(0.1, -2.5)).unwrap();
        assert_eq!(g.to_complex(), Complex64::new(0.1, -2.5));
        assert!(GaussRat::from_complex(Complex64::new(f64::NAN, 0.0)).is_err());
    }
}
