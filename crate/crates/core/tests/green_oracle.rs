//! G+ against a brute-force oracle that iterates f exactly (up to rounding)
//! in an extended-exponent complex type, so no log surrogate is involved.

use num_complex::Complex64;
use qauto_core::green::{green_value, GreenOptions, GreenStatus};
use qauto_core::map::golden_mean;
use qauto_core::{AffinePoint, Direction, Params};

/// m * 2^e with max(|re m|, |im m|) in [0.5, 1), or m = 0.
#[derive(Clone, Copy, Debug)]
struct ExtC {
    m: Complex64,
    e: i64,
}

impl ExtC {
    fn new(m: Complex64) -> Self {
        ExtC { m, e: 0 }.normalized()
    }

    fn normalized(self) -> Self {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a == 0.0 {
            return ExtC { m: Complex64::new(0.0, 0.0), e: 0 };
        }
        let k = a.log2().floor() as i64 + 1;
        let s = 2f64.powi(-k as i32);
        ExtC { m: self.m * s, e: self.e + k }
    }

    fn mul(self, o: ExtC) -> ExtC {
        ExtC { m: self.m * o.m, e: self.e + o.e }.normalized()
    }

    fn add(self, o: ExtC) -> ExtC {
        if self.m.norm() == 0.0 {
            return o;
        }
        if o.m.norm() == 0.0 {
            return self;
        }
        let (big, small) = if self.e >= o.e { (self, o) } else { (o, self) };
        let shift = (small.e - big.e).max(-2000) as i32;
        let scaled = if shift < -1100 { Complex64::new(0.0, 0.0) } else { small.m * 2f64.powi(shift) };
        ExtC { m: big.m + scaled, e: big.e }.normalized()
    }

    fn ln_abs(self) -> f64 {
        self.m.norm().ln() + self.e as f64 * std::f64::consts::LN_2
    }
}

fn oracle_depth(p: &Params, q: &AffinePoint, n: usize) -> f64 {
    let c = |v: Complex64| ExtC::new(v);
    let (b, cc, d, e) = (c(p.b()), c(p.c()), c(p.d()), c(p.e()));
    let (mut x, mut y, mut z) = (c(q.x), c(q.y), c(q.z));
    for _ in 0..n {
        let w = y.mul(z).add(b.mul(y)).add(cc.mul(z)).add(d.mul(x)).add(e);
        (x, y, z) = (y, z, w);
    }
    // log(1 + sum |.|^2) via a shifted log-sum-exp
    let lse = |ls: &[f64]| {
        let m = ls.iter().cloned().fold(0.0f64, f64::max);
        m + ((-m).exp() + ls.iter().map(|l| (l - m).exp()).sum::<f64>()).ln()
    };
    let s = golden_mean();
    let u = lse(&[2.0 * y.ln_abs()]) / (2.0 * s);
    let v = lse(&[2.0 * x.ln_abs(), 2.0 * y.ln_abs(), 2.0 * z.ln_abs()]) / 2.0;
    s.powi(-(n as i32)) * (u + v)
}

#[test]
fn extended_exponent_oracle_matches_at_depth_40() {
    let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
    let q = AffinePoint::real(10.0, 10.0, 10.0);
    let g = green_value(&p, &q, Direction::Forward, &GreenOptions::default()).unwrap();
    assert_eq!(g.status, GreenStatus::Converged);
    let o = oracle_depth(&p, &q, 40);
    assert!((g.value - o).abs() <= 1e-10 * (1.0 + o), "green {} oracle {}", g.value, o);
    assert!(g.value > 1.0);
}

#[test]
fn oracle_agreement_with_generic_parameters() {
    let p = Params::new(
        Complex64::new(0.3, -0.1),
        Complex64::new(-0.2, 0.4),
        Complex64::new(1.5, 0.5),
        Complex64::new(0.1, 0.2),
    )
    .unwrap();
    for q in [
        AffinePoint::real(10.0, 10.0, 10.0),
        AffinePoint::new(Complex64::new(1.0, 2.0), Complex64::new(-20.0, 3.0), Complex64::new(5.0, -7.0)),
        AffinePoint::real(-3.0, 40.0, -40.0),
    ] {
        let g = green_value(&p, &q, Direction::Forward, &GreenOptions::default()).unwrap();
        let o = oracle_depth(&p, &q, 40);
        assert!((g.value - o).abs() <= 1e-9 * (1.0 + o), "q {q:?}: green {} oracle {}", g.value, o);
        assert!(g.error_bound <= 1e-9 * (1.0 + o));
    }
}

#[test]
fn oracle_depths_are_cauchy() {
    let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
    let q = AffinePoint::real(10.0, 10.0, 10.0);
    let (a, b) = (oracle_depth(&p, &q, 30), oracle_depth(&p, &q, 40));
    assert!((a - b).abs() < 1e-10 * (1.0 + b));
}
