//! Functional equation, symmetry and zero set of the Green functions.

use num_complex::Complex64;
use proptest::prelude::*;
use qauto_core::green::{green_minus_by_symmetry, green_value, GreenOptions, GreenStatus};
use qauto_core::map::{apply, fixed_points, golden_mean};
use qauto_core::{AffinePoint, Direction, Params};

fn p0() -> Params {
    Params::real(0.0, 0.0, 2.0, 0.0).unwrap()
}

fn point(r: f64) -> impl Strategy<Value = AffinePoint> {
    prop::array::uniform6(-r..r).prop_map(|v| {
        AffinePoint::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn functional_equation(q in point(4.0)) {
        let p = p0();
        let o = GreenOptions::default();
        let g = green_value(&p, &q, Direction::Forward, &o).unwrap();
        let gf = green_value(&p, &apply(&p, &q).unwrap(), Direction::Forward, &o).unwrap();
        prop_assume!(g.status == GreenStatus::Converged && gf.status == GreenStatus::Converged);
        prop_assert!((gf.value - golden_mean() * g.value).abs() <= 1e-6 * (1.0 + g.value), "{} {}", gf.value, g.value);
    }

    #[test]
    fn minus_green_matches_symmetry(q in point(4.0)) {
        let p = Params::real(0.2, -0.3, 2.0, 0.1).unwrap();
        let o = GreenOptions::default();
        let direct = green_value(&p, &q, Direction::Backward, &o).unwrap();
        let sym = green_minus_by_symmetry(&p, &q, &o).unwrap();
        prop_assume!(direct.status == GreenStatus::Converged && sym.status == GreenStatus::Converged);
        prop_assert!((direct.value - sym.value).abs() <= 1e-6 * (1.0 + direct.value));
    }

    #[test]
    fn green_is_nonnegative(q in point(20.0)) {
        let g = green_value(&p0(), &q, Direction::Forward, &GreenOptions::default()).unwrap();
        prop_assert!(g.value >= 0.0);
    }
}

#[test]
fn vanishes_at_fixed_points() {
    for p in [p0(), Params::real(0.1, 0.2, 1.5, -0.3).unwrap()] {
        for q in fixed_points(&p).points {
            for dir in [Direction::Forward, Direction::Backward] {
                let g = green_value(&p, &q, dir, &GreenOptions::default()).unwrap();
                assert_eq!(g.value, 0.0, "{q:?} {dir:?}");
            }
        }
    }
}
