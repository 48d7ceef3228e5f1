//! Algebraic invariants of the map, its extension to P^3 and the blow-up charts.

use num_complex::Complex64;
use proptest::prelude::*;
use qauto_core::atlas::{
    apply_homogeneous, chart_denominator, commutation_residual, ChartPoint, HomPoint, NATIVE_ROUTES,
};
use qauto_core::map::{apply, apply_inverse, conjugate_by_tau, det3, jacobian, jacobian_det};
use qauto_core::{AffinePoint, Params};

fn cplx(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn params() -> impl Strategy<Value = Params> {
    (cplx(2.0), cplx(2.0), (0.3f64..3.0, 0.0..std::f64::consts::TAU), cplx(2.0))
        .prop_map(|(b, c, (r, th), e)| Params::new(b, c, Complex64::from_polar(r, th), e).unwrap())
}

fn point(r: f64) -> impl Strategy<Value = AffinePoint> {
    (cplx(r), cplx(r), cplx(r)).prop_map(|(x, y, z)| AffinePoint::new(x, y, z))
}

fn close(a: &AffinePoint, b: &AffinePoint, tol: f64) -> bool {
    (*a - *b).norm_max() <= tol * (1.0 + a.norm_max().max(b.norm_max()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_undoes_apply(p in params(), q in point(5.0)) {
        let back = apply_inverse(&p, &apply(&p, &q).unwrap()).unwrap();
        prop_assert!(close(&back, &q, 1e-10), "{back:?} vs {q:?}");
        let fwd = apply(&p, &apply_inverse(&p, &q).unwrap()).unwrap();
        prop_assert!(close(&fwd, &q, 1e-10));
    }

    #[test]
    fn tau_is_an_involution(q in point(10.0)) {
        prop_assert_eq!(q.tau().tau(), q);
    }

    #[test]
    fn inverse_is_tau_conjugate_of_rescaled_forward_map(p in params(), q in point(5.0)) {
        let (h, s) = p.inverse_conjugate();
        let direct = apply_inverse(&p, &q).unwrap();
        let via = apply(&h, &(q.tau() * s.inv())).unwrap().tau() * s;
        prop_assert!(close(&direct, &via, 1e-9), "{direct:?} vs {via:?}");
        prop_assert!(conjugate_by_tau(&p, &q).unwrap().is_finite());
    }

    #[test]
    fn jacobian_determinant_is_constant(p in params(), q in point(5.0)) {
        let det = det3(&jacobian(&p, &q));
        prop_assert!((det - jacobian_det(&p)).norm() < 1e-12 * (1.0 + q.norm_max()));
        prop_assert!((jacobian_det(&p) - p.d()).norm() < 1e-15);
    }

    #[test]
    fn homogeneous_extension_is_projective(p in params(), q in point(3.0), lam in cplx(3.0)) {
        prop_assume!(lam.norm() > 0.1);
        let h = HomPoint::from_affine(&q);
        let scaled = HomPoint::new(h.x * lam, h.y * lam, h.z * lam, h.t * lam);
        let a = apply_homogeneous(&p, &h).unwrap();
        let b = apply_homogeneous(&p, &scaled).unwrap();
        prop_assert!(a.chordal_distance(&b) < 1e-12);
        let aff = a.to_affine().unwrap();
        prop_assert!(close(&aff, &apply(&p, &q).unwrap(), 1e-12));
    }

    #[test]
    fn chart_maps_commute_with_blowdown(p in params(), route in 0usize..4, w in (cplx(2.0), cplx(2.0), cplx(2.0))) {
        let (input, output) = NATIVE_ROUTES[route];
        let q = ChartPoint::new(input, w.0, w.1, w.2);
        let den = chart_denominator(&p, &q).map_or(f64::INFINITY, |v| v.norm());
        let e = q.e_equation().map_or(f64::INFINITY, |v| v.norm());
        prop_assume!(den > 0.1 && e > 0.1);
        prop_assert!(commutation_residual(&p, &q, output).unwrap() < 1e-10);
    }
}
