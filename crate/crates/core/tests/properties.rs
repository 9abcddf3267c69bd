use attractor_sos::geometry::{dv_metric, mc_volume};
use attractor_sos::poly::{lie_derivative, monomial_basis, Polynomial};
use attractor_sos::sdp::{parse_sdp_text, write_sdp_text, SdpProblem, SolverSettings, VarRef};
use attractor_sos::soscomp::{gram_polynomial, sos_feasibility};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn poly(n: usize, d: u32) -> impl Strategy<Value = Polynomial> {
    let basis = monomial_basis(n, d);
    prop::collection::vec(-2.0f64..2.0, basis.len()).prop_map(move |c| Polynomial::from_coefficients(n, &basis, &c))
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_operations_commute_with_evaluation(p in poly(2, 3), q in poly(2, 3), x in point(2)) {
        let tol = 1e-9 * (1.0 + p.eval(&x).abs() * q.eval(&x).abs());
        prop_assert!(((&p + &q).eval(&x) - (p.eval(&x) + q.eval(&x))).abs() < tol);
        prop_assert!(((&p * &q).eval(&x) - p.eval(&x) * q.eval(&x)).abs() < tol);
    }

    #[test]
    fn lie_derivative_matches_directional_difference(v in poly(2, 4), f1 in poly(2, 2), f2 in poly(2, 2), x in point(2)) {
        let f = vec![f1, f2];
        let lv = lie_derivative(&v, &f).unwrap().eval(&x);
        let dir: Vec<f64> = f.iter().map(|fi| fi.eval(&x)).collect();
        let h = 1e-6;
        let shift = |s: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        let fd = (v.eval(&shift(h)) - v.eval(&shift(-h))) / (2.0 * h);
        prop_assert!((lv - fd).abs() < 1e-4 * (1.0 + lv.abs()), "{lv} vs {fd}");
    }

    #[test]
    fn sdp_text_round_trip(n in 1usize..4, m in 1usize..5, seed in 0u64..1000) {
        let mut p = SdpProblem::default();
        let b = p.add_block(n);
        let f = p.add_free(1);
        let mut val = seed as f64 * 0.37;
        let mut next = || { val = (val * 1.7 + 0.31) % 3.0 - 1.5; val };
        for _ in 0..m {
            let entries = vec![(VarRef::entry(b, 0, n - 1), next()), (VarRef::Free(f), next())];
            p.add_constraint(entries, next());
        }
        p.objective = vec![(VarRef::entry(b, 0, 0), next())];
        let back = parse_sdp_text(&write_sdp_text(&p)).unwrap();
        prop_assert_eq!(back, p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gram_expansions_are_certified(c in prop::collection::vec(-1.0f64..1.0, 9)) {
        let a = DMatrix::from_row_slice(3, 3, &c);
        let q = &a * a.transpose() + DMatrix::identity(3, 3) * 0.1;
        let basis = monomial_basis(2, 1);
        let p = gram_polynomial(&basis, &q);
        let r = sos_feasibility(&p, &SolverSettings::default()).unwrap();
        let cert = r.certificate.expect("PSD Gram input must be certified");
        prop_assert!(cert.is_sos(1e-8));
        prop_assert!(r.coefficient_error < 1e-6);
    }

    #[test]
    fn dv_is_a_symmetric_premetric(r1 in 0.1f64..1.0, r2 in 0.1f64..1.0, seed in 0u64..100) {
        let bbox = [[-1.0, 1.0], [-1.0, 1.0]];
        let disk = |r: f64| move |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= r * r;
        let ab = dv_metric(disk(r1), disk(r2), &bbox, 20_000, seed, false);
        let ba = dv_metric(disk(r2), disk(r1), &bbox, 20_000, seed, false);
        prop_assert_eq!(ab.dv.value, ba.dv.value);
        prop_assert_eq!(dv_metric(disk(r1), disk(r1), &bbox, 20_000, seed, false).dv.value, 0.0);
        let v1 = mc_volume(disk(r1), &bbox, 20_000, seed);
        prop_assert_eq!(v1.value, ab.volume_a.value);
    }
}
