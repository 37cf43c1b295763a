use nalgebra::{DMatrix, DVector};
use orecover_core::dominance::{self, DominanceProblem};
use orecover_core::ell1::{self, SdpaProblem};
use orecover_core::linalg::{self, DenseMatrix, RANK_TOL};
use orecover_core::oracle;
use orecover_core::recovery::{self, ProblemSpec, Scenario};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

/// `(n, m, Λ, Q, R, S)` with `m < n` and square `R`, `S`.
fn spec_parts() -> impl Strategy<Value = ProblemSpec> {
    (3usize..=5)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, m)| (matrix(m, n), matrix(n, n), matrix(n, n), matrix(n, n), 0.5f64..2.0, 0.5f64..2.0))
        .prop_filter_map("degenerate draw", |(lambda, q, r, s, eps, eta)| {
            ProblemSpec::new(lambda, q, r, s).and_then(|p| p.with_levels(eps, eta)).ok()
        })
}

fn dominance_triple() -> impl Strategy<Value = DominanceProblem> {
    (2usize..=4)
        .prop_flat_map(|p| (matrix(p, p), matrix(p, p), matrix(p, p)))
        .prop_map(|(a, b, c)| {
            let p = a.nrows();
            let eye = DMatrix::identity(p, p) * 0.1;
            DominanceProblem::new(linalg::gram(&a) + &eye, linalg::gram(&b) + eye, linalg::gram(&c)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_is_convex(problem in dominance_triple(), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let mid = dominance::phi(&problem, 0.5 * (t1 + t2)).unwrap();
        let avg = 0.5 * (dominance::phi(&problem, t1).unwrap() + dominance::phi(&problem, t2).unwrap());
        prop_assert!(mid <= avg + 1e-9 * (1.0 + avg.abs()));
    }

    #[test]
    fn dominance_certificate_is_feasible_and_tight(problem in dominance_triple()) {
        let cert = dominance::sdominance_solve(&problem, 1e-12).unwrap();
        let slack = problem.a() * cert.a_sharp + problem.b() * cert.b_sharp - problem.c();
        let scale = 1.0 + cert.value();
        prop_assert!(linalg::lambda_min(&slack) >= -1e-9 * scale);
        let orc = oracle::sup_quadratic_two_ellipsoids(problem.a(), problem.b(), problem.c(), None, 2_000, 3);
        prop_assert!(orc.best_value <= cert.value() * (1.0 + 1e-9) + 1e-12);
        prop_assert!(orc.best_value >= cert.value() * (1.0 - 1e-3));
    }

    #[test]
    fn optimal_map_interpolates(spec in spec_parts(), y in prop::collection::vec(-2.0f64..2.0, 4)) {
        let cert = recovery::solve_radius(&spec, 1e-12).unwrap();
        let y = DVector::from_iterator(spec.m(), y.into_iter().cycle().take(spec.m()));
        let (f, qf) = cert.map.apply(&y).unwrap();
        prop_assert!((&spec.lambda * &f - &y).amax() <= 1e-9 * (1.0 + y.amax()));
        prop_assert!((&spec.q * &f - qf).amax() <= 1e-9 * (1.0 + f.amax()));
    }

    #[test]
    fn weighted_projections_sum_to_residual_map(spec in spec_parts(), a in 0.1f64..2.0, b in 0.1f64..2.0) {
        let map = recovery::regularization_map(&spec, a, b).unwrap();
        let basis = linalg::orthonormal_nullspace(&spec.lambda, RANK_TOL);
        let r = spec.r_scaled();
        let s = spec.s_scaled();
        let parts = recovery::weighted_projection(&basis, &[(a, &r), (b, &s)]).unwrap();
        let residual = DMatrix::identity(spec.n, spec.n) - &map.d * &spec.lambda;
        prop_assert!((&parts[0] + &parts[1] - residual).amax() < 1e-8);
    }

    #[test]
    fn oracle_is_deterministic(problem in dominance_triple(), seed in 0u64..1000) {
        let r1 = oracle::sup_quadratic_two_ellipsoids(problem.a(), problem.b(), problem.c(), None, 1_000, seed);
        let r2 = oracle::sup_quadratic_two_ellipsoids(problem.a(), problem.b(), problem.c(), None, 1_000, seed);
        prop_assert_eq!(r1.best_value.to_bits(), r2.best_value.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sdpa_round_trip_and_feasible_point(
        (lambda, q, r) in (2usize..=4)
            .prop_flat_map(|n| (1..=n, Just(n), 1..=n))
            .prop_flat_map(|(m, n, q)| (matrix(m, n), matrix(q, n), matrix(n, n))),
        eta in 0.05f64..1.0,
    ) {
        let n = lambda.ncols();
        prop_assume!(linalg::rank(&lambda, 1e-6) == lambda.nrows() && linalg::rank(&r, 1e-6) == n);
        let spec = ProblemSpec {
            n,
            lambda,
            q,
            r,
            s: DMatrix::zeros(0, n),
            epsilon: 1.0,
            eta,
            scenario: Scenario::L1Inaccurate,
        };
        let ws = ell1::solve_lb_all(&spec, 1e-12).unwrap();
        let sdp = ell1::build_sdpa(&spec, &ws).unwrap();
        let text = sdp.to_sdpa_string();
        let back = SdpaProblem::parse(&text).unwrap();
        prop_assert_eq!(back.to_sdpa_string(), text);
        let x = ell1::sdpa_point(&spec, &ws, &ws.maps[ws.k].qd).unwrap();
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(sdp.min_eigenvalue(&x).unwrap() >= -1e-7 * scale);
    }
}
