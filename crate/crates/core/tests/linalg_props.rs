use gladssn::linalg::{
    dot, norm2, residual_target, solve_regularized, sym_part, LinearOperator, Matrix, MatrixFreeOp, Metric,
    SolveMethod, SymMatrix,
};
use proptest::prelude::*;

/// Random symmetric matrix and a shift that makes `H + λI` SPD by
/// Gershgorin's theorem.
fn shifted_system() -> impl Strategy<Value = (SymMatrix, f64, Vec<f64>)> {
    (1usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-10.0f64..10.0, n),
            0.01f64..2.0,
        )
            .prop_map(move |(raw, rhs, margin)| {
                let h = sym_part(&Matrix::from_vec(n, n, raw).unwrap()).unwrap();
                let radius = (0..n)
                    .map(|i| (0..n).map(|j| h[(i, j)].abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                (h, radius + margin, rhs)
            })
    })
}

fn spd_metric(n: usize, seed: &[f64]) -> SymMatrix {
    let g = Matrix::from_vec(n, n, seed.to_vec()).unwrap();
    let mut b = g.t_matmul(&g);
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    SymMatrix::new(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn regularized_solve_meets_residual_target((h, lambda, rhs) in shifted_system()) {
        let op = LinearOperator::Dense(h.clone());
        let sol = solve_regularized(&op, &Metric::Identity, lambda, &rhs).unwrap();
        let mut res = h.matvec(&sol.solution);
        for i in 0..rhs.len() {
            res[i] += lambda * sol.solution[i] - rhs[i];
        }
        let bound = 1e-10 + 1e-12 * norm2(&rhs);
        prop_assert!(norm2(&res) <= bound, "residual {} > {}", norm2(&res), bound);
        prop_assert!(sol.residual <= residual_target(norm2(&rhs)).max(bound));
    }

    #[test]
    fn cholesky_and_minres_agree((h, lambda, rhs) in shifted_system()) {
        let dense = solve_regularized(&LinearOperator::Dense(h.clone()), &Metric::Identity, lambda, &rhs).unwrap();
        prop_assert_eq!(dense.method, SolveMethod::Cholesky);
        let hm = h.clone();
        let free = LinearOperator::MatrixFree(MatrixFreeOp::new(h.n(), move |v, out| hm.matvec_into(v, out)));
        let iterative = solve_regularized(&free, &Metric::Identity, lambda, &rhs).unwrap();
        prop_assert_eq!(iterative.method, SolveMethod::Minres);
        let diff: Vec<f64> = dense.solution.iter().zip(&iterative.solution).map(|(a, b)| a - b).collect();
        let scale = norm2(&dense.solution).max(f64::MIN_POSITIVE);
        prop_assert!(norm2(&diff) <= 1e-8 * scale.max(1e-300) || norm2(&dense.solution) == 0.0,
            "relative gap {}", norm2(&diff) / scale);
    }

    #[test]
    fn dual_pairing_is_tight(
        (n, seed, v) in (1usize..=12).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-5.0f64..5.0, n),
        ))
    ) {
        let b = Metric::spd(spd_metric(n, &seed)).unwrap();
        let bv = b.apply(&v);
        let lhs = b.norm(&v) * b.dual_norm(&bv);
        let vbv = dot(&v, &bv);
        prop_assert!(lhs >= vbv - 1e-10 * vbv.abs().max(1.0));
        prop_assert!((lhs - vbv).abs() <= 1e-10 * vbv.abs().max(1.0));
    }

    #[test]
    fn sym_part_is_idempotent(
        (n, raw) in (1usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(-1e3f64..1e3, n * n)))
    ) {
        let once = sym_part(&Matrix::from_vec(n, n, raw).unwrap()).unwrap();
        let twice = sym_part(once.as_matrix()).unwrap();
        prop_assert_eq!(once, twice);
    }
}
