use proptest::prelude::*;
use ttcd_core::linsolve::*;

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1e-300);
    num / den
}

fn cyclic_system() -> impl Strategy<Value = (CyclicTridiagonal<f64>, Vec<f64>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(2.5..4.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
            .prop_map(|(sub, diag, sup, signs, rhs)| {
                let diag = diag
                    .iter()
                    .zip(signs)
                    .map(|(d, s)| if s { *d } else { -d })
                    .collect();
                (CyclicTridiagonal::new(sub, diag, sup).unwrap(), rhs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cyclic_matches_dense_lu((a, rhs) in cyclic_system()) {
        let x = solve_cyclic_tridiagonal(&a, &rhs).unwrap();
        let y = solve_dense_lu(&a.to_dense(), &rhs).unwrap();
        prop_assert!(rel_diff(&x, &y) <= 1e-10);
        let ax = a.apply(&x);
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let res = ax.iter().zip(&rhs).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(res <= 1e-12 * (a.norm_inf() * xn + bn));
    }

    #[test]
    fn block_matches_dense_lu(
        n in 3usize..30,
        seed in prop::collection::vec(-1.0..1.0f64, 12 * 30),
        rhs in prop::collection::vec(-5.0..5.0f64, 60),
    ) {
        let mut sys = BlockCyclicTridiagonal::zeros(n);
        let mut it = seed.iter().copied();
        let mut next = || it.next().unwrap();
        for i in 0..n {
            sys.lower[i] = [[next(), next()], [next(), next()]];
            sys.upper[i] = [[next(), next()], [next(), next()]];
            sys.diag[i] = [[6.0 + next(), next()], [next(), -6.0 + next()]];
        }
        let rhs = &rhs[..2 * n];
        let x = sys.solve(rhs).unwrap();
        let y = solve_dense_lu(&sys.to_dense(), rhs).unwrap();
        prop_assert!(rel_diff(&x, &y) <= 1e-10);
    }
}
