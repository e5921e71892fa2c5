use std::f64::consts::PI;

use proptest::prelude::*;
use ttcd_core::diagnostics::{energy_coarse, energy_fine};
use ttcd_core::ops::{delta_xx, norm_l2, norm_max};
use ttcd_core::schemes::initial_level;
use ttcd_core::{
    run_ttcd, solve_ncd, GridFunction, IterationPolicy, LinearSolverKind, PdeParams, SpaceGrid,
    Stepper, TimeGridPair, Trajectory,
};

fn soliton(x: f64) -> f64 {
    let s = 1.0 / (x / 3.0).cosh();
    6f64.sqrt() / 3.0 * s * s
}

fn manufactured(mu: f64, lambda: f64) -> PdeParams<f64> {
    PdeParams::new(mu, lambda, |x: f64| (PI * x).sin())
        .unwrap()
        .with_source(move |x: f64, t: f64| {
            (1.0 + (mu + lambda) * PI * PI) * t.exp() * (PI * x).sin()
                + PI / 2.0 * (2.0 * t).exp() * (2.0 * PI * x).sin()
                + PI * t.exp() * (PI * x).cos()
        })
        .with_exact(|x: f64, t: f64| t.exp() * (PI * x).sin())
}

fn assert_compact_relation(traj: &Trajectory<f64>) {
    let stepper = Stepper::new(traj.grid, PdeParams::new(1.0, 1.0, |_| 0.0).unwrap()).unwrap();
    for level in &traj.levels {
        let scale = norm_max(&delta_xx(&traj.grid, &level.u)).max(1.0);
        assert!(stepper.compact().relation_defect(&level.u, &level.w) <= 1e-11 * scale);
    }
}

#[test]
fn every_level_satisfies_compact_relation() {
    let grid = SpaceGrid::new(-30.0, 60.0, 120).unwrap();
    let params = PdeParams::new(1.0, 0.5, soliton).unwrap();
    let time = TimeGridPair::new(1.0, 10, 3).unwrap();
    let run = run_ttcd(&grid, &params, &time, &IterationPolicy::default()).unwrap();
    assert_compact_relation(&run.coarse);
    assert_compact_relation(&run.fine);
    let compact = Stepper::new(grid, params).unwrap().compact().clone();
    for (u, w) in run.interpolated_u.iter().zip(&run.interpolated_w) {
        assert!(compact.relation_defect(u, w) <= 1e-11 * norm_max(&delta_xx(&grid, u)).max(1.0));
    }
    for q in 0..=10 {
        assert_eq!(run.interpolated_u[3 * q], run.coarse.levels[q].u);
    }
}

#[test]
fn constants_are_preserved() {
    let grid = SpaceGrid::<f64>::new(0.0, 2.0, 24).unwrap();
    let params = PdeParams::new(0.7, 0.3, |_: f64| 1.25).unwrap();
    let time = TimeGridPair::new(1.0, 8, 2).unwrap();
    let run = run_ttcd(&grid, &params, &time, &IterationPolicy::default()).unwrap();
    for traj in [&run.coarse, &run.fine] {
        for level in &traj.levels {
            assert!(level.u.iter().all(|&v| (v - 1.25).abs() <= 1e-13));
            assert!(norm_max(&level.w) <= 1e-12);
        }
    }
}

#[test]
fn soliton_single_step_preserves_coarse_invariant() {
    let grid = SpaceGrid::new(-30.0, 60.0, 600).unwrap();
    let params = PdeParams::new(1.0, 1.0, soliton).unwrap();
    let tau = 1.0 / 1024.0;
    let traj = solve_ncd(&grid, &params, 1, tau, &IterationPolicy::default()).unwrap();
    let e = energy_coarse(&traj, 1.0, 1.0, tau);
    assert!(e.max_rel_drift() <= 1e-10, "{}", e.max_rel_drift());
    assert!((e.values[0] - 2.903703684187).abs() <= 1e-9);
}

#[test]
fn zero_source_runs_conserve_and_stay_bounded() {
    let grid = SpaceGrid::new(-30.0, 60.0, 200).unwrap();
    for (mu, lambda) in [(1.0, 1.0), (0.1, 0.1), (0.01, 0.01)] {
        let params = PdeParams::new(mu, lambda, soliton).unwrap();
        let time = TimeGridPair::new(2.0, 40, 4).unwrap();
        let run = run_ttcd(&grid, &params, &time, &IterationPolicy::default()).unwrap();
        let ec = energy_coarse(&run.coarse, mu, lambda, time.tau_c());
        let ef = energy_fine(&run.fine, mu, lambda, time.tau_f());
        assert!(
            ec.max_rel_drift() <= 1e-8,
            "coarse drift {}",
            ec.max_rel_drift()
        );
        assert!(
            ef.max_rel_drift() <= 1e-10,
            "fine drift {}",
            ef.max_rel_drift()
        );
        for (series, traj) in [(&ec, &run.coarse), (&ef, &run.fine)] {
            let n0 = norm_l2(&grid, &traj.levels[0].u);
            for (e, level) in series.values.iter().zip(&traj.levels) {
                let n = norm_l2(&grid, &level.u);
                assert!(*e >= n * n * (1.0 - 1e-12));
                assert!(n <= n0 * (1.0 + 1e-6) + 1e-14);
            }
        }
    }
}

#[test]
fn ncd_levels_solve_the_nonlinear_equations() {
    let grid = SpaceGrid::new(0.0, 2.0, 64).unwrap();
    let stepper = Stepper::new(grid, manufactured(1.0, 0.01)).unwrap();
    let policy = IterationPolicy::default();
    let tau = 0.05;
    let traj = stepper.solve_ncd(6, tau, &policy).unwrap();
    for l in 1..traj.levels.len() {
        let (prev, next) = (&traj.levels[l - 1], &traj.levels[l]);
        let src = stepper.source_half_step(prev.t, next.t);
        let r = stepper.ncd_residual(prev, next, tau, &src).unwrap();
        assert!(norm_max(&r) <= 10.0 * policy.tol / tau, "{}", norm_max(&r));
    }
}

#[test]
fn fine_levels_solve_the_linearized_equations() {
    let grid = SpaceGrid::new(0.0, 2.0, 64).unwrap();
    let stepper = Stepper::new(grid, manufactured(1.0, 1.0)).unwrap();
    let time = TimeGridPair::new(0.5, 5, 3).unwrap();
    let run =
        ttcd_core::twogrid::run_ttcd_with(&stepper, &time, &IterationPolicy::default()).unwrap();
    for k in 1..=time.fine_steps() {
        let (prev, next) = (&run.fine.levels[k - 1], &run.fine.levels[k]);
        let um = run.interpolated_u[k].midpoint(&run.interpolated_u[k - 1]);
        let wm = run.interpolated_w[k].midpoint(&run.interpolated_w[k - 1]);
        let src = stepper.source_half_step(prev.t, next.t);
        let r = stepper
            .linearized_residual(prev, next, &um, &wm, time.tau_f(), &src)
            .unwrap();
        assert!(norm_max(&r) <= 1e-9, "{}", norm_max(&r));
    }
}

#[test]
fn single_step_local_error_is_third_order() {
    let grid = SpaceGrid::new(0.0, 2.0, 400).unwrap();
    let params = manufactured(1.0, 1.0);
    let stepper = Stepper::new(grid, params).unwrap();
    let l0 = stepper.initial_level().unwrap();
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&tau| {
            let (l1, _) = stepper
                .ncd_step(&l0, tau, &IterationPolicy::default())
                .unwrap();
            let exact = GridFunction::sample(&grid, |x| tau.exp() * (PI * x).sin());
            l1.u.max_abs_diff(&exact)
        })
        .collect();
    for pair in errs.windows(2) {
        let rate = (pair[0] / pair[1]).log2();
        assert!((2.8..=3.2).contains(&rate), "{errs:?}");
    }
}

#[test]
fn single_precision_tracks_double() {
    let grid64 = SpaceGrid::new(-30.0, 60.0, 120).unwrap();
    let grid32 = SpaceGrid::<f32>::new(-30.0, 60.0, 120).unwrap();
    let p64 = PdeParams::new(1.0, 1.0, soliton).unwrap();
    let p32 = PdeParams::new(1.0f32, 1.0, |x: f32| soliton(x as f64) as f32).unwrap();
    let policy32 = IterationPolicy::new(1e-5f32, 200).unwrap();
    let r64 = run_ttcd(
        &grid64,
        &p64,
        &TimeGridPair::new(1.0, 10, 2).unwrap(),
        &IterationPolicy::default(),
    )
    .unwrap();
    let r32 = run_ttcd(
        &grid32,
        &p32,
        &TimeGridPair::new(1.0f32, 10, 2).unwrap(),
        &policy32,
    )
    .unwrap();
    let a = r64.fine.last();
    let b = r32.fine.last();
    for (x, y) in a.u.iter().zip(b.u.iter()) {
        assert!((x - *y as f64).abs() <= 1e-4);
    }
}

#[test]
fn dense_and_block_solvers_give_the_same_run() {
    let grid = SpaceGrid::new(-30.0, 60.0, 40).unwrap();
    let params = PdeParams::new(1.0, 0.1, soliton).unwrap();
    let time = TimeGridPair::new(0.5, 5, 2).unwrap();
    let policy = IterationPolicy::default();
    let block = Stepper::new(grid, params.clone()).unwrap();
    let dense = block.clone().with_solver(LinearSolverKind::DenseLu);
    let a = ttcd_core::twogrid::run_ttcd_with(&block, &time, &policy).unwrap();
    let b = ttcd_core::twogrid::run_ttcd_with(&dense, &time, &policy).unwrap();
    for (x, y) in a.fine.levels.iter().zip(&b.fine.levels) {
        assert!(x.u.max_abs_diff(&y.u) <= 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_smooth_data_conserve_energy(
        amps in prop::collection::vec(-0.5..0.5f64, 3),
        phases in prop::collection::vec(0.0..6.3f64, 3),
        mu in 0.05..2.0f64,
        lambda in 0.01..1.0f64,
        m in 16usize..48,
        beta in 1usize..5,
    ) {
        let l = 8.0;
        let (a2, p2) = (amps.clone(), phases.clone());
        let phi = move |x: f64| {
            a2.iter().zip(&p2).enumerate()
                .map(|(j, (a, p))| a * (2.0 * PI * (j + 1) as f64 * x / l + p).sin())
                .sum::<f64>()
        };
        let grid = SpaceGrid::new(0.0, l, m).unwrap();
        let params = PdeParams::new(mu, lambda, phi).unwrap();
        let time = TimeGridPair::new(0.5, 5, beta).unwrap();
        let run = run_ttcd(&grid, &params, &time, &IterationPolicy::default()).unwrap();
        let ec = energy_coarse(&run.coarse, mu, lambda, time.tau_c());
        let ef = energy_fine(&run.fine, mu, lambda, time.tau_f());
        let scale = ec.values[0].max(1e-3);
        prop_assert!(ec.max_abs_drift() <= 1e-8 * scale);
        prop_assert!(ef.max_abs_drift() <= 1e-10 * scale);
        let e0 = initial_level(&grid, &params).unwrap();
        prop_assert_eq!(&run.fine.levels[0], &e0);
    }
}
