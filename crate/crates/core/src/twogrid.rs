//! The temporal two-grid pipeline.
//!
//! 1. Nonlinear compact scheme on the coarse time grid `τ_c`.
//! 2. Linear interpolation of `u` in time onto the fine grid `τ_f = τ_c/β`,
//!    with `w` recomputed from the compact relation at every fine level.
//! 3. One linearized compact step per fine interval, with the convection
//!    coefficients frozen at the half-step averages of the step-2 data.

use std::time::{Duration, Instant};

use crate::compact::CompactOperator;
use crate::error::{Error, Result};
use crate::mesh::{SpaceGrid, TimeGridPair};
use crate::ops::GridFunction;
use crate::scalar::Real;
use crate::schemes::{IterationPolicy, PdeParams, StateLevel, Stepper, Trajectory};

/// Wall-clock time of each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub step1: Duration,
    pub step2: Duration,
    pub step3: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct TtcdRun<T> {
    pub time: TimeGridPair<T>,
    pub coarse: Trajectory<T>,
    pub interpolated_u: Vec<GridFunction<T>>,
    pub interpolated_w: Vec<GridFunction<T>>,
    pub fine: Trajectory<T>,
    pub timings: PhaseTimings,
}

/// Fine-grid values of `u` from the coarse levels: index `(q−1)β + r` holds
/// `(1 − r/β)·u_c^{q−1} + (r/β)·u_c^q`; indices `qβ` are exact copies.
pub fn interpolate_in_time<T: Real>(
    coarse: &Trajectory<T>,
    beta_tau: usize,
) -> Result<Vec<GridFunction<T>>> {
    if beta_tau == 0 {
        return Err(Error::InvalidParameter(
            "temporal step-size ratio must be at least 1".into(),
        ));
    }
    if coarse.levels.is_empty() {
        return Err(Error::ShapeMismatch(
            "coarse trajectory has no levels".into(),
        ));
    }
    let n_c = coarse.steps();
    let beta = T::from_usize_lossy(beta_tau);
    let mut out = Vec::with_capacity(n_c * beta_tau + 1);
    out.push(coarse.levels[0].u.clone());
    for q in 1..=n_c {
        let (a, b) = (&coarse.levels[q - 1].u, &coarse.levels[q].u);
        for r in 1..beta_tau {
            let theta = T::from_usize_lossy(r) / beta;
            out.push(a.zip_map(b, |x, y| (T::one() - theta) * x + theta * y));
        }
        out.push(b.clone());
    }
    Ok(out)
}

/// `w_f^k = A⁻¹ δxx u_f^k` for every fine level.
pub fn lift_w<T: Real>(
    u_f: &[GridFunction<T>],
    compact: &CompactOperator<T>,
) -> Result<Vec<GridFunction<T>>> {
    u_f.iter().map(|u| compact.second_derivative(u)).collect()
}

/// Runs all three phases.
pub fn run_ttcd<T: Real>(
    grid: &SpaceGrid<T>,
    params: &PdeParams<T>,
    time: &TimeGridPair<T>,
    policy: &IterationPolicy<T>,
) -> Result<TtcdRun<T>> {
    let stepper = Stepper::new(*grid, params.clone())?;
    run_ttcd_with(&stepper, time, policy)
}

/// [`run_ttcd`] with a preconfigured stepper.
pub fn run_ttcd_with<T: Real>(
    stepper: &Stepper<T>,
    time: &TimeGridPair<T>,
    policy: &IterationPolicy<T>,
) -> Result<TtcdRun<T>> {
    let start = Instant::now();

    let coarse = stepper
        .solve_ncd(time.coarse_steps(), time.tau_c(), policy)
        .map_err(|e| e.in_phase("step I (coarse nonlinear solve)"))?;
    let t1 = Instant::now();

    let interpolated_u = interpolate_in_time(&coarse, time.ratio())
        .map_err(|e| e.in_phase("step II (temporal interpolation)"))?;
    let interpolated_w = lift_w(&interpolated_u, stepper.compact())
        .map_err(|e| e.in_phase("step II (temporal interpolation)"))?;
    let t2 = Instant::now();

    let fine = fine_correction(stepper, time, &interpolated_u, &interpolated_w)
        .map_err(|e| e.in_phase("step III (linearized fine correction)"))?;
    let t3 = Instant::now();

    let timings = PhaseTimings {
        step1: t1 - start,
        step2: t2 - t1,
        step3: t3 - t2,
        total: t3 - start,
    };
    Ok(TtcdRun {
        time: *time,
        coarse,
        interpolated_u,
        interpolated_w,
        fine,
        timings,
    })
}

fn fine_correction<T: Real>(
    stepper: &Stepper<T>,
    time: &TimeGridPair<T>,
    u_f: &[GridFunction<T>],
    w_f: &[GridFunction<T>],
) -> Result<Trajectory<T>> {
    let start = Instant::now();
    let n_f = time.fine_steps();
    let tau = time.tau_f();
    if u_f.len() != n_f + 1 || w_f.len() != n_f + 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} interpolated levels, got {} and {}",
            n_f + 1,
            u_f.len(),
            w_f.len()
        )));
    }
    let mut levels: Vec<StateLevel<T>> = Vec::with_capacity(n_f + 1);
    levels.push(stepper.initial_level()?);
    let mut sources = stepper.source_steps();
    for k in 1..=n_f {
        let u_mid = u_f[k].midpoint(&u_f[k - 1]);
        let w_mid = w_f[k].midpoint(&w_f[k - 1]);
        let src = sources.step(time.t_fine(k - 1), time.t_fine(k));
        let mut next = stepper
            .linearized_step(&levels[k - 1], &u_mid, &w_mid, tau, &src)
            .map_err(|e| e.at_level(k))?;
        next.t = time.t_fine(k);
        levels.push(next);
    }
    Ok(Trajectory {
        grid: *stepper.grid(),
        tau,
        levels,
        iterations: vec![1; n_f],
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::norm_max;
    use std::f64::consts::PI;

    fn trajectory_from(values: &[Vec<f64>], tau: f64) -> Trajectory<f64> {
        let m = values[0].len();
        let grid = SpaceGrid::new(0.0, 1.0, m).unwrap();
        Trajectory {
            grid,
            tau,
            levels: values
                .iter()
                .enumerate()
                .map(|(q, v)| StateLevel {
                    u: GridFunction::from_vec(v.clone()),
                    w: GridFunction::zeros(m),
                    t: q as f64 * tau,
                })
                .collect(),
            iterations: vec![1; values.len() - 1],
            elapsed: Duration::ZERO,
        }
    }

    #[test]
    fn midpoint_interpolation() {
        let c = trajectory_from(&[vec![1.0; 3], vec![3.0; 3]], 0.5);
        let f = interpolate_in_time(&c, 2).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[1].as_slice(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn ratio_one_copies() {
        let c = trajectory_from(
            &[
                vec![1.0, 2.0, 3.0],
                vec![0.1, 0.2, 0.3],
                vec![5.0, 6.0, 7.0],
            ],
            0.5,
        );
        let f = interpolate_in_time(&c, 1).unwrap();
        assert_eq!(f.len(), 3);
        for (a, b) in f.iter().zip(&c.levels) {
            assert_eq!(a, &b.u);
        }
    }

    #[test]
    fn linear_in_time_is_reproduced() {
        let alpha = [0.3, -1.7, 2.2, 0.9];
        let n_c = 5;
        let tau_c = 0.2;
        let values: Vec<Vec<f64>> = (0..=n_c)
            .map(|q| alpha.iter().map(|a| a * q as f64 * tau_c).collect())
            .collect();
        let c = trajectory_from(&values, tau_c);
        let beta = 4;
        let f = interpolate_in_time(&c, beta).unwrap();
        assert_eq!(f.len(), n_c * beta + 1);
        for (k, level) in f.iter().enumerate() {
            let t = k as f64 * tau_c / beta as f64;
            for (v, a) in level.iter().zip(alpha) {
                assert!((v - a * t).abs() < 1e-14);
            }
        }
        for q in 0..=n_c {
            assert_eq!(f[q * beta], c.levels[q].u);
        }
    }

    #[test]
    fn lift_cases() {
        let grid = SpaceGrid::new(0.0, 2.0, 16).unwrap();
        let compact = CompactOperator::new(grid).unwrap();
        let zeros = vec![GridFunction::zeros(16); 3];
        assert!(lift_w(&zeros, &compact)
            .unwrap()
            .iter()
            .all(|w| norm_max(w) == 0.0));
        let consts: Vec<_> = (0..3)
            .map(|k| GridFunction::constant(16, k as f64))
            .collect();
        assert!(lift_w(&consts, &compact)
            .unwrap()
            .iter()
            .all(|w| norm_max(w) < 1e-12));

        let j = 3;
        let mode = GridFunction::sample(&grid, |x| (PI * j as f64 * x).cos());
        let h = grid.h();
        let s = (PI * j as f64 / 16.0).sin();
        let ratio = -(4.0 / (h * h)) * s * s / compact.eigenvalue(j);
        let w = lift_w(std::slice::from_ref(&mode), &compact).unwrap();
        assert!(w[0].max_abs_diff(&(&mode * ratio)) < 1e-10);
    }

    #[test]
    fn zero_problem_runs_to_zero() {
        let grid = SpaceGrid::new(0.0, 2.0, 12).unwrap();
        let params = PdeParams::new(1.0, 1.0, |_x: f64| 0.0).unwrap();
        let time = TimeGridPair::new(1.0, 4, 3).unwrap();
        let run = run_ttcd(&grid, &params, &time, &IterationPolicy::default()).unwrap();
        assert_eq!(run.fine.levels.len(), 13);
        assert_eq!(run.coarse.levels.len(), 5);
        assert!(run.fine.levels.iter().all(|l| norm_max(&l.u) == 0.0));
    }

    #[test]
    fn zero_ratio_rejected() {
        let c = trajectory_from(&[vec![1.0; 3], vec![3.0; 3]], 0.5);
        assert!(interpolate_in_time(&c, 0).is_err());
    }
}
