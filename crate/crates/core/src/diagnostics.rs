//! Discrete invariants, error metrics and convergence rates.

use crate::error::{Error, Result};
use crate::mesh::SpaceGrid;
use crate::ops::{norm_l2, seminorm_h1, GridFunction};
use crate::scalar::Real;
use crate::schemes::Trajectory;

/// Discrete energy per level together with the final accumulated
/// dissipation `2λτ Σ_n Q(u^{n−1/2}, w^{n−1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries<T> {
    pub values: Vec<T>,
    pub dissipation: T,
}

impl<T: Real> EnergySeries<T> {
    /// `max_k |E^k − E^0|`.
    pub fn max_abs_drift(&self) -> T {
        let e0 = self.values.first().copied().unwrap_or(T::zero());
        self.values
            .iter()
            .fold(T::zero(), |m, &e| m.max((e - e0).abs()))
    }

    /// `max_k |E^k − E^0| / |E^0|`, or the absolute drift when `E^0 = 0`.
    pub fn max_rel_drift(&self) -> T {
        let e0 = self.values.first().copied().unwrap_or(T::zero()).abs();
        let d = self.max_abs_drift();
        if e0 > T::zero() {
            d / e0
        } else {
            d
        }
    }
}

/// `|u|₁² + (h²/12)‖w‖² − (h⁴/144)|w|₁²`.
pub fn compact_h1_quadratic<T: Real>(
    grid: &SpaceGrid<T>,
    u: &GridFunction<T>,
    w: &GridFunction<T>,
) -> T {
    let h2 = grid.h() * grid.h();
    let su = seminorm_h1(grid, u);
    let nw = norm_l2(grid, w);
    let sw = seminorm_h1(grid, w);
    su * su + h2 / T::lit(12.0) * nw * nw - h2 * h2 / T::lit(144.0) * sw * sw
}

fn energy<T: Real>(traj: &Trajectory<T>, mu: T, lambda: T, tau: T) -> EnergySeries<T> {
    let grid = &traj.grid;
    let mut values = Vec::with_capacity(traj.levels.len());
    let mut dissipation = T::zero();
    let two = T::lit(2.0);
    for (k, level) in traj.levels.iter().enumerate() {
        if k > 0 {
            let prev = &traj.levels[k - 1];
            let um = prev.u.midpoint(&level.u);
            let wm = prev.w.midpoint(&level.w);
            dissipation += two * lambda * tau * compact_h1_quadratic(grid, &um, &wm);
        }
        let l2 = norm_l2(grid, &level.u);
        values.push(l2 * l2 + mu * compact_h1_quadratic(grid, &level.u, &level.w) + dissipation);
    }
    EnergySeries {
        values,
        dissipation,
    }
}

/// Invariant `E^k` of a fine-grid trajectory with step `τ_f`.
pub fn energy_fine<T: Real>(traj: &Trajectory<T>, mu: T, lambda: T, tau_f: T) -> EnergySeries<T> {
    energy(traj, mu, lambda, tau_f)
}

/// Invariant `Ě^q` of a coarse-grid trajectory with step `τ_c`.
pub fn energy_coarse<T: Real>(traj: &Trajectory<T>, mu: T, lambda: T, tau_c: T) -> EnergySeries<T> {
    energy(traj, mu, lambda, tau_c)
}

/// `max_{p,k} |u_p^k − U(x_p, t_k)|`, level 0 included.
pub fn max_error_vs_exact<T: Real>(traj: &Trajectory<T>, exact: impl Fn(T, T) -> T) -> T {
    let grid = &traj.grid;
    traj.levels.iter().fold(T::zero(), |m, level| {
        level.u.iter().enumerate().fold(m, |m, (i, &v)| {
            m.max((v - exact(grid.x(i + 1), level.t)).abs())
        })
    })
}

/// `max_{p,k} |u_p^k(τ) − u_p^{2k}(τ/2)|`.
pub fn self_error_time<T: Real>(
    coarse_run: &Trajectory<T>,
    refined_run: &Trajectory<T>,
) -> Result<T> {
    let n = coarse_run.steps();
    if refined_run.steps() != 2 * n {
        return Err(Error::ShapeMismatch(format!(
            "refined run has {} steps, expected {}",
            refined_run.steps(),
            2 * n
        )));
    }
    if coarse_run.grid.nodes() != refined_run.grid.nodes() {
        return Err(Error::ShapeMismatch(
            "runs use different spatial grids".into(),
        ));
    }
    Ok((0..=n).fold(T::zero(), |m, k| {
        m.max(
            coarse_run.levels[k]
                .u
                .max_abs_diff(&refined_run.levels[2 * k].u),
        )
    }))
}

/// `max_{p,k} |u_p^k(h) − u_{2p}^k(h/2)|`.
pub fn self_error_space<T: Real>(run_h: &Trajectory<T>, run_h_half: &Trajectory<T>) -> Result<T> {
    if run_h.levels.len() != run_h_half.levels.len() {
        return Err(Error::ShapeMismatch(format!(
            "runs have {} and {} levels",
            run_h.levels.len(),
            run_h_half.levels.len()
        )));
    }
    let m = run_h.grid.nodes();
    if run_h_half.grid.nodes() != 2 * m {
        return Err(Error::ShapeMismatch(format!(
            "refined grid has {} nodes, expected {}",
            run_h_half.grid.nodes(),
            2 * m
        )));
    }
    Ok(run_h
        .levels
        .iter()
        .zip(&run_h_half.levels)
        .fold(T::zero(), |acc, (a, b)| {
            (0..m).fold(acc, |acc, i| acc.max((a.u[i] - b.u[2 * i + 1]).abs()))
        }))
}

/// Observed orders `log₂(e_i / e_{i+1})` for a 2:1 refinement ladder.
pub fn rates<T: Real>(errors: &[T]) -> Result<Vec<T>> {
    if let Some(e) = errors.iter().find(|e| !(**e > T::zero()) || !e.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "convergence rates need positive finite errors, got {e}"
        )));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// `max_k ‖u_pert^k − u_base^k‖` in the discrete L² norm.
pub fn perturbation_response<T: Real>(
    base: &Trajectory<T>,
    perturbed: &Trajectory<T>,
) -> Result<T> {
    check_same_shape(base, perturbed)?;
    Ok(base
        .levels
        .iter()
        .zip(&perturbed.levels)
        .fold(T::zero(), |m, (a, b)| {
            m.max(norm_l2(&base.grid, &(&b.u - &a.u)))
        }))
}

/// `max_k ‖u_a^k − u_b^k‖_∞`.
pub fn max_level_difference<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<T> {
    check_same_shape(a, b)?;
    Ok(a.levels
        .iter()
        .zip(&b.levels)
        .fold(T::zero(), |m, (x, y)| m.max(x.u.max_abs_diff(&y.u))))
}

fn check_same_shape<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> Result<()> {
    if a.levels.len() != b.levels.len() || a.grid.nodes() != b.grid.nodes() {
        return Err(Error::ShapeMismatch(format!(
            "trajectories differ in shape: {}×{} vs {}×{}",
            a.levels.len(),
            a.grid.nodes(),
            b.levels.len(),
            b.grid.nodes()
        )));
    }
    Ok(())
}
