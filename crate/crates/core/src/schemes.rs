//! Crank–Nicolson compact time steppers.
//!
//! Both schemes advance the pair `(u, w)`, where `w` is the compact second
//! derivative of `u`. Each step solves a single linear system of size `2M`
//! in the interleaved unknowns `(u_1, w_1, …, u_M, w_M)`:
//!
//! * the *u-row* is the discretized evolution equation at `t_{l−1/2}`,
//! * the *w-row* is the compact relation `A w = δxx u` at `t_l`.
//!
//! The nonlinear (NCD) step iterates such systems with the convection terms
//! split between the previous iterate and the unknown; the linearized step
//! of the two-grid method freezes the convection coefficients and solves
//! once.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::compact::CompactOperator;
use crate::error::{Error, Result};
use crate::linsolve::{solve_dense_lu, BlockCyclicTridiagonal};
use crate::mesh::SpaceGrid;
use crate::ops::{delta_x_central, norm_max, psi, GridFunction};
use crate::scalar::Real;

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type SpaceTimeFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// How a time-dependent source enters the half-step equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceSampling {
    /// `(f(·, t_{l−1}) + f(·, t_l)) / 2`.
    #[default]
    EndpointAverage,
    /// `f(·, t_{l−1/2})`.
    Midpoint,
}

/// Equation coefficients and data: dispersion `μ`, viscosity `λ`, initial
/// condition `φ`, and optionally a source `f(x, t)` and exact solution.
#[derive(Clone)]
pub struct PdeParams<T> {
    pub mu: T,
    pub lambda: T,
    phi: ScalarFn<T>,
    source: Option<SpaceTimeFn<T>>,
    exact: Option<SpaceTimeFn<T>>,
    pub sampling: SourceSampling,
}

impl<T: Real> PdeParams<T> {
    pub fn new(mu: T, lambda: T, phi: impl Fn(T) -> T + Send + Sync + 'static) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            mu,
            lambda,
            phi: Arc::new(phi),
            source: None,
            exact: None,
            sampling: SourceSampling::default(),
        })
    }

    pub fn with_source(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    pub fn with_sampling(mut self, sampling: SourceSampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_exact(mut self, u: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(u));
        self
    }

    /// Same problem with the initial condition replaced by `φ + ζ`.
    pub fn with_initial_perturbation(&self, zeta: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        let phi = self.phi.clone();
        let mut out = self.clone();
        out.phi = Arc::new(move |x| phi(x) + zeta(x));
        out.exact = None;
        out
    }

    /// Same problem with the source replaced by `f + r`.
    pub fn with_source_perturbation(&self, r: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        let base = self.source.clone();
        let mut out = self.clone();
        out.source = Some(Arc::new(move |x, t| {
            base.as_ref().map_or(T::zero(), |f| f(x, t)) + r(x, t)
        }));
        out.exact = None;
        out
    }

    #[inline]
    pub fn phi(&self, x: T) -> T {
        (self.phi)(x)
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    pub fn source(&self, x: T, t: T) -> T {
        self.source.as_ref().map_or(T::zero(), |f| f(x, t))
    }

    pub fn exact(&self) -> Option<&SpaceTimeFn<T>> {
        self.exact.as_ref()
    }
}

impl<T: Real> fmt::Debug for PdeParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeParams")
            .field("mu", &self.mu)
            .field("lambda", &self.lambda)
            .field("source", &self.source.is_some())
            .field("exact", &self.exact.is_some())
            .field("sampling", &self.sampling)
            .finish()
    }
}

/// `(u, w)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateLevel<T> {
    pub u: GridFunction<T>,
    pub w: GridFunction<T>,
    pub t: T,
}

impl<T: Real> StateLevel<T> {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            u: GridFunction::zeros(nodes),
            w: GridFunction::zeros(nodes),
            t: T::zero(),
        }
    }
}

/// Stopping rule for the fixed-point iteration of the nonlinear step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationPolicy<T> {
    /// Stop once `max_p |u^{m+1}_p − u^m_p| ≤ tol`.
    pub tol: T,
    pub max_iter: usize,
    /// A step whose `‖u‖_∞` exceeds this is reported as diverged.
    pub divergence_guard: T,
}

impl<T: Real> Default for IterationPolicy<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iter: 200,
            divergence_guard: T::lit(1e8),
        }
    }
}

impl<T: Real> IterationPolicy<T> {
    pub fn new(tol: T, max_iter: usize) -> Result<Self> {
        let p = Self {
            tol,
            max_iter,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "iteration tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if !(self.divergence_guard > T::zero()) {
            return Err(Error::InvalidParameter(
                "divergence guard must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Equally spaced sequence of levels produced by one scheme run.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub grid: SpaceGrid<T>,
    pub tau: T,
    pub levels: Vec<StateLevel<T>>,
    /// Fixed-point iterations per step (all ones for linear steps).
    pub iterations: Vec<usize>,
    pub elapsed: Duration,
}

impl<T: Real> Trajectory<T> {
    /// Number of time steps `N` (levels minus one).
    pub fn steps(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn last(&self) -> &StateLevel<T> {
        self.levels
            .last()
            .expect("trajectory has at least the initial level")
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Which kernel solves the coupled `2M × 2M` step systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolverKind {
    /// O(M) periodic block-tridiagonal elimination.
    #[default]
    BlockCyclic,
    /// Dense LU with partial pivoting, O(M³). Reference path.
    DenseLu,
}

/// Three-point stencil coefficients per node.
struct Stencil<T> {
    lo: Vec<T>,
    mid: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> Stencil<T> {
    fn diagonal(m: usize, c: T) -> Self {
        Self {
            lo: vec![T::zero(); m],
            mid: vec![c; m],
            hi: vec![T::zero(); m],
        }
    }

    fn add_constant(&mut self, lo: T, mid: T, hi: T) {
        for i in 0..self.mid.len() {
            self.lo[i] += lo;
            self.mid[i] += mid;
            self.hi[i] += hi;
        }
    }

    /// Adds `scale · Ψ(a, ·)`, the first argument known.
    fn add_psi_known_first(&mut self, scale: T, a: &GridFunction<T>, h: T) {
        let m = a.len();
        let c = scale / (T::lit(6.0) * h);
        for i in 0..m {
            let (l, r) = ((i + m - 1) % m, (i + 1) % m);
            self.lo[i] -= c * (a[i] + a[l]);
            self.hi[i] += c * (a[i] + a[r]);
        }
    }

    /// Adds `scale · Ψ(·, b)`, the second argument known.
    fn add_psi_known_second(&mut self, scale: T, b: &GridFunction<T>, h: T) {
        let m = b.len();
        let c = scale / (T::lit(6.0) * h);
        for i in 0..m {
            let (l, r) = ((i + m - 1) % m, (i + 1) % m);
            self.lo[i] -= c * b[l];
            self.mid[i] += c * (b[r] - b[l]);
            self.hi[i] += c * b[r];
        }
    }
}

/// Time stepper bound to one grid and one problem.
#[derive(Debug, Clone)]
pub struct Stepper<T: Real> {
    grid: SpaceGrid<T>,
    compact: CompactOperator<T>,
    params: PdeParams<T>,
    solver: LinearSolverKind,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: SpaceGrid<T>, params: PdeParams<T>) -> Result<Self> {
        Ok(Self {
            compact: CompactOperator::new(grid)?,
            grid,
            params,
            solver: LinearSolverKind::default(),
        })
    }

    pub fn with_solver(mut self, solver: LinearSolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn grid(&self) -> &SpaceGrid<T> {
        &self.grid
    }

    pub fn compact(&self) -> &CompactOperator<T> {
        &self.compact
    }

    pub fn params(&self) -> &PdeParams<T> {
        &self.params
    }

    /// `u⁰ = φ(x_p)`, `w⁰ = A⁻¹ δxx u⁰`.
    pub fn initial_level(&self) -> Result<StateLevel<T>> {
        let u = GridFunction::sample(&self.grid, |x| self.params.phi(x));
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "initial condition is not finite at x = {}",
                self.grid.x(i + 1)
            )));
        }
        let w = self.compact.second_derivative(&u)?;
        Ok(StateLevel { u, w, t: T::zero() })
    }

    /// Source sampled at `(x_p, t)`; zero when the problem has none.
    pub fn source_at(&self, t: T) -> GridFunction<T> {
        if self.params.has_source() {
            GridFunction::sample(&self.grid, |x| self.params.source(x, t))
        } else {
            GridFunction::zeros(self.grid.nodes())
        }
    }

    /// Source for the step from `t0` to `t1`, sampled per [`SourceSampling`].
    pub fn source_half_step(&self, t0: T, t1: T) -> GridFunction<T> {
        let half = T::lit(0.5);
        match self.params.sampling {
            _ if !self.params.has_source() => GridFunction::zeros(self.grid.nodes()),
            SourceSampling::EndpointAverage => GridFunction::sample(&self.grid, |x| {
                half * (self.params.source(x, t0) + self.params.source(x, t1))
            }),
            SourceSampling::Midpoint => self.source_at(half * (t0 + t1)),
        }
    }

    /// Per-step sources for a march through consecutive steps; the average
    /// reuses the sample at the shared endpoint.
    pub fn source_steps(&self) -> SourceSteps<'_, T> {
        SourceSteps {
            stepper: self,
            last: None,
        }
    }

    fn check_level(&self, level: &StateLevel<T>) -> Result<()> {
        crate::ops::check_len(&self.grid, &level.u)?;
        crate::ops::check_len(&self.grid, &level.w)
    }

    /// Assembles the block system from the u-row couplings and solves it.
    /// Rows are scaled by `τ` (u-row) and `h²` (w-row).
    fn solve_coupled(
        &self,
        uu: Stencil<T>,
        uw: Stencil<T>,
        rhs_u: GridFunction<T>,
        tau: T,
        start: &StateLevel<T>,
    ) -> Result<(GridFunction<T>, GridFunction<T>)> {
        let m = self.grid.nodes();
        let h = self.grid.h();
        let h2 = h * h;
        let mut sys = BlockCyclicTridiagonal::zeros(m);
        let (w_off, w_mid) = (h2 / T::lit(12.0), h2 * T::lit(5.0 / 6.0));
        let mut rhs = Vec::with_capacity(2 * m);
        for i in 0..m {
            sys.lower[i] = [[tau * uu.lo[i], tau * uw.lo[i]], [-T::one(), w_off]];
            sys.diag[i] = [[tau * uu.mid[i], tau * uw.mid[i]], [T::lit(2.0), w_mid]];
            sys.upper[i] = [[tau * uu.hi[i], tau * uw.hi[i]], [-T::one(), w_off]];
            rhs.push(tau * rhs_u[i]);
            rhs.push(T::zero());
        }
        // Solve for the correction to `start`, which already satisfies the
        // compact relation; its w-row defect is taken as exactly zero.
        let x0: Vec<T> = (0..m).flat_map(|i| [start.u[i], start.w[i]]).collect();
        let ax0 = sys.apply(&x0);
        let defect: Vec<T> = rhs
            .iter()
            .zip(&ax0)
            .enumerate()
            .map(|(j, (&b, &a))| if j % 2 == 0 { b - a } else { T::zero() })
            .collect();
        let dx = match self.solver {
            LinearSolverKind::BlockCyclic => sys.solve(&defect)?,
            LinearSolverKind::DenseLu => solve_dense_lu(&sys.to_dense(), &defect)?,
        };
        let (mut u, mut w) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for (pair, base) in dx.chunks_exact(2).zip(x0.chunks_exact(2)) {
            u.push(base[0] + pair[0]);
            w.push(base[1] + pair[1]);
        }
        Ok((GridFunction::from_vec(u), GridFunction::from_vec(w)))
    }

    /// Part of the right-hand side shared by both schemes: the explicit half
    /// of every linear term plus the source.
    fn linear_rhs(
        &self,
        prev: &StateLevel<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> GridFunction<T> {
        let h2 = self.grid.h() * self.grid.h();
        let (mu, lambda) = (self.params.mu, self.params.lambda);
        let half = T::lit(0.5);
        let dxu = delta_x_central(&self.grid, &prev.u);
        let dxw = delta_x_central(&self.grid, &prev.w);
        let inv_tau = tau.recip();
        let c_dxw = h2 / T::lit(12.0);
        (0..self.grid.nodes())
            .map(|i| {
                inv_tau * prev.u[i] - mu * inv_tau * prev.w[i] - half * dxu[i]
                    + c_dxw * dxw[i]
                    + half * lambda * prev.w[i]
                    + source_mid[i]
            })
            .collect()
    }

    /// Linear-term couplings shared by both schemes on the unknown side.
    fn linear_stencils(&self, tau: T) -> (Stencil<T>, Stencil<T>) {
        let m = self.grid.nodes();
        let h = self.grid.h();
        let (mu, lambda) = (self.params.mu, self.params.lambda);
        let half = T::lit(0.5);
        let inv_2h = (T::lit(2.0) * h).recip();
        let mut uu = Stencil::diagonal(m, tau.recip());
        uu.add_constant(-half * inv_2h, T::zero(), half * inv_2h);
        let mut uw = Stencil::diagonal(m, -mu / tau - half * lambda);
        let c = h * h / T::lit(12.0) * inv_2h;
        uw.add_constant(c, T::zero(), -c);
        (uu, uw)
    }

    /// One fixed-point iterate of the nonlinear step: given `u^{l−1}` (`prev`)
    /// and the current iterate `u^{l,m}` (`guess`), returns `(u^{l,m+1}, w^{l,m+1})`.
    ///
    /// The convection half-step terms are split as
    /// `Ψ(u^{l−1/2}, u^{l−1/2}) ≈ ¼[Ψ(u*, u^m) + Ψ(u*, u⁰) + Ψ(u⁰, u*) + Ψ(u⁰, u⁰)]`
    /// and likewise `Ψ(w^{l−1/2}, u^{l−1/2})` with `w*`, `w⁰` in the first slot,
    /// where `*` marks the unknowns and `⁰` the previous level.
    ///
    /// Both `prev` and `guess` must satisfy the compact relation `A w = δxx u`.
    pub fn picard_iterate(
        &self,
        prev: &StateLevel<T>,
        guess: &StateLevel<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> Result<StateLevel<T>> {
        self.check_level(prev)?;
        crate::ops::check_len(&self.grid, &guess.u)?;
        crate::ops::check_len(&self.grid, &guess.w)?;
        crate::ops::check_len(&self.grid, source_mid)?;
        let h = self.grid.h();
        let h2 = h * h;
        let quarter = T::lit(0.25);
        let eighth_h2 = h2 / T::lit(8.0);

        let b = &guess.u + &prev.u;
        let (mut uu, mut uw) = self.linear_stencils(tau);
        uu.add_psi_known_second(quarter, &b, h);
        uu.add_psi_known_first(quarter, &prev.u, h);
        uu.add_psi_known_first(-eighth_h2, &prev.w, h);
        uw.add_psi_known_second(-eighth_h2, &b, h);

        let mut rhs = self.linear_rhs(prev, tau, source_mid);
        let psi_uu = psi(&self.grid, &prev.u, &prev.u)?;
        let psi_wu = psi(&self.grid, &prev.w, &prev.u)?;
        for i in 0..rhs.len() {
            rhs[i] += -quarter * psi_uu[i] + eighth_h2 * psi_wu[i];
        }

        let (u, w) = self.solve_coupled(uu, uw, rhs, tau, guess)?;
        Ok(StateLevel {
            u,
            w,
            t: prev.t + tau,
        })
    }

    /// Nonlinear compact Crank–Nicolson step, iterated from `u^{l,0} = u^{l−1}`.
    /// Returns the new level and the number of iterations used.
    pub fn ncd_step(
        &self,
        prev: &StateLevel<T>,
        tau: T,
        policy: &IterationPolicy<T>,
    ) -> Result<(StateLevel<T>, usize)> {
        let level = (prev.t / tau).round().to_usize().unwrap_or(0) + 1;
        let src = self.source_half_step(prev.t, prev.t + tau);
        self.ncd_step_at(prev, tau, policy, level, &src)
    }

    fn ncd_step_at(
        &self,
        prev: &StateLevel<T>,
        tau: T,
        policy: &IterationPolicy<T>,
        level: usize,
        src: &GridFunction<T>,
    ) -> Result<(StateLevel<T>, usize)> {
        policy.validate()?;
        let mut guess = prev.clone();
        let mut change = T::infinity();
        for iter in 1..=policy.max_iter {
            let next = self
                .picard_iterate(prev, &guess, tau, src)
                .map_err(|e| match e {
                    Error::SingularMatrix(msg) => Error::SingularMatrix(format!(
                        "{msg} (time level {level}, iteration {iter})"
                    )),
                    e => e,
                })?;
            let size = norm_max(&next.u);
            if !size.is_finite() || size > policy.divergence_guard {
                return Err(Error::Diverged {
                    level,
                    norm: size.to_f64_lossy(),
                    guard: policy.divergence_guard.to_f64_lossy(),
                });
            }
            change = next.u.max_abs_diff(&guess.u);
            guess = next;
            if change <= policy.tol {
                return Ok((guess, iter));
            }
        }
        Err(Error::NonConvergence {
            level,
            iterations: policy.max_iter,
            last_change: change.to_f64_lossy(),
        })
    }

    /// Linearized correction step: the convection coefficients are frozen at
    /// the supplied half-step pair `(ū, w̄)` and the system is solved once.
    pub fn linearized_step(
        &self,
        prev: &StateLevel<T>,
        frozen_u_mid: &GridFunction<T>,
        frozen_w_mid: &GridFunction<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> Result<StateLevel<T>> {
        self.check_level(prev)?;
        crate::ops::check_len(&self.grid, frozen_u_mid)?;
        crate::ops::check_len(&self.grid, frozen_w_mid)?;
        crate::ops::check_len(&self.grid, source_mid)?;
        let h = self.grid.h();
        let half = T::lit(0.5);
        let quarter_h2 = h * h / T::lit(4.0);

        let (mut uu, uw) = self.linear_stencils(tau);
        uu.add_psi_known_first(half, frozen_u_mid, h);
        uu.add_psi_known_first(-quarter_h2, frozen_w_mid, h);

        let mut rhs = self.linear_rhs(prev, tau, source_mid);
        let psi_a = psi(&self.grid, frozen_u_mid, &prev.u)?;
        let psi_c = psi(&self.grid, frozen_w_mid, &prev.u)?;
        for i in 0..rhs.len() {
            rhs[i] += -half * psi_a[i] + quarter_h2 * psi_c[i];
        }

        let (u, w) = self.solve_coupled(uu, uw, rhs, tau, prev)?;
        if !u.is_finite() || !w.is_finite() {
            return Err(Error::NonFinite(
                "linearized step produced non-finite values".into(),
            ));
        }
        Ok(StateLevel {
            u,
            w,
            t: prev.t + tau,
        })
    }

    /// Residual of the nonlinear compact evolution equation between `prev`
    /// and `next`:
    /// `δt u − μ δt w + Ψ(ū, ū) − (h²/2)Ψ(w̄, ū) + Δx ū − (h²/6)Δx w̄ − λ w̄ − f`,
    /// bars denoting half-step averages.
    pub fn ncd_residual(
        &self,
        prev: &StateLevel<T>,
        next: &StateLevel<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> Result<GridFunction<T>> {
        let um = prev.u.midpoint(&next.u);
        let wm = prev.w.midpoint(&next.w);
        self.evolution_residual(prev, next, &um, &wm, &um, tau, source_mid)
    }

    /// Residual of the linearized evolution equation with frozen `(ū_f, w̄_f)`.
    pub fn linearized_residual(
        &self,
        prev: &StateLevel<T>,
        next: &StateLevel<T>,
        frozen_u_mid: &GridFunction<T>,
        frozen_w_mid: &GridFunction<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> Result<GridFunction<T>> {
        let um = prev.u.midpoint(&next.u);
        self.evolution_residual(prev, next, frozen_u_mid, frozen_w_mid, &um, tau, source_mid)
    }

    #[allow(clippy::too_many_arguments)]
    fn evolution_residual(
        &self,
        prev: &StateLevel<T>,
        next: &StateLevel<T>,
        conv_u: &GridFunction<T>,
        conv_w: &GridFunction<T>,
        um: &GridFunction<T>,
        tau: T,
        source_mid: &GridFunction<T>,
    ) -> Result<GridFunction<T>> {
        let g = &self.grid;
        let h2 = g.h() * g.h();
        let (mu, lambda) = (self.params.mu, self.params.lambda);
        let wm = prev.w.midpoint(&next.w);
        let p1 = psi(g, conv_u, um)?;
        let p2 = psi(g, conv_w, um)?;
        let dxu = delta_x_central(g, um);
        let dxw = delta_x_central(g, &wm);
        Ok((0..g.nodes())
            .map(|i| {
                (next.u[i] - prev.u[i]) / tau - mu * (next.w[i] - prev.w[i]) / tau + p1[i]
                    - h2 / T::lit(2.0) * p2[i]
                    + dxu[i]
                    - h2 / T::lit(6.0) * dxw[i]
                    - lambda * wm[i]
                    - source_mid[i]
            })
            .collect())
    }

    /// Runs the nonlinear scheme for `steps` steps of size `tau`.
    pub fn solve_ncd(
        &self,
        steps: usize,
        tau: T,
        policy: &IterationPolicy<T>,
    ) -> Result<Trajectory<T>> {
        if !(tau > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {tau}"
            )));
        }
        policy.validate()?;
        let start = Instant::now();
        let mut levels = Vec::with_capacity(steps + 1);
        let mut iterations = Vec::with_capacity(steps);
        levels.push(self.initial_level()?);
        let mut sources = self.source_steps();
        for l in 1..=steps {
            let t0 = T::from_usize_lossy(l - 1) * tau;
            let src = sources.step(t0, T::from_usize_lossy(l) * tau);
            let (mut next, iters) = self
                .ncd_step_at(&levels[l - 1], tau, policy, l, &src)
                .map_err(|e| e.at_level(l))?;
            next.t = T::from_usize_lossy(l) * tau;
            levels.push(next);
            iterations.push(iters);
        }
        Ok(Trajectory {
            grid: self.grid,
            tau,
            levels,
            iterations,
            elapsed: start.elapsed(),
        })
    }
}

/// Source iterator over consecutive steps; see [`Stepper::source_steps`].
pub struct SourceSteps<'a, T: Real> {
    stepper: &'a Stepper<T>,
    last: Option<(T, GridFunction<T>)>,
}

impl<T: Real> SourceSteps<'_, T> {
    /// Same values as [`Stepper::source_half_step`] for `t0`, `t1`.
    pub fn step(&mut self, t0: T, t1: T) -> GridFunction<T> {
        let s = self.stepper;
        if !s.params.has_source() || s.params.sampling != SourceSampling::EndpointAverage {
            return s.source_half_step(t0, t1);
        }
        let left = match self.last.take() {
            Some((t, f)) if t == t0 => f,
            _ => s.source_at(t0),
        };
        let right = s.source_at(t1);
        let half = T::lit(0.5);
        let avg = left.zip_map(&right, |a, b| half * (a + b));
        self.last = Some((t1, right));
        avg
    }
}

/// `u⁰ = φ(x_p)` with its compact second derivative.
pub fn initial_level<T: Real>(grid: &SpaceGrid<T>, params: &PdeParams<T>) -> Result<StateLevel<T>> {
    Stepper::new(*grid, params.clone())?.initial_level()
}

/// Nonlinear compact scheme over `steps` steps of size `tau`.
pub fn solve_ncd<T: Real>(
    grid: &SpaceGrid<T>,
    params: &PdeParams<T>,
    steps: usize,
    tau: T,
    policy: &IterationPolicy<T>,
) -> Result<Trajectory<T>> {
    Stepper::new(*grid, params.clone())?.solve_ncd(steps, tau, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth_stepper(m: usize) -> Stepper<f64> {
        let grid = SpaceGrid::new(0.0, 2.0, m).unwrap();
        let params = PdeParams::new(1.0, 0.5, |x: f64| {
            (PI * x).sin() + 0.3 * (2.0 * PI * x).cos()
        })
        .unwrap();
        Stepper::new(grid, params).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PdeParams::new(0.0, 1.0, |_x: f64| 0.0).is_err());
        assert!(PdeParams::new(1.0, -1.0, |_x: f64| 0.0).is_err());
        assert!(PdeParams::new(1.0, 1.0, |_x: f64| 0.0).is_ok());
    }

    #[test]
    fn policy_validation() {
        assert!(IterationPolicy::new(0.0, 10).is_err());
        assert!(IterationPolicy::new(1e-12, 0).is_err());
        let p = IterationPolicy::<f64>::default();
        assert_eq!(p.tol, 1e-12);
        assert_eq!(p.max_iter, 200);
    }

    #[test]
    fn zero_initial_condition() {
        let grid = SpaceGrid::new(0.0, 2.0, 16).unwrap();
        let params = PdeParams::new(1.0, 1.0, |_x: f64| 0.0).unwrap();
        let s = Stepper::new(grid, params).unwrap();
        let l0 = s.initial_level().unwrap();
        assert_eq!(norm_max(&l0.u), 0.0);
        assert_eq!(norm_max(&l0.w), 0.0);
        let (l1, iters) = s.ncd_step(&l0, 0.1, &IterationPolicy::default()).unwrap();
        assert_eq!(iters, 1);
        assert_eq!(norm_max(&l1.u), 0.0);
        let src = GridFunction::zeros(16);
        let z = s.linearized_step(&l0, &l0.u, &l0.w, 0.1, &src).unwrap();
        assert_eq!(norm_max(&z.u), 0.0);
        assert_eq!(norm_max(&z.w), 0.0);
    }

    #[test]
    fn non_finite_initial_condition() {
        let grid = SpaceGrid::new(0.0, 2.0, 8).unwrap();
        let params = PdeParams::new(1.0, 1.0, |x: f64| 1.0 / (x - 1.0)).unwrap();
        assert!(matches!(
            initial_level(&grid, &params),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn constant_state_is_fixed() {
        let grid = SpaceGrid::new(0.0, 2.0, 12).unwrap();
        let params = PdeParams::new(1.0, 1.0, |_x: f64| 0.75).unwrap();
        let s = Stepper::new(grid, params).unwrap();
        let l0 = s.initial_level().unwrap();
        let src = GridFunction::zeros(12);
        let it = s.picard_iterate(&l0, &l0, 0.1, &src).unwrap();
        assert!(it.u.max_abs_diff(&l0.u) < 1e-14);
        assert!(norm_max(&it.w) < 1e-12);
    }

    #[test]
    fn picard_reduces_residual() {
        let s = smooth_stepper(16);
        let tau = 0.1;
        let l0 = s.initial_level().unwrap();
        let src = GridFunction::zeros(16);
        let r0 = norm_max(&s.ncd_residual(&l0, &l0, tau, &src).unwrap());
        let l1 = s.picard_iterate(&l0, &l0, tau, &src).unwrap();
        let r1 = norm_max(&s.ncd_residual(&l0, &l1, tau, &src).unwrap());
        assert!(r1 < r0, "{r1} !< {r0}");
    }

    #[test]
    fn ncd_step_satisfies_nonlinear_equations() {
        let s = smooth_stepper(16);
        let tau = 0.05;
        let policy = IterationPolicy::default();
        let l0 = s.initial_level().unwrap();
        let (l1, iters) = s.ncd_step(&l0, tau, &policy).unwrap();
        assert!(iters > 1 && iters < 60);
        let src = GridFunction::zeros(16);
        let r = norm_max(&s.ncd_residual(&l0, &l1, tau, &src).unwrap());
        assert!(r <= 10.0 * policy.tol / tau, "residual {r}");
        let defect = s.compact().relation_defect(&l1.u, &l1.w);
        assert!(defect <= 1e-11 * (1.0 + norm_max(&l1.w)));
    }

    #[test]
    fn linearized_matches_ncd_when_frozen_at_solution() {
        let s = smooth_stepper(16);
        let tau = 0.05;
        let policy = IterationPolicy::default();
        let l0 = s.initial_level().unwrap();
        let (l1, _) = s.ncd_step(&l0, tau, &policy).unwrap();
        let src = GridFunction::zeros(16);
        let um = l0.u.midpoint(&l1.u);
        let wm = l0.w.midpoint(&l1.w);
        let lin = s.linearized_step(&l0, &um, &wm, tau, &src).unwrap();
        assert!(lin.u.max_abs_diff(&l1.u) < 1e-11);
    }

    #[test]
    fn dense_and_block_paths_agree() {
        let s = smooth_stepper(20);
        let d = s.clone().with_solver(LinearSolverKind::DenseLu);
        let tau = 0.1;
        let l0 = s.initial_level().unwrap();
        let src = s.source_half_step(0.0, 0.1);
        let a = s.picard_iterate(&l0, &l0, tau, &src).unwrap();
        let b = d.picard_iterate(&l0, &l0, tau, &src).unwrap();
        assert!(a.u.max_abs_diff(&b.u) < 1e-12);
        assert!(a.w.max_abs_diff(&b.w) < 1e-9);
        let c = s.linearized_step(&l0, &l0.u, &l0.w, tau, &src).unwrap();
        let e = d.linearized_step(&l0, &l0.u, &l0.w, tau, &src).unwrap();
        assert!(c.u.max_abs_diff(&e.u) < 1e-12);
    }

    #[test]
    fn source_sweep_matches_direct_sampling() {
        let grid = SpaceGrid::new(0.0, 2.0, 24).unwrap();
        for sampling in [SourceSampling::EndpointAverage, SourceSampling::Midpoint] {
            let params = PdeParams::new(1.0, 0.5, |x: f64| x.sin())
                .unwrap()
                .with_source(|x, t| (x * t).cos() + t * t)
                .with_sampling(sampling);
            let s = Stepper::new(grid, params).unwrap();
            let mut sweep = s.source_steps();
            let tau = 0.125;
            for k in 1..6 {
                let (t0, t1) = ((k - 1) as f64 * tau, k as f64 * tau);
                assert_eq!(sweep.step(t0, t1), s.source_half_step(t0, t1));
            }
            // A jump in time falls back to a fresh sample.
            assert_eq!(sweep.step(3.0, 3.5), s.source_half_step(3.0, 3.5));
        }
    }

    #[test]
    fn non_convergence_is_an_error() {
        let s = smooth_stepper(16);
        let l0 = s.initial_level().unwrap();
        let policy = IterationPolicy::new(1e-30, 3).unwrap();
        match s.ncd_step(&l0, 0.1, &policy) {
            Err(Error::NonConvergence {
                level, iterations, ..
            }) => {
                assert_eq!(level, 1);
                assert_eq!(iterations, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn divergence_guard() {
        let s = smooth_stepper(16);
        let l0 = s.initial_level().unwrap();
        let policy = IterationPolicy {
            divergence_guard: 1e-3,
            ..IterationPolicy::default()
        };
        assert!(matches!(
            s.ncd_step(&l0, 0.1, &policy),
            Err(Error::Diverged { level: 1, .. })
        ));
    }

    #[test]
    fn solve_ncd_zero_steps() {
        let s = smooth_stepper(16);
        let traj = s.solve_ncd(0, 0.1, &IterationPolicy::default()).unwrap();
        assert_eq!(traj.levels.len(), 1);
        assert_eq!(traj.steps(), 0);
        assert!(traj.iterations.is_empty());
    }

    #[test]
    fn mismatched_levels_rejected() {
        let s = smooth_stepper(16);
        let bad = StateLevel::<f64>::zeros(15);
        let src = GridFunction::zeros(16);
        assert!(matches!(
            s.picard_iterate(&bad, &bad, 0.1, &src),
            Err(Error::GridMismatch { .. })
        ));
    }
}
