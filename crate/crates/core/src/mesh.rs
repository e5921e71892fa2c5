//! Periodic spatial mesh and the coarse/fine temporal mesh pair.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic mesh over one period `(a, a + L]`.
///
/// Nodes are numbered `p = 1..=M` with `x_p = a + p·h`, so `x_M = a + L`
/// stands in for the left endpoint. Grid functions store exactly `M`
/// values; periodicity is index arithmetic only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid<T> {
    a: T,
    length: T,
    nodes: usize,
    h: T,
}

impl<T: Real> SpaceGrid<T> {
    pub fn new(a: T, length: T, nodes: usize) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "left endpoint {a} is not finite"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "period length must be positive and finite, got {length}"
            )));
        }
        if nodes < 3 {
            return Err(Error::InvalidGrid(format!(
                "at least 3 nodes are required for three-point stencils, got {nodes}"
            )));
        }
        let h = length / T::from_usize_lossy(nodes);
        Ok(Self {
            a,
            length,
            nodes,
            h,
        })
    }

    #[inline]
    pub fn a(&self) -> T {
        self.a
    }

    /// Period length `L`.
    #[inline]
    pub fn length(&self) -> T {
        self.length
    }

    /// Node count `M`.
    #[inline]
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Mesh width `h = L/M`.
    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Coordinate `a + p·h` of the 1-based node `p`.
    ///
    /// Computed as `a + L·p/M` so that `x_M = a + L` exactly and nested grids
    /// satisfy `x_p(h) == x_{2p}(h/2)` bit for bit.
    #[inline]
    pub fn x(&self, p: usize) -> T {
        self.a + self.length * T::from_usize_lossy(p) / T::from_usize_lossy(self.nodes)
    }

    /// Coordinates of nodes `1..=M`, in storage order.
    pub fn coordinates(&self) -> Vec<T> {
        (1..=self.nodes).map(|p| self.x(p)).collect()
    }

    /// Storage index (0-based) of the 1-based node label `p`, wrapped modulo `M`.
    #[inline]
    pub fn wrap(&self, p: isize) -> usize {
        let m = self.nodes as isize;
        (p - 1).rem_euclid(m) as usize
    }

    /// Grid with half the mesh width over the same period.
    pub fn refined(&self) -> Self {
        Self::new(self.a, self.length, 2 * self.nodes).expect("refinement of a valid grid is valid")
    }
}

/// Coarse and fine uniform time meshes on `[0, T]` with `N_f = β·N_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGridPair<T> {
    horizon: T,
    coarse_steps: usize,
    ratio: usize,
    tau_c: T,
    tau_f: T,
}

impl<T: Real> TimeGridPair<T> {
    pub fn new(horizon: T, coarse_steps: usize, ratio: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        if coarse_steps == 0 {
            return Err(Error::InvalidParameter(
                "coarse step count must be at least 1".into(),
            ));
        }
        if ratio == 0 {
            return Err(Error::InvalidParameter(
                "temporal step-size ratio must be at least 1".into(),
            ));
        }
        let fine_steps = coarse_steps
            .checked_mul(ratio)
            .ok_or_else(|| Error::InvalidParameter("fine step count overflows".into()))?;
        Ok(Self {
            horizon,
            coarse_steps,
            ratio,
            tau_c: horizon / T::from_usize_lossy(coarse_steps),
            tau_f: horizon / T::from_usize_lossy(fine_steps),
        })
    }

    #[inline]
    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// `N_c`.
    #[inline]
    pub fn coarse_steps(&self) -> usize {
        self.coarse_steps
    }

    /// `N_f = β·N_c`.
    #[inline]
    pub fn fine_steps(&self) -> usize {
        self.coarse_steps * self.ratio
    }

    /// Temporal step-size ratio `β`.
    #[inline]
    pub fn ratio(&self) -> usize {
        self.ratio
    }

    #[inline]
    pub fn tau_c(&self) -> T {
        self.tau_c
    }

    #[inline]
    pub fn tau_f(&self) -> T {
        self.tau_f
    }

    /// `(t_c)_q = q·T/N_c`.
    #[inline]
    pub fn t_coarse(&self, q: usize) -> T {
        self.horizon * T::from_usize_lossy(q) / T::from_usize_lossy(self.coarse_steps)
    }

    /// `(t_f)_k`; at coincident indices `k = qβ` this returns `(t_c)_q` exactly.
    #[inline]
    pub fn t_fine(&self, k: usize) -> T {
        if k.is_multiple_of(self.ratio) {
            self.t_coarse(k / self.ratio)
        } else {
            self.horizon * T::from_usize_lossy(k) / T::from_usize_lossy(self.fine_steps())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_grid_basic() {
        let g = SpaceGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.x(1), 0.5);
        assert_eq!(g.x(4), 2.0);
    }

    #[test]
    fn soliton_grid() {
        let g = SpaceGrid::<f64>::new(-30.0, 60.0, 600).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert_eq!(g.x(600), 30.0);
        assert!((g.h() * 600.0 - 60.0).abs() <= f64::EPSILON * 60.0);
    }

    #[test]
    fn space_grid_rejects_bad_input() {
        assert!(matches!(
            SpaceGrid::new(0.0, 2.0, 2),
            Err(Error::InvalidGrid(_))
        ));
        assert!(SpaceGrid::new(0.0, 0.0, 8).is_err());
        assert!(SpaceGrid::new(0.0, -1.0, 8).is_err());
        assert!(SpaceGrid::new(f64::NAN, 1.0, 8).is_err());
    }

    #[test]
    fn wrap_is_periodic() {
        let g = SpaceGrid::new(0.0, 1.0, 7).unwrap();
        for p in -20isize..20 {
            assert_eq!(g.wrap(p), g.wrap(p + 7));
            assert_eq!(g.wrap(p), g.wrap(p - 7));
        }
        assert_eq!(g.wrap(1), 0);
        assert_eq!(g.wrap(0), 6);
        assert_eq!(g.wrap(8), 0);
    }

    #[test]
    fn refined_nodes_nest() {
        let g = SpaceGrid::new(-30.0, 60.0, 80).unwrap();
        let f = g.refined();
        for p in 1..=80 {
            assert_eq!(g.x(p), f.x(2 * p));
        }
    }

    #[test]
    fn time_grids() {
        let t = TimeGridPair::new(1.0, 8, 2).unwrap();
        assert_eq!(t.tau_c(), 0.125);
        assert_eq!(t.tau_f(), 0.0625);
        assert_eq!(t.fine_steps(), 16);

        let t = TimeGridPair::new(1.0, 5, 1).unwrap();
        assert_eq!(t.tau_c(), t.tau_f());
        assert_eq!(t.tau_c(), 0.2);

        let t = TimeGridPair::<f64>::new(1.0, 10, 4).unwrap();
        for q in 0..=10 {
            assert_eq!(t.t_fine(4 * q), t.t_coarse(q));
        }
        assert!((t.tau_c() - 4.0 * t.tau_f()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn time_grids_reject_bad_input() {
        assert!(TimeGridPair::new(0.0, 8, 2).is_err());
        assert!(TimeGridPair::new(1.0, 0, 2).is_err());
        assert!(TimeGridPair::new(1.0, 8, 0).is_err());
    }

    #[test]
    fn f32_grid() {
        let g = SpaceGrid::<f32>::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.h(), 0.5f32);
    }
}
