//! Fourth-order compact relation `(I + (h²/12)δxx) w = δxx u`.

use crate::error::Result;
use crate::linsolve::{CyclicTridiagonal, CyclicTridiagonalFactor};
use crate::mesh::SpaceGrid;
use crate::ops::{check_len, delta_xx, GridFunction};
use crate::scalar::Real;

/// The compact operator `A = I + (h²/12)δxx` on one grid, with its
/// factorization computed once and shared by every time level.
#[derive(Debug, Clone)]
pub struct CompactOperator<T> {
    grid: SpaceGrid<T>,
    matrix: CyclicTridiagonal<T>,
    factor: CyclicTridiagonalFactor<T>,
}

impl<T: Real> CompactOperator<T> {
    pub fn new(grid: SpaceGrid<T>) -> Result<Self> {
        let off = T::lit(1.0 / 12.0);
        let mid = T::lit(5.0 / 6.0);
        let matrix = CyclicTridiagonal::circulant(grid.nodes(), off, mid, off)?;
        let factor = matrix.factor()?;
        Ok(Self {
            grid,
            matrix,
            factor,
        })
    }

    pub fn grid(&self) -> &SpaceGrid<T> {
        &self.grid
    }

    pub fn matrix(&self) -> &CyclicTridiagonal<T> {
        &self.matrix
    }

    /// Eigenvalue `1 − (1/3)sin²(jπ/M)` of `A` for Fourier mode `j`.
    pub fn eigenvalue(&self, j: usize) -> T {
        let s = (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(self.grid.nodes())).sin();
        T::one() - s * s / T::lit(3.0)
    }

    /// `w + (h²/12)δxx w`.
    pub fn apply_a(&self, w: &GridFunction<T>) -> GridFunction<T> {
        GridFunction::from_vec(self.matrix.apply(w.as_slice()))
    }

    /// Solves `A x = rhs` with the cached factorization.
    pub fn solve(&self, rhs: &GridFunction<T>) -> Result<GridFunction<T>> {
        check_len(&self.grid, rhs)?;
        let mut x = rhs.clone().into_vec();
        self.factor.solve_in_place(&mut x);
        Ok(GridFunction::from_vec(x))
    }

    /// The compact second derivative `w = A⁻¹ δxx u`.
    pub fn second_derivative(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        check_len(&self.grid, u)?;
        self.solve(&delta_xx(&self.grid, u))
    }

    /// `max_p |(A w − δxx u)_p|`, the defect of the compact relation.
    pub fn relation_defect(&self, u: &GridFunction<T>, w: &GridFunction<T>) -> T {
        self.apply_a(w).max_abs_diff(&delta_xx(&self.grid, u))
    }
}
