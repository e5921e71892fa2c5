//! Periodic difference operators, the skew-symmetric convection operator Ψ,
//! and the discrete inner products and norms on `W_h`.
//!
//! Storage index `i` (0-based) holds node `p = i + 1`. All stencils wrap
//! modulo `M`. Single-argument operators panic on a length mismatch with
//! the grid; binary operators report it as [`Error::GridMismatch`].

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::mesh::SpaceGrid;
use crate::scalar::Real;

/// Real values at the `M` nodes of a periodic grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridFunction<T> {
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![T::zero(); len],
        }
    }

    pub fn constant(len: usize, c: T) -> Self {
        Self {
            values: vec![c; len],
        }
    }

    pub fn from_vec(values: Vec<T>) -> Self {
        Self { values }
    }

    /// Samples `f` at the grid nodes `x_1..x_M`.
    pub fn sample(grid: &SpaceGrid<T>, f: impl Fn(T) -> T) -> Self {
        Self {
            values: (1..=grid.nodes()).map(|p| f(grid.x(p))).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.values.iter()
    }

    /// Value at the 1-based node label `p`, wrapped periodically.
    #[inline]
    pub fn at(&self, p: isize) -> T {
        let m = self.values.len() as isize;
        self.values[(p - 1).rem_euclid(m) as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise combination of two functions of equal length.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.len(), other.len(), "grid function length mismatch");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Half-step average `½(self + other)`.
    pub fn midpoint(&self, other: &Self) -> Self {
        let half = T::lit(0.5);
        self.zip_map(other, |a, b| half * (a + b))
    }

    /// `max_p |self_p − other_p|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len(), "grid function length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Arithmetic mean of the nodal values.
    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.len())
    }
}

impl<T> Index<usize> for GridFunction<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T> IndexMut<usize> for GridFunction<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.values[i]
    }
}

impl<T: Real> Add for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn add(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn sub(self, rhs: Self) -> GridFunction<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn mul(self, rhs: T) -> GridFunction<T> {
        self.map(|a| a * rhs)
    }
}

impl<T: Real> Neg for &GridFunction<T> {
    type Output = GridFunction<T>;
    fn neg(self) -> GridFunction<T> {
        self.map(|a| -a)
    }
}

impl<T> FromIterator<T> for GridFunction<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

#[inline]
fn expect_len<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) {
    assert_eq!(
        w.len(),
        grid.nodes(),
        "grid function has {} values, grid has {} nodes",
        w.len(),
        grid.nodes()
    );
}

pub(crate) fn check_len<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> Result<()> {
    if w.len() != grid.nodes() {
        return Err(Error::GridMismatch {
            expected: grid.nodes(),
            found: w.len(),
        });
    }
    Ok(())
}

/// Applies a three-point periodic stencil `c_- w_{p-1} + c_0 w_p + c_+ w_{p+1}`.
fn stencil<T: Real>(w: &GridFunction<T>, lo: T, mid: T, hi: T) -> GridFunction<T> {
    let v = w.as_slice();
    let m = v.len();
    (0..m)
        .map(|i| {
            let prev = v[(i + m - 1) % m];
            let next = v[(i + 1) % m];
            lo * prev + mid * v[i] + hi * next
        })
        .collect()
}

/// Backward difference: entry `p` holds `δx w_{p−1/2} = (w_p − w_{p−1})/h`.
pub fn delta_x_half<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> GridFunction<T> {
    expect_len(grid, w);
    let inv_h = grid.h().recip();
    stencil(w, -inv_h, inv_h, T::zero())
}

/// Second difference `δxx w_p = (w_{p+1} − 2w_p + w_{p−1})/h²`.
pub fn delta_xx<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> GridFunction<T> {
    expect_len(grid, w);
    let inv_h2 = (grid.h() * grid.h()).recip();
    stencil(w, inv_h2, -T::lit(2.0) * inv_h2, inv_h2)
}

/// Central difference `Δx w_p = (w_{p+1} − w_{p−1})/(2h)`.
pub fn delta_x_central<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> GridFunction<T> {
    expect_len(grid, w);
    let c = (T::lit(2.0) * grid.h()).recip();
    stencil(w, -c, T::zero(), c)
}

/// Skew-symmetric convection operator `Ψ(v, w) = (1/3)[v·Δx w + Δx(v ⊙ w)]`.
pub fn psi<T: Real>(
    grid: &SpaceGrid<T>,
    v: &GridFunction<T>,
    w: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    check_len(grid, v)?;
    check_len(grid, w)?;
    let third = T::lit(1.0 / 3.0);
    let c = (T::lit(2.0) * grid.h()).recip();
    let (vs, ws) = (v.as_slice(), w.as_slice());
    let m = vs.len();
    Ok((0..m)
        .map(|i| {
            let (l, r) = ((i + m - 1) % m, (i + 1) % m);
            let dw = c * (ws[r] - ws[l]);
            let dvw = c * (vs[r] * ws[r] - vs[l] * ws[l]);
            third * (vs[i] * dw + dvw)
        })
        .collect())
}

/// `⟨v, w⟩ = h Σ v_p w_p`.
pub fn inner<T: Real>(grid: &SpaceGrid<T>, v: &GridFunction<T>, w: &GridFunction<T>) -> Result<T> {
    check_len(grid, v)?;
    check_len(grid, w)?;
    Ok(grid.h() * v.iter().zip(w.iter()).map(|(&a, &b)| a * b).sum::<T>())
}

/// `(v, w) = h Σ δx v_{p−1/2} · δx w_{p−1/2}`.
pub fn inner_h1<T: Real>(
    grid: &SpaceGrid<T>,
    v: &GridFunction<T>,
    w: &GridFunction<T>,
) -> Result<T> {
    check_len(grid, v)?;
    check_len(grid, w)?;
    inner(grid, &delta_x_half(grid, v), &delta_x_half(grid, w))
}

/// `‖w‖ = √⟨w, w⟩`.
pub fn norm_l2<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> T {
    expect_len(grid, w);
    (grid.h() * w.iter().map(|&a| a * a).sum::<T>()).sqrt()
}

/// `|w|₁ = √(w, w)`.
pub fn seminorm_h1<T: Real>(grid: &SpaceGrid<T>, w: &GridFunction<T>) -> T {
    norm_l2(grid, &delta_x_half(grid, w))
}

/// `‖w‖_∞ = max_p |w_p|`.
pub fn norm_max<T: Real>(w: &GridFunction<T>) -> T {
    w.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
}
