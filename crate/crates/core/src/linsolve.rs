//! Linear algebra kernels for periodic systems.
//!
//! * [`CyclicTridiagonal`]: scalar periodic tridiagonal matrices, solved by
//!   Thomas elimination with a Sherman–Morrison correction for the two
//!   wrap-around corners. The factorization can be cached and reused.
//! * [`BlockCyclicTridiagonal`]: periodic tridiagonal matrices with 2×2
//!   blocks. The coupled `(u, w)` step systems have exactly this shape when
//!   the unknowns are interleaved node by node.
//! * [`DenseMatrix`]: LU with partial pivoting, the reference path every
//!   structured solver is checked against.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Periodic tridiagonal matrix. Row `i` reads
/// `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1]` with indices modulo `n`,
/// so `sub[0]` is the top-right corner and `sup[n−1]` the bottom-left one.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Real> CyclicTridiagonal<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if sub.len() != n || sup.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "cyclic tridiagonal bands have lengths {}, {}, {}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        if n < 3 {
            return Err(Error::ShapeMismatch(format!(
                "cyclic tridiagonal systems need at least 3 rows, got {n}"
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    /// Constant-coefficient (circulant) periodic tridiagonal matrix.
    pub fn circulant(n: usize, lo: T, mid: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; n], vec![mid; n], vec![hi; n])
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                self.sub[i] * x[(i + n - 1) % n]
                    + self.diag[i] * x[i]
                    + self.sup[i] * x[(i + 1) % n]
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.len();
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            a[(i, (i + n - 1) % n)] += self.sub[i];
            a[(i, i)] += self.diag[i];
            a[(i, (i + 1) % n)] += self.sup[i];
        }
        a
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> T {
        (0..self.len()).fold(T::zero(), |m, i| {
            m.max(self.sub[i].abs() + self.diag[i].abs() + self.sup[i].abs())
        })
    }

    pub fn factor(&self) -> Result<CyclicTridiagonalFactor<T>> {
        CyclicTridiagonalFactor::new(self)
    }
}

/// Cached Thomas/Sherman–Morrison factorization of a [`CyclicTridiagonal`].
///
/// Writing `A = B + u·vᵀ` with `u = (γ, 0, …, 0, α)` and
/// `v = (1, 0, …, 0, β/γ)`, where `α`, `β` are the corners, `B` is an ordinary
/// tridiagonal matrix. We keep the forward-elimination coefficients of `B`,
/// `z = B⁻¹u`, and `1 + vᵀz`.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonalFactor<T> {
    sub: Vec<T>,
    inv_pivot: Vec<T>,
    sup_mod: Vec<T>,
    z: Vec<T>,
    beta_over_gamma: T,
    denom: T,
}

impl<T: Real> CyclicTridiagonalFactor<T> {
    fn new(a: &CyclicTridiagonal<T>) -> Result<Self> {
        let n = a.len();
        let alpha = a.sup[n - 1];
        let beta = a.sub[0];
        let gamma = if a.diag[0] != T::zero() {
            -a.diag[0]
        } else {
            -T::one()
        };

        let mut diag = a.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;

        let mut inv_pivot = vec![T::zero(); n];
        let mut sup_mod = vec![T::zero(); n];
        let mut pivot = diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = diag[i] - a.sub[i] * sup_mod[i - 1];
            }
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::SingularMatrix(format!(
                    "zero pivot in cyclic tridiagonal elimination at row {i}"
                )));
            }
            inv_pivot[i] = pivot.recip();
            if i + 1 < n {
                sup_mod[i] = a.sup[i] * inv_pivot[i];
            }
        }

        let mut f = Self {
            sub: a.sub.clone(),
            inv_pivot,
            sup_mod,
            z: Vec::new(),
            beta_over_gamma: beta / gamma,
            denom: T::one(),
        };
        let mut u = vec![T::zero(); n];
        u[0] = gamma;
        u[n - 1] = alpha;
        f.thomas_in_place(&mut u);
        let denom = T::one() + u[0] + f.beta_over_gamma * u[n - 1];
        let scale = T::one() + u[0].abs() + (f.beta_over_gamma * u[n - 1]).abs();
        if denom.abs() <= T::epsilon() * scale || !denom.is_finite() {
            return Err(Error::SingularMatrix(
                "Sherman–Morrison correction of cyclic tridiagonal matrix is singular".into(),
            ));
        }
        f.z = u;
        f.denom = denom;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    fn thomas_in_place(&self, r: &mut [T]) {
        let n = r.len();
        r[0] *= self.inv_pivot[0];
        for i in 1..n {
            r[i] = (r[i] - self.sub[i] * r[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            r[i] = r[i] - self.sup_mod[i] * r[i + 1];
        }
    }

    /// Solves `A x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [T]) {
        assert_eq!(rhs.len(), self.len(), "right-hand side length mismatch");
        let n = rhs.len();
        self.thomas_in_place(rhs);
        let fact = (rhs[0] + self.beta_over_gamma * rhs[n - 1]) / self.denom;
        for (x, &z) in rhs.iter_mut().zip(&self.z) {
            *x -= fact * z;
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// One-shot periodic tridiagonal solve.
pub fn solve_cyclic_tridiagonal<T: Real>(a: &CyclicTridiagonal<T>, rhs: &[T]) -> Result<Vec<T>> {
    if rhs.len() != a.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.len(),
            rhs.len()
        )));
    }
    Ok(a.factor()?.solve(rhs))
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            a[(i, i)] = T::one();
        }
        a
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("dense matrix must be square".into()));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> T {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().map(|a| a.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// LU factorization with partial (row) pivoting.
    pub fn lu(&self) -> Result<LuFactor<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, max) =
                (k..n)
                    .map(|i| (i, a[i * n + k].abs()))
                    .fold(
                        (k, -T::one()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if max == T::zero() || !max.is_finite() {
                return Err(Error::SingularMatrix(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = a[k * n + k].recip();
            for i in k + 1..n {
                let l = a[i * n + k] * inv;
                a[i * n + k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        let akj = a[k * n + j];
                        a[i * n + j] -= l * akj;
                    }
                }
            }
        }
        Ok(LuFactor { n, lu: a, perm })
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone)]
pub struct LuFactor<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Real> LuFactor<T> {
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let s: T = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: T = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Dense LU solve with partial pivoting.
pub fn solve_dense_lu<T: Real>(a: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    if rhs.len() != a.size() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.size(),
            rhs.len()
        )));
    }
    Ok(a.lu()?.solve(rhs))
}

/// 2×2 block, row-major.
pub type Block2<T> = [[T; 2]; 2];

#[inline]
fn inv2<T: Real>(m: &Block2<T>) -> Option<Block2<T>> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
    if det == T::zero() || !det.is_finite() || det.abs() <= T::epsilon() * scale {
        return None;
    }
    let r = det.recip();
    Some([[m[1][1] * r, -m[0][1] * r], [-m[1][0] * r, m[0][0] * r]])
}

#[inline]
fn mul2<T: Real>(a: &Block2<T>, b: &Block2<T>) -> Block2<T> {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
fn sub2<T: Real>(a: &Block2<T>, b: &Block2<T>) -> Block2<T> {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
fn matvec2<T: Real>(a: &Block2<T>, x: [T; 2]) -> [T; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

/// Periodic block tridiagonal matrix with 2×2 blocks.
///
/// Block row `i` reads `lower[i]·X[i−1] + diag[i]·X[i] + upper[i]·X[i+1]`
/// with block indices modulo `n`. Vectors are interleaved:
/// `x[2i]`, `x[2i+1]` are the two components of block `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCyclicTridiagonal<T> {
    pub lower: Vec<Block2<T>>,
    pub diag: Vec<Block2<T>>,
    pub upper: Vec<Block2<T>>,
}

impl<T: Real> BlockCyclicTridiagonal<T> {
    pub fn zeros(n: usize) -> Self {
        let z = [[T::zero(); 2]; 2];
        Self {
            lower: vec![z; n],
            diag: vec![z; n],
            upper: vec![z; n],
        }
    }

    /// Number of block rows.
    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.blocks();
        assert_eq!(x.len(), 2 * n);
        let xb = |i: usize| [x[2 * i], x[2 * i + 1]];
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let a = matvec2(&self.lower[i], xb((i + n - 1) % n));
            let b = matvec2(&self.diag[i], xb(i));
            let c = matvec2(&self.upper[i], xb((i + 1) % n));
            out.push(a[0] + b[0] + c[0]);
            out.push(a[1] + b[1] + c[1]);
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.blocks();
        let mut a = DenseMatrix::zeros(2 * n);
        for i in 0..n {
            for (blk, j) in [
                (&self.lower[i], (i + n - 1) % n),
                (&self.diag[i], i),
                (&self.upper[i], (i + 1) % n),
            ] {
                for r in 0..2 {
                    for c in 0..2 {
                        a[(2 * i + r, 2 * j + c)] += blk[r][c];
                    }
                }
            }
        }
        a
    }

    /// Solves the periodic system by bordering: the last block unknown is
    /// eliminated through a block Thomas sweep over the first `n − 1` blocks
    /// carrying the two corner columns as extra right-hand sides, then a 2×2
    /// Schur system fixes it.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.blocks();
        if rhs.len() != 2 * n {
            return Err(Error::ShapeMismatch(format!(
                "block system has {} unknowns, right-hand side has {}",
                2 * n,
                rhs.len()
            )));
        }
        if n < 3 {
            return Err(Error::ShapeMismatch(format!(
                "block cyclic systems need at least 3 block rows, got {n}"
            )));
        }
        let m = n - 1;
        let zero = T::zero();

        // Per interior block: 2 rows × 3 columns (rhs, corner col 0, corner col 1).
        let mut g: Vec<[[T; 3]; 2]> = vec![[[zero; 3]; 2]; m];
        let mut c: Vec<Block2<T>> = vec![[[zero; 2]; 2]; m];
        for (i, gi) in g.iter_mut().enumerate() {
            gi[0][0] = rhs[2 * i];
            gi[1][0] = rhs[2 * i + 1];
        }
        // Coupling of interior rows to X[n−1]: row 0 via lower[0], row m−1 via upper[m−1].
        for r in 0..2 {
            for k in 0..2 {
                g[0][r][1 + k] += self.lower[0][r][k];
                g[m - 1][r][1 + k] += self.upper[m - 1][r][k];
            }
        }

        let singular = |i: usize| {
            Error::SingularMatrix(format!(
                "singular pivot block {i} in block cyclic elimination"
            ))
        };

        let mut s_inv = inv2(&self.diag[0]).ok_or_else(|| singular(0))?;
        g[0] = apply_left(&s_inv, &g[0]);
        c[0] = mul2(&s_inv, &self.upper[0]);
        for i in 1..m {
            let li = &self.lower[i];
            let s = sub2(&self.diag[i], &mul2(li, &c[i - 1]));
            s_inv = inv2(&s).ok_or_else(|| singular(i))?;
            let prev = g[i - 1];
            let mut gi = g[i];
            for r in 0..2 {
                for col in 0..3 {
                    gi[r][col] -= li[r][0] * prev[0][col] + li[r][1] * prev[1][col];
                }
            }
            g[i] = apply_left(&s_inv, &gi);
            c[i] = mul2(&s_inv, &self.upper[i]);
        }
        for i in (0..m - 1).rev() {
            let next = g[i + 1];
            let ci = c[i];
            for r in 0..2 {
                for col in 0..3 {
                    g[i][r][col] -= ci[r][0] * next[0][col] + ci[r][1] * next[1][col];
                }
            }
        }

        // Interior solution is Y − Z·X_last with Y = column 0, Z = columns 1..3.
        let y = |i: usize| [g[i][0][0], g[i][1][0]];
        let z = |i: usize| [[g[i][0][1], g[i][0][2]], [g[i][1][1], g[i][1][2]]];
        let last_l = &self.lower[n - 1];
        let last_u = &self.upper[n - 1];
        let schur = sub2(
            &sub2(&self.diag[n - 1], &mul2(last_l, &z(m - 1))),
            &mul2(last_u, &z(0)),
        );
        let ly = matvec2(last_l, y(m - 1));
        let uy = matvec2(last_u, y(0));
        let b = [rhs[2 * m] - ly[0] - uy[0], rhs[2 * m + 1] - ly[1] - uy[1]];
        let schur_inv = inv2(&schur).ok_or_else(|| singular(n - 1))?;
        let x_last = matvec2(&schur_inv, b);

        let mut x = Vec::with_capacity(2 * n);
        for i in 0..m {
            let zx = matvec2(&z(i), x_last);
            let yi = y(i);
            x.push(yi[0] - zx[0]);
            x.push(yi[1] - zx[1]);
        }
        x.extend_from_slice(&x_last);
        Ok(x)
    }
}

#[inline]
fn apply_left<T: Real>(a: &Block2<T>, g: &[[T; 3]; 2]) -> [[T; 3]; 2] {
    let mut out = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for col in 0..3 {
            out[r][col] = a[r][0] * g[0][col] + a[r][1] * g[1][col];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_ok(ax: &[f64], rhs: &[f64], a_norm: f64, x: &[f64], tol: f64) -> bool {
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = ax
            .iter()
            .zip(rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        r <= tol * (a_norm * xn + bn)
    }

    #[test]
    fn identity_cyclic() {
        let a = CyclicTridiagonal::circulant(5, 0.0, 1.0, 0.0).unwrap();
        let rhs = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve_cyclic_tridiagonal(&a, &rhs).unwrap(), rhs);
    }

    #[test]
    fn random_cyclic_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            let sub: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sup: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n)
                .map(|i| 2.5 + sub[i].abs() + sup[i].abs() + rng.gen_range(0.0..1.0))
                .collect();
            let a = CyclicTridiagonal::new(sub, diag, sup).unwrap();
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let x = solve_cyclic_tridiagonal(&a, &rhs).unwrap();
            let y = solve_dense_lu(&a.to_dense(), &rhs).unwrap();
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-11);
            }
            assert!(residual_ok(&a.apply(&x), &rhs, a.norm_inf(), &x, 1e-12));
        }
    }

    #[test]
    fn singular_cyclic_detected() {
        // Circulant [1 −2 1]: the discrete Laplacian, which annihilates constants.
        let a = CyclicTridiagonal::circulant(6, 1.0, -2.0, 1.0).unwrap();
        assert!(matches!(a.factor(), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn shape_errors() {
        assert!(CyclicTridiagonal::new(vec![0.0; 3], vec![1.0; 4], vec![0.0; 4]).is_err());
        assert!(CyclicTridiagonal::circulant(2, 0.0, 1.0, 0.0).is_err());
        let a = CyclicTridiagonal::circulant(4, 0.0, 1.0, 0.0).unwrap();
        assert!(solve_cyclic_tridiagonal(&a, &[1.0; 3]).is_err());
    }

    #[test]
    fn dense_small_cases() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(solve_dense_lu(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);

        // Cyclic permutation: (Px)_i = x_{i+1}.
        let n = 5;
        let mut p = DenseMatrix::zeros(n);
        for i in 0..n {
            p[(i, (i + 1) % n)] = 1.0;
        }
        let rhs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x = solve_dense_lu(&p, &rhs).unwrap();
        assert_eq!(p.apply(&x), rhs);
        assert_eq!(x, vec![5.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn dense_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_dense_lu(&a, &[1.0, 1.0]),
            Err(Error::SingularMatrix(_))
        ));
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0]]).is_err());
    }

    #[test]
    fn dense_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            a[(i, i)] += n as f64;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_dense_lu(&a, &rhs).unwrap();
        assert!(residual_ok(&a.apply(&x), &rhs, a.norm_inf(), &x, 1e-11));
    }

    fn random_block(rng: &mut ChaCha8Rng, scale: f64) -> Block2<f64> {
        [
            [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)],
            [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)],
        ]
    }

    #[test]
    fn block_cyclic_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(3..30);
            let mut a = BlockCyclicTridiagonal::zeros(n);
            for i in 0..n {
                a.lower[i] = random_block(&mut rng, 1.0);
                a.upper[i] = random_block(&mut rng, 1.0);
                let mut d = random_block(&mut rng, 1.0);
                d[0][0] += 6.0;
                d[1][1] += 6.0;
                a.diag[i] = d;
            }
            let rhs: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = a.solve(&rhs).unwrap();
            let dense = a.to_dense();
            let y = solve_dense_lu(&dense, &rhs).unwrap();
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() < 1e-10 * (1.0 + q.abs()), "{p} vs {q}");
            }
            assert!(residual_ok(&a.apply(&x), &rhs, dense.norm_inf(), &x, 1e-12));
        }
    }

    #[test]
    fn block_cyclic_singular() {
        let mut a = BlockCyclicTridiagonal::<f64>::zeros(4);
        for i in 0..4 {
            a.diag[i] = [[1.0, 0.0], [0.0, 1.0]];
        }
        a.diag[0] = [[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(a.solve(&[1.0; 8]), Err(Error::SingularMatrix(_))));
    }
}
