//! Dense kernels: packed lower-triangular storage, Cholesky factorization,
//! triangular solves on leading blocks, and a small pivoted LU solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Lower-triangular (or symmetric, lower half) `n x n` matrix stored row by
/// row: row `i` holds columns `0..=i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedLower {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; row_start(n)],
        }
    }

    /// Builds the lower half from `f(i, j)` for `j <= i`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(row_start(n));
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = row_start(i);
        &self.data[s..s + i + 1]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let s = row_start(i);
        &mut self.data[s..s + i + 1]
    }

    /// Entry `(i, j)` of the lower triangle; `j <= i`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[row_start(i) + j]
    }

    /// Entry `(i, j)` reading the matrix as symmetric.
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.get(i, j)
        } else {
            self.get(j, i)
        }
    }

    /// `y = A x` with `A` read as symmetric, restricted to the leading
    /// `x.len()` block.
    pub fn sym_mul(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let mut y = vec![0.0; m];
        for i in 0..m {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..i {
                acc += row[j] * x[j];
                y[j] += row[j] * x[i];
            }
            acc += row[i] * x[i];
            y[i] += acc;
        }
        y
    }

    /// `y = L x` with `L` lower triangular, restricted to the leading
    /// `x.len()` block.
    pub fn lower_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| dot(self.row(i), &x[..=i])).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor `L` of a symmetric positive definite matrix, `A = L L^T`.
///
/// The leading `m x m` block of `L` factors the leading `m x m` block of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: PackedLower,
}

/// Pivots below this fraction of the original diagonal are rejected.
const PIVOT_RTOL: f64 = 1e-12;

impl Cholesky {
    /// Factors `a` (lower half of a symmetric matrix) in place.
    pub fn factor(mut a: PackedLower) -> Result<Self> {
        let n = a.n;
        for i in 0..n {
            let si = row_start(i);
            for j in 0..=i {
                let sj = row_start(j);
                let s = a.data[si + j] - dot(&a.data[si..si + j], &a.data[sj..sj + j]);
                if i == j {
                    let diag = a.data[si + i];
                    if !(s > PIVOT_RTOL * diag.abs()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    a.data[si + i] = libm::sqrt(s);
                } else {
                    a.data[si + j] = s / a.data[sj + j];
                }
            }
        }
        Ok(Self { lower: a })
    }

    pub fn dim(&self) -> usize {
        self.lower.n
    }

    pub fn lower(&self) -> &PackedLower {
        &self.lower
    }

    /// Solves `L_m y = b` on the leading block `m = b.len()`.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(b.len());
        for (i, &bi) in b.iter().enumerate() {
            let row = self.lower.row(i);
            let s = bi - dot(&row[..i], &y);
            y.push(s / row[i]);
        }
        y
    }

    /// Solves `L_m^T x = y` on the leading block `m = y.len()`.
    pub fn back_solve(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for k in (0..x.len()).rev() {
            let row = self.lower.row(k);
            let xk = x[k] / row[k];
            x[k] = xk;
            for (xi, lki) in x[..k].iter_mut().zip(&row[..k]) {
                *xi -= lki * xk;
            }
        }
        x
    }

    /// Solves `A_m x = b` on the leading block `m = b.len()`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.back_solve(&self.forward_solve(b))
    }

    /// Reassembles `L L^T`.
    pub fn reconstruct(&self) -> PackedLower {
        let n = self.lower.n;
        PackedLower::from_fn(n, |i, j| dot(&self.lower.row(i)[..=j], &self.lower.row(j)[..=j]))
    }
}

/// Solves the dense system `A x = b` (`A` row-major, `n x n`) by Gaussian
/// elimination with partial pivoting.
pub fn lu_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix shape does not match right-hand side");
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let (piv, max) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(max > f64::EPSILON * scale) {
            return Err(Error::Singular { pivot: col });
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> PackedLower {
        // Kac-Murdock-Szego matrix rho^|i-j| is SPD for |rho| < 1.
        PackedLower::from_fn(n, |i, j| {
            libm::pow(0.6, (i - j) as f64) + if i == j { 0.1 } else { 0.0 }
        })
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd(12);
        let c = Cholesky::factor(a.clone()).unwrap();
        let r = c.reconstruct();
        for i in 0..12 {
            for j in 0..=i {
                assert!((r.get(i, j) - a.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn leading_block_solves() {
        let a = spd(9);
        let c = Cholesky::factor(a.clone()).unwrap();
        for m in 1..=9 {
            let b: Vec<f64> = (0..m).map(|i| 1.0 + i as f64).collect();
            let x = c.solve(&b);
            let ax = a.sym_mul(&x);
            for (u, v) in ax.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_reports_pivot() {
        // Rows 1 and 2 identical -> singular at pivot 2.
        let a = PackedLower::from_fn(3, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (1, 0) | (2, 0) => 1.0,
            _ => 1.0,
        });
        assert_eq!(Cholesky::factor(a), Err(Error::NotPositiveDefinite { pivot: 2 }));
        let a = PackedLower::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert_eq!(Cholesky::factor(a), Err(Error::NotPositiveDefinite { pivot: 0 }));
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = lu_solve(a, vec![3.0, 2.0, 4.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(matches!(
            lu_solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]),
            Err(Error::Singular { .. })
        ));
    }
}
