//! Dense LU factorization with partial pivoting.
//!
//! Right-looking and blocked: panels of `BLOCK` columns are factored with
//! row operations, the trailing submatrix is updated with one gemm per panel.
//! Multi-right-hand-side solves are blocked the same way.

use super::dense::{axpy, DenseMatrix};
use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// Relative pivot threshold below which a matrix counts as singular.
pub const SINGULAR_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    min_pivot: f64,
    norm: f64,
}

impl LuFactors {
    /// Factors `a`, failing if some pivot falls below `1e-14 * ||a||_inf`.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        Self::factor_with_tol(a, SINGULAR_RTOL)
    }

    pub fn factor_with_tol(a: &DenseMatrix, rtol: f64) -> Result<Self> {
        let n = a.dim();
        let norm = a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let threshold = rtol * norm;

        let mut j0 = 0;
        while j0 < n {
            let j1 = (j0 + BLOCK).min(n);
            for j in j0..j1 {
                let (p, pmax) = (j..n)
                    .map(|i| (i, lu[(i, j)].abs()))
                    .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                if pmax <= threshold || pmax == 0.0 {
                    return Err(Error::Singular { pivot: pmax, norm });
                }
                min_pivot = min_pivot.min(pmax);
                if p != j {
                    swap_rows(&mut lu, p, j);
                    perm.swap(p, j);
                }
                let piv = lu[(j, j)];
                let data = lu.as_mut_slice();
                let (head, tail) = data.split_at_mut((j + 1) * n);
                let prow = &head[j * n..j * n + n];
                for row in tail.chunks_mut(n) {
                    let l = row[j] / piv;
                    row[j] = l;
                    if l != 0.0 {
                        axpy(-l, &prow[j + 1..j1], &mut row[j + 1..j1]);
                    }
                }
            }
            if j1 < n {
                // U12 <- L11^{-1} A12
                for j in j0..j1 {
                    for i in j + 1..j1 {
                        let l = lu[(i, j)];
                        if l != 0.0 {
                            let data = lu.as_mut_slice();
                            let (head, tail) = data.split_at_mut(i * n);
                            axpy(-l, &head[j * n + j1..j * n + n], &mut tail[j1..n]);
                        }
                    }
                }
                // A22 <- A22 - L21 * U12
                let m = n - j1;
                let kb = j1 - j0;
                let ptr = lu.as_mut_slice().as_mut_ptr();
                // SAFETY: L21 (rows j1.., cols j0..j1), U12 (rows j0..j1,
                // cols j1..) and A22 (rows j1.., cols j1..) are disjoint
                // element sets of the same n*n buffer.
                unsafe {
                    matrixmultiply::dgemm(
                        m,
                        kb,
                        m,
                        -1.0,
                        ptr.add(j1 * n + j0),
                        n as isize,
                        1,
                        ptr.add(j0 * n + j1),
                        n as isize,
                        1,
                        1.0,
                        ptr.add(j1 * n + j1),
                        n as isize,
                        1,
                    );
                }
            }
            j0 = j1;
        }
        Ok(Self { lu, perm, min_pivot, norm })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, xi)| l * xi).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, xi)| u * xi).sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        // A^T = U^T L^T P, so solve U^T w = b, L^T z = w, x = P^T z.
        let mut w = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.lu[(k, i)] * w[k]).sum();
            w[i] = (w[i] - s) / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.lu[(k, i)] * w[k]).sum();
            w[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        Ok(x)
    }

    /// Solves `A X = B` for a square right-hand side.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.dim();
        if b.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
        }
        let mut x = DenseMatrix::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        let lu = self.lu.as_slice();

        // Forward: L Y = P B, unit diagonal.
        let mut i0 = 0;
        while i0 < n {
            let i1 = (i0 + BLOCK).min(n);
            if i0 > 0 {
                block_update(lu, n, i0, i1, 0, i0, x.as_mut_slice());
            }
            for i in i0..i1 {
                for k in i0..i {
                    let l = lu[i * n + k];
                    if l != 0.0 {
                        let data = x.as_mut_slice();
                        let (head, tail) = data.split_at_mut(i * n);
                        axpy(-l, &head[k * n..k * n + n], &mut tail[..n]);
                    }
                }
            }
            i0 = i1;
        }

        // Backward: U X = Y.
        let mut i1 = n;
        while i1 > 0 {
            let i0 = i1.saturating_sub(BLOCK);
            if i1 < n {
                block_update(lu, n, i0, i1, i1, n, x.as_mut_slice());
            }
            for i in (i0..i1).rev() {
                for k in i + 1..i1 {
                    let u = lu[i * n + k];
                    if u != 0.0 {
                        let data = x.as_mut_slice();
                        let (head, tail) = data.split_at_mut(k * n);
                        axpy(-u, &tail[..n], &mut head[i * n..i * n + n]);
                    }
                }
                let d = 1.0 / lu[i * n + i];
                x.row_mut(i).iter_mut().for_each(|v| *v *= d);
            }
            i1 = i0;
        }
        Ok(x)
    }
}

/// `X[r0..r1, :] -= LU[r0..r1, c0..c1] * X[c0..c1, :]`, with `[c0, c1)`
/// disjoint from `[r0, r1)`.
fn block_update(lu: &[f64], n: usize, r0: usize, r1: usize, c0: usize, c1: usize, x: &mut [f64]) {
    let ptr = x.as_mut_ptr();
    // SAFETY: the row ranges [r0, r1) and [c0, c1) of x are disjoint, so the
    // read operand and the written operand never overlap.
    unsafe {
        matrixmultiply::dgemm(
            r1 - r0,
            c1 - c0,
            n,
            -1.0,
            lu.as_ptr().add(r0 * n + c0),
            n as isize,
            1,
            ptr.add(c0 * n),
            n as isize,
            1,
            1.0,
            ptr.add(r0 * n),
            n as isize,
            1,
        );
    }
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    let n = m.dim();
    let (lo, hi) = (a.min(b), a.max(b));
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(hi * n);
    head[lo * n..lo * n + n].swap_with_slice(&mut tail[..n]);
}
