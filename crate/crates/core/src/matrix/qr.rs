//! Householder QR, used to draw random orthogonal matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::{axpy, dot, DenseMatrix};

/// Orthogonal factor of `a = Q R`, with columns signed so that `diag(R) > 0`.
pub fn orthogonal_factor(a: &DenseMatrix) -> DenseMatrix {
    let n = a.dim();
    // Work on columns: cols[j] is column j of A.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut signs = vec![1.0; n];

    for j in 0..n {
        let x = &cols[j][j..];
        let norm = dot(x, x).sqrt();
        let mut v = x.to_vec();
        if norm == 0.0 {
            vs.push(v);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        // R_jj = alpha
        signs[j] = alpha.signum();
        v[0] -= alpha;
        let vnorm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|e| *e /= vnorm);
        for col in cols.iter_mut().skip(j + 1) {
            let s = 2.0 * dot(&v, &col[j..]);
            axpy(-s, &v, &mut col[j..]);
        }
        vs.push(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the identity, back to front.
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for (j, v) in vs.iter().enumerate().rev() {
        if v.iter().all(|&e| e == 0.0) {
            continue;
        }
        for col in q.iter_mut() {
            let s = 2.0 * dot(v, &col[j..]);
            if s != 0.0 {
                axpy(-s, v, &mut col[j..]);
            }
        }
    }

    let mut out = DenseMatrix::zeros(n);
    for (j, col) in q.iter().enumerate() {
        for (i, &e) in col.iter().enumerate() {
            out[(i, j)] = signs[j] * e;
        }
    }
    out
}

/// `k x k` matrix of independent standard normals from a ChaCha20 stream
/// seeded with `seed`, filled in row-major order.
pub fn gaussian_matrix(k: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..k * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    DenseMatrix::from_row_major(k, data).expect("gaussian entries are finite")
}

/// Haar-distributed orthogonal matrix determined by `seed`.
pub fn random_orthogonal(k: usize, seed: u64) -> DenseMatrix {
    orthogonal_factor(&gaussian_matrix(k, seed))
}
