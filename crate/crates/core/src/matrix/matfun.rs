//! Rational matrix functions `r(A) = q(A)^{-1} p(A)` for approximants in the
//! Chebyshev basis.
//!
//! Polynomials are lifted with the Clenshaw recurrence on the mapped matrix
//! `Â = (2A - (a+b)I)/(b-a)`. When `q > 0` on the spectrum of a normal `A`
//! and `l <= q <= u` there, `cond_2(q(A)) <= u/l`, so the LU solve in
//! [`rational_apply`] is well conditioned by construction.

use serde::{Deserialize, Serialize};

use super::dense::{axpy, gemm, norm2, DenseMatrix, Trans};
use super::lu::LuFactors;
use super::qr::random_orthogonal;
use crate::cheb::{ChebCoeffs, Domain};
use crate::error::{Error, Result};
use crate::rational::RationalApproximant;

/// `(2A - (a+b)I) / (b-a)`: the spectrum of `A` in `[a, b]` lands in `[-1, 1]`.
pub fn map_matrix(d: &Domain, a: &DenseMatrix) -> DenseMatrix {
    let w = d.b() - d.a();
    let mut out = a.clone();
    out.scale(2.0 / w);
    out.add_diag(-(d.a() + d.b()) / w);
    out
}

/// `sum_j c_j T_j(Â)` by the matrix Clenshaw recurrence.
///
/// Two k x k work buffers besides `Â`; `deg - 1` matrix products.
pub fn matrix_cheb_poly(c: &ChebCoeffs, a: &DenseMatrix, d: &Domain) -> DenseMatrix {
    let n = a.dim();
    let cs = c.as_slice();
    let deg = c.degree();
    if deg == 0 {
        let mut out = DenseMatrix::zeros(n);
        out.add_diag(cs[0]);
        return out;
    }
    let ah = map_matrix(d, a);

    // b1 = B_{deg}, b2 = B_{deg+1} = 0
    let mut b1 = DenseMatrix::zeros(n);
    b1.add_diag(cs[deg]);
    let mut b2 = DenseMatrix::zeros(n);
    if deg >= 2 {
        // B_{deg-1} = c_{deg-1} I + 2 c_deg Â; no product needed yet.
        let mut next = ah.clone();
        next.scale(2.0 * cs[deg]);
        next.add_diag(cs[deg - 1]);
        b2 = std::mem::replace(&mut b1, next);
        for j in (1..deg - 1).rev() {
            gemm(2.0, &ah, Trans::No, &b1, Trans::No, -1.0, &mut b2);
            b2.add_diag(cs[j]);
            std::mem::swap(&mut b1, &mut b2);
        }
    }
    gemm(1.0, &ah, Trans::No, &b1, Trans::No, -1.0, &mut b2);
    b2.add_diag(cs[0]);
    b2
}

/// `(sum_j c_j T_j(Â)) v` using matrix-vector products only.
pub fn matrix_cheb_poly_vec(c: &ChebCoeffs, a: &DenseMatrix, v: &[f64], d: &Domain) -> Result<Vec<f64>> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    let w = d.b() - d.a();
    let (s, shift) = (2.0 / w, -(d.a() + d.b()) / w);
    let mut tmp = vec![0.0; n];
    // tmp <- Â x
    let mapped = |x: &[f64], tmp: &mut [f64]| {
        a.matvec_into(x, tmp);
        for (t, xi) in tmp.iter_mut().zip(x) {
            *t = s * *t + shift * xi;
        }
    };

    let cs = c.as_slice();
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    for &cj in cs[1..].iter().rev() {
        mapped(&b1, &mut tmp);
        for ((b2i, ti), vi) in b2.iter_mut().zip(&tmp).zip(v) {
            *b2i = 2.0 * ti - *b2i + cj * vi;
        }
        std::mem::swap(&mut b1, &mut b2);
    }
    mapped(&b1, &mut tmp);
    Ok(tmp
        .iter()
        .zip(&b2)
        .zip(v)
        .map(|((ti, b2i), vi)| ti - b2i + cs[0] * vi)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApplyOptions {
    /// One step of iterative refinement after the LU solve.
    pub refine: bool,
    /// Compute the relative residual `||Q X - P|| / ||P||`.
    pub residual: bool,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        Self { refine: false, residual: true }
    }
}

/// Result of a rational matrix (or matrix-vector) evaluation.
#[derive(Debug, Clone)]
pub struct MatApplyReport<T = DenseMatrix> {
    pub result: T,
    /// Relative residual of the final linear solve; `None` when not requested.
    pub residual: Option<f64>,
    /// `u / l` when the approximant carries its denominator bounds.
    pub cond_bound: Option<f64>,
}

pub type VecApplyReport = MatApplyReport<Vec<f64>>;

pub fn rational_apply(r: &RationalApproximant, a: &DenseMatrix) -> Result<MatApplyReport> {
    rational_apply_with(r, a, ApplyOptions::default())
}

/// `X = q(A)^{-1} p(A)` via two matrix Clenshaw passes and one LU solve.
pub fn rational_apply_with(r: &RationalApproximant, a: &DenseMatrix, opts: ApplyOptions) -> Result<MatApplyReport> {
    let p = matrix_cheb_poly(r.num(), a, r.domain());
    let q = matrix_cheb_poly(r.den(), a, r.domain());
    let lu = LuFactors::factor(&q)?;
    let mut x = lu.solve_matrix(&p)?;
    if opts.refine {
        let mut res = p.clone();
        gemm(-1.0, &q, Trans::No, &x, Trans::No, 1.0, &mut res);
        let dx = lu.solve_matrix(&res)?;
        x.axpy(1.0, &dx);
    }
    let residual = opts.residual.then(|| {
        let mut res = p.clone();
        gemm(1.0, &q, Trans::No, &x, Trans::No, -1.0, &mut res);
        relative(res.frobenius_norm(), p.frobenius_norm())
    });
    Ok(MatApplyReport { result: x, residual, cond_bound: r.bounds().map(|b| b.cond_bound()) })
}

/// `x = q(A)^{-1} (p(A) v)`: matrix-vector Clenshaw for the numerator, one
/// explicit `q(A)` and one LU solve.
pub fn rational_apply_vec(r: &RationalApproximant, a: &DenseMatrix, v: &[f64]) -> Result<VecApplyReport> {
    let w = matrix_cheb_poly_vec(r.num(), a, v, r.domain())?;
    let q = matrix_cheb_poly(r.den(), a, r.domain());
    let lu = LuFactors::factor(&q)?;
    let x = lu.solve(&w)?;
    let mut res = q.matvec(&x);
    axpy(-1.0, &w, &mut res);
    let residual = Some(relative(norm2(&res), norm2(&w)));
    Ok(MatApplyReport { result: x, residual, cond_bound: r.bounds().map(|b| b.cond_bound()) })
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Prescribed real spectrum plus the seed of the orthogonal similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub eigenvalues: Vec<f64>,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn new(eigenvalues: Vec<f64>, seed: u64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidProblem("spectrum must not be empty".into()));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("eigenvalue"));
        }
        Ok(Self { eigenvalues, seed })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// A symmetric matrix `A = Q diag(λ) Q^T` that remembers its factors, so
/// exact matrix functions `Q f(D) Q^T` are available as oracles.
#[derive(Debug, Clone)]
pub struct NormalMatrix {
    pub q: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    pub matrix: DenseMatrix,
}

impl NormalMatrix {
    pub fn new(spec: &SpectrumSpec) -> Self {
        let q = random_orthogonal(spec.dim(), spec.seed);
        let matrix = similarity(&q, &spec.eigenvalues);
        Self { q, eigenvalues: spec.eigenvalues.clone(), matrix }
    }

    /// `Q f(D) Q^T`.
    pub fn exact_function(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let fd: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        similarity(&self.q, &fd)
    }

    /// `Q f(D) Q^T v` with three matrix-vector products.
    pub fn exact_function_vec(&self, f: impl Fn(f64) -> f64, v: &[f64]) -> Vec<f64> {
        let n = self.q.dim();
        let mut w = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.q.row(i), &mut w);
        }
        for (wi, &l) in w.iter_mut().zip(&self.eigenvalues) {
            *wi *= f(l);
        }
        self.q.matvec(&w)
    }
}

/// `Q diag(d) Q^T`, symmetrized.
fn similarity(q: &DenseMatrix, d: &[f64]) -> DenseMatrix {
    let n = q.dim();
    let mut qd = q.clone();
    for i in 0..n {
        for (x, &di) in qd.row_mut(i).iter_mut().zip(d) {
            *x *= di;
        }
    }
    let mut out = DenseMatrix::zeros(n);
    gemm(1.0, &qd, Trans::No, q, Trans::Yes, 0.0, &mut out);
    out.symmetrize();
    out
}

/// Symmetric matrix with spectrum `s.eigenvalues` and a seeded random
/// orthogonal eigenbasis.
pub fn make_normal_matrix(s: &SpectrumSpec) -> DenseMatrix {
    NormalMatrix::new(s).matrix
}

/// `cond_2(q(A))` for normal `A` with the given eigenvalues:
/// `max |q(λ)| / min |q(λ)|`.
pub fn cond_check(r: &RationalApproximant, eigenvalues: &[f64]) -> f64 {
    let (lo, hi) = eigenvalues
        .iter()
        .map(|&l| r.denominator_at(l).abs())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
    hi / lo
}

/// `||X - Y||_F / ||Y||_F`.
pub fn frobenius_rel_error(x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), found: x.dim() });
    }
    let diff = x.sub(y).frobenius_norm();
    let ny = y.frobenius_norm();
    if ny == 0.0 {
        return if diff == 0.0 { Ok(0.0) } else { Err(Error::UndefinedRelativeError) };
    }
    Ok(diff / ny)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::clenshaw;
    use crate::rational::BoundSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coeffs(v: &[f64]) -> ChebCoeffs {
        ChebCoeffs::new(v.to_vec()).unwrap()
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn sample_rational() -> RationalApproximant {
        // q = 2 + 0.5 T_1 + 0.3 T_2 > 0 on [-1, 1]
        RationalApproximant::new(
            Domain::new(-1.0, 2.0).unwrap(),
            coeffs(&[0.3, -1.0, 0.25, 0.1]),
            coeffs(&[2.0, 0.5, 0.3]),
        )
    }

    #[test]
    fn map_matrix_examples() {
        let a = DenseMatrix::from_rows(&[vec![0.3, 0.1], vec![0.1, -0.2]]).unwrap();
        assert_eq!(map_matrix(&Domain::unit(), &a), a);
        let d = Domain::new(0.0, 3.0).unwrap();
        let mut mid = DenseMatrix::identity(3);
        mid.scale(1.5);
        assert_eq!(map_matrix(&d, &mid), DenseMatrix::zeros(3));
        let ends = DenseMatrix::from_diag(&[0.0, 3.0]);
        assert_eq!(map_matrix(&d, &ends), DenseMatrix::from_diag(&[-1.0, 1.0]));
    }

    #[test]
    fn matrix_poly_examples() {
        let a = DenseMatrix::from_rows(&[vec![0.3, 0.1], vec![0.1, -0.2]]).unwrap();
        assert_eq!(matrix_cheb_poly(&coeffs(&[1.0]), &a, &Domain::unit()), DenseMatrix::identity(2));
        assert!(max_abs_diff(&matrix_cheb_poly(&coeffs(&[0.0, 1.0]), &a, &Domain::unit()), &a) < 1e-15);
        let d = DenseMatrix::from_diag(&[0.5, -0.5]);
        let t2 = matrix_cheb_poly(&coeffs(&[0.0, 0.0, 1.0]), &d, &Domain::unit());
        assert!(max_abs_diff(&t2, &DenseMatrix::from_diag(&[-0.5, -0.5])) < 1e-15);
    }

    #[test]
    fn matrix_poly_on_diagonal_matches_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for deg in 0..12 {
            let c: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = matrix_cheb_poly(&coeffs(&c), &DenseMatrix::from_diag(&t), &Domain::unit());
            let expect = DenseMatrix::from_diag(&t.iter().map(|&ti| clenshaw(&c, ti)).collect::<Vec<_>>());
            assert!(max_abs_diff(&m, &expect) <= 1e-11, "deg {deg}");
        }
    }

    #[test]
    fn matrix_poly_vec_matches_full_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = 20;
        let c: Vec<f64> = (0..=10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<f64> = (0..k * k).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let a = DenseMatrix::from_row_major(k, data).unwrap();
        let d = Domain::new(-0.5, 1.5).unwrap();
        let full = matrix_cheb_poly(&coeffs(&c), &a, &d);
        let mut e1 = vec![0.0; k];
        e1[0] = 1.0;
        let got = matrix_cheb_poly_vec(&coeffs(&c), &a, &e1, &d).unwrap();
        for (g, e) in got.iter().zip(full.column(0)) {
            assert!((g - e).abs() <= 1e-10);
        }
        let v = vec![1.0; k];
        let got = matrix_cheb_poly_vec(&coeffs(&[1.0]), &a, &v, &d).unwrap();
        assert_eq!(got, v);
        let got = matrix_cheb_poly_vec(&coeffs(&[0.0, 1.0]), &a, &v, &Domain::unit()).unwrap();
        let av = a.matvec(&v);
        for (g, e) in got.iter().zip(&av) {
            assert!((g - e).abs() <= 1e-15);
        }
        assert!(matrix_cheb_poly_vec(&coeffs(&[1.0]), &a, &[1.0], &d).is_err());
    }

    #[test]
    fn rational_apply_scalar_and_diagonal_consistency() {
        let r = sample_rational();
        let c = 0.7;
        let mut a = DenseMatrix::identity(4);
        a.scale(c);
        let rep = rational_apply(&r, &a).unwrap();
        let mut expect = DenseMatrix::identity(4);
        expect.scale(r.eval(c));
        assert!(max_abs_diff(&rep.result, &expect) <= 1e-12);
        assert!(rep.residual.unwrap() < 1e-14);
        assert_eq!(rep.cond_bound, None);

        let lambdas = [-1.0, -0.3, 0.0, 0.5, 1.2, 2.0];
        let rep = rational_apply(&r, &DenseMatrix::from_diag(&lambdas)).unwrap();
        let expect = DenseMatrix::from_diag(&lambdas.map(|l| r.eval(l)));
        assert!(max_abs_diff(&rep.result, &expect) <= 1e-10);
    }

    #[test]
    fn rational_apply_similarity_oracle() {
        let r = sample_rational().with_bounds(BoundSpec::new(1.0, 4.0, false).unwrap());
        let spec = SpectrumSpec::new((0..30).map(|i| -1.0 + 3.0 * i as f64 / 29.0).collect(), 7).unwrap();
        let nm = NormalMatrix::new(&spec);
        let rep = rational_apply(&r, &nm.matrix).unwrap();
        let exact = nm.exact_function(|x| r.eval(x));
        assert!(frobenius_rel_error(&rep.result, &exact).unwrap() <= 1e-8);
        assert_eq!(rep.cond_bound, Some(4.0));

        let refined = rational_apply_with(&r, &nm.matrix, ApplyOptions { refine: true, residual: true }).unwrap();
        assert!(frobenius_rel_error(&refined.result, &exact).unwrap() <= 1e-8);
    }

    #[test]
    fn rational_apply_vec_paths_agree() {
        let r = sample_rational();
        let spec = SpectrumSpec::new((0..40).map(|i| -1.0 + 3.0 * i as f64 / 39.0).collect(), 3).unwrap();
        let nm = NormalMatrix::new(&spec);
        let v: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = rational_apply_vec(&r, &nm.matrix, &v).unwrap();
        let full = rational_apply(&r, &nm.matrix).unwrap().result.matvec(&v);
        let diff: Vec<f64> = x.result.iter().zip(&full).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-8 * norm2(&full));
        let exact = nm.exact_function_vec(|l| r.eval(l), &v);
        let diff: Vec<f64> = x.result.iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-10 * norm2(&exact));

        let zero = rational_apply_vec(&r, &nm.matrix, &vec![0.0; 40]).unwrap();
        assert!(zero.result.iter().all(|&x| x == 0.0));

        let mut ci = DenseMatrix::identity(5);
        ci.scale(0.25);
        let v5 = [1.0, -2.0, 0.5, 3.0, 0.0];
        let got = rational_apply_vec(&r, &ci, &v5).unwrap();
        for (g, vi) in got.result.iter().zip(v5) {
            assert!((g - r.eval(0.25) * vi).abs() <= 1e-12);
        }
    }

    #[test]
    fn singular_denominator_is_reported() {
        // q(x) = x vanishes at the eigenvalue 0.
        let r = RationalApproximant::new(Domain::unit(), coeffs(&[1.0]), coeffs(&[0.0, 1.0]));
        let a = DenseMatrix::from_diag(&[0.0, 0.5]);
        assert!(matches!(rational_apply(&r, &a), Err(Error::Singular { .. })));
        assert!(matches!(rational_apply_vec(&r, &a, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn normal_matrix_examples() {
        let spec = SpectrumSpec::new(vec![0.4; 6], 99).unwrap();
        let a = make_normal_matrix(&spec);
        let mut expect = DenseMatrix::identity(6);
        expect.scale(0.4);
        assert!(max_abs_diff(&a, &expect) <= 1e-12);

        let a = make_normal_matrix(&SpectrumSpec::new(vec![1.0, -1.0], 1).unwrap());
        assert!(a.trace().abs() <= 1e-10);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((det + 1.0).abs() <= 1e-10);

        let spec = SpectrumSpec::new(vec![0.1, 0.2, -0.7, 0.9], 42).unwrap();
        let a1 = make_normal_matrix(&spec);
        let a2 = make_normal_matrix(&spec);
        assert_eq!(a1.as_slice(), a2.as_slice());
        assert_eq!(a1, a1.transpose());
    }

    #[test]
    fn cond_check_examples() {
        let r = RationalApproximant::new(Domain::unit(), coeffs(&[1.0]), coeffs(&[3.0]));
        assert_eq!(cond_check(&r, &[-1.0, 0.0, 1.0]), 1.0);
        let r = RationalApproximant::new(Domain::unit(), coeffs(&[1.0]), coeffs(&[1.5, 0.5]));
        assert_eq!(cond_check(&r, &[-1.0, 1.0]), 2.0);
    }

    #[test]
    fn frobenius_examples() {
        let y = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_rel_error(&y, &y).unwrap(), 0.0);
        let mut x = y.clone();
        x.scale(2.0);
        assert!((frobenius_rel_error(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let mut e = y.clone();
        e.scale(0.1);
        let x = y.clone();
        let mut xe = x.clone();
        xe.axpy(1.0, &e);
        assert!((frobenius_rel_error(&xe, &y).unwrap() - 0.1).abs() < 1e-15);
        let z = DenseMatrix::zeros(2);
        assert_eq!(frobenius_rel_error(&z, &z).unwrap(), 0.0);
        assert!(matches!(frobenius_rel_error(&y, &z), Err(Error::UndefinedRelativeError)));
        assert!(frobenius_rel_error(&DenseMatrix::zeros(3), &y).is_err());
    }
}
