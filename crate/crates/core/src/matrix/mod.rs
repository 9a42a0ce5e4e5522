//! Dense linear algebra and rational matrix functions.

mod dense;
pub mod io;
mod lu;
mod matfun;
mod qr;

pub use dense::{gemm, DenseMatrix, Trans};
pub use lu::{LuFactors, SINGULAR_RTOL};
pub use matfun::{
    cond_check, frobenius_rel_error, make_normal_matrix, map_matrix, matrix_cheb_poly, matrix_cheb_poly_vec,
    rational_apply, rational_apply_vec, rational_apply_with, ApplyOptions, MatApplyReport, NormalMatrix,
    SpectrumSpec, VecApplyReport,
};
pub use qr::{gaussian_matrix, orthogonal_factor, random_orthogonal};
