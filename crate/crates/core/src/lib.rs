//! Constrained minimax rational approximation in the Chebyshev basis, and
//! application of the fitted approximants to matrices.

pub mod cheb;
pub mod error;
pub mod functions;
pub mod lp;
pub mod matrix;
pub mod minimax;
pub mod rational;

pub use cheb::{cheb_expand, cheb_nodes, cheb_vector, clenshaw, equidistant_grid, ChebCoeffs, Domain, Grid};
pub use error::{Error, Result};
pub use lp::{solve_lp, LinearProgram, LpOutcome, LpStatus, Relation};
pub use matrix::{DenseMatrix, NormalMatrix, SpectrumSpec};
pub use minimax::{check_level, fit, FitProblem, FitReport};
pub use rational::{BoundSpec, RationalApproximant};
