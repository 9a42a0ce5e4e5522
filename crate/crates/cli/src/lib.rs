//! Command-line front end for `ratmin`: fitting, applying approximants to
//! matrices, and the reproduction experiment suite.
//!
//! Exit codes: 0 success, 1 a tolerance check failed, 2 usage or input
//! error, 3 numerical failure.

pub mod args;
pub mod commands;
pub mod experiments;
pub mod record;
pub mod sources;

use std::fmt;

pub use record::{Check, Expectation, RunRecord};

pub const EXIT_OK: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Bad flags or input files, detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Maps an error chain to an exit code: solver and linear-algebra failures
/// are numerical, everything else is a usage or input problem.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    use ratmin_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::DegenerateDenominator
                | E::MalformedLp(_)
                | E::IterationLimit { .. }
                | E::Level { .. }
                | E::Unsatisfiable { .. }
                | E::Singular { .. }
                | E::UndefinedRelativeError => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        let numerical = anyhow::Error::new(ratmin_core::Error::Singular { pivot: 0.0, norm: 1.0 });
        assert_eq!(exit_code_for(&numerical), EXIT_NUMERICAL);
        let wrapped = numerical.context("applying");
        assert_eq!(exit_code_for(&wrapped), EXIT_NUMERICAL);
        let input = anyhow::Error::new(ratmin_core::Error::Parse("x".into()));
        assert_eq!(exit_code_for(&input), EXIT_USAGE);
        assert_eq!(exit_code_for(&anyhow::Error::new(UsageError("bad".into()))), EXIT_USAGE);
    }
}
