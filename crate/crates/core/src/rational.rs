//! Rational approximants `p/q` in the Chebyshev basis and their diagnostics.

use serde::{Deserialize, Serialize};

use crate::cheb::{ChebCoeffs, Domain, Grid};
use crate::error::{Error, Result};

const BASIS_TAG: &str = "chebyshev-T";
const CONVENTION_TAG: &str = "plain-sum";

/// Denominator bounds `0 < lower <= q(x_i) <= upper` and the optional
/// numerator positivity constraint `p(x_i) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct BoundSpec {
    lower: f64,
    upper: f64,
    positive: bool,
}

#[derive(Serialize, Deserialize)]
struct RawBounds {
    lower: f64,
    upper: f64,
    #[serde(default)]
    positive: bool,
}

impl BoundSpec {
    pub fn new(lower: f64, upper: f64, positive: bool) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || lower <= 0.0 || upper < lower {
            return Err(Error::InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper, positive })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn positive(&self) -> bool {
        self.positive
    }

    /// `upper / lower`, the bound on `cond(q(A))` for normal `A`.
    pub fn cond_bound(&self) -> f64 {
        self.upper / self.lower
    }
}

impl TryFrom<RawBounds> for BoundSpec {
    type Error = Error;

    fn try_from(r: RawBounds) -> Result<Self> {
        BoundSpec::new(r.lower, r.upper, r.positive)
    }
}

impl From<BoundSpec> for RawBounds {
    fn from(b: BoundSpec) -> Self {
        RawBounds { lower: b.lower, upper: b.upper, positive: b.positive }
    }
}

/// `r(x) = p(t) / q(t)` with `t` the image of `x` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawApproximant", into = "RawApproximant")]
pub struct RationalApproximant {
    domain: Domain,
    num: ChebCoeffs,
    den: ChebCoeffs,
    bounds: Option<BoundSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawApproximant {
    domain: Domain,
    num: ChebCoeffs,
    den: ChebCoeffs,
    basis: String,
    convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundSpec>,
}

impl TryFrom<RawApproximant> for RationalApproximant {
    type Error = Error;

    fn try_from(r: RawApproximant) -> Result<Self> {
        if r.basis != BASIS_TAG {
            return Err(Error::Parse(format!("unsupported basis {:?}", r.basis)));
        }
        if r.convention != CONVENTION_TAG {
            return Err(Error::Parse(format!("unsupported coefficient convention {:?}", r.convention)));
        }
        Ok(RationalApproximant { domain: r.domain, num: r.num, den: r.den, bounds: r.bounds })
    }
}

impl From<RationalApproximant> for RawApproximant {
    fn from(r: RationalApproximant) -> Self {
        RawApproximant {
            domain: r.domain,
            num: r.num,
            den: r.den,
            basis: BASIS_TAG.to_owned(),
            convention: CONVENTION_TAG.to_owned(),
            bounds: r.bounds,
        }
    }
}

/// Pointwise evaluation with its parts exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub numerator: f64,
    pub denominator: f64,
}

impl Evaluation {
    pub fn value(&self) -> f64 {
        self.numerator / self.denominator
    }

    /// False when the denominator is not strictly positive, i.e. the point
    /// lies outside the region where the fit certified `q > 0`.
    pub fn is_certified(&self) -> bool {
        self.denominator > 0.0
    }
}

impl RationalApproximant {
    pub fn new(domain: Domain, num: ChebCoeffs, den: ChebCoeffs) -> Self {
        Self { domain, num, den, bounds: None }
    }

    /// Attaches the bounds the denominator was fitted under.
    pub fn with_bounds(mut self, bounds: BoundSpec) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn num(&self) -> &ChebCoeffs {
        &self.num
    }

    pub fn den(&self) -> &ChebCoeffs {
        &self.den
    }

    pub fn bounds(&self) -> Option<&BoundSpec> {
        self.bounds.as_ref()
    }

    pub fn eval_parts(&self, x: f64) -> Evaluation {
        let t = self.domain.map_to_ref(x);
        Evaluation { numerator: self.num.eval(t), denominator: self.den.eval(t) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_parts(x).value()
    }

    pub fn numerator_at(&self, x: f64) -> f64 {
        self.num.eval(self.domain.map_to_ref(x))
    }

    pub fn denominator_at(&self, x: f64) -> f64 {
        self.den.eval(self.domain.map_to_ref(x))
    }

    /// `max_i |f(x_i) - r(x_i)|`.
    pub fn uniform_error(&self, f: impl Fn(f64) -> f64, g: &Grid) -> f64 {
        g.iter().map(|x| (f(x) - self.eval(x)).abs()).fold(0.0, f64::max)
    }

    /// Uniform error against precomputed samples `values[i] = f(x_i)`.
    pub fn uniform_error_values(&self, g: &Grid, values: &[f64]) -> f64 {
        g.iter()
            .zip(values)
            .map(|(x, &f)| (f - self.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `C_r = max_i |q(x_i)| / min_i |q(x_i)|`.
    pub fn denominator_change(&self, g: &Grid) -> Result<f64> {
        let (lo, hi) = g.iter().map(|x| self.denominator_at(x).abs()).fold(
            (f64::INFINITY, 0.0f64),
            |(lo, hi), q| (lo.min(q), hi.max(q)),
        );
        if lo == 0.0 {
            return Err(Error::DegenerateDenominator);
        }
        Ok(hi / lo)
    }

    /// Worst violation of `b` over `g`; see [`BoundReport`].
    pub fn verify_bounds(&self, g: &Grid, b: &BoundSpec) -> BoundReport {
        let mut report = BoundReport {
            lower_violation: 0.0,
            upper_violation: 0.0,
            positivity_violation: 0.0,
            slack: 1e-8 * b.upper,
        };
        for x in g.iter() {
            let e = self.eval_parts(x);
            report.lower_violation = report.lower_violation.max(b.lower - e.denominator);
            report.upper_violation = report.upper_violation.max(e.denominator - b.upper);
            if b.positive {
                report.positivity_violation = report.positivity_violation.max(-e.numerator);
            }
        }
        report
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Largest amounts by which each constraint is violated (0 when it holds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub lower_violation: f64,
    pub upper_violation: f64,
    pub positivity_violation: f64,
    /// Violations up to this amount count as satisfied (`1e-8 * upper`).
    pub slack: f64,
}

impl BoundReport {
    pub fn worst(&self) -> f64 {
        self.lower_violation.max(self.upper_violation).max(self.positivity_violation)
    }

    pub fn is_satisfied(&self) -> bool {
        self.worst() <= self.slack
    }
}
