//! Built-in target functions and the error function they use.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cheb::Domain;
use crate::error::{Error, Result};

const SERIES_CUTOFF: f64 = 2.5;
const CF_TERMS: usize = 120;

/// The Gauss error function.
///
/// Power series `2/√π · e^{-x²} · Σ 2^k x^{2k+1} / (2k+1)!!` for
/// `|x| <= 2.5` (all terms positive, so no cancellation), and the
/// continued fraction for `erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax <= SERIES_CUTOFF { erf_series(ax) } else { 1.0 - erfc_cf(ax) };
    v.copysign(x)
}

/// `1 - erf(x)`, accurate in the right tail.
pub fn erfc(x: f64) -> f64 {
    if x > SERIES_CUTOFF {
        erfc_cf(x)
    } else {
        1.0 - erf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated from the tail.
fn erfc_cf(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=CF_TERMS).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    (-x * x).exp() / PI.sqrt() / tail
}

/// Parameters of the filter and bell profiles: centre `c`, plateau width
/// `R`, and transition width `rr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub center: f64,
    pub width: f64,
    pub rise: f64,
}

impl FilterParams {
    pub fn new(center: f64, width: f64, rise: f64) -> Result<Self> {
        if !(center.is_finite() && width.is_finite() && rise.is_finite()) || rise <= 0.0 || width < 0.0 {
            return Err(Error::InvalidProblem(format!(
                "filter parameters need rise > 0 and width >= 0, got c={center}, R={width}, rr={rise}"
            )));
        }
        Ok(Self { center, width, rise })
    }

    pub fn filter_default() -> Self {
        Self { center: 0.4, width: 0.2, rise: 0.05 }
    }

    pub fn bell_default() -> Self {
        Self { center: 0.4, width: 0.1, rise: 0.1 }
    }

    /// `(1 - erf((2|x - c| - R) / rr)) / 2`: close to 1 for `|x - c| < R/2`
    /// and to 0 outside.
    pub fn bell(&self, x: f64) -> f64 {
        0.5 * erfc((2.0 * (x - self.center).abs() - self.width) / self.rise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum Builtin {
    F1,
    F2,
    F3,
    F4,
    /// `x` times the bell: keeps eigenvalues near the centre, removes the rest.
    Filter(FilterParams),
    Bell(FilterParams),
    Relu,
}

impl Builtin {
    pub const IDS: [&'static str; 7] = ["f1", "f2", "f3", "f4", "filter", "bell", "relu"];

    pub fn id(&self) -> &'static str {
        match self {
            Builtin::F1 => "f1",
            Builtin::F2 => "f2",
            Builtin::F3 => "f3",
            Builtin::F4 => "f4",
            Builtin::Filter(_) => "filter",
            Builtin::Bell(_) => "bell",
            Builtin::Relu => "relu",
        }
    }

    pub fn domain(&self) -> Domain {
        let (a, b) = match self {
            Builtin::F1 => (0.0, 3.0),
            Builtin::F2 => (-1.0, 2.0),
            Builtin::F4 => (-0.5, 0.5),
            Builtin::F3 | Builtin::Filter(_) | Builtin::Bell(_) | Builtin::Relu => (-1.0, 1.0),
        };
        Domain::new(a, b).expect("builtin domains are valid")
    }

    pub fn params(&self) -> Option<FilterParams> {
        match self {
            Builtin::Filter(p) | Builtin::Bell(p) => Some(*p),
            _ => None,
        }
    }

    /// Replaces the filter parameters; no effect on other functions.
    pub fn with_params(self, p: FilterParams) -> Self {
        match self {
            Builtin::Filter(_) => Builtin::Filter(p),
            Builtin::Bell(_) => Builtin::Bell(p),
            other => other,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Builtin::F1 => {
                if x < 1.0 {
                    ((-x + 6.0) * x - 6.0) * x + 2.0
                } else {
                    x * x * x
                }
            }
            Builtin::F2 => x.abs().cbrt().powi(2),
            Builtin::F3 => (9.0 * x).cos() + (11.0 * x).sin(),
            Builtin::F4 => (x - 0.1).abs(),
            Builtin::Filter(p) => x * p.bell(x),
            Builtin::Bell(p) => p.bell(x),
            Builtin::Relu => x.max(0.0),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "f1" => Builtin::F1,
            "f2" => Builtin::F2,
            "f3" => Builtin::F3,
            "f4" => Builtin::F4,
            "filter" => Builtin::Filter(FilterParams::filter_default()),
            "bell" => Builtin::Bell(FilterParams::bell_default()),
            "relu" => Builtin::Relu,
            _ => return Err(Error::Parse(format!("unknown function {s:?}; expected one of {:?}", Self::IDS))),
        })
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Alternating Maclaurin series, Kahan-summed; cancellation stays below
    /// 1e-13 for |x| <= 2.
    fn series_oracle(x: f64) -> f64 {
        // erf(x) = 2/√π Σ (-1)^k x^{2k+1} / (k! (2k+1)), Kahan-summed.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut pow = x;
        for k in 0..60 {
            let term = pow / (2 * k + 1) as f64;
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            pow *= -x * x / (k + 1) as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn erf_basics() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(6.0) - 1.0).abs() <= 1e-12);
        assert!(erf(6.0) <= 1.0);
        assert!(erf(f64::NAN).is_nan());
        assert_eq!(erf(f64::INFINITY), 1.0);
    }

    /// erf and erfc to 20 significant digits from a 40-digit reference.
    #[allow(clippy::excessive_precision)]
    const ERF_TABLE: [(f64, f64); 16] = [
        (0.1, 0.1124629160182848984),
        (0.3, 0.32862675945912741619),
        (0.5, 0.52049987781304653768),
        (0.8, 0.74210096470766051259),
        (1.0, 0.84270079294971486934),
        (1.3, 0.93400794494065244585),
        (1.605, 0.97678105441895573437),
        (2.0, 0.99532226501895273416),
        (2.4, 0.99931148610335492111),
        (2.5, 0.99959304798255504106),
        (2.6, 0.99976396558347065091),
        (3.0, 0.99997790950300141456),
        (3.5, 0.99999925690162765859),
        (4.0, 0.99999998458274209972),
        (5.0, 0.99999999999846254021),
        (6.0, 0.99999999999999997848),
    ];
    #[allow(clippy::excessive_precision)]
    const ERFC_TABLE: [(f64, f64); 5] = [
        (3.0, 2.2090496998585441373e-5),
        (4.0, 1.5417257900280018852e-8),
        (5.0, 1.5374597944280348502e-12),
        (8.0, 1.122429717298292708e-29),
        (20.0, 5.3958656116079009289e-176),
    ];

    #[test]
    fn erf_matches_reference_table() {
        for (x, want) in ERF_TABLE {
            assert!((erf(x) - want).abs() <= 1e-15, "x={x}: {} vs {want}", erf(x));
            assert!((erf(-x) + want).abs() <= 1e-15);
        }
    }

    #[test]
    fn erf_matches_alternating_series() {
        for i in -400..=400 {
            let x = i as f64 * 0.005;
            assert!((erf(x) - series_oracle(x)).abs() <= 1e-13, "x={x}");
        }
    }

    #[test]
    fn erfc_tail_is_relative_accurate() {
        for (x, want) in ERFC_TABLE {
            assert!(((erfc(x) - want) / want).abs() < 1e-13, "x={x}: {} vs {want}", erfc(x));
        }
    }

    #[test]
    fn erf_is_monotone() {
        let mut prev = erf(-6.0);
        for i in 1..=10_000 {
            let v = erf(-6.0 + 12.0 * i as f64 / 10_000.0);
            assert!(v >= prev);
            prev = v;
        }
        // Strict where it is not saturated in double precision.
        let mut prev = erf(-5.0);
        for i in 1..=10_000 {
            let v = erf(-5.0 + 10.0 * i as f64 / 10_000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn builtin_values() {
        let f1: Builtin = "f1".parse().unwrap();
        assert_eq!(f1.eval(1.0), 1.0);
        assert!(((-1.0 + 6.0 - 6.0 + 2.0) - f1.eval(1.0 - 1e-15)).abs() < 1e-12);
        assert_eq!(Builtin::F4.eval(0.1), 0.0);
        assert_eq!(Builtin::Relu.eval(-0.5), 0.0);
        assert_eq!(Builtin::Relu.eval(0.5), 0.5);
        assert!((Builtin::F2.eval(-8.0f64.recip()) - 0.25).abs() < 1e-15);
        let filter: Builtin = "filter".parse().unwrap();
        let want = 0.4 * (1.0 + 0.999_999_984_582_742_1) / 2.0;
        assert!((filter.eval(0.4) - want).abs() < 1e-14);
        assert!((filter.eval(0.4) - 0.4).abs() < 1e-7);
        let bell: Builtin = "bell".parse().unwrap();
        assert!((bell.eval(0.45) - 0.5).abs() < 1e-15);
        assert!("f9".parse::<Builtin>().is_err());
    }

    #[test]
    fn domains() {
        assert_eq!(Builtin::F1.domain(), Domain::new(0.0, 3.0).unwrap());
        assert_eq!(Builtin::F2.domain(), Domain::new(-1.0, 2.0).unwrap());
        assert_eq!(Builtin::F4.domain(), Domain::new(-0.5, 0.5).unwrap());
        assert_eq!(Builtin::Relu.domain(), Domain::unit());
    }

    #[test]
    fn params_validated() {
        assert!(FilterParams::new(0.4, 0.2, 0.0).is_err());
        assert!(FilterParams::new(0.4, -0.1, 0.1).is_err());
        let p = FilterParams::new(0.0, 0.5, 0.1).unwrap();
        assert_eq!(Builtin::Bell(FilterParams::bell_default()).with_params(p).params(), Some(p));
        assert_eq!(Builtin::F3.with_params(p), Builtin::F3);
    }

    proptest! {
        #[test]
        fn erf_is_odd_and_bounded(x in -10.0f64..10.0) {
            prop_assert_eq!(erf(-x), -erf(x));
            prop_assert!(erf(x).abs() <= 1.0);
        }

        #[test]
        fn builtins_are_continuous(id in 0usize..7, t in -1.0f64..1.0) {
            let f: Builtin = Builtin::IDS[id].parse().unwrap();
            let x = f.domain().map_from_ref(t);
            let h = 1e-9;
            // Lipschitz constants of all builtins on their domains are below 1e3
            // except f2's cusp, which is Hölder-2/3.
            prop_assert!((f.eval(x + h) - f.eval(x)).abs() < 1e-5);
        }
    }
}
