//! Chebyshev polynomials of the first kind.
//!
//! All coefficient vectors in this crate use the plain-sum convention:
//! `c = (c_0, ..., c_k)` represents `sum_j c_j T_j(t)` with no halving of
//! the leading term. [`cheb_expand`] takes care of converting the classical
//! half-weighted `c_0` of the discrete Chebyshev transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Domain {
    a: f64,
    b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidDomain { a, b });
        }
        Ok(Self { a, b })
    }

    /// The reference interval `[-1, 1]`.
    pub fn unit() -> Self {
        Self { a: -1.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// Affine map of `[a, b]` onto `[-1, 1]`.
    ///
    /// Points outside the domain map outside `[-1, 1]`; no error is raised.
    pub fn map_to_ref(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    /// Inverse of [`Domain::map_to_ref`].
    pub fn map_from_ref(&self, t: f64) -> f64 {
        0.5 * ((self.b - self.a) * t + self.a + self.b)
    }
}

impl TryFrom<[f64; 2]> for Domain {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Domain::new(v[0], v[1])
    }
}

impl From<Domain> for [f64; 2] {
    fn from(d: Domain) -> Self {
        [d.a, d.b]
    }
}

/// Plain-sum Chebyshev coefficients `c_0..c_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChebCoeffs(Vec<f64>);

impl ChebCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyCoefficients);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Chebyshev coefficient"));
        }
        Ok(Self(coeffs))
    }

    /// Polynomial degree, i.e. `len - 1`.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sum of absolute coefficient values; bounds the polynomial on `[-1, 1]`.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        clenshaw(&self.0, t)
    }
}

impl TryFrom<Vec<f64>> for ChebCoeffs {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ChebCoeffs::new(v)
    }
}

impl From<ChebCoeffs> for Vec<f64> {
    fn from(c: ChebCoeffs) -> Self {
        c.0
    }
}

/// A strictly increasing list of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid point"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedGrid);
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Maps a grid on `[-1, 1]` affinely onto `d`.
    pub fn mapped_onto(&self, d: &Domain) -> Self {
        Self(self.0.iter().map(|&t| d.map_from_ref(t)).collect())
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Grid::new(v)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

/// `(T_0(t), ..., T_k(t))` by the three-term recurrence.
pub fn cheb_vector(t: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    cheb_vector_into(t, k, &mut out);
    out
}

/// Same as [`cheb_vector`], appending into `out`.
pub fn cheb_vector_into(t: f64, k: usize, out: &mut Vec<f64>) {
    let start = out.len();
    out.push(1.0);
    if k == 0 {
        return;
    }
    out.push(t);
    for j in 2..=k {
        let next = 2.0 * t * out[start + j - 1] - out[start + j - 2];
        out.push(next);
    }
}

/// Clenshaw summation of `sum_j c_j T_j(t)`.
pub fn clenshaw(c: &[f64], t: f64) -> f64 {
    let Some((&c0, rest)) = c.split_first() else {
        return 0.0;
    };
    let two_t = 2.0 * t;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &cj in rest.iter().rev() {
        let b0 = cj + two_t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c0 + t * b1 - b2
}

/// The `n` roots of `T_n`, ascending.
pub fn cheb_nodes(n: usize) -> Grid {
    assert!(n >= 1, "cheb_nodes needs at least one node");
    let nf = n as f64;
    // j = n..1 gives ascending order since cos is decreasing on [0, pi].
    let mut pts: Vec<f64> = (1..=n)
        .rev()
        .map(|j| (((2 * j - 1) as f64) * PI / (2.0 * nf)).cos())
        .collect();
    // cos(pi/2) is 6e-17, not 0; pin the middle root for odd n.
    if n % 2 == 1 {
        pts[n / 2] = 0.0;
    }
    Grid(pts)
}

/// `n` equally spaced points on `d`, endpoints included exactly.
pub fn equidistant_grid(d: &Domain, n: usize) -> Grid {
    assert!(n >= 2, "equidistant grid needs at least two points");
    let h = (d.b - d.a) / (n - 1) as f64;
    let mut pts: Vec<f64> = (0..n).map(|i| d.a + i as f64 * h).collect();
    pts[n - 1] = d.b;
    Grid(pts)
}

/// Degree-`k` truncated Chebyshev expansion from samples at `cheb_nodes(N)`.
///
/// Uses discrete orthogonality at the roots of `T_N`:
/// `c_j = (2/N) sum_i f(z_i) T_j(z_i)`, with `c_0` halved.
pub fn cheb_expand(values: &[f64], k: usize) -> Result<ChebCoeffs> {
    let n = values.len();
    if k >= n {
        return Err(Error::InsufficientNodes { degree: k, nodes: n });
    }
    let nodes = cheb_nodes(n);
    let mut coeffs = vec![0.0; k + 1];
    let mut basis = Vec::with_capacity(k + 1);
    for (&z, &f) in nodes.points().iter().zip(values) {
        basis.clear();
        cheb_vector_into(z, k, &mut basis);
        for (c, t) in coeffs.iter_mut().zip(&basis) {
            *c += f * t;
        }
    }
    let scale = 2.0 / n as f64;
    for c in coeffs.iter_mut() {
        *c *= scale;
    }
    coeffs[0] *= 0.5;
    ChebCoeffs::new(coeffs)
}
