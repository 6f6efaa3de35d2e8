//! Kernel inversion of two-outcome statistics and deconvolution of
//! characteristic functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Entries below `-NEGATIVITY_TOL` count as negative.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// Allowed deviation of a distribution's total from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Eigenvalues with magnitude at or below this are treated as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// `|H(u,0) H(0,v)|` below this is treated as a zero of the response.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

/// A dichotomic outcome, `-1` or `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub const ALL: [Sign; 2] = [Sign::Minus, Sign::Plus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sign::Minus => 0,
            Sign::Plus => 1,
        }
    }

    pub fn from_value(v: i32) -> Option<Sign> {
        match v {
            -1 => Some(Sign::Minus),
            1 => Some(Sign::Plus),
            _ => None,
        }
    }
}

/// Real function on `{-1,+1}²` with unit total.
///
/// Entries are stored in the fixed order `(-1,-1), (-1,+1), (+1,-1), (+1,+1)`;
/// that order is also the serialized layout. After inversion entries may be
/// negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct JointDist2x2 {
    entries: [f64; 4],
}

impl JointDist2x2 {
    /// Outcome pairs in storage order.
    pub const OUTCOMES: [(Sign, Sign); 4] = [
        (Sign::Minus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Plus, Sign::Plus),
    ];

    pub fn from_entries(entries: [f64; 4]) -> Result<Self> {
        if entries.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("distribution entries must be finite"));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    /// Builds a distribution from `f(x, y)` with `x, y = ±1`.
    pub fn from_fn(mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut entries = [0.0; 4];
        for (e, (x, y)) in entries.iter_mut().zip(Self::OUTCOMES) {
            *e = f(x.value(), y.value());
        }
        Self::from_entries(entries)
    }

    pub fn uniform() -> Self {
        Self {
            entries: [0.25; 4],
        }
    }

    pub fn index(x: Sign, y: Sign) -> usize {
        2 * x.index() + y.index()
    }

    pub fn get(&self, x: Sign, y: Sign) -> f64 {
        self.entries[Self::index(x, y)]
    }

    /// Value at numeric outcomes; panics unless both are `±1`.
    pub fn at(&self, x: i32, y: i32) -> f64 {
        let sx = Sign::from_value(x).expect("outcome must be ±1");
        let sy = Sign::from_value(y).expect("outcome must be ±1");
        self.get(sx, sy)
    }

    pub fn entries(&self) -> [f64; 4] {
        self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// `[p(-1), p(+1)]` summed over `y`.
    pub fn marginal_x(&self) -> [f64; 2] {
        let e = &self.entries;
        [e[0] + e[1], e[2] + e[3]]
    }

    /// `[p(-1), p(+1)]` summed over `x`.
    pub fn marginal_y(&self) -> [f64; 2] {
        let e = &self.entries;
        [e[0] + e[2], e[1] + e[3]]
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_probability(&self) -> bool {
        self.min_entry() >= -NEGATIVITY_TOL
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<[f64; 4]> for JointDist2x2 {
    type Error = Error;

    fn try_from(entries: [f64; 4]) -> Result<Self> {
        Self::from_entries(entries)
    }
}

impl From<JointDist2x2> for [f64; 4] {
    fn from(d: JointDist2x2) -> Self {
        d.entries
    }
}

/// Two-outcome inversion kernel `μ(a, a′)`, rows `a`, columns `a′`.
///
/// Every column sums to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel2 {
    mu: [[f64; 2]; 2],
}

impl Kernel2 {
    pub fn new(mu: [[f64; 2]; 2]) -> Result<Self> {
        for col in 0..2 {
            let sum = mu[0][col] + mu[1][col];
            if !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::invalid(format!(
                    "kernel column {col} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { mu })
    }

    pub fn identity() -> Self {
        Self {
            mu: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// `μ(a, a′) = (1 + (√3/η) a a′)/2`, the kernel that undoes the qubit
    /// POVM of sharpness `η`. Any `η > 0` is accepted here.
    pub fn qubit(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("η must be positive, got {eta}")));
        }
        let c = 3f64.sqrt() / eta;
        let mut mu = [[0.0; 2]; 2];
        for a in Sign::ALL {
            for ap in Sign::ALL {
                mu[a.index()][ap.index()] = 0.5 * (1.0 + c * a.value() * ap.value());
            }
        }
        Ok(Self { mu })
    }

    pub fn get(&self, a: Sign, a_prime: Sign) -> f64 {
        self.mu[a.index()][a_prime.index()]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.mu
    }
}

/// `p(a) = Σ_a′ μ(a, a′) p̃(a′)` on a two-outcome marginal.
pub fn invert_marginal(observed: [f64; 2], kernel: &Kernel2) -> [f64; 2] {
    let mu = &kernel.mu;
    [
        mu[0][0] * observed[0] + mu[0][1] * observed[1],
        mu[1][0] * observed[0] + mu[1][1] * observed[1],
    ]
}

/// Applies the product kernel `μX ⊗ μY` to the observed joint distribution.
///
/// Column normalization of both kernels keeps the result normalized, and
/// its marginals coincide with [`invert_marginal`] of the observed marginals.
pub fn invert_joint(observed: &JointDist2x2, kx: &Kernel2, ky: &Kernel2) -> JointDist2x2 {
    let matrix = joint_kernel_matrix(kx, ky);
    let mut entries = [0.0; 4];
    for (out, row) in entries.iter_mut().zip(matrix.iter()) {
        *out = row.iter().zip(observed.entries).map(|(k, p)| k * p).sum();
    }
    JointDist2x2 { entries }
}

/// 4×4 matrix of `μX(x,x′) μY(y,y′)` in storage order.
pub fn joint_kernel_matrix(kx: &Kernel2, ky: &Kernel2) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (i, (x, y)) in JointDist2x2::OUTCOMES.into_iter().enumerate() {
        for (j, (xp, yp)) in JointDist2x2::OUTCOMES.into_iter().enumerate() {
            m[i][j] = kx.get(x, xp) * ky.get(y, yp);
        }
    }
    m
}

/// Real symmetric 2×2 matrix stored as `(m11, m22, m12)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix2 {
    pub m11: f64,
    pub m22: f64,
    pub m12: f64,
}

impl SymMatrix2 {
    pub fn new(m11: f64, m22: f64, m12: f64) -> Self {
        Self { m11, m22, m12 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, b, 0.0)
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(k * self.m11, k * self.m22, k * self.m12)
    }

    /// `ξᵀ M ξ`.
    pub fn quadratic_form(&self, u: f64, v: f64) -> f64 {
        self.m11 * u * u + self.m22 * v * v + 2.0 * self.m12 * u * v
    }

    /// `(min, max)` eigenvalues.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.m11 + self.m22);
        let half_diff = 0.5 * (self.m11 - self.m22);
        let radius = half_diff.hypot(self.m12);
        (mean - radius, mean + radius)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m12, self.m22]]
    }

    /// Swaps the two coordinates.
    pub fn swapped(&self) -> Self {
        Self::new(self.m22, self.m11, self.m12)
    }
}

/// Characteristic function `exp(i ξ·s − ξᵀ M ξ)` with `ξ = (u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianChar {
    pub mean: [f64; 2],
    pub m: SymMatrix2,
}

impl GaussianChar {
    pub fn new(mean: [f64; 2], m: SymMatrix2) -> Self {
        Self { mean, m }
    }

    pub fn eval(&self, u: f64, v: f64) -> Complex64 {
        let phase = u * self.mean[0] + v * self.mean[1];
        Complex64::from_polar((-self.m.quadratic_form(u, v)).exp(), phase)
    }
}

/// Outcome of Fourier-inverting a [`GaussianChar`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianDensity {
    /// `M` positive definite: a normal density with covariance `2M`.
    Distribution {
        mean: [f64; 2],
        covariance: SymMatrix2,
    },
    /// Smallest eigenvalue of `M` is zero within [`ZERO_EIGENVALUE_TOL`].
    Boundary { min_eigenvalue: f64 },
    /// `M` has a negative eigenvalue; the inverse transform diverges.
    NotADistribution { min_eigenvalue: f64 },
}

impl GaussianDensity {
    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            GaussianDensity::Distribution { covariance, .. } => 0.5 * covariance.eigenvalues().0,
            GaussianDensity::Boundary { min_eigenvalue }
            | GaussianDensity::NotADistribution { min_eigenvalue } => min_eigenvalue,
        }
    }
}

pub fn gaussian_density(g: &GaussianChar) -> GaussianDensity {
    let (min_eigenvalue, _) = g.m.eigenvalues();
    if min_eigenvalue.abs() <= ZERO_EIGENVALUE_TOL {
        GaussianDensity::Boundary { min_eigenvalue }
    } else if min_eigenvalue < 0.0 {
        GaussianDensity::NotADistribution { min_eigenvalue }
    } else {
        GaussianDensity::Distribution {
            mean: g.mean,
            covariance: g.m.scaled(2.0),
        }
    }
}

/// Observed joint characteristic divided by the marginal instrument
/// responses: `C̃(u,v) / (H(u,0) H(0,v))`.
#[derive(Clone, Copy, Debug)]
pub struct Deconvolved<C, H> {
    observed: C,
    response: H,
}

pub fn deconvolve_char<C, H>(observed: C, response: H) -> Deconvolved<C, H>
where
    C: Fn(f64, f64) -> Complex64,
    H: Fn(f64, f64) -> Complex64,
{
    Deconvolved { observed, response }
}

impl<C, H> Deconvolved<C, H>
where
    C: Fn(f64, f64) -> Complex64,
    H: Fn(f64, f64) -> Complex64,
{
    pub fn eval(&self, u: f64, v: f64) -> Result<Complex64> {
        let denom = (self.response)(u, 0.0) * (self.response)(0.0, v);
        let magnitude = denom.norm();
        if !(magnitude >= UNDERFLOW_GUARD) {
            return Err(Error::ResponseUnderflow { u, v, magnitude });
        }
        Ok((self.observed)(u, v) / denom)
    }
}
