//! Unbalanced double homodyne detection.
//!
//! The signal mode is mixed with vacuum on a beam splitter with amplitudes
//! `t`, `r`; the outputs are measured along `X̃ = r X_θ + t X_{0,θ}` and
//! `Ỹ = t Y_θ − r Y_{0,θ}`. In the signal frequencies `(u, v)` the observed
//! characteristic factorizes as `C̃ = C⁽ˢ⁾ · H` with the vacuum response
//! `H(u,v) = exp(−(f u² + g v² + 2γ uv)/8)`. Dividing by the marginal
//! responses leaves the factor `exp(−γ uv/4)`, which turns the retrieved
//! Gaussian form indefinite once `|γ|` exceeds `1 + 2n̄`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::inversion::{deconvolve_char, gaussian_density, GaussianChar, GaussianDensity, SymMatrix2};
use crate::sampling;
use crate::{Error, Result};

/// Vacuum variance of either quadrature (`a = X + iY`).
pub const VACUUM_QUADRATURE_VARIANCE: f64 = 0.25;

/// Coefficient of `z² + w²` in the exponent of the vacuum characteristic.
const VACUUM_EXPONENT: f64 = 0.5 * VACUUM_QUADRATURE_VARIANCE;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub t: f64,
    pub r: f64,
    /// Local-oscillator phase, radians.
    pub theta: f64,
}

impl CvConfig {
    pub fn new(t: f64, r: f64, theta: f64) -> Result<Self> {
        let ok = t > 0.0 && t < 1.0 && r > 0.0 && r < 1.0 && theta.is_finite();
        if !ok || (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "need t, r in (0, 1) with t² + r² = 1 and finite θ, got t = {t}, r = {r}, θ = {theta}"
            )));
        }
        Ok(Self { t, r, theta })
    }

    /// From the transmissivity `t²`.
    pub fn from_t2(t2: f64, theta: f64) -> Result<Self> {
        if !(t2 > 0.0 && t2 < 1.0) {
            return Err(Error::invalid(format!("t² must lie in (0, 1), got {t2}")));
        }
        Self::new(t2.sqrt(), (1.0 - t2).sqrt(), theta)
    }

    pub fn balanced(theta: f64) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { t: h, r: h, theta }
    }

    pub fn t2(&self) -> f64 {
        self.t * self.t
    }

    /// Detector frequencies `(u′, v′)` to signal frequencies `(u, v)`.
    pub fn to_signal_frequencies(&self, up: f64, vp: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (up * self.r * c - vp * self.t * s, up * self.r * s + vp * self.t * c)
    }

    pub fn to_detector_frequencies(&self, u: f64, v: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        ((u * c + v * s) / self.r, (-u * s + v * c) / self.t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCoeffs {
    pub f: f64,
    pub g: f64,
    pub gamma: f64,
}

/// `f = (t²/r²)cos²θ + (r²/t²)sin²θ`, `g` with `sin ↔ cos`,
/// `γ = (t² − r²)/(2t²r²) · sin 2θ`. They satisfy `fg − γ² = 1`.
pub fn response_coeffs(cfg: &CvConfig) -> ResponseCoeffs {
    let (t2, r2) = (cfg.t * cfg.t, cfg.r * cfg.r);
    let (s, c) = cfg.theta.sin_cos();
    let a = t2 / r2;
    let b = r2 / t2;
    ResponseCoeffs {
        f: a * c * c + b * s * s,
        g: a * s * s + b * c * c,
        gamma: (t2 - r2) / (2.0 * t2 * r2) * (2.0 * cfg.theta).sin(),
    }
}

/// Vacuum-port frequency response in signal frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstrumentResponse {
    cfg: CvConfig,
    coeffs: ResponseCoeffs,
}

pub fn instrument_response(cfg: &CvConfig) -> InstrumentResponse {
    InstrumentResponse {
        cfg: *cfg,
        coeffs: response_coeffs(cfg),
    }
}

impl InstrumentResponse {
    pub fn coeffs(&self) -> ResponseCoeffs {
        self.coeffs
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let ResponseCoeffs { f, g, gamma } = self.coeffs;
        (-VACUUM_EXPONENT * (f * u * u + g * v * v + 2.0 * gamma * u * v)).exp()
    }

    /// `⟨0|exp(i(z X₀ + w Y₀))|0⟩` with `z = u′t`, `w = −v′r`.
    pub fn eval_vacuum(&self, u: f64, v: f64) -> f64 {
        let (up, vp) = self.cfg.to_detector_frequencies(u, v);
        let (z, w) = (up * self.cfg.t, -vp * self.cfg.r);
        (-VACUUM_EXPONENT * (z * z + w * w)).exp()
    }

    pub fn char_fn(&self) -> impl Fn(f64, f64) -> Complex64 + Copy + '_ {
        move |u, v| Complex64::new(self.eval(u, v), 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputState {
    Coherent { x0: f64, y0: f64 },
    Thermal { nbar: f64 },
}

impl InputState {
    pub fn coherent(x0: f64, y0: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::invalid("coherent amplitude must be finite"));
        }
        Ok(InputState::Coherent { x0, y0 })
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::invalid(format!("n̄ must be ≥ 0, got {nbar}")));
        }
        Ok(InputState::Thermal { nbar })
    }

    pub fn vacuum() -> Self {
        InputState::Coherent { x0: 0.0, y0: 0.0 }
    }

    /// Variance of either signal quadrature.
    pub fn quadrature_variance(&self) -> f64 {
        VACUUM_QUADRATURE_VARIANCE * self.noise_factor()
    }

    fn noise_factor(&self) -> f64 {
        match *self {
            InputState::Coherent { .. } => 1.0,
            InputState::Thermal { nbar } => 1.0 + 2.0 * nbar,
        }
    }

    pub fn mean(&self) -> [f64; 2] {
        match *self {
            InputState::Coherent { x0, y0 } => [x0, y0],
            InputState::Thermal { .. } => [0.0, 0.0],
        }
    }

    /// `|γ|` above which the retrieved form is indefinite: `1 + 2n̄`.
    pub fn gamma_threshold(&self) -> f64 {
        self.noise_factor()
    }
}

/// Symmetric-ordered characteristic of the signal.
pub fn signal_char(state: &InputState) -> GaussianChar {
    let d = VACUUM_EXPONENT * state.noise_factor();
    GaussianChar::new(state.mean(), SymMatrix2::diag(d, d))
}

/// Signal characteristic times `H(u,v)/(H(u,0)H(0,v)) = exp(−γuv/4)`.
pub fn retrieved_char(state: &InputState, cfg: &CvConfig) -> GaussianChar {
    let signal = signal_char(state);
    let gamma = response_coeffs(cfg).gamma;
    GaussianChar::new(
        signal.mean,
        SymMatrix2::new(signal.m.m11, signal.m.m22, VACUUM_EXPONENT * gamma),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CvVerdict {
    Classical { min_eigenvalue: f64 },
    Nonclassical { min_eigenvalue: f64 },
    Boundary { min_eigenvalue: f64 },
}

impl CvVerdict {
    pub fn from_char(g: &GaussianChar) -> Self {
        match gaussian_density(g) {
            GaussianDensity::Distribution { .. } => CvVerdict::Classical {
                min_eigenvalue: g.m.eigenvalues().0,
            },
            GaussianDensity::Boundary { min_eigenvalue } => CvVerdict::Boundary { min_eigenvalue },
            GaussianDensity::NotADistribution { min_eigenvalue } => {
                CvVerdict::Nonclassical { min_eigenvalue }
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            CvVerdict::Classical { min_eigenvalue }
            | CvVerdict::Nonclassical { min_eigenvalue }
            | CvVerdict::Boundary { min_eigenvalue } => min_eigenvalue,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CvVerdict::Classical { .. } => "classical",
            CvVerdict::Nonclassical { .. } => "nonclassical",
            CvVerdict::Boundary { .. } => "boundary",
        }
    }
}

pub fn classify_cv(state: &InputState, cfg: &CvConfig) -> CvVerdict {
    CvVerdict::from_char(&retrieved_char(state, cfg))
}

/// Normal law of the observed pair `(x̃, ỹ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedGaussian {
    pub mean: [f64; 2],
    pub covariance: SymMatrix2,
}

pub fn observed_gaussian(state: &InputState, cfg: &CvConfig) -> ObservedGaussian {
    let (s, c) = cfg.theta.sin_cos();
    let [x0, y0] = state.mean();
    let sigma2 = state.quadrature_variance();
    let (t2, r2) = (cfg.t * cfg.t, cfg.r * cfg.r);
    ObservedGaussian {
        mean: [cfg.r * (x0 * c + y0 * s), cfg.t * (-x0 * s + y0 * c)],
        covariance: SymMatrix2::diag(
            r2 * sigma2 + t2 * VACUUM_QUADRATURE_VARIANCE,
            t2 * sigma2 + r2 * VACUUM_QUADRATURE_VARIANCE,
        ),
    }
}

/// Observed joint characteristic `C̃′(u′, v′) = C⁽ˢ⁾(u,v) H(u,v)`.
pub fn observed_char(state: &InputState, cfg: &CvConfig) -> impl Fn(f64, f64) -> Complex64 {
    let signal = signal_char(state);
    let h = instrument_response(cfg);
    let cfg = *cfg;
    move |up, vp| {
        let (u, v) = cfg.to_signal_frequencies(up, vp);
        signal.eval(u, v) * h.eval(u, v)
    }
}

/// `n` i.i.d. draws of `(x̃, ỹ)` from [`observed_gaussian`].
///
/// Uses the chunked ChaCha8 streams of [`sampling`] and
/// `rand_distr::StandardNormal`, colored by the Cholesky factor.
pub fn sample_observed(
    state: &InputState,
    cfg: &CvConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let law = observed_gaussian(state, cfg);
    let cov = law.covariance;
    let l11 = cov.m11.sqrt();
    let l21 = cov.m12 / l11;
    let l22 = (cov.m22 - l21 * l21).sqrt();
    let chunks = sampling::map_chunks(n, seed, |rng, len| {
        (0..len)
            .map(|_| {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                [law.mean[0] + l11 * z1, law.mean[1] + l21 * z1 + l22 * z2]
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.concat())
}

/// Half-width of the `(u′, v′)` fit grid.
pub const FIT_GRID_HALF_WIDTH: f64 = 2.0;
/// Points per axis of the fit grid, origin included.
pub const FIT_GRID_POINTS: usize = 9;
/// Grid points where `|C̃′|` falls below this are left out of the fit.
pub const MIN_CHAR_MODULUS: f64 = 0.1;
pub const MIN_ESTIMATION_SAMPLES: usize = 1000;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Nonzero axis values of the fit grid: the origin row and column carry no
/// information about `M` and are skipped.
pub fn fit_axis() -> Vec<f64> {
    let step = 2.0 * FIT_GRID_HALF_WIDTH / (FIT_GRID_POINTS - 1) as f64;
    (0..FIT_GRID_POINTS)
        .map(|i| -FIT_GRID_HALF_WIDTH + step * i as f64)
        .filter(|w| w.abs() > 1e-12)
        .collect()
}

/// Fits `ξᵀMξ` to `−ln|C|` of the deconvolved characteristic.
///
/// `observed` is the joint characteristic in detector frequencies. Each
/// grid point `(u′, v′)` is mapped to `(u, v)`, divided by `H(u,0)H(0,v)`
/// and weighted by `|C̃′|²`.
pub fn fit_quadratic_form(
    cfg: &CvConfig,
    observed: impl Fn(f64, f64) -> Complex64,
) -> Result<(SymMatrix2, usize)> {
    let h = instrument_response(cfg);
    let axis = fit_axis();
    let mut points = Vec::with_capacity(axis.len() * axis.len());
    for &up in &axis {
        for &vp in &axis {
            let c = observed(up, vp);
            if c.norm() >= MIN_CHAR_MODULUS {
                points.push((up, vp, c));
            }
        }
    }
    fit_points(cfg, &h, &points)
}

fn fit_points(
    cfg: &CvConfig,
    h: &InstrumentResponse,
    points: &[(f64, f64, Complex64)],
) -> Result<(SymMatrix2, usize)> {
    if points.len() < 3 {
        return Err(Error::FitFailed(format!(
            "only {} grid points with |C̃| ≥ {MIN_CHAR_MODULUS}",
            points.len()
        )));
    }
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(up, vp, c) in points {
        let (u, v) = cfg.to_signal_frequencies(up, vp);
        let deconvolved = deconvolve_char(|_, _| c, h.char_fn()).eval(u, v)?;
        let y = -deconvolved.norm().ln();
        let w = c.norm_sqr();
        let phi = [u * u, v * v, 2.0 * u * v];
        for i in 0..3 {
            rhs[i] += w * phi[i] * y;
            for j in 0..3 {
                normal[i][j] += w * phi[i] * phi[j];
            }
        }
    }
    let sol = solve3(normal, rhs)
        .ok_or_else(|| Error::FitFailed("grid points do not determine M".into()))?;
    Ok((SymMatrix2::new(sol[0], sol[1], sol[2]), points.len()))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Per-sample phasors `exp(i u′ x̃)` and `exp(i v′ ỹ)` on the fit axis,
/// stored row-major by sample.
struct EmpiricalChar {
    axis: Vec<f64>,
    eu: Vec<Complex64>,
    ev: Vec<Complex64>,
}

impl EmpiricalChar {
    fn new(samples: &[[f64; 2]]) -> Self {
        let axis = fit_axis();
        let phasors = |coord: usize| -> Vec<Complex64> {
            samples
                .iter()
                .flat_map(|s| axis.iter().map(move |&w| Complex64::from_polar(1.0, w * s[coord])))
                .collect()
        };
        let (eu, ev) = (phasors(0), phasors(1));
        Self { axis, eu, ev }
    }

    /// Grid points `(u′, v′, C̃′)` averaged over the given sample indices.
    ///
    /// The axis is symmetric, so only `u′ < 0` is accumulated and the rest
    /// follows from `C̃′(−u′, −v′) = conj C̃′(u′, v′)`.
    fn grid(&self, indices: impl Iterator<Item = usize>) -> Vec<(f64, f64, Complex64)> {
        let k = self.axis.len();
        let half = k / 2;
        let mut acc = vec![Complex64::new(0.0, 0.0); half * k];
        let mut count = 0usize;
        for i in indices {
            let eu = &self.eu[i * k..i * k + half];
            let ev = &self.ev[i * k..(i + 1) * k];
            for (row, &pu) in acc.chunks_exact_mut(k).zip(eu) {
                for (c, &pv) in row.iter_mut().zip(ev) {
                    *c += pu * pv;
                }
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        let mut out = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                let c = if a < half {
                    acc[a * k + b]
                } else {
                    acc[(k - 1 - a) * k + (k - 1 - b)].conj()
                };
                out.push((self.axis[a], self.axis[b], c * inv));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MStdErrors {
    pub mean: [f64; 2],
    pub m: SymMatrix2,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MEstimate {
    /// Signal quadrature means recovered from the sample means.
    pub mean: [f64; 2],
    pub m: SymMatrix2,
    /// `8 M̂₁₂`, the estimate of `γ`.
    pub gamma: f64,
    pub points_used: usize,
    pub bootstrap: usize,
    pub std_errors: Option<MStdErrors>,
}

impl MEstimate {
    pub fn verdict(&self) -> CvVerdict {
        CvVerdict::from_char(&GaussianChar::new(self.mean, self.m))
    }
}

fn signal_mean(cfg: &CvConfig, samples: &[[f64; 2]], indices: impl Iterator<Item = usize>) -> [f64; 2] {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for i in indices {
        sx += samples[i][0];
        sy += samples[i][1];
        n += 1;
    }
    let (xt, yt) = (sx / n as f64 / cfg.r, sy / n as f64 / cfg.t);
    let (s, c) = cfg.theta.sin_cos();
    [xt * c - yt * s, xt * s + yt * c]
}

/// Estimates `s` and `M` of the retrieved characteristic from observed
/// samples, with `bootstrap` resamples for standard errors (none when 0).
///
/// Resample `b` draws its indices from substream `b` of `seed`.
pub fn estimate_m(
    samples: &[[f64; 2]],
    cfg: &CvConfig,
    bootstrap: usize,
    seed: u64,
) -> Result<MEstimate> {
    if samples.len() < MIN_ESTIMATION_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_ESTIMATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let h = instrument_response(cfg);
    let emp = EmpiricalChar::new(samples);
    let usable = |grid: Vec<(f64, f64, Complex64)>| -> Vec<_> {
        grid.into_iter()
            .filter(|p| p.2.norm() >= MIN_CHAR_MODULUS)
            .collect()
    };
    let n = samples.len();
    let (m, points_used) = fit_points(cfg, &h, &usable(emp.grid(0..n)))?;
    let mean = signal_mean(cfg, samples, 0..n);

    let std_errors = if bootstrap > 0 {
        let replicate = |b: usize| -> Result<([f64; 2], SymMatrix2)> {
            use rand::Rng;
            let mut rng = sampling::stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let (m, _) = fit_points(cfg, &h, &usable(emp.grid(idx.iter().copied())))?;
            Ok((signal_mean(cfg, samples, idx.into_iter()), m))
        };
        #[cfg(feature = "parallel")]
        let reps: Result<Vec<_>> = {
            use rayon::prelude::*;
            (0..bootstrap).into_par_iter().map(replicate).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let reps: Result<Vec<_>> = (0..bootstrap).map(replicate).collect();
        let reps = reps?;
        let sd = |f: &dyn Fn(&([f64; 2], SymMatrix2)) -> f64| -> f64 {
            let k = reps.len() as f64;
            let mu = reps.iter().map(f).sum::<f64>() / k;
            let var = reps.iter().map(|r| (f(r) - mu).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            var.sqrt()
        };
        let m12 = sd(&|r| r.1.m12);
        Some(MStdErrors {
            mean: [sd(&|r| r.0[0]), sd(&|r| r.0[1])],
            m: SymMatrix2::new(sd(&|r| r.1.m11), sd(&|r| r.1.m22), m12),
            gamma: m12 / VACUUM_EXPONENT,
        })
    } else {
        None
    };

    Ok(MEstimate {
        mean,
        m,
        gamma: m.m12 / VACUUM_EXPONENT,
        points_used,
        bootstrap,
        std_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn random_cfg(rng: &mut impl Rng) -> CvConfig {
        CvConfig::from_t2(rng.random_range(0.01..0.99), rng.random_range(-4.0..4.0)).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CvConfig::from_t2(0.0, 0.1).is_err());
        assert!(CvConfig::from_t2(1.0, 0.1).is_err());
        assert!(CvConfig::new(0.6, 0.6, 0.0).is_err());
        assert!(CvConfig::new(0.6, 0.8, 0.0).is_ok());
        assert!(InputState::thermal(-0.1).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let c = response_coeffs(&CvConfig::balanced(0.37));
        assert_abs_diff_eq!(c.f, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.g, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.gamma, 0.0, epsilon = 1e-12);

        let c = response_coeffs(&CvConfig::from_t2(0.8, FRAC_PI_4).unwrap());
        assert_abs_diff_eq!(c.f, 2.125, epsilon = 1e-12);
        assert_abs_diff_eq!(c.g, 2.125, epsilon = 1e-12);
        assert_abs_diff_eq!(c.gamma, 1.875, epsilon = 1e-12);

        let c = response_coeffs(&CvConfig::from_t2(std::f64::consts::FRAC_1_SQRT_2, FRAC_PI_4).unwrap());
        assert_abs_diff_eq!(c.gamma, 1.0, epsilon = 1e-10);

        for theta in [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            let c = response_coeffs(&CvConfig::from_t2(0.3, theta).unwrap());
            assert_abs_diff_eq!(c.gamma, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn coefficient_identity_and_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let cfg = random_cfg(&mut rng);
            let c = response_coeffs(&cfg);
            assert!(c.f > 0.0 && c.g > 0.0);
            assert_abs_diff_eq!(c.f * c.g - c.gamma * c.gamma, 1.0, epsilon = 1e-10 * c.f * c.g);
            let h = instrument_response(&cfg);
            let (u, v) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (a, b) = (h.eval(u, v), h.eval_vacuum(u, v));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-300, "{a} vs {b}");
        }
    }

    #[test]
    fn frequency_maps_are_inverse() {
        let cfg = CvConfig::from_t2(0.3, 1.1).unwrap();
        let (u, v) = cfg.to_signal_frequencies(0.7, -1.3);
        let (up, vp) = cfg.to_detector_frequencies(u, v);
        assert_abs_diff_eq!(up, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(vp, -1.3, epsilon = 1e-14);
    }

    #[test]
    fn response_examples() {
        let h = instrument_response(&CvConfig::from_t2(0.8, FRAC_PI_4).unwrap());
        assert_eq!(h.eval(0.0, 0.0), 1.0);
        assert_abs_diff_eq!(h.eval(1.0, 1.0), (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(h.eval(0.6, 0.0), (-2.125 * 0.36 / 8.0f64).exp(), epsilon = 1e-14);
        let d = deconvolve_char(h.char_fn(), h.char_fn());
        for (u, v) in [(0.5, 0.5), (-1.0, 2.0), (1.3, -0.2)] {
            assert_abs_diff_eq!(d.eval(u, v).unwrap().re, (-1.875 * u * v / 4.0f64).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn signal_char_examples() {
        let g = signal_char(&InputState::vacuum());
        assert_eq!(g.mean, [0.0, 0.0]);
        assert_eq!(g.m, SymMatrix2::diag(0.125, 0.125));
        let g = signal_char(&InputState::thermal(1.0).unwrap());
        assert_eq!(g.m, SymMatrix2::diag(0.375, 0.375));
        let g = signal_char(&InputState::coherent(2.0, -1.0).unwrap());
        assert_eq!(g.mean, [2.0, -1.0]);
        assert_eq!(g.m, SymMatrix2::diag(0.125, 0.125));
    }

    #[test]
    fn retrieved_char_examples() {
        let g = retrieved_char(&InputState::coherent(1.0, 1.0).unwrap(), &CvConfig::balanced(0.3));
        assert_abs_diff_eq!(g.m.m12, 0.0, epsilon = 1e-15);
        assert_eq!(g.m.m11, 0.125);

        let cfg = CvConfig::from_t2(0.8, FRAC_PI_4).unwrap();
        let g = retrieved_char(&InputState::coherent(1.0, 1.0).unwrap(), &cfg);
        assert_eq!(g.mean, [1.0, 1.0]);
        assert_abs_diff_eq!(g.m.m12, 1.875 / 8.0, epsilon = 1e-13);
        assert_eq!(g.m.m11, 0.125);

        let g = retrieved_char(&InputState::thermal(2.0).unwrap(), &cfg);
        assert_eq!(g.m.m11, 5.0 / 8.0);
        assert_eq!(g.m.m22, 5.0 / 8.0);
        assert_abs_diff_eq!(g.m.m12, 1.875 / 8.0, epsilon = 1e-13);
    }

    #[test]
    fn retrieved_char_equals_numeric_deconvolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let cfg = random_cfg(&mut rng);
            let state = if rng.random_bool(0.5) {
                InputState::coherent(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)).unwrap()
            } else {
                InputState::thermal(rng.random_range(0.0..3.0)).unwrap()
            };
            let h = instrument_response(&cfg);
            let signal = signal_char(&state);
            let observed = move |u: f64, v: f64| signal.eval(u, v) * h.eval(u, v);
            let d = deconvolve_char(observed, h.char_fn());
            let expected = retrieved_char(&state, &cfg);
            for _ in 0..5 {
                let (u, v) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let diff = d.eval(u, v).unwrap() - expected.eval(u, v);
                assert!(diff.norm() < 1e-10 * expected.eval(u, v).norm().max(1.0));
            }
            // marginals are the signal's own
            for w in [0.3, -1.2] {
                assert!((d.eval(w, 0.0).unwrap() - signal.eval(w, 0.0)).norm() < 1e-12);
                assert!((d.eval(0.0, w).unwrap() - signal.eval(0.0, w)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn classification_examples() {
        let cfg = CvConfig::from_t2(0.8, FRAC_PI_4).unwrap();
        assert!(matches!(classify_cv(&InputState::vacuum(), &cfg), CvVerdict::Nonclassical { .. }));
        assert!(matches!(
            classify_cv(&InputState::thermal(1.0).unwrap(), &cfg),
            CvVerdict::Classical { .. }
        ));
        let steep = CvConfig::from_t2(0.95, FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(response_coeffs(&steep).gamma, 9.473_684_210_526_3, epsilon = 1e-9);
        assert!(matches!(
            classify_cv(&InputState::thermal(1.0).unwrap(), &steep),
            CvVerdict::Nonclassical { .. }
        ));
        let edge = CvConfig::from_t2(std::f64::consts::FRAC_1_SQRT_2, FRAC_PI_4).unwrap();
        assert!(matches!(classify_cv(&InputState::vacuum(), &edge), CvVerdict::Boundary { .. }));
    }

    #[test]
    fn coherent_eigenvalues_and_threshold_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let cfg = random_cfg(&mut rng);
            let gamma = response_coeffs(&cfg).gamma;
            let (lo, hi) = retrieved_char(&InputState::vacuum(), &cfg).m.eigenvalues();
            assert_abs_diff_eq!(lo, (1.0 - gamma.abs()) / 8.0, epsilon = 1e-12 * (1.0 + gamma.abs()));
            assert_abs_diff_eq!(hi, (1.0 + gamma.abs()) / 8.0, epsilon = 1e-12 * (1.0 + gamma.abs()));
        }
        let nonclassical = |t2: f64| {
            let cfg = CvConfig::from_t2(t2, FRAC_PI_4).unwrap();
            retrieved_char(&InputState::vacuum(), &cfg).m.eigenvalues().0 < 0.0
        };
        let (mut a, mut b) = (0.5, 0.99);
        while b - a > 1e-12 {
            let mid = 0.5 * (a + b);
            if nonclassical(mid) {
                b = mid;
            } else {
                a = mid;
            }
        }
        assert_abs_diff_eq!(a, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-8);
    }

    #[test]
    fn thermal_noise_restores_classicality() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..200 {
            let cfg = random_cfg(&mut rng);
            let gamma = response_coeffs(&cfg).gamma.abs();
            let onset = ((gamma - 1.0) / 2.0).max(0.0);
            for extra in [1e-6, 0.1, 1.0, 10.0] {
                let v = classify_cv(&InputState::thermal(onset + extra).unwrap(), &cfg);
                assert!(matches!(v, CvVerdict::Classical { .. }), "γ = {gamma}");
            }
        }
    }

    #[test]
    fn observed_gaussian_examples() {
        let law = observed_gaussian(&InputState::vacuum(), &CvConfig::from_t2(0.37, 0.9).unwrap());
        assert_eq!(law.mean, [0.0, 0.0]);
        assert_abs_diff_eq!(law.covariance.m11, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(law.covariance.m22, 0.25, epsilon = 1e-15);

        let law = observed_gaussian(&InputState::coherent(2.0, 0.0).unwrap(), &CvConfig::from_t2(0.8, 0.0).unwrap());
        assert_abs_diff_eq!(law.mean[0], 0.894_427_190_999_916, epsilon = 1e-12);
        assert_abs_diff_eq!(law.mean[1], 0.0, epsilon = 1e-15);

        let law = observed_gaussian(&InputState::thermal(1.0).unwrap(), &CvConfig::from_t2(0.8, FRAC_PI_4).unwrap());
        assert_abs_diff_eq!(law.covariance.m11, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(law.covariance.m22, 0.65, epsilon = 1e-12);
        assert_eq!(law.covariance.m12, 0.0);
    }

    #[test]
    fn observed_gaussian_matches_char_derivatives() {
        // mean and covariance from finite differences of ln C̃′ at the origin
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let hstep = 1e-4;
        for _ in 0..20 {
            let cfg = random_cfg(&mut rng);
            let state = if rng.random_bool(0.5) {
                InputState::coherent(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)).unwrap()
            } else {
                InputState::thermal(rng.random_range(0.0..2.0)).unwrap()
            };
            let c = observed_char(&state, &cfg);
            let ln = |a: f64, b: f64| c(a, b).ln();
            let mean_x = ((ln(hstep, 0.0) - ln(-hstep, 0.0)) / (2.0 * hstep)).im;
            let mean_y = ((ln(0.0, hstep) - ln(0.0, -hstep)) / (2.0 * hstep)).im;
            let d2 = |a: (f64, f64), b: (f64, f64)| {
                let f = |s: f64, t: f64| ln(s * a.0 + t * b.0, s * a.1 + t * b.1).re;
                -(f(hstep, hstep) - f(hstep, -hstep) - f(-hstep, hstep) + f(-hstep, -hstep)) / (4.0 * hstep * hstep)
            };
            let law = observed_gaussian(&state, &cfg);
            assert_abs_diff_eq!(mean_x, law.mean[0], epsilon = 1e-6);
            assert_abs_diff_eq!(mean_y, law.mean[1], epsilon = 1e-6);
            assert_abs_diff_eq!(d2((1.0, 0.0), (1.0, 0.0)), law.covariance.m11, epsilon = 1e-5);
            assert_abs_diff_eq!(d2((0.0, 1.0), (0.0, 1.0)), law.covariance.m22, epsilon = 1e-5);
            assert_abs_diff_eq!(d2((1.0, 0.0), (0.0, 1.0)), law.covariance.m12, epsilon = 1e-5);
        }
    }

    #[test]
    fn sampling_examples() {
        let cfg = CvConfig::from_t2(0.8, FRAC_PI_4).unwrap();
        let xs = sample_observed(&InputState::vacuum(), &cfg, 100_000, 8).unwrap();
        let n = xs.len() as f64;
        let mx = xs.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = xs.iter().map(|p| p[1]).sum::<f64>() / n;
        let cxx = xs.iter().map(|p| (p[0] - mx).powi(2)).sum::<f64>() / n;
        let cyy = xs.iter().map(|p| (p[1] - my).powi(2)).sum::<f64>() / n;
        let cxy = xs.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum::<f64>() / n;
        assert!((cxx - 0.25).abs() < 0.01 && (cyy - 0.25).abs() < 0.01 && cxy.abs() < 0.01);

        assert_eq!(sample_observed(&InputState::vacuum(), &cfg, 1, 8).unwrap().len(), 1);
        let a = sample_observed(&InputState::thermal(0.5).unwrap(), &cfg, 70_000, 8).unwrap();
        let b = sample_observed(&InputState::thermal(0.5).unwrap(), &cfg, 70_000, 8).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p[0].to_bits() == q[0].to_bits() && p[1].to_bits() == q[1].to_bits()));
    }

    #[test]
    fn exact_characteristic_fits_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..50 {
            let cfg = CvConfig::from_t2(rng.random_range(0.1..0.9), rng.random_range(0.0..3.0)).unwrap();
            let state = InputState::thermal(rng.random_range(0.0..0.5)).unwrap();
            let (m, _) = fit_quadratic_form(&cfg, observed_char(&state, &cfg)).unwrap();
            let want = retrieved_char(&state, &cfg).m;
            assert_abs_diff_eq!(m.m11, want.m11, epsilon = 1e-8);
            assert_abs_diff_eq!(m.m22, want.m22, epsilon = 1e-8);
            assert_abs_diff_eq!(m.m12, want.m12, epsilon = 1e-8);
        }
    }

    #[test]
    fn empirical_grid_matches_direct_sum() {
        let cfg = CvConfig::from_t2(0.3, 0.4).unwrap();
        let xs = sample_observed(&InputState::coherent(0.7, -0.2).unwrap(), &cfg, 500, 1).unwrap();
        let emp = EmpiricalChar::new(&xs);
        let grid = emp.grid(0..xs.len());
        assert_eq!(grid.len(), 64);
        for (up, vp, c) in grid {
            let direct: Complex64 = xs
                .iter()
                .map(|p| Complex64::from_polar(1.0, up * p[0] + vp * p[1]))
                .sum::<Complex64>()
                / xs.len() as f64;
            assert!((c - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn fit_fails_for_broad_states() {
        let cfg = CvConfig::from_t2(0.5, 0.3).unwrap();
        let err = fit_quadratic_form(&cfg, observed_char(&InputState::thermal(50.0).unwrap(), &cfg)).unwrap_err();
        assert!(matches!(err, Error::FitFailed(_)));
        assert!(estimate_m(&[[0.0, 0.0]; 999], &cfg, 0, 0).is_err());
    }

    #[test]
    fn estimator_examples() {
        let cfg = CvConfig::from_t2(0.8, FRAC_PI_4).unwrap();
        let xs = sample_observed(&InputState::vacuum(), &cfg, 100_000, 2024).unwrap();
        let est = estimate_m(&xs, &cfg, 20, 2024).unwrap();
        assert!((est.gamma - 1.875).abs() < 0.05, "γ̂ = {}", est.gamma);
        assert!(matches!(est.verdict(), CvVerdict::Nonclassical { .. }));
        let se = est.std_errors.unwrap();
        assert!(se.gamma > 0.0 && se.gamma < 0.05, "{se:?}");
        assert!(est.mean[0].abs() < 0.02 && est.mean[1].abs() < 0.02);

        let balanced = CvConfig::balanced(FRAC_PI_4);
        let xs = sample_observed(&InputState::vacuum(), &balanced, 100_000, 7).unwrap();
        let est = estimate_m(&xs, &balanced, 0, 7).unwrap();
        assert!(est.gamma.abs() < 0.05, "γ̂ = {}", est.gamma);
        assert!(est.std_errors.is_none());

        let shifted = InputState::coherent(1.5, -0.5).unwrap();
        let xs = sample_observed(&shifted, &cfg, 100_000, 3).unwrap();
        let est = estimate_m(&xs, &cfg, 0, 3).unwrap();
        assert!((est.mean[0] - 1.5).abs() < 0.02 && (est.mean[1] + 0.5).abs() < 0.02, "{:?}", est.mean);
    }
}
