//! One-photon eight-port homodyne detector.
//!
//! A photon in the two-mode qubit `cos(θ/2)|1,0⟩ + sin(θ/2)e^{iφ}|0,1⟩`
//! leaves through one of four ports. The click probability at detector `j`
//! is `|⟨j|ψ⟩|²` with unnormalized projector vectors
//!
//! ```text
//! |3⟩ = (r, −t e^{−iφ₂})/√2    |4⟩ = (r, t e^{−iφ₂})/√2
//! |5⟩ = (t, −r e^{−iφ₁})/√2    |6⟩ = (t, r e^{−iφ₁})/√2
//! ```
//!
//! With `tan θ₀ = √2`, `t = sin(θ₀/2)`, `r = cos(θ₀/2)` and
//! `φ₁ = −φ₂ = π/4` the four normalized vectors have Bloch vectors
//! `(x, y, xy)/√3`, so the detector realizes the unit-sharpness qubit POVM.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::inversion::{joint_kernel_matrix, JointDist2x2, NEGATIVITY_TOL};
use crate::qubit::{BlochState, QubitPovm};
use crate::sampling;
use crate::{Error, Result};

/// Pure qubit `(cos θ/2, sin θ/2 · e^{iφ})` in the `σz` basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureQubit {
    theta: f64,
    phi: f64,
}

impl PureQubit {
    /// `θ ∈ [0, π]`; `φ` is reduced modulo 2π.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::invalid(format!(
                "need θ in [0, π] and finite φ, got θ = {theta}, φ = {phi}"
            )));
        }
        let phi = phi.rem_euclid(std::f64::consts::TAU);
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi)]
    }

    pub fn bloch(&self) -> BlochState {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        BlochState::new([st * cp, st * sp, ct]).expect("pure state has unit Bloch vector")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EightPortConfig {
    pub t: f64,
    pub r: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl EightPortConfig {
    pub fn new(t: f64, r: f64, phi1: f64, phi2: f64) -> Result<Self> {
        if ![t, r, phi1, phi2].iter().all(|v| v.is_finite()) || (t * t + r * r - 1.0).abs() > 1e-12
        {
            return Err(Error::invalid(format!(
                "beam splitter needs t² + r² = 1, got t = {t}, r = {r}"
            )));
        }
        Ok(Self { t, r, phi1, phi2 })
    }
}

impl Default for EightPortConfig {
    fn default() -> Self {
        let theta0 = 2f64.sqrt().atan();
        let (t, r) = (0.5 * theta0).sin_cos();
        Self {
            t,
            r,
            phi1: std::f64::consts::FRAC_PI_4,
            phi2: -std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Output detectors, in the order `D3, D4, D5, D6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    D3,
    D4,
    D5,
    D6,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D3, Detector::D4, Detector::D5, Detector::D6];

    /// Joint outcome `(x, y)` recorded when this detector clicks.
    pub fn outcome(self) -> (i32, i32) {
        match self {
            Detector::D3 => (-1, -1),
            Detector::D4 => (1, 1),
            Detector::D5 => (-1, 1),
            Detector::D6 => (1, -1),
        }
    }

    /// Index of [`Self::outcome`] in [`JointDist2x2`] storage order.
    pub fn storage_index(self) -> usize {
        match self {
            Detector::D3 => 0,
            Detector::D4 => 3,
            Detector::D5 => 1,
            Detector::D6 => 2,
        }
    }
}

/// Unnormalized `|3⟩, |4⟩, |5⟩, |6⟩`; they resolve the identity.
pub fn projector_vectors(cfg: &EightPortConfig) -> [[Complex64; 2]; 4] {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    let e1 = Complex64::from_polar(1.0, -cfg.phi1);
    let e2 = Complex64::from_polar(1.0, -cfg.phi2);
    let re = |x: f64| Complex64::new(k * x, 0.0);
    [
        [re(cfg.r), -e2 * (k * cfg.t)],
        [re(cfg.r), e2 * (k * cfg.t)],
        [re(cfg.t), -e1 * (k * cfg.r)],
        [re(cfg.t), e1 * (k * cfg.r)],
    ]
}

/// Detector click probabilities `|⟨j|ψ⟩|²` arranged by joint outcome.
pub fn click_probabilities(psi: &PureQubit, cfg: &EightPortConfig) -> JointDist2x2 {
    let amp = psi.amplitudes();
    let mut entries = [0.0; 4];
    for (det, v) in Detector::ALL.into_iter().zip(projector_vectors(cfg)) {
        let overlap = v[0].conj() * amp[0] + v[1].conj() * amp[1];
        entries[det.storage_index()] = overlap.norm_sqr();
    }
    // completeness makes the total one up to rounding
    let total: f64 = entries.iter().sum();
    JointDist2x2::from_entries(entries.map(|p| p / total)).expect("normalized")
}

/// Detector counts from a simulated run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub n3: u64,
    pub n4: u64,
    pub n5: u64,
    pub n6: u64,
    #[serde(rename = "N")]
    pub total: u64,
    pub seed: u64,
    pub config: EightPortConfig,
}

impl ClickRecord {
    pub fn counts(&self) -> [u64; 4] {
        [self.n3, self.n4, self.n5, self.n6]
    }

    /// Relative frequencies arranged by joint outcome.
    pub fn frequencies(&self) -> Result<JointDist2x2> {
        if self.total == 0 || self.counts().iter().sum::<u64>() != self.total {
            return Err(Error::invalid("counts must be positive and sum to N"));
        }
        let mut entries = [0.0; 4];
        for (det, n) in Detector::ALL.into_iter().zip(self.counts()) {
            entries[det.storage_index()] = n as f64 / self.total as f64;
        }
        JointDist2x2::from_entries(entries)
    }
}

/// `n` independent photons through the detector.
///
/// Each draw takes one uniform `f64` from the chunked ChaCha8 stream of
/// [`sampling`] and inverts the cumulative distribution over `D3..D6`.
pub fn sample_clicks(
    psi: &PureQubit,
    cfg: &EightPortConfig,
    n: u64,
    seed: u64,
) -> Result<ClickRecord> {
    if n == 0 {
        return Err(Error::invalid("need at least one photon"));
    }
    let p = click_probabilities(psi, cfg).entries();
    let by_detector = Detector::ALL.map(|d| p[d.storage_index()]);
    let cdf = [
        by_detector[0],
        by_detector[0] + by_detector[1],
        by_detector[0] + by_detector[1] + by_detector[2],
    ];
    let n = usize::try_from(n).map_err(|_| Error::invalid("run too long for this platform"))?;
    let partial = sampling::map_chunks(n, seed, |rng, len| {
        let mut counts = [0u64; 4];
        for _ in 0..len {
            let u: f64 = rng.random();
            let k = cdf.iter().position(|&c| u < c).unwrap_or(3);
            counts[k] += 1;
        }
        counts
    });
    let counts = partial.iter().fold([0u64; 4], |mut acc, c| {
        for (a, b) in acc.iter_mut().zip(c) {
            *a += b;
        }
        acc
    });
    Ok(ClickRecord {
        n3: counts[0],
        n4: counts[1],
        n5: counts[2],
        n6: counts[3],
        total: n as u64,
        seed,
        config: *cfg,
    })
}

/// Joint distribution retrieved from counts, with delta-method errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRetrieval {
    pub frequencies: JointDist2x2,
    pub retrieved: JointDist2x2,
    pub std_errors: [f64; 4],
    /// Entry with the largest `−p/σ`, and that ratio.
    pub most_negative: usize,
    pub significance: f64,
    pub nonclassical: bool,
}

pub const MIN_RECORD_LEN: u64 = 100;

/// Number of standard errors below zero required to flag nonclassicality.
pub const SIGNIFICANCE_SIGMAS: f64 = 3.0;

/// Inverts observed frequencies with the qubit kernels. The retrieved
/// vector is `K f` for the fixed 4×4 kernel `K`, so its covariance is
/// `K Σ Kᵀ` with the multinomial `Σ = (diag f − f fᵀ)/N`.
pub fn empirical_pipeline(record: &ClickRecord, povm: &QubitPovm) -> Result<EmpiricalRetrieval> {
    if record.total < MIN_RECORD_LEN {
        return Err(Error::invalid(format!(
            "need at least {MIN_RECORD_LEN} clicks, got {}",
            record.total
        )));
    }
    let freq = record.frequencies()?;
    let f = freq.entries();
    let k = povm.kernel();
    let kernel = joint_kernel_matrix(&k, &k);
    let retrieved = crate::inversion::invert_joint(&freq, &k, &k);

    let n = record.total as f64;
    let mut cov = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = (if i == j { f[i] } else { 0.0 } - f[i] * f[j]) / n;
        }
    }
    let mut std_errors = [0.0; 4];
    for (i, se) in std_errors.iter_mut().enumerate() {
        let row = &kernel[i];
        let var: f64 = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .map(|(a, b)| row[a] * cov[a][b] * row[b])
            .sum();
        *se = var.max(0.0).sqrt();
    }

    let p = retrieved.entries();
    let ratio = |i: usize| {
        if std_errors[i] > 0.0 {
            -p[i] / std_errors[i]
        } else if p[i] < -NEGATIVITY_TOL {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let most_negative = (0..4)
        .max_by(|&a, &b| ratio(a).total_cmp(&ratio(b)))
        .expect("four entries");
    let significance = ratio(most_negative);
    Ok(EmpiricalRetrieval {
        frequencies: freq,
        retrieved,
        std_errors,
        most_negative,
        significance,
        nonclassical: p[most_negative] < -NEGATIVITY_TOL && significance >= SIGNIFICANCE_SIGMAS,
    })
}
