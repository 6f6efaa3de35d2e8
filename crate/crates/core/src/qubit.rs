//! Qubit joint measurement of `σx` and `σy` through a four-outcome POVM.
//!
//! The POVM elements are `(σ₀ + η(x,y)·σ)/4` with
//! `η(x,y) = (η/√3)(x, y, xy)`. Inverting the observed marginals with
//! [`Kernel2::qubit`] recovers the exact `σx`, `σy` statistics; inverting the
//! joint distribution with the same kernels gives
//! `p(x,y) = (1 + x s_x + y s_y + (√3/η) xy s_z)/4`, negative for suitable
//! `η` whenever `s ≠ 0`.

use serde::{Deserialize, Serialize};

use crate::inversion::{invert_joint, JointDist2x2, Kernel2, NEGATIVITY_TOL};
use crate::{Error, Result};

pub(crate) const SQRT3: f64 = 1.732_050_807_568_877_2;

const NORM_TOL: f64 = 1e-12;

/// Qubit density operator `(σ₀ + s·σ)/2` given by its Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochState {
    s: [f64; 3],
}

impl BlochState {
    pub fn new(s: [f64; 3]) -> Result<Self> {
        if s.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("Bloch components must be finite"));
        }
        let norm = norm3(&s);
        if norm > 1.0 + NORM_TOL {
            return Err(Error::invalid(format!("|s| = {norm} exceeds 1")));
        }
        Ok(Self { s })
    }

    pub fn maximally_mixed() -> Self {
        Self { s: [0.0; 3] }
    }

    /// State `(0, 0, r)`.
    pub fn along_z(r: f64) -> Result<Self> {
        Self::new([0.0, 0.0, r])
    }

    pub fn vector(&self) -> [f64; 3] {
        self.s
    }

    pub fn norm(&self) -> f64 {
        norm3(&self.s)
    }
}

impl TryFrom<[f64; 3]> for BlochState {
    type Error = Error;

    fn try_from(s: [f64; 3]) -> Result<Self> {
        Self::new(s)
    }
}

impl From<BlochState> for [f64; 3] {
    fn from(b: BlochState) -> Self {
        b.s
    }
}

/// The η-family POVM; positivity of its elements needs `0 < η ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QubitPovm {
    eta: f64,
}

impl QubitPovm {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("η must lie in (0, 1], got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `η(x,y) = (η/√3)(x, y, xy)`.
    pub fn eta_vector(&self, x: f64, y: f64) -> [f64; 3] {
        let c = self.eta / SQRT3;
        [c * x, c * y, c * x * y]
    }

    pub fn kernel(&self) -> Kernel2 {
        Kernel2::qubit(self.eta).expect("η > 0 by construction")
    }
}

impl TryFrom<f64> for QubitPovm {
    type Error = Error;

    fn try_from(eta: f64) -> Result<Self> {
        Self::new(eta)
    }
}

impl From<QubitPovm> for f64 {
    fn from(m: QubitPovm) -> Self {
        m.eta
    }
}

/// Observed statistics `p̃(x,y) = (1 + η(x,y)·s)/4`.
pub fn povm_statistics(rho: &BlochState, povm: &QubitPovm) -> JointDist2x2 {
    let s = rho.s;
    JointDist2x2::from_fn(|x, y| {
        let e = povm.eta_vector(x, y);
        0.25 * (1.0 + e[0] * s[0] + e[1] * s[1] + e[2] * s[2])
    })
    .expect("POVM statistics are normalized")
}

pub fn qubit_kernel(povm: &QubitPovm) -> Kernel2 {
    povm.kernel()
}

/// Observed statistics pushed through the qubit kernels on both axes.
pub fn retrieve_joint(rho: &BlochState, povm: &QubitPovm) -> JointDist2x2 {
    let k = povm.kernel();
    invert_joint(&povm_statistics(rho, povm), &k, &k)
}

/// `(1 + x s_x + y s_y + (√3/η) xy s_z)/4` for any `η > 0`.
///
/// Agrees with [`retrieve_joint`] on `0 < η ≤ 1` and extends it beyond the
/// POVM range, which threshold scans need when `√3|s| > 1`.
pub fn retrieved_closed_form(rho: &BlochState, eta: f64) -> Result<JointDist2x2> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("η must be positive, got {eta}")));
    }
    let s = rho.s;
    let c = SQRT3 / eta;
    JointDist2x2::from_fn(|x, y| 0.25 * (1.0 + x * s[0] + y * s[1] + c * x * y * s[2]))
}

/// Proper rotation `R` with `R s = (0, 0, |s|)`.
///
/// Rodrigues rotation of `s/|s|` onto `ẑ` about `s × ẑ`; identity when `s`
/// is zero or along `+ẑ`, rotation by π about `x̂` when along `−ẑ`.
pub fn rotate_to_z(rho: &BlochState) -> (BlochState, [[f64; 3]; 3]) {
    let norm = rho.norm();
    let rotated = BlochState {
        s: [0.0, 0.0, norm],
    };
    if norm == 0.0 {
        return (rotated, IDENTITY3);
    }
    let n = rho.s.map(|c| c / norm);
    // n × ẑ = (n_y, -n_x, 0)
    let axis = [n[1], -n[0], 0.0];
    let sin = norm3(&axis);
    let cos = n[2];
    if sin <= f64::EPSILON {
        return if cos > 0.0 {
            (rotated, IDENTITY3)
        } else {
            (rotated, [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
        };
    }
    let k = axis.map(|c| c / sin);
    let kx = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    let mut r = IDENTITY3;
    for i in 0..3 {
        for j in 0..3 {
            let kk: f64 = (0..3).map(|l| kx[i][l] * kx[l][j]).sum();
            r[i][j] += sin * kx[i][j] + (1.0 - cos) * kk;
        }
    }
    (rotated, r)
}

const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum QubitVerdict {
    Classical { min_entry: f64 },
    Nonclassical { min_entry: f64 },
}

impl QubitVerdict {
    pub fn is_nonclassical(&self) -> bool {
        matches!(self, QubitVerdict::Nonclassical { .. })
    }

    pub fn min_entry(&self) -> f64 {
        match *self {
            QubitVerdict::Classical { min_entry } | QubitVerdict::Nonclassical { min_entry } => {
                min_entry
            }
        }
    }
}

/// Rotates the state onto `ẑ`, retrieves the joint distribution and looks
/// for a negative entry. Equivalent to `η < √3|s|`.
pub fn classify_qubit(rho: &BlochState, povm: &QubitPovm) -> QubitVerdict {
    let (rotated, _) = rotate_to_z(rho);
    let min_entry = retrieve_joint(&rotated, povm).min_entry();
    if min_entry < -NEGATIVITY_TOL {
        QubitVerdict::Nonclassical { min_entry }
    } else {
        QubitVerdict::Classical { min_entry }
    }
}

/// Largest `η` for which the retrieved distribution of a state with Bloch
/// length `|s|` is still nonnegative: `√3|s|`.
pub fn threshold_eta(s_norm: f64) -> f64 {
    SQRT3 * s_norm
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::Sign;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng) -> BlochState {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            if let Ok(b) = BlochState::new(v) {
                return b;
            }
        }
    }

    fn mat_vec(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| (0..3).map(|j| r[i][j] * v[j]).sum())
    }

    fn det3(r: &[[f64; 3]; 3]) -> f64 {
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    #[test]
    fn povm_eta_vectors_are_normalized_and_balanced() {
        let m = QubitPovm::new(0.8).unwrap();
        let mut sum = [0.0; 3];
        for x in Sign::ALL {
            for y in Sign::ALL {
                let e = m.eta_vector(x.value(), y.value());
                assert_abs_diff_eq!(norm3(&e), 0.8, epsilon = 1e-15);
                for i in 0..3 {
                    sum[i] += e[i];
                }
            }
        }
        assert_eq!(sum, [0.0; 3]);
    }

    #[test]
    fn constructors_validate() {
        assert!(QubitPovm::new(0.0).is_err());
        assert!(QubitPovm::new(1.0 + 1e-9).is_err());
        assert!(QubitPovm::new(1.0).is_ok());
        assert!(BlochState::new([0.6, 0.8, 1e-13]).is_ok());
        assert!(BlochState::new([0.6, 0.8, 0.1]).is_err());
        assert!(BlochState::new([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn povm_statistics_examples() {
        let m = QubitPovm::new(1.0).unwrap();
        let p = povm_statistics(&BlochState::maximally_mixed(), &m);
        assert_eq!(p, JointDist2x2::uniform());

        let p = povm_statistics(&BlochState::along_z(1.0).unwrap(), &m);
        assert_abs_diff_eq!(p.at(1, 1), 0.394_337_567_297_406_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.at(-1, -1), 0.394_337_567_297_406_4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.at(1, -1), 0.105_662_432_702_593_6, epsilon = 1e-12);

        let p = povm_statistics(&BlochState::new([1.0, 0.0, 0.0]).unwrap(), &m);
        for (x, y) in JointDist2x2::OUTCOMES {
            assert_abs_diff_eq!(p.get(x, y), (1.0 + x.value() / SQRT3) / 4.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.marginal_x()[1], (1.0 + 1.0 / SQRT3) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_examples() {
        let k = qubit_kernel(&QubitPovm::new(1.0).unwrap());
        assert_abs_diff_eq!(k.get(Sign::Plus, Sign::Plus), 1.366_025_403_784_438_6, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(Sign::Plus, Sign::Minus), -0.366_025_403_784_438_6, epsilon = 1e-15);
        for eta in [0.1, 0.5, 1.0] {
            let m = qubit_kernel(&QubitPovm::new(eta).unwrap()).matrix();
            for col in 0..2 {
                assert_abs_diff_eq!(m[0][col] + m[1][col], 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn retrieve_joint_examples() {
        let m = QubitPovm::new(1.0).unwrap();
        let p = retrieve_joint(&BlochState::along_z(1.0).unwrap(), &m);
        assert_abs_diff_eq!(p.at(1, -1), -0.183_012_701_892_219_3, epsilon = 1e-12);
        assert_abs_diff_eq!(p.at(-1, 1), -0.183_012_701_892_219_3, epsilon = 1e-12);
        assert_abs_diff_eq!(p.at(1, 1), 0.683_012_701_892_219_3, epsilon = 1e-12);

        let rho = BlochState::new([0.3, -0.4, 0.0]).unwrap();
        for eta in [0.2, 0.6, 1.0] {
            let p = retrieve_joint(&rho, &QubitPovm::new(eta).unwrap());
            for (x, y) in JointDist2x2::OUTCOMES {
                let expected = (1.0 + 0.3 * x.value() - 0.4 * y.value()) / 4.0;
                assert_abs_diff_eq!(p.get(x, y), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rotation_examples() {
        let (s, r) = rotate_to_z(&BlochState::along_z(0.7).unwrap());
        assert_eq!(s.vector(), [0.0, 0.0, 0.7]);
        assert_eq!(r, IDENTITY3);

        let (s, r) = rotate_to_z(&BlochState::new([0.6, 0.0, 0.0]).unwrap());
        assert_abs_diff_eq!(s.vector()[2], 0.6);
        // quarter turn about y taking x̂ to ẑ
        let expected = [[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(r[i][j], expected[i][j], epsilon = 1e-15);
            }
        }

        let (s, r) = rotate_to_z(&BlochState::along_z(-0.4).unwrap());
        assert_eq!(s.vector(), [0.0, 0.0, 0.4]);
        assert_eq!(mat_vec(&r, &[0.0, 0.0, -0.4]), [0.0, 0.0, 0.4]);

        let (s, r) = rotate_to_z(&BlochState::maximally_mixed());
        assert_eq!(s.vector(), [0.0; 3]);
        assert_eq!(r, IDENTITY3);
    }

    #[test]
    fn random_rotations_are_proper_and_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let rho = random_state(&mut rng);
            let (s, r) = rotate_to_z(&rho);
            assert_abs_diff_eq!(s.norm(), rho.norm(), epsilon = 1e-15);
            let rs = mat_vec(&r, &rho.vector());
            for i in 0..3 {
                assert_abs_diff_eq!(rs[i], s.vector()[i], epsilon = 1e-12);
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|l| r[l][i] * r[l][j]).sum();
                    assert_abs_diff_eq!(dot, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
            }
            assert_abs_diff_eq!(det3(&r), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn classify_examples() {
        let m1 = QubitPovm::new(1.0).unwrap();
        assert!(classify_qubit(&BlochState::along_z(1.0).unwrap(), &m1).is_nonclassical());
        for eta in [0.1, 0.5, 1.0] {
            let v = classify_qubit(&BlochState::maximally_mixed(), &QubitPovm::new(eta).unwrap());
            assert_eq!(v, QubitVerdict::Classical { min_entry: 0.25 });
        }
        let half = BlochState::new([0.3, 0.0, -0.4]).unwrap();
        assert!(!classify_qubit(&half, &QubitPovm::new(0.9).unwrap()).is_nonclassical());
        assert!(classify_qubit(&half, &QubitPovm::new(0.8).unwrap()).is_nonclassical());
    }

    #[test]
    fn closed_form_matches_kernel_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let rho = random_state(&mut rng);
            let eta = rng.random_range(0.01..=1.0);
            let m = QubitPovm::new(eta).unwrap();
            let a = retrieve_joint(&rho, &m);
            let b = retrieved_closed_form(&rho, eta).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12 / eta);
        }
    }

    #[test]
    fn marginals_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let rho = random_state(&mut rng);
            let m = QubitPovm::new(rng.random_range(0.05..=1.0)).unwrap();
            let p = retrieve_joint(&rho, &m);
            let s = rho.vector();
            for a in Sign::ALL {
                let i = a.index();
                assert_abs_diff_eq!(p.marginal_x()[i], (1.0 + a.value() * s[0]) / 2.0, epsilon = 1e-12);
                assert_abs_diff_eq!(p.marginal_y()[i], (1.0 + a.value() * s[1]) / 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn observed_statistics_are_always_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let rho = random_state(&mut rng);
            let m = QubitPovm::new(rng.random_range(1e-3..=1.0)).unwrap();
            assert!(povm_statistics(&rho, &m).min_entry() >= 0.0);
        }
    }

    #[test]
    fn unit_sharpness_kernel_keeps_z_states_legitimate() {
        for i in 0..=100 {
            let r = -1.0 + 0.02 * i as f64;
            let p = retrieved_closed_form(&BlochState::along_z(r).unwrap(), SQRT3).unwrap();
            assert!(p.min_entry() >= -1e-15, "r = {r}");
        }
    }

    #[test]
    fn verdict_agrees_with_threshold_away_from_the_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let rho = random_state(&mut rng);
            let eta = rng.random_range(0.01..=1.0);
            let gap = threshold_eta(rho.norm()) - eta;
            if gap.abs() < 1e-9 {
                continue;
            }
            let v = classify_qubit(&rho, &QubitPovm::new(eta).unwrap());
            assert_eq!(v.is_nonclassical(), gap > 1e-12, "gap {gap}");
        }
    }
}
