//! Classical separable models on the Bloch sphere and the linear program
//! deciding whether observed qubit statistics admit such a model.
//!
//! A separable model is a probability distribution `p_j` over phase-space
//! points `λ_j` on the unit sphere, each producing independent `x` and `y`
//! outcomes. For the η-POVM it predicts
//! `p̃(x,y) = Σ_j (p_j/4)(1 + x a λ_{j,x})(1 + y a λ_{j,y})` with `a = η/√3`,
//! so the statistics only depends on the moments
//! `(Σ p_j λ_x, Σ p_j λ_y, Σ p_j λ_x λ_y)`.

use serde::{Deserialize, Serialize};

use crate::inversion::{invert_joint, JointDist2x2};
use crate::lp;
use crate::qubit::{povm_statistics, BlochState, QubitPovm, SQRT3};
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2000;
pub const DEFAULT_TOLERANCE: f64 = 2e-3;

const UNIT_TOL: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Phase-space points on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    points: Vec<[f64; 3]>,
}

impl SphereGrid {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid needs at least one point"));
        }
        for p in &points {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::invalid(format!("grid point {p:?} has norm {n}")));
            }
        }
        Ok(Self { points })
    }

    /// Fibonacci lattice: `z_i = 1 − (2i+1)/N`, azimuth `i` times the golden
    /// angle. Deterministic for a given `N`.
    pub fn fibonacci(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::invalid(format!("Fibonacci grid needs N ≥ 4, got {n}")));
        }
        let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden_angle * i as f64;
                [rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect();
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Weights `p_j` on sphere points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableModel {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SeparableModel {
    pub fn new(points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("one weight per point required"));
        }
        let grid = SphereGrid::new(points)?;
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!("weights sum to {total}")));
        }
        Ok(Self {
            points: grid.points,
            weights,
        })
    }

    pub fn uniform(grid: &SphereGrid) -> Self {
        let w = 1.0 / grid.len() as f64;
        Self {
            points: grid.points.clone(),
            weights: vec![w; grid.len()],
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(Σ p_j λ_x, Σ p_j λ_y, Σ p_j λ_x λ_y)`.
    pub fn moments(&self) -> [f64; 3] {
        self.points
            .iter()
            .zip(&self.weights)
            .fold([0.0; 3], |acc, (l, w)| {
                [acc[0] + w * l[0], acc[1] + w * l[1], acc[2] + w * l[0] * l[1]]
            })
    }
}

/// `p̃(x,y)` predicted by the model for the η-POVM.
pub fn model_statistics(model: &SeparableModel, povm: &QubitPovm) -> JointDist2x2 {
    let a = povm.eta() / SQRT3;
    let mut entries = [0.0; 4];
    for (l, w) in model.points.iter().zip(&model.weights) {
        for (e, (x, y)) in entries.iter_mut().zip(JointDist2x2::OUTCOMES) {
            *e += 0.25 * w * (1.0 + x.value() * a * l[0]) * (1.0 + y.value() * a * l[1]);
        }
    }
    JointDist2x2::from_entries(entries).expect("separable statistics are normalized")
}

/// Inverts the model's statistics with the qubit kernels. For a separable
/// source this is `Σ_j (p_j/4)(1 + xλ_{j,x})(1 + yλ_{j,y})`, never negative.
pub fn classical_retrieval_check(model: &SeparableModel, povm: &QubitPovm) -> JointDist2x2 {
    let k = povm.kernel();
    invert_joint(&model_statistics(model, povm), &k, &k)
}

/// Moments a separable model would need to reproduce `observed` exactly:
/// `(Σ p_j λ_x, Σ p_j λ_y, Σ p_j λ_x λ_y)`. For quantum statistics of a
/// state `s` these are `(s_x, s_y, √3 s_z/η)`.
pub fn moment_targets(observed: &JointDist2x2, povm: &QubitPovm) -> [f64; 3] {
    let a = povm.eta() / SQRT3;
    let mut m = [0.0; 3];
    for ((x, y), p) in JointDist2x2::OUTCOMES.into_iter().zip(observed.entries()) {
        m[0] += x.value() * p;
        m[1] += y.value() * p;
        m[2] += x.value() * y.value() * p;
    }
    [m[0] / a, m[1] / a, m[2] / (a * a)]
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separability {
    /// A model on the grid reproduces the statistics within `tol`.
    Feasible { model: SeparableModel, residual: f64 },
    /// The best model misses some entry by `residual > tol`.
    Infeasible { residual: f64 },
}

impl Separability {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Separability::Feasible { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            Separability::Feasible { residual, .. } | Separability::Infeasible { residual } => {
                *residual
            }
        }
    }
}

/// Minimizes the largest entrywise mismatch `ε` between a grid model and
/// `observed`; feasible iff the optimum is at most `tol`.
///
/// Columns are the grid weights, `ε` and eight slacks for the two-sided
/// bounds `|Σ_j p_j c_j(x,y) − p̃(x,y)| ≤ ε`; the single equality row is
/// `Σ_j p_j = 1`.
pub fn separability_lp(
    observed: &JointDist2x2,
    povm: &QubitPovm,
    grid: &SphereGrid,
    tol: f64,
) -> Result<Separability> {
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be ≥ 0, got {tol}")));
    }
    let n = grid.len();
    let a = povm.eta() / SQRT3;
    let eps_col = n;
    let slack0 = n + 1;
    let cols = n + 9;
    let target = observed.entries();

    let mut rows = Vec::with_capacity(9);
    let mut rhs = Vec::with_capacity(9);
    let mut norm_row = vec![0.0; cols];
    norm_row[..n].iter_mut().for_each(|v| *v = 1.0);
    rows.push(norm_row);
    rhs.push(1.0);
    for (k, (x, y)) in JointDist2x2::OUTCOMES.into_iter().enumerate() {
        let coeff: Vec<f64> = grid
            .points
            .iter()
            .map(|l| 0.25 * (1.0 + x.value() * a * l[0]) * (1.0 + y.value() * a * l[1]))
            .collect();
        for (sign, slack) in [(1.0, slack0 + k), (-1.0, slack0 + 4 + k)] {
            let mut row = vec![0.0; cols];
            for (r, c) in row.iter_mut().zip(&coeff) {
                *r = sign * c;
            }
            row[eps_col] = -1.0;
            row[slack] = 1.0;
            rows.push(row);
            rhs.push(sign * target[k]);
        }
    }
    let mut cost = vec![0.0; cols];
    cost[eps_col] = 1.0;

    let sol = lp::minimize(&cost, &rows, &rhs, lp::DEFAULT_MAX_PIVOTS)?;

    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (p, &w) in grid.points.iter().zip(&sol.x[..n]) {
        if w > 0.0 {
            support.push(*p);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let model = SeparableModel::new(support, weights)?;
    let residual = model_statistics(&model, povm).max_abs_diff(observed);

    Ok(if residual <= tol {
        Separability::Feasible { model, residual }
    } else {
        Separability::Infeasible { residual }
    })
}

/// Largest `|s|` for which the state `(0, 0, |s|)` is declared separable,
/// located by bisection on `[0, 1]` to within `1e-7`.
///
/// Every probe is recorded; a feasible probe above an infeasible one is
/// reported as [`Error::NonMonotone`].
pub fn feasibility_boundary(eta: f64, grid: &SphereGrid, tol: f64) -> Result<f64> {
    let povm = QubitPovm::new(eta)?;
    let feasible_at = |r: f64| -> Result<bool> {
        let observed = povm_statistics(&BlochState::along_z(r)?, &povm);
        Ok(separability_lp(&observed, &povm, grid, tol)?.is_feasible())
    };

    if feasible_at(1.0)? {
        return Ok(1.0);
    }
    if !feasible_at(0.0)? {
        return Err(Error::NonMonotone {
            feasible: f64::NAN,
            infeasible: 0.0,
        });
    }
    let mut probes = vec![(0.0, true), (1.0, false)];
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let ok = feasible_at(mid)?;
        probes.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let max_feasible = probes
        .iter()
        .filter(|p| p.1)
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_infeasible = probes
        .iter()
        .filter(|p| !p.1)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    if max_feasible > min_infeasible {
        return Err(Error::NonMonotone {
            feasible: max_feasible,
            infeasible: min_infeasible,
        });
    }
    Ok(lo)
}

/// Closed-form boundary for an ideal (continuous) sphere: the largest
/// attainable `Σ p λ_x λ_y` is `1/2`, and the minimal residual is
/// `(η²/12)(√3|s|/η − 1/2)`, giving `|s| = (η/√3)(1/2 + 12 tol/η²)`.
pub fn ideal_sphere_boundary(eta: f64, tol: f64) -> f64 {
    ((eta / SQRT3) * (0.5 + 12.0 * tol / (eta * eta))).min(1.0)
}
