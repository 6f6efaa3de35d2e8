//! Dense two-phase simplex for small linear programs in standard form
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Sized for a handful of constraints and a few thousand columns. Pricing
//! uses the most negative reduced cost and falls back to Bland's rule after
//! a run of degenerate pivots so the method cannot cycle.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const PHASE_ONE_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

pub const DEFAULT_MAX_PIVOTS: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.resize(self.cols, 0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Runs the simplex on `cost` over columns `0..allowed`. Returns `false`
    /// when the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= self.max_pivots {
                return Err(Error::LpIterationLimit(self.max_pivots));
            }
            let d = self.reduced_costs(cost);
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find(|&j| d[j] < -COST_TOL)
            } else {
                (0..allowed)
                    .filter(|&j| d[j] < -COST_TOL)
                    .min_by(|&a, &b| d[a].total_cmp(&d[b]))
            };
            let Some(e) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - 1e-15
                                || (ratio <= best + 1e-15 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
        }
    }
}

/// Solves `min cᵀx` s.t. `A x = b`, `x ≥ 0`.
///
/// Infeasible and unbounded programs come back as [`Error::LpStatus`];
/// exceeding `max_pivots` as [`Error::LpIterationLimit`].
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64], max_pivots: usize) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("constraint matrix shape mismatch"));
    }

    // columns: n structural, m artificial, then rhs
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; cols + 1];
        for (j, &v) in row.iter().enumerate() {
            t[j] = sign * v;
        }
        t[n + i] = 1.0;
        t[cols] = sign * bi;
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        cols,
        pivots: 0,
        max_pivots,
    };

    let mut phase_one = vec![0.0; cols];
    phase_one[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase_one, cols)?;
    let infeasibility: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.rhs(i))
        .sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > PHASE_ONE_TOL * scale {
        return Err(Error::LpStatus("infeasible"));
    }

    // Drive zero-level artificials out where a structural column allows it;
    // rows where none does are redundant and stay pinned at zero.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                tab.pivot(i, j);
            }
        }
    }

    if !tab.optimize(c, n)? {
        return Err(Error::LpStatus("unbounded"));
    }

    let mut x = vec![0.0; n];
    for (i, &bi) in tab.basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: tab.pivots,
    })
}
