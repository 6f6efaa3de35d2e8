use std::fs::File;
use std::io::BufReader;

use jointstat::cv::{
    self, estimate_m, response_coeffs, retrieved_char, sample_observed, CvConfig, CvVerdict,
    InputState, DEFAULT_BOOTSTRAP,
};
use jointstat::eightport::{click_probabilities, empirical_pipeline, sample_clicks, EightPortConfig, PureQubit};
use jointstat::formats::{read_samples_csv, SamplesHeader};
use jointstat::qubit::{classify_qubit, povm_statistics, threshold_eta};
use jointstat::separability::{separability_lp, Separability, SphereGrid, DEFAULT_GRID_POINTS, DEFAULT_TOLERANCE};
use jointstat::{BlochState, JointDist2x2, QubitPovm};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CommandName, RangeSpec, RunConfig};
use crate::output::{Cell, Report, Table};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Config(msg)
    }
}

impl From<&str> for Failure {
    fn from(msg: &str) -> Self {
        Failure::Config(msg.into())
    }
}

impl From<jointstat::Error> for Failure {
    fn from(e: jointstat::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, Failure> {
    match cfg.command()? {
        CommandName::QubitScan => qubit_scan(cfg),
        CommandName::Separability => separability(cfg),
        CommandName::Eightport => eightport(cfg),
        CommandName::CvScan => cv_scan(cfg),
        CommandName::CvEstimate => cv_estimate(cfg),
        CommandName::CvSample => cv_sample(cfg),
    }
}

/// The config as embedded in output: defaults filled in, destination dropped.
fn replay_config(cfg: &RunConfig) -> RunConfig {
    RunConfig {
        out: None,
        format: None,
        ..cfg.clone()
    }
}

fn product<A: Copy + Sync, B: Copy + Sync>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn scan_report(cfg: &RunConfig, table: Table) -> Report {
    let config = replay_config(cfg);
    Report {
        preamble: None,
        json: json!({ "command": cfg.command.map(|c| c.name()), "config": config, "rows": table.json_rows() }),
        table,
    }
}

fn qubit_scan(cfg: &RunConfig) -> Result<Report, Failure> {
    let etas = cfg.required_grid("eta")?;
    let norms = cfg.required_grid("s")?;
    let rows: Vec<Vec<Cell>> = product(&etas, &norms)
        .par_iter()
        .map(|&(eta, s)| -> Result<Vec<Cell>, Failure> {
            let povm = QubitPovm::new(eta)?;
            let verdict = classify_qubit(&BlochState::along_z(s)?, &povm);
            let label = if verdict.is_nonclassical() { "nonclassical" } else { "classical" };
            Ok(vec![
                eta.into(),
                s.into(),
                verdict.min_entry().into(),
                label.into(),
                threshold_eta(s).into(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["eta", "s", "min_entry", "verdict", "eta_threshold"]);
    table.rows = rows;
    Ok(scan_report(cfg, table))
}

fn separability(cfg: &RunConfig) -> Result<Report, Failure> {
    let etas = cfg.required_grid("eta")?;
    let norms = cfg.required_grid("s")?;
    let grid_n = cfg.grid_n.unwrap_or(DEFAULT_GRID_POINTS);
    let tol = cfg.tol.unwrap_or(DEFAULT_TOLERANCE);
    let grid = SphereGrid::fibonacci(grid_n)?;
    let rows: Vec<Vec<Cell>> = product(&etas, &norms)
        .par_iter()
        .map(|&(eta, s)| -> Result<Vec<Cell>, Failure> {
            let povm = QubitPovm::new(eta)?;
            let observed = povm_statistics(&BlochState::along_z(s)?, &povm);
            let out = separability_lp(&observed, &povm, &grid, tol)?;
            let mut row: Vec<Cell> = vec![
                eta.into(),
                s.into(),
                out.is_feasible().into(),
                out.residual().into(),
            ];
            match &out {
                Separability::Feasible { model, .. } => {
                    let max_w = model.weights().iter().copied().fold(0.0, f64::max);
                    let [mx, my, mxy] = model.moments();
                    row.extend([
                        Cell::U(model.weights().len() as u64),
                        max_w.into(),
                        mx.into(),
                        my.into(),
                        mxy.into(),
                    ]);
                }
                Separability::Infeasible { .. } => row.extend(std::iter::repeat_n(Cell::Null, 5)),
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&[
        "eta", "s", "feasible", "residual", "support", "max_weight", "moment_x", "moment_y", "moment_xy",
    ]);
    table.rows = rows;
    let resolved = RunConfig {
        grid_n: Some(grid_n),
        tol: Some(tol),
        ..cfg.clone()
    };
    Ok(scan_report(&resolved, table))
}

fn outcome_label(i: usize) -> String {
    let (x, y) = JointDist2x2::OUTCOMES[i];
    format!("({},{})", x.value(), y.value())
}

fn eightport(cfg: &RunConfig) -> Result<Report, Failure> {
    let theta = cfg.required_scalar("theta")?;
    let phi = cfg.scalar("phi")?.unwrap_or(0.0);
    let n = cfg.samples.ok_or("--samples is required")?;
    let seed = cfg.required_seed()?;
    let psi = PureQubit::new(theta, phi)?;
    let detector = EightPortConfig::default();
    let povm = QubitPovm::new(1.0)?;

    let exact = click_probabilities(&psi, &detector);
    let record = sample_clicks(&psi, &detector, n, seed)?;
    let out = empirical_pipeline(&record, &povm)?;
    let max_gap = exact.max_abs_diff(&out.frequencies);
    let config = replay_config(&RunConfig {
        phi: cfg.phi.clone().or(Some(RangeSpec::Number(0.0))),
        ..cfg.clone()
    });

    let counts = record.counts();
    let storage_to_detector = [(3, 0), (5, 2), (6, 3), (4, 1)];
    let mut table = Table::new(&[
        "detector", "x", "y", "exact", "count", "frequency", "retrieved", "std_error",
    ]);
    for (i, &(label, slot)) in storage_to_detector.iter().enumerate() {
        let (x, y) = JointDist2x2::OUTCOMES[i];
        table.rows.push(vec![
            Cell::S(format!("D{label}")),
            x.value().into(),
            y.value().into(),
            exact.entries()[i].into(),
            counts[slot].into(),
            out.frequencies.entries()[i].into(),
            out.retrieved.entries()[i].into(),
            out.std_errors[i].into(),
        ]);
    }
    let summary = json!({
        "max_gap": max_gap,
        "most_negative": outcome_label(out.most_negative),
        "significance": finite_or_null(out.significance),
        "nonclassical": out.nonclassical,
    });
    Ok(Report {
        preamble: Some(json!({ "command": "eightport", "config": config, "record": record, "summary": summary })),
        json: json!({
            "command": "eightport",
            "config": config,
            "photon": { "theta": psi.theta(), "phi": psi.phi(), "bloch": psi.bloch() },
            "detector": detector,
            "record": record,
            "exact": exact,
            "frequencies": out.frequencies,
            "max_gap": max_gap,
            "retrieved": out.retrieved,
            "std_errors": out.std_errors,
            "most_negative": outcome_label(out.most_negative),
            "significance": finite_or_null(out.significance),
            "nonclassical": out.nonclassical,
        }),
        table,
    })
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn state_for(nbar: f64) -> Result<InputState, Failure> {
    Ok(if nbar == 0.0 {
        InputState::vacuum()
    } else {
        InputState::thermal(nbar)?
    })
}

fn cv_scan(cfg: &RunConfig) -> Result<Report, Failure> {
    let t2s = cfg.required_grid("t2")?;
    let thetas = cfg.required_grid("theta")?;
    let nbars = cfg.grid("nbar")?.unwrap_or_else(|| vec![0.0]);
    let points: Vec<(f64, f64, f64)> = product(&t2s, &thetas)
        .into_iter()
        .flat_map(|(t2, th)| nbars.iter().map(move |&n| (t2, th, n)))
        .collect();
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|&(t2, theta, nbar)| -> Result<Vec<Cell>, Failure> {
            let c = CvConfig::from_t2(t2, theta)?;
            let state = state_for(nbar)?;
            let coeffs = response_coeffs(&c);
            let verdict = cv::classify_cv(&state, &c);
            Ok(vec![
                t2.into(),
                theta.into(),
                nbar.into(),
                coeffs.gamma.into(),
                coeffs.f.into(),
                coeffs.g.into(),
                verdict.min_eigenvalue().into(),
                verdict.label().into(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["t2", "theta", "nbar", "gamma", "f", "g", "min_eigenvalue", "verdict"]);
    table.rows = rows;
    Ok(scan_report(cfg, table))
}

fn cv_state(cfg: &RunConfig) -> Result<InputState, Failure> {
    let nbar = cfg.scalar("nbar")?;
    let (x0, y0) = (cfg.scalar("x0")?, cfg.scalar("y0")?);
    match nbar {
        Some(_) if x0.is_some() || y0.is_some() => {
            Err("give either --nbar (thermal) or --x0/--y0 (coherent), not both".to_string().into())
        }
        Some(n) => Ok(InputState::thermal(n)?),
        None => Ok(InputState::coherent(x0.unwrap_or(0.0), y0.unwrap_or(0.0))?),
    }
}

fn simulated_header(cfg: &RunConfig) -> Result<SamplesHeader, Failure> {
    let config = CvConfig::from_t2(cfg.required_scalar("t2")?, cfg.required_scalar("theta")?)?;
    let n = cfg.samples.ok_or("--samples is required")?;
    Ok(SamplesHeader {
        config,
        state: cv_state(cfg)?,
        seed: cfg.required_seed()?,
        n: usize::try_from(n).map_err(|_| "--samples too large".to_string())?,
    })
}

fn cv_sample(cfg: &RunConfig) -> Result<Report, Failure> {
    let header = simulated_header(cfg)?;
    let xs = sample_observed(&header.state, &header.config, header.n, header.seed)?;
    let mut table = Table::new(&["x", "y"]);
    table.rows = xs.iter().map(|&[x, y]| vec![x.into(), y.into()]).collect();
    let head = serde_json::to_value(&header).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(Report {
        preamble: Some(head.clone()),
        json: json!({ "header": head, "samples": xs }),
        table,
    })
}

fn cv_estimate(cfg: &RunConfig) -> Result<Report, Failure> {
    let bootstrap = cfg.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    let (header, xs) = match &cfg.input {
        Some(path) => {
            for field in ["t2", "theta", "nbar", "x0", "y0", "samples"] {
                if cfg.grid_field_set(field) {
                    return Err(format!("--input supplies the configuration; drop --{field}").into());
                }
            }
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let (mut header, xs) =
                read_samples_csv(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(seed) = cfg.seed {
                header.seed = seed;
            }
            (header, xs)
        }
        None => {
            let header = simulated_header(cfg)?;
            if header.n < cv::MIN_ESTIMATION_SAMPLES {
                return Err(format!(
                    "--samples must be at least {}, got {}",
                    cv::MIN_ESTIMATION_SAMPLES,
                    header.n
                )
                .into());
            }
            let xs = sample_observed(&header.state, &header.config, header.n, header.seed)?;
            (header, xs)
        }
    };

    let est = estimate_m(&xs, &header.config, bootstrap, header.seed)?;
    let truth = retrieved_char(&header.state, &header.config);
    let gamma = response_coeffs(&header.config).gamma;
    let verdict_true = CvVerdict::from_char(&truth);
    let verdict_hat = est.verdict();
    let verdict_match = verdict_true.label() == verdict_hat.label();
    let se = est.std_errors;
    let config = replay_config(&RunConfig {
        bootstrap: Some(bootstrap),
        ..cfg.clone()
    });

    let mut table = Table::new(&[
        "gamma_true", "gamma_hat", "gamma_se", "m11_hat", "m22_hat", "m12_hat", "x0_hat", "y0_hat",
        "verdict_true", "verdict_hat", "verdict_match",
    ]);
    table.rows.push(vec![
        gamma.into(),
        est.gamma.into(),
        se.map(|s| s.gamma).into(),
        est.m.m11.into(),
        est.m.m22.into(),
        est.m.m12.into(),
        est.mean[0].into(),
        est.mean[1].into(),
        verdict_true.label().into(),
        verdict_hat.label().into(),
        verdict_match.into(),
    ]);
    Ok(Report {
        preamble: Some(json!({ "command": "cv-estimate", "config": config, "samples": header })),
        json: json!({
            "command": "cv-estimate",
            "config": config,
            "samples": header,
            "bootstrap": bootstrap,
            "gamma_true": gamma,
            "gamma_hat": est.gamma,
            "gamma_se": se.map(|s| s.gamma),
            "m_true": truth.m,
            "m_hat": est.m,
            "m_se": se.map(|s| s.m),
            "mean_true": truth.mean,
            "mean_hat": est.mean,
            "mean_se": se.map(|s| s.mean),
            "points_used": est.points_used,
            "verdict_true": verdict_true.label(),
            "verdict_hat": verdict_hat.label(),
            "min_eigenvalue_hat": verdict_hat.min_eigenvalue(),
            "verdict_match": verdict_match,
        }),
        table,
    })
}
