//! Run configuration shared by the command line and `--config` files.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    /// Retrieved-distribution minimum over an η × |s| grid.
    QubitScan,
    /// Separable-model LP for states along z.
    Separability,
    /// Monte Carlo run of the eight-port detector.
    Eightport,
    /// γ and classification over a t² × θ × n̄ grid.
    CvScan,
    /// Estimate M from simulated or recorded double-homodyne samples.
    CvEstimate,
    /// Write double-homodyne samples as CSV.
    CvSample,
}

impl CommandName {
    pub fn name(self) -> &'static str {
        match self {
            CommandName::QubitScan => "qubit-scan",
            CommandName::Separability => "separability",
            CommandName::Eightport => "eightport",
            CommandName::CvScan => "cv-scan",
            CommandName::CvEstimate => "cv-estimate",
            CommandName::CvSample => "cv-sample",
        }
    }

    /// Fields the command reads; anything else set is a config error.
    fn accepts(self, field: &str) -> bool {
        let allowed: &[&str] = match self {
            CommandName::QubitScan => &["eta", "s"],
            CommandName::Separability => &["eta", "s", "grid_n", "tol"],
            CommandName::Eightport => &["theta", "phi", "samples", "seed"],
            CommandName::CvScan => &["t2", "theta", "nbar"],
            CommandName::CvEstimate => &[
                "t2", "theta", "nbar", "x0", "y0", "samples", "seed", "bootstrap", "input",
            ],
            CommandName::CvSample => &["t2", "theta", "nbar", "x0", "y0", "samples", "seed"],
        };
        allowed.contains(&field)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A parameter grid: a number, a list of numbers, or range syntax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Number(f64),
    List(Vec<f64>),
    Expr(String),
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let v = match self {
            RangeSpec::Number(x) => vec![*x],
            RangeSpec::List(v) => v.clone(),
            RangeSpec::Expr(s) => parse_range(s)?,
        };
        if v.is_empty() {
            return Err("empty range".into());
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(format!("non-finite value {bad}"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl RunConfig {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay_fields!(
            self, top, command, eta, s, t2, theta, nbar, phi, x0, y0, samples, seed, grid_n, tol,
            bootstrap, input, out, format
        );
        self
    }

    pub fn grid_field_set(&self, field: &str) -> bool {
        self.set_fields().contains(&field)
    }

    fn set_fields(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        macro_rules! probe {
            ($($name:ident),*) => { $( if self.$name.is_some() { f.push(stringify!($name)); } )* };
        }
        probe!(eta, s, t2, theta, nbar, phi, x0, y0, samples, seed, grid_n, tol, bootstrap, input);
        f
    }

    /// Command name, with every set parameter checked against it.
    pub fn command(&self) -> Result<CommandName, String> {
        let cmd = self.command.ok_or("no command given")?;
        for field in self.set_fields() {
            if !cmd.accepts(field) {
                return Err(format!("{} does not take {}", cmd.name(), flag(field)));
            }
        }
        Ok(cmd)
    }

    pub fn grid(&self, field: &str) -> Result<Option<Vec<f64>>, String> {
        let spec = match field {
            "eta" => &self.eta,
            "s" => &self.s,
            "t2" => &self.t2,
            "theta" => &self.theta,
            "nbar" => &self.nbar,
            "phi" => &self.phi,
            "x0" => &self.x0,
            "y0" => &self.y0,
            _ => unreachable!("unknown grid field {field}"),
        };
        spec.as_ref()
            .map(|s| s.values().map_err(|e| format!("{}: {e}", flag(field))))
            .transpose()
    }

    pub fn required_grid(&self, field: &str) -> Result<Vec<f64>, String> {
        self.grid(field)?
            .ok_or_else(|| format!("{} is required", flag(field)))
    }

    pub fn scalar(&self, field: &str) -> Result<Option<f64>, String> {
        match self.grid(field)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(v) => Err(format!("{} takes a single value, got {}", flag(field), v.len())),
        }
    }

    pub fn required_scalar(&self, field: &str) -> Result<f64, String> {
        self.scalar(field)?
            .ok_or_else(|| format!("{} is required", flag(field)))
    }

    pub fn required_seed(&self) -> Result<u64, String> {
        self.seed.ok_or_else(|| "--seed is required for sampling commands".into())
    }
}

pub fn flag(field: &str) -> String {
    format!("--{}", field.replace('_', "-"))
}

/// Comma-separated items, each a number expression or `start:stop:count`
/// (inclusive, evenly spaced).
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(format!("empty item in '{s}'"));
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(eval(x)?),
            [a, b, n] => {
                let (a, b) = (eval(a)?, eval(b)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| format!("count in '{item}' must be a positive integer"))?;
                match n {
                    0 => return Err(format!("count in '{item}' must be positive")),
                    1 => out.push(a),
                    _ => out.extend((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64)),
                }
            }
            _ => return Err(format!("'{item}' is neither a value nor start:stop:count")),
        }
    }
    Ok(out)
}

/// Products and quotients of numbers, `pi` and `sqrt(…)`, with an optional
/// leading minus: `pi/4`, `-3*pi/8`, `1/sqrt(2)`.
pub fn eval(expr: &str) -> Result<f64, String> {
    let mut p = Parser {
        src: expr.trim().as_bytes(),
        pos: 0,
    };
    let v = p.product()?;
    if p.pos != p.src.len() {
        return Err(format!("cannot parse '{expr}'"));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn product(&mut self) -> Result<f64, String> {
        let sign = if self.eat("-") { -1.0 } else { 1.0 };
        let mut v = self.factor()?;
        loop {
            if self.eat("*") {
                v *= self.factor()?;
            } else if self.eat("/") {
                v /= self.factor()?;
            } else {
                return Ok(sign * v);
            }
        }
    }

    fn factor(&mut self) -> Result<f64, String> {
        if self.eat("pi") {
            return Ok(std::f64::consts::PI);
        }
        if self.eat("sqrt(") {
            let v = self.product()?;
            if !self.eat(")") {
                return Err("missing ')'".into());
            }
            return Ok(v.sqrt());
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            let exp_sign = self.pos > start
                && matches!(c, b'+' | b'-')
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E') || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse()
            .map_err(|_| format!("expected a number at '{}'", String::from_utf8_lossy(&self.src[start..])))
    }
}
