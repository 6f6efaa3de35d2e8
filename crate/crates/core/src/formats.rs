//! Text output: 12-significant-digit floats and the samples CSV.
//!
//! A samples file starts with one `# `-prefixed JSON line
//! `{"config": …, "state": …, "seed": …, "N": …}` followed by a CSV table
//! with header `x,y`.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cv::{CvConfig, InputState};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats like C's `%.12g`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// JSON number with 12 significant digits. Non-finite values become null.
pub fn json_f64(x: f64) -> serde_json::Value {
    if !x.is_finite() {
        return serde_json::Value::Null;
    }
    fmt_f64(x).parse::<serde_json::Number>().map_or(serde_json::Value::Null, Into::into)
}

/// Keys whose values are run inputs. They are echoed at full precision so
/// that a run can be replayed bit for bit.
pub const VERBATIM_KEYS: [&str; 2] = ["config", "state"];

/// Rewrites every float in a JSON tree with [`json_f64`], leaving values
/// under [`VERBATIM_KEYS`] untouched.
pub fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => json_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(
            o.into_iter()
                .map(|(k, v)| {
                    let v = if VERBATIM_KEYS.contains(&k.as_str()) { v } else { round_json(v) };
                    (k, v)
                })
                .collect(),
        ),
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplesHeader {
    pub config: CvConfig,
    pub state: InputState,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
}

pub fn write_samples_csv<W: Write>(
    mut out: W,
    header: &SamplesHeader,
    samples: &[[f64; 2]],
) -> io::Result<()> {
    let json = round_json(serde_json::to_value(header).map_err(io::Error::other)?);
    writeln!(out, "# {json}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"])?;
    for [x, y] in samples {
        w.write_record([fmt_f64(*x), fmt_f64(*y)])?;
    }
    w.flush()
}

pub fn read_samples_csv<R: BufRead>(mut input: R) -> io::Result<(SamplesHeader, Vec<[f64; 2]>)> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut first = String::new();
    input.read_line(&mut first)?;
    let json = first
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| bad("missing '# ' JSON header line".into()))?;
    let header: SamplesHeader = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;

    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(bad("expected columns x,y".into()));
    }
    let mut samples = Vec::with_capacity(header.n);
    for rec in r.deserialize::<(f64, f64)>() {
        let (x, y) = rec.map_err(|e| bad(e.to_string()))?;
        samples.push([x, y]);
    }
    if samples.len() != header.n {
        return Err(bad(format!("header says N = {}, found {} rows", header.n, samples.len())));
    }
    Ok((header, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (1.0, "1"),
            (-0.1830127018922193, "-0.183012701892"),
            (1.875, "1.875"),
            (0.25, "0.25"),
            (1e-7, "1e-07"),
            (123456789012345.0, "1.23456789012e+14"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999999999.5, "1e+12"),
            (std::f64::consts::PI, "3.14159265359"),
            (-0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_f64(x), want, "{x}");
        }
    }

    #[test]
    fn rounding_is_stable_under_reparse() {
        for x in [0.1 + 0.2, 1.0 / 3.0, -2.0f64.sqrt(), 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(fmt_f64(s.parse().unwrap()), s);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn inputs_stay_verbatim() {
        let v = serde_json::json!({"gamma": 1.0 / 3.0, "config": {"t": 1.0 / 3.0}, "rows": [{"x": 2.0f64.sqrt()}]});
        let r = round_json(v);
        assert_eq!(r["gamma"], serde_json::json!(0.333333333333));
        assert_eq!(r["config"]["t"], serde_json::json!(1.0 / 3.0));
        assert_eq!(r["rows"][0]["x"], serde_json::json!(1.41421356237));
        let tiny = round_json(serde_json::json!(-2.2962127483999997e-16));
        assert_eq!(tiny.to_string(), "-2.2962127484e-16");
    }

    #[test]
    fn samples_round_trip() {
        let header = SamplesHeader {
            config: CvConfig::from_t2(0.8, std::f64::consts::FRAC_PI_4).unwrap(),
            state: InputState::vacuum(),
            seed: 9,
            n: 2,
        };
        let samples = [[0.125, -1.5], [1.0 / 3.0, 2.0]];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &header, &samples).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {"));
        assert!(text.contains("\nx,y\n0.125,-1.5\n0.333333333333,2\n"));
        let (h, s) = read_samples_csv(&buf[..]).unwrap();
        assert_eq!(h.seed, 9);
        assert_eq!(h.state, header.state);
        assert_eq!(s[0], [0.125, -1.5]);
        assert!((s[1][0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(h.config, header.config);
        assert!(read_samples_csv(&b"x,y\n1,2\n"[..]).is_err());
    }
}
