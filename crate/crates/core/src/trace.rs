//! Time series of an observed or synthesized scalar, and its CSV form.
//!
//! ```text
//! # kind=atom_number
//! # seed=42
//! time_s,value
//! 0.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! Comment lines start with `#` and hold `key=value` metadata. An optional
//! third column `sigma` carries per-point uncertainties. Numbers are written
//! with 17 significant digits so the file round-trips losslessly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    AtomNumber,
    /// Values in kelvin.
    Temperature,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::AtomNumber => "atom_number",
            ValueKind::Temperature => "temperature",
        }
    }
}

impl FromStr for ValueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "atom_number" | "atom-number" => Ok(ValueKind::AtomNumber),
            "temperature" => Ok(ValueKind::Temperature),
            other => Err(Error::Config(format!("unknown value kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: ValueKind,
    pub sigma: Option<Vec<f64>>,
    /// Free-form metadata carried in comment lines, excluding `kind`.
    pub metadata: BTreeMap<String, String>,
}

impl DataTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, kind: ValueKind) -> Result<Self> {
        let trace = DataTrace {
            times,
            values,
            kind,
            sigma: None,
            metadata: BTreeMap::new(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        self.sigma = Some(sigma);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Error::InvalidArgument {
            name: "trace",
            reason: m,
        };
        if self.times.len() != self.values.len() {
            return Err(bad(format!(
                "{} times but {} values",
                self.times.len(),
                self.values.len()
            )));
        }
        if let Some((i, _)) = self.times.iter().enumerate().find(|(_, t)| !t.is_finite()) {
            return Err(bad(format!("time at index {i} is not finite")));
        }
        if let Some(i) = self.times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(bad(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("value at index {i} is not finite")));
        }
        if let Some(sigma) = &self.sigma {
            if sigma.len() != self.times.len() {
                return Err(bad("sigma column length mismatch".into()));
            }
            if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(bad(format!("sigma at index {i} is not positive")));
            }
        }
        Ok(())
    }

    /// Points with `t <= until`, as a new trace.
    pub fn window(&self, until: f64) -> DataTrace {
        let n = self.times.partition_point(|&t| t <= until);
        DataTrace {
            times: self.times[..n].to_vec(),
            values: self.values[..n].to_vec(),
            kind: self.kind,
            sigma: self.sigma.as_ref().map(|s| s[..n].to_vec()),
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# kind={}", self.kind.as_str());
        for (key, value) in &self.metadata {
            let _ = writeln!(out, "# {key}={value}");
        }
        match &self.sigma {
            Some(sigma) => {
                out.push_str("time_s,value,sigma\n");
                for ((t, v), s) in self.times.iter().zip(&self.values).zip(sigma) {
                    let _ = writeln!(out, "{t:.16e},{v:.16e},{s:.16e}");
                }
            }
            None => {
                out.push_str("time_s,value\n");
                for (t, v) in self.times.iter().zip(&self.values) {
                    let _ = writeln!(out, "{t:.16e},{v:.16e}");
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut metadata = BTreeMap::new();
        let mut columns = None;
        let (mut times, mut values, mut sigma) = (Vec::new(), Vec::new(), Vec::new());

        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    let (key, value) = (key.trim(), value.trim());
                    if key == "kind" {
                        kind = Some(
                            value
                                .parse::<ValueKind>()
                                .map_err(|e| parse_err(e.to_string()))?,
                        );
                    } else {
                        metadata.insert(key.to_string(), value.to_string());
                    }
                }
                continue;
            }
            let Some(ncols) = columns else {
                columns = Some(match line {
                    "time_s,value" => 2,
                    "time_s,value,sigma" => 3,
                    other => {
                        return Err(parse_err(format!(
                            "expected header 'time_s,value[,sigma]', found '{other}'"
                        )))
                    }
                });
                continue;
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != ncols {
                return Err(parse_err(format!(
                    "expected {ncols} fields, found {}",
                    fields.len()
                )));
            }
            let number = |s: &str| -> Result<f64> {
                let v = s
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("'{}' is not a number", s.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(format!("'{}' is not finite", s.trim())))
                }
            };
            let t = number(fields[0])?;
            if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(parse_err(format!("time {t} does not increase")));
                }
            }
            times.push(t);
            values.push(number(fields[1])?);
            if ncols == 3 {
                let s = number(fields[2])?;
                if s <= 0.0 {
                    return Err(parse_err(format!("sigma {s} is not positive")));
                }
                sigma.push(s);
            }
        }

        if columns.is_none() {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: "empty trace: no header line".into(),
            });
        }
        if times.is_empty() {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: "trace has no data rows".into(),
            });
        }
        let trace = DataTrace {
            times,
            values,
            kind: kind.unwrap_or(ValueKind::AtomNumber),
            sigma: if sigma.is_empty() { None } else { Some(sigma) },
            metadata,
        };
        trace.validate()?;
        Ok(trace)
    }
}
