//! Runs table for `sigma-p`:
//!
//! ```text
//! # rb_intensity_unit=mW/cm^2
//! # ionizing_intensity_unit=mW/cm^2
//! rb_intensity,ionizing_intensity,gamma_tot[,gamma_tot_sigma]
//! ```
//!
//! Units default to W/m^2 and 1/s.

use crate::error::{Error, Result};
use crate::estimation::SigmaPRun;
use crate::units::{Dimension, Quantity};

const COLUMNS: [&str; 4] = [
    "rb_intensity",
    "ionizing_intensity",
    "gamma_tot",
    "gamma_tot_sigma",
];

pub fn parse_runs(text: &str) -> Result<Vec<SigmaPRun>> {
    let mut units = [
        "W/m^2".to_string(),
        "W/m^2".to_string(),
        "1/s".to_string(),
        "1/s".to_string(),
    ];
    let dims = [
        Dimension::Intensity,
        Dimension::Intensity,
        Dimension::Rate,
        Dimension::Rate,
    ];
    let mut order: Option<Vec<usize>> = None;
    let mut runs = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let key = key.trim();
                if let Some(col) = key.strip_suffix("_unit") {
                    let i = COLUMNS
                        .iter()
                        .position(|c| *c == col)
                        .ok_or_else(|| err(format!("unit given for unknown column '{col}'")))?;
                    Quantity::new(1.0, value.trim())
                        .and_then(|q| q.si_as(dims[i]))
                        .map_err(|e| err(e.to_string()))?;
                    units[i] = value.trim().to_string();
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(order) = &order else {
            let mut idx = Vec::new();
            for f in &fields {
                idx.push(
                    COLUMNS
                        .iter()
                        .position(|c| c == f)
                        .ok_or_else(|| err(format!("unknown column '{f}'")))?,
                );
            }
            for required in 0..3 {
                if !idx.contains(&required) {
                    return Err(err(format!("missing column '{}'", COLUMNS[required])));
                }
            }
            order = Some(idx);
            continue;
        };
        if fields.len() != order.len() {
            return Err(err(format!(
                "expected {} fields, found {}",
                order.len(),
                fields.len()
            )));
        }
        let mut values = [f64::NAN; 4];
        let mut sigma = None;
        for (f, &col) in fields.iter().zip(order) {
            let v: f64 = f
                .parse()
                .map_err(|_| err(format!("'{f}' is not a number")))?;
            let si = Quantity::new(v, &units[col])
                .and_then(|q| q.si_as(dims[col]))
                .map_err(|e| err(e.to_string()))?;
            if col == 3 {
                sigma = Some(si);
            } else {
                values[col] = si;
            }
        }
        runs.push(SigmaPRun {
            rb_intensity: values[0],
            ionizing_intensity: values[1],
            gamma_tot: values[2],
            gamma_tot_sigma: sigma,
        });
    }
    if order.is_none() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "empty runs table: no header line".into(),
        });
    }
    Ok(runs)
}
