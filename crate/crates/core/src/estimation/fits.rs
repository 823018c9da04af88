//! Curve fits of one-body loading, one-body decay and linear heating.

use super::lsq::{levenberg_marquardt, linear_least_squares, CurveModel, LmOptions};
use super::{FitParameter, FitResult};
use crate::error::{Error, Result};
use crate::trace::{DataTrace, ValueKind};

const MIN_POINTS: usize = 6;

fn weights(trace: &DataTrace) -> (Vec<f64>, bool) {
    match &trace.sigma {
        Some(s) => (s.iter().map(|s| 1.0 / (s * s)).collect(), true),
        None => (vec![1.0; trace.len()], false),
    }
}

fn require_kind(trace: &DataTrace, kind: ValueKind) -> Result<()> {
    if trace.kind != kind {
        return Err(crate::error::invalid(
            "trace",
            format!(
                "expected a {} trace, got {}",
                kind.as_str(),
                trace.kind.as_str()
            ),
        ));
    }
    trace.validate()
}

fn is_flat(values: &[f64]) -> bool {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let scale = max.abs().max(min.abs());
    (max - min) <= 1e-12 * scale || scale == 0.0
}

/// `(L/γ)(1 − e^{−γτ}) + N₀e^{−γτ}`, `τ` measured from the first sample.
struct Loading;

impl CurveModel for Loading {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, tau: f64, p: &[f64], g: &mut [f64]) -> Option<f64> {
        let (l, gamma, n0) = (p[0], p[1], p[2]);
        if !(gamma > 0.0) {
            return None;
        }
        let e = (-gamma * tau).exp();
        let fill = -(-gamma * tau).exp_m1() / gamma;
        g[0] = fill;
        // d/dγ [(1 − e^{−γτ})/γ] = (τ e^{−γτ} − fill)/γ
        g[1] = l * (tau * e - fill) / gamma - n0 * tau * e;
        g[2] = e;
        Some(l * fill + n0 * e)
    }
}

/// `N₀ e^{−γτ}`.
struct Decay;

impl CurveModel for Decay {
    fn n_params(&self) -> usize {
        2
    }

    fn eval(&self, tau: f64, p: &[f64], g: &mut [f64]) -> Option<f64> {
        let (n0, gamma) = (p[0], p[1]);
        if !(gamma >= 0.0) {
            return None;
        }
        let e = (-gamma * tau).exp();
        g[0] = e;
        g[1] = -n0 * tau * e;
        Some(n0 * e)
    }
}

/// For fixed `γ` the loading model is linear in `(L, N₀)`; scan `γ` on a log
/// grid, solve the 2×2 weighted normal equations at each point and keep the
/// best profile point as the starting guess.
fn loading_start(tau: &[f64], y: &[f64], w: &[f64]) -> Option<[f64; 3]> {
    let span = *tau.last()?;
    let mut best: Option<(f64, [f64; 3])> = None;
    for i in 0..=80 {
        let gamma = 1e-2 / span * 10f64.powf(5.0 * i as f64 / 80.0);
        let (mut aa, mut ab, mut bb, mut ay, mut by, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&t, &v), &wi) in tau.iter().zip(y).zip(w) {
            let b = (-gamma * t).exp();
            let a = -(-gamma * t).exp_m1() / gamma;
            aa += wi * a * a;
            ab += wi * a * b;
            bb += wi * b * b;
            ay += wi * a * v;
            by += wi * b * v;
            yy += wi * v * v;
        }
        let det = aa * bb - ab * ab;
        if !(det > 1e-12 * aa * bb) {
            continue;
        }
        let l = (ay * bb - by * ab) / det;
        let n0 = (aa * by - ab * ay) / det;
        let chi2 = yy - l * ay - n0 * by;
        if best.map_or(true, |(c, _)| chi2 < c) {
            best = Some((chi2, [l, gamma, n0]));
        }
    }
    best.map(|(_, p)| p)
}

/// Fits the one-body loading solution; reports `L`, `γ`, `N₀` and the
/// steady state `N_ss = L/γ`.
pub fn fit_loading(trace: &DataTrace) -> Result<FitResult> {
    require_kind(trace, ValueKind::AtomNumber)?;
    if trace.len() < MIN_POINTS {
        return Err(Error::TooFewSamples {
            needed: MIN_POINTS,
            got: trace.len(),
        });
    }
    if is_flat(&trace.values) {
        return Err(Error::Unidentifiable(
            "loss rate of a flat loading trace".into(),
        ));
    }
    let t0 = trace.times[0];
    let tau: Vec<f64> = trace.times.iter().map(|t| t - t0).collect();
    let (w, absolute) = weights(trace);
    let start = loading_start(&tau, &trace.values, &w)
        .ok_or_else(|| Error::Unidentifiable("loading curve".into()))?;
    let fit = levenberg_marquardt(
        &Loading,
        &tau,
        &trace.values,
        &w,
        absolute,
        &start,
        &LmOptions::default(),
    )?;

    let (l, gamma) = (fit.params[0], fit.params[1]);
    let cov = &fit.covariance;
    let n_ss = l / gamma;
    let var_ss = cov[(0, 0)] / (gamma * gamma) + cov[(1, 1)] * (l * l) / gamma.powi(4)
        - 2.0 * cov[(0, 1)] * l / gamma.powi(3);

    let mut result = FitResult::new(fit.residual_rms, fit.dof, fit.converged, fit.iterations);
    result.push(FitParameter::new(
        "loading_rate",
        l,
        fit.standard_errors[0],
        "atoms/s",
    ));
    result.push(FitParameter::new(
        "gamma",
        gamma,
        fit.standard_errors[1],
        "1/s",
    ));
    result.push(FitParameter::new(
        "n0",
        fit.params[2],
        fit.standard_errors[2],
        "atoms",
    ));
    result.push(FitParameter::new(
        "n_ss",
        n_ss,
        var_ss.max(0.0).sqrt(),
        "atoms",
    ));
    result.push(FitParameter::new(
        "lifetime",
        1.0 / gamma,
        fit.standard_errors[1] / (gamma * gamma),
        "s",
    ));
    if gamma * tau.last().copied().unwrap_or(0.0) < 1.0 {
        result.warn("trace spans less than one fitted lifetime");
    }
    if !(fit.standard_errors[1] < gamma) {
        result.warn("loss rate poorly constrained");
    }
    Ok(result)
}

/// Fits `N₀e^{−γτ}`; reports `γ`, `N₀` and the lifetime `1/γ`.
pub fn fit_decay(trace: &DataTrace) -> Result<FitResult> {
    require_kind(trace, ValueKind::AtomNumber)?;
    if trace.len() < MIN_POINTS {
        return Err(Error::TooFewSamples {
            needed: MIN_POINTS,
            got: trace.len(),
        });
    }
    if is_flat(&trace.values) && trace.values[0] == 0.0 {
        return Err(Error::Unidentifiable("loss rate of an empty trace".into()));
    }
    let t0 = trace.times[0];
    let tau: Vec<f64> = trace.times.iter().map(|t| t - t0).collect();
    let (w, absolute) = weights(trace);

    // log-linear start on the positive points
    let (lt, ly): (Vec<f64>, Vec<f64>) = tau
        .iter()
        .zip(&trace.values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    if lt.len() < 2 {
        return Err(Error::Unidentifiable(
            "decay rate (fewer than two positive points)".into(),
        ));
    }
    let start =
        match linear_least_squares(&lt, &ly, &vec![1.0; lt.len()], false, &[&|_| 1.0, &|t| t]) {
            Ok(f) => [f.coefficients[0].exp(), (-f.coefficients[1]).max(0.0)],
            Err(_) => [trace.values[0], 0.0],
        };
    let fit = levenberg_marquardt(
        &Decay,
        &tau,
        &trace.values,
        &w,
        absolute,
        &start,
        &LmOptions::default(),
    )?;
    let gamma = fit.params[1];

    let mut result = FitResult::new(fit.residual_rms, fit.dof, fit.converged, fit.iterations);
    result.push(FitParameter::new(
        "gamma",
        gamma,
        fit.standard_errors[1],
        "1/s",
    ));
    result.push(FitParameter::new(
        "n0",
        fit.params[0],
        fit.standard_errors[0],
        "atoms",
    ));
    if gamma > 0.0 {
        result.push(FitParameter::new(
            "lifetime",
            1.0 / gamma,
            fit.standard_errors[1] / (gamma * gamma),
            "s",
        ));
        if gamma * tau.last().copied().unwrap_or(0.0) < 1.0 {
            result.warn("trace spans less than one fitted lifetime");
        }
    } else {
        result.warn("no decay detected; lifetime is unbounded");
    }
    Ok(result)
}

/// Weighted straight-line fit `T(t) = T₀ + rate·t` to a temperature trace.
pub fn fit_heating_rate(trace: &DataTrace) -> Result<FitResult> {
    require_kind(trace, ValueKind::Temperature)?;
    if trace.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: trace.len(),
        });
    }
    let (w, absolute) = weights(trace);
    let fit = linear_least_squares(
        &trace.times,
        &trace.values,
        &w,
        absolute,
        &[&|_| 1.0, &|t| t],
    )?;
    let mut result = FitResult::new(fit.residual_rms, fit.dof, true, 1);
    result.push(FitParameter::new(
        "rate",
        fit.coefficients[1],
        fit.standard_errors[1],
        "K/s",
    ));
    result.push(FitParameter::new(
        "t0",
        fit.coefficients[0],
        fit.standard_errors[0],
        "K",
    ));
    Ok(result)
}
