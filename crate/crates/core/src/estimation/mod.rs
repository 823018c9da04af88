//! Fits of traces and the extraction of cross sections and loss coefficients
//! from fitted rates.

mod collisions;
mod fits;
mod lsq;
mod sigma_p;

use serde::Serialize;

pub use collisions::{
    beta_crrb_bounds, beta_rbcr_from_traces, energy_partition, excess_loss_rate, extract_beta_rbcr,
    inelastic_cross_section, mean_overlap_factor, mean_relative_speed, zeeman_release_energy,
    BetaBounds, BetaEstimate, BetaSlopeAnalysis, ZeemanChannel, BETA_SYSTEMATIC_RELATIVE_ERROR,
};
pub use fits::{fit_decay, fit_heating_rate, fit_loading};
pub use lsq::{
    levenberg_marquardt, linear_least_squares, CurveModel, LinearFit, LmOptions, NonlinearFit,
};
pub use sigma_p::{
    extract_gamma_p, extract_sigma_p, BackgroundRate, GammaP, GroupFit, SigmaPEstimate, SigmaPRun,
    SigmaPSetup,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// One standard deviation.
    pub uncertainty: f64,
    pub unit: String,
}

impl FitParameter {
    pub fn new(name: &str, value: f64, uncertainty: f64, unit: &str) -> Self {
        FitParameter {
            name: name.into(),
            value,
            uncertainty: if uncertainty.is_finite() {
                uncertainty.max(0.0)
            } else {
                f64::INFINITY
            },
            unit: unit.into(),
        }
    }
}

/// Parameters of a fit. When `converged` is false the values are the last
/// iterate and should not be relied on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub residual_rms: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    /// Relative systematic error quoted alongside, not folded into the
    /// uncertainties.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub systematic_relative_error: Option<f64>,
}

impl FitResult {
    pub fn new(residual_rms: f64, dof: usize, converged: bool, iterations: usize) -> Self {
        let mut result = FitResult {
            parameters: Vec::new(),
            residual_rms,
            dof,
            converged,
            iterations,
            warnings: Vec::new(),
            systematic_relative_error: None,
        };
        if !converged {
            result.warn("fit did not converge; values are not authoritative");
        }
        result
    }

    pub fn push(&mut self, parameter: FitParameter) {
        self.parameters.push(parameter);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.value)
    }
}
