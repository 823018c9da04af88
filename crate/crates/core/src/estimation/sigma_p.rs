//! Photoionization cross section from loss rates measured over a grid of
//! cooling and ionizing intensities.

use serde::Serialize;

use super::lsq::linear_least_squares;
use super::{FitParameter, FitResult};
use crate::error::{non_negative, positive, Error, Result};
use crate::photoionization::{
    excited_fraction, photon_flux, saturation_parameter, LightField, TransitionSpec,
};
use crate::units::photon_energy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaP {
    pub value: f64,
    /// The total rate is below background; kept negative rather than clipped.
    pub below_background: bool,
}

/// `γ_p = γ_tot − γ_Rb`.
pub fn extract_gamma_p(gamma_tot: f64, gamma_rb: f64) -> Result<GammaP> {
    non_negative("total loss rate", gamma_tot)?;
    non_negative("background loss rate", gamma_rb)?;
    let value = gamma_tot - gamma_rb;
    Ok(GammaP {
        value,
        below_background: value < 0.0,
    })
}

/// One loading-rate measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPRun {
    /// Cooling-light intensity on the Rb atoms (W/m²).
    pub rb_intensity: f64,
    /// Ionizing-light intensity (W/m²).
    pub ionizing_intensity: f64,
    /// Fitted total loss rate (1/s).
    pub gamma_tot: f64,
    /// Its standard error, if known.
    pub gamma_tot_sigma: Option<f64>,
}

impl SigmaPRun {
    pub fn new(rb_intensity: f64, ionizing_intensity: f64, gamma_tot: f64) -> Self {
        SigmaPRun {
            rb_intensity,
            ionizing_intensity,
            gamma_tot,
            gamma_tot_sigma: None,
        }
    }

    fn validate(&self) -> Result<()> {
        non_negative("Rb intensity", self.rb_intensity)?;
        non_negative("ionizing intensity", self.ionizing_intensity)?;
        non_negative("gamma_tot", self.gamma_tot)?;
        if let Some(s) = self.gamma_tot_sigma {
            positive("gamma_tot sigma", s)?;
        }
        Ok(())
    }
}

/// Light-field parameters shared by every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPSetup {
    pub transition: TransitionSpec,
    /// Cooling detuning in units of the natural linewidth.
    pub detuning_linewidths: f64,
    pub ionizing_wavelength: f64,
}

/// Where the background loss rate `γ_Rb` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundRate {
    Fixed(f64),
    /// Mean over all runs without ionizing light.
    Pooled,
    /// Mean over the runs without ionizing light at the same Rb intensity.
    PerGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupFit {
    pub rb_intensity: f64,
    pub excited_fraction: f64,
    pub gamma_bg: f64,
    pub sigma_p: f64,
    pub sigma_p_uncertainty: f64,
    /// Free intercept of `Γ = a + σ·Φ`, when there are enough points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept_uncertainty: Option<f64>,
    pub points: usize,
    pub negative_gamma_p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaPEstimate {
    pub result: FitResult,
    pub groups: Vec<GroupFit>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn background_of(runs: &[&SigmaPRun]) -> Option<f64> {
    let zero: Vec<f64> = runs
        .iter()
        .filter(|r| r.ionizing_intensity == 0.0)
        .map(|r| r.gamma_tot)
        .collect();
    (!zero.is_empty()).then(|| mean(&zero))
}

/// Fits `Γ_{i→f} = γ_p/ρ_ee` against the photon flux `Φ` through the origin
/// for each cooling intensity and averages the slopes.
pub fn extract_sigma_p(
    runs: &[SigmaPRun],
    setup: &SigmaPSetup,
    background: BackgroundRate,
) -> Result<SigmaPEstimate> {
    setup.transition.validate()?;
    for run in runs {
        run.validate()?;
    }
    let mut warnings = Vec::new();
    if photon_energy(setup.ionizing_wavelength)? <= setup.transition.excited_ionization_energy {
        warnings.push("ionizing photons are below the ionization threshold".to_string());
    }
    let pooled = match background {
        BackgroundRate::Fixed(g) => Some(non_negative("background loss rate", g)?),
        BackgroundRate::Pooled => Some(
            background_of(&runs.iter().collect::<Vec<_>>()).ok_or_else(|| {
                Error::Unidentifiable(
                    "background loss rate (no runs without ionizing light)".into(),
                )
            })?,
        ),
        BackgroundRate::PerGroup => None,
    };

    let mut intensities: Vec<f64> = runs.iter().map(|r| r.rb_intensity).collect();
    intensities.sort_by(f64::total_cmp);
    intensities.dedup();

    let mut groups = Vec::new();
    for &rb_intensity in &intensities {
        let members: Vec<&SigmaPRun> = runs
            .iter()
            .filter(|r| r.rb_intensity == rb_intensity)
            .collect();
        let gamma_bg = match pooled {
            Some(g) => g,
            None => match background_of(&members) {
                Some(g) => g,
                None => {
                    warnings.push(format!(
                        "group at {rb_intensity} W/m^2 skipped: no run without ionizing light"
                    ));
                    continue;
                }
            },
        };
        let field =
            LightField::detuned(rb_intensity, setup.detuning_linewidths, &setup.transition)?;
        let rho = excited_fraction(saturation_parameter(&field, &setup.transition)?)?;
        let mut flux = Vec::new();
        let mut rate = Vec::new();
        let mut weights = Vec::new();
        let mut negative = 0;
        for run in &members {
            flux.push(photon_flux(
                run.ionizing_intensity,
                setup.ionizing_wavelength,
            )?);
            let gp = extract_gamma_p(run.gamma_tot, gamma_bg)?;
            negative += gp.below_background as usize;
            rate.push(gp.value / rho);
            weights.push(match run.gamma_tot_sigma {
                Some(s) => (rho / s).powi(2),
                None => 1.0,
            });
        }
        let mut distinct = flux.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 || rho == 0.0 {
            warnings.push(format!(
                "group at {rb_intensity} W/m^2 skipped: fewer than two distinct photon fluxes"
            ));
            continue;
        }
        let absolute = members.iter().all(|r| r.gamma_tot_sigma.is_some());
        let fit = match linear_least_squares(&flux, &rate, &weights, absolute, &[&|phi| phi]) {
            Ok(fit) => fit,
            Err(Error::Unidentifiable(_)) => {
                warnings.push(format!(
                    "group at {rb_intensity} W/m^2 skipped: slope not identifiable"
                ));
                continue;
            }
            Err(e) => return Err(e),
        };
        let free = if distinct.len() >= 3 {
            linear_least_squares(&flux, &rate, &weights, absolute, &[&|_| 1.0, &|phi| phi]).ok()
        } else {
            None
        };
        if negative > 0 {
            warnings.push(format!(
                "group at {rb_intensity} W/m^2: {negative} run(s) below background"
            ));
        }
        groups.push(GroupFit {
            rb_intensity,
            excited_fraction: rho,
            gamma_bg,
            sigma_p: fit.coefficients[0],
            sigma_p_uncertainty: fit.standard_errors[0],
            intercept: free.as_ref().map(|f| f.coefficients[0]),
            intercept_uncertainty: free.as_ref().map(|f| f.standard_errors[0]),
            points: members.len(),
            negative_gamma_p: negative,
        });
    }

    if groups.is_empty() {
        return Err(Error::Unidentifiable(
            "photoionization cross section (every intensity group was skipped)".into(),
        ));
    }
    let slopes: Vec<f64> = groups.iter().map(|g| g.sigma_p).collect();
    let sigma_p = mean(&slopes);
    let spread = if groups.len() > 1 {
        let m = sigma_p;
        (slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt()
    } else {
        groups[0].sigma_p_uncertainty
    };
    let residual_rms = mean(
        &groups
            .iter()
            .map(|g| g.sigma_p_uncertainty.powi(2))
            .collect::<Vec<_>>(),
    )
    .sqrt();
    let mut result = FitResult::new(residual_rms, groups.len().saturating_sub(1), true, 1);
    result.push(FitParameter::new("sigma_p", sigma_p, spread, "m^2"));
    if let Some(g) = pooled {
        result.push(FitParameter::new("gamma_bg", g, 0.0, "1/s"));
    }
    for w in warnings {
        result.warn(w);
    }
    Ok(SigmaPEstimate { result, groups })
}
