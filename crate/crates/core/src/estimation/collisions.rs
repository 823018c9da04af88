//! Interspecies loss coefficients and collision energetics.

use serde::Serialize;

use super::fits::fit_loading;
use crate::dynamics::{initial_slope, SlopeModel};
use crate::error::{invalid, non_negative, positive, Error, Result};
use crate::trace::DataTrace;
use crate::units::{BOHR_MAGNETON, BOLTZMANN};

/// Relative systematic error carried with every extracted β.
pub const BETA_SYSTEMATIC_RELATIVE_ERROR: f64 = 0.8;

/// `√(8k_B/π · (T_Cr/m_Cr + T_Rb/m_Rb))`.
pub fn mean_relative_speed(t_cr: f64, m_cr: f64, t_rb: f64, m_rb: f64) -> Result<f64> {
    let t_cr = non_negative("Cr temperature", t_cr)?;
    let t_rb = non_negative("Rb temperature", t_rb)?;
    let m_cr = positive("Cr mass", m_cr)?;
    let m_rb = positive("Rb mass", m_rb)?;
    Ok((8.0 * BOLTZMANN / std::f64::consts::PI * (t_cr / m_cr + t_rb / m_rb)).sqrt())
}

/// `σ_inel = β / v̄`.
pub fn inelastic_cross_section(beta: f64, mean_speed: f64) -> Result<f64> {
    crate::error::finite("beta", beta)?;
    let v = positive("mean relative speed", mean_speed)?;
    Ok(beta / v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub value: f64,
    /// Negative coefficient; kept as is.
    pub unphysical: bool,
}

/// `β = (L − α)/F`.
pub fn extract_beta_rbcr(alpha: f64, loading_rate: f64, factor: f64) -> Result<BetaEstimate> {
    crate::error::finite("alpha", alpha)?;
    crate::error::finite("loading rate", loading_rate)?;
    let f = positive("overlap factor", factor)?;
    let value = (loading_rate - alpha) / f;
    Ok(BetaEstimate {
        value,
        unphysical: value < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `(ΔṄ/F_max, ΔṄ/F_min)`.
pub fn beta_crrb_bounds(excess_rate: f64, factor_min: f64, factor_max: f64) -> Result<BetaBounds> {
    let rate = non_negative("excess loss rate", excess_rate)?;
    let lo = positive("minimum overlap factor", factor_min)?;
    let hi = positive("maximum overlap factor", factor_max)?;
    if lo > hi {
        return Err(invalid(
            "overlap factors",
            format!("minimum {lo} exceeds maximum {hi}"),
        ));
    }
    Ok(BetaBounds {
        lower: rate / hi,
        upper: rate / lo,
    })
}

fn same_grid(a: &DataTrace, b: &DataTrace) -> Result<()> {
    a.validate()?;
    b.validate()?;
    let scale = a.times.last().map_or(1.0, |t| t.abs().max(1.0));
    if a.len() != b.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 1e-9 * scale)
    {
        return Err(invalid("traces", "must share the same sample times"));
    }
    Ok(())
}

/// Excess loss rate from Rb in the Cr decay, averaged over samples with
/// `window.0 ≤ t − t₀ ≤ window.1`.
///
/// With a constant extra loss `R` on top of the one-body rate `γ`, the gap
/// between the two traces grows as `ΔN(t) = R(1 − e^{−γt})/γ`; each sample is
/// inverted for `R` and the results averaged.
pub fn excess_loss_rate(
    without: &DataTrace,
    with: &DataTrace,
    window: (f64, f64),
    gamma: f64,
) -> Result<f64> {
    same_grid(without, with)?;
    let gamma = non_negative("gamma", gamma)?;
    if !(window.0 > 0.0 && window.1 >= window.0) {
        return Err(invalid(
            "window",
            format!("{:?} is not a positive interval", window),
        ));
    }
    let t0 = without.times[0];
    let rates: Vec<f64> = without
        .times
        .iter()
        .zip(without.values.iter().zip(&with.values))
        .filter(|(t, _)| (window.0..=window.1).contains(&(*t - t0)))
        .map(|(t, (a, b))| {
            let t = t - t0;
            let growth = if gamma == 0.0 {
                t
            } else {
                -(-gamma * t).exp_m1() / gamma
            };
            (a - b) / growth
        })
        .collect();
    if rates.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Mean of `N_Cr·N_Rb/V̄` over samples within `window` of the first one.
pub fn mean_overlap_factor(
    cr: &DataTrace,
    rb: &DataTrace,
    volume: f64,
    window: f64,
) -> Result<f64> {
    same_grid(cr, rb)?;
    let volume = positive("effective volume", volume)?;
    let t0 = cr.times[0];
    let products: Vec<f64> = cr
        .times
        .iter()
        .zip(cr.values.iter().zip(&rb.values))
        .filter(|(t, _)| *t - t0 <= window)
        .map(|(_, (a, b))| a * b / volume)
        .collect();
    Ok(products.iter().sum::<f64>() / products.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSlopeAnalysis {
    pub loading_rate: f64,
    pub loading_rate_uncertainty: f64,
    pub gamma_rb: f64,
    /// Effective loading rate with Cr present.
    pub alpha: f64,
    pub alpha_uncertainty: f64,
    pub mean_factor: f64,
    pub beta: BetaEstimate,
    pub beta_uncertainty: f64,
    pub window: f64,
    pub samples: usize,
}

/// β_RbCr from three traces: Rb loading without Cr (for `L` and `γ_Rb`), Rb
/// loading with Cr, and the Cr number on the same time grid. The with-Cr
/// loading over `window` is modelled with a constant overlap factor equal to
/// its mean over the window.
pub fn beta_rbcr_from_traces(
    reference: &DataTrace,
    rb_with_cr: &DataTrace,
    cr: &DataTrace,
    volume: f64,
    window: f64,
) -> Result<BetaSlopeAnalysis> {
    let fit = fit_loading(reference)?;
    let l = fit.get("loading_rate").expect("loading fit reports L");
    let gamma = fit.get("gamma").expect("loading fit reports gamma");
    let slope = initial_slope(
        rb_with_cr,
        window,
        SlopeModel::OneBody { gamma: gamma.value },
    )?;
    let alpha = slope.loading_rate.expect("one-body slope reports alpha");
    let alpha_sigma = slope.loading_rate_uncertainty.unwrap_or(0.0);
    let factor = mean_overlap_factor(cr, rb_with_cr, volume, window)?;
    let beta = extract_beta_rbcr(alpha, l.value, factor)?;
    Ok(BetaSlopeAnalysis {
        loading_rate: l.value,
        loading_rate_uncertainty: l.uncertainty,
        gamma_rb: gamma.value,
        alpha,
        alpha_uncertainty: alpha_sigma,
        mean_factor: factor,
        beta,
        beta_uncertainty: l.uncertainty.hypot(alpha_sigma) / factor,
        window,
        samples: slope.samples,
    })
}

/// Share of the released kinetic energy taken by `m_receiver` when a pair
/// flies apart with equal and opposite momenta.
pub fn energy_partition(m_receiver: f64, m_partner: f64) -> Result<f64> {
    let a = positive("receiver mass", m_receiver)?;
    let b = positive("partner mass", m_partner)?;
    Ok(b / (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeemanChannel {
    /// Released energy 3/2 µ_B B.
    Ground,
    /// Released energy 4/3 µ_B B.
    Excited,
}

pub fn zeeman_release_energy(field: f64, channel: ZeemanChannel) -> Result<f64> {
    let b = non_negative("magnetic field", field)?;
    let k = match channel {
        ZeemanChannel::Ground => 1.5,
        ZeemanChannel::Excited => 4.0 / 3.0,
    };
    Ok(k * BOHR_MAGNETON * b)
}
