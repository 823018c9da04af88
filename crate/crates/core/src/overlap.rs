//! Effective collision volume of a magnetically trapped cloud (exponential
//! profile, 1/e length `z`) overlapped with a Gaussian MOT cloud (1/√e radius
//! `σ̄`), both isotropic.
//!
//! The overlap integral `∫ n_Cr n_Rb d³r` reduces to `N_Cr·N_Rb / V̄` with
//! `V̄ = 8πz³ / ς(σ̄/z)` and
//!
//! ```text
//! ς(x) = e^{x²/2} (x² + 1) erfc(x/√2) − √(2/π)·x
//! ```
//!
//! The product `e^{x²/2}·erfc(x/√2)` is evaluated as one scaled function;
//! beyond `x = 25` the asymptotic series is used instead.

use std::f64::consts::PI;

use crate::error::{finite, invalid, non_negative, positive, Result};
use crate::special::gaussian_tail_scaled;

/// Ratio `σ̄/z` above which `ς` switches to its asymptotic series.
pub const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Magnetically trapped cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtCloud {
    /// 1/e length along the coil axis (m).
    pub one_over_e_length: f64,
    pub atom_number: f64,
    /// K.
    pub temperature: f64,
    /// J/T.
    pub magnetic_moment: f64,
    /// Axial field gradient (T/m).
    pub axial_gradient: f64,
}

impl MtCloud {
    pub fn validate(&self) -> Result<()> {
        positive("MT 1/e length", self.one_over_e_length)?;
        non_negative("MT atom number", self.atom_number)?;
        positive("MT temperature", self.temperature)?;
        non_negative("magnetic moment", self.magnetic_moment)?;
        positive("axial gradient", self.axial_gradient)?;
        Ok(())
    }

    pub fn volume(&self) -> Result<f64> {
        mt_volume(self.one_over_e_length)
    }
}

/// Magneto-optically trapped cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotCloud {
    /// Mean 1/√e radius (m).
    pub mean_size: f64,
    pub atom_number: f64,
    /// K.
    pub temperature: f64,
}

impl MotCloud {
    pub fn validate(&self) -> Result<()> {
        positive("MOT size", self.mean_size)?;
        non_negative("MOT atom number", self.atom_number)?;
        positive("MOT temperature", self.temperature)?;
        Ok(())
    }
}

/// Which evaluation of `ς` produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarsigmaBranch {
    Exact,
    Asymptotic,
}

impl VarsigmaBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            VarsigmaBranch::Exact => "exact",
            VarsigmaBranch::Asymptotic => "asymptotic",
        }
    }
}

/// `ς` as a function of the ratio `x = σ̄/z ≥ 0`, with the branch used.
pub fn varsigma_ratio(x: f64) -> Result<(f64, VarsigmaBranch)> {
    let x = non_negative("size ratio", x)?;
    if x > ASYMPTOTIC_THRESHOLD {
        Ok((varsigma_asymptotic(x), VarsigmaBranch::Asymptotic))
    } else {
        Ok((varsigma_exact(x), VarsigmaBranch::Exact))
    }
}

/// Closed form through the scaled complementary error function. Loses
/// roughly `log10(x⁴)` digits to cancellation, which is still ~1e-10 at the
/// branch point.
pub fn varsigma_exact(x: f64) -> f64 {
    (x * x + 1.0) * gaussian_tail_scaled(x) - SQRT_2_OVER_PI * x
}

/// `ς(x) ~ 2√(2/π) x⁻³ Σ_k (−1)^k (2k+2)! / (2·k!·(2x²)^k)`, summed until the
/// terms stop shrinking or drop below double precision.
pub fn varsigma_asymptotic(x: f64) -> f64 {
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..40 {
        let k = k as f64;
        // t_{k+1}/t_k = −(2k+4)(2k+3)/((k+1)·2x²)
        let next = -term * (2.0 * k + 4.0) * (2.0 * k + 3.0) / (k + 1.0) * inv;
        if next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 * SQRT_2_OVER_PI * sum / (x * x * x)
}

/// Overlap reduction factor `ς(σ̄, z)` in `(0, 1]`.
pub fn varsigma(mean_size: f64, one_over_e_length: f64) -> Result<f64> {
    let sigma = non_negative("MOT size", mean_size)?;
    let z = positive("MT 1/e length", one_over_e_length)?;
    Ok(varsigma_ratio(sigma / z)?.0)
}

/// `V_MT = 8πz³`.
pub fn mt_volume(one_over_e_length: f64) -> Result<f64> {
    let z = positive("MT 1/e length", one_over_e_length)?;
    Ok(8.0 * PI * z * z * z)
}

/// `V̄ = V_MT / ς`.
pub fn effective_volume(mean_size: f64, one_over_e_length: f64) -> Result<f64> {
    Ok(mt_volume(one_over_e_length)? / varsigma(mean_size, one_over_e_length)?)
}

/// Overlap summary for a pair of clouds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub varsigma: f64,
    pub branch: VarsigmaBranch,
    pub mt_volume: f64,
    pub effective_volume: f64,
}

pub fn overlap(mean_size: f64, one_over_e_length: f64) -> Result<Overlap> {
    let sigma = non_negative("MOT size", mean_size)?;
    let z = positive("MT 1/e length", one_over_e_length)?;
    let (varsigma, branch) = varsigma_ratio(sigma / z)?;
    let mt_volume = mt_volume(z)?;
    Ok(Overlap {
        varsigma,
        branch,
        mt_volume,
        effective_volume: mt_volume / varsigma,
    })
}

/// `F = N_Cr·N_Rb / V̄` (1/m³), the factor multiplying β in the rate
/// equations.
pub fn overlap_density_factor(n_cr: f64, n_rb: f64, effective_volume: f64) -> Result<f64> {
    let n_cr = non_negative("Cr atom number", n_cr)?;
    let n_rb = non_negative("Rb atom number", n_rb)?;
    let volume = finite("effective volume", effective_volume)?;
    if volume <= 0.0 {
        return Err(invalid(
            "effective volume",
            format!("{volume} m^3 is not positive"),
        ));
    }
    Ok(n_cr * n_rb / volume)
}

/// Zeeman energy `µ·B′·r` along the coil axis of a linear quadrupole (J).
pub fn magnetic_potential(moment: f64, gradient: f64, distance: f64) -> Result<f64> {
    let moment = non_negative("magnetic moment", moment)?;
    let gradient = non_negative("field gradient", gradient)?;
    let distance = non_negative("distance", distance)?;
    Ok(moment * gradient * distance)
}
