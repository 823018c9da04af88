//! Excited-state population of a driven two-level transition and the
//! photoionization loss it opens up when a second, shorter-wavelength laser
//! is present.
//!
//! The chain is: light field → saturation parameter `s` → excited fraction
//! `ρ_ee = s / 2(s + 1)`; ionizing intensity → photon flux `Φ` → ionization
//! rate `σ_p·Φ` out of the excited state → trap loss rate `γ_p = σ_p·Φ·ρ_ee`.

use std::f64::consts::PI;

use crate::error::{invalid, non_negative, positive, Result};
use crate::units::{photon_energy, ELECTRON_MASS, ELECTRON_VOLT};

/// Constants of the cooling transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSpec {
    /// Natural linewidth Γ (rad/s).
    pub linewidth: f64,
    /// Saturation intensity (W/m²).
    pub saturation_intensity: f64,
    /// Averaged squared Clebsch–Gordan coefficient, in (0, 1].
    pub clebsch_gordan_sq: f64,
    /// Transition wavelength (m).
    pub wavelength: f64,
    /// Ionization energy of the excited state (J).
    pub excited_ionization_energy: f64,
}

impl TransitionSpec {
    pub fn new(
        linewidth: f64,
        saturation_intensity: f64,
        clebsch_gordan_sq: f64,
        wavelength: f64,
        excited_ionization_energy: f64,
    ) -> Result<Self> {
        let spec = TransitionSpec {
            linewidth,
            saturation_intensity,
            clebsch_gordan_sq,
            wavelength,
            excited_ionization_energy,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 87Rb D2 line: Γ/2π = 6.07 MHz, I_s = 1.6 mW/cm², ⟨C⟩² = 7/15,
    /// 5P₃/₂ ionization energy 2.6 eV.
    pub fn rb87_d2() -> Self {
        TransitionSpec {
            linewidth: 2.0 * PI * 6.07e6,
            saturation_intensity: 16.0,
            clebsch_gordan_sq: 7.0 / 15.0,
            wavelength: 780.241e-9,
            excited_ionization_energy: 2.6 * ELECTRON_VOLT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("linewidth", self.linewidth)?;
        positive("saturation intensity", self.saturation_intensity)?;
        positive("Clebsch-Gordan weight", self.clebsch_gordan_sq)?;
        if self.clebsch_gordan_sq > 1.0 {
            return Err(invalid(
                "Clebsch-Gordan weight",
                format!("{} exceeds 1", self.clebsch_gordan_sq),
            ));
        }
        positive("transition wavelength", self.wavelength)?;
        positive(
            "excited-state ionization energy",
            self.excited_ionization_energy,
        )?;
        Ok(())
    }
}

/// A laser configuration acting on a transition.
///
/// Only `δ²` enters the population, so the sign of the detuning is
/// immaterial; by convention it is stored as the magnitude of the red
/// detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightField {
    /// Total intensity of all beams (W/m²).
    pub intensity: f64,
    /// Detuning δ (rad/s).
    pub detuning: f64,
    /// Wavelength (m).
    pub wavelength: f64,
}

impl LightField {
    pub fn new(intensity: f64, detuning: f64, wavelength: f64) -> Result<Self> {
        let field = LightField {
            intensity,
            detuning,
            wavelength,
        };
        field.validate()?;
        Ok(field)
    }

    /// Field on `spec`'s own wavelength, detuned by `linewidths`·Γ.
    pub fn detuned(intensity: f64, linewidths: f64, spec: &TransitionSpec) -> Result<Self> {
        Self::new(intensity, linewidths * spec.linewidth, spec.wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("intensity", self.intensity)?;
        crate::error::finite("detuning", self.detuning)?;
        positive("wavelength", self.wavelength)?;
        Ok(())
    }
}

/// Photoionization out of the excited state by a second laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonizationChannel {
    /// Cross section σ_p (m²).
    pub cross_section: f64,
    /// Wavelength of the ionizing light (m).
    pub wavelength: f64,
}

impl IonizationChannel {
    pub fn new(cross_section: f64, wavelength: f64) -> Result<Self> {
        non_negative("cross section", cross_section)?;
        positive("ionizing wavelength", wavelength)?;
        Ok(IonizationChannel {
            cross_section,
            wavelength,
        })
    }

    /// Whether a photon of this channel carries more than `ionization_energy`.
    pub fn is_open(&self, ionization_energy: f64) -> Result<bool> {
        Ok(photon_energy(self.wavelength)? > ionization_energy)
    }
}

/// `s = ⟨C⟩²·(I/I_s) / (1 + (2δ/Γ)²)`.
pub fn saturation_parameter(field: &LightField, spec: &TransitionSpec) -> Result<f64> {
    field.validate()?;
    spec.validate()?;
    let detuning = 2.0 * field.detuning / spec.linewidth;
    Ok(
        spec.clebsch_gordan_sq * (field.intensity / spec.saturation_intensity)
            / (1.0 + detuning * detuning),
    )
}

/// Steady-state excited-state population `s / 2(s + 1)`, in `[0, 1/2)`.
pub fn excited_fraction(saturation: f64) -> Result<f64> {
    let s = non_negative("saturation parameter", saturation)?;
    Ok(s / (2.0 * (s + 1.0)))
}

/// Photons per m² per second carried by intensity `intensity` at `wavelength`.
pub fn photon_flux(intensity: f64, wavelength: f64) -> Result<f64> {
    let intensity = non_negative("ionizing intensity", intensity)?;
    Ok(intensity / photon_energy(wavelength)?)
}

/// Ionization rate from the excited state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonizationRate {
    /// Γ_{i→f} (1/s).
    pub rate: f64,
    /// Set when the photon energy does not exceed the ionization energy; the
    /// rate is then zero.
    pub below_threshold: bool,
}

/// `Γ_{i→f} = σ_p·Φ`, or zero when the channel is energetically closed.
pub fn ionization_rate(
    channel: &IonizationChannel,
    flux: f64,
    ionization_energy: f64,
) -> Result<IonizationRate> {
    let flux = non_negative("photon flux", flux)?;
    positive("ionization energy", ionization_energy)?;
    if !channel.is_open(ionization_energy)? {
        return Ok(IonizationRate {
            rate: 0.0,
            below_threshold: true,
        });
    }
    Ok(IonizationRate {
        rate: channel.cross_section * flux,
        below_threshold: false,
    })
}

/// `γ_p = Γ_{i→f}·ρ_ee`.
pub fn ionization_loss_rate(ionization_rate: f64, excited_fraction: f64) -> Result<f64> {
    let rate = non_negative("ionization rate", ionization_rate)?;
    let rho = non_negative("excited fraction", excited_fraction)?;
    if rho >= 0.5 {
        return Err(invalid(
            "excited fraction",
            format!("{rho} is not below 1/2"),
        ));
    }
    Ok(rate * rho)
}

/// One-body loss rate added to the cooled species by the ionizing light.
pub fn photoionization_loss(
    cooling: &LightField,
    spec: &TransitionSpec,
    channel: &IonizationChannel,
    ionizing_intensity: f64,
) -> Result<f64> {
    let rho = excited_fraction(saturation_parameter(cooling, spec)?)?;
    let flux = photon_flux(ionizing_intensity, channel.wavelength)?;
    let rate = ionization_rate(channel, flux, spec.excited_ionization_energy)?;
    ionization_loss_rate(rate.rate, rho)
}

/// Excited fraction at each detuning in `detunings` (rad/s), holding the rest
/// of `field` fixed. Used to bracket the systematic error from an uncertain
/// detuning.
pub fn detuning_sweep(
    field: &LightField,
    spec: &TransitionSpec,
    detunings: &[f64],
) -> Result<Vec<(f64, f64)>> {
    detunings
        .iter()
        .map(|&detuning| {
            let f = LightField { detuning, ..*field };
            Ok((detuning, excited_fraction(saturation_parameter(&f, spec)?)?))
        })
        .collect()
}

/// Energy split between photoelectron and ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotoelectronKinematics {
    pub excess_energy: f64,
    pub electron_speed: f64,
    pub electron_energy: f64,
    pub ion_speed: f64,
    pub ion_energy: f64,
}

/// Shares the excess photon energy between electron and ion with equal and
/// opposite momenta. `ion_mass` may be `f64::INFINITY`.
pub fn photoelectron_kinematics(
    ionizing_wavelength: f64,
    ionization_energy: f64,
    ion_mass: f64,
) -> Result<PhotoelectronKinematics> {
    positive("ionization energy", ionization_energy)?;
    if ion_mass.is_nan() || ion_mass <= 0.0 {
        return Err(invalid("ion mass", format!("{ion_mass} is not positive")));
    }
    let excess = photon_energy(ionizing_wavelength)? - ionization_energy;
    if excess <= 0.0 {
        return Err(invalid(
            "ionizing wavelength",
            format!(
                "photon energy at {ionizing_wavelength} m does not exceed the ionization energy"
            ),
        ));
    }
    let electron_share = 1.0 / (1.0 + ELECTRON_MASS / ion_mass);
    let electron_energy = excess * electron_share;
    let ion_energy = excess - electron_energy;
    let electron_speed = (2.0 * electron_energy / ELECTRON_MASS).sqrt();
    let ion_speed = ELECTRON_MASS * electron_speed / ion_mass;
    Ok(PhotoelectronKinematics {
        excess_energy: excess,
        electron_speed,
        electron_energy,
        ion_speed,
        ion_energy,
    })
}

/// Photoelectron speed (m/s).
pub fn photoelectron_velocity(
    ionizing_wavelength: f64,
    ionization_energy: f64,
    ion_mass: f64,
) -> Result<f64> {
    Ok(photoelectron_kinematics(ionizing_wavelength, ionization_energy, ion_mass)?.electron_speed)
}

/// Steady-state atom-number suppression `(γ_Rb + γ_p)/γ_Rb`.
pub fn mot_suppression_factor(background_rate: f64, ionization_loss: f64) -> Result<f64> {
    let background = positive("background loss rate", background_rate)?;
    let extra = non_negative("ionization loss rate", ionization_loss)?;
    Ok((background + extra) / background)
}
