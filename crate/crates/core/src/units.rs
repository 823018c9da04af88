//! Physical constants and the small unit registry used at interface
//! boundaries.
//!
//! Everything inside the toolkit is SI. Quantities arriving from config files
//! or the command line are tagged with a unit symbol (`mW/cm^2`, `G/cm`,
//! `uK`, `nm`, ...) and converted here exactly once.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{finite, invalid, non_negative, positive, Error, Result};

/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Planck constant (J s), exact.
pub const PLANCK: f64 = 6.62607015e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;
/// Electron mass (kg).
pub const ELECTRON_MASS: f64 = 9.1093837015e-31;
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.66053906660e-27;
/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Electron volt (J), exact.
pub const ELECTRON_VOLT: f64 = 1.602176634e-19;

/// Atomic mass of 87Rb (kg).
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;
/// Atomic mass of 52Cr (kg).
pub const CR52_MASS: f64 = 51.940_507_5 * ATOMIC_MASS_UNIT;

/// The CODATA 2018 set as `(name, value)` pairs.
pub const CONSTANTS: [(&str, f64); 8] = [
    ("boltzmann_k", BOLTZMANN),
    ("planck_h", PLANCK),
    ("hbar", HBAR),
    ("bohr_magneton", BOHR_MAGNETON),
    ("electron_mass", ELECTRON_MASS),
    ("atomic_mass_unit", ATOMIC_MASS_UNIT),
    ("speed_of_light", SPEED_OF_LIGHT),
    ("electron_volt", ELECTRON_VOLT),
];

/// What a unit measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Intensity,
    FieldGradient,
    MagneticField,
    Temperature,
    /// Lengths and wavelengths.
    Length,
    Area,
    Volume,
    Energy,
    Mass,
    Time,
    Speed,
    /// Per-atom rates (1/s).
    Rate,
    /// Atoms per second (loading rates, slopes).
    AtomRate,
    AngularFrequency,
    LossCoefficient,
    Density,
    HeatingRate,
    MagneticMoment,
    Count,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Intensity => "intensity",
            Dimension::FieldGradient => "field gradient",
            Dimension::MagneticField => "magnetic field",
            Dimension::Temperature => "temperature",
            Dimension::Length => "length",
            Dimension::Area => "area",
            Dimension::Volume => "volume",
            Dimension::Energy => "energy",
            Dimension::Mass => "mass",
            Dimension::Time => "time",
            Dimension::Speed => "speed",
            Dimension::Rate => "rate",
            Dimension::AtomRate => "atom rate",
            Dimension::AngularFrequency => "angular frequency",
            Dimension::LossCoefficient => "loss coefficient",
            Dimension::Density => "density",
            Dimension::HeatingRate => "heating rate",
            Dimension::MagneticMoment => "magnetic moment",
            Dimension::Count => "count",
            Dimension::Dimensionless => "dimensionless ratio",
        };
        f.write_str(name)
    }
}

/// A registered unit: symbol, dimension and the factor that takes a value in
/// this unit to SI.
#[derive(Debug, PartialEq)]
pub struct Unit {
    pub symbol: &'static str,
    pub dimension: Dimension,
    pub to_si: f64,
}

const fn unit(symbol: &'static str, dimension: Dimension, to_si: f64) -> Unit {
    Unit {
        symbol,
        dimension,
        to_si,
    }
}

use Dimension as D;

// Cyclic frequencies (`MHz`) are read as angular: 1 MHz -> 2π·10⁶ rad/s.
static REGISTRY: &[Unit] = &[
    unit("W/m^2", D::Intensity, 1.0),
    unit("mW/cm^2", D::Intensity, 10.0),
    unit("mW/cm²", D::Intensity, 10.0),
    unit("W/cm^2", D::Intensity, 1.0e4),
    unit("T/m", D::FieldGradient, 1.0),
    unit("G/cm", D::FieldGradient, 1.0e-2),
    unit("T", D::MagneticField, 1.0),
    unit("mT", D::MagneticField, 1.0e-3),
    unit("G", D::MagneticField, 1.0e-4),
    unit("K", D::Temperature, 1.0),
    unit("mK", D::Temperature, 1.0e-3),
    unit("uK", D::Temperature, 1.0e-6),
    unit("µK", D::Temperature, 1.0e-6),
    unit("nK", D::Temperature, 1.0e-9),
    unit("m", D::Length, 1.0),
    unit("cm", D::Length, 1.0e-2),
    unit("mm", D::Length, 1.0e-3),
    unit("um", D::Length, 1.0e-6),
    unit("µm", D::Length, 1.0e-6),
    unit("nm", D::Length, 1.0e-9),
    unit("m^2", D::Area, 1.0),
    unit("cm^2", D::Area, 1.0e-4),
    unit("m^3", D::Volume, 1.0),
    unit("cm^3", D::Volume, 1.0e-6),
    unit("mm^3", D::Volume, 1.0e-9),
    unit("J", D::Energy, 1.0),
    unit("eV", D::Energy, ELECTRON_VOLT),
    unit("kg", D::Mass, 1.0),
    unit("u", D::Mass, ATOMIC_MASS_UNIT),
    unit("s", D::Time, 1.0),
    unit("ms", D::Time, 1.0e-3),
    unit("m/s", D::Speed, 1.0),
    unit("mm/s", D::Speed, 1.0e-3),
    unit("1/s", D::Rate, 1.0),
    unit("s^-1", D::Rate, 1.0),
    unit("Hz", D::Rate, 1.0),
    unit("atoms/s", D::AtomRate, 1.0),
    unit("rad/s", D::AngularFrequency, 1.0),
    unit("MHz", D::AngularFrequency, 2.0 * PI * 1.0e6),
    unit("m^3/s", D::LossCoefficient, 1.0),
    unit("cm^3/s", D::LossCoefficient, 1.0e-6),
    unit("1/m^3", D::Density, 1.0),
    unit("m^-3", D::Density, 1.0),
    unit("1/cm^3", D::Density, 1.0e6),
    unit("K/s", D::HeatingRate, 1.0),
    unit("uK/s", D::HeatingRate, 1.0e-6),
    unit("µK/s", D::HeatingRate, 1.0e-6),
    unit("J/T", D::MagneticMoment, 1.0),
    unit("mu_B", D::MagneticMoment, BOHR_MAGNETON),
    unit("atoms", D::Count, 1.0),
    unit("1", D::Dimensionless, 1.0),
];

/// Looks a unit symbol up in the registry.
pub fn lookup(symbol: &str) -> Result<&'static Unit> {
    let symbol = symbol.trim();
    REGISTRY
        .iter()
        .find(|u| u.symbol == symbol)
        .ok_or_else(|| Error::UnknownUnit(symbol.to_string()))
}

/// All registered units.
pub fn registry() -> &'static [Unit] {
    REGISTRY
}

/// A value tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static Unit,
}

impl Quantity {
    pub fn new(value: f64, symbol: &str) -> Result<Self> {
        let unit = lookup(symbol)?;
        Ok(Quantity {
            value: finite("quantity", value)?,
            unit,
        })
    }

    /// Builds a quantity from an SI value, expressed in `symbol`.
    pub fn from_si(si: f64, symbol: &str) -> Result<Self> {
        let unit = lookup(symbol)?;
        Ok(Quantity {
            value: finite("quantity", si)? / unit.to_si,
            unit,
        })
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension
    }

    pub fn to_si(&self) -> f64 {
        self.value * self.unit.to_si
    }

    /// SI value, after checking the quantity measures `expected`.
    pub fn si_as(&self, expected: Dimension) -> Result<f64> {
        if self.unit.dimension != expected {
            return Err(Error::WrongDimension {
                unit: self.unit.symbol.to_string(),
                expected,
            });
        }
        Ok(self.to_si())
    }

    pub fn convert_to(&self, symbol: &str) -> Result<Self> {
        let target = lookup(symbol)?;
        if target.dimension != self.unit.dimension {
            return Err(Error::IncompatibleUnits {
                left: self.unit.dimension,
                right: target.dimension,
            });
        }
        Ok(Quantity {
            value: self.to_si() / target.to_si,
            unit: target,
        })
    }

    /// Sum expressed in the unit of `self`.
    pub fn try_add(&self, other: &Quantity) -> Result<Quantity> {
        let rhs = other
            .convert_to(self.unit.symbol)
            .map_err(|_| Error::IncompatibleUnits {
                left: self.unit.dimension,
                right: other.unit.dimension,
            })?;
        Ok(Quantity {
            value: self.value + rhs.value,
            unit: self.unit,
        })
    }

    pub fn try_sub(&self, other: &Quantity) -> Result<Quantity> {
        self.try_add(&Quantity {
            value: -other.value,
            unit: other.unit,
        })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol)
    }
}

/// mW/cm² to W/m².
pub fn intensity_to_si(mw_per_cm2: f64) -> Result<f64> {
    Ok(non_negative("intensity", mw_per_cm2)? * 10.0)
}

/// G/cm to T/m.
pub fn gradient_to_si(gauss_per_cm: f64) -> Result<f64> {
    Ok(finite("field gradient", gauss_per_cm)? * 1.0e-2)
}

/// Photon energy h·c/λ in joules.
pub fn photon_energy(wavelength: f64) -> Result<f64> {
    let wavelength = positive("wavelength", wavelength)
        .map_err(|_| invalid("wavelength", format!("{wavelength} m is not positive")))?;
    Ok(PLANCK * SPEED_OF_LIGHT / wavelength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constants_are_positive() {
        for (name, value) in CONSTANTS {
            assert!(value > 0.0, "{name}");
        }
        assert_relative_eq!(HBAR, 1.054571817e-34, max_relative = 1e-9);
    }

    #[test]
    fn intensity_conversion() {
        assert_eq!(intensity_to_si(100.0).unwrap(), 1000.0);
        assert_eq!(intensity_to_si(0.0).unwrap(), 0.0);
        assert_relative_eq!(intensity_to_si(1.6).unwrap(), 16.0, max_relative = 1e-15);
        assert!(intensity_to_si(-1.0).is_err());
    }

    #[test]
    fn gradient_conversion() {
        assert_relative_eq!(gradient_to_si(25.0).unwrap(), 0.25, max_relative = 1e-15);
        assert_eq!(gradient_to_si(0.0).unwrap(), 0.0);
        assert_relative_eq!(gradient_to_si(100.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(gradient_to_si(f64::NAN).is_err());
        assert!(gradient_to_si(f64::INFINITY).is_err());
    }

    #[test]
    fn photon_energies() {
        let e426 = photon_energy(426e-9).unwrap();
        assert_relative_eq!(e426, 4.662e-19, max_relative = 1e-3);
        assert_relative_eq!(e426 / ELECTRON_VOLT, 2.911, max_relative = 1e-3);
        assert!((photon_energy(780e-9).unwrap() / ELECTRON_VOLT - 1.6).abs() < 0.05);
        assert!((photon_energy(297e-9).unwrap() / ELECTRON_VOLT - 4.2).abs() < 0.05);
        assert!(photon_energy(0.0).is_err());
        assert!(photon_energy(-1e-9).is_err());
    }

    #[test]
    fn incompatible_arithmetic_is_rejected() {
        let i = Quantity::new(1.0, "mW/cm^2").unwrap();
        let t = Quantity::new(1.0, "uK").unwrap();
        assert!(matches!(
            i.try_add(&t),
            Err(Error::IncompatibleUnits { .. })
        ));
        let mk = Quantity::new(1.0, "mK").unwrap();
        let sum = t.try_add(&mk).unwrap();
        assert_relative_eq!(sum.value, 1001.0, max_relative = 1e-14);
        assert_eq!(sum.unit.symbol, "uK");
        assert!(i.convert_to("K").is_err());
        assert!(Quantity::new(1.0, "furlong").is_err());
    }

    #[test]
    fn si_as_checks_dimension() {
        let g = Quantity::new(25.0, "G/cm").unwrap();
        assert_relative_eq!(g.si_as(Dimension::FieldGradient).unwrap(), 0.25);
        assert!(matches!(
            g.si_as(Dimension::MagneticField),
            Err(Error::WrongDimension { .. })
        ));
    }

    #[test]
    fn megahertz_is_angular() {
        let q = Quantity::new(6.07, "MHz").unwrap();
        assert_relative_eq!(q.to_si(), 2.0 * PI * 6.07e6, max_relative = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn si_round_trip(index in 0usize..REGISTRY.len(), mag in -30.0f64..30.0, mant in 1.0f64..10.0) {
            let unit = &REGISTRY[index];
            let value = mant * 10f64.powf(mag);
            let q = Quantity::new(value, unit.symbol).unwrap();
            let back = Quantity::from_si(q.to_si(), unit.symbol).unwrap();
            prop_assert!(((back.value - value) / value).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn photon_energy_decreases(a in 1e-9f64..1e-5, b in 1e-9f64..1e-5) {
            prop_assume!(a < b);
            prop_assert!(photon_energy(a).unwrap() > photon_energy(b).unwrap());
        }
    }
}
