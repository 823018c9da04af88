//! JSON run configuration. Every physical number is written as
//! `{"value": …, "unit": "…"}` and checked against the unit registry.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Interaction, NoiseSpec, OverlapSpec, Tolerances, TwoSpeciesModel};
use crate::error::{Error, Result};
use crate::estimation::SigmaPSetup;
use crate::photoionization::TransitionSpec;
use crate::units::{Dimension, Quantity};

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuantitySpec {
    pub value: f64,
    pub unit: String,
}

impl QuantitySpec {
    pub fn si(&self, dimension: Dimension) -> Result<f64> {
        Quantity::new(self.value, &self.unit)?.si_as(dimension)
    }
}

/// Parses `"<value> <unit>"` as given on the command line.
pub fn parse_quantity(text: &str, dimension: Dimension) -> Result<f64> {
    let text = text.trim();
    let Some((value, unit)) = text.split_once(char::is_whitespace) else {
        return Err(Error::Config(format!(
            "'{text}' has no unit; write it as \"<value> <unit>\""
        )));
    };
    let value: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("'{value}' is not a number")))?;
    Quantity::new(value, unit.trim())?.si_as(dimension)
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum OverlapConfig {
    EffectiveVolume(QuantitySpec),
    Geometry {
        mean_size: QuantitySpec,
        one_over_e_length: QuantitySpec,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum InteractionConfig {
    Dynamic,
    ConstantFactor(QuantitySpec),
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub loading_rate_rb: QuantitySpec,
    pub gamma_rb: QuantitySpec,
    pub gamma_cr: QuantitySpec,
    pub beta_rbcr: QuantitySpec,
    pub beta_crrb: QuantitySpec,
    pub overlap: OverlapConfig,
    #[serde(default = "dynamic")]
    pub interaction: InteractionConfig,
}

fn dynamic() -> InteractionConfig {
    InteractionConfig::Dynamic
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<TwoSpeciesModel> {
        let overlap = match &self.overlap {
            OverlapConfig::EffectiveVolume(v) => OverlapSpec::Volume(v.si(Dimension::Volume)?),
            OverlapConfig::Geometry {
                mean_size,
                one_over_e_length,
            } => OverlapSpec::Geometry {
                mean_size: mean_size.si(Dimension::Length)?,
                one_over_e_length: one_over_e_length.si(Dimension::Length)?,
            },
        };
        let interaction = match &self.interaction {
            InteractionConfig::Dynamic => Interaction::Dynamic,
            InteractionConfig::ConstantFactor(f) => {
                Interaction::ConstantFactor(f.si(Dimension::Density)?)
            }
        };
        let model = TwoSpeciesModel {
            loading_rate_rb: self.loading_rate_rb.si(Dimension::AtomRate)?,
            gamma_rb: self.gamma_rb.si(Dimension::Rate)?,
            gamma_cr: self.gamma_cr.si(Dimension::Rate)?,
            beta_rbcr: self.beta_rbcr.si(Dimension::LossCoefficient)?,
            beta_crrb: self.beta_crrb.si(Dimension::LossCoefficient)?,
            overlap,
            interaction,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub n_cr: QuantitySpec,
    pub n_rb: QuantitySpec,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub start: Option<QuantitySpec>,
    pub duration: QuantitySpec,
    pub rate: QuantitySpec,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub relative_sigma: Option<QuantitySpec>,
    #[serde(default)]
    pub additive_sigma: Option<QuantitySpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rel: QuantitySpec,
    pub abs: QuantitySpec,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: Option<String>,
}

/// Cooling transition overrides; absent fields keep the Rb D2 values.
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub linewidth: Option<QuantitySpec>,
    pub saturation_intensity: Option<QuantitySpec>,
    pub clebsch_gordan_sq: Option<QuantitySpec>,
    pub wavelength: Option<QuantitySpec>,
    pub excited_ionization_energy: Option<QuantitySpec>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub transition: TransitionConfig,
    /// Accepts `Gamma` (natural linewidths) besides angular-frequency units.
    pub detuning: Option<QuantitySpec>,
    pub ionizing_wavelength: Option<QuantitySpec>,
}

impl FieldConfig {
    pub fn to_setup(&self) -> Result<SigmaPSetup> {
        let base = TransitionSpec::rb87_d2();
        let t = &self.transition;
        let pick = |q: &Option<QuantitySpec>, d: Dimension, default: f64| -> Result<f64> {
            q.as_ref().map_or(Ok(default), |q| q.si(d))
        };
        let transition = TransitionSpec::new(
            pick(&t.linewidth, Dimension::AngularFrequency, base.linewidth)?,
            pick(
                &t.saturation_intensity,
                Dimension::Intensity,
                base.saturation_intensity,
            )?,
            pick(
                &t.clebsch_gordan_sq,
                Dimension::Dimensionless,
                base.clebsch_gordan_sq,
            )?,
            pick(&t.wavelength, Dimension::Length, base.wavelength)?,
            pick(
                &t.excited_ionization_energy,
                Dimension::Energy,
                base.excited_ionization_energy,
            )?,
        )?;
        let detuning_linewidths = match &self.detuning {
            None => 2.25,
            Some(q) if q.unit.trim() == "Gamma" => crate::error::finite("detuning", q.value)?,
            Some(q) => q.si(Dimension::AngularFrequency)? / transition.linewidth,
        };
        Ok(SigmaPSetup {
            transition,
            detuning_linewidths,
            ionizing_wavelength: pick(&self.ionizing_wavelength, Dimension::Length, 426e-9)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub tolerances: Option<ToleranceConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn noise(&self, seed: u64) -> Result<NoiseSpec> {
        let (rel, add) = match &self.noise {
            None => (0.0, 0.0),
            Some(n) => (
                n.relative_sigma
                    .as_ref()
                    .map_or(Ok(0.0), |q| q.si(Dimension::Dimensionless))?,
                n.additive_sigma
                    .as_ref()
                    .map_or(Ok(0.0), |q| q.si(Dimension::Count))?,
            ),
        };
        let spec = NoiseSpec {
            relative_sigma: rel,
            additive_sigma: add,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tolerances(&self) -> Result<Option<Tolerances>> {
        self.tolerances
            .as_ref()
            .map(|t| {
                Ok(Tolerances {
                    rel: t.rel.si(Dimension::Dimensionless)?,
                    abs: t.abs.si(Dimension::Count)?,
                })
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "model": {
            "loading_rate_rb": {"value": 2.6e4, "unit": "atoms/s"},
            "gamma_rb": {"value": 0.1111111111111111, "unit": "1/s"},
            "gamma_cr": {"value": 0.1, "unit": "1/s"},
            "beta_rbcr": {"value": 1.4e-17, "unit": "m^3/s"},
            "beta_crrb": {"value": 1e-15, "unit": "m^3/s"},
            "overlap": {"geometry": {"mean_size": {"value": 1, "unit": "mm"},
                                      "one_over_e_length": {"value": 1, "unit": "mm"}}}
        },
        "initial": {"n_cr": {"value": 5e7, "unit": "atoms"}, "n_rb": {"value": 0, "unit": "atoms"}},
        "sampling": {"duration": {"value": 30, "unit": "s"}, "rate": {"value": 2, "unit": "Hz"}}
    }"#;

    #[test]
    fn parses_and_converts() {
        let cfg = RunConfig::from_json(CONFIG).unwrap();
        let model = cfg.model.to_model().unwrap();
        assert!(matches!(model.interaction, Interaction::Dynamic));
        assert!((model.overlap.effective_volume().unwrap() / 1.01167e-7 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn missing_unit_is_an_error() {
        let bad = CONFIG.replace(r#"{"value": 0.1, "unit": "1/s"}"#, r#"{"value": 0.1}"#);
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("unit"), "{err}");
    }

    #[test]
    fn unknown_key_is_an_error() {
        let bad = CONFIG.replace(r#""gamma_cr""#, r#""gamma_cr_typo""#);
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn wrong_dimension_is_an_error() {
        let bad = CONFIG.replace(
            r#"{"value": 0.1, "unit": "1/s"}"#,
            r#"{"value": 0.1, "unit": "mm"}"#,
        );
        let cfg = RunConfig::from_json(&bad).unwrap();
        assert!(matches!(
            cfg.model.to_model(),
            Err(Error::WrongDimension { .. })
        ));
    }

    #[test]
    fn command_line_quantities() {
        assert_eq!(parse_quantity("1 mm", Dimension::Length).unwrap(), 1e-3);
        assert!(parse_quantity("1", Dimension::Length).is_err());
        assert!(parse_quantity("1 s", Dimension::Length).is_err());
    }

    #[test]
    fn field_defaults_and_gamma_detuning() {
        let setup = FieldConfig::default().to_setup().unwrap();
        assert_eq!(setup.detuning_linewidths, 2.25);
        let cfg: FieldConfig =
            serde_json::from_str(r#"{"detuning": {"value": 3, "unit": "Gamma"}}"#).unwrap();
        assert_eq!(cfg.to_setup().unwrap().detuning_linewidths, 3.0);
        let cfg: FieldConfig =
            serde_json::from_str(r#"{"detuning": {"value": 12.14, "unit": "MHz"}}"#).unwrap();
        assert!((cfg.to_setup().unwrap().detuning_linewidths - 2.0).abs() < 1e-12);
    }
}
