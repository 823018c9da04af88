//! The `trapkit` command line.
//!
//! Every command prints a JSON report. Exit status is 0 on success, 2 for
//! usage errors, 65 for bad data, 74 for I/O failures and 78 for bad
//! configuration; warnings never change it.

pub mod config;
mod report;
mod runs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::dynamics::{
    integrate_coupled, synthesize_trace, Species, Tolerances, DEFAULT_TOLERANCES,
};
use crate::error::{Error, Result};
use crate::estimation::{
    beta_crrb_bounds, beta_rbcr_from_traces, excess_loss_rate, extract_beta_rbcr, extract_sigma_p,
    fit_decay, fit_heating_rate, fit_loading, inelastic_cross_section, BackgroundRate,
    BETA_SYSTEMATIC_RELATIVE_ERROR,
};
use crate::overlap::overlap;
use crate::trace::DataTrace;
use crate::units::Dimension;
use config::{parse_quantity, FieldConfig, RunConfig};
pub use report::{write_atomic, Digest, Report};

pub const SEED_ENV: &str = "TRAPKIT_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "trapkit",
    version,
    about = "Two-species trap-loss simulation and fitting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Noise seed; falls back to the config, then TRAPKIT_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for `simulate`, report file for the other commands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Integrator relative tolerance.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,

    /// Integrator absolute tolerance (atoms).
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,

    /// Initial-slope window in seconds.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub window: f64,

    /// Use one background rate pooled over all Rb intensities.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    pub pool_gamma_bg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Loading,
    Decay,
    Heating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaMode {
    Slope,
    Bounds,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the coupled rate equations and write one trace per species.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit a trace with a one-body loading, one-body decay or linear heating model.
    Fit { kind: FitKind, trace: PathBuf },
    /// Photoionization cross section from a grid of fitted loss rates.
    SigmaP {
        runs: PathBuf,
        /// Fixed background loss rate, e.g. "0.11 1/s".
        #[arg(long)]
        gamma_bg: Option<String>,
        /// Light-field configuration (JSON).
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Interspecies loss coefficients.
    Beta {
        mode: BetaMode,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        loading_rate: Option<String>,
        #[arg(long)]
        factor: Option<String>,
        /// Rb loading trace without Cr.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Rb loading trace with Cr.
        #[arg(long)]
        with_cr: Option<PathBuf>,
        /// Cr trace on the same time grid as `--with-cr`.
        #[arg(long)]
        cr: Option<PathBuf>,
        #[arg(long)]
        volume: Option<String>,
        /// Mean relative speed, for the inelastic cross section.
        #[arg(long)]
        mean_speed: Option<String>,
        #[arg(long)]
        excess_rate: Option<String>,
        /// Cr decay without Rb.
        #[arg(long)]
        without: Option<PathBuf>,
        /// Cr decay with Rb.
        #[arg(long)]
        with: Option<PathBuf>,
        /// Cr one-body loss rate for `--without`/`--with`.
        #[arg(long)]
        gamma: Option<String>,
        /// Analysis window start (s).
        #[arg(long, default_value_t = 20.0)]
        from: f64,
        /// Analysis window end (s).
        #[arg(long, default_value_t = 30.0)]
        to: f64,
        #[arg(long)]
        factor_min: Option<String>,
        #[arg(long)]
        factor_max: Option<String>,
    },
    /// Overlap factor ς and effective volume V̄ for a MOT inside a magnetic trap.
    Overlap {
        /// MT 1/e length, e.g. "1 mm".
        #[arg(long)]
        z: String,
        /// MOT mean size, e.g. "1 mm".
        #[arg(long)]
        sigma_bar: String,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 74,
        Error::Config(_)
        | Error::Json(_)
        | Error::UnknownUnit(_)
        | Error::WrongDimension { .. }
        | Error::IncompatibleUnits { .. } => 78,
        _ => 65,
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn read(path: &Path, digest: &mut Digest) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    digest.add("input", &bytes);
    Ok(bytes)
}

fn read_trace(path: &Path, digest: &mut Digest) -> Result<DataTrace> {
    let bytes = read(path, digest)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        line: 0,
        message: format!("{} is not UTF-8", path.display()),
    })?;
    DataTrace::from_csv(&text)
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Runs one command and returns the report text. The report is also written
/// to `--out` when given, and into the output directory for `simulate`.
pub fn run(cli: &Cli) -> Result<String> {
    let mut digest = Digest::new();
    let mut warnings = Vec::new();
    let mut seed_used = None;
    let mut report_path = cli.out.clone();
    let (name, results) = match &cli.command {
        Command::Simulate { config } => {
            let text = read(config, &mut digest)?;
            let cfg = RunConfig::from_json(&String::from_utf8_lossy(&text))?;
            let seed = resolve_seed(cli.seed, cfg.seed)?;
            seed_used = Some(seed);
            digest.add("seed", &seed.to_le_bytes());
            let mut tol = cfg.tolerances()?.unwrap_or(DEFAULT_TOLERANCES);
            if let Some(r) = cli.rel_tol {
                tol.rel = r;
            }
            if let Some(a) = cli.abs_tol {
                tol.abs = a;
            }
            digest.add(
                "tolerances",
                format!("{:e},{:e}", tol.rel, tol.abs).as_bytes(),
            );
            let dir = cli
                .out
                .clone()
                .or_else(|| {
                    cfg.output
                        .as_ref()
                        .and_then(|o| o.dir.clone())
                        .map(PathBuf::from)
                })
                .unwrap_or_else(|| PathBuf::from("."));
            let prefix = cfg
                .output
                .as_ref()
                .and_then(|o| o.prefix.clone())
                .unwrap_or_else(|| "trapkit".into());
            let results = simulate(&cfg, seed, tol, &dir, &prefix, &mut warnings)?;
            report_path = Some(dir.join(format!("{prefix}_report.json")));
            ("simulate", results)
        }
        Command::Fit { kind, trace } => {
            let trace = read_trace(trace, &mut digest)?;
            let (label, fit) = match kind {
                FitKind::Loading => ("loading", fit_loading(&trace)?),
                FitKind::Decay => ("decay", fit_decay(&trace)?),
                FitKind::Heating => ("heating", fit_heating_rate(&trace)?),
            };
            warnings.extend(fit.warnings.iter().cloned());
            (
                "fit",
                json!({ "kind": label, "points": trace.len(), "fit": fit }),
            )
        }
        Command::SigmaP {
            runs,
            gamma_bg,
            field,
        } => {
            let text = read(runs, &mut digest)?;
            let runs = runs::parse_runs(&String::from_utf8_lossy(&text))?;
            let field_cfg = match field {
                Some(path) => {
                    let bytes = read(path, &mut digest)?;
                    serde_json::from_slice::<FieldConfig>(&bytes)
                        .map_err(|e| Error::Config(e.to_string()))?
                }
                None => FieldConfig::default(),
            };
            let setup = field_cfg.to_setup()?;
            let background = match gamma_bg {
                Some(q) => BackgroundRate::Fixed(parse_quantity(q, Dimension::Rate)?),
                None if cli.pool_gamma_bg => BackgroundRate::Pooled,
                None => BackgroundRate::PerGroup,
            };
            digest.add("background", format!("{background:?}").as_bytes());
            let est = extract_sigma_p(&runs, &setup, background)?;
            warnings.extend(est.result.warnings.iter().cloned());
            (
                "sigma-p",
                json!({
                    "background": match background {
                        BackgroundRate::Fixed(_) => "fixed",
                        BackgroundRate::Pooled => "pooled",
                        BackgroundRate::PerGroup => "per_group",
                    },
                    "detuning_linewidths": setup.detuning_linewidths,
                    "ionizing_wavelength_m": setup.ionizing_wavelength,
                    "fit": est.result,
                    "groups": est.groups,
                }),
            )
        }
        Command::Beta { mode, .. } => {
            let results = beta(cli, *mode, &mut digest, &mut warnings)?;
            ("beta", results)
        }
        Command::Overlap { z, sigma_bar } => {
            digest.add("z", z.as_bytes());
            digest.add("sigma_bar", sigma_bar.as_bytes());
            let z = parse_quantity(z, Dimension::Length)?;
            let s = parse_quantity(sigma_bar, Dimension::Length)?;
            let o = overlap(s, z)?;
            (
                "overlap",
                json!({
                    "z_m": z,
                    "sigma_bar_m": s,
                    "ratio": s / z,
                    "varsigma": o.varsigma,
                    "branch": o.branch.as_str(),
                    "mt_volume_m3": o.mt_volume,
                    "effective_volume_m3": o.effective_volume,
                }),
            )
        }
    };
    digest.add("command", name.as_bytes());
    let report = Report::new(name, digest.hex(), seed_used, results, warnings);
    let text = report.to_json()?;
    if let Some(path) = report_path {
        write_atomic(&path, text.as_bytes())?;
    }
    Ok(text)
}

fn simulate(
    cfg: &RunConfig,
    seed: u64,
    tol: Tolerances,
    dir: &Path,
    prefix: &str,
    warnings: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let model = cfg.model.to_model()?;
    let n_cr = cfg.initial.n_cr.si(Dimension::Count)?;
    let n_rb = cfg.initial.n_rb.si(Dimension::Count)?;
    let start = cfg
        .sampling
        .start
        .as_ref()
        .map_or(Ok(0.0), |q| q.si(Dimension::Time))?;
    let duration = cfg.sampling.duration.si(Dimension::Time)?;
    let rate = cfg.sampling.rate.si(Dimension::Rate)?;
    let traj = integrate_coupled(&model, n_cr, n_rb, (start, start + duration), tol)?;
    if let Some(t) = traj.terminated_at {
        warnings.push(format!(
            "a population reached zero at t = {t} s; integration stopped"
        ));
    }
    let noise = cfg.noise(seed)?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (species, offset) in [(Species::Cr, 0u64), (Species::Rb, 1u64)] {
        let spec = crate::dynamics::NoiseSpec {
            seed: seed.wrapping_add(offset),
            ..noise
        };
        let trace = synthesize_trace(&traj, species, &spec, rate)?;
        let name = format!("{prefix}_{}.csv", species.as_str());
        write_atomic(&dir.join(&name), trace.to_csv().as_bytes())?;
        files.push(name);
    }
    let volume = model.overlap.effective_volume()?;
    let sidecar = json!({
        "model": {
            "loading_rate_rb": {"value": model.loading_rate_rb, "unit": "atoms/s"},
            "gamma_rb": {"value": model.gamma_rb, "unit": "1/s"},
            "gamma_cr": {"value": model.gamma_cr, "unit": "1/s"},
            "beta_rbcr": {"value": model.beta_rbcr, "unit": "m^3/s"},
            "beta_crrb": {"value": model.beta_crrb, "unit": "m^3/s"},
            "effective_volume": {"value": volume, "unit": "m^3"},
            "interaction": match model.interaction {
                crate::dynamics::Interaction::Dynamic => json!("dynamic"),
                crate::dynamics::Interaction::ConstantFactor(f) =>
                    json!({"constant_factor": {"value": f, "unit": "1/m^3"}}),
            },
        },
        "initial": {
            "n_cr": {"value": n_cr, "unit": "atoms"},
            "n_rb": {"value": n_rb, "unit": "atoms"},
        },
        "sampling": {
            "start": {"value": start, "unit": "s"},
            "duration": {"value": duration, "unit": "s"},
            "rate": {"value": rate, "unit": "Hz"},
        },
        "noise": {
            "relative_sigma": noise.relative_sigma,
            "additive_sigma": noise.additive_sigma,
            "seed_cr": seed,
            "seed_rb": seed.wrapping_add(1),
        },
        "tolerances": {"rel": tol.rel, "abs": tol.abs},
        "solver": {
            "accepted_steps": traj.stats.accepted,
            "rejected_steps": traj.stats.rejected,
            "evaluations": traj.stats.evaluations,
            "terminated_at": traj.terminated_at,
        },
    });
    let sidecar_name = format!("{prefix}.json");
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    write_atomic(&dir.join(&sidecar_name), text.as_bytes())?;
    files.push(sidecar_name);
    let last = traj.state_at(traj.end())?;
    Ok(json!({
        "files": files,
        "final_n_cr": last[0],
        "final_n_rb": last[1],
        "effective_volume_m3": volume,
        "accepted_steps": traj.stats.accepted,
    }))
}

fn beta(
    cli: &Cli,
    mode: BetaMode,
    digest: &mut Digest,
    warnings: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let Command::Beta {
        alpha,
        loading_rate,
        factor,
        reference,
        with_cr,
        cr,
        volume,
        mean_speed,
        excess_rate,
        without,
        with,
        gamma,
        from,
        to,
        factor_min,
        factor_max,
        ..
    } = &cli.command
    else {
        unreachable!("beta called for another command")
    };
    let missing = |names: &[(&str, bool)]| -> Result<()> {
        let absent: Vec<&str> = names
            .iter()
            .filter(|(_, present)| !present)
            .map(|(n, _)| *n)
            .collect();
        if absent.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "missing inputs: {}",
                absent.join(", ")
            )))
        }
    };

    match mode {
        BetaMode::Slope => {
            let from_traces = reference.is_some() || with_cr.is_some() || cr.is_some();
            let mut out = if from_traces {
                missing(&[
                    ("--reference", reference.is_some()),
                    ("--with-cr", with_cr.is_some()),
                    ("--cr", cr.is_some()),
                    ("--volume", volume.is_some()),
                ])?;
                let v = flag_quantity(digest, "volume", volume, Dimension::Volume)?;
                digest.add("window", format!("{:e}", cli.window).as_bytes());
                let reference = read_trace(reference.as_ref().unwrap(), digest)?;
                let with_cr = read_trace(with_cr.as_ref().unwrap(), digest)?;
                let cr = read_trace(cr.as_ref().unwrap(), digest)?;
                let a = beta_rbcr_from_traces(&reference, &with_cr, &cr, v, cli.window)?;
                if a.beta.unphysical {
                    warnings.push("extracted beta is negative".into());
                }
                json!({
                    "mode": "slope",
                    "beta_m3_per_s": a.beta.value,
                    "beta_uncertainty": a.beta_uncertainty,
                    "unphysical": a.beta.unphysical,
                    "loading_rate": a.loading_rate,
                    "loading_rate_uncertainty": a.loading_rate_uncertainty,
                    "gamma_rb": a.gamma_rb,
                    "alpha": a.alpha,
                    "alpha_uncertainty": a.alpha_uncertainty,
                    "mean_factor": a.mean_factor,
                    "window_s": a.window,
                    "samples": a.samples,
                })
            } else {
                missing(&[
                    ("--alpha", alpha.is_some()),
                    ("--loading-rate", loading_rate.is_some()),
                    ("--factor", factor.is_some()),
                ])?;
                let a = flag_quantity(digest, "alpha", alpha, Dimension::AtomRate)?;
                let l = flag_quantity(digest, "loading_rate", loading_rate, Dimension::AtomRate)?;
                let f = flag_quantity(digest, "factor", factor, Dimension::Density)?;
                let b = extract_beta_rbcr(a, l, f)?;
                if b.unphysical {
                    warnings
                        .push("extracted beta is negative (alpha exceeds the loading rate)".into());
                }
                json!({
                    "mode": "slope",
                    "beta_m3_per_s": b.value,
                    "unphysical": b.unphysical,
                })
            };
            if mean_speed.is_some() {
                let v = flag_quantity(digest, "mean_speed", mean_speed, Dimension::Speed)?;
                let beta = out["beta_m3_per_s"].as_f64().unwrap_or(f64::NAN);
                out["inelastic_cross_section_m2"] = json!(inelastic_cross_section(beta, v)?);
            }
            out["systematic_relative_error"] = json!(BETA_SYSTEMATIC_RELATIVE_ERROR);
            Ok(out)
        }
        BetaMode::Bounds => {
            let rate_given = excess_rate.is_some();
            let mut needed = vec![
                ("--factor-min", factor_min.is_some()),
                ("--factor-max", factor_max.is_some()),
            ];
            if !rate_given {
                needed.extend([
                    ("--excess-rate or --without", without.is_some()),
                    ("--with", with.is_some()),
                    ("--gamma", gamma.is_some()),
                ]);
            }
            missing(&needed)?;
            let rate = if rate_given {
                flag_quantity(digest, "excess_rate", excess_rate, Dimension::AtomRate)?
            } else {
                let g = flag_quantity(digest, "gamma", gamma, Dimension::Rate)?;
                digest.add("window", format!("{from:e},{to:e}").as_bytes());
                let a = read_trace(without.as_ref().unwrap(), digest)?;
                let b = read_trace(with.as_ref().unwrap(), digest)?;
                excess_loss_rate(&a, &b, (*from, *to), g)?
            };
            if rate < 0.0 {
                warnings.push("excess loss rate is negative; traces are not separated".into());
            }
            let lo = flag_quantity(digest, "factor_min", factor_min, Dimension::Density)?;
            let hi = flag_quantity(digest, "factor_max", factor_max, Dimension::Density)?;
            let b = beta_crrb_bounds(rate.max(0.0), lo, hi)?;
            Ok(json!({
                "mode": "bounds",
                "excess_rate": rate,
                "beta_lower_m3_per_s": b.lower,
                "beta_upper_m3_per_s": b.upper,
                "unphysical": rate < 0.0,
                "systematic_relative_error": BETA_SYSTEMATIC_RELATIVE_ERROR,
            }))
        }
    }
}

fn flag_quantity(
    digest: &mut Digest,
    flag: &str,
    text: &Option<String>,
    dim: Dimension,
) -> Result<f64> {
    let text = text.as_deref().expect("presence checked");
    digest.add(flag, text.as_bytes());
    parse_quantity(text, dim)
}
