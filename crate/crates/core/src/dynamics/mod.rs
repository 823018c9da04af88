//! Forward models: closed-form one-body loading and decay, the coupled
//! Cr/Rb rate equations
//!
//! ```text
//! dN_Cr/dt = −γ_Cr N_Cr − β_CrRb · F
//! dN_Rb/dt = L_Rb − γ_Rb N_Rb − β_RbCr · F,     F = N_Cr N_Rb / V̄
//! ```
//!
//! and synthetic traces with seeded noise.

pub mod ode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{finite, invalid, non_negative, positive, Error, Result};
use crate::overlap::effective_volume;
use crate::trace::{DataTrace, ValueKind};
pub use ode::{SolverStats, Tolerances};

/// Default tolerances: 1e-9 relative, 1e-3 atoms absolute.
pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    rel: 1e-9,
    abs: 1e-3,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Cr,
    Rb,
}

impl Species {
    pub fn as_str(self) -> &'static str {
        match self {
            Species::Cr => "cr",
            Species::Rb => "rb",
        }
    }
}

/// Geometry entering the overlap factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapSpec {
    /// Fixed effective volume V̄ (m³).
    Volume(f64),
    /// MOT 1/√e radius σ̄ and MT 1/e length z (m), evaluated through `ς`.
    Geometry {
        mean_size: f64,
        one_over_e_length: f64,
    },
}

impl OverlapSpec {
    pub fn effective_volume(&self) -> Result<f64> {
        match *self {
            OverlapSpec::Volume(v) => positive("effective volume", v),
            OverlapSpec::Geometry {
                mean_size,
                one_over_e_length,
            } => effective_volume(mean_size, one_over_e_length),
        }
    }
}

/// How the interspecies term is evaluated during integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction {
    /// `F = N_Cr N_Rb / V̄` from the instantaneous atom numbers.
    Dynamic,
    /// `F` held at the given value (1/m³) for the whole run.
    ConstantFactor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSpeciesModel {
    /// Rb loading rate (atoms/s).
    pub loading_rate_rb: f64,
    /// Rb one-body loss rate (1/s).
    pub gamma_rb: f64,
    /// Cr one-body loss rate (1/s).
    pub gamma_cr: f64,
    /// Rb loss coefficient due to Cr (m³/s).
    pub beta_rbcr: f64,
    /// Cr loss coefficient due to Rb (m³/s).
    pub beta_crrb: f64,
    pub overlap: OverlapSpec,
    pub interaction: Interaction,
}

impl TwoSpeciesModel {
    pub fn validate(&self) -> Result<()> {
        non_negative("Rb loading rate", self.loading_rate_rb)?;
        non_negative("gamma_rb", self.gamma_rb)?;
        non_negative("gamma_cr", self.gamma_cr)?;
        non_negative("beta_rbcr", self.beta_rbcr)?;
        non_negative("beta_crrb", self.beta_crrb)?;
        self.overlap.effective_volume()?;
        if let Interaction::ConstantFactor(f) = self.interaction {
            non_negative("overlap factor", f)?;
        }
        Ok(())
    }

    /// Right-hand side for state `[N_Cr, N_Rb]`, given `1/V̄`.
    fn rates(&self, inv_volume: f64, state: &[f64; 2]) -> [f64; 2] {
        let [n_cr, n_rb] = *state;
        let factor = match self.interaction {
            Interaction::Dynamic => n_cr * n_rb * inv_volume,
            Interaction::ConstantFactor(f) => f,
        };
        [
            -self.gamma_cr * n_cr - self.beta_crrb * factor,
            self.loading_rate_rb - self.gamma_rb * n_rb - self.beta_rbcr * factor,
        ]
    }

    /// `[dN_Cr/dt, dN_Rb/dt]` at `state`.
    pub fn derivative(&self, state: [f64; 2]) -> Result<[f64; 2]> {
        let inv = 1.0 / self.overlap.effective_volume()?;
        Ok(self.rates(inv, &state))
    }
}

/// `N(t) = (L/γ)(1 − e^{−γt}) + N₀ e^{−γt}`, or `L·t + N₀` when `γ = 0`.
pub fn one_body_loading(loading_rate: f64, gamma: f64, n0: f64, t: f64) -> Result<f64> {
    let loading_rate = finite("loading rate", loading_rate)?;
    let gamma = non_negative("loss rate", gamma)?;
    let n0 = finite("initial atom number", n0)?;
    if t.is_nan() || t < 0.0 {
        return Err(invalid("time", format!("{t} is not a non-negative time")));
    }
    if gamma == 0.0 {
        return Ok(loading_rate * t + n0);
    }
    if t.is_infinite() {
        return Ok(loading_rate / gamma);
    }
    let decay = (-gamma * t).exp();
    // −expm1 keeps (1 − e^{−γt}) accurate for small γt
    Ok(loading_rate / gamma * -(-gamma * t).exp_m1() + n0 * decay)
}

/// `N(t) = N₀ e^{−γt}`.
pub fn one_body_decay(gamma: f64, n0: f64, t: f64) -> Result<f64> {
    let gamma = non_negative("loss rate", gamma)?;
    let n0 = finite("initial atom number", n0)?;
    let t = non_negative("time", t)?;
    Ok(n0 * (-gamma * t).exp())
}

/// Integrated atom numbers with the dense output needed to resample them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub n_cr: Vec<f64>,
    pub n_rb: Vec<f64>,
    pub tolerances: Tolerances,
    pub stats: SolverStats,
    /// Time at which a population hit zero and integration stopped.
    pub terminated_at: Option<f64>,
    steps: Vec<ode::DenseStep<2>>,
}

impl Trajectory {
    pub fn species(&self, species: Species) -> &[f64] {
        match species {
            Species::Cr => &self.n_cr,
            Species::Rb => &self.n_rb,
        }
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// `[N_Cr, N_Rb]` at any `t` inside the integrated span.
    pub fn state_at(&self, t: f64) -> Result<[f64; 2]> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(invalid(
                "time",
                format!("{t} s is outside [{}, {}]", self.start(), self.end()),
            ));
        }
        let idx = self.times.partition_point(|&x| x < t);
        if idx < self.times.len() && self.times[idx] == t {
            return Ok([self.n_cr[idx], self.n_rb[idx]]);
        }
        let step = &self.steps[idx - 1];
        let y = step.eval(t);
        Ok([y[0].max(0.0), y[1].max(0.0)])
    }

    /// Noise-free samples of one species at `sample_rate`, starting at the
    /// first time.
    pub fn sample(&self, species: Species, sample_rate: f64) -> Result<DataTrace> {
        synthesize_trace(self, species, &NoiseSpec::default(), sample_rate)
    }
}

/// Integrates the coupled equations over `t_span` from `[N_Cr₀, N_Rb₀]`.
pub fn integrate_coupled(
    model: &TwoSpeciesModel,
    n_cr0: f64,
    n_rb0: f64,
    t_span: (f64, f64),
    tolerances: Tolerances,
) -> Result<Trajectory> {
    model.validate()?;
    non_negative("initial Cr atom number", n_cr0)?;
    non_negative("initial Rb atom number", n_rb0)?;
    for (name, tol) in [("rel_tol", tolerances.rel), ("abs_tol", tolerances.abs)] {
        if !(tol > 0.0 && tol <= 1e-3) {
            return Err(invalid(name, format!("{tol} is outside (0, 1e-3]")));
        }
    }
    finite("start time", t_span.0)?;
    finite("end time", t_span.1)?;
    let inv_volume = 1.0 / model.overlap.effective_volume()?;
    let sol = ode::integrate(
        |_, y| model.rates(inv_volume, y),
        t_span.0,
        [n_cr0, n_rb0],
        t_span.1,
        tolerances,
        true,
    )?;
    Ok(Trajectory {
        n_cr: sol.states.iter().map(|s| s[0]).collect(),
        n_rb: sol.states.iter().map(|s| s[1]).collect(),
        times: sol.times,
        tolerances,
        stats: sol.stats,
        terminated_at: sol.terminated.map(|(t, _)| t),
        steps: sol.steps,
    })
}

/// Noise applied when turning a trajectory into a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the multiplicative factor.
    pub relative_sigma: f64,
    /// Standard deviation of the additive term (atoms, or K for temperatures).
    pub additive_sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        non_negative("relative sigma", self.relative_sigma)?;
        non_negative("additive sigma", self.additive_sigma)?;
        Ok(())
    }

    /// `v·(1 + ε₁·σ_rel) + ε₂·σ_add` for each value, one pair of standard
    /// normal draws per point in order. Also returns the per-point model
    /// sigma when it is positive everywhere.
    pub fn apply(&self, values: &[f64]) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        self.validate()?;
        if self.relative_sigma == 0.0 && self.additive_sigma == 0.0 {
            return Ok((values.to_vec(), None));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noisy = values
            .iter()
            .map(|&v| {
                let e1: f64 = StandardNormal.sample(&mut rng);
                let e2: f64 = StandardNormal.sample(&mut rng);
                v * (1.0 + self.relative_sigma * e1) + self.additive_sigma * e2
            })
            .collect();
        let sigma: Vec<f64> = values
            .iter()
            .map(|&v| (self.relative_sigma * v).hypot(self.additive_sigma))
            .collect();
        let sigma = sigma.iter().all(|&s| s > 0.0).then_some(sigma);
        Ok((noisy, sigma))
    }
}

/// Uniform sample times `t0 + k/rate` up to and including `t1`.
pub fn uniform_times(t0: f64, t1: f64, sample_rate: f64) -> Result<Vec<f64>> {
    let rate = positive("sample rate", sample_rate)?;
    let n = ((t1 - t0) * rate * (1.0 + 1e-12)).floor() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 / rate).collect())
}

/// Resamples one species at `sample_rate` and applies `noise`.
pub fn synthesize_trace(
    trajectory: &Trajectory,
    species: Species,
    noise: &NoiseSpec,
    sample_rate: f64,
) -> Result<DataTrace> {
    let times = uniform_times(trajectory.start(), trajectory.end(), sample_rate)?;
    let index = match species {
        Species::Cr => 0,
        Species::Rb => 1,
    };
    let clean = times
        .iter()
        .map(|&t| trajectory.state_at(t).map(|s| s[index]))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = noisy_trace(times, &clean, ValueKind::AtomNumber, noise)?;
    trace
        .metadata
        .insert("species".into(), species.as_str().into());
    Ok(trace)
}

/// Builds a trace of `values` at `times` with `noise` applied.
pub fn noisy_trace(
    times: Vec<f64>,
    values: &[f64],
    kind: ValueKind,
    noise: &NoiseSpec,
) -> Result<DataTrace> {
    let (noisy, sigma) = noise.apply(values)?;
    let mut trace = DataTrace::new(times, noisy, kind)?;
    trace.sigma = sigma;
    trace.validate()?;
    if noise.relative_sigma > 0.0 || noise.additive_sigma > 0.0 {
        trace.metadata.insert("seed".into(), noise.seed.to_string());
        trace.metadata.insert(
            "relative_sigma".into(),
            format!("{:e}", noise.relative_sigma),
        );
        trace.metadata.insert(
            "additive_sigma".into(),
            format!("{:e}", noise.additive_sigma),
        );
    }
    Ok(trace)
}

/// How the early part of a trace is modelled when estimating its slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeModel {
    /// `a + b·t + c·t²`; the slope is `b`.
    Quadratic,
    /// `N₀ e^{−γt} + α (1 − e^{−γt})/γ` with known `γ`, the solution of
    /// `dN/dt = α − γN` with constant effective loading rate `α`.
    OneBody { gamma: f64 },
}

/// Early-time slope estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    /// dN/dt at the first sample (atoms/s).
    pub slope: f64,
    /// Standard error of `slope`.
    pub uncertainty: f64,
    /// Effective loading rate `α` (only for [`SlopeModel::OneBody`]).
    pub loading_rate: Option<f64>,
    pub loading_rate_uncertainty: Option<f64>,
    pub samples: usize,
}

/// Slope at the start of `trace`, from a weighted linear least-squares fit of
/// `model` to the points within `window` seconds of the first sample.
pub fn initial_slope(trace: &DataTrace, window: f64, model: SlopeModel) -> Result<SlopeEstimate> {
    let window = positive("window", window)?;
    let t0 = *trace
        .times
        .first()
        .ok_or(Error::TooFewSamples { needed: 4, got: 0 })?;
    let n = trace.times.partition_point(|&t| t <= t0 + window);
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let times: Vec<f64> = trace.times[..n].iter().map(|t| t - t0).collect();
    let values = &trace.values[..n];
    let weights: Vec<f64> = match &trace.sigma {
        Some(s) => s[..n].iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };

    match model {
        SlopeModel::Quadratic => {
            let fit = crate::estimation::linear_least_squares(
                &times,
                values,
                &weights,
                trace.sigma.is_some(),
                &[&|_| 1.0, &|t| t, &|t| t * t],
            )?;
            Ok(SlopeEstimate {
                slope: fit.coefficients[1],
                uncertainty: fit.standard_errors[1],
                loading_rate: None,
                loading_rate_uncertainty: None,
                samples: n,
            })
        }
        SlopeModel::OneBody { gamma } => {
            let gamma = non_negative("gamma", gamma)?;
            let decay = move |t: f64| (-gamma * t).exp();
            let fill = move |t: f64| {
                if gamma == 0.0 {
                    t
                } else {
                    -(-gamma * t).exp_m1() / gamma
                }
            };
            let fit = crate::estimation::linear_least_squares(
                &times,
                values,
                &weights,
                trace.sigma.is_some(),
                &[&decay, &fill],
            )?;
            let (n0, alpha) = (fit.coefficients[0], fit.coefficients[1]);
            // dN/dt(0) = α − γN₀
            let var = fit.covariance[(1, 1)] + gamma * gamma * fit.covariance[(0, 0)]
                - 2.0 * gamma * fit.covariance[(0, 1)];
            Ok(SlopeEstimate {
                slope: alpha - gamma * n0,
                uncertainty: var.max(0.0).sqrt(),
                loading_rate: Some(alpha),
                loading_rate_uncertainty: Some(fit.standard_errors[1]),
                samples: n,
            })
        }
    }
}
