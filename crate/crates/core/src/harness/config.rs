//! Experiment configuration, as read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, GammaPolicy};
use crate::error::{Error, Result};
use crate::hamiltonian::{Beta, Hamiltonian};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Mean distance to the target after every interaction.
    Trajectory,
    /// Smallest `L` reaching the target accuracy.
    MinL,
    SweepBeta,
    SweepEpsilon,
    SweepGammaNoise,
    /// Analytic Markov-chain quantities only; no sampling.
    Markov,
    Plan,
    Validate,
    HaarCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Trajectory => "trajectory",
            ExperimentKind::MinL => "min_l",
            ExperimentKind::SweepBeta => "sweep_beta",
            ExperimentKind::SweepEpsilon => "sweep_epsilon",
            ExperimentKind::SweepGammaNoise => "sweep_gamma_noise",
            ExperimentKind::Markov => "markov",
            ExperimentKind::Plan => "plan",
            ExperimentKind::Validate => "validate",
            ExperimentKind::HaarCheck => "haar_check",
        }
    }

    fn needs_channel(self) -> bool {
        matches!(
            self,
            ExperimentKind::Trajectory
                | ExperimentKind::MinL
                | ExperimentKind::SweepBeta
                | ExperimentKind::SweepEpsilon
                | ExperimentKind::SweepGammaNoise
                | ExperimentKind::Markov
                | ExperimentKind::Plan
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Qubit { gap: f64 },
    Harmonic { dim: usize, gap: f64 },
    Diagonal { eigenvalues: Vec<f64> },
    /// A Hamiltonian JSON file; relative paths resolve against the config file.
    File { path: PathBuf },
}

impl SystemSpec {
    pub fn build(&self, base: Option<&Path>) -> Result<Hamiltonian> {
        match self {
            SystemSpec::Qubit { gap } => Hamiltonian::qubit(*gap),
            SystemSpec::Harmonic { dim, gap } => Hamiltonian::harmonic(*dim, *gap),
            SystemSpec::Diagonal { eigenvalues } => Hamiltonian::from_eigenvalues("diagonal", eigenvalues),
            SystemSpec::File { path } => {
                let p = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                Hamiltonian::load(p)
            }
        }
    }
}

/// How `γ` is chosen, possibly in terms of the system spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    Fixed { gamma: f64 },
    /// `γ = δ_min`, the smallest nonzero eigenvalue difference.
    LowestGap,
    UniformWindow { lo: f64, hi: f64 },
    /// Uniform on `[0, 4‖H‖]`.
    ZeroKnowledge,
    GaussianAt { mean: f64, sigma: f64 },
    /// Gaussian at `Tr(H)/dim` with width `‖H‖/2`.
    GaussianAtMeanEnergy,
    /// A random eigenvalue difference plus Gaussian noise of width `sigma`.
    Eigdiff { sigma: f64 },
    PerfectKnowledge,
}

impl GammaSpec {
    pub fn policy(&self, h: &Hamiltonian) -> Result<GammaPolicy> {
        let p = match self {
            GammaSpec::Fixed { gamma } => GammaPolicy::Fixed { gamma: *gamma },
            GammaSpec::LowestGap => GammaPolicy::Fixed { gamma: h.spectral_profile()?.delta_min },
            GammaSpec::UniformWindow { lo, hi } => GammaPolicy::UniformWindow { lo: *lo, hi: *hi },
            GammaSpec::ZeroKnowledge => GammaPolicy::zero_knowledge(h),
            GammaSpec::GaussianAt { mean, sigma } => GammaPolicy::GaussianAt { mean: *mean, sigma: *sigma },
            GammaSpec::GaussianAtMeanEnergy => GammaPolicy::gaussian_at_mean_energy(h),
            GammaSpec::Eigdiff { sigma } => GammaPolicy::eigdiff_samples(h, *sigma),
            GammaSpec::PerfectKnowledge => GammaPolicy::perfect_knowledge(h)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Required unless an ε-sweep scaling rule supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub beta: Beta,
    pub gamma: GammaSpec,
    #[serde(default = "one")]
    pub n_samples: usize,
}

/// `t = t_scale·dim/(δ_min·√ε)` and `α = c/t^power` for each ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonScaling {
    pub t_scale: f64,
    pub c: f64,
    #[serde(default = "three")]
    pub power: f64,
}

impl EpsilonScaling {
    pub fn t_for(&self, dim: usize, delta_min: f64, eps: f64) -> f64 {
        self.t_scale * dim as f64 / (delta_min * eps.sqrt())
    }

    pub fn alpha_for(&self, t: f64) -> f64 {
        self.c / t.powf(self.power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    MaximallyMixed,
    /// Eigenstate `index` of the Hamiltonian (0 is the ground state).
    Basis { index: usize },
    /// Populations in the eigenbasis.
    Populations { p: Vec<f64> },
    /// Gibbs state of the system at a different inverse temperature.
    Gibbs { beta: Beta },
}

impl InitialState {
    pub fn build(&self, h: &Hamiltonian) -> Result<DensityMatrix> {
        match self {
            InitialState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(h.dim())),
            InitialState::Basis { index } => {
                if *index >= h.dim() {
                    return Err(config_err("initial.index", format!("{index} out of range for dimension {}", h.dim())));
                }
                let p: Vec<f64> = (0..h.dim()).map(|k| if k == *index { 1.0 } else { 0.0 }).collect();
                h.state_from_populations(&p)
            }
            InitialState::Populations { p } => h.state_from_populations(p),
            InitialState::Gibbs { beta } => h.gibbs_state(*beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSetting {
    SingleQubit,
    Harmonic,
    ZeroKnowledge,
    PerfectKnowledge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub setting: PlanSetting,
    /// Half-width of the `γ` window (single qubit only).
    #[serde(default)]
    pub sigma: f64,
    /// Rescaled gap to plan with; computed from the system when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescaled_gap: Option<f64>,
    /// Factor applied to the planned number of interactions.
    #[serde(default = "unit")]
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSpec>,
    /// Target distance to the Gibbs state.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Trajectory length for `trajectory` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default = "default_l_max")]
    pub l_max: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Cap for automatic trial doubling; no escalation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_initial")]
    pub initial: InitialState,
    /// β values, ε values or γ-noise widths depending on `kind`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<EpsilonScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSpec>,
    /// Monte Carlo samples for the validate and haar_check suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn default_eps() -> f64 {
    0.05
}
fn default_l_max() -> u64 {
    1_000_000
}
fn default_trials() -> usize {
    100
}
fn default_initial() -> InitialState {
    InitialState::MaximallyMixed
}

pub(crate) fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Field-level checks that do not need the Hamiltonian.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name", "must be a nonempty file stem"));
        }
        if !(self.eps > 0.0) {
            return Err(config_err("eps", format!("must be positive, got {}", self.eps)));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if let Some(m) = self.max_trials {
            if m < self.trials {
                return Err(config_err("max_trials", "must be at least trials"));
            }
        }
        if self.kind.needs_channel() {
            let ch = self.channel.as_ref().ok_or_else(|| config_err("channel", "required for this kind"))?;
            if ch.n_samples == 0 {
                return Err(config_err("channel.n_samples", "must be at least 1"));
            }
            let scaled = matches!(self.kind, ExperimentKind::SweepEpsilon | ExperimentKind::Plan);
            if !scaled {
                match ch.alpha {
                    Some(a) if a.is_finite() && a >= 0.0 => {}
                    Some(a) => return Err(config_err("channel.alpha", format!("must be finite and nonnegative, got {a}"))),
                    None => return Err(config_err("channel.alpha", "required")),
                }
                match ch.t {
                    Some(t) if t.is_finite() && t > 0.0 => {}
                    Some(t) => return Err(config_err("channel.t", format!("must be positive, got {t}"))),
                    None => return Err(config_err("channel.t", "required")),
                }
            }
        }
        let sweep = matches!(
            self.kind,
            ExperimentKind::SweepBeta | ExperimentKind::SweepEpsilon | ExperimentKind::SweepGammaNoise
        );
        if sweep && self.grid.is_empty() {
            return Err(config_err("grid", "sweeps need a nonempty grid"));
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return Err(config_err("grid", "values must be finite"));
        }
        match self.kind {
            ExperimentKind::SweepBeta if self.grid.iter().any(|&b| b < 0.0) => {
                return Err(config_err("grid", "β values must be nonnegative"));
            }
            ExperimentKind::SweepEpsilon => {
                if self.grid.iter().any(|&e| e <= 0.0) {
                    return Err(config_err("grid", "ε values must be positive"));
                }
                if self.scaling.is_none() {
                    return Err(config_err("scaling", "required for sweep_epsilon"));
                }
            }
            ExperimentKind::SweepGammaNoise if self.grid.iter().any(|&s| s < 0.0) => {
                return Err(config_err("grid", "noise widths must be nonnegative"));
            }
            ExperimentKind::Trajectory if self.steps.is_none() => {
                return Err(config_err("steps", "required for trajectory runs"));
            }
            ExperimentKind::Plan if self.plan.is_none() => {
                return Err(config_err("plan", "required for plan runs"));
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn channel_spec(&self) -> Result<&ChannelSpec> {
        self.channel.as_ref().ok_or_else(|| config_err("channel", "required for this kind"))
    }

    /// Resolved channel parameters for the configured system.
    pub fn channel_params(&self, h: &Hamiltonian) -> Result<ChannelParams> {
        let ch = self.channel_spec()?;
        let alpha = ch.alpha.ok_or_else(|| config_err("channel.alpha", "required"))?;
        let t = ch.t.ok_or_else(|| config_err("channel.t", "required"))?;
        let p = ChannelParams::new(alpha, t, ch.beta, ch.gamma.policy(h)?)
            .with_samples(ch.n_samples)
            .with_seed(self.seed);
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn beta(&self) -> Result<Beta> {
        Ok(self.channel_spec()?.beta)
    }
}
