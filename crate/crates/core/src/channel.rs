//! Monte Carlo simulation of the thermalizing channel
//! `Φ(ρ) = Tr_E E_G[e^{i(H+αG)t} (ρ ⊗ ρ_E) e^{-i(H+αG)t}]`.
//!
//! Randomness is keyed: sample `s` of interaction `k` in trial `r` draws from
//! `rng::stream(seed, [r, k, s])`, first the ancilla gap and then `G`. Results
//! therefore do not depend on thread count or evaluation order, and a
//! trajectory of length `L` is a prefix of every longer one.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::haar::{sample_interaction, RandomInteraction};
use crate::hamiltonian::{Beta, EnvQubit, Hamiltonian};
use crate::operator::{self, CMatrix, C64};
use crate::rng;
use crate::state::{trace_distance, DensityMatrix};
use crate::stats::{MatrixStats, RunningStats};
use crate::weak_coupling::{alpha_tilde_sq, ExpectationMode};

/// Distribution of the ancilla gap `γ`, drawn fresh for every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaPolicy {
    Fixed { gamma: f64 },
    UniformWindow { lo: f64, hi: f64 },
    /// Normal draws; negative values are redrawn.
    GaussianAt { mean: f64, sigma: f64 },
    /// A uniformly chosen entry of `differences` plus normal noise of width
    /// `sigma`; negative values are redrawn.
    EigdiffSamples { differences: Vec<f64>, sigma: f64 },
    /// `gaps[k]` with probability proportional to `weights[k]`.
    PerfectKnowledge { gaps: Vec<f64>, weights: Vec<f64> },
}

const MAX_REDRAWS: usize = 10_000;

impl GammaPolicy {
    /// Uniform on `[0, 4‖H‖]`.
    pub fn zero_knowledge(h: &Hamiltonian) -> Self {
        GammaPolicy::UniformWindow { lo: 0.0, hi: 4.0 * h.spectral_norm() }
    }

    /// Normal around `Tr(H)/dim` with width `‖H‖/2`.
    pub fn gaussian_at_mean_energy(h: &Hamiltonian) -> Self {
        GammaPolicy::GaussianAt { mean: h.trace() / h.dim() as f64, sigma: h.spectral_norm() / 2.0 }
    }

    /// `|λ_i - λ_j|` for a uniform pair `i < j`, plus noise.
    pub fn eigdiff_samples(h: &Hamiltonian, sigma: f64) -> Self {
        let ev = h.eigenvalues();
        let mut differences = Vec::new();
        for i in 0..ev.len() {
            for j in 0..i {
                differences.push(ev[i] - ev[j]);
            }
        }
        GammaPolicy::EigdiffSamples { differences, sigma }
    }

    /// Each distinct difference with probability `η/C(dim,2)`.
    pub fn perfect_knowledge(h: &Hamiltonian) -> Result<Self> {
        let p = h.spectral_profile()?;
        let (gaps, weights) = p.gap_multiplicities().map(|(g, m)| (g, m as f64)).unzip();
        Ok(GammaPolicy::PerfectKnowledge { gaps, weights })
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match self {
            GammaPolicy::Fixed { gamma } if !finite_nonneg(*gamma) => Err(invalid(format!("fixed gamma must be >= 0, got {gamma}"))),
            GammaPolicy::UniformWindow { lo, hi } if !(finite_nonneg(*lo) && hi.is_finite() && hi > lo) => {
                Err(invalid(format!("uniform window needs 0 <= lo < hi, got [{lo}, {hi}]")))
            }
            GammaPolicy::GaussianAt { mean, sigma } if !(mean.is_finite() && finite_nonneg(*sigma)) || (*sigma == 0.0 && *mean < 0.0) => {
                Err(invalid(format!("gaussian gamma needs finite mean and sigma >= 0, got ({mean}, {sigma})")))
            }
            GammaPolicy::EigdiffSamples { differences, sigma }
                if differences.is_empty() || !finite_nonneg(*sigma) || differences.iter().any(|d| !finite_nonneg(*d)) =>
            {
                Err(invalid("eigdiff policy needs nonnegative differences and sigma >= 0"))
            }
            GammaPolicy::PerfectKnowledge { gaps, weights }
                if gaps.is_empty()
                    || gaps.len() != weights.len()
                    || gaps.iter().any(|g| !finite_nonneg(*g))
                    || weights.iter().any(|w| !finite_nonneg(*w))
                    || weights.iter().sum::<f64>() <= 0.0 =>
            {
                Err(invalid("perfect-knowledge policy needs matching nonnegative gaps and weights"))
            }
            _ => Ok(()),
        }
    }

    fn redraw_nonnegative<R: Rng + ?Sized>(rng: &mut R, mut draw: impl FnMut(&mut R) -> f64) -> Result<f64> {
        for _ in 0..MAX_REDRAWS {
            let g = draw(rng);
            if g >= 0.0 {
                return Ok(g);
            }
        }
        Err(Error::Numerical("gamma distribution has almost no mass on gamma >= 0".into()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            GammaPolicy::Fixed { gamma } => Ok(*gamma),
            GammaPolicy::UniformWindow { lo, hi } => Ok(lo + (hi - lo) * rng.random::<f64>()),
            GammaPolicy::GaussianAt { mean, sigma } => Self::redraw_nonnegative(rng, |r| {
                let z: f64 = r.sample(StandardNormal);
                mean + sigma * z
            }),
            GammaPolicy::EigdiffSamples { differences, sigma } => Self::redraw_nonnegative(rng, |r| {
                let d = differences[r.random_range(0..differences.len())];
                let z: f64 = r.sample(StandardNormal);
                d + sigma * z
            }),
            GammaPolicy::PerfectKnowledge { gaps, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (g, w) in gaps.iter().zip(weights) {
                    if u < *w {
                        return Ok(*g);
                    }
                    u -= w;
                }
                Ok(*gaps.last().expect("validated nonempty"))
            }
        }
    }

    /// Matching averaging mode for the weak-coupling model, when one exists
    /// in closed form.
    pub fn expectation_mode(&self) -> Option<ExpectationMode> {
        match self {
            GammaPolicy::Fixed { gamma } => Some(ExpectationMode::EmpiricalSamples { gammas: vec![*gamma] }),
            GammaPolicy::UniformWindow { lo, hi } => Some(ExpectationMode::UniformWindow { lo: *lo, hi: *hi }),
            GammaPolicy::PerfectKnowledge { .. } => Some(ExpectationMode::PerfectKnowledge),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GammaPolicy::Fixed { gamma } => format!("fixed({gamma})"),
            GammaPolicy::UniformWindow { lo, hi } => format!("uniform[{lo},{hi}]"),
            GammaPolicy::GaussianAt { mean, sigma } => format!("gaussian({mean},{sigma})"),
            GammaPolicy::EigdiffSamples { sigma, .. } => format!("eigdiff(sigma={sigma})"),
            GammaPolicy::PerfectKnowledge { .. } => "perfect_knowledge".into(),
        }
    }
}

/// Everything needed to apply the channel once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub alpha: f64,
    pub t: f64,
    pub beta: Beta,
    pub gamma: GammaPolicy,
    pub n_samples: usize,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(alpha: f64, t: f64, beta: Beta, gamma: GammaPolicy) -> Self {
        Self { alpha, t, beta, gamma, n_samples: 1, seed: 0 }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(invalid(format!("t must be positive, got {}", self.t)));
        }
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be >= 1"));
        }
        self.gamma.validate()
    }

    pub fn alpha_tilde_sq(&self, dim_s: usize) -> f64 {
        alpha_tilde_sq(self.alpha, self.t, dim_s)
    }
}

/// `H_S ⊗ I + I ⊗ diag(0, γ)` with system-major indices.
fn joint_hamiltonian(hs: &CMatrix, gamma: f64) -> CMatrix {
    let n = hs.nrows();
    let mut h = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            h[(2 * i, 2 * k)] = hs[(i, k)];
            h[(2 * i + 1, 2 * k + 1)] = hs[(i, k)];
        }
        h[(2 * i + 1, 2 * i + 1)] += C64::new(gamma, 0.0);
    }
    h
}

fn apply_fixed(hs: &CMatrix, rho: &CMatrix, g: &CMatrix, alpha: f64, t: f64, env: &EnvQubit) -> Result<CMatrix> {
    let n = hs.nrows();
    let mut h = joint_hamiltonian(hs, env.gamma);
    if alpha != 0.0 {
        h += g.scale(alpha);
    }
    let u = operator::evolve(&h, t)?;
    let mut joint = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            joint[(2 * i, 2 * k)] = rho[(i, k)] * env.q0;
            joint[(2 * i + 1, 2 * k + 1)] = rho[(i, k)] * env.q1;
        }
    }
    let out = &u * joint * u.adjoint();
    operator::partial_trace_env(&out, 2)
}

/// `Tr_E[e^{i(H+αG)t}(ρ ⊗ ρ_E)e^{-i(H+αG)t}]` for one interaction `G`.
pub fn apply_fixed_interaction(
    h: &Hamiltonian,
    rho: &DensityMatrix,
    g: &RandomInteraction,
    alpha: f64,
    t: f64,
    env: &EnvQubit,
) -> Result<DensityMatrix> {
    let n = h.dim();
    if rho.dim() != n || g.dim() != 2 * n {
        return Err(Error::Dimension(format!(
            "system dim {n}, state dim {}, interaction dim {} (expected {})",
            rho.dim(),
            g.dim(),
            2 * n
        )));
    }
    let out = apply_fixed(&h.matrix(), rho.matrix(), &g.matrix(), alpha, t, env)?;
    DensityMatrix::from_matrix_unchecked(out)
}

/// Channel bound to a Hamiltonian and parameters.
#[derive(Debug, Clone)]
pub struct Channel {
    hs: CMatrix,
    params: ChannelParams,
}

impl Channel {
    pub fn new(h: &Hamiltonian, params: ChannelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { hs: h.matrix(), params })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.hs.nrows()
    }

    fn sample_output(&self, rho: &CMatrix, trial: u64, step: u64, sample: u64) -> Result<CMatrix> {
        let mut r = rng::stream(self.params.seed, &[trial, step, sample]);
        let gamma = self.params.gamma.sample(&mut r)?;
        let env = EnvQubit::new(gamma, self.params.beta)?;
        let g = sample_interaction(2 * self.dim(), &mut r).matrix();
        apply_fixed(&self.hs, rho, &g, self.params.alpha, self.params.t, &env)
    }

    fn sample_outputs(&self, rho: &CMatrix, trial: u64, step: u64) -> Result<Vec<CMatrix>> {
        let n = self.params.n_samples as u64;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if n >= 32 {
                return (0..n).into_par_iter().map(|s| self.sample_output(rho, trial, step, s)).collect();
            }
        }
        (0..n).map(|s| self.sample_output(rho, trial, step, s)).collect()
    }

    /// One application of the Monte Carlo channel: the mean over
    /// `n_samples` interactions, for interaction `step` of trajectory `trial`.
    pub fn apply(&self, rho: &DensityMatrix, trial: u64, step: u64) -> Result<DensityMatrix> {
        self.check_dim(rho)?;
        let outs = self.sample_outputs(rho.matrix(), trial, step)?;
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        for o in &outs {
            acc += o;
        }
        DensityMatrix::from_matrix_unchecked(acc.unscale(outs.len() as f64))
    }

    /// Like [`Channel::apply`], also returning the entrywise standard error.
    pub fn apply_with_stderr(&self, rho: &DensityMatrix, trial: u64, step: u64) -> Result<(DensityMatrix, DMatrix<f64>)> {
        self.check_dim(rho)?;
        let outs = self.sample_outputs(rho.matrix(), trial, step)?;
        let mut stats = MatrixStats::new(self.dim(), self.dim());
        for o in &outs {
            stats.push(o);
        }
        let se = stats.std_error();
        Ok((DensityMatrix::from_matrix_unchecked(stats.into_mean())?, se))
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::Dimension(format!("state dim {} for a dim-{} channel", rho.dim(), self.dim())));
        }
        Ok(())
    }

    /// `L` successive applications, recording the distance to `target` after each.
    pub fn iterate(&self, rho0: &DensityMatrix, steps: u64, target: &DensityMatrix, trial: u64) -> Result<Trajectory> {
        let mut rho = rho0.clone();
        let mut distances = Vec::with_capacity(steps as usize + 1);
        distances.push(trace_distance(&rho, target)?);
        for k in 0..steps {
            rho = self.apply(&rho, trial, k)?;
            distances.push(trace_distance(&rho, target)?);
        }
        Ok(Trajectory { distances, final_state: rho, steps, seed: self.params.seed, trial })
    }
}

/// Mean over `n_samples` Monte Carlo interactions (interaction 0 of trial 0).
pub fn apply_channel(h: &Hamiltonian, rho: &DensityMatrix, params: &ChannelParams) -> Result<DensityMatrix> {
    Channel::new(h, params.clone())?.apply(rho, 0, 0)
}

/// Trajectory of `steps` interactions for trial `trial`.
pub fn iterate_channel(
    h: &Hamiltonian,
    rho0: &DensityMatrix,
    params: &ChannelParams,
    steps: u64,
    target: &DensityMatrix,
    trial: u64,
) -> Result<Trajectory> {
    Channel::new(h, params.clone())?.iterate(rho0, steps, target, trial)
}

/// Distances along one trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `distances[k]` is the distance after `k` interactions (length `steps + 1`).
    pub distances: Vec<f64>,
    pub final_state: DensityMatrix,
    pub steps: u64,
    pub seed: u64,
    pub trial: u64,
}

/// A set of independent trajectories extended lazily; distances at every
/// step are cached so any `L` up to the current horizon is free to query.
pub struct Ensemble {
    channel: Channel,
    rho0: DensityMatrix,
    target: DensityMatrix,
    states: Vec<DensityMatrix>,
    distances: Vec<Vec<f64>>,
    horizon: u64,
}

impl Ensemble {
    pub fn new(h: &Hamiltonian, params: ChannelParams, rho0: &DensityMatrix, target: &DensityMatrix, trials: usize) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("need at least one trial"));
        }
        if rho0.dim() != h.dim() || target.dim() != h.dim() {
            return Err(Error::Dimension("initial and target states must match the system".into()));
        }
        let channel = Channel::new(h, params)?;
        let d0 = trace_distance(rho0, target)?;
        Ok(Self {
            channel,
            rho0: rho0.clone(),
            target: target.clone(),
            states: vec![rho0.clone(); trials],
            distances: vec![vec![d0]; trials],
            horizon: 0,
        })
    }

    pub fn trials(&self) -> usize {
        self.states.len()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    fn advance(channel: &Channel, target: &DensityMatrix, trial: u64, state: &mut DensityMatrix, dist: &mut Vec<f64>, to: u64) -> Result<()> {
        let from = dist.len() as u64 - 1;
        for k in from..to {
            *state = channel.apply(state, trial, k)?;
            dist.push(trace_distance(state, target)?);
        }
        Ok(())
    }

    /// Runs every trajectory out to `steps` interactions.
    pub fn extend_to(&mut self, steps: u64) -> Result<()> {
        if steps <= self.horizon {
            return Ok(());
        }
        let channel = &self.channel;
        let target = &self.target;
        let work = self.states.iter_mut().zip(self.distances.iter_mut()).enumerate();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let jobs: Vec<_> = work.collect();
            jobs.into_par_iter()
                .map(|(r, (s, d))| Self::advance(channel, target, r as u64, s, d, steps))
                .collect::<Result<Vec<()>>>()?;
        }
        #[cfg(not(feature = "parallel"))]
        for (r, (s, d)) in work {
            Self::advance(channel, target, r as u64, s, d, steps)?;
        }
        self.horizon = steps;
        Ok(())
    }

    /// Adds trajectories (with fresh trial indices) up to the current horizon.
    pub fn add_trials(&mut self, extra: usize) -> Result<()> {
        let d0 = self.distances[0][0];
        for _ in 0..extra {
            self.states.push(self.rho0.clone());
            self.distances.push(vec![d0]);
        }
        let h = self.horizon;
        self.horizon = 0;
        // trajectories already at `h` are skipped by `advance`
        self.extend_to(h)
    }

    /// Final distances of every trial after `steps` interactions.
    pub fn distances_at(&mut self, steps: u64) -> Result<Vec<f64>> {
        self.extend_to(steps)?;
        Ok(self.distances.iter().map(|d| d[steps as usize]).collect())
    }

    pub fn stats_at(&mut self, steps: u64) -> Result<RunningStats> {
        Ok(self.distances_at(steps)?.into_iter().collect())
    }

    pub fn mean_at(&mut self, steps: u64) -> Result<f64> {
        Ok(self.stats_at(steps)?.mean())
    }

    /// Mean distance at each cached step `0..=horizon`.
    pub fn mean_curve(&self) -> Vec<f64> {
        let n = self.trials() as f64;
        (0..=self.horizon as usize).map(|k| self.distances.iter().map(|d| d[k]).sum::<f64>() / n).collect()
    }

    pub fn final_states(&self) -> &[DensityMatrix] {
        &self.states
    }
}

/// Result of a minimal-`L` search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinLResult {
    /// Smallest `L` with mean distance below `ε`; `None` when not reached by `L_max`.
    pub steps: Option<u64>,
    /// Mean distance at `steps` (or at `L_max` when not reached).
    pub mean_distance: f64,
    pub std_error: f64,
    /// `(L, mean distance)` at every point the binary search probed.
    pub probes: Vec<(u64, f64)>,
    /// Whether the binary search and a linear scan of the cached curve agree.
    pub monotone: bool,
    pub trials: usize,
}

/// Binary search for the smallest `L` whose mean distance is below `eps`.
pub fn search_min_steps(ens: &mut Ensemble, eps: f64, l_max: u64) -> Result<MinLResult> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let mut probes = Vec::new();
    let mut probe = |ens: &mut Ensemble, l: u64| -> Result<f64> {
        let m = ens.mean_at(l)?;
        probes.push((l, m));
        Ok(m)
    };
    let finish = |ens: &mut Ensemble, steps: Option<u64>, at: u64, probes: Vec<(u64, f64)>, monotone: bool| -> Result<MinLResult> {
        let s = ens.stats_at(at)?;
        Ok(MinLResult { steps, mean_distance: s.mean(), std_error: s.std_error(), probes, monotone, trials: ens.trials() })
    };

    if probe(ens, 0)? < eps {
        return finish(ens, Some(0), 0, probes, true);
    }
    let mut lo = 0u64;
    let mut hi = 1u64.min(l_max);
    loop {
        if hi == 0 || hi <= lo {
            return finish(ens, None, l_max, probes, true);
        }
        if probe(ens, hi)? < eps {
            break;
        }
        if hi >= l_max {
            return finish(ens, None, l_max, probes, true);
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(l_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(ens, mid)? < eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Bracket re-check against a linear scan of the cached curve.
    let curve = ens.mean_curve();
    let first = curve.iter().position(|&m| m < eps).map(|k| k as u64).expect("hi is below eps");
    let monotone = first == hi && curve[lo as usize] >= eps;
    finish(ens, Some(first), first, probes, monotone)
}

/// Smallest `L ≤ L_max` whose mean final distance over `trials` trajectories is below `eps`.
pub fn min_interactions(
    h: &Hamiltonian,
    rho0: &DensityMatrix,
    params: &ChannelParams,
    target: &DensityMatrix,
    eps: f64,
    l_max: u64,
    trials: usize,
) -> Result<MinLResult> {
    let mut ens = Ensemble::new(h, params.clone(), rho0, target, trials)?;
    search_min_steps(&mut ens, eps, l_max)
}

/// Smallest `L` found by scanning every step (reference for the search).
pub fn min_interactions_linear(ens: &mut Ensemble, eps: f64, l_max: u64) -> Result<Option<u64>> {
    for l in 0..=l_max {
        if ens.mean_at(l)? < eps {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
