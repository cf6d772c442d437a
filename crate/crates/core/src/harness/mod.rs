//! Experiment runner: configuration in, CSV records and run metadata out.
//!
//! Every sampled row carries its own seed and a JSON config that re-runs
//! exactly that row as a `min_l` experiment. Wall-clock times go to the
//! metadata file only, so the CSV bytes depend on nothing but the config.

pub mod config;
pub mod fit;
pub mod output;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{
    ChannelSpec, EpsilonScaling, ExperimentConfig, ExperimentKind, GammaSpec, InitialState, PlanSetting, PlanSpec,
    SystemSpec,
};
pub use fit::{fit_power_law, PowerLawFit};
pub use output::{Records, RunMeta};
pub use suites::CheckRow;

use crate::channel::{search_min_steps, ChannelParams, Ensemble, MinLResult};
use crate::error::Result;
use crate::hamiltonian::{Beta, Hamiltonian};
use crate::planner::{self, Plan};
use crate::rng;
use crate::state::DensityMatrix;
use crate::weak_coupling as wc;
use config::config_err;
use output::{num, opt_int, opt_num, Checkpoint};

/// Result of running an experiment in memory.
#[derive(Debug, Clone)]
pub struct Report {
    pub records: Records,
    pub summary: serde_json::Value,
    /// False when any check failed or a sanity invariant was violated.
    pub passed: bool,
    pub row_seconds: Vec<f64>,
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub report: Report,
}

/// Options that do not change the results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for resumable per-row progress; none disables checkpointing.
    pub checkpoint_dir: Option<PathBuf>,
    /// Directory that relative system file paths resolve against.
    pub base_dir: Option<PathBuf>,
}

/// Runs an experiment and writes `<name>.csv` and `<name>.meta.json` to `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, base_dir: Option<&Path>) -> Result<RunOutput> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let opts = RunOptions { checkpoint_dir: Some(out_dir.to_path_buf()), base_dir: base_dir.map(Path::to_path_buf) };
    let report = execute(cfg, &opts)?;
    let csv = output::csv_path(out_dir, &cfg.name);
    let meta = output::meta_path(out_dir, &cfg.name);
    std::fs::write(&csv, report.records.to_csv()?)?;
    let m = RunMeta {
        schema: output::SCHEMA.into(),
        version: output::SCHEMA_VERSION,
        kind: cfg.kind.name().into(),
        name: cfg.name.clone(),
        columns: report.records.columns.clone(),
        rows: report.records.rows.len(),
        config: serde_json::to_value(cfg)?,
        summary: report.summary.clone(),
        passed: report.passed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        row_seconds: report.row_seconds.clone(),
        threads: thread_count(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
    };
    std::fs::write(&meta, serde_json::to_string_pretty(&m)?)?;
    if let Some(dir) = &opts.checkpoint_dir {
        let p = output::checkpoint_path(dir, &cfg.name);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }
    Ok(RunOutput { csv, meta, report })
}

fn thread_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs an experiment without writing the CSV or metadata.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    cfg.validate()?;
    let h = cfg.system.build(opts.base_dir.as_deref())?;
    match cfg.kind {
        ExperimentKind::Trajectory => trajectory(cfg, &h),
        ExperimentKind::MinL => grid_search(cfg, &h, opts, GridAxis::Single),
        ExperimentKind::SweepBeta => grid_search(cfg, &h, opts, GridAxis::Beta),
        ExperimentKind::SweepEpsilon => grid_search(cfg, &h, opts, GridAxis::Epsilon),
        ExperimentKind::SweepGammaNoise => grid_search(cfg, &h, opts, GridAxis::GammaNoise),
        ExperimentKind::Markov => markov(cfg, &h),
        ExperimentKind::Plan => plan(cfg, &h),
        ExperimentKind::Validate => validate(cfg, &h),
        ExperimentKind::HaarCheck => haar_check(cfg),
    }
}

/// Minimal-`L` search with the variance rule: while the sample variance of
/// the distance at `L` is not below a tenth of its mean, the trial count
/// doubles (up to `max_trials`) and the search is repeated.
pub fn search_with_escalation(ens: &mut Ensemble, eps: f64, l_max: u64, max_trials: Option<usize>) -> Result<MinLResult> {
    let mut r = search_min_steps(ens, eps, l_max)?;
    let Some(cap) = max_trials else { return Ok(r) };
    while let Some(l) = r.steps {
        let s = ens.stats_at(l)?;
        if s.variance() < s.mean() / 10.0 || ens.trials() >= cap {
            break;
        }
        let extra = ens.trials().min(cap - ens.trials());
        ens.add_trials(extra)?;
        r = search_min_steps(ens, eps, l_max)?;
    }
    Ok(r)
}

pub const SEARCH_COLUMNS: &[&str] = &[
    "index",
    "grid_value",
    "seed",
    "beta",
    "eps",
    "alpha",
    "t",
    "alpha_tilde_sq",
    "gamma",
    "n_samples",
    "trials",
    "steps",
    "lt",
    "reached",
    "mean_distance",
    "std_error",
    "variance",
    "monotone",
    "absolute_gap",
    "rescaled_gap",
    "gap_scale",
    "jerison_steps",
    "config",
];

#[derive(Clone, Copy, PartialEq)]
enum GridAxis {
    Single,
    Beta,
    Epsilon,
    GammaNoise,
}

/// Configuration of one grid point, as a standalone `min_l` run.
fn point_config(cfg: &ExperimentConfig, h: &Hamiltonian, axis: GridAxis, index: usize, value: f64) -> Result<ExperimentConfig> {
    let base = cfg.channel_spec()?;
    let mut ch = base.clone();
    let mut eps = cfg.eps;
    match axis {
        GridAxis::Single => {}
        GridAxis::Beta => ch.beta = Beta::new(value)?,
        GridAxis::Epsilon => {
            let s = cfg.scaling.as_ref().ok_or_else(|| config_err("scaling", "required for sweep_epsilon"))?;
            let delta_min = h.spectral_profile()?.delta_min;
            let t = s.t_for(h.dim(), delta_min, value);
            ch.t = Some(t);
            ch.alpha = Some(s.alpha_for(t));
            eps = value;
        }
        GridAxis::GammaNoise => ch.gamma = GammaSpec::Eigdiff { sigma: value },
    }
    let seed = if axis == GridAxis::Single { cfg.seed } else { rng::derive(cfg.seed, &[index as u64]) };
    let name = if axis == GridAxis::Single { cfg.name.clone() } else { format!("{}_{index}", cfg.name) };
    Ok(ExperimentConfig {
        name,
        kind: ExperimentKind::MinL,
        system: cfg.system.clone(),
        channel: Some(ch),
        eps,
        steps: None,
        l_max: cfg.l_max,
        trials: cfg.trials,
        max_trials: cfg.max_trials,
        seed,
        initial: cfg.initial.clone(),
        grid: Vec::new(),
        scaling: None,
        plan: None,
        samples: None,
        out: None,
    })
}

/// Gap diagnostics of the averaged weak-coupling generator, when the `γ`
/// distribution has one.
fn generator_report(h: &Hamiltonian, params: &ChannelParams) -> Result<Option<(wc::GapReport, wc::TransitionGenerator)>> {
    let Some(mode) = params.gamma.expectation_mode() else { return Ok(None) };
    let tg = match mode {
        wc::ExpectationMode::EmpiricalSamples { gammas } if gammas.len() == 1 => {
            wc::build_t(h, params.beta, gammas[0], params.alpha, params.t)?
        }
        m => wc::build_expected_t(h, params.beta, params.alpha, params.t, &m)?,
    };
    Ok(Some((wc::generator_gap(&tg), tg)))
}

fn search_row(cfg: &ExperimentConfig, h: &Hamiltonian, point: &ExperimentConfig, index: usize, value: f64) -> Result<Vec<String>> {
    let params = point.channel_params(h)?;
    let rho0 = point.initial.build(h)?;
    let target = h.gibbs_state(params.beta)?;
    let mut ens = Ensemble::new(h, params.clone(), &rho0, &target, point.trials)?;
    let r = search_with_escalation(&mut ens, point.eps, point.l_max, point.max_trials)?;
    let variance = match r.steps {
        Some(l) => ens.stats_at(l)?.variance(),
        None => ens.stats_at(point.l_max)?.variance(),
    };
    // the row re-runs with the final trial count and no escalation
    let mut rerun = point.clone();
    rerun.trials = r.trials;
    rerun.max_trials = None;

    let gaps = generator_report(h, &params)?;
    let jerison = match &gaps {
        Some((g, _)) if g.absolute_gap > 0.0 => wc::jerison_steps(h.dim(), g.absolute_gap, point.eps).ok(),
        _ => None,
    };
    let grid_value = if cfg.kind == ExperimentKind::MinL { String::new() } else { num(value) };
    Ok(vec![
        index.to_string(),
        grid_value,
        point.seed.to_string(),
        params.beta.to_string(),
        num(point.eps),
        num(params.alpha),
        num(params.t),
        num(params.alpha_tilde_sq(h.dim())),
        params.gamma.describe(),
        params.n_samples.to_string(),
        r.trials.to_string(),
        opt_int(r.steps),
        opt_num(r.steps.map(|l| l as f64 * params.t)),
        r.steps.is_some().to_string(),
        num(r.mean_distance),
        num(r.std_error),
        num(variance),
        r.monotone.to_string(),
        opt_num(gaps.as_ref().map(|g| g.0.absolute_gap)),
        opt_num(gaps.as_ref().map(|g| g.0.rescaled_gap)),
        opt_num(gaps.as_ref().map(|g| g.0.scale)),
        opt_int(jerison),
        rerun.to_json(),
    ])
}

fn grid_search(cfg: &ExperimentConfig, h: &Hamiltonian, opts: &RunOptions, axis: GridAxis) -> Result<Report> {
    let values: Vec<f64> = if axis == GridAxis::Single { vec![f64::NAN] } else { cfg.grid.clone() };
    let mut records = Records::new(cfg.kind.name(), SEARCH_COLUMNS);
    let mut checkpoint = match &opts.checkpoint_dir {
        Some(dir) if axis != GridAxis::Single => Some(Checkpoint::open(
            output::checkpoint_path(dir, &cfg.name),
            &cfg.to_json(),
            &records.columns,
            values.len(),
        )?),
        _ => None,
    };
    let mut row_seconds = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if let Some((cells, secs)) = checkpoint.as_ref().and_then(|c| c.get(i)) {
            records.push(cells.clone());
            row_seconds.push(*secs);
            continue;
        }
        let t0 = Instant::now();
        let point = point_config(cfg, h, axis, i, v)?;
        let cells = search_row(cfg, h, &point, i, v)?;
        let secs = t0.elapsed().as_secs_f64();
        if let Some(c) = checkpoint.as_mut() {
            c.record(i, &cells, secs)?;
        }
        records.push(cells);
        row_seconds.push(secs);
    }
    if let Some(c) = checkpoint {
        c.finish()?;
    }
    let summary = search_summary(&records, axis)?;
    Ok(Report { records, summary, passed: true, row_seconds })
}

fn parse_column(records: &Records, name: &str) -> Vec<Option<f64>> {
    records.get(name).unwrap_or_default().iter().map(|c| c.parse::<f64>().ok()).collect()
}

fn search_summary(records: &Records, axis: GridAxis) -> Result<serde_json::Value> {
    let grid = parse_column(records, "grid_value");
    let steps = parse_column(records, "steps");
    let lt = parse_column(records, "lt");
    let reached = steps.iter().filter(|s| s.is_some()).count();
    let mut summary = json!({ "rows": records.rows.len(), "reached": reached });
    match axis {
        GridAxis::Beta => {
            if reached == steps.len() && !steps.is_empty() {
                let ls: Vec<f64> = steps.iter().map(|s| s.unwrap()).collect();
                let k = argmax(&ls);
                summary["argmax_beta"] = json!(grid[k]);
                summary["interior_max"] = json!(k > 0 && k + 1 < ls.len());
            }
        }
        GridAxis::Epsilon => {
            let pts: Vec<(f64, f64)> = grid.iter().zip(&lt).filter_map(|(e, y)| Some((1.0 / (*e)?, (*y)?))).collect();
            if pts.len() >= 3 {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let f = fit_power_law(&xs, &ys)?;
                summary["fit"] = json!({ "x": "1/eps", "y": "L*t", "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared });
            }
        }
        _ => {}
    }
    Ok(summary)
}

/// Index of the largest value, the first one on ties.
fn argmax(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[k] {
            k = i;
        }
    }
    k
}

pub const TRAJECTORY_COLUMNS: &[&str] =
    &["step", "seed", "trials", "mean_distance", "std_error", "variance", "mean_state_distance", "markov_distance"];

/// Steps at which trajectory rows are emitted: every step for runs of up to
/// 2000 interactions, otherwise about 1000 log-spaced steps including the last.
pub fn trajectory_steps(steps: u64) -> Vec<u64> {
    if steps <= 2000 {
        return (0..=steps).collect();
    }
    let mut out: Vec<u64> = (0..=1000).map(|k| ((steps as f64).powf(k as f64 / 1000.0)).round() as u64).collect();
    out.insert(0, 0);
    out.push(steps);
    out.sort_unstable();
    out.dedup();
    out
}

fn trajectory(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<Report> {
    let steps = cfg.steps.ok_or_else(|| config_err("steps", "required"))?;
    let params = cfg.channel_params(h)?;
    let rho0 = cfg.initial.build(h)?;
    let target = h.gibbs_state(params.beta)?;
    let t0 = Instant::now();
    let gen = generator_report(h, &params)?;
    let p0 = h.populations(&rho0);
    let gibbs = h.gibbs_populations(params.beta)?;
    let mut ens = Ensemble::new(h, params.clone(), &rho0, &target, cfg.trials)?;
    let mut records = Records::new(cfg.kind.name(), TRAJECTORY_COLUMNS);
    for l in trajectory_steps(steps) {
        let s = ens.stats_at(l)?;
        // states are only kept at the horizon, so the mean state is reported there alone
        let mean_state = if l == steps {
            num(crate::state::trace_distance(&DensityMatrix::mean(ens.final_states())?, &target)?)
        } else {
            String::new()
        };
        let markov = gen.as_ref().map(|(_, tg)| wc::l1_distance(&wc::markov_evolve(&tg.matrix, &p0, l), &gibbs));
        records.push(vec![
            l.to_string(),
            cfg.seed.to_string(),
            ens.trials().to_string(),
            num(s.mean()),
            num(s.std_error()),
            num(s.variance()),
            mean_state,
            opt_num(markov),
        ]);
    }
    let last = ens.stats_at(steps)?;
    let summary = json!({
        "steps": steps,
        "final_mean_distance": last.mean(),
        "final_std_error": last.std_error(),
        "alpha_tilde_sq": params.alpha_tilde_sq(h.dim()),
    });
    Ok(Report { records, summary, passed: true, row_seconds: vec![t0.elapsed().as_secs_f64()] })
}

pub const MARKOV_COLUMNS: &[&str] = &[
    "beta",
    "alpha",
    "t",
    "gamma",
    "alpha_tilde_sq",
    "absolute_gap",
    "rescaled_gap",
    "gap_scale",
    "jerison_steps",
    "markov_steps",
    "fixed_point_l1",
    "detailed_balance_residual",
];

fn markov(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<Report> {
    let base = cfg.channel_params(h)?;
    let betas: Vec<Beta> = if cfg.grid.is_empty() {
        vec![base.beta]
    } else {
        cfg.grid.iter().map(|&b| Beta::new(b)).collect::<Result<_>>()?
    };
    let p0 = h.populations(&cfg.initial.build(h)?);
    let mut records = Records::new(cfg.kind.name(), MARKOV_COLUMNS);
    let mut row_seconds = Vec::new();
    let mut all_ok = true;
    for beta in betas {
        let t0 = Instant::now();
        let mut params = base.clone();
        params.beta = beta;
        let (gap, tg) = generator_report(h, &params)?
            .ok_or_else(|| config_err("channel.gamma", "no averaged generator for this γ distribution"))?;
        let gibbs = h.gibbs_populations(beta)?;
        let fp = wc::fixed_point(&tg)?;
        let jerison = if gap.absolute_gap > 0.0 { wc::jerison_steps(h.dim(), gap.absolute_gap, cfg.eps).ok() } else { None };
        let m = tg.step_matrix();
        let mut p = nalgebra::DVector::from_column_slice(&p0);
        let mut reached = None;
        for l in 0..=cfg.l_max {
            let v: Vec<f64> = p.iter().copied().collect();
            if wc::l1_distance(&v, &gibbs) < cfg.eps {
                reached = Some(l);
                break;
            }
            p = &m * p;
        }
        let total: f64 = p.iter().sum();
        all_ok &= (total - 1.0).abs() < 1e-8;
        records.push(vec![
            beta.to_string(),
            num(params.alpha),
            num(params.t),
            params.gamma.describe(),
            num(tg.meta.alpha_tilde_sq),
            num(gap.absolute_gap),
            num(gap.rescaled_gap),
            num(gap.scale),
            opt_int(jerison),
            opt_int(reached),
            num(wc::l1_distance(&fp, &gibbs)),
            num(wc::detailed_balance_residual(&tg.matrix, &fp)),
        ]);
        row_seconds.push(t0.elapsed().as_secs_f64());
    }
    let summary = json!({ "rows": records.rows.len() });
    Ok(Report { records, summary, passed: all_ok, row_seconds })
}

pub const PLAN_COLUMNS: &[&str] = &[
    "setting",
    "dim",
    "beta",
    "eps",
    "alpha",
    "t",
    "steps",
    "alpha_tilde_sq",
    "total_time",
    "rescaled_gap",
    "gap_source",
    "absolute_gap",
    "budget_total",
    "budget_constant",
    "checks_hold",
];

/// Plan for the configured system.
pub fn make_plan(h: &Hamiltonian, spec: &PlanSpec, beta: Beta, eps: f64) -> Result<Plan> {
    let p = h.spectral_profile()?;
    let d = h.dim();
    match spec.setting {
        PlanSetting::SingleQubit => {
            if d != 2 {
                return Err(config_err("plan.setting", "single_qubit needs a two-level system"));
            }
            planner::plan_single_qubit(p.delta_min, spec.sigma, beta, eps, spec.multiplier)
        }
        PlanSetting::Harmonic => {
            let gap = match spec.rescaled_gap {
                Some(g) => g,
                None => planner::harmonic_gap(d, p.delta_min, beta)?.0,
            };
            planner::plan_harmonic(d, p.delta_min, beta, eps, gap, spec.multiplier)
        }
        PlanSetting::ZeroKnowledge => {
            let norm = h.spectral_norm();
            let gap = match (spec.rescaled_gap, beta) {
                (Some(g), _) => Some(g),
                (None, Beta::Infinite) => None,
                (None, _) => {
                    // evaluate the finite-β gap at the β = ∞ planning time
                    let probe = planner::plan_zero_knowledge(d, norm, p.delta_min, Beta::Infinite, eps, None, 1.0)?;
                    Some(planner::zero_knowledge_gap(h, beta, probe.t)?.0)
                }
            };
            planner::plan_zero_knowledge(d, norm, p.delta_min, beta, eps, gap, spec.multiplier)
        }
        PlanSetting::PerfectKnowledge => {
            let gap = match spec.rescaled_gap {
                Some(g) => g,
                None => planner::perfect_knowledge_gap(h, beta)?.0,
            };
            planner::plan_perfect_knowledge(d, p.delta_min, beta, eps, gap, spec.multiplier)
        }
    }
}

fn plan(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<Report> {
    let t0 = Instant::now();
    let spec = cfg.plan.as_ref().ok_or_else(|| config_err("plan", "required"))?;
    let plan = make_plan(h, spec, cfg.beta()?, cfg.eps)?;
    let mut records = Records::new(cfg.kind.name(), PLAN_COLUMNS);
    records.push(vec![
        serde_json::to_value(plan.setting)?.as_str().unwrap_or_default().to_string(),
        plan.dim_s.to_string(),
        plan.beta.to_string(),
        num(plan.eps),
        num(plan.alpha),
        num(plan.t),
        plan.steps.to_string(),
        num(plan.alpha_tilde_sq()),
        num(plan.total_time()),
        num(plan.rescaled_gap),
        serde_json::to_value(plan.gap_source)?.as_str().unwrap_or_default().to_string(),
        num(plan.absolute_gap),
        num(plan.budget.total()),
        num(plan.budget_constant),
        plan.all_checks_hold().to_string(),
    ]);
    let passed = plan.all_checks_hold();
    Ok(Report { records, summary: serde_json::to_value(&plan)?, passed, row_seconds: vec![t0.elapsed().as_secs_f64()] })
}

pub const CHECK_COLUMNS: &[&str] = &["suite", "check", "value", "tolerance", "passed"];

fn check_report(kind: &str, rows: Vec<CheckRow>, seconds: f64) -> Report {
    let mut records = Records::new(kind, CHECK_COLUMNS);
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{}/{}", r.suite, r.check)).collect();
    for r in rows {
        records.push(vec![r.suite, r.check, num(r.value), num(r.tolerance), r.passed.to_string()]);
    }
    let passed = failed.is_empty();
    let summary = json!({ "checks": records.rows.len(), "failed": failed });
    Report { records, summary, passed, row_seconds: vec![seconds] }
}

/// Defaults for `validate` when no channel is configured: weak coupling,
/// `γ = δ_min`, `β = 2`.
fn validate_params(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<ChannelParams> {
    match &cfg.channel {
        Some(ch) if ch.alpha.is_some() && ch.t.is_some() => cfg.channel_params(h),
        Some(ch) => {
            let p = ChannelParams::new(1e-3, 10.0, ch.beta, ch.gamma.policy(h)?).with_seed(cfg.seed);
            Ok(p)
        }
        None => Ok(ChannelParams::new(1e-3, 10.0, Beta::new(2.0)?, GammaSpec::LowestGap.policy(h)?).with_seed(cfg.seed)),
    }
}

fn validate(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<Report> {
    let t0 = Instant::now();
    let params = validate_params(cfg, h)?;
    let rows = suites::validate(h, &params, cfg.eps, cfg.samples.unwrap_or(10_000), cfg.seed)?;
    Ok(check_report(cfg.kind.name(), rows, t0.elapsed().as_secs_f64()))
}

fn haar_check(cfg: &ExperimentConfig) -> Result<Report> {
    let t0 = Instant::now();
    let rows = suites::haar_checks(&[2, 3, 4], cfg.samples.unwrap_or(100_000), cfg.seed);
    Ok(check_report(cfg.kind.name(), rows, t0.elapsed().as_secs_f64()))
}
