//! Parameter plans `(α, t, L)` for a target accuracy.
//!
//! Each planner evaluates the closed-form parameter choices for its setting,
//! re-checks the inequalities those choices rely on, and attaches the
//! predicted error budget. `multiplier` scales `L` only; the bounds hide
//! constants, so experiments measure the practical prefactor instead.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, GammaPolicy};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{Beta, Hamiltonian};
use crate::weak_coupling::{
    alpha_tilde_sq, build_expected_t, build_t, error_budget, jerison_log_factor, jerison_steps, sinc2_integral, spectral_gap,
    ErrorBudget, ExpectationMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    SingleQubit,
    HarmonicOscillator,
    ZeroKnowledge,
    PerfectKnowledge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSource {
    ClosedForm,
    Supplied,
    Computed,
}

/// A recorded inequality `lhs ≤ rhs` (or an identity with `lhs ≈ rhs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, holds: lhs <= rhs }
    }

    fn eq(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, holds: (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub setting: Setting,
    pub alpha: f64,
    pub t: f64,
    pub steps: u64,
    pub eps: f64,
    pub beta: Beta,
    pub dim_s: usize,
    /// Gap of the rescaled generator used by the plan.
    pub rescaled_gap: f64,
    pub gap_source: GapSource,
    /// Absolute gap of `I + T` fed to the relaxation bound.
    pub absolute_gap: f64,
    pub multiplier: f64,
    pub checks: Vec<Check>,
    pub budget: ErrorBudget,
    /// `budget.accumulated / (ε · J)` with `J` the logarithmic factor.
    pub budget_constant: f64,
}

impl Plan {
    pub fn alpha_tilde_sq(&self) -> f64 {
        alpha_tilde_sq(self.alpha, self.t, self.dim_s)
    }

    pub fn total_time(&self) -> f64 {
        self.steps as f64 * self.t
    }

    pub fn all_checks_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn channel_params(&self, gamma: GammaPolicy) -> ChannelParams {
        ChannelParams::new(self.alpha, self.t, self.beta, gamma)
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check_multiplier(m: f64) -> Result<()> {
    positive("multiplier", m)
}

fn scaled_steps(base: u64, multiplier: f64) -> u64 {
    ((base as f64) * multiplier).ceil().max(1.0) as u64
}

#[allow(clippy::too_many_arguments)]
fn finish(
    setting: Setting,
    alpha: f64,
    t: f64,
    steps: u64,
    eps: f64,
    beta: Beta,
    dim_s: usize,
    rescaled_gap: f64,
    gap_source: GapSource,
    absolute_gap: f64,
    multiplier: f64,
    checks: Vec<Check>,
    mut budget: ErrorBudget,
    log_factor: f64,
) -> Plan {
    budget.markov_eps = eps;
    let budget_constant = budget.accumulated / (eps * log_factor);
    Plan {
        setting,
        alpha,
        t,
        steps,
        eps,
        beta,
        dim_s,
        rescaled_gap,
        gap_source,
        absolute_gap,
        multiplier,
        checks,
        budget,
        budget_constant,
    }
}

/// Single qubit with gap `Δ` known to within `±σ`.
pub fn plan_single_qubit(gap: f64, sigma: f64, beta: Beta, eps: f64, multiplier: f64) -> Result<Plan> {
    positive("gap", gap)?;
    positive("eps", eps)?;
    check_multiplier(multiplier)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("window half-width must be >= 0, got {sigma}")));
    }
    let temp_bound = match beta {
        Beta::Infinite => 0.0,
        Beta::Finite(b) if b == 0.0 => f64::INFINITY,
        Beta::Finite(b) => eps / (2.0 * b),
    };
    if sigma > temp_bound {
        return Err(Error::InvalidWindow(format!("sigma = {sigma} exceeds eps/(2 beta) = {temp_bound}")));
    }
    let root_bound = gap * (eps / 2.0).sqrt();
    if sigma > root_bound {
        return Err(Error::InvalidWindow(format!(
            "sigma = {sigma} exceeds gap*sqrt(eps/2) = {root_bound}; the roots are complex"
        )));
    }
    // lower root of Δ²t²(1 - σ²t²/2) = 1/ε, written without dividing by σ
    let x = 2.0 * sigma * sigma / (gap * gap * eps);
    let disc = (1.0 - x).max(0.0).sqrt();
    let t = (2.0 / (gap * gap * eps * (1.0 + disc))).sqrt();
    let alpha = 1.0 / (t.powi(3) * (gap + sigma).powi(2));
    let sinc_floor = 1.0 - sigma * sigma * t * t / 2.0;
    let a2t2 = alpha * alpha * t * t;
    let log_factor = 2.0 * (5.0 / (a2t2 * sinc_floor)).ln() + 4.0 * (1.0 + LN_2) - 0.5 + (2.0 / eps).ln();
    let base = (10.0 / (a2t2 * sinc_floor) * log_factor).ceil() as u64;
    let steps = scaled_steps(base, multiplier);

    let mut checks = vec![
        Check::le("sigma <= eps/(2 beta)", sigma, temp_bound),
        Check::le("sigma <= gap sqrt(eps/2)", sigma, root_bound),
        Check::le("t sigma <= sqrt(2)", t * sigma, 2f64.sqrt()),
        Check::eq("alpha t^3 (gap+sigma)^2 = 1", alpha * t.powi(3) * (gap + sigma).powi(2), 1.0),
    ];
    if sigma > 0.0 {
        let upper = ((1.0 + disc) / (sigma * sigma)).sqrt();
        checks.push(Check::le("t <= upper root", t, upper));
    }
    checks.push(Check::le("1/(t^2 (1 - sigma^2 t^2/2)) <= gap^2 eps", 1.0 / (t * t * sinc_floor), gap * gap * eps * (1.0 + 1e-12)));

    let a2 = alpha_tilde_sq(alpha, t, 2);
    let absolute_gap = a2 * sinc_floor;
    let mut budget = error_budget(alpha, t, 2, gap, steps);
    budget.fixed_point_residual = match beta {
        Beta::Finite(b) => 2.0 * b * sigma,
        Beta::Infinite => 0.0,
    };
    Ok(finish(
        Setting::SingleQubit,
        alpha,
        t,
        steps,
        eps,
        beta,
        2,
        sinc_floor,
        GapSource::ClosedForm,
        absolute_gap,
        multiplier,
        checks,
        budget,
        log_factor,
    ))
}

/// Gap of `T/α̃²` for the harmonic ladder with `γ = Δ` (independent of `α`, `t`).
pub fn harmonic_gap(dim_s: usize, gap: f64, beta: Beta) -> Result<(f64, GapSource)> {
    if beta.is_infinite() {
        return Ok((1.0, GapSource::ClosedForm));
    }
    let h = Hamiltonian::harmonic(dim_s, gap)?;
    let g = build_t(&h, beta, gap, 1.0, 1.0)?;
    Ok((spectral_gap(&g.matrix, g.meta.gap_scale).rescaled_gap, GapSource::Computed))
}

/// Truncated harmonic oscillator with `γ = Δ`; `rescaled_gap` is the gap of `T/α̃²`.
pub fn plan_harmonic(dim_s: usize, gap: f64, beta: Beta, eps: f64, rescaled_gap: f64, multiplier: f64) -> Result<Plan> {
    if dim_s < 2 {
        return Err(invalid("harmonic plan needs dim >= 2"));
    }
    positive("gap", gap)?;
    positive("eps", eps)?;
    positive("rescaled gap", rescaled_gap)?;
    check_multiplier(multiplier)?;
    let d = dim_s as f64;
    let el = eps * rescaled_gap;
    let alpha = el.powf(1.5) * gap / d.powi(4);
    let t = d / (gap * el.sqrt());
    let a2 = alpha_tilde_sq(alpha, t, dim_s);
    let absolute_gap = (a2 * rescaled_gap).min(1.0);
    let base = jerison_steps(dim_s, absolute_gap, eps)?;
    let steps = scaled_steps(base, multiplier);
    let checks = vec![
        Check::eq("alpha dim gap^2 t^3 = 1", alpha * d * gap * gap * t.powi(3), 1.0),
        Check::le("alpha_tilde^2 gap_tilde <= 1", a2 * rescaled_gap, 1.0),
    ];
    let budget = error_budget(alpha, t, dim_s, gap, steps);
    let source = if beta.is_infinite() && rescaled_gap == 1.0 { GapSource::ClosedForm } else { GapSource::Supplied };
    Ok(finish(
        Setting::HarmonicOscillator,
        alpha,
        t,
        steps,
        eps,
        beta,
        dim_s,
        rescaled_gap,
        source,
        absolute_gap,
        multiplier,
        checks,
        budget,
        jerison_log_factor(dim_s, absolute_gap, eps),
    ))
}

/// Zero-knowledge window `[0, 4‖H‖]`. At `β = ∞` the gap may be omitted and
/// is then the sinc² integral `I(t)`.
pub fn plan_zero_knowledge(
    dim_s: usize,
    norm: f64,
    delta_min: f64,
    beta: Beta,
    eps: f64,
    rescaled_gap: Option<f64>,
    multiplier: f64,
) -> Result<Plan> {
    if dim_s < 2 {
        return Err(invalid("zero-knowledge plan needs dim >= 2"));
    }
    positive("norm", norm)?;
    positive("delta_min", delta_min)?;
    positive("eps", eps)?;
    check_multiplier(multiplier)?;
    if delta_min > 4.0 * norm {
        return Err(invalid(format!("delta_min = {delta_min} cannot exceed 4 ||H|| = {}", 4.0 * norm)));
    }
    if eps > 2.0 {
        return Err(invalid(format!("eps must lie in (0, 2], got {eps}")));
    }
    let d = dim_s as f64;
    let (alpha, t, lam, source) = match (beta, rescaled_gap) {
        (Beta::Infinite, None) => {
            let t = 4.0 * d * d * norm / (eps * delta_min * delta_min);
            let alpha = 1.0 / (d * delta_min * delta_min * t.powi(3));
            (alpha, t, sinc2_integral(delta_min * t / 2.0), GapSource::ClosedForm)
        }
        (_, Some(lam)) => {
            positive("rescaled gap", lam)?;
            let alpha = delta_min.powi(4) * (eps * lam).powi(3) / (d.powi(7) * norm.powi(3));
            let t = d * d * norm / (eps * lam * delta_min * delta_min);
            (alpha, t, lam, GapSource::Supplied)
        }
        (Beta::Finite(_), None) => return Err(invalid("finite beta needs a supplied rescaled gap")),
    };
    let scale = 2.0 * norm * (2.0 * d + 1.0) / (alpha * alpha * t);
    let absolute_gap = (lam / scale).min(1.0);
    let base = jerison_steps(dim_s, absolute_gap, eps)?;
    let steps = scaled_steps(base, multiplier);
    let mut checks = vec![
        Check::eq("alpha dim delta^2 t^3 = 1", alpha * d * delta_min * delta_min * t.powi(3), 1.0),
        Check::le("eps <= 2", eps, 2.0),
        Check::le("2 <= dim^2 4||H||/(pi delta)", 2.0, d * d * 4.0 * norm / (PI * delta_min)),
    ];
    if beta.is_infinite() {
        checks.push(Check::le("pi/2 <= delta t/2", PI / 2.0, delta_min * t / 2.0));
    }
    let mut budget = error_budget(alpha, t, dim_s, delta_min, steps);
    if let Beta::Finite(b) = beta {
        budget.fixed_point_residual = alpha * alpha * t * (b * delta_min).exp() * PI / norm;
    }
    Ok(finish(
        Setting::ZeroKnowledge,
        alpha,
        t,
        steps,
        eps,
        beta,
        dim_s,
        lam,
        source,
        absolute_gap,
        multiplier,
        checks,
        budget,
        jerison_log_factor(dim_s, absolute_gap, eps),
    ))
}

/// Gap of the rescaled zero-knowledge generator at time `t`.
pub fn zero_knowledge_gap(h: &Hamiltonian, beta: Beta, t: f64) -> Result<(f64, GapSource)> {
    let p = h.spectral_profile()?;
    if beta.is_infinite() {
        return Ok((sinc2_integral(p.delta_min * t / 2.0), GapSource::ClosedForm));
    }
    let g = build_expected_t(h, beta, 1.0, t, &ExpectationMode::zero_knowledge(h))?;
    Ok((spectral_gap(&g.matrix, g.meta.gap_scale).rescaled_gap, GapSource::Computed))
}

/// Gap of the rescaled perfect-knowledge generator (independent of `α`, `t`).
pub fn perfect_knowledge_gap(h: &Hamiltonian, beta: Beta) -> Result<(f64, GapSource)> {
    let p = h.spectral_profile()?;
    if beta.is_infinite() {
        return Ok((p.min_cooling_multiplicity() as f64, GapSource::ClosedForm));
    }
    let g = build_expected_t(h, beta, 1.0, 1.0, &ExpectationMode::PerfectKnowledge)?;
    Ok((spectral_gap(&g.matrix, g.meta.gap_scale).rescaled_gap, GapSource::Computed))
}

/// `γ` drawn from the eigenvalue differences with multiplicity weights.
pub fn plan_perfect_knowledge(dim_s: usize, delta_min: f64, beta: Beta, eps: f64, rescaled_gap: f64, multiplier: f64) -> Result<Plan> {
    if dim_s < 2 {
        return Err(invalid("perfect-knowledge plan needs dim >= 2"));
    }
    positive("delta_min", delta_min)?;
    positive("eps", eps)?;
    positive("rescaled gap", rescaled_gap)?;
    check_multiplier(multiplier)?;
    let d = dim_s as f64;
    let el = eps * rescaled_gap;
    let alpha = delta_min * el.powf(1.5) / d.powi(7);
    let t = d * d / (delta_min * el.sqrt());
    let a2 = alpha_tilde_sq(alpha, t, dim_s);
    let pairs = d * (d - 1.0) / 2.0;
    let absolute_gap = (rescaled_gap * a2 / pairs).min(1.0);
    let base = jerison_steps(dim_s, absolute_gap, eps)?;
    let steps = scaled_steps(base, multiplier);
    let checks = vec![Check::eq("alpha dim delta^2 t^3 = 1", alpha * d * delta_min * delta_min * t.powi(3), 1.0)];
    let budget = error_budget(alpha, t, dim_s, delta_min, steps);
    Ok(finish(
        Setting::PerfectKnowledge,
        alpha,
        t,
        steps,
        eps,
        beta,
        dim_s,
        rescaled_gap,
        GapSource::Supplied,
        absolute_gap,
        multiplier,
        checks,
        budget,
        jerison_log_factor(dim_s, absolute_gap, eps),
    ))
}
