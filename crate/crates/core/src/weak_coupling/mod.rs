//! Second-order (weak-coupling) model of the channel as a classical Markov
//! chain on the system eigenbasis.
//!
//! Matrices use the column convention `T[(j, i)] = ⟨j|T(|i⟩⟨i|)|j⟩`: column
//! `i` holds the rates out of state `i`, columns sum to zero and `I + T` is
//! column-stochastic.

pub mod quadrature;

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{excited_weight, ground_weight, Beta, Hamiltonian, SpectralProfile};

/// Relative margin under which `|Δ ∓ γ| = δ_min` counts as off resonance.
pub const RESONANCE_TIE_RTOL: f64 = 1e-9;

/// `α̃² = α² t² / (dim + 1)` with `dim = 2·dim_S` (qubit ancilla).
pub fn alpha_tilde_sq(alpha: f64, t: f64, dim_s: usize) -> f64 {
    alpha * alpha * t * t / (2 * dim_s + 1) as f64
}

/// `(sin x / x)²`, with a series near zero.
pub fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 45.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// `∫_{-x}^{x} sinc²(u) du`.
pub fn sinc2_integral(x: f64) -> f64 {
    let x = x.abs();
    2.0 * quadrature::integrate(sinc2, 0.0, x, &quadrature::periodic_breakpoints(0.0, x, PI), 1e-13)
}

fn check_index(h: &Hamiltonian, i: usize, j: usize) -> Result<()> {
    let n = h.dim();
    if i >= n || j >= n {
        return Err(invalid(format!("index ({i},{j}) out of range for dim {n}")));
    }
    if i == j {
        return Err(invalid("transition element needs i != j; diagonals are minus the column sums"));
    }
    Ok(())
}

fn check_coupling(alpha: f64, t: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("coupling must be finite and >= 0, got {alpha}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("interaction time must be positive, got {t}")));
    }
    Ok(())
}

/// The three sinc² terms of the `i → j` transition, already weighted by α̃²:
/// `(bare, ground-ancilla, excited-ancilla)`.
fn transition_terms(h: &Hamiltonian, i: usize, j: usize, beta: Beta, gamma: f64, alpha: f64, t: f64) -> [f64; 3] {
    let a2 = alpha_tilde_sq(alpha, t, h.dim());
    let d = h.eigenvalues()[i] - h.eigenvalues()[j];
    [
        a2 * sinc2(d * t / 2.0),
        a2 * ground_weight(beta, gamma) * sinc2((d - gamma) * t / 2.0),
        a2 * excited_weight(beta, gamma) * sinc2((d + gamma) * t / 2.0),
    ]
}

/// Full second-order transition probability `⟨j|T(|i⟩⟨i|)|j⟩`, `i ≠ j`.
pub fn transition_element(h: &Hamiltonian, i: usize, j: usize, beta: Beta, gamma: f64, alpha: f64, t: f64) -> Result<f64> {
    check_index(h, i, j)?;
    check_coupling(alpha, t)?;
    Ok(transition_terms(h, i, j, beta, gamma, alpha, t).iter().sum())
}

fn resonant(x: f64, delta_min: f64) -> bool {
    x.abs() <= delta_min * (1.0 - RESONANCE_TIE_RTOL)
}

fn fill_diagonal(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        m[(c, c)] = 0.0;
        let s: f64 = m.column(c).sum();
        m[(c, c)] = -s;
    }
}

/// On- and off-resonance parts of the second-order generator.
#[derive(Debug, Clone)]
pub struct ResonanceSplit {
    pub on: DMatrix<f64>,
    pub off: DMatrix<f64>,
    pub delta_min: f64,
}

impl ResonanceSplit {
    pub fn full(&self) -> DMatrix<f64> {
        &self.on + &self.off
    }
}

/// Routes each sinc² term by whether its detuning is within `δ_min`. The
/// bare term is always off resonance.
pub fn split_resonance(h: &Hamiltonian, beta: Beta, gamma: f64, alpha: f64, t: f64, delta_min: f64) -> Result<ResonanceSplit> {
    check_coupling(alpha, t)?;
    if !(delta_min > 0.0) {
        return Err(invalid(format!("delta_min must be positive, got {delta_min}")));
    }
    let n = h.dim();
    let ev = h.eigenvalues();
    let mut on = DMatrix::zeros(n, n);
    let mut off = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = ev[i] - ev[j];
            let [bare, cool, heat] = transition_terms(h, i, j, beta, gamma, alpha, t);
            off[(j, i)] += bare;
            if resonant(d - gamma, delta_min) {
                on[(j, i)] += cool;
            } else {
                off[(j, i)] += cool;
            }
            if resonant(d + gamma, delta_min) {
                on[(j, i)] += heat;
            } else {
                off[(j, i)] += heat;
            }
        }
    }
    fill_diagonal(&mut on);
    fill_diagonal(&mut off);
    Ok(ResonanceSplit { on, off, delta_min })
}

/// Provenance of a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub alpha: f64,
    pub t: f64,
    pub beta: Beta,
    pub gamma: String,
    pub alpha_tilde_sq: f64,
    /// Multiplier applied to `T` before measuring the rescaled gap.
    pub gap_scale: f64,
    pub gap_scale_label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Markov generator `T` plus metadata.
#[derive(Debug, Clone)]
pub struct TransitionGenerator {
    pub matrix: DMatrix<f64>,
    pub meta: GeneratorMeta,
}

#[derive(Serialize, Deserialize)]
struct GeneratorJson {
    dim: usize,
    matrix: Vec<Vec<f64>>,
    meta: GeneratorMeta,
}

impl TransitionGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `I + T`.
    pub fn step_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) + &self.matrix
    }

    pub fn scaled(&self) -> DMatrix<f64> {
        &self.matrix * self.meta.gap_scale
    }

    pub fn max_column_sum(&self) -> f64 {
        (0..self.dim()).map(|c| self.matrix.column(c).sum().abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let n = self.dim();
        let g = GeneratorJson {
            dim: n,
            matrix: (0..n).map(|r| (0..n).map(|c| self.matrix[(r, c)]).collect()).collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&g).expect("generator serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GeneratorJson = serde_json::from_str(text)?;
        if g.matrix.len() != g.dim || g.matrix.iter().any(|r| r.len() != g.dim) {
            return Err(Error::Dimension("generator matrix does not match dim".into()));
        }
        Ok(Self { matrix: DMatrix::from_fn(g.dim, g.dim, |r, c| g.matrix[r][c]), meta: g.meta })
    }
}

/// On-resonance generator for a fixed ancilla gap `γ`. Gap scale `1/α̃²`.
pub fn build_t(h: &Hamiltonian, beta: Beta, gamma: f64, alpha: f64, t: f64) -> Result<TransitionGenerator> {
    let profile = h.spectral_profile()?;
    build_t_with(h, &profile, beta, gamma, alpha, t)
}

fn build_t_with(h: &Hamiltonian, profile: &SpectralProfile, beta: Beta, gamma: f64, alpha: f64, t: f64) -> Result<TransitionGenerator> {
    let split = split_resonance(h, beta, gamma, alpha, t, profile.delta_min)?;
    let a2 = alpha_tilde_sq(alpha, t, h.dim());
    Ok(TransitionGenerator {
        matrix: split.on,
        meta: GeneratorMeta {
            alpha,
            t,
            beta,
            gamma: format!("fixed({gamma})"),
            alpha_tilde_sq: a2,
            gap_scale: 1.0 / a2,
            gap_scale_label: "1/alpha_tilde^2".into(),
            warnings: Vec::new(),
        },
    })
}

/// How the ancilla gap is distributed when averaging generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectationMode {
    /// `γ` uniform on `[lo, hi]`.
    UniformWindow { lo: f64, hi: f64 },
    /// `γ` equal to each distinct eigenvalue difference with probability `η/C(dim,2)`.
    PerfectKnowledge,
    /// Average of fixed-`γ` generators over the listed draws.
    EmpiricalSamples { gammas: Vec<f64> },
}

impl ExpectationMode {
    /// The zero-knowledge window `[0, 4‖H‖]`.
    pub fn zero_knowledge(h: &Hamiltonian) -> Self {
        ExpectationMode::UniformWindow { lo: 0.0, hi: 4.0 * h.spectral_norm() }
    }
}

/// Generator averaged over a distribution of ancilla gaps.
pub fn build_expected_t(h: &Hamiltonian, beta: Beta, alpha: f64, t: f64, mode: &ExpectationMode) -> Result<TransitionGenerator> {
    check_coupling(alpha, t)?;
    let profile = h.spectral_profile()?;
    let n = h.dim();
    let a2 = alpha_tilde_sq(alpha, t, n);
    match mode {
        ExpectationMode::UniformWindow { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                return Err(invalid(format!("uniform window needs 0 <= lo < hi, got [{lo}, {hi}]")));
            }
            let mut warnings = Vec::new();
            let max_gap = h.eigenvalues()[n - 1] - h.eigenvalues()[0];
            if *hi < max_gap - profile.delta_min || *lo > profile.delta_min {
                warnings.push(format!(
                    "window [{lo}, {hi}] does not cover every eigenvalue difference; some transitions are unreachable"
                ));
            }
            let delta = profile.delta_min;
            let prefactor = a2 * (2.0 / t) / (hi - lo);
            let mut m = DMatrix::zeros(n, n);
            let ev = h.eigenvalues();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let d = (ev[i] - ev[j]).abs();
                    if d <= profile.tol {
                        continue;
                    }
                    let g_lo = lo.max(d - delta);
                    let g_hi = hi.min(d + delta);
                    if g_lo >= g_hi {
                        continue;
                    }
                    // u = (d - γ) t / 2
                    let u_lo = (d - g_hi) * t / 2.0;
                    let u_hi = (d - g_lo) * t / 2.0;
                    let cooling = i > j;
                    let weight = move |u: f64| {
                        let gamma = d - 2.0 * u / t;
                        let w = if cooling { ground_weight(beta, gamma) } else { excited_weight(beta, gamma) };
                        w * sinc2(u)
                    };
                    if beta.is_infinite() && !cooling {
                        continue;
                    }
                    let bp = quadrature::periodic_breakpoints(u_lo, u_hi, PI);
                    m[(j, i)] = prefactor * quadrature::integrate(weight, u_lo, u_hi, &bp, 1e-11);
                }
            }
            fill_diagonal(&mut m);
            Ok(TransitionGenerator {
                matrix: m,
                meta: GeneratorMeta {
                    alpha,
                    t,
                    beta,
                    gamma: format!("uniform[{lo},{hi}]"),
                    alpha_tilde_sq: a2,
                    gap_scale: (hi - lo) * (2 * n + 1) as f64 / (2.0 * alpha * alpha * t),
                    gap_scale_label: "(hi-lo)(dim+1)/(2 alpha^2 t)".into(),
                    warnings,
                },
            })
        }
        ExpectationMode::PerfectKnowledge => {
            if !h.is_nondegenerate() {
                return Err(Error::Degenerate("perfect-knowledge averaging needs a non-degenerate spectrum".into()));
            }
            let pairs = (n * (n - 1) / 2) as f64;
            let ev = h.eigenvalues();
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let p = profile.eta(i, j) as f64 / pairs;
                    let d = (ev[i] - ev[j]).abs();
                    let w = if i > j { ground_weight(beta, d) } else { excited_weight(beta, d) };
                    m[(j, i)] = a2 * p * w;
                }
            }
            fill_diagonal(&mut m);
            Ok(TransitionGenerator {
                matrix: m,
                meta: GeneratorMeta {
                    alpha,
                    t,
                    beta,
                    gamma: "perfect_knowledge".into(),
                    alpha_tilde_sq: a2,
                    gap_scale: pairs / a2,
                    gap_scale_label: "C(dim,2)/alpha_tilde^2".into(),
                    warnings: Vec::new(),
                },
            })
        }
        ExpectationMode::EmpiricalSamples { gammas } => {
            if gammas.is_empty() {
                return Err(invalid("empirical averaging needs at least one gamma"));
            }
            let mut m = DMatrix::zeros(n, n);
            for &g in gammas {
                m += build_t_with(h, &profile, beta, g, alpha, t)?.matrix;
            }
            m /= gammas.len() as f64;
            Ok(TransitionGenerator {
                matrix: m,
                meta: GeneratorMeta {
                    alpha,
                    t,
                    beta,
                    gamma: format!("empirical(n={})", gammas.len()),
                    alpha_tilde_sq: a2,
                    gap_scale: 1.0 / a2,
                    gap_scale_label: "1/alpha_tilde^2".into(),
                    warnings: Vec::new(),
                },
            })
        }
    }
}

/// Number of stationary directions: singular values of `T` below
/// `rel_tol · σ_max` (the multiplicity of eigenvalue 1 of `I + T`).
pub fn stationary_multiplicity(t: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = t.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return t.nrows();
    }
    sv.iter().filter(|&&s| s <= rel_tol * top).count()
}

/// Stationary distribution by Grassmann–Taksar–Heyman elimination; `None`
/// when a pivot vanishes.
fn gth(t: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = t.nrows();
    // rate[a][b]: flow from a to b
    let mut rate = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                rate[a][b] = t[(b, a)].max(0.0);
            }
        }
    }
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| rate[k][j]).sum();
        if !(s > 0.0) {
            return None;
        }
        for row in rate.iter_mut().take(k) {
            row[k] /= s;
        }
        for i in 0..k {
            let rik = rate[i][k];
            if rik == 0.0 {
                continue;
            }
            for j in 0..k {
                if i != j {
                    rate[i][j] += rik * rate[k][j];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * rate[i][j]).sum();
    }
    let z: f64 = pi.iter().sum();
    Some(pi.into_iter().map(|x| x / z).collect())
}

/// The unique probability vector in the kernel of `T`.
pub fn fixed_point(t: &TransitionGenerator) -> Result<Vec<f64>> {
    fixed_point_of(&t.matrix)
}

pub fn fixed_point_of(t: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mult = stationary_multiplicity(t, 1e-9);
    if mult != 1 {
        return Err(Error::NonErgodic(mult));
    }
    if let Some(p) = gth(t) {
        return Ok(p);
    }
    let svd = t.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("nonempty");
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    let z: f64 = v.iter().sum();
    Ok(v.into_iter().map(|x| x / z).collect())
}

/// `‖T p‖₁`.
pub fn detailed_balance_residual(t: &DMatrix<f64>, p: &[f64]) -> f64 {
    (t * DVector::from_column_slice(p)).iter().map(|x| x.abs()).sum()
}

/// Spectrum-derived gaps of a generator.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// `1 - max_{k>1} |λ_k(I+T)|`.
    pub absolute_gap: f64,
    /// `min_{k>1} -Re μ_k` over the nonstationary eigenvalues `μ_k` of the
    /// scaled generator `s·T`.
    pub rescaled_gap: f64,
    pub scale: f64,
    /// Eigenvalues of `I + T`, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Absolute gap of `I + T` and the gap of `scale · T`.
pub fn spectral_gap(t: &DMatrix<f64>, scale: f64) -> GapReport {
    let n = t.nrows();
    let mu: Vec<Complex64> = t.clone().complex_eigenvalues().iter().copied().collect();
    let stationary = (0..n).min_by(|&a, &b| mu[a].norm().total_cmp(&mu[b].norm())).expect("nonempty");
    let mut absolute_max = 0.0f64;
    let mut rescaled = f64::INFINITY;
    for (k, m) in mu.iter().enumerate() {
        if k == stationary {
            continue;
        }
        absolute_max = absolute_max.max((m + 1.0).norm());
        rescaled = rescaled.min(-(m * scale).re);
    }
    let mut eigenvalues: Vec<(f64, f64)> = mu.iter().map(|m| (1.0 + m.re, m.im)).collect();
    eigenvalues.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    GapReport {
        absolute_gap: if n > 1 { 1.0 - absolute_max } else { 1.0 },
        rescaled_gap: if n > 1 { rescaled } else { 0.0 },
        scale,
        eigenvalues,
    }
}

pub fn generator_gap(t: &TransitionGenerator) -> GapReport {
    spectral_gap(&t.matrix, t.meta.gap_scale)
}

/// `(I + T)^L p₀`.
pub fn markov_evolve(t: &DMatrix<f64>, p0: &[f64], steps: u64) -> Vec<f64> {
    let m = DMatrix::identity(t.nrows(), t.ncols()) + t;
    let mut p = DVector::from_column_slice(p0);
    for _ in 0..steps {
        p = &m * p;
    }
    p.iter().copied().collect()
}

/// `‖p - q‖₁`.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Logarithmic factor of the relaxation bound:
/// `2 ln(1/λ) + 4(1 + ln 2) + (2 ln(1/ε) - 1)/N`.
pub fn jerison_log_factor(states: usize, gap: f64, eps: f64) -> f64 {
    2.0 * (1.0 / gap).ln() + 4.0 * (1.0 + std::f64::consts::LN_2) + (2.0 * (1.0 / eps).ln() - 1.0) / states as f64
}

/// Steps sufficient for `‖π - M^L x‖₁ ≤ ε` given the absolute gap of `M`.
pub fn jerison_steps(states: usize, gap: f64, eps: f64) -> Result<u64> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(invalid(format!("absolute gap must lie in (0, 1], got {gap}")));
    }
    if !(eps > 0.0) || states == 0 {
        return Err(invalid("need eps > 0 and at least one state"));
    }
    let l = (states as f64 / gap) * jerison_log_factor(states, gap, eps);
    if !(l < u64::MAX as f64) {
        return Err(Error::Numerical(format!("step count {l:.3e} does not fit in 64 bits")));
    }
    Ok(l.ceil().max(0.0) as u64)
}

/// Per-step and accumulated error bounds of the second-order model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub steps: u64,
    /// Target distance of the Markov chain from its fixed point.
    pub markov_eps: f64,
    /// Per-step bound on `‖T_off(ρ)‖₁`.
    pub off_resonance_bound: f64,
    /// Per-step bound on the third-order remainder.
    pub remainder_bound: f64,
    /// `L · (off + remainder)`.
    pub accumulated: f64,
    /// Distance of the chain's fixed point from the Gibbs state.
    pub fixed_point_residual: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.markov_eps + self.accumulated + self.fixed_point_residual
    }
}

/// `16 √(2/π)`: the third-absolute-moment constant of the remainder bound.
pub fn remainder_constant() -> f64 {
    16.0 * FRAC_2_PI.sqrt()
}

pub fn error_budget(alpha: f64, t: f64, dim_s: usize, delta_min: f64, steps: u64) -> ErrorBudget {
    let off = 8.0 * alpha * alpha / (delta_min * delta_min);
    let rem = remainder_constant() * dim_s as f64 * (alpha * t).powi(3);
    ErrorBudget {
        steps,
        markov_eps: 0.0,
        off_resonance_bound: off,
        remainder_bound: rem,
        accumulated: steps as f64 * (off + rem),
        fixed_point_residual: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc2_values() {
        assert_eq!(sinc2(0.0), 1.0);
        assert!((sinc2(2.0) - (2.0f64.sin() / 2.0).powi(2)).abs() < 1e-15);
        assert!((sinc2(2.0) - 0.206_705_452_607_747_4).abs() < 1e-12);
        // series and direct forms agree across the switch
        let x: f64 = 1.0001e-4;
        assert!((sinc2(x) - (x.sin() / x).powi(2)).abs() < 1e-15);
        assert!(sinc2(0.1) >= 1.0 - 0.02 / 2.0);
    }

    #[test]
    fn jerison_example() {
        assert_eq!(jerison_steps(2, 1.0, 0.5).unwrap(), 14);
        assert!(jerison_steps(2, 0.0, 0.5).is_err());
        assert!(jerison_steps(2, 1.5, 0.5).is_err());
    }

    #[test]
    fn error_budget_zero_coupling() {
        let b = error_budget(0.0, 3.0, 2, 1.0, 100);
        assert_eq!(b.total(), 0.0);
    }

    #[test]
    fn transition_element_rejects_diagonal() {
        let h = Hamiltonian::qubit(1.0).unwrap();
        assert!(transition_element(&h, 0, 0, Beta::Finite(1.0), 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn zero_generator_is_not_ergodic() {
        let z = DMatrix::zeros(3, 3);
        assert!(matches!(fixed_point_of(&z), Err(Error::NonErgodic(3))));
    }

    #[test]
    fn generator_json_round_trip() {
        let h = Hamiltonian::harmonic(3, 1.0).unwrap();
        let g = build_t(&h, Beta::Infinite, 1.0, 0.01, 5.0).unwrap();
        let back = TransitionGenerator::from_json(&g.to_json()).unwrap();
        assert_eq!(back.matrix, g.matrix);
        assert_eq!(back.meta, g.meta);
    }
}
