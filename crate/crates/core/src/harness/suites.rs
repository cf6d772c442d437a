//! Pass/fail check suites behind the `validate` and `haar_check` kinds.

use nalgebra::DVector;
use serde::Serialize;

use crate::channel::{apply_fixed_interaction, Channel, ChannelParams, GammaPolicy};
use crate::error::Result;
use crate::haar::{self, MomentIndex};
use crate::hamiltonian::{Beta, EnvQubit, Hamiltonian};
use crate::operator::CMatrix;
use crate::rng;
use crate::state::DensityMatrix;
use crate::weak_coupling::{self as wc, ExpectationMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRow {
    fn le(suite: &str, check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { suite: suite.into(), check: check.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Random mixed state: random populations in a Haar-random basis.
pub fn random_state<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let u = haar::sample_haar_unitary(dim, rng);
    let w: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    let d = CMatrix::from_diagonal(&DVector::from_iterator(dim, w.iter().map(|x| (x / s).into())));
    DensityMatrix::from_matrix_unchecked(&u * d * u.adjoint()).expect("square")
}

/// Worst trace error, Hermiticity defect and negative eigenvalue over
/// `samples` single-interaction applications.
pub fn channel_validity(h: &Hamiltonian, params: &ChannelParams, samples: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let n = h.dim();
    let (mut tr, mut herm, mut neg) = (0.0f64, 0.0f64, 0.0f64);
    for s in 0..samples {
        let mut r = rng::stream(seed, &[0x5641_4c49, s as u64]);
        let rho = random_state(n, &mut r);
        let gamma = params.gamma.sample(&mut r)?;
        let env = EnvQubit::new(gamma, params.beta)?;
        let g = haar::sample_interaction(2 * n, &mut r);
        let out = apply_fixed_interaction(h, &rho, &g, params.alpha, params.t, &env)?;
        let v = out.validity();
        tr = tr.max(v.trace_error);
        herm = herm.max(v.hermitian_defect);
        neg = neg.max(-v.min_eigenvalue);
    }
    let suite = "channel_validity";
    Ok(vec![
        CheckRow::le(suite, "trace_error", tr, 1e-12),
        CheckRow::le(suite, "hermitian_defect", herm, 1e-12),
        CheckRow::le(suite, "negative_eigenvalue", neg, 1e-8),
    ])
}

/// Largest ratio `|MC − (I+T)| / (C·dim·(αt)³ + 3·s.e.)` over the transition
/// matrix, where `T` holds both on- and off-resonance terms and `γ` is fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub worst_ratio: f64,
    pub worst_abs: f64,
    pub bound: f64,
    pub max_std_error: f64,
}

pub fn weak_coupling_agreement(
    h: &Hamiltonian,
    alpha: f64,
    t: f64,
    beta: Beta,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<AgreementReport> {
    let n = h.dim();
    let profile = h.spectral_profile()?;
    let split = wc::split_resonance(h, beta, gamma, alpha, t, profile.delta_min)?;
    let step = nalgebra::DMatrix::identity(n, n) + split.full();
    let params = ChannelParams::new(alpha, t, beta, GammaPolicy::Fixed { gamma }).with_samples(samples).with_seed(seed);
    let channel = Channel::new(h, params)?;
    let bound = wc::remainder_constant() * n as f64 * (alpha * t).powi(3);
    let mut rep = AgreementReport { worst_ratio: 0.0, worst_abs: 0.0, bound, max_std_error: 0.0 };
    for i in 0..n {
        let p: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
        let rho = h.state_from_populations(&p)?;
        let (out, se) = channel.apply_with_stderr(&rho, 0, i as u64)?;
        let pops = h.populations(&out);
        for j in 0..n {
            let diff = (pops[j] - step[(j, i)]).abs();
            let tol = bound + 3.0 * se[(j, j)];
            rep.worst_abs = rep.worst_abs.max(diff);
            rep.worst_ratio = rep.worst_ratio.max(diff / tol);
            rep.max_std_error = rep.max_std_error.max(se[(j, j)]);
        }
    }
    Ok(rep)
}

/// Markov-model checks for one system at one β.
pub fn markov_checks(h: &Hamiltonian, beta: Beta, alpha: f64, t: f64, eps: f64) -> Result<Vec<CheckRow>> {
    let n = h.dim();
    let profile = h.spectral_profile()?;
    let gibbs = h.gibbs_populations(beta)?;
    let mut rows = Vec::new();

    let suite = "generator";
    let tg = wc::build_t(h, beta, profile.delta_min, alpha, t)?;
    let scale = tg.matrix.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    rows.push(CheckRow::le(suite, "column_sums", tg.max_column_sum() / scale, 1e-12));
    let off_diag_min = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| tg.matrix[(i, j)])
        .fold(0.0f64, f64::min);
    rows.push(CheckRow::le(suite, "negative_rates", 0.0 - off_diag_min, 0.0));

    if h.is_nondegenerate() {
        let suite = "fixed_point";
        let pk = wc::build_expected_t(h, beta, alpha, t, &ExpectationMode::PerfectKnowledge)?;
        let fp = wc::fixed_point(&pk)?;
        rows.push(CheckRow::le(suite, "perfect_knowledge_detailed_balance", wc::detailed_balance_residual(&pk.matrix, &fp), 1e-12));
        rows.push(CheckRow::le(suite, "perfect_knowledge_gibbs_l1", wc::l1_distance(&fp, &gibbs), 1e-10));
        if !beta.is_infinite() {
            let zk = wc::build_expected_t(h, beta, alpha, t, &ExpectationMode::zero_knowledge(h))?;
            let fz = wc::fixed_point(&zk)?;
            let bound = alpha * alpha * t * (beta.value() * profile.delta_min).exp() * std::f64::consts::PI / h.spectral_norm();
            rows.push(CheckRow::le(suite, "zero_knowledge_detailed_balance", wc::detailed_balance_residual(&zk.matrix, &fz), bound));
        }
    }

    // Jerison's bound on the lazy chain I + T/(2 max|T_ii|), which shares T's fixed point.
    let suite = "jerison";
    let pk = wc::build_expected_t(h, beta, alpha, t, &ExpectationMode::PerfectKnowledge)?;
    let dmax = (0..n).map(|k| -pk.matrix[(k, k)]).fold(0.0f64, f64::max);
    if dmax > 0.0 {
        let lazy = &pk.matrix / (2.0 * dmax);
        let fp = wc::fixed_point_of(&lazy)?;
        let gap = wc::spectral_gap(&lazy, 1.0).absolute_gap;
        let steps = wc::jerison_steps(n, gap, eps)?;
        let worst = (0..n)
            .map(|i| {
                let p0: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
                wc::l1_distance(&wc::markov_evolve(&lazy, &p0, steps), &fp)
            })
            .fold(0.0f64, f64::max);
        rows.push(CheckRow::le(suite, format!("tv_after_{steps}_steps"), worst, eps));
    }
    Ok(rows)
}

/// Invariant suite for a configured system and channel.
pub fn validate(h: &Hamiltonian, params: &ChannelParams, eps: f64, samples: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rows = channel_validity(h, params, samples.min(1000), seed)?;
    let delta_min = h.spectral_profile()?.delta_min;
    let gamma = match params.gamma {
        GammaPolicy::Fixed { gamma } => gamma,
        _ => delta_min,
    };
    let rep = weak_coupling_agreement(h, params.alpha, params.t, params.beta, gamma, samples, seed)?;
    rows.push(CheckRow::le("weak_coupling", "worst_ratio_to_bound", rep.worst_ratio, 1.0));
    rows.extend(markov_checks(h, params.beta, params.alpha, params.t, eps)?);
    Ok(rows)
}

/// Index tuples that exercise every Weingarten pairing pattern.
pub fn moment_indices(dim: usize) -> Vec<MomentIndex> {
    let b = dim - 1;
    vec![
        [0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 1, 1, 0, 1, 0],
        [0, 1, 1, 0, 1, 0, 0, 1],
        [0, 0, 1, 1, 0, 0, 1, 1],
        [0, 1, 1, 0, 0, 1, 1, 0],
        [0, b, b, 0, b, 0, 0, b],
        [1, 0, 0, 1, 0, 1, 1, 0],
        [0, 1, 0, 0, 1, 0, 0, 0],
    ]
}

/// Monte Carlo against closed forms for the Haar second moment and the two
/// Heisenberg-picture interaction averages, each entry within 3 s.e.
pub fn haar_checks(dims: &[usize], samples: usize, seed: u64) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for &d in dims {
        let idx = moment_indices(d);
        let mc = haar::haar_second_moment_mc(d, &idx, samples, rng::derive(seed, &[d as u64, 0]));
        for (k, (m, se)) in idx.iter().zip(mc) {
            let err = (m - haar::haar_second_moment(d, *k)).norm();
            rows.push(CheckRow::le("haar_moment", format!("d{d}_{k:?}"), err, 3.0 * se + 1e-12));
        }
        let eigs: Vec<f64> = (0..d).map(|k| 0.7 * k as f64 + 0.1 * (k * k) as f64).collect();
        let (x, y) = (0.9, -0.4);
        let (mc, se) = haar::heisenberg_product_mc(&eigs, x, y, samples, rng::derive(seed, &[d as u64, 1]));
        let exact = haar::heisenberg_product_expected(&eigs, x, y);
        rows.push(worst_entry("heisenberg_product", format!("d{d}"), &mc, &exact, &se));
        for (k, (a, b)) in [(0, d - 1), (1, 1)].into_iter().enumerate() {
            let s = rng::derive(seed, &[d as u64, 2 + k as u64]);
            let (mc, se) = haar::heisenberg_sandwich_mc(&eigs, x, y, a, b, samples, s);
            let exact = haar::heisenberg_sandwich_expected(&eigs, x, y, a, b);
            rows.push(worst_entry("heisenberg_sandwich", format!("d{d}_a{a}_b{b}"), &mc, &exact, &se));
        }
    }
    rows
}

/// Worst entry as a ratio of error to `3·s.e.`.
fn worst_entry(suite: &str, check: String, mc: &CMatrix, exact: &CMatrix, se: &nalgebra::DMatrix<f64>) -> CheckRow {
    let mut worst = 0.0f64;
    for r in 0..mc.nrows() {
        for c in 0..mc.ncols() {
            let err = (mc[(r, c)] - exact[(r, c)]).norm();
            worst = worst.max(err / (3.0 * se[(r, c)] + 1e-12));
        }
    }
    CheckRow::le(suite, check, worst, 1.0)
}
