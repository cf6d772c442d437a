//! Browser bindings for a few small ancilla computations. Every export takes
//! plain numbers and returns a JSON string, or throws a JS error string.

use ancilla::channel::{ChannelParams, Ensemble, GammaPolicy};
use ancilla::weak_coupling::{build_t, fixed_point, generator_gap, transition_element};
use ancilla::{Beta, DensityMatrix, Hamiltonian};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_DIM: usize = 8;

fn system(dim: usize, gap: f64) -> Result<Hamiltonian, String> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(format!("dimension must be between 2 and {MAX_DIM}"));
    }
    Hamiltonian::harmonic(dim, gap).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[derive(Serialize)]
pub struct MarkovPoint {
    pub beta: f64,
    pub fixed_point: Vec<f64>,
    pub gibbs: Vec<f64>,
    pub absolute_gap: f64,
    pub rescaled_gap: f64,
}

pub fn markov_points(dim: usize, gap: f64, gamma: f64, alpha: f64, t: f64, betas: &[f64]) -> Result<Vec<MarkovPoint>, String> {
    let h = system(dim, gap)?;
    betas
        .iter()
        .map(|&b| {
            let beta = Beta::new(b).map_err(|e| e.to_string())?;
            let g = build_t(&h, beta, gamma, alpha, t).map_err(|e| e.to_string())?;
            let r = generator_gap(&g);
            Ok(MarkovPoint {
                beta: b,
                fixed_point: fixed_point(&g).map_err(|e| e.to_string())?,
                gibbs: h.gibbs_populations(beta).map_err(|e| e.to_string())?,
                absolute_gap: r.absolute_gap,
                rescaled_gap: r.rescaled_gap,
            })
        })
        .collect()
}

/// Fixed point and gap of the resonant Markov model on `points` inverse
/// temperatures spaced evenly in `[0, beta_max]`.
#[wasm_bindgen]
pub fn markov_vs_beta(dim: usize, gap: f64, gamma: f64, alpha: f64, t: f64, beta_max: f64, points: usize) -> Result<String, String> {
    let n = points.clamp(2, 200);
    let betas: Vec<f64> = (0..n).map(|k| beta_max * k as f64 / (n - 1) as f64).collect();
    markov_points(dim, gap, gamma, alpha, t, &betas).map(|v| json(&v))
}

#[derive(Serialize)]
pub struct Curve {
    pub mean: Vec<f64>,
    pub final_populations: Vec<f64>,
}

pub fn convergence_curve(
    dim: usize,
    gap: f64,
    beta: f64,
    alpha: f64,
    t: f64,
    steps: u64,
    trials: usize,
    seed: u64,
) -> Result<Curve, String> {
    let h = system(dim, gap)?;
    let beta = Beta::new(beta).map_err(|e| e.to_string())?;
    let params = ChannelParams::new(alpha, t, beta, GammaPolicy::Fixed { gamma: gap }).with_seed(seed);
    let target = h.gibbs_state(beta).map_err(|e| e.to_string())?;
    let rho0 = DensityMatrix::basis(dim, dim - 1);
    let mut ens = Ensemble::new(&h, params, &rho0, &target, trials.clamp(1, 64)).map_err(|e| e.to_string())?;
    ens.extend_to(steps.min(20_000)).map_err(|e| e.to_string())?;
    let states = ens.final_states();
    let mut pops = vec![0.0; dim];
    for s in states {
        for (p, q) in pops.iter_mut().zip(s.populations()) {
            *p += q / states.len() as f64;
        }
    }
    Ok(Curve { mean: ens.mean_curve(), final_populations: pops })
}

/// Mean trace distance to the Gibbs state after each interaction, starting
/// from the top level of a harmonic ladder, with the ancilla tuned to the gap.
#[wasm_bindgen]
pub fn convergence(dim: usize, gap: f64, beta: f64, alpha: f64, t: f64, steps: u32, trials: u32, seed: u32) -> Result<String, String> {
    convergence_curve(dim, gap, beta, alpha, t, steps as u64, trials as usize, seed as u64).map(|c| json(&c))
}

#[derive(Serialize)]
pub struct RateRow {
    pub gamma: f64,
    /// `rates[i][j]`: transition element from level `i` into level `j`.
    pub rates: Vec<Vec<f64>>,
}

pub fn rate_rows(h: &Hamiltonian, beta: f64, alpha: f64, t: f64, gamma_max: f64, points: usize) -> Result<Vec<RateRow>, String> {
    let beta = Beta::new(beta).map_err(|e| e.to_string())?;
    let n = points.clamp(2, 2000);
    let d = h.dim();
    (0..n)
        .map(|k| {
            let gamma = gamma_max * k as f64 / (n - 1) as f64;
            let mut rates = vec![vec![0.0; d]; d];
            for (i, row) in rates.iter_mut().enumerate() {
                for (j, r) in row.iter_mut().enumerate() {
                    if i != j {
                        *r = transition_element(h, i, j, beta, gamma, alpha, t).map_err(|e| e.to_string())?;
                    }
                }
            }
            Ok(RateRow { gamma, rates })
        })
        .collect()
}

/// Second-order transition elements of a system with the given
/// comma-separated energies as the ancilla gap sweeps `[0, gamma_max]`.
#[wasm_bindgen]
pub fn rates_vs_gamma(energies: &str, beta: f64, alpha: f64, t: f64, gamma_max: f64, points: usize) -> Result<String, String> {
    let ev: Vec<f64> = energies
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad energy {s:?}")))
        .collect::<Result<_, _>>()?;
    if !(2..=MAX_DIM).contains(&ev.len()) {
        return Err(format!("need between 2 and {MAX_DIM} energies"));
    }
    let h = Hamiltonian::from_eigenvalues("custom", &ev).map_err(|e| e.to_string())?;
    rate_rows(&h, beta, alpha, t, gamma_max, points).map(|v| json(&v))
}
