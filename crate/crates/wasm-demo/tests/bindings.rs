use ancilla::Hamiltonian;
use ancilla_wasm::*;

#[test]
fn markov_fixed_points_are_gibbs_on_a_ladder() {
    let pts = markov_points(4, 1.0, 1.0, 0.05, 6.0, &[0.0, 1.0, 3.0]).unwrap();
    for p in &pts {
        let err = p.fixed_point.iter().zip(&p.gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "beta {}: {err}", p.beta);
        assert!(p.absolute_gap > 0.0 && p.rescaled_gap > 0.0);
    }
    let text = markov_vs_beta(3, 1.0, 1.0, 0.05, 6.0, 2.0, 5).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 5);
    assert_eq!(v[4]["beta"], 2.0);
}

#[test]
fn convergence_curve_decreases() {
    let c = convergence_curve(3, 1.0, 1.0, 0.1, 6.283, 200, 8, 1).unwrap();
    assert_eq!(c.mean.len(), 201);
    assert!(c.mean[200] < 0.2 * c.mean[0]);
    assert!((c.final_populations.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let again = convergence_curve(3, 1.0, 1.0, 0.1, 6.283, 200, 8, 1).unwrap();
    assert_eq!(c.mean, again.mean);
}

#[test]
fn rates_peak_at_resonance() {
    let h = Hamiltonian::from_eigenvalues("h", &[0.0, 1.0]).unwrap();
    let rows = rate_rows(&h, 1.0, 0.05, 20.0, 2.0, 201).unwrap();
    let best = rows.iter().max_by(|a, b| a.rates[1][0].total_cmp(&b.rates[1][0])).unwrap();
    assert!((best.gamma - 1.0).abs() < 0.02, "{}", best.gamma);
    assert!(rows.iter().all(|r| r.rates[0][0] == 0.0));
}

#[test]
fn bad_inputs_are_errors() {
    assert!(markov_vs_beta(1, 1.0, 1.0, 0.05, 6.0, 2.0, 5).is_err());
    assert!(markov_vs_beta(3, 1.0, 1.0, 0.05, 6.0, -2.0, 5).is_err());
    assert!(rates_vs_gamma("0, x", 1.0, 0.05, 5.0, 3.0, 10).is_err());
    assert!(rates_vs_gamma("0", 1.0, 0.05, 5.0, 3.0, 10).is_err());
    assert!(rates_vs_gamma("0, 1, 2.5", 1.0, 0.05, 5.0, 3.0, 10).is_ok());
}
