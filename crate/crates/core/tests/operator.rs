mod common;

use ancilla::haar::{sample_haar_unitary, sample_interaction};
use ancilla::operator::{self, CMatrix, C64};
use ancilla::state::{trace_distance, DensityMatrix};
use common::{expm_taylor, max_abs, random_hermitian, stream};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn evolve_at_zero_is_identity() {
    let mut r = stream(1);
    let h = random_hermitian(5, &mut r);
    let u = operator::evolve(&h, 0.0).unwrap();
    assert!(max_abs(&(u - CMatrix::identity(5, 5))) < 1e-14);
}

#[test]
fn evolve_diagonal() {
    let (g, t) = (0.7, 2.3);
    let u = operator::evolve(&operator::real_diagonal(&[0.0, g]), t).unwrap();
    assert!((u[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    assert!((u[(1, 1)] - C64::from_polar(1.0, g * t)).norm() < 1e-15);
    assert!(u[(0, 1)].norm() < 1e-15 && u[(1, 0)].norm() < 1e-15);
}

#[test]
fn evolve_forward_backward_8x8() {
    let mut r = stream(2);
    for _ in 0..10 {
        let h = random_hermitian(8, &mut r);
        let f = operator::evolve(&h, 1.7).unwrap();
        let b = operator::evolve(&h, -1.7).unwrap();
        assert!(max_abs(&(f * b - CMatrix::identity(8, 8))) <= 1e-12);
    }
}

#[test]
fn evolve_matches_taylor_oracle() {
    let mut r = stream(3);
    for n in [2, 4, 6] {
        let h = random_hermitian(n, &mut r);
        let got = operator::evolve(&h, 0.9).unwrap();
        let want = expm_taylor(&h, 0.9);
        assert!(max_abs(&(got - want)) < 1e-11, "n = {n}");
    }
}

#[test]
fn partial_trace_of_product() {
    let mut r = stream(4);
    let rho = ancilla::harness::suites::random_state(3, &mut r);
    let sigma = ancilla::harness::suites::random_state(2, &mut r);
    let red = rho.tensor(&sigma).partial_trace_env(2).unwrap();
    assert!(max_abs(&(red.matrix() - rho.matrix())) < 1e-14);
}

#[test]
fn partial_trace_maximally_mixed() {
    let red = DensityMatrix::maximally_mixed(4).partial_trace_env(2).unwrap();
    assert!(max_abs(&(red.matrix() - DensityMatrix::maximally_mixed(2).matrix())) < 1e-15);
}

#[test]
fn partial_trace_matches_schmidt_coefficients() {
    let mut r = stream(5);
    for _ in 0..20 {
        // |ψ⟩ = Σ c_{se} |s⟩|e⟩ with system-major index s·2+e
        let u = sample_haar_unitary(4, &mut r);
        let psi = DVector::from_iterator(4, u.column(0).iter().copied());
        let rho = DensityMatrix::pure(&psi).unwrap();
        let red = rho.partial_trace_env(2).unwrap();
        // explicit index summation
        let mut want = CMatrix::zeros(2, 2);
        for s in 0..2 {
            for s2 in 0..2 {
                for e in 0..2 {
                    want[(s, s2)] += psi[s * 2 + e] * psi[s2 * 2 + e].conj();
                }
            }
        }
        assert!(max_abs(&(red.matrix() - &want)) < 1e-14);
        assert!((red.trace().re - 1.0).abs() < 1e-14);
        // Schmidt coefficients: singular values of the 2x2 coefficient matrix
        let c = CMatrix::from_fn(2, 2, |s, e| psi[s * 2 + e]);
        let sv = c.singular_values();
        let mut want_ev: Vec<f64> = sv.iter().map(|x| x * x).collect();
        want_ev.sort_by(f64::total_cmp);
        let got = red.eigenvalues();
        for (a, b) in got.iter().zip(&want_ev) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn trace_distance_examples() {
    let a = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
    let b = DensityMatrix::maximally_mixed(2);
    assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
}

#[test]
fn thermal_qubit_distance_is_twice_excited_difference() {
    use ancilla::hamiltonian::excited_weight;
    use ancilla::Beta;
    let beta = Beta::Finite(1.3);
    for gamma in [0.2, 0.9, 1.4, 3.0] {
        let p = |g: f64| {
            let e = excited_weight(beta, g);
            DensityMatrix::from_populations(&[1.0 - e, e]).unwrap()
        };
        let d = trace_distance(&p(gamma), &p(1.0)).unwrap();
        let want = 2.0 * (excited_weight(beta, gamma) - excited_weight(beta, 1.0)).abs();
        assert!((d - want).abs() < 1e-14);
    }
}

#[test]
fn haar_dim_one_is_a_phase() {
    let mut r = stream(6);
    let u = sample_haar_unitary(1, &mut r);
    assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-15);
}

fn dm_strategy(n: usize) -> impl Strategy<Value = DensityMatrix> {
    any::<u64>().prop_map(move |s| ancilla::harness::suites::random_state(n, &mut stream(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), n in 1usize..9) {
        let u = sample_haar_unitary(n, &mut stream(seed));
        prop_assert!(operator::unitarity_defect(&u) <= 1e-12);
    }

    #[test]
    fn evolve_is_unitary(seed in any::<u64>(), n in 1usize..9, t in -20.0f64..20.0) {
        let h = random_hermitian(n, &mut stream(seed));
        let u = operator::evolve(&h, t).unwrap();
        prop_assert!(operator::unitarity_defect(&u) <= 1e-12);
    }

    #[test]
    fn interactions_are_hermitian(seed in any::<u64>(), n in 1usize..9) {
        let g = sample_interaction(n, &mut stream(seed));
        prop_assert!(operator::unitarity_defect(g.eigenvectors()) <= 1e-12);
        let m = g.matrix();
        prop_assert!(operator::hermitian_defect(&m) <= 1e-12 * operator::max_abs(&m).max(1.0));
    }

    #[test]
    fn partial_trace_inverts_tensor(rho in dm_strategy(3), sigma in dm_strategy(2)) {
        let red = rho.tensor(&sigma).partial_trace_env(2).unwrap();
        prop_assert!(max_abs(&(red.matrix() - rho.matrix())) <= 1e-12);
    }

    #[test]
    fn trace_distance_is_a_metric(a in dm_strategy(3), b in dm_strategy(3), c in dm_strategy(3)) {
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        let cb = trace_distance(&c, &b).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab >= 0.0 && ab <= 2.0 + 1e-12);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn trace_distance_is_unitarily_invariant(a in dm_strategy(3), b in dm_strategy(3), seed in any::<u64>()) {
        let u = sample_haar_unitary(3, &mut stream(seed));
        let d0 = trace_distance(&a, &b).unwrap();
        let d1 = trace_distance(&a.conjugate(&u).unwrap(), &b.conjugate(&u).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn random_states_are_valid(rho in dm_strategy(4)) {
        prop_assert!(rho.validity().within(1e-10, 1e-12, 1e-10));
    }
}
