mod common;

use ancilla::haar::{self, sample_haar_unitary, sample_interaction};
use ancilla::stats::RunningStats;
use common::stream;

fn within_3se(s: &RunningStats, want: f64) -> bool {
    (s.mean() - want).abs() <= 3.0 * s.std_error()
}

#[test]
fn fourth_moment_of_corner_entry_dim2() {
    // all indices equal: 2/(d²−1) − 2/(d(d²−1)) = 1/3 at d = 2
    let mut r = stream(10);
    let s: RunningStats = (0..100_000).map(|_| sample_haar_unitary(2, &mut r)[(0, 0)].norm_sqr().powi(2)).collect();
    assert!(within_3se(&s, 1.0 / 3.0), "{} ± {}", s.mean(), s.std_error());
}

#[test]
fn second_moment_of_corner_entry_dim4() {
    let mut r = stream(11);
    let s: RunningStats = (0..100_000).map(|_| sample_haar_unitary(4, &mut r)[(0, 0)].norm_sqr()).collect();
    assert!(within_3se(&s, 0.25), "{} ± {}", s.mean(), s.std_error());
}

#[test]
fn closed_form_matches_hand_values() {
    // E|U_11|^4 = 2/(d(d+1)); E|U_11|^2|U_12|^2 = 1/(d(d+1)); E|U_11|^2|U_22|^2 = 1/(d²−1)
    for d in 2..6 {
        let df = d as f64;
        assert!((haar::haar_second_moment(d, [0, 0, 0, 0, 0, 0, 0, 0]) - 2.0 / (df * (df + 1.0))).abs() < 1e-15);
        assert!((haar::haar_second_moment(d, [0, 0, 0, 1, 0, 0, 1, 0]) - 1.0 / (df * (df + 1.0))).abs() < 1e-15);
        assert!((haar::haar_second_moment(d, [0, 0, 1, 1, 0, 0, 1, 1]) - 1.0 / (df * df - 1.0)).abs() < 1e-15);
        // U_11 U_22 conj(U_12) conj(U_21) = −1/(d(d²−1))
        let v = haar::haar_second_moment(d, [0, 0, 1, 1, 1, 0, 0, 1]);
        assert!((v + 1.0 / (df * (df * df - 1.0))).abs() < 1e-15);
    }
}

#[test]
fn second_moment_mc_random_tuples() {
    use rand::Rng;
    let mut r = stream(12);
    for d in 2..5 {
        let idx: Vec<[usize; 8]> = (0..20).map(|_| std::array::from_fn(|_| r.random_range(0..d))).collect();
        let mc = haar::haar_second_moment_mc(d, &idx, 100_000, 99 + d as u64);
        for (k, (m, se)) in idx.iter().zip(mc) {
            let exact = haar::haar_second_moment(d, *k);
            assert!((m.re - exact).abs() <= 3.0 * se + 1e-12 && m.im.abs() <= 3.0 * se + 1e-12, "d={d} {k:?}: {m} vs {exact} (se {se})");
        }
    }
}

#[test]
fn interaction_is_centred() {
    let mut r = stream(13);
    let n = 4;
    let mut stats = ancilla::stats::MatrixStats::new(n, n);
    for _ in 0..100_000 {
        stats.push(&sample_interaction(n, &mut r).matrix());
    }
    let se = stats.std_error();
    for a in 0..n {
        for b in 0..n {
            assert!(stats.mean()[(a, b)].norm() <= 3.0 * se[(a, b)], "({a},{b}): {} vs se {}", stats.mean()[(a, b)], se[(a, b)]);
        }
    }
}

#[test]
fn eigenvalue_third_absolute_moment() {
    // E|y|³ = 2√(2/π) for y ~ N(0, 1)
    let mut r = stream(14);
    let mut s = RunningStats::default();
    for _ in 0..20_000 {
        for y in sample_interaction(4, &mut r).eigenvalues().iter() {
            s.push(y.abs().powi(3));
        }
    }
    assert!(within_3se(&s, 2.0 * (2.0 / std::f64::consts::PI).sqrt()), "{} ± {}", s.mean(), s.std_error());
}

#[test]
fn heisenberg_product_dim4() {
    let eigs = [0.0, 0.4, 1.1, 2.5];
    let (mc, se) = haar::heisenberg_product_mc(&eigs, 1.3, -0.2, 100_000, 3);
    let exact = haar::heisenberg_product_expected(&eigs, 1.3, -0.2);
    for a in 0..4 {
        for b in 0..4 {
            assert!((mc[(a, b)] - exact[(a, b)]).norm() <= 3.0 * se[(a, b)] + 1e-12, "({a},{b})");
        }
    }
}

#[test]
fn heisenberg_sandwich_dim4() {
    let eigs = [0.0, 0.4, 1.1, 2.5];
    for (a, b) in [(0, 2), (3, 3)] {
        let (mc, se) = haar::heisenberg_sandwich_mc(&eigs, 0.8, 0.1, a, b, 100_000, 4);
        let exact = haar::heisenberg_sandwich_expected(&eigs, 0.8, 0.1, a, b);
        for r in 0..4 {
            for c in 0..4 {
                assert!((mc[(r, c)] - exact[(r, c)]).norm() <= 3.0 * se[(r, c)] + 1e-12, "a={a} b={b} ({r},{c})");
            }
        }
    }
}
