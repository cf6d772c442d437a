//! Haar-random unitaries, random interactions `G = U D U†`, and closed-form
//! moments used to validate them.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operator::{self, CMatrix, C64};
use crate::rng;
use crate::stats::MatrixStats;

const UNITARY_TOL: f64 = 1e-12;

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    assert!(dim >= 1, "Haar unitary needs dim >= 1");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// A random interaction `G = U D U†` stored in factored form.
#[derive(Debug, Clone)]
pub struct RandomInteraction {
    eigenvectors: CMatrix,
    eigenvalues: DVector<f64>,
}

impl RandomInteraction {
    pub fn new(eigenvectors: CMatrix, eigenvalues: DVector<f64>) -> Result<Self> {
        if !eigenvectors.is_square() || eigenvectors.nrows() != eigenvalues.len() {
            return Err(Error::Dimension(format!(
                "{:?} eigenvector matrix with {} eigenvalues",
                eigenvectors.shape(),
                eigenvalues.len()
            )));
        }
        let defect = operator::unitarity_defect(&eigenvectors);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!("eigenvectors not unitary (defect {defect:.3e})")));
        }
        Ok(Self { eigenvectors, eigenvalues })
    }

    /// `G = 0` in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self { eigenvectors: CMatrix::identity(dim, dim), eigenvalues: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Dense `U D U†`.
    pub fn matrix(&self) -> CMatrix {
        let u = &self.eigenvectors;
        let mut ud = u.clone();
        for (c, &d) in self.eigenvalues.iter().enumerate() {
            for r in 0..u.nrows() {
                ud[(r, c)] *= d;
            }
        }
        let g = ud * u.adjoint();
        operator::hermitian_part(&g)
    }
}

/// Haar eigenvectors with i.i.d. standard normal eigenvalues.
pub fn sample_interaction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> RandomInteraction {
    let eigenvectors = sample_haar_unitary(dim, rng);
    let eigenvalues = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
    RandomInteraction { eigenvectors, eigenvalues }
}

/// Index tuple `(i1, j1, i2, j2, k1, l1, k2, l2)` for the integrand
/// `U_{i1 j1} U_{i2 j2} ⟨k1|U†|l1⟩ ⟨k2|U†|l2⟩`.
pub type MomentIndex = [usize; 8];

/// Exact Haar average of the degree-(2,2) monomial (Weingarten calculus), `d ≥ 2`.
pub fn haar_second_moment(dim: usize, idx: MomentIndex) -> f64 {
    assert!(dim >= 2, "second-moment formula needs dim >= 2");
    let [i1, j1, i2, j2, k1, l1, k2, l2] = idx;
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let d = dim as f64;
    let direct = dl(i1, l1) * dl(j1, k1) * dl(i2, l2) * dl(j2, k2)
        + dl(i1, l2) * dl(j1, k2) * dl(i2, l1) * dl(j2, k1);
    let crossed = dl(i1, l2) * dl(j1, k1) * dl(i2, l1) * dl(j2, k2)
        + dl(i1, l1) * dl(j1, k2) * dl(i2, l2) * dl(j2, k1);
    direct / (d * d - 1.0) - crossed / (d * (d * d - 1.0))
}

/// Monte Carlo mean and standard error of the degree-(2,2) monomials.
pub fn haar_second_moment_mc(dim: usize, indices: &[MomentIndex], samples: usize, seed: u64) -> Vec<(C64, f64)> {
    let mut stats = MatrixStats::new(indices.len(), 1);
    let mut r = rng::stream(seed, &[0x4841_4152, dim as u64]);
    let mut col = CMatrix::zeros(indices.len(), 1);
    for _ in 0..samples {
        let u = sample_haar_unitary(dim, &mut r);
        for (row, &[i1, j1, i2, j2, k1, l1, k2, l2]) in indices.iter().enumerate() {
            col[(row, 0)] = u[(i1, j1)] * u[(i2, j2)] * u[(l1, k1)].conj() * u[(l2, k2)].conj();
        }
        stats.push(&col);
    }
    let se = stats.std_error();
    (0..indices.len()).map(|k| (stats.mean()[(k, 0)], se[(k, 0)])).collect()
}

fn heisenberg(eigs: &[f64], g: &CMatrix, x: f64) -> CMatrix {
    let n = eigs.len();
    CMatrix::from_fn(n, n, |a, b| g[(a, b)] * C64::from_polar(1.0, (eigs[a] - eigs[b]) * x))
}

/// Closed form of `E_G[G(x) G(y)]` with `G(x) = e^{iHx} G e^{-iHx}` and diagonal `H`.
pub fn heisenberg_product_expected(eigs: &[f64], x: f64, y: f64) -> CMatrix {
    let n = eigs.len();
    let scale = 1.0 / (n as f64 + 1.0);
    CMatrix::from_fn(n, n, |a, b| {
        if a != b {
            return C64::new(0.0, 0.0);
        }
        let s: C64 = eigs.iter().map(|&lc| C64::from_polar(1.0, (eigs[a] - lc) * (x - y))).sum();
        (s + 1.0) * scale
    })
}

/// Closed form of `E_G[G(x) |a⟩⟨b| G(y)]`.
pub fn heisenberg_sandwich_expected(eigs: &[f64], x: f64, y: f64, a: usize, b: usize) -> CMatrix {
    let n = eigs.len();
    let scale = 1.0 / (n as f64 + 1.0);
    let mut m = CMatrix::zeros(n, n);
    m[(a, b)] += C64::new(scale, 0.0);
    if a == b {
        for c in 0..n {
            m[(c, c)] += C64::from_polar(scale, (eigs[c] - eigs[a]) * (x - y));
        }
    }
    m
}

/// Monte Carlo estimate (mean, entrywise standard error) of `E_G[G(x) G(y)]`.
pub fn heisenberg_product_mc(eigs: &[f64], x: f64, y: f64, samples: usize, seed: u64) -> (CMatrix, nalgebra::DMatrix<f64>) {
    let n = eigs.len();
    let mut stats = MatrixStats::new(n, n);
    let mut r = rng::stream(seed, &[0x4845_4953, n as u64]);
    for _ in 0..samples {
        let g = sample_interaction(n, &mut r).matrix();
        stats.push(&(heisenberg(eigs, &g, x) * heisenberg(eigs, &g, y)));
    }
    let se = stats.std_error();
    (stats.into_mean(), se)
}

/// Monte Carlo estimate of `E_G[G(x) |a⟩⟨b| G(y)]`.
pub fn heisenberg_sandwich_mc(
    eigs: &[f64],
    x: f64,
    y: f64,
    a: usize,
    b: usize,
    samples: usize,
    seed: u64,
) -> (CMatrix, nalgebra::DMatrix<f64>) {
    let n = eigs.len();
    let mut stats = MatrixStats::new(n, n);
    let mut r = rng::stream(seed, &[0x5341_4e44, n as u64]);
    for _ in 0..samples {
        let g = sample_interaction(n, &mut r).matrix();
        let gx = heisenberg(eigs, &g, x);
        let gy = heisenberg(eigs, &g, y);
        // G(x)|a⟩⟨b|G(y) = (column a of G(x)) (row b of G(y))
        let m = CMatrix::from_fn(n, n, |r_, c| gx[(r_, a)] * gy[(b, c)]);
        stats.push(&m);
    }
    let se = stats.std_error();
    (stats.into_mean(), se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_equal_indices() {
        for d in 2..6 {
            let df = d as f64;
            assert!((haar_second_moment(d, [0; 8]) - 2.0 / (df * (df + 1.0))).abs() < 1e-15);
        }
        assert!((haar_second_moment(2, [0; 8]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dim_one_is_phase() {
        let mut r = rng::stream(3, &[]);
        let u = sample_haar_unitary(1, &mut r);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_interaction() {
        let g = RandomInteraction::zero(3).matrix();
        assert_eq!(operator::max_abs(&g), 0.0);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::identity(2, 2).scale(2.0);
        assert!(RandomInteraction::new(m, DVector::zeros(2)).is_err());
    }

    #[test]
    fn expected_forms_at_equal_times() {
        // x = y: E[G^2] = I
        let eigs = [0.0, 1.0, 2.5];
        let m = heisenberg_product_expected(&eigs, 0.7, 0.7);
        assert!(operator::max_abs(&(m - CMatrix::identity(3, 3))) < 1e-15);
        // E[G |a⟩⟨a| G] has trace 1
        let s = heisenberg_sandwich_expected(&eigs, 0.3, 0.3, 1, 1);
        assert!((s.trace() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
