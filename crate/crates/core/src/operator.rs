//! Dense complex linear algebra: Hermitian eigendecomposition, unitary time
//! evolution, tensor products, partial trace and trace distance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance for operator inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `max |A - A†|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |A_ij|`.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn is_hermitian(a: &CMatrix, rel_tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= rel_tol * max_abs(a).max(f64::MIN_POSITIVE)
}

/// `(A + A†) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition `H = V Λ V†` of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigen_tol(h, HERMITIAN_TOL)
}

pub fn hermitian_eigen_tol(h: &CMatrix, rel_tol: f64) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if !is_hermitian(h, rel_tol) {
        return Err(Error::NotHermitian { defect: hermitian_defect(h) });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(h), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending. The input is symmetrized first; callers are
/// responsible for it being Hermitian up to roundoff.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `V f(Λ) V†` for a diagonal function of the spectrum.
pub fn spectral_map(eig: &HermitianEigen, f: impl Fn(f64) -> C64) -> CMatrix {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (c, &lam) in eig.eigenvalues.iter().enumerate() {
        let w = f(lam);
        for r in 0..v.nrows() {
            scaled[(r, c)] *= w;
        }
    }
    scaled * v.adjoint()
}

/// `e^{+iHt}` through the eigendecomposition of `H`.
pub fn evolve(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("evolution time must be finite, got {t}")));
    }
    let eig = hermitian_eigen(h)?;
    Ok(spectral_map(&eig, |lam| C64::from_polar(1.0, lam * t)))
}

/// Kronecker product `A ⊗ B` in row-major (system-major) index order.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Traces out the trailing factor of dimension `dim_e`:
/// `(Tr_E ρ)_{ik} = Σ_e ρ_{(i,e),(k,e)}` with joint index `i·dim_e + e`.
pub fn partial_trace_env(rho: &CMatrix, dim_e: usize) -> Result<CMatrix> {
    if dim_e == 0 || !rho.is_square() || rho.nrows() % dim_e != 0 {
        return Err(Error::Dimension(format!(
            "cannot trace out a factor of dimension {dim_e} from a {}x{} matrix",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let ds = rho.nrows() / dim_e;
    Ok(CMatrix::from_fn(ds, ds, |i, k| {
        (0..dim_e).map(|e| rho[(i * dim_e + e, k * dim_e + e)]).sum()
    }))
}

/// Schatten 1-norm of `A - B` for Hermitian `A`, `B` (no factor 1/2).
pub fn trace_norm_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "trace distance between {:?} and {:?} matrices",
            a.shape(),
            b.shape()
        )));
    }
    Ok(hermitian_eigenvalues(&(a - b)).iter().map(|l| l.abs()).sum())
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn real_diagonal(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}
