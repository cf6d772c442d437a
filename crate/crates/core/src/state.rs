use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{self, CMatrix, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace matrix.
///
/// [`DensityMatrix::new`] validates; states produced by the simulator are
/// wrapped without clipping and can be audited with [`DensityMatrix::validity`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

/// Measured deviations from the density-matrix conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub trace_error: f64,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn within(&self, trace_tol: f64, herm_tol: f64, psd_tol: f64) -> bool {
        self.trace_error <= trace_tol && self.hermitian_defect <= herm_tol && self.min_eigenvalue >= -psd_tol
    }
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(m)?;
        let v = rho.validity();
        if !v.within(TRACE_TOL, HERMITIAN_TOL, PSD_TOL) {
            return Err(Error::InvalidState(format!(
                "trace error {:.3e}, Hermitian defect {:.3e}, min eigenvalue {:.3e}",
                v.trace_error, v.hermitian_defect, v.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    /// Wraps a square matrix without checking positivity or trace.
    pub fn from_matrix_unchecked(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Dimension(format!("density matrix must be square and nonempty, got {:?}", m.shape())));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim).scale(1.0 / dim as f64) }
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(operator::real_diagonal(p))
    }

    /// `|i⟩⟨i|`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = C64::new(1.0, 0.0);
        Self { m }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `ψ`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi.unscale(n);
        Ok(Self { m: &v * v.adjoint() })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        operator::hermitian_eigenvalues(&self.m)
    }

    pub fn validity(&self) -> Validity {
        Validity {
            trace_error: (self.trace() - C64::new(1.0, 0.0)).norm(),
            hermitian_defect: operator::hermitian_defect(&self.m),
            min_eigenvalue: self.eigenvalues().first().copied().unwrap_or(0.0),
        }
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self { m: operator::kron(&self.m, &other.m) }
    }

    /// Reduced state after tracing out a trailing factor of dimension `dim_e`.
    pub fn partial_trace_env(&self, dim_e: usize) -> Result<DensityMatrix> {
        Ok(Self { m: operator::partial_trace_env(&self.m, dim_e)? })
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.shape() != self.m.shape() {
            return Err(Error::Dimension(format!("cannot conjugate {:?} state by {:?} unitary", self.m.shape(), u.shape())));
        }
        Ok(Self { m: u * &self.m * u.adjoint() })
    }

    /// Entrywise mean of equally weighted states.
    pub fn mean<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> Result<DensityMatrix> {
        let mut it = states.into_iter();
        let first = it.next().ok_or_else(|| Error::InvalidState("mean of no states".into()))?;
        let mut acc = first.m.clone();
        let mut n = 1usize;
        for s in it {
            if s.m.shape() != acc.shape() {
                return Err(Error::Dimension("states of different dimension".into()));
            }
            acc += &s.m;
            n += 1;
        }
        Ok(Self { m: acc.unscale(n as f64) })
    }
}

/// Schatten 1-norm `Σ|λ_k(ρ - σ)|` without the conventional factor 1/2.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    operator::trace_norm_distance(rho.matrix(), sigma.matrix())
}
