//! System Hamiltonians, Gibbs states, spectral statistics and the ancilla state.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::operator::{self, CMatrix, C64};
use crate::state::DensityMatrix;

/// Relative tolerance used to decide that two eigenvalues (or two eigenvalue
/// differences) coincide.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Inverse temperature. `Infinite` is the zero-temperature limit and is
/// handled as its own case rather than as a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            Err(invalid(format!("inverse temperature must be >= 0, got {beta}")))
        } else if beta.is_infinite() {
            Ok(Beta::Infinite)
        } else {
            Ok(Beta::Finite(beta))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Beta::new(b).map_err(serde::de::Error::custom),
            Raw::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "+inf") => Ok(Beta::Infinite),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Ground-state weight `1/(1+e^{-βγ})` of a two-level system with gap `γ`.
pub fn ground_weight(beta: Beta, gamma: f64) -> f64 {
    match beta {
        Beta::Infinite => {
            if gamma >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Beta::Finite(b) => {
            let x = b * gamma;
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        }
    }
}

/// Excited-state weight `e^{-βγ}/(1+e^{-βγ})`.
pub fn excited_weight(beta: Beta, gamma: f64) -> f64 {
    match beta {
        Beta::Infinite => 1.0 - ground_weight(beta, gamma),
        Beta::Finite(_) => ground_weight(beta, -gamma),
    }
}

/// The ancilla qubit `diag(q0, q1)` with Hamiltonian `diag(0, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvQubit {
    pub gamma: f64,
    pub beta: Beta,
    pub q0: f64,
    pub q1: f64,
}

impl EnvQubit {
    pub fn new(gamma: f64, beta: Beta) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(invalid(format!("ancilla gap must be finite and >= 0, got {gamma}")));
        }
        Ok(Self { gamma, beta, q0: ground_weight(beta, gamma), q1: excited_weight(beta, gamma) })
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::from_populations(&[self.q0, self.q1]).expect("ancilla weights form a distribution")
    }
}

/// A Hermitian system operator stored through its spectrum. Eigenvalues are
/// sorted ascending; the optional eigenbasis maps eigenbasis coordinates to
/// the working basis (identity when absent).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    label: String,
    eigenvalues: Vec<f64>,
    eigenbasis: Option<CMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
enum HamiltonianFile {
    Diagonal {
        #[serde(default)]
        label: String,
        eigenvalues: Vec<f64>,
    },
    Dense {
        #[serde(default)]
        label: String,
        dim: usize,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
}

impl Hamiltonian {
    pub fn from_eigenvalues(label: impl Into<String>, eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(invalid("Hamiltonian needs at least one eigenvalue"));
        }
        if let Some(x) = eigenvalues.iter().find(|x| !x.is_finite()) {
            return Err(invalid(format!("non-finite eigenvalue {x}")));
        }
        let mut ev = eigenvalues.to_vec();
        ev.sort_by(f64::total_cmp);
        Ok(Self { label: label.into(), eigenvalues: ev, eigenbasis: None })
    }

    /// Eigendecomposes a dense Hermitian matrix given in the working basis.
    pub fn from_dense(label: impl Into<String>, m: &CMatrix) -> Result<Self> {
        let eig = operator::hermitian_eigen_tol(m, 1e-10)?;
        Ok(Self {
            label: label.into(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenbasis: Some(eig.eigenvectors),
        })
    }

    /// Eigenvalues `(0, Δ)`.
    pub fn qubit(gap: f64) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(invalid(format!("qubit gap must be positive, got {gap}")));
        }
        Self::from_eigenvalues(format!("qubit(gap={gap})"), &[0.0, gap])
    }

    /// Truncated harmonic oscillator with eigenvalues `iΔ`, `1 ≤ i ≤ dim`.
    pub fn harmonic(dim: usize, gap: f64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("harmonic oscillator needs dim >= 2, got {dim}")));
        }
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(invalid(format!("oscillator gap must be positive, got {gap}")));
        }
        let ev: Vec<f64> = (1..=dim).map(|i| i as f64 * gap).collect();
        Self::from_eigenvalues(format!("harmonic(dim={dim},gap={gap})"), &ev)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<HamiltonianFile>(text)? {
            HamiltonianFile::Diagonal { label, eigenvalues } => Self::from_eigenvalues(label, &eigenvalues),
            HamiltonianFile::Dense { label, dim, re, im } => {
                if re.len() != dim || im.len() != dim || re.iter().chain(im.iter()).any(|r| r.len() != dim) {
                    return Err(Error::Dimension(format!("dense Hamiltonian rows do not match dim={dim}")));
                }
                let m = CMatrix::from_fn(dim, dim, |i, j| C64::new(re[i][j], im[i][j]));
                Self::from_dense(label, &m)
            }
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = match &self.eigenbasis {
            None => HamiltonianFile::Diagonal { label: self.label.clone(), eigenvalues: self.eigenvalues.clone() },
            Some(_) => {
                let m = self.matrix();
                let n = self.dim();
                HamiltonianFile::Dense {
                    label: self.label.clone(),
                    dim: n,
                    re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
                    im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
                }
            }
        };
        serde_json::to_string(&file).expect("Hamiltonian serializes")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `W H W†`: same spectrum, eigenbasis rotated by the unitary `W`.
    pub fn rotated(&self, w: &CMatrix) -> Result<Self> {
        if w.shape() != (self.dim(), self.dim()) {
            return Err(Error::Dimension("rotation must match the Hamiltonian dimension".into()));
        }
        let basis = match &self.eigenbasis {
            Some(v) => w * v,
            None => w.clone(),
        };
        Ok(Self { label: self.label.clone(), eigenvalues: self.eigenvalues.clone(), eigenbasis: Some(basis) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> Option<&CMatrix> {
        self.eigenbasis.as_ref()
    }

    /// `‖H‖ = max |λ|`.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn degeneracy_tol(&self) -> f64 {
        DEGENERACY_RTOL * self.spectral_norm()
    }

    pub fn is_nondegenerate(&self) -> bool {
        let tol = self.degeneracy_tol();
        self.eigenvalues.windows(2).all(|w| w[1] - w[0] > tol)
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Dense matrix in the working basis.
    pub fn matrix(&self) -> CMatrix {
        let d = operator::real_diagonal(&self.eigenvalues);
        match &self.eigenbasis {
            None => d,
            Some(v) => operator::hermitian_part(&(v * d * v.adjoint())),
        }
    }

    /// Eigenbasis populations `⟨i|V†ρV|i⟩`.
    pub fn populations(&self, rho: &DensityMatrix) -> Vec<f64> {
        match &self.eigenbasis {
            None => rho.populations(),
            Some(v) => {
                let m = v.adjoint() * rho.matrix() * v;
                (0..self.dim()).map(|i| m[(i, i)].re).collect()
            }
        }
    }

    /// Working-basis state that is diagonal in the eigenbasis with populations `p`.
    pub fn state_from_populations(&self, p: &[f64]) -> Result<DensityMatrix> {
        if p.len() != self.dim() {
            return Err(Error::Dimension(format!("{} populations for a dim-{} system", p.len(), self.dim())));
        }
        let d = operator::real_diagonal(p);
        match &self.eigenbasis {
            None => DensityMatrix::new(d),
            Some(v) => DensityMatrix::new(operator::hermitian_part(&(v * d * v.adjoint()))),
        }
    }

    /// Gibbs populations `e^{-βλ_i}/Z` in the eigenbasis.
    pub fn gibbs_populations(&self, beta: Beta) -> Result<Vec<f64>> {
        let lo = self.eigenvalues[0];
        match beta {
            Beta::Infinite => {
                if self.dim() > 1 && self.eigenvalues[1] - lo <= self.degeneracy_tol() {
                    return Err(Error::Degenerate("ground space is degenerate; the zero-temperature state is not unique".into()));
                }
                let mut p = vec![0.0; self.dim()];
                p[0] = 1.0;
                Ok(p)
            }
            Beta::Finite(b) => {
                let w: Vec<f64> = self.eigenvalues.iter().map(|&l| (-b * (l - lo)).exp()).collect();
                let z: f64 = w.iter().sum();
                Ok(w.into_iter().map(|x| x / z).collect())
            }
        }
    }

    pub fn gibbs_state(&self, beta: Beta) -> Result<DensityMatrix> {
        self.state_from_populations(&self.gibbs_populations(beta)?)
    }

    pub fn spectral_profile(&self) -> Result<SpectralProfile> {
        SpectralProfile::new(self, self.degeneracy_tol())
    }
}

/// Eigenvalue-difference statistics of a Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralProfile {
    /// `Δ(i,j) = λ_i - λ_j`.
    pub differences: Vec<Vec<f64>>,
    /// Minimum separation between distinct differences, zero included.
    pub delta_min: f64,
    /// Distinct positive differences, ascending (first member of each cluster).
    pub distinct_gaps: Vec<f64>,
    /// Number of ordered pairs `i > j` realizing each distinct gap.
    pub multiplicities: Vec<usize>,
    pub spectral_norm: f64,
    pub tol: f64,
    #[serde(skip)]
    gap_class: Vec<Vec<Option<usize>>>,
}

impl SpectralProfile {
    pub fn new(h: &Hamiltonian, tol: f64) -> Result<Self> {
        let ev = h.eigenvalues();
        let n = ev.len();
        let differences: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| ev[i] - ev[j]).collect()).collect();

        let mut positive: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..i {
                if differences[i][j] > tol {
                    positive.push((differences[i][j], i, j));
                }
            }
        }
        if positive.is_empty() {
            return Err(Error::Degenerate("all eigenvalues coincide; delta_min is undefined".into()));
        }
        positive.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut distinct_gaps: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        let mut gap_class = vec![vec![None; n]; n];
        let mut prev = f64::NEG_INFINITY;
        for &(d, i, j) in &positive {
            if d - prev > tol {
                distinct_gaps.push(d);
                multiplicities.push(0);
            }
            prev = d;
            let k = distinct_gaps.len() - 1;
            multiplicities[k] += 1;
            gap_class[i][j] = Some(k);
            gap_class[j][i] = Some(k);
        }

        let mut values: Vec<f64> = positive.iter().map(|p| p.0).collect();
        values.push(0.0);
        let mut delta_min = f64::INFINITY;
        for a in 0..values.len() {
            for b in 0..a {
                let gap = (values[a] - values[b]).abs();
                if gap > tol && gap < delta_min {
                    delta_min = gap;
                }
            }
        }

        Ok(Self { differences, delta_min, distinct_gaps, multiplicities, spectral_norm: h.spectral_norm(), tol, gap_class })
    }

    pub fn dim(&self) -> usize {
        self.differences.len()
    }

    /// `η_Δ(i,j)`: how many pairs share the gap `|λ_i - λ_j|` (0 on the diagonal
    /// or for degenerate pairs).
    pub fn eta(&self, i: usize, j: usize) -> usize {
        self.gap_class[i][j].map_or(0, |k| self.multiplicities[k])
    }

    /// The distinct positive differences as `(gap, η)`.
    pub fn gap_multiplicities(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.distinct_gaps.iter().copied().zip(self.multiplicities.iter().copied())
    }

    /// `min_{i>1} Σ_{j<i} η_Δ(i,j)`.
    pub fn min_cooling_multiplicity(&self) -> usize {
        (1..self.dim()).map(|i| (0..i).map(|j| self.eta(i, j)).sum()).min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_serde() {
        assert_eq!(serde_json::from_str::<Beta>("\"inf\"").unwrap(), Beta::Infinite);
        assert_eq!(serde_json::from_str::<Beta>("2.5").unwrap(), Beta::Finite(2.5));
        assert!(serde_json::from_str::<Beta>("-1").is_err());
        assert_eq!(serde_json::to_string(&Beta::Infinite).unwrap(), "\"inf\"");
    }

    #[test]
    fn env_qubit_limits() {
        let e = EnvQubit::new(1.0, Beta::Infinite).unwrap();
        assert_eq!((e.q0, e.q1), (1.0, 0.0));
        let e = EnvQubit::new(1.0, Beta::Finite(0.0)).unwrap();
        assert_eq!((e.q0, e.q1), (0.5, 0.5));
        let e = EnvQubit::new(2.0, Beta::Finite(800.0)).unwrap();
        assert_eq!(e.q1, 0.0);
        assert!(EnvQubit::new(-1.0, Beta::Infinite).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(Hamiltonian::qubit(0.0).is_err());
        assert!(Hamiltonian::harmonic(1, 1.0).is_err());
        assert!(Hamiltonian::from_eigenvalues("x", &[]).is_err());
        assert!(Hamiltonian::from_eigenvalues("x", &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn degenerate_ground_state_at_zero_temperature() {
        let h = Hamiltonian::from_eigenvalues("d", &[0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(h.gibbs_populations(Beta::Infinite), Err(Error::Degenerate(_))));
        assert!(!h.is_nondegenerate());
    }

    #[test]
    fn all_equal_has_no_delta_min() {
        let h = Hamiltonian::from_eigenvalues("flat", &[2.0, 2.0]).unwrap();
        assert!(matches!(h.spectral_profile(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(Hamiltonian::from_json("{\"format\":"), Err(Error::Json(_))));
        assert!(Hamiltonian::from_json("{\"format\":\"dense\",\"dim\":2,\"re\":[[0,1]],\"im\":[[0,0]]}").is_err());
    }

    #[test]
    fn json_round_trip() {
        let h = Hamiltonian::from_eigenvalues("three", &[0.0, 1.0, 2.5]).unwrap();
        let back = Hamiltonian::from_json(&h.to_json()).unwrap();
        assert_eq!(back.eigenvalues(), h.eigenvalues());
        assert_eq!(back.label(), "three");
    }
}
