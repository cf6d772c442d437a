//! Running means and standard errors.

use nalgebra::DMatrix;

use crate::operator::{CMatrix, C64};

/// Welford accumulator for real samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Entrywise Welford accumulator for complex matrices. The standard error of
/// a complex entry is `sqrt(Σ|x - x̄|² / (n(n-1)))`.
#[derive(Debug, Clone)]
pub struct MatrixStats {
    n: u64,
    mean: CMatrix,
    m2: DMatrix<f64>,
}

impl MatrixStats {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { n: 0, mean: CMatrix::zeros(rows, cols), m2: DMatrix::zeros(rows, cols) }
    }

    pub fn push(&mut self, x: &CMatrix) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for ((m, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x.iter()) {
            let d: C64 = v - *m;
            *m += d * inv;
            *m2 += (d.conj() * (v - *m)).re;
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &CMatrix {
        &self.mean
    }

    pub fn into_mean(self) -> CMatrix {
        self.mean
    }

    pub fn std_error(&self) -> DMatrix<f64> {
        if self.n < 2 {
            return DMatrix::zeros(self.mean.nrows(), self.mean.ncols());
        }
        let denom = (self.n * (self.n - 1)) as f64;
        self.m2.map(|v| (v.max(0.0) / denom).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_stats_match_two_pass() {
        let xs = [1.0, 4.0, 2.5, -1.0, 3.0];
        let s: RunningStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-13);
        assert!((s.std_error() - (var / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn matrix_stats_complex_se() {
        let mut s = MatrixStats::new(1, 1);
        let xs = [C64::new(1.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -2.0)];
        for x in xs {
            s.push(&CMatrix::from_element(1, 1, x));
        }
        let mean: C64 = xs.iter().sum::<C64>() / 3.0;
        let ss: f64 = xs.iter().map(|x| (x - mean).norm_sqr()).sum();
        assert!((s.mean()[(0, 0)] - mean).norm() < 1e-15);
        assert!((s.std_error()[(0, 0)] - (ss / 6.0).sqrt()).abs() < 1e-14);
    }
}
