#![allow(dead_code)]

use ancilla::operator::{CMatrix, C64};
use ancilla::rng;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn stream(seed: u64) -> rng::Stream {
    rng::stream(seed, &[0x7e57])
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, r: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
    (&a + a.adjoint()).scale(0.5)
}

/// `e^{iHt}` by scaled Taylor series and repeated squaring.
pub fn expm_taylor(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let norm: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let a = h.scale(t / 2f64.powi(squarings as i32)) * C64::new(0.0, 1.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

pub fn sinc2(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (x.sin() / x).powi(2)
    }
}
