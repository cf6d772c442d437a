//! Times single channel applications for a few system sizes.
use std::time::Instant;

use ancilla::channel::Channel;
use ancilla::{Beta, ChannelParams, DensityMatrix, GammaPolicy, Hamiltonian};

fn main() {
    for dim in [2usize, 3, 4, 6, 8] {
        let h = Hamiltonian::harmonic(dim, 1.0).unwrap();
        let params = ChannelParams::new(0.02, 6.0, Beta::Finite(1.0), GammaPolicy::Fixed { gamma: 1.0 });
        let ch = Channel::new(&h, params).unwrap();
        let mut rho = DensityMatrix::maximally_mixed(dim);
        let n = 20_000;
        let t0 = Instant::now();
        for k in 0..n {
            rho = ch.apply(&rho, 0, k).unwrap();
        }
        println!("dim {dim}: {:.2} us/step", t0.elapsed().as_secs_f64() * 1e6 / n as f64);
    }
}
