//! Simulation and analysis of single-ancilla repeated-interaction thermal
//! state preparation.
//!
//! A system with Hamiltonian `H_S` is repeatedly coupled to a fresh qubit
//! ancilla at inverse temperature `β` through a random interaction
//! `G = U D U†` (Haar `U`, Gaussian `D`), evolved for time `t`, and the
//! ancilla is discarded. [`channel`] simulates this exactly by Monte Carlo;
//! [`weak_coupling`] is the second-order Markov-chain model of the same
//! process; [`planner`] turns accuracy targets into `(α, t, L)`; and
//! [`harness`] runs the experiment families and writes CSV/JSON records.
//!
//! All states are expressed in the working basis of the [`Hamiltonian`]
//! (its eigenbasis unless a dense matrix was loaded).

pub mod channel;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod haar;
pub mod operator;
pub mod planner;
pub mod rng;
pub mod state;
pub mod stats;
pub mod weak_coupling;

pub use channel::{ChannelParams, GammaPolicy, Trajectory};
pub use error::{Error, Result};
pub use hamiltonian::{Beta, EnvQubit, Hamiltonian, SpectralProfile};
pub use operator::{CMatrix, C64};
pub use state::DensityMatrix;
pub use weak_coupling::TransitionGenerator;
