//! Stochastic execution, the amplitude-level oracle and monotone fuzzing.

mod fuzz;
mod sample;
mod simulate;
mod statevector;

pub use fuzz::{fuzz_with, monotone_fuzz, FuzzConfig, FuzzReport, FuzzWitness, MonotoneId};
pub use sample::{random_measurement, random_state, stream_rng, uniform_simplex, RNG_ID};
pub use simulate::{simulate, SimConfig, SimResult, TerminalStat, DEFAULT_BATCH};
pub use statevector::{statevector_oracle, StateVector, MAX_PARTIES};
