//! Random-pair EPR distillation of W-class states.
//!
//! The crate covers the exact component-vector representation of W-class
//! states, configuration graphs of target pairs, the three-phase "least
//! party out" protocol with its per-subset α optimization, closed-form upper
//! bounds and entanglement monotones, and a Monte Carlo / state-vector
//! verification layer.

pub mod bounds;
pub mod error;
pub mod evroutine;
pub mod graph;
pub mod lpo;
pub mod mc;
pub mod measurement;
pub mod outcome;
pub mod par;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{graph_catalog, ConfigGraph, GraphSpec};
pub use measurement::{apply_measurement, kt_averages, Branch, KrausOutcome, LocalMeasurement};
pub use outcome::{OutcomeDistribution, Terminal};
pub use state::{standard_w, WState};
