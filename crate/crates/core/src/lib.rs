//! Nearest-neighbor spin systems on regular graphs.
//!
//! A site flips `0 -> 1` at rate `λ_k` and `1 -> 0` at rate `μ_k`, where `k` is
//! its number of occupied neighbors. The crate provides graph builders,
//! per-configuration statistics, rate-table classification, the generator
//! applied to the coverage observable, closed-form mean coverage for the
//! solvable families, an exact solver on the full state space and a Gillespie
//! simulator.

pub mod closed_form;
pub mod configuration;
pub mod error;
pub mod exact;
pub mod generator;
pub mod gillespie;
pub mod graph;
pub mod rates;
pub mod stats;

pub use configuration::Configuration;
pub use error::{Error, Result};
pub use graph::{Graph, NamedGraph};
pub use rates::{ModelLabel, ModelParams, RateTable};
