//! Deterministic discrete-event simulation of the protocol.
//!
//! A [`Scenario`] describes topology, schedules, loss, and faults; [`run`]
//! executes it and returns the [`TraceLedger`]. Identical scenarios produce
//! byte-identical ledgers. For inspection beyond the ledger (ring, tree,
//! final node states) drive [`Engine`] directly.

mod engine;
mod ledger;
mod scenario;

pub use engine::Engine;
pub use ledger::{LedgerError, LedgerEvent, PubTxView, PubView, TraceLedger};
pub use scenario::{
    AppAction, AppEvent, FaultEvent, FaultKind, RootPolicy, Scenario, TopologySource,
};

use thiserror::Error;

use crate::pubsub::Tick;
use crate::topology::TopologyError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("churn at t={time}: {detail}")]
    ChurnInvalid { time: Tick, detail: String },
    #[error("cannot read topology file {path}: {err}")]
    TopologyFile { path: String, err: String },
}

/// Builds the world described by the scenario and runs it to the configured
/// duration.
pub fn run(scenario: &Scenario) -> Result<TraceLedger, SimError> {
    Engine::new(scenario.clone())?.run_to_end()
}
