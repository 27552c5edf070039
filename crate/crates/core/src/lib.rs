//! Patient-transfer networks from location event logs, and the
//! complex-network measures used to characterise them.

pub mod classify;
pub mod eventlog;
pub mod metrics;
pub mod network;
pub mod powerlaw;
pub mod regression;
pub mod report;
pub mod resilience;
pub mod seed;
pub mod smallworld;
pub mod synth;
mod traversal;

pub use eventlog::{AdmissionJourney, CategoryMap, LocationEvent, LogSchema};
pub use network::{build_network, NetworkBuilder, TransferNetwork};
