//! Runtime prefetcher-configuration selection with a suite of per-PSC random
//! forests.
//!
//! The pipeline runs [`ingest`] → [`featsel`] → [`pscsel`] → [`train`] →
//! [`nodemem`] → [`hwsim`] / [`replay`]. Everything is deterministic in a
//! single seed; see [`rng`].

pub mod cart;
pub mod error;
pub mod featsel;
pub mod hwsim;
pub mod ingest;
pub mod nodemem;
pub mod pscsel;
pub mod replay;
pub mod rng;
pub mod synth;
pub mod train;
pub mod types;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, ErrorClass, Result};
pub use types::{
    compute_epti, scenario_count, Dataset, EptiVector, EventCatalog, EventId, Psc, PscCatalog,
    WindowRecord,
};
