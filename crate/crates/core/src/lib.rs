//! Consensus measures for system-environment states: mutual, conditional,
//! Holevo and refined mutual information over environment fragments, on
//! branching states, the c-maybe model and an all-to-all σz spin model.

pub mod cmaybe;
pub mod error;
pub mod experiment;
pub mod infotheory;
pub mod linalg;
pub mod measurement;
pub mod par;
pub mod qstate;
pub mod rng;
pub mod spinmodel;
pub mod verify;

pub use error::{QdcError, Result};
