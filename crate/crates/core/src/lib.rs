//! Joint user association and resource allocation for two-tier cellular
//! networks, posed as a utility maximization over flows, bandwidth and
//! interference and attacked through its Lagrangian dual.

pub mod association;
pub mod cellular;
pub mod dual;
pub mod error;
pub mod eval;
pub mod problem;
pub mod scenario;
pub mod sparse;

pub use error::{Error, Result};
