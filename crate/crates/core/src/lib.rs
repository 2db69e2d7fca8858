//! Simulator for LTE-U interference nulling toward WiFi nodes: ULA precoding with
//! LCMV nulls, ray-based channels, null-configuration search and CSAT timing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod campaign;
pub mod channel;
pub mod coexsim;
mod error;
pub mod nullsearch;
pub mod phy_grid;
pub mod protocol;
pub mod repro;
pub mod results;
pub mod scenario;

pub use error::{Error, Result};
