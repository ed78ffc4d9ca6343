//! Optimal monitoring contract for a pool of loans financed by outside investors.
//!
//! The crate solves the investors' value functions `v_1..v_I`, turns them
//! into the feedback contract that pays the bank, and checks both by exact
//! event-driven Monte Carlo simulation of defaults.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hjbsolve;
pub mod mcsim;
pub mod params;
pub mod policy;
pub mod quadrature;

pub use error::{Error, Result};
pub use hjbsolve::{build_all, SolverSettings, ValueFunctions};
pub use params::{derive, DerivedQuantities, PoolParams};
