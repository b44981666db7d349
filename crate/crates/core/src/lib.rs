//! Kinetic models of wealth exchange between agents that can switch
//! between labelled subgroups.
//!
//! The crate offers three tiers that can be checked against each other:
//! a Nanbu-Babovski Monte Carlo of the agent system ([`nanbu`]), the
//! macroscopic equations for label masses and moments ([`macroscopic`]),
//! and the analytic steady state of the quasi-invariant limit
//! ([`fokker_planck`]). [`stats`] compares distributions and
//! [`experiment`] drives complete runs from a TOML config.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod fokker_planck;
pub mod macroscopic;
pub mod model;
pub mod nanbu;
pub mod output;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Agent, ExchangeRule, FrequencyMatrix, Label, TradeModelSpec, TransferKernel, TransferTable};
