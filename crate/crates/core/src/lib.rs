//! Finite-key rate engine for sending-or-not-sending twin-field QKD with two-way
//! error rejection: the standard parity check (TWCC), odd-parity error rejection (OPER)
//! and active odd-parity pairing (AOPP).

// Negated comparisons are how the validators reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel_model;
pub mod decoy;
pub mod error;
pub mod key_rate;
pub mod ledger;
pub mod optimize;
pub mod pairing_stats;
pub mod pipeline;
pub mod sweep;
pub mod tail_bounds;
pub mod twcc;
pub mod validation;

pub use channel_model::{DeviceParams, ProtocolParams, SourceParams};
pub use error::{Error, Result};
pub use ledger::EpsBudget;
pub use pipeline::{evaluate, KeyRateReport, Pipeline, PipelineOptions};
pub use sweep::{sweep, SweepResult, SweepSettings};
pub use tail_bounds::FailureProb;
