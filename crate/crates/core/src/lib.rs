//! Tabular reinforcement learning under impaired observability.
//!
//! The crate simulates episodic MDPs whose state observations arrive with a
//! stochastic delay or go permanently missing, reformulates them as explicit
//! sparse augmented MDPs over observable histories, and runs three optimistic
//! online learners against exact dynamic-programming oracles.
//!
//! The exact-DP core (`mdp`, `channels`, `aug`, `oracle`) is generic over the
//! scalar type through [`Scalar`]; the online learners and the experiment
//! harness are pinned to `f64`.

pub mod aug;
pub mod channels;
pub mod harness;
pub mod learners;
pub mod mdp;
pub mod oracle;
pub mod policy;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the exact-DP core is generic over: f32 or f64.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("staleness unreachable: delta={delta} at (h={h}, s={s}, a={a})")]
    UnreachableStaleness { h: usize, s: usize, a: usize, delta: usize },
    #[error("augmented state cap exceeded: layer {layer} needs {size} state-actions (cap {cap})")]
    CapExceeded { layer: usize, size: usize, cap: usize },
    #[error("policy missing augmented state at layer {layer}: {state}")]
    PolicyGap { layer: usize, state: String },
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub type TabularMdp64 = mdp::TabularMdp<f64>;
pub type TabularMdp32 = mdp::TabularMdp<f32>;
pub type MarkovPolicy64 = mdp::MarkovPolicy<f64>;
pub type ValueTable64 = mdp::ValueTable<f64>;
pub type DelayModel64 = channels::DelayModel<f64>;
pub type MissingModel64 = channels::MissingModel<f64>;
pub type AugMdp64 = aug::AugMdp<f64>;
pub type ExecutablePolicy64 = policy::ExecutablePolicy<f64>;
