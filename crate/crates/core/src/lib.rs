//! Robust Markov decision processes with s-rectangular ambiguity sets.
//!
//! The robust Bellman operator is evaluated by bisection on the state
//! value, with one generalized projection per action at every step.

pub mod ambiguity;
pub mod bellman;
pub mod error;
pub mod mdp;
pub mod oracle;
pub mod projections;

pub use ambiguity::{calibrate_radius, deviation, AmbiguityKind, AmbiguitySpec};
pub use bellman::{
    budget_sensitivity_check, robust_bellman, robust_bellman_state, robust_value_iteration, BellmanConfig,
    BellmanResult, DeltaPolicy, StateUpdate, VISolution,
};
pub use error::{Error, Result};
pub use mdp::{MdpInstance, ValidationReport, ValueVector};
