//! Statistical relational learning toolkit.
//!
//! The crate is organised around a small first-order fact engine ([`logic`]) and a
//! relational regression-tree learner ([`regtree`]). On top of those sit the boosting
//! variants:
//!
//! * [`boost`]: binary relational functional gradient boosting with hard and
//!   soft-margin (cost-sensitive) gradients,
//! * [`hybrid`]: exponential-family boosting for multinomial, Poisson and Gaussian
//!   targets, including continuous parents,
//! * [`rctbn`]: relational continuous-time Bayesian networks (trajectory segmentation,
//!   intensity learning, forward sampling and CIM amalgamation).
//!
//! [`dbn`] scores and searches two-slice dynamic Bayesian networks, and [`metrics`]
//! provides the evaluation suite (weighted AUC-ROC, F-delta, confusion metrics).
//! [`cli`] is the batch frontend used by the `relboost` binary.

pub mod boost;
pub mod cli;
pub mod dbn;
pub mod hybrid;
pub mod logic;
pub mod metrics;
pub mod numeric;
pub mod rctbn;
pub mod regtree;
mod textio;

pub use logic::{FactBase, GroundAtom, PredicateSignature, Schema, Value, ValueKind};
