//! Relational continuous-time Bayesian networks.
//!
//! A binary target transition is modelled by an intensity `q = e^φ` where `φ` is a
//! boosted relational function of the context in which the target sits. Training data
//! are segments cut from trajectories at every transition: a segment of length `T`
//! is positive when it ends with the target transition, with
//! `P(transition within T) = 1 − e^{−qT}`.

mod amalgam;
mod learn;
mod sample;
mod segment;
mod trajectory;

use std::fmt;

use thiserror::Error;

use crate::logic::{LogicError, Schema, Sym, Value, ValueKind};
use crate::numeric::clamp_psi;
use crate::regtree::TreeError;

pub use amalgam::{amalgamate, Cim, ConditionalCim};
pub use learn::{train_rctbn, train_rctbn_logged, RctbnConfig, RctbnModel};
pub use sample::{forward_sample, GroundTruthClause, GroundTruthSpec, Unit, VarSpec};
pub use segment::{segment, Segment};
pub use trajectory::{parse_trajectories, serialize_trajectories, Event, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RctbnError {
    #[error("trajectory `{entity}`: {msg}")]
    Trajectory { entity: String, msg: String },
    #[error("no positive segments for transition {0}")]
    NoPositives(String),
    #[error("no active clause for `{0}` in its current state")]
    NoActiveClause(String),
    #[error("invalid intensity matrix: {0}")]
    Cim(String),
    #[error("state space mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// A target transition `pred: from -> to` of a boolean stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub pred: Sym,
    pub from: Value,
    pub to: Value,
}

impl Transition {
    /// The onset transition `false -> true`.
    pub fn onset(pred: &str) -> Self {
        Transition { pred: crate::logic::sym(pred), from: Value::Bool(false), to: Value::Bool(true) }
    }

    /// Parses `pred:false->true` against a schema in which `pred` is a boolean
    /// temporal predicate.
    pub fn parse(text: &str, schema: &Schema) -> Result<Transition, RctbnError> {
        let bad = || RctbnError::Config(format!("expected `pred:from->to`, found `{text}`"));
        let (pred, states) = text.trim().split_once(':').ok_or_else(bad)?;
        let (from, to) = states.split_once("->").ok_or_else(bad)?;
        let sig = schema.require(pred)?;
        if !sig.temporal || sig.kind != ValueKind::Boolean {
            return Err(RctbnError::Config(format!("`{pred}` must be a boolean temporal predicate")));
        }
        let from = Value::parse(from, sig.kind).ok_or_else(bad)?;
        let to = Value::parse(to, sig.kind).ok_or_else(bad)?;
        if from == to {
            return Err(RctbnError::Config(format!("transition `{text}` does not change state")));
        }
        Ok(Transition { pred: sig.name.clone(), from, to })
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}->{}", self.pred, self.from, self.to)
    }
}

/// `1 − e^{−qT}`.
pub fn transition_prob(q: f64, t: f64) -> f64 {
    -(-q * t).exp_m1()
}

/// Gradient of a positive segment's log-likelihood in φ, written in terms of
/// `p = 1 − e^{−qT}`: `−(1−p) ln(1−p) / p`.
pub fn pos_gradient(p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    -(1.0 - p) * (-p).ln_1p() / p
}

/// Gradient of a negative segment's log-likelihood in φ: `ln(1−p) = −qT`.
pub fn neg_gradient(p: f64) -> f64 {
    (-p).ln_1p()
}

/// `x / (e^x − 1)` with `x = e^φ T`; equals [`pos_gradient`] at `p = 1 − e^{−x}`.
pub fn pos_gradient_phi(phi: f64, t: f64) -> f64 {
    let x = clamp_psi(phi).exp() * t;
    if x == 0.0 {
        return 1.0;
    }
    x / x.exp_m1()
}

/// `−e^φ T`.
pub fn neg_gradient_phi(phi: f64, t: f64) -> f64 {
    -clamp_psi(phi).exp() * t
}

/// `ln(1 − e^{−qT})` for a positive segment, `−qT` for a negative one.
pub fn segment_ll(positive: bool, phi: f64, t: f64) -> f64 {
    let x = clamp_psi(phi).exp() * t;
    if positive {
        if x < std::f64::consts::LN_2 {
            (-(-x).exp_m1()).ln()
        } else {
            (-(-x).exp()).ln_1p()
        }
    } else {
        -x
    }
}

pub fn intensity(phi: f64) -> f64 {
    clamp_psi(phi).exp()
}

pub fn expected_transition_time(q: f64) -> f64 {
    1.0 / q
}

pub fn exp_pdf(q: f64, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        q * (-q * t).exp()
    }
}

pub fn exp_cdf(q: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        transition_prob(q, t)
    }
}
