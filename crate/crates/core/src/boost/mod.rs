//! Relational functional gradient boosting for binary targets.
//!
//! `P(y=1 | x) = sigmoid(ψ(x))` with `ψ = ψ0 + Σ_m tree_m(x)`. The hard variant fits
//! trees to `label − p`. The soft-margin variant inserts costs into the normaliser of
//! the per-example objective
//!
//! ```text
//! f(ψ) = ψ_ŷ − ln Σ_{y'} exp(ψ_{y'} + c(ŷ, y')),   ψ_0 = 0, ψ_1 = ψ,
//! c(1, 0) = α (false negative),  c(0, 1) = β (false positive)
//! ```
//!
//! whose gradient is `I(ŷ=1) − λ·p`. Positive `α` pushes positives harder, positive
//! `β` pushes negatives harder; `α = β = 0` is exactly the hard gradient.

mod model;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::logic::{ExampleSet, FactBase, FactSource, LogicError, ModeSet, Value};
use crate::numeric::{clamp_psi, sigmoid, softplus};
use crate::regtree::{fit_tree_in, RegressionExample, RegressionTree, TreeConfig, TreeError, Vocabulary};

pub use model::BoostedModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoostError {
    #[error("training needs at least one positive and one negative example")]
    SingleClass,
    #[error("iterations must be at least 1")]
    NoIterations,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("examples are for `{found}` but the model targets `{expected}`")]
    TargetMismatch { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Which functional gradient the trees are fitted to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientKind {
    Hard,
    Soft { alpha: f64, beta: f64 },
}

impl GradientKind {
    pub fn costs(self) -> (f64, f64) {
        match self {
            GradientKind::Hard => (0.0, 0.0),
            GradientKind::Soft { alpha, beta } => (alpha, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub iterations: usize,
    pub tree: TreeConfig,
    /// Negatives kept per positive, re-drawn every iteration. `None` keeps all.
    pub neg_subsample_ratio: Option<f64>,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig { iterations: 20, tree: TreeConfig::default(), neg_subsample_ratio: None, seed: 0 }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), BoostError> {
        if self.iterations == 0 {
            return Err(BoostError::NoIterations);
        }
        if let Some(r) = self.neg_subsample_ratio {
            if !(r.is_finite() && r > 0.0) {
                return Err(BoostError::Config(format!("neg_subsample_ratio must be positive, got {r}")));
            }
        }
        self.tree.validate()?;
        Ok(())
    }
}

/// `1 / (1 + e^{−ψ})` on the clamped argument.
pub fn sigmoid_prob(psi: f64) -> f64 {
    sigmoid(psi)
}

pub fn hard_gradient(label: bool, p: f64) -> f64 {
    f64::from(u8::from(label)) - p
}

/// Cost factor λ multiplying `p` in the soft-margin gradient.
pub fn soft_lambda(label: bool, p: f64, alpha: f64, beta: f64) -> f64 {
    if label {
        1.0 / (p + (1.0 - p) * alpha.exp())
    } else {
        1.0 / (p + (1.0 - p) * (-beta).exp())
    }
}

/// `I(label) − λ·p` from a probability.
pub fn soft_gradient(label: bool, p: f64, alpha: f64, beta: f64) -> f64 {
    f64::from(u8::from(label)) - soft_lambda(label, p, alpha, beta) * p
}

/// The soft-margin gradient computed from ψ directly: `1 − σ(ψ − α)` for positives and
/// `−σ(ψ + β)` for negatives. Algebraically equal to [`soft_gradient`] at
/// `p = σ(ψ)`, and bit-identical to the hard gradient when `α = β = 0`.
pub fn soft_gradient_psi(label: bool, psi: f64, alpha: f64, beta: f64) -> f64 {
    if label {
        1.0 - sigmoid(psi - alpha)
    } else {
        -sigmoid(psi + beta)
    }
}

/// Per-example penalised log-likelihood `ψ_ŷ − ln Σ_{y'} e^{ψ_{y'} + c(ŷ,y')}`.
pub fn soft_objective(label: bool, psi: f64, alpha: f64, beta: f64) -> f64 {
    let psi = clamp_psi(psi);
    if label {
        // ψ − ln(e^ψ + e^α) = −ln(1 + e^{α−ψ})
        -softplus(alpha - psi)
    } else {
        // 0 − ln(1 + e^{ψ+β})
        -softplus(psi + beta)
    }
}

fn gradient(kind: GradientKind, label: bool, psi: f64) -> f64 {
    match kind {
        GradientKind::Hard => hard_gradient(label, sigmoid(psi)),
        GradientKind::Soft { alpha, beta } => soft_gradient_psi(label, psi, alpha, beta),
    }
}

fn labels(examples: &ExampleSet) -> Result<Vec<bool>, BoostError> {
    examples
        .entries()
        .iter()
        .map(|e| match e.value {
            Value::Bool(b) => Ok(b),
            other => Err(BoostError::Config(format!("`{}` has non-boolean label {other}", e.key()))),
        })
        .collect()
}

/// One regression example per entry, gradients at the model's current ψ.
pub fn gen_soft_examples(
    examples: &ExampleSet,
    model: &BoostedModel,
    db: &FactBase,
    kind: GradientKind,
) -> Result<Vec<RegressionExample>, BoostError> {
    let labels = labels(examples)?;
    Ok(examples
        .entries()
        .par_iter()
        .zip(labels.par_iter())
        .map(|(e, &y)| RegressionExample::new(e.clone(), gradient(kind, y, model.psi(e, db))))
        .collect())
}

/// Trains a boosted model. See [`train_logged`].
pub fn train(
    examples: &ExampleSet,
    db: &FactBase,
    modes: &ModeSet,
    config: &BoostConfig,
    kind: GradientKind,
) -> Result<BoostedModel, BoostError> {
    train_logged(examples, db, modes, config, kind).map(|(m, _)| m)
}

/// Trains a boosted model and returns, per iteration, the summed objective over all
/// examples after that iteration's tree was added.
pub fn train_logged(
    examples: &ExampleSet,
    db: &FactBase,
    modes: &ModeSet,
    config: &BoostConfig,
    kind: GradientKind,
) -> Result<(BoostedModel, Vec<f64>), BoostError> {
    config.validate()?;
    if let GradientKind::Soft { alpha, beta } = kind {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(BoostError::Config("alpha and beta must be finite".into()));
        }
    }
    let labels = labels(examples)?;
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(BoostError::SingleClass);
    }
    let mut model = BoostedModel::new(examples.target().clone(), kind);
    let vocab = Vocabulary::from_facts(db.schema().clone(), [db]);
    let entries = examples.entries();
    let mut psi = vec![model.psi0; entries.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (alpha, beta) = kind.costs();
    let mut log = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        let chosen: Vec<usize> = match config.neg_subsample_ratio {
            Some(r) => {
                let keep = ((r * pos.len() as f64).ceil() as usize).min(neg.len());
                let mut picked: Vec<usize> = sample(&mut rng, neg.len(), keep).into_iter().map(|j| neg[j]).collect();
                picked.extend(&pos);
                picked.sort_unstable();
                picked
            }
            None => (0..entries.len()).collect(),
        };
        let batch: Vec<RegressionExample> = chosen
            .par_iter()
            .map(|&i| RegressionExample::new(entries[i].clone(), gradient(kind, labels[i], psi[i])))
            .collect();
        let worlds: Vec<&dyn FactSource> = vec![db; batch.len()];
        let tree = fit_tree_in(&batch, &worlds, &vocab, modes, &config.tree)?;
        psi.par_iter_mut().zip(entries.par_iter()).for_each(|(p, e)| *p += tree.evaluate(e, db));
        model.trees.push(tree);
        log.push(labels.iter().zip(&psi).map(|(&y, &p)| soft_objective(y, p, alpha, beta)).sum());
    }
    Ok((model, log))
}

/// `P(target = true)` under the model.
pub fn predict(model: &BoostedModel, target: &crate::logic::GroundAtom, db: &FactBase) -> f64 {
    sigmoid_prob(model.psi(target, db))
}

/// Probabilities for every entry of an example set, in order.
pub fn predict_all(model: &BoostedModel, examples: &ExampleSet, db: &FactBase) -> Vec<f64> {
    examples.entries().par_iter().map(|e| predict(model, e, db)).collect()
}

impl BoostedModel {
    /// Sum of ψ0 and every tree's leaf value for `target`.
    pub fn psi(&self, target: &crate::logic::GroundAtom, db: &FactBase) -> f64 {
        self.trees.iter().fold(self.psi0, |acc, t: &RegressionTree| acc + t.evaluate(target, db))
    }
}
