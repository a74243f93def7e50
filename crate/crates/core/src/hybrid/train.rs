use std::collections::BTreeMap;

use rayon::prelude::*;

use super::model::{Coefficient, Function, FunctionLabel, HybridModel};
use super::{gaussian_gradients, multinomial_gradient, multinomial_prob, poisson_gradient, DistributionKind, HybridError, SIGMA_FLOOR};
use crate::logic::{ExampleSet, FactBase, FactSource, ModeSet, Sym, Value, ValueKind};
use crate::numeric::clamp_psi;
use crate::regtree::{fit_tree_in, RegressionExample, TreeConfig, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub iterations: usize,
    pub tree: TreeConfig,
    /// Step size for class, rate and μ functions. `None` picks the per-kind default.
    pub eta: Option<f64>,
    /// Step size for the σ function. `None` picks the default.
    pub eta_sigma: Option<f64>,
    /// Continuous or count predicates that enter the scores linearly.
    pub parents: Vec<String>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig { iterations: 20, tree: TreeConfig::default(), eta: None, eta_sigma: None, parents: Vec::new() }
    }
}

impl HybridConfig {
    fn steps(&self, kind: DistributionKind) -> (f64, f64) {
        let eta = self.eta.unwrap_or(match kind {
            DistributionKind::Poisson => 0.5,
            _ => 1.0,
        });
        (eta, self.eta_sigma.unwrap_or(0.5))
    }

    fn validate(&self) -> Result<(), HybridError> {
        if self.iterations == 0 {
            return Err(HybridError::Config("iterations must be at least 1".into()));
        }
        for eta in [self.eta, self.eta_sigma].into_iter().flatten() {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(HybridError::Config(format!("step size must be positive, got {eta}")));
            }
        }
        self.tree.validate()?;
        Ok(())
    }
}

fn distribution(kind: ValueKind, target: &str) -> Result<DistributionKind, HybridError> {
    match kind {
        ValueKind::Boolean => Err(HybridError::BooleanTarget(target.to_string())),
        ValueKind::Multiclass(k) => Ok(DistributionKind::Multinomial { k }),
        ValueKind::Count => Ok(DistributionKind::Poisson),
        ValueKind::Continuous => Ok(DistributionKind::Gaussian),
    }
}

fn observed(examples: &ExampleSet, kind: DistributionKind) -> Result<Vec<Value>, HybridError> {
    examples
        .entries()
        .iter()
        .map(|e| {
            let ok = matches!(
                (kind, e.value),
                (DistributionKind::Multinomial { .. }, Value::Class(_))
                    | (DistributionKind::Poisson, Value::Count(_))
                    | (DistributionKind::Gaussian, Value::Real(_))
            );
            if ok {
                Ok(e.value)
            } else {
                Err(HybridError::ValueKind { key: e.key(), value: e.value.to_string() })
            }
        })
        .collect()
}

fn initial(kind: DistributionKind, ys: &[Value], n_coefs: usize) -> Vec<Function> {
    let n = ys.len() as f64;
    let mean = ys.iter().map(Value::as_f64).sum::<f64>() / n;
    let with_parents = |label, init| {
        let mut coefs = vec![Coefficient::new(init)];
        coefs.extend((1..n_coefs).map(|_| Coefficient::new(0.0)));
        Function { label, coefs }
    };
    match kind {
        DistributionKind::Multinomial { k } => (0..k).map(|c| with_parents(FunctionLabel::Class(c), 0.0)).collect(),
        DistributionKind::Poisson => vec![with_parents(FunctionLabel::Rate, clamp_psi(mean.ln()))],
        DistributionKind::Gaussian => {
            let var = ys.iter().map(|y| (y.as_f64() - mean).powi(2)).sum::<f64>() / n;
            vec![
                with_parents(FunctionLabel::Mu, mean),
                Function { label: FunctionLabel::Sigma, coefs: vec![Coefficient::new(var.sqrt().max(SIGMA_FLOOR))] },
            ]
        }
    }
}

/// Gradient of the log-likelihood with respect to each function's score.
fn score_gradients(kind: DistributionKind, y: Value, scores: &[f64]) -> Vec<f64> {
    match (kind, y) {
        (DistributionKind::Multinomial { .. }, Value::Class(c)) => multinomial_gradient(c as usize, &multinomial_prob(scores)),
        (DistributionKind::Poisson, Value::Count(n)) => vec![poisson_gradient(n, scores[0])],
        (DistributionKind::Gaussian, Value::Real(v)) => {
            let (dm, ds) = gaussian_gradients(v, scores[0], scores[1].max(SIGMA_FLOOR)).expect("sigma is floored");
            vec![dm, ds]
        }
        _ => unreachable!("values are checked before training"),
    }
}

/// Trains one hybrid model. See [`train_hybrid_logged`].
pub fn train_hybrid_one(
    examples: &ExampleSet,
    db: &FactBase,
    modes: &ModeSet,
    config: &HybridConfig,
) -> Result<HybridModel, HybridError> {
    train_hybrid_logged(examples, db, modes, config).map(|(m, _)| m)
}

/// Trains one model per example set, keyed by target predicate name.
pub fn train_hybrid(
    sets: &[ExampleSet],
    db: &FactBase,
    modes: &ModeSet,
    config: &HybridConfig,
) -> Result<BTreeMap<Sym, HybridModel>, HybridError> {
    let mut out = BTreeMap::new();
    for set in sets {
        out.insert(set.target().name.clone(), train_hybrid_one(set, db, modes, config)?);
    }
    Ok(out)
}

/// Trains a hybrid model and returns, per iteration, the summed training
/// log-likelihood after that iteration's trees were added.
///
/// Each iteration computes every gradient from the previous iteration's model, then
/// fits one tree per function and coefficient. The coefficient of parent `j` is fitted
/// to `x_j · g`, where `g` is the score gradient. Leaf values are multiplied by the
/// step size before the tree is appended.
pub fn train_hybrid_logged(
    examples: &ExampleSet,
    db: &FactBase,
    modes: &ModeSet,
    config: &HybridConfig,
) -> Result<(HybridModel, Vec<f64>), HybridError> {
    config.validate()?;
    let target = examples.target().clone();
    if examples.is_empty() {
        return Err(HybridError::NoExamples(target.key()));
    }
    let kind = distribution(target.kind, &target.key())?;
    let ys = observed(examples, kind)?;
    let schema = db.schema();
    let mut parents: Vec<Sym> = Vec::new();
    for p in &config.parents {
        let sig = schema.require(p)?;
        if !sig.kind.is_numeric() || sig.temporal || sig.arity != target.arity {
            return Err(HybridError::Config(format!(
                "parent `{p}` must be an atemporal count or continuous predicate of arity {}",
                target.arity
            )));
        }
        parents.push(sig.name.clone());
    }
    let (eta, eta_sigma) = config.steps(kind);
    let functions = initial(kind, &ys, parents.len() + 1);
    let mut model = HybridModel { target, kind, eta, eta_sigma, parents, functions };

    let entries = examples.entries();
    let xs: Vec<Vec<f64>> = entries.par_iter().map(|e| model.parent_values(e, db)).collect();
    // cache[f][c][i]: current value of coefficient c of function f on example i
    let mut cache: Vec<Vec<Vec<f64>>> =
        model.functions.iter().map(|f| f.coefs.iter().map(|c| vec![c.init; entries.len()]).collect()).collect();
    let vocab = Vocabulary::from_facts(schema.clone(), [db]);
    let worlds: Vec<&dyn FactSource> = vec![db; entries.len()];
    let mut log = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        let scores = scores_from(&cache, &xs);
        let grads: Vec<Vec<f64>> = (0..entries.len()).into_par_iter().map(|i| score_gradients(kind, ys[i], &scores[i])).collect();
        for (f, func) in model.functions.iter_mut().enumerate() {
            let step = if func.label == FunctionLabel::Sigma { eta_sigma } else { eta };
            for (c, coef) in func.coefs.iter_mut().enumerate() {
                let batch: Vec<RegressionExample> = entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let g = grads[i][f];
                        RegressionExample::new(e.clone(), if c == 0 { g } else { xs[i][c - 1] * g })
                    })
                    .collect();
                let tree = fit_tree_in(&batch, &worlds, &vocab, modes, &config.tree)?.scaled(step);
                cache[f][c].par_iter_mut().zip(entries.par_iter()).for_each(|(v, e)| *v += tree.evaluate(e, db));
                coef.trees.push(tree);
            }
        }
        let scores = scores_from(&cache, &xs);
        log.push(ys.iter().zip(&scores).map(|(&y, s)| model.log_likelihood(y, s)).sum());
    }
    Ok((model, log))
}

fn scores_from(cache: &[Vec<Vec<f64>>], xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..xs.len())
        .into_par_iter()
        .map(|i| {
            cache
                .iter()
                .map(|coefs| {
                    let mut s = coefs[0][i];
                    for (c, x) in coefs[1..].iter().zip(&xs[i]) {
                        s += x * c[i];
                    }
                    s
                })
                .collect()
        })
        .collect()
}
