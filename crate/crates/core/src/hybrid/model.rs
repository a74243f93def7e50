use std::fmt;

use super::{multinomial_ll, multinomial_prob, gaussian_ll, poisson_ll, DistributionKind, HybridError, SIGMA_FLOOR};
use crate::logic::{FactBase, GroundAtom, PredicateSignature, Schema, Sym, Value};
use crate::numeric::clamp_psi;
use crate::regtree::{RegressionTree, TreeError};
use crate::textio::{header_fields, numbered, real, required, target_signature};

/// Which distribution parameter a boosted function represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionLabel {
    Class(u32),
    Rate,
    Mu,
    Sigma,
}

impl fmt::Display for FunctionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionLabel::Class(k) => write!(f, "class={k}"),
            FunctionLabel::Rate => f.write_str("rate"),
            FunctionLabel::Mu => f.write_str("mu"),
            FunctionLabel::Sigma => f.write_str("sigma"),
        }
    }
}

impl FunctionLabel {
    fn parse(text: &str) -> Option<FunctionLabel> {
        match text {
            "rate" => Some(FunctionLabel::Rate),
            "mu" => Some(FunctionLabel::Mu),
            "sigma" => Some(FunctionLabel::Sigma),
            _ => text.strip_prefix("class=")?.parse().ok().map(FunctionLabel::Class),
        }
    }
}

/// A boosted scalar function: initial value plus step-scaled trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub init: f64,
    pub trees: Vec<RegressionTree>,
}

impl Coefficient {
    pub fn new(init: f64) -> Self {
        Coefficient { init, trees: Vec::new() }
    }

    pub fn value(&self, target: &GroundAtom, db: &FactBase) -> f64 {
        self.trees.iter().fold(self.init, |acc, t| acc + t.evaluate(target, db))
    }
}

/// One distribution parameter. `coefs[0]` is the intercept ψ⁰, `coefs[j]` multiplies
/// the j-th continuous parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub label: FunctionLabel,
    pub coefs: Vec<Coefficient>,
}

/// Predicted distribution for one target grounding.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Classes(Vec<f64>),
    Rate(f64),
    Normal { mu: f64, sigma: f64 },
}

impl Prediction {
    /// Point prediction: most probable class, rate, or mean.
    pub fn point(&self) -> f64 {
        match self {
            Prediction::Classes(p) => {
                let mut best = 0;
                for (k, v) in p.iter().enumerate() {
                    if *v > p[best] {
                        best = k;
                    }
                }
                best as f64
            }
            Prediction::Rate(l) => *l,
            Prediction::Normal { mu, .. } => *mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub target: PredicateSignature,
    pub kind: DistributionKind,
    pub eta: f64,
    pub eta_sigma: f64,
    /// Continuous parent predicates, looked up with the target's arguments.
    pub parents: Vec<Sym>,
    pub functions: Vec<Function>,
}

fn perr(line: usize, msg: impl Into<String>) -> HybridError {
    HybridError::Parse { line, msg: msg.into() }
}

impl HybridModel {
    /// Parent values `x_j` for a target; a missing fact reads as 0.
    pub fn parent_values(&self, target: &GroundAtom, db: &FactBase) -> Vec<f64> {
        self.parents.iter().map(|p| db.value_of(p, &target.args).map_or(0.0, |v| v.as_f64())).collect()
    }

    /// Per-function scores `ψ⁰ + Σ_j x_j ψ^j`, in function order.
    pub fn scores(&self, target: &GroundAtom, db: &FactBase) -> Vec<f64> {
        let x = self.parent_values(target, db);
        self.functions.iter().map(|f| score(f, target, db, &x)).collect()
    }

    pub fn predict(&self, target: &GroundAtom, db: &FactBase) -> Prediction {
        self.prediction_from_scores(&self.scores(target, db))
    }

    pub(crate) fn prediction_from_scores(&self, s: &[f64]) -> Prediction {
        match self.kind {
            DistributionKind::Multinomial { .. } => Prediction::Classes(multinomial_prob(s)),
            DistributionKind::Poisson => Prediction::Rate(clamp_psi(s[0]).exp()),
            DistributionKind::Gaussian => Prediction::Normal { mu: s[0], sigma: s[1].max(SIGMA_FLOOR) },
        }
    }

    /// Log-likelihood of an observed value given function scores.
    pub fn log_likelihood(&self, value: Value, scores: &[f64]) -> f64 {
        match (self.kind, value) {
            (DistributionKind::Multinomial { .. }, Value::Class(k)) => multinomial_ll(k as usize, scores),
            (DistributionKind::Poisson, Value::Count(y)) => poisson_ll(y, scores[0]),
            (DistributionKind::Gaussian, Value::Real(y)) => gaussian_ll(y, scores[0], scores[1].max(SIGMA_FLOOR)),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn serialize(&self) -> String {
        let kind = match self.kind {
            DistributionKind::Multinomial { k } => format!("multinomial:{k}"),
            DistributionKind::Poisson => "poisson".into(),
            DistributionKind::Gaussian => "gaussian".into(),
        };
        let mut out = format!("model hybrid target={} kind={kind} eta={:?}", self.target.key(), self.eta);
        if self.kind == DistributionKind::Gaussian {
            out.push_str(&format!(" eta_sigma={:?}", self.eta_sigma));
        }
        if !self.parents.is_empty() {
            out.push_str(&format!(" parents={}", self.parents.join(",")));
        }
        out.push('\n');
        for f in &self.functions {
            for (j, c) in f.coefs.iter().enumerate() {
                out.push_str(&format!("function {} coef={j} init={:?}\n", f.label, c.init));
                for t in &c.trees {
                    out.push_str(&t.serialize());
                }
            }
        }
        out
    }

    pub fn parse(text: &str, schema: &Schema) -> Result<HybridModel, HybridError> {
        let mut lines = numbered(text).peekable();
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty model file"))?;
        let h = |m: String| perr(hline, m);
        let fields = header_fields(header, "model hybrid").map_err(h)?;
        let target = target_signature(required(&fields, "target").map_err(h)?, schema).map_err(h)?;
        let kind = match required(&fields, "kind").map_err(h)? {
            "poisson" => DistributionKind::Poisson,
            "gaussian" => DistributionKind::Gaussian,
            other => {
                let k = other
                    .strip_prefix("multinomial:")
                    .and_then(|k| k.parse().ok())
                    .filter(|&k: &u32| k >= 2)
                    .ok_or_else(|| perr(hline, format!("unknown kind `{other}`")))?;
                DistributionKind::Multinomial { k }
            }
        };
        let eta = real(required(&fields, "eta").map_err(h)?).map_err(h)?;
        let eta_sigma = match fields.get("eta_sigma") {
            Some(v) => real(v).map_err(h)?,
            None => eta,
        };
        let parents: Vec<Sym> = match fields.get("parents") {
            Some(list) => list.split(',').map(|p| schema.require(p).map(|s| s.name.clone())).collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let mut functions: Vec<Function> = Vec::new();
        while let Some(&(line, text)) = lines.peek() {
            if let Some(rest) = text.trim().strip_prefix("function ") {
                lines.next();
                let mut words = rest.split_whitespace();
                let label = words
                    .next()
                    .and_then(FunctionLabel::parse)
                    .ok_or_else(|| perr(line, format!("bad function label in `{text}`")))?;
                let joined = words.collect::<Vec<_>>().join(" ");
                let f = header_fields(&joined, "").map_err(|m| perr(line, m))?;
                let coef: usize = required(&f, "coef").map_err(|m| perr(line, m))?.parse().map_err(|_| perr(line, "bad coef"))?;
                let init = real(required(&f, "init").map_err(|m| perr(line, m))?).map_err(|m| perr(line, m))?;
                if coef == 0 {
                    functions.push(Function { label, coefs: Vec::new() });
                }
                let func = functions.last_mut().filter(|f| f.label == label && f.coefs.len() == coef);
                let func = func.ok_or_else(|| perr(line, "functions must list coef=0,1,... in order"))?;
                func.coefs.push(Coefficient::new(init));
            } else {
                let coef = functions
                    .last_mut()
                    .and_then(|f| f.coefs.last_mut())
                    .ok_or_else(|| perr(line, "tree outside a function block"))?;
                let tree = RegressionTree::read(&mut lines, schema).map_err(|e| match e {
                    TreeError::Parse { line, msg } => perr(line, msg),
                    other => HybridError::Tree(other),
                })?;
                coef.trees.push(tree);
            }
        }
        let model = HybridModel { target, kind, eta, eta_sigma, parents, functions };
        model.check_shape().map_err(|m| perr(hline, m))?;
        Ok(model)
    }

    fn check_shape(&self) -> Result<(), String> {
        let expected: Vec<FunctionLabel> = match self.kind {
            DistributionKind::Multinomial { k } => (0..k).map(FunctionLabel::Class).collect(),
            DistributionKind::Poisson => vec![FunctionLabel::Rate],
            DistributionKind::Gaussian => vec![FunctionLabel::Mu, FunctionLabel::Sigma],
        };
        let found: Vec<FunctionLabel> = self.functions.iter().map(|f| f.label).collect();
        if found != expected {
            return Err(format!("functions {found:?} do not match kind {:?}", self.kind));
        }
        for f in &self.functions {
            let want = if f.label == FunctionLabel::Sigma { 1 } else { self.parents.len() + 1 };
            if f.coefs.len() != want {
                return Err(format!("function {} needs {want} coefficients", f.label));
            }
        }
        Ok(())
    }
}

fn score(f: &Function, target: &GroundAtom, db: &FactBase, x: &[f64]) -> f64 {
    let mut s = f.coefs[0].value(target, db);
    for (c, xj) in f.coefs[1..].iter().zip(x) {
        s += xj * c.value(target, db);
    }
    s
}
