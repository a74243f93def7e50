use super::{BoostError, GradientKind};
use crate::logic::{PredicateSignature, Schema};
use crate::regtree::{RegressionTree, TreeError};
use crate::textio::{header_fields, numbered, real, required, target_signature};

/// ψ0 plus an ordered list of trees for one binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub target: PredicateSignature,
    pub psi0: f64,
    pub trees: Vec<RegressionTree>,
    pub kind: GradientKind,
}

fn perr(line: usize, msg: impl Into<String>) -> BoostError {
    BoostError::Parse { line, msg: msg.into() }
}

impl BoostedModel {
    pub fn new(target: PredicateSignature, kind: GradientKind) -> Self {
        BoostedModel { target, psi0: 0.0, trees: Vec::new(), kind }
    }

    /// Header line followed by the tree blocks.
    pub fn serialize(&self) -> String {
        let kind = match self.kind {
            GradientKind::Hard => "hard".to_string(),
            GradientKind::Soft { alpha, beta } => format!("soft:{alpha:?},{beta:?}"),
        };
        let mut out = format!("model rfgb target={} kind={kind} psi0={:?}\n", self.target.key(), self.psi0);
        for t in &self.trees {
            out.push_str(&t.serialize());
        }
        out
    }

    pub fn parse(text: &str, schema: &Schema) -> Result<BoostedModel, BoostError> {
        let mut lines = numbered(text);
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty model file"))?;
        let fields = header_fields(header, "model rfgb").map_err(|m| perr(hline, m))?;
        let target = target_signature(required(&fields, "target").map_err(|m| perr(hline, m))?, schema)
            .map_err(|m| perr(hline, m))?;
        let kind_text = required(&fields, "kind").map_err(|m| perr(hline, m))?;
        let kind = if kind_text == "hard" {
            GradientKind::Hard
        } else {
            let costs = kind_text.strip_prefix("soft:").ok_or_else(|| perr(hline, format!("unknown kind `{kind_text}`")))?;
            let (a, b) = costs.split_once(',').ok_or_else(|| perr(hline, "expected soft:<alpha>,<beta>"))?;
            GradientKind::Soft { alpha: real(a).map_err(|m| perr(hline, m))?, beta: real(b).map_err(|m| perr(hline, m))? }
        };
        let psi0 = real(required(&fields, "psi0").map_err(|m| perr(hline, m))?).map_err(|m| perr(hline, m))?;
        let mut trees = Vec::new();
        let mut rest = lines.peekable();
        while rest.peek().is_some() {
            let tree = RegressionTree::read(&mut rest, schema).map_err(|e| match e {
                TreeError::Parse { line, msg } => perr(line, msg),
                other => BoostError::Tree(other),
            })?;
            if tree.arity != target.arity {
                return Err(perr(hline, format!("tree arity {} does not match target", tree.arity)));
            }
            trees.push(tree);
        }
        Ok(BoostedModel { target, psi0, trees, kind })
    }
}
