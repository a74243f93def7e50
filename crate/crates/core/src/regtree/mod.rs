//! Relational regression trees: induction over gradient-valued examples, evaluation
//! and a line-oriented text format.
//!
//! A tree node holds a conjunction of literals. The succeeds-branch appends that
//! conjunction to the clause accumulated along the path, the fails-branch keeps the
//! path unchanged, so every root-to-leaf path reads as a clause whose head variables
//! (`A`, `B`, ...) are bound to the target's arguments.

mod candidates;
mod fit;
mod io;

use thiserror::Error;

use crate::logic::{format_literals, head_bindings, holds, FactBase, FactSource, GroundAtom, Literal, LogicError};

pub use candidates::{candidates, Vocabulary};
pub use fit::{fit_tree, fit_tree_in, score_split, sse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("no training examples")]
    NoExamples,
    #[error("{0} examples but {1} worlds")]
    WorldCount(usize, usize),
    #[error("invalid tree configuration: {0}")]
    Config(String),
    #[error("non-finite gradient or weight for `{0}`")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// One training point: the target grounding, its gradient and a positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionExample {
    pub target: GroundAtom,
    pub gradient: f64,
    pub weight: f64,
}

impl RegressionExample {
    pub fn new(target: GroundAtom, gradient: f64) -> Self {
        RegressionExample { target, gradient, weight: 1.0 }
    }
}

/// Limits on tree size and on the candidate language.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// Maximum number of leaves L.
    pub max_leaves: usize,
    /// Longest conjunction a single node may add (lookahead).
    pub max_new_literals_per_node: usize,
    /// Maximum number of non-head variables along one path.
    pub max_fresh_variables: usize,
    pub min_examples_per_leaf: usize,
    /// Cap on `<c` / `>=c` thresholds proposed per numeric predicate.
    pub max_thresholds: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_leaves: 8,
            max_new_literals_per_node: 2,
            max_fresh_variables: 4,
            min_examples_per_leaf: 1,
            max_thresholds: 8,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_leaves < 2 {
            return Err(TreeError::Config(format!("max_leaves must be at least 2, got {}", self.max_leaves)));
        }
        if self.max_new_literals_per_node == 0 {
            return Err(TreeError::Config("max_new_literals_per_node must be at least 1".into()));
        }
        if self.min_examples_per_leaf == 0 {
            return Err(TreeError::Config("min_examples_per_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { value: f64 },
    Split { test: Vec<Literal>, yes: Box<Node>, no: Box<Node> },
}

impl Node {
    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { yes, no, .. } => yes.leaves() + no.leaves(),
        }
    }

    fn scale(&mut self, factor: f64) {
        match self {
            Node::Leaf { value } => *value *= factor,
            Node::Split { yes, no, .. } => {
                yes.scale(factor);
                no.scale(factor);
            }
        }
    }
}

/// A fitted tree for targets of a fixed arity.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub arity: usize,
    pub root: Node,
}

impl RegressionTree {
    pub fn leaf(arity: usize, value: f64) -> Self {
        RegressionTree { arity, root: Node::Leaf { value } }
    }

    pub fn num_leaves(&self) -> usize {
        self.root.leaves()
    }

    /// Multiplies every leaf value by `factor` (boosting step size).
    pub fn scaled(mut self, factor: f64) -> Self {
        self.root.scale(factor);
        self
    }

    /// The literals of the root test, if the root is a split.
    pub fn root_test(&self) -> Option<&[Literal]> {
        match &self.root {
            Node::Split { test, .. } => Some(test),
            Node::Leaf { .. } => None,
        }
    }

    pub fn root_test_text(&self) -> Option<String> {
        self.root_test().map(format_literals)
    }

    /// Leaf value reached by `target` in `db`.
    pub fn evaluate(&self, target: &GroundAtom, db: &FactBase) -> f64 {
        self.evaluate_in(target, db)
    }

    /// Leaf value reached by `target` in an arbitrary fact source.
    pub fn evaluate_in<S: FactSource + ?Sized>(&self, target: &GroundAtom, db: &S) -> f64 {
        let mut b = head_bindings(target);
        let mut path: Vec<Literal> = Vec::new();
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split { test, yes, no } => {
                    let len = path.len();
                    path.extend(test.iter().cloned());
                    if holds(&path, &mut b, db) {
                        node = yes;
                    } else {
                        path.truncate(len);
                        node = no;
                    }
                }
            }
        }
    }

    /// All leaf values in preorder.
    pub fn leaf_values(&self) -> Vec<f64> {
        fn walk(n: &Node, out: &mut Vec<f64>) {
            match n {
                Node::Leaf { value } => out.push(*value),
                Node::Split { yes, no, .. } => {
                    walk(yes, out);
                    walk(no, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_facts, parse_literal_list, Schema};
    use crate::numeric::sigmoid;
    use std::sync::Arc;

    fn job_schema() -> Arc<Schema> {
        Arc::new(
            Schema::parse(
                "pred: match/2.\npred: userCity/2.\npred: userSkill/2.\npred: recentTitle/2.\npred: applied/2.",
            )
            .unwrap(),
        )
    }

    /// Leftmost path: the user has city/skill/title on record and a user in the same
    /// city who applied to a shared job also applied to the target job.
    fn job_tree() -> RegressionTree {
        let s = job_schema();
        let lits = |t: &str| parse_literal_list(t, &s).unwrap();
        let inner = Node::Split {
            test: lits("userCity(V4,V1), applied(V4,V5), applied(A,V5), applied(V4,B)"),
            yes: Box::new(Node::Leaf { value: 0.827 }),
            no: Box::new(Node::Leaf { value: -0.2 }),
        };
        RegressionTree {
            arity: 2,
            root: Node::Split {
                test: lits("userCity(A,V1), userSkill(A,V2), recentTitle(A,V3)"),
                yes: Box::new(inner),
                no: Box::new(Node::Leaf { value: -0.5 }),
            },
        }
    }

    #[test]
    fn leftmost_path_value() {
        let db = parse_facts(
            "userCity(u1,austin).\nuserSkill(u1,java).\nrecentTitle(u1,dev).\n\
             userCity(u2,austin).\napplied(u2,j0).\napplied(u1,j0).\napplied(u2,j9).",
            job_schema(),
        )
        .unwrap();
        let tree = job_tree();
        let v = tree.evaluate(&GroundAtom::boolean("match", &["u1", "j9"]), &db);
        assert_eq!(v, 0.827);
        assert!((sigmoid(v) - 0.696).abs() < 5e-4);
        assert_eq!(tree.evaluate(&GroundAtom::boolean("match", &["u1", "j1"]), &db), -0.2);
        assert_eq!(tree.evaluate(&GroundAtom::boolean("match", &["u3", "j9"]), &db), -0.5);
    }

    #[test]
    fn absent_predicate_takes_fail_branch() {
        let db = FactBase::empty(job_schema());
        assert_eq!(job_tree().evaluate(&GroundAtom::boolean("match", &["a", "b"]), &db), -0.5);
        let single = RegressionTree::leaf(2, 1.25);
        assert_eq!(single.evaluate(&GroundAtom::boolean("match", &["a", "b"]), &db), 1.25);
        assert_eq!(job_tree().num_leaves(), 3);
        assert_eq!(job_tree().scaled(2.0).leaf_values(), [1.654, -0.4, -1.0]);
    }
}
