use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    neg_gradient_phi, pos_gradient_phi, segment, segment_ll, transition_prob, RctbnError, Segment, Trajectory,
    Transition,
};
use crate::logic::{FactBase, FactSource, GroundAtom, Layered, ModeSet, PredicateSignature, Schema};
use crate::numeric::clamp_psi;
use crate::regtree::{fit_tree_in, RegressionExample, RegressionTree, TreeConfig, TreeError, Vocabulary};
use crate::textio::{header_fields, numbered, real, required};

#[derive(Debug, Clone, PartialEq)]
pub struct RctbnConfig {
    pub iterations: usize,
    pub tree: TreeConfig,
    /// Most negative segments kept per trajectory, drawn with the seeded generator.
    pub neg_cap: Option<usize>,
    pub seed: u64,
}

impl Default for RctbnConfig {
    fn default() -> Self {
        RctbnConfig { iterations: 20, tree: TreeConfig::default(), neg_cap: None, seed: 0 }
    }
}

/// Boosted log-intensity `φ` for one transition; `q = e^φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RctbnModel {
    pub transition: Transition,
    /// State view of the target predicate.
    pub target: PredicateSignature,
    pub phi0: f64,
    pub trees: Vec<RegressionTree>,
}

fn perr(line: usize, msg: impl Into<String>) -> RctbnError {
    RctbnError::Parse { line, msg: msg.into() }
}

impl RctbnModel {
    /// `φ` for a target grounding in a state snapshot layered over relational facts.
    pub fn phi_in(&self, target: &GroundAtom, context: &FactBase, db: &FactBase) -> f64 {
        let world = Layered { base: db, top: context };
        self.trees.iter().fold(self.phi0, |acc, t| acc + t.evaluate_in(target, &world))
    }

    pub fn phi(&self, seg: &Segment, db: &FactBase) -> f64 {
        self.phi_in(&seg.target, &seg.context, db)
    }

    pub fn intensity(&self, seg: &Segment, db: &FactBase) -> f64 {
        clamp_psi(self.phi(seg, db)).exp()
    }

    /// Probability that the segment ends with the transition, `1 − e^{−qT}`.
    pub fn transition_prob(&self, seg: &Segment, db: &FactBase) -> f64 {
        transition_prob(self.intensity(seg, db), seg.residence)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("model rctbn transition={} phi0={:?}\n", self.transition, self.phi0);
        for t in &self.trees {
            out.push_str(&t.serialize());
        }
        out
    }

    /// Parses against the full schema; trees are read over its state view.
    pub fn parse(text: &str, schema: &Schema) -> Result<RctbnModel, RctbnError> {
        let mut lines = numbered(text).peekable();
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty model file"))?;
        let fields = header_fields(header, "model rctbn").map_err(|m| perr(hline, m))?;
        let transition = Transition::parse(required(&fields, "transition").map_err(|m| perr(hline, m))?, schema)?;
        let phi0 = real(required(&fields, "phi0").map_err(|m| perr(hline, m))?).map_err(|m| perr(hline, m))?;
        let view = schema.state_view();
        let target = view.require(&transition.pred)?.clone();
        let mut trees = Vec::new();
        while lines.peek().is_some() {
            let tree = RegressionTree::read(&mut lines, &view).map_err(|e| match e {
                TreeError::Parse { line, msg } => perr(line, msg),
                other => RctbnError::Tree(other),
            })?;
            if tree.arity != target.arity {
                return Err(perr(hline, format!("tree arity {} does not match target", tree.arity)));
            }
            trees.push(tree);
        }
        Ok(RctbnModel { transition, target, phi0, trees })
    }
}

/// Segments each trajectory and trains one model per transition.
pub fn train_rctbn(
    trajs: &[Trajectory],
    db: &FactBase,
    transitions: &[Transition],
    modes: &ModeSet,
    config: &RctbnConfig,
) -> Result<Vec<RctbnModel>, RctbnError> {
    transitions
        .iter()
        .map(|tr| {
            let segs = segment(trajs, tr, db.schema())?;
            train_rctbn_logged(&segs, db, tr, modes, config).map(|(m, _)| m)
        })
        .collect()
}

/// Keeps every positive and at most `cap` negatives per trajectory.
fn cap_negatives(segs: &[Segment], cap: Option<usize>, seed: u64) -> Vec<&Segment> {
    let Some(cap) = cap else { return segs.iter().collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; segs.len()];
    let mut start = 0;
    while start < segs.len() {
        let traj = segs[start].trajectory;
        let end = start + segs[start..].iter().take_while(|s| s.trajectory == traj).count();
        let negs: Vec<usize> = (start..end).filter(|&i| !segs[i].positive).collect();
        for i in start..end {
            keep[i] = segs[i].positive;
        }
        if negs.len() <= cap {
            negs.iter().for_each(|&i| keep[i] = true);
        } else {
            sample(&mut rng, negs.len(), cap).into_iter().for_each(|j| keep[negs[j]] = true);
        }
        start = end;
    }
    segs.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
}

/// Trains `φ` on segments and returns the summed segment log-likelihood after each
/// iteration. `φ0 = 0`; every iteration fits one tree to the segment gradients
/// `x/(e^x − 1)` (positive) and `−x` (negative), `x = e^φ T`.
pub fn train_rctbn_logged(
    segs: &[Segment],
    db: &FactBase,
    transition: &Transition,
    modes: &ModeSet,
    config: &RctbnConfig,
) -> Result<(RctbnModel, Vec<f64>), RctbnError> {
    if config.iterations == 0 {
        return Err(RctbnError::Config("iterations must be at least 1".into()));
    }
    config.tree.validate()?;
    let view = db.schema().state_view();
    let target = view.require(&transition.pred)?.clone();
    let segs = cap_negatives(segs, config.neg_cap, config.seed);
    if !segs.iter().any(|s| s.positive) {
        return Err(RctbnError::NoPositives(transition.to_string()));
    }
    let mut seen = BTreeSet::new();
    let contexts: Vec<&FactBase> =
        segs.iter().filter(|s| seen.insert(std::sync::Arc::as_ptr(&s.context))).map(|s| &*s.context).collect();
    let vocab = Vocabulary::from_facts(std::sync::Arc::new(view), std::iter::once(db).chain(contexts));
    let layered: Vec<Layered> = segs.iter().map(|s| Layered { base: db, top: &s.context }).collect();
    let worlds: Vec<&dyn FactSource> = layered.iter().map(|l| l as &dyn FactSource).collect();

    let mut model = RctbnModel { transition: transition.clone(), target, phi0: 0.0, trees: Vec::new() };
    let mut phi = vec![model.phi0; segs.len()];
    let mut log = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let batch: Vec<RegressionExample> = segs
            .par_iter()
            .zip(phi.par_iter())
            .map(|(s, &f)| {
                let g = if s.positive { pos_gradient_phi(f, s.residence) } else { neg_gradient_phi(f, s.residence) };
                RegressionExample::new(s.target.clone(), g)
            })
            .collect();
        let tree = fit_tree_in(&batch, &worlds, &vocab, modes, &config.tree)?;
        phi.par_iter_mut().zip(segs.par_iter().zip(layered.par_iter())).for_each(|(f, (s, w))| {
            *f += tree.evaluate_in(&s.target, w);
        });
        model.trees.push(tree);
        log.push(segs.iter().zip(&phi).map(|(s, &f)| segment_ll(s.positive, f, s.residence)).sum());
    }
    Ok((model, log))
}
