use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{RctbnError, Trajectory, Transition};
use crate::logic::{FactBase, GroundAtom, Schema, Sym, Value};

/// A stretch of time during which a target grounding sat in the transition's
/// from-state and nothing else changed.
#[derive(Debug, Clone)]
pub struct Segment {
    /// Index of the source trajectory.
    pub trajectory: usize,
    /// Target grounding over the predicate's state view, carrying the from-state.
    pub target: GroundAtom,
    pub start: f64,
    /// Residence time `T > 0`.
    pub residence: f64,
    /// Whether the segment ends with the target transition.
    pub positive: bool,
    /// Values of every stream at `start`, over the state-view schema.
    pub context: Arc<FactBase>,
}

/// Cuts every trajectory into segments for `transition`.
///
/// Boundaries fall at every discrete transition after time 0 and at the horizon.
/// For each interval, every target grounding in the from-state yields a segment whose
/// context is the snapshot at the interval start. Numeric measurements update the
/// snapshot but do not cut segments.
pub fn segment(trajs: &[Trajectory], transition: &Transition, schema: &Schema) -> Result<Vec<Segment>, RctbnError> {
    let view = Arc::new(schema.state_view());
    let sig = view.require(&transition.pred)?;
    if !transition.from.matches(sig.kind) || !transition.to.matches(sig.kind) {
        return Err(RctbnError::Config(format!("transition {transition} does not fit `{}`", sig.key())));
    }
    let per: Vec<Vec<Segment>> =
        trajs.par_iter().enumerate().map(|(i, t)| segment_one(i, t, transition, &view)).collect::<Result<_, _>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn segment_one(index: usize, traj: &Trajectory, tr: &Transition, view: &Arc<Schema>) -> Result<Vec<Segment>, RctbnError> {
    let mut state: BTreeMap<(Sym, Vec<Sym>), Value> = BTreeMap::new();
    for e in &traj.events {
        let kind = view.require(&e.atom.pred)?.kind;
        state.entry((e.atom.pred.clone(), e.atom.args.clone())).or_insert(Value::default_for(kind));
    }
    let targets: Vec<Vec<Sym>> = state.keys().filter(|(p, _)| *p == tr.pred).map(|(_, a)| a.clone()).collect();
    let is_boundary = |e: &&crate::rctbn::Event| {
        e.time > 0.0 && !view.get(&e.atom.pred).is_some_and(|s| s.kind.is_numeric())
    };

    let mut out = Vec::new();
    let mut next = 0;
    let mut cur = 0.0;
    while cur < traj.horizon {
        while next < traj.events.len() && traj.events[next].time <= cur {
            let e = &traj.events[next];
            state.insert((e.atom.pred.clone(), e.atom.args.clone()), e.atom.value);
            next += 1;
        }
        let ending = traj.events[next..].iter().find(is_boundary);
        let end = ending.map_or(traj.horizon, |e| e.time);
        let waiting: Vec<&Vec<Sym>> =
            targets.iter().filter(|a| state[&(tr.pred.clone(), (*a).clone())] == tr.from).collect();
        if !waiting.is_empty() {
            let facts: Vec<GroundAtom> = state
                .iter()
                .filter(|(_, v)| **v != Value::Bool(false))
                .map(|((p, a), v)| GroundAtom { pred: p.clone(), args: a.clone(), value: *v })
                .collect();
            let context = Arc::new(FactBase::from_trusted(view.clone(), facts));
            for args in waiting {
                let positive =
                    ending.is_some_and(|e| e.atom.pred == tr.pred && &e.atom.args == args && e.atom.value == tr.to);
                out.push(Segment {
                    trajectory: index,
                    target: GroundAtom { pred: tr.pred.clone(), args: args.clone(), value: tr.from },
                    start: cur,
                    residence: end - cur,
                    positive,
                    context: context.clone(),
                });
            }
        }
        cur = end;
    }
    Ok(out)
}
