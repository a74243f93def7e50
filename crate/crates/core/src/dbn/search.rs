use rayon::prelude::*;

use super::{family_score, DbnError, DiscreteDataset, ScoreKind, TwoSliceNetwork};

/// A single-arc change. Derived ordering is the tie-break between equally good moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    AddInter(usize, usize),
    AddIntra(usize, usize),
    DeleteInter(usize, usize),
    DeleteIntra(usize, usize),
    ReverseIntra(usize, usize),
}

impl Move {
    fn apply(self, net: &TwoSliceNetwork) -> Option<TwoSliceNetwork> {
        let mut next = net.clone();
        match self {
            Move::AddInter(a, b) => next.add_inter(a, b).ok()?,
            Move::AddIntra(a, b) => next.add_intra(a, b).ok()?,
            Move::DeleteInter(a, b) => {
                next.remove_inter(a, b);
            }
            Move::DeleteIntra(a, b) => {
                next.remove_intra(a, b);
            }
            Move::ReverseIntra(a, b) => {
                next.remove_intra(a, b);
                next.add_intra(b, a).ok()?;
            }
        }
        Some(next)
    }

    /// Variables whose parent sets the move changes.
    fn touched(self) -> Vec<usize> {
        match self {
            Move::ReverseIntra(a, b) => vec![a, b],
            Move::AddInter(_, b) | Move::AddIntra(_, b) | Move::DeleteInter(_, b) | Move::DeleteIntra(_, b) => vec![b],
        }
    }
}

fn candidates(net: &TwoSliceNetwork, max_parents: usize) -> Vec<Move> {
    let n = net.vars.len();
    let room = |v: usize| net.parents(v).len() < max_parents;
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if net.inter().contains(&(a, b)) {
                out.push(Move::DeleteInter(a, b));
            } else if room(b) {
                out.push(Move::AddInter(a, b));
            }
            if a == b {
                continue;
            }
            if net.intra().contains(&(a, b)) {
                out.push(Move::DeleteIntra(a, b));
                if room(a) {
                    out.push(Move::ReverseIntra(a, b));
                }
            } else if room(b) && !net.reaches(b, a) {
                out.push(Move::AddIntra(a, b));
            }
        }
    }
    out.sort();
    out
}

/// Family scores recomputed after a move, by variable.
type Rescored = Vec<(usize, f64)>;

/// Greedy search from the empty network. Each step applies the move with the largest
/// score gain and stops when no move improves the score.
pub fn hill_climb(data: &DiscreteDataset, kind: ScoreKind, max_parents: usize) -> Result<TwoSliceNetwork, DbnError> {
    let kind = kind.validate()?;
    if max_parents == 0 {
        return Err(DbnError::Config("max_parents must be at least 1".into()));
    }
    let n = data.num_vars();
    let mut net = TwoSliceNetwork::empty(data.vars.clone());
    let mut family: Vec<f64> = (0..n).map(|i| family_score(data, i, &[], kind)).collect();
    loop {
        let scored: Vec<(Move, TwoSliceNetwork, Rescored, f64)> = candidates(&net, max_parents)
            .into_par_iter()
            .filter_map(|m| {
                let next = m.apply(&net)?;
                let fresh: Vec<(usize, f64)> =
                    m.touched().into_iter().map(|v| (v, family_score(data, v, &next.parents(v), kind))).collect();
                let gain = fresh.iter().map(|&(v, s)| s - family[v]).sum();
                Some((m, next, fresh, gain))
            })
            .collect();
        let mut best: Option<(TwoSliceNetwork, Rescored, f64)> = None;
        for (_, next, fresh, gain) in scored {
            if best.as_ref().is_none_or(|b| gain > b.2 + 1e-12) {
                best = Some((next, fresh, gain));
            }
        }
        match best {
            Some((next, fresh, gain)) if gain > 1e-9 => {
                net = next;
                for (v, s) in fresh {
                    family[v] = s;
                }
            }
            _ => return Ok(net),
        }
    }
}
