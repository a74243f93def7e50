use rayon::prelude::*;

use super::candidates::{candidates, Vocabulary};
use super::{Node, RegressionExample, RegressionTree, TreeConfig, TreeError};
use crate::logic::{format_literals, head_bindings, holds, Bindings, FactBase, FactSource, Literal, ModeSet};

/// Weighted sum of squared deviations of the gradients from their weighted mean.
pub fn sse(examples: &[RegressionExample]) -> f64 {
    let refs: Vec<&RegressionExample> = examples.iter().collect();
    sse_of(&refs)
}

fn weighted_mean(xs: &[&RegressionExample]) -> f64 {
    let w: f64 = xs.iter().map(|e| e.weight).sum();
    if w == 0.0 {
        return 0.0;
    }
    xs.iter().map(|e| e.weight * e.gradient).sum::<f64>() / w
}

fn sse_of(xs: &[&RegressionExample]) -> f64 {
    let mean = weighted_mean(xs);
    xs.iter().map(|e| e.weight * (e.gradient - mean).powi(2)).sum()
}

/// Score of splitting examples that satisfy `path` with `test`: the summed SSE of the
/// succeeds and fails children. Lower is better.
pub fn score_split(examples: &[RegressionExample], path: &[Literal], test: &[Literal], db: &FactBase) -> f64 {
    let mut clause = path.to_vec();
    clause.extend(test.iter().cloned());
    let (yes, no): (Vec<&RegressionExample>, Vec<&RegressionExample>) =
        examples.iter().partition(|e| holds(&clause, &mut head_bindings(&e.target), db));
    sse_of(&yes) + sse_of(&no)
}

/// Fits a tree against a single fact base.
pub fn fit_tree(
    examples: &[RegressionExample],
    db: &FactBase,
    modes: &ModeSet,
    config: &TreeConfig,
) -> Result<RegressionTree, TreeError> {
    let vocab = Vocabulary::from_facts(db.schema().clone(), [db]);
    let worlds: Vec<&dyn FactSource> = vec![db; examples.len()];
    fit_tree_in(examples, &worlds, &vocab, modes, config)
}

struct Open {
    path: Vec<Literal>,
    members: Vec<usize>,
    sse: f64,
    age: usize,
    slot: usize,
    done: bool,
}

enum Slot {
    Leaf(Vec<usize>),
    Split { test: Vec<Literal>, yes: usize, no: usize },
}

struct Scored {
    score: f64,
    text: String,
    test: Vec<Literal>,
    yes: Vec<usize>,
    no: Vec<usize>,
}

/// Fits a tree where example `i` is evaluated against `worlds[i]`.
///
/// Best-first growth: the open leaf with the largest SSE (oldest on ties) is expanded
/// with the candidate minimising child SSE (lexicographically smallest text on ties).
/// A leaf with no improving candidate is closed; growth stops at `max_leaves` or when
/// every leaf is closed. Leaf values are weighted mean gradients.
pub fn fit_tree_in(
    examples: &[RegressionExample],
    worlds: &[&dyn FactSource],
    vocab: &Vocabulary,
    modes: &ModeSet,
    config: &TreeConfig,
) -> Result<RegressionTree, TreeError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(TreeError::NoExamples);
    }
    if worlds.len() != examples.len() {
        return Err(TreeError::WorldCount(examples.len(), worlds.len()));
    }
    if let Some(bad) = examples.iter().find(|e| !e.gradient.is_finite() || !e.weight.is_finite() || e.weight <= 0.0) {
        return Err(TreeError::NonFinite(bad.target.key()));
    }
    let arity = examples[0].target.args.len();
    let heads: Vec<Bindings> = examples.iter().map(|e| head_bindings(&e.target)).collect();
    let sse_idx = |idx: &[usize]| {
        let xs: Vec<&RegressionExample> = idx.iter().map(|&i| &examples[i]).collect();
        sse_of(&xs)
    };

    let all: Vec<usize> = (0..examples.len()).collect();
    let mut slots = vec![Slot::Leaf(all.clone())];
    let mut open = vec![Open { path: Vec::new(), sse: sse_idx(&all), members: all, age: 0, slot: 0, done: false }];
    let mut next_age = 1;

    while open.len() < config.max_leaves {
        let Some(pick) = open
            .iter()
            .enumerate()
            .filter(|(_, o)| !o.done)
            .max_by(|(_, a), (_, b)| a.sse.total_cmp(&b.sse).then(b.age.cmp(&a.age)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let leaf = &open[pick];
        if leaf.sse <= 0.0 || leaf.members.len() < 2 * config.min_examples_per_leaf {
            open[pick].done = true;
            continue;
        }
        let cands = candidates(arity, &leaf.path, vocab, modes, config);
        let scored: Vec<Option<Scored>> = cands
            .into_par_iter()
            .map(|test| {
                let mut clause = leaf.path.clone();
                clause.extend(test.iter().cloned());
                let (yes, no): (Vec<usize>, Vec<usize>) =
                    leaf.members.iter().partition(|&&i| holds(&clause, &mut heads[i].clone(), worlds[i]));
                if yes.len() < config.min_examples_per_leaf || no.len() < config.min_examples_per_leaf {
                    return None;
                }
                let score = sse_idx(&yes) + sse_idx(&no);
                Some(Scored { score, text: format_literals(&test), test, yes, no })
            })
            .collect();
        let best = scored
            .into_iter()
            .flatten()
            .min_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.text.cmp(&b.text)));
        let tol = 1e-12 * leaf.sse.max(1.0);
        match best {
            Some(best) if leaf.sse - best.score > tol => {
                let parent = open.swap_remove(pick);
                let yes_slot = slots.len();
                let no_slot = yes_slot + 1;
                let mut yes_path = parent.path.clone();
                yes_path.extend(best.test.iter().cloned());
                slots.push(Slot::Leaf(best.yes.clone()));
                slots.push(Slot::Leaf(best.no.clone()));
                slots[parent.slot] = Slot::Split { test: best.test, yes: yes_slot, no: no_slot };
                open.push(Open {
                    path: yes_path,
                    sse: sse_idx(&best.yes),
                    members: best.yes,
                    age: next_age,
                    slot: yes_slot,
                    done: false,
                });
                open.push(Open {
                    path: parent.path,
                    sse: sse_idx(&best.no),
                    members: best.no,
                    age: next_age + 1,
                    slot: no_slot,
                    done: false,
                });
                next_age += 2;
            }
            _ => open[pick].done = true,
        }
    }

    fn build(slots: &mut [Slot], at: usize, examples: &[RegressionExample]) -> Node {
        match std::mem::replace(&mut slots[at], Slot::Leaf(Vec::new())) {
            Slot::Leaf(members) => {
                let xs: Vec<&RegressionExample> = members.iter().map(|&i| &examples[i]).collect();
                Node::Leaf { value: weighted_mean(&xs) }
            }
            Slot::Split { test, yes, no } => Node::Split {
                test,
                yes: Box::new(build(slots, yes, examples)),
                no: Box::new(build(slots, no, examples)),
            },
        }
    }
    Ok(RegressionTree { arity, root: build(&mut slots, 0, examples) })
}
