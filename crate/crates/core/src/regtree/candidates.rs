use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::TreeConfig;
use crate::logic::{
    head_vars, sym, ArgMode, Atom, FactBase, Literal, ModeDeclaration, ModeSet, Schema, Sym, Term, Value, ValueKind,
    ValueTest,
};

/// Constants and numeric values the candidate generator may draw on.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    schema: Arc<Schema>,
    constants: BTreeMap<(Sym, usize), BTreeSet<Sym>>,
    values: BTreeMap<Sym, Vec<f64>>,
}

impl Vocabulary {
    /// Collects constants per argument position and distinct numeric values per
    /// predicate over all given fact bases.
    pub fn from_facts<'a>(schema: Arc<Schema>, dbs: impl IntoIterator<Item = &'a FactBase>) -> Self {
        let mut constants: BTreeMap<(Sym, usize), BTreeSet<Sym>> = BTreeMap::new();
        let mut values: BTreeMap<Sym, Vec<f64>> = BTreeMap::new();
        for db in dbs {
            for f in db.facts() {
                for (pos, a) in f.args.iter().enumerate() {
                    constants.entry((f.pred.clone(), pos)).or_default().insert(a.clone());
                }
                if let Value::Count(_) | Value::Real(_) = f.value {
                    values.entry(f.pred.clone()).or_default().push(f.value.as_f64());
                }
            }
        }
        for v in values.values_mut() {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        Vocabulary { schema, constants, values }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn constants(&self, pred: &str, pos: usize) -> impl Iterator<Item = &Sym> {
        self.constants.get(&(sym(pred), pos)).into_iter().flatten()
    }

    /// Split points between consecutive distinct values of `pred`, thinned evenly to at
    /// most `max` when there are more.
    pub fn thresholds(&self, pred: &str, max: usize) -> Vec<f64> {
        let Some(u) = self.values.get(pred) else { return Vec::new() };
        let mids: Vec<f64> = u.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
        if mids.len() <= max {
            return mids;
        }
        let mut out: Vec<f64> = (1..=max).map(|j| mids[j * mids.len() / (max + 1)]).collect();
        out.dedup();
        out
    }
}

fn fresh_name(i: usize) -> Sym {
    sym(&format!("V{i}"))
}

/// Variables of a clause in first-occurrence order, head variables first, and the
/// highest fresh index used so far.
fn clause_vars(arity: usize, path: &[Literal]) -> (Vec<Sym>, usize) {
    let mut vars = head_vars(arity);
    let mut max_fresh = 0;
    for lit in path.iter().filter(|l| !l.negated) {
        for v in lit.atom.vars() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
            if let Some(n) = v.strip_prefix('V').and_then(|n| n.parse::<usize>().ok()) {
                max_fresh = max_fresh.max(n);
            }
        }
    }
    (vars, max_fresh)
}

fn value_tests(kind: ValueKind, pred: &str, vocab: &Vocabulary, config: &TreeConfig) -> Vec<ValueTest> {
    let mut tests = vec![ValueTest::Any];
    match kind {
        ValueKind::Boolean => {}
        ValueKind::Multiclass(k) => tests.extend((0..k).map(|c| ValueTest::Eq(Value::Class(c)))),
        ValueKind::Count | ValueKind::Continuous => {
            for c in vocab.thresholds(pred, config.max_thresholds) {
                tests.push(ValueTest::Lt(c));
                tests.push(ValueTest::Ge(c));
            }
        }
    }
    tests
}

/// Argument fillings for one mode declaration. `linked` (when given) must appear in
/// some input position. Returns each filling with the fresh variables it introduces.
fn fillings(
    decl: &ModeDeclaration,
    bound: &[Sym],
    linked: Option<&[Sym]>,
    next_fresh: usize,
    vocab: &Vocabulary,
) -> Vec<(Vec<Term>, Vec<Sym>)> {
    let mut out = Vec::new();
    let mut args = Vec::with_capacity(decl.modes.len());
    let mut fresh = Vec::new();
    fn rec(
        decl: &ModeDeclaration,
        bound: &[Sym],
        linked: Option<&[Sym]>,
        next_fresh: usize,
        vocab: &Vocabulary,
        args: &mut Vec<Term>,
        fresh: &mut Vec<Sym>,
        out: &mut Vec<(Vec<Term>, Vec<Sym>)>,
    ) {
        let pos = args.len();
        if pos == decl.modes.len() {
            let uses_link = linked.is_none_or(|l| {
                decl.modes
                    .iter()
                    .zip(args.iter())
                    .any(|(m, t)| *m == ArgMode::Input && l.contains(t.symbol()))
            });
            if uses_link {
                out.push((args.clone(), fresh.clone()));
            }
            return;
        }
        match decl.modes[pos] {
            ArgMode::Input => {
                for v in bound {
                    args.push(Term::Var(v.clone()));
                    rec(decl, bound, linked, next_fresh, vocab, args, fresh, out);
                    args.pop();
                }
            }
            ArgMode::Output => {
                let v = fresh_name(next_fresh + fresh.len());
                fresh.push(v.clone());
                args.push(Term::Var(v));
                rec(decl, bound, linked, next_fresh, vocab, args, fresh, out);
                args.pop();
                fresh.pop();
            }
            ArgMode::Constant => {
                for c in vocab.constants(&decl.pred, pos) {
                    args.push(Term::Const(c.clone()));
                    rec(decl, bound, linked, next_fresh, vocab, args, fresh, out);
                    args.pop();
                }
            }
        }
    }
    rec(decl, bound, linked, next_fresh, vocab, &mut args, &mut fresh, &mut out);
    out
}

/// Candidate node tests for a leaf whose accumulated clause is `path`.
///
/// Each candidate is a conjunction of one to `max_new_literals_per_node` positive
/// literals. In a conjunction every literal after the first must take, as an input,
/// a variable introduced by the literal before it; value tests are only proposed on
/// the last literal.
pub fn candidates(
    arity: usize,
    path: &[Literal],
    vocab: &Vocabulary,
    modes: &ModeSet,
    config: &TreeConfig,
) -> Vec<Vec<Literal>> {
    let (bound, max_fresh) = clause_vars(arity, path);
    let fresh_in_use = bound.len() - arity;
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    extend(&mut prefix, &bound, None, max_fresh + 1, fresh_in_use, path, vocab, modes, config, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    prefix: &mut Vec<Literal>,
    bound: &[Sym],
    linked: Option<&[Sym]>,
    next_fresh: usize,
    fresh_in_use: usize,
    path: &[Literal],
    vocab: &Vocabulary,
    modes: &ModeSet,
    config: &TreeConfig,
    out: &mut Vec<Vec<Literal>>,
) {
    let can_extend = prefix.len() + 1 < config.max_new_literals_per_node;
    for decl in modes.iter() {
        let Some(sig) = vocab.schema().get(&decl.pred) else { continue };
        for (args, fresh) in fillings(decl, bound, linked, next_fresh, vocab) {
            if fresh_in_use + fresh.len() > config.max_fresh_variables {
                continue;
            }
            let atom = Atom { pred: sig.name.clone(), args, test: ValueTest::Any };
            let repeated = |a: &Atom| path.iter().chain(prefix.iter()).any(|l| !l.negated && &l.atom == a);
            for test in value_tests(sig.kind, &decl.pred, vocab, config) {
                let lit = Literal::pos(atom.clone().with_test(test));
                if repeated(&lit.atom) {
                    continue;
                }
                let mut cand = prefix.clone();
                cand.push(lit);
                out.push(cand);
            }
            if can_extend && !fresh.is_empty() && !repeated(&atom) {
                let mut wider = bound.to_vec();
                wider.extend(fresh.iter().cloned());
                prefix.push(Literal::pos(atom));
                extend(
                    prefix,
                    &wider,
                    Some(&fresh),
                    next_fresh + fresh.len(),
                    fresh_in_use + fresh.len(),
                    path,
                    vocab,
                    modes,
                    config,
                    out,
                );
                prefix.pop();
            }
        }
    }
}
