use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::{GroundAtom, LogicError, Schema, Sym, Value};

/// Read access to a collection of ground facts.
pub trait FactSource: Sync {
    /// Appends to `out` every fact of `pred` whose arguments equal `pattern` at each
    /// bound (`Some`) position.
    fn lookup<'a>(&'a self, pred: &str, pattern: &[Option<&str>], out: &mut Vec<&'a GroundAtom>);
}

#[derive(Debug, Clone, Default)]
struct PredFacts {
    facts: Vec<GroundAtom>,
    by_pos: Vec<HashMap<Sym, Vec<u32>>>,
}

impl PredFacts {
    fn build(mut facts: Vec<GroundAtom>, arity: usize) -> Self {
        facts.sort();
        let mut by_pos: Vec<HashMap<Sym, Vec<u32>>> = vec![HashMap::new(); arity];
        for (i, f) in facts.iter().enumerate() {
            for (pos, a) in f.args.iter().enumerate() {
                by_pos[pos].entry(a.clone()).or_default().push(i as u32);
            }
        }
        PredFacts { facts, by_pos }
    }
}

/// Indexed, immutable set of ground facts over a schema.
///
/// Each `(predicate, arguments)` key carries exactly one value. Boolean facts are
/// present only when true.
#[derive(Debug, Clone)]
pub struct FactBase {
    schema: Arc<Schema>,
    preds: BTreeMap<Sym, PredFacts>,
    len: usize,
}

impl FactBase {
    pub fn empty(schema: Arc<Schema>) -> Self {
        FactBase { schema, preds: BTreeMap::new(), len: 0 }
    }

    /// Validates and indexes `facts`. Exact duplicates collapse; the same key with two
    /// different values is an error.
    pub fn from_facts(schema: Arc<Schema>, facts: impl IntoIterator<Item = GroundAtom>) -> Result<Self, LogicError> {
        let mut grouped: BTreeMap<Sym, Vec<GroundAtom>> = BTreeMap::new();
        for fact in facts {
            validate_fact(&schema, &fact)?;
            if let Value::Bool(false) = fact.value {
                continue;
            }
            grouped.entry(fact.pred.clone()).or_default().push(fact);
        }
        let mut preds = BTreeMap::new();
        let mut len = 0;
        for (name, mut list) in grouped {
            list.sort();
            list.dedup();
            for pair in list.windows(2) {
                if pair[0].same_key(&pair[1]) {
                    return Err(LogicError::Conflict(pair[0].key()));
                }
            }
            len += list.len();
            let arity = schema.require(&name)?.arity;
            preds.insert(name, PredFacts::build(list, arity));
        }
        Ok(FactBase { schema, preds, len })
    }

    /// Builds without validation. Callers guarantee facts fit the schema and keys are unique.
    pub(crate) fn from_trusted(schema: Arc<Schema>, facts: Vec<GroundAtom>) -> Self {
        let mut grouped: BTreeMap<Sym, Vec<GroundAtom>> = BTreeMap::new();
        let len = facts.len();
        for fact in facts {
            grouped.entry(fact.pred.clone()).or_default().push(fact);
        }
        let preds = grouped
            .into_iter()
            .map(|(name, list)| {
                let arity = list[0].args.len();
                (name, PredFacts::build(list, arity))
            })
            .collect();
        FactBase { schema, preds, len }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All facts in canonical order (predicate, then arguments).
    pub fn facts(&self) -> impl Iterator<Item = &GroundAtom> {
        self.preds.values().flat_map(|p| p.facts.iter())
    }

    pub fn facts_of(&self, pred: &str) -> &[GroundAtom] {
        self.preds.get(pred).map_or(&[], |p| &p.facts)
    }

    /// Value stored for a ground key, if any.
    pub fn value_of(&self, pred: &str, args: &[Sym]) -> Option<Value> {
        let facts = self.facts_of(pred);
        facts
            .binary_search_by(|f| f.args.as_slice().cmp(args))
            .ok()
            .map(|i| facts[i].value)
    }

    /// Distinct constants seen at an argument position of `pred`, sorted.
    pub fn constants_at(&self, pred: &str, pos: usize) -> BTreeSet<Sym> {
        self.preds
            .get(pred)
            .and_then(|p| p.by_pos.get(pos))
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Numeric values carried by facts of `pred`.
    pub fn numeric_values(&self, pred: &str) -> Vec<f64> {
        self.facts_of(pred).iter().map(|f| f.value.as_f64()).collect()
    }

    /// One fact per line in the facts-file grammar; `parse_facts` reads it back.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for f in self.facts() {
            out.push_str(&f.to_string());
            out.push_str(".\n");
        }
        out
    }

    /// Linear-scan lookup; the reference the index must agree with.
    pub fn scan<'a>(&'a self, pred: &str, pattern: &[Option<&str>]) -> Vec<&'a GroundAtom> {
        self.facts_of(pred)
            .iter()
            .filter(|f| {
                f.args.len() == pattern.len()
                    && pattern.iter().zip(&f.args).all(|(p, a)| p.is_none_or(|p| p == &**a))
            })
            .collect()
    }
}

impl FactSource for FactBase {
    fn lookup<'a>(&'a self, pred: &str, pattern: &[Option<&str>], out: &mut Vec<&'a GroundAtom>) {
        let Some(p) = self.preds.get(pred) else { return };
        if p.by_pos.len() != pattern.len() {
            return;
        }
        // most selective bound position drives the scan
        let mut best: Option<&Vec<u32>> = None;
        for (pos, bound) in pattern.iter().enumerate() {
            if let Some(c) = bound {
                match p.by_pos[pos].get(*c) {
                    None => return,
                    Some(list) => {
                        if best.is_none_or(|b| list.len() < b.len()) {
                            best = Some(list);
                        }
                    }
                }
            }
        }
        let matches = |f: &GroundAtom| pattern.iter().zip(&f.args).all(|(b, a)| b.is_none_or(|b| b == &**a));
        match best {
            None => out.extend(p.facts.iter()),
            Some(list) => out.extend(list.iter().map(|&i| &p.facts[i as usize]).filter(|f| matches(f))),
        }
    }
}

/// Two fact sources viewed as one; keys are assumed disjoint.
#[derive(Clone, Copy)]
pub struct Layered<'a> {
    pub base: &'a FactBase,
    pub top: &'a FactBase,
}

impl FactSource for Layered<'_> {
    fn lookup<'a>(&'a self, pred: &str, pattern: &[Option<&str>], out: &mut Vec<&'a GroundAtom>) {
        self.base.lookup(pred, pattern, out);
        self.top.lookup(pred, pattern, out);
    }
}

pub(crate) fn validate_fact(schema: &Schema, fact: &GroundAtom) -> Result<(), LogicError> {
    let sig = schema.require(&fact.pred)?;
    if sig.arity != fact.args.len() {
        return Err(LogicError::Arity { name: sig.name.to_string(), expected: sig.arity, found: fact.args.len() });
    }
    if !fact.value.matches(sig.kind) {
        return Err(LogicError::ValueKind { name: sig.name.to_string(), kind: sig.kind, value: fact.value.to_string() });
    }
    if sig.temporal {
        let time = &fact.args[sig.arity - 1];
        if time.parse::<f64>().map_or(true, |t| !t.is_finite()) {
            return Err(LogicError::NonNumericTime { name: sig.name.to_string(), arg: time.to_string() });
        }
    }
    Ok(())
}
