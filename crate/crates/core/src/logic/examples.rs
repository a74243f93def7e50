use std::collections::BTreeSet;

use super::{GroundAtom, LogicError, PredicateSignature, Value};

/// Which kind of example file is being read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleFile {
    Positive,
    Negative,
    Valued,
}

/// Ground target atoms with their labels (boolean targets) or observed values.
///
/// The label or value is stored as the atom's `value`; boolean targets use
/// `Bool(true)` for positives and `Bool(false)` for negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSet {
    target: PredicateSignature,
    entries: Vec<GroundAtom>,
    keys: BTreeSet<String>,
}

impl ExampleSet {
    pub fn new(target: PredicateSignature) -> Self {
        ExampleSet { target, entries: Vec::new(), keys: BTreeSet::new() }
    }

    pub fn from_entries(target: PredicateSignature, entries: impl IntoIterator<Item = GroundAtom>) -> Result<Self, LogicError> {
        let mut set = ExampleSet::new(target);
        for e in entries {
            set.push(e)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, atom: GroundAtom) -> Result<(), LogicError> {
        if atom.pred != self.target.name || atom.args.len() != self.target.arity {
            return Err(LogicError::Syntax(format!("`{}` is not an instance of {}", atom.key(), self.target.key())));
        }
        if !atom.value.matches(self.target.kind) {
            return Err(LogicError::ValueKind {
                name: self.target.name.to_string(),
                kind: self.target.kind,
                value: atom.value.to_string(),
            });
        }
        if !self.keys.insert(atom.key()) {
            return Err(LogicError::Duplicate(atom.key()));
        }
        self.entries.push(atom);
        Ok(())
    }

    /// Appends all entries of `other`; a shared ground atom is a duplicate error.
    pub fn merge(&mut self, other: ExampleSet) -> Result<(), LogicError> {
        if other.target != self.target {
            return Err(LogicError::Syntax(format!("cannot merge {} into {}", other.target.key(), self.target.key())));
        }
        for e in other.entries {
            self.push(e)?;
        }
        Ok(())
    }

    pub fn target(&self) -> &PredicateSignature {
        &self.target
    }

    pub fn entries(&self) -> &[GroundAtom] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Label of a boolean entry; `None` for valued targets.
    pub fn label(&self, i: usize) -> Option<bool> {
        match self.entries[i].value {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn count_positive(&self) -> usize {
        self.entries.iter().filter(|e| e.value == Value::Bool(true)).count()
    }

    /// Subset by entry indices, keeping the given order.
    pub fn subset(&self, idx: &[usize]) -> ExampleSet {
        let entries: Vec<GroundAtom> = idx.iter().map(|&i| self.entries[i].clone()).collect();
        let keys = entries.iter().map(GroundAtom::key).collect();
        ExampleSet { target: self.target.clone(), entries, keys }
    }

    /// Valued-file rendering (`atom=value.`); boolean positives print bare.
    pub fn serialize(&self) -> String {
        self.entries.iter().map(|e| format!("{e}.\n")).collect()
    }

    /// Bare atoms carrying the given boolean label, for pos/neg files.
    pub fn serialize_label(&self, positive: bool) -> String {
        self.entries
            .iter()
            .filter(|e| e.value == Value::Bool(positive))
            .map(|e| format!("{}.\n", e.key()))
            .collect()
    }
}
