use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{LogicError, Sym};

/// Payload type carried by facts of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Boolean,
    Multiclass(u32),
    Count,
    Continuous,
}

impl ValueKind {
    pub fn parse(text: &str) -> Result<ValueKind, LogicError> {
        let text = text.trim();
        match text {
            "boolean" => Ok(ValueKind::Boolean),
            "count" => Ok(ValueKind::Count),
            "continuous" => Ok(ValueKind::Continuous),
            _ => {
                let k = text
                    .strip_prefix("multiclass:")
                    .and_then(|k| k.trim().parse::<u32>().ok())
                    .ok_or_else(|| LogicError::Schema(format!("unknown value kind `{text}`")))?;
                if k < 2 {
                    return Err(LogicError::Schema(format!("multiclass needs at least 2 classes, got {k}")));
                }
                Ok(ValueKind::Multiclass(k))
            }
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ValueKind::Count | ValueKind::Continuous)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Boolean => write!(f, "boolean"),
            ValueKind::Multiclass(k) => write!(f, "multiclass:{k}"),
            ValueKind::Count => write!(f, "count"),
            ValueKind::Continuous => write!(f, "continuous"),
        }
    }
}

/// Declaration of a predicate: name, arity and the kind of value its facts carry.
///
/// A temporal predicate stores a numeric time stamp in its last argument.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredicateSignature {
    pub name: Sym,
    pub arity: usize,
    pub kind: ValueKind,
    pub temporal: bool,
}

impl PredicateSignature {
    pub fn new(name: &str, arity: usize, kind: ValueKind) -> Result<Self, LogicError> {
        Self::build(name, arity, kind, false)
    }

    pub fn temporal(name: &str, arity: usize, kind: ValueKind) -> Result<Self, LogicError> {
        Self::build(name, arity, kind, true)
    }

    pub fn boolean(name: &str, arity: usize) -> Self {
        Self::new(name, arity, ValueKind::Boolean).expect("valid boolean signature")
    }

    fn build(name: &str, arity: usize, kind: ValueKind, temporal: bool) -> Result<Self, LogicError> {
        if !is_identifier(name) || !name.starts_with(|c: char| c.is_ascii_lowercase()) {
            return Err(LogicError::Schema(format!("invalid predicate name `{name}`")));
        }
        if temporal && arity == 0 {
            return Err(LogicError::Schema(format!("temporal predicate `{name}` needs a time argument")));
        }
        if let ValueKind::Multiclass(k) = kind {
            if k < 2 {
                return Err(LogicError::Schema(format!("`{name}`: multiclass needs at least 2 classes")));
            }
        }
        Ok(PredicateSignature { name: Arc::from(name), arity, kind, temporal })
    }

    /// The atemporal signature used for state snapshots: the time argument is dropped.
    pub fn state_view(&self) -> PredicateSignature {
        if self.temporal {
            PredicateSignature { name: self.name.clone(), arity: self.arity - 1, kind: self.kind, temporal: false }
        } else {
            self.clone()
        }
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.name, self.arity)
    }
}

impl fmt::Display for PredicateSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pred: {}/{} {}", self.name, self.arity, self.kind)?;
        if self.temporal {
            write!(f, " temporal")?;
        }
        write!(f, ".")
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The set of declared predicates. Names are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    preds: BTreeMap<Sym, PredicateSignature>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_signatures(sigs: impl IntoIterator<Item = PredicateSignature>) -> Result<Self, LogicError> {
        let mut schema = Schema::new();
        for sig in sigs {
            schema.insert(sig)?;
        }
        Ok(schema)
    }

    pub fn insert(&mut self, sig: PredicateSignature) -> Result<(), LogicError> {
        if self.preds.contains_key(&sig.name) {
            return Err(LogicError::Schema(format!("predicate `{}` declared twice", sig.name)));
        }
        self.preds.insert(sig.name.clone(), sig);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&PredicateSignature> {
        self.preds.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&PredicateSignature, LogicError> {
        self.get(name).ok_or_else(|| LogicError::UnknownPredicate(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredicateSignature> {
        self.preds.values()
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    /// Schema with every temporal predicate replaced by its atemporal state view.
    pub fn state_view(&self) -> Schema {
        Schema { preds: self.preds.iter().map(|(k, v)| (k.clone(), v.state_view())).collect() }
    }

    /// Union of two schemas; a name declared in both must agree.
    pub fn merged(&self, other: &Schema) -> Result<Schema, LogicError> {
        let mut out = self.clone();
        for sig in other.iter() {
            match out.preds.get(&sig.name) {
                Some(existing) if existing == sig => {}
                Some(_) => {
                    return Err(LogicError::Schema(format!("conflicting declarations for `{}`", sig.name)));
                }
                None => {
                    out.preds.insert(sig.name.clone(), sig.clone());
                }
            }
        }
        Ok(out)
    }

    /// Parses schema lines of the form `pred: name/arity kind [temporal].`
    pub fn parse(text: &str) -> Result<Schema, LogicError> {
        let mut schema = Schema::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = super::parse::strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: LogicError| e.at(idx + 1);
            let body = line
                .strip_prefix("pred:")
                .and_then(|l| l.trim().strip_suffix('.'))
                .ok_or_else(|| at(LogicError::Syntax("expected `pred: name/arity kind.`".into())))?;
            let mut parts = body.split_whitespace();
            let decl = parts.next().ok_or_else(|| at(LogicError::Syntax("missing predicate".into())))?;
            let (name, arity) = decl
                .split_once('/')
                .ok_or_else(|| at(LogicError::Syntax(format!("expected name/arity, got `{decl}`"))))?;
            let arity: usize =
                arity.parse().map_err(|_| at(LogicError::Syntax(format!("bad arity `{arity}`"))))?;
            let mut words = parts.peekable();
            let kind = match words.next_if(|w| *w != "temporal") {
                Some(k) => ValueKind::parse(k).map_err(at)?,
                None => ValueKind::Boolean,
            };
            let mut parts = words;
            let temporal = match parts.next() {
                None => false,
                Some("temporal") => true,
                Some(other) => return Err(at(LogicError::Syntax(format!("unexpected `{other}`")))),
            };
            if let Some(extra) = parts.next() {
                return Err(at(LogicError::Syntax(format!("unexpected `{extra}`"))));
            }
            let sig = PredicateSignature::build(name, arity, kind, temporal).map_err(at)?;
            schema.insert(sig).map_err(at)?;
        }
        Ok(schema)
    }

    pub fn serialize(&self) -> String {
        self.iter().map(|s| format!("{s}\n")).collect()
    }
}
