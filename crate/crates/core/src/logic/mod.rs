//! First-order representation: predicates, atoms, fact bases and the grounding engine.
//!
//! Facts are ground atoms carrying a typed value. Boolean facts are stored only when
//! true (closed world); negation is negation-as-failure over the [`FactBase`].
//! Clause bodies are evaluated existentially: a body holds when at least one
//! grounding of it exists.

mod examples;
mod facts;
mod modes;
pub(crate) mod parse;
mod query;
mod schema;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use examples::{ExampleFile, ExampleSet};
pub use facts::{FactBase, FactSource, Layered};
pub use modes::{ArgMode, ModeDeclaration, ModeSet};
pub use parse::{parse_examples, parse_facts, parse_literal, parse_literal_list};
pub use query::{check_body, match_atom, match_body, satisfies};
pub use schema::{PredicateSignature, Schema, ValueKind};

pub(crate) use query::{head_bindings, holds, Bindings};

/// Interned-by-sharing symbol used for predicate names, constants and variables.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("`{name}` expects {expected} arguments, found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("value `{value}` does not match kind {kind} of `{name}`")]
    ValueKind { name: String, kind: ValueKind, value: String },
    #[error("`{0}` is not ground")]
    NonGround(String),
    #[error("duplicate entry `{0}`")]
    Duplicate(String),
    #[error("conflicting values for `{0}`")]
    Conflict(String),
    #[error("time argument `{arg}` of `{name}` is not numeric")]
    NonNumericTime { name: String, arg: String },
    #[error("variable `{0}` is unbound where it must be bound")]
    UnboundVariable(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {source}")]
    At { line: usize, source: Box<LogicError> },
}

impl LogicError {
    pub fn at(self, line: usize) -> LogicError {
        match self {
            e @ LogicError::At { .. } => e,
            e => LogicError::At { line, source: Box::new(e) },
        }
    }

    /// Line number attached by the parsers, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            LogicError::At { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Typed payload of a fact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Class(u32),
    Count(u64),
    Real(f64),
}

impl Value {
    pub fn matches(&self, kind: ValueKind) -> bool {
        match (self, kind) {
            (Value::Bool(_), ValueKind::Boolean) => true,
            (Value::Class(c), ValueKind::Multiclass(k)) => *c < k,
            (Value::Count(_), ValueKind::Count) => true,
            (Value::Real(r), ValueKind::Continuous) => r.is_finite(),
            _ => false,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Class(c) => f64::from(c),
            Value::Count(n) => n as f64,
            Value::Real(r) => r,
        }
    }

    /// Parses a value literal for the given kind. Booleans accept `true/false` and `1/0`.
    pub fn parse(text: &str, kind: ValueKind) -> Option<Value> {
        let text = text.trim();
        let value = match kind {
            ValueKind::Boolean => match text {
                "true" | "1" => Value::Bool(true),
                "false" | "0" => Value::Bool(false),
                _ => return None,
            },
            ValueKind::Multiclass(_) => Value::Class(text.parse().ok()?),
            ValueKind::Count => Value::Count(text.parse().ok()?),
            ValueKind::Continuous => Value::Real(text.parse().ok()?),
        };
        value.matches(kind).then_some(value)
    }

    /// The initial state of a stream before any event is observed.
    pub fn default_for(kind: ValueKind) -> Value {
        match kind {
            ValueKind::Boolean => Value::Bool(false),
            ValueKind::Multiclass(_) => Value::Class(0),
            ValueKind::Count => Value::Count(0),
            ValueKind::Continuous => Value::Real(0.0),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Class(_) => 1,
            Value::Count(_) => 2,
            Value::Real(_) => 3,
        }
    }

    fn total_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Class(a), Value::Class(b)) => a.cmp(b),
            (Value::Count(a), Value::Count(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Class(c) => write!(f, "{c}"),
            Value::Count(n) => write!(f, "{n}"),
            Value::Real(r) => write!(f, "{r:?}"),
        }
    }
}

/// A term is a constant or a variable. Variables start with an uppercase letter or `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Sym),
    Var(Sym),
}

impl Term {
    pub fn parse(text: &str) -> Result<Term, LogicError> {
        let text = text.trim();
        let valid = !text.is_empty()
            && text.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | '+'));
        if !valid {
            return Err(LogicError::Syntax(format!("invalid term `{text}`")));
        }
        let first = text.chars().next().unwrap_or('a');
        if first.is_ascii_uppercase() || first == '_' {
            if !schema::is_identifier(text) {
                return Err(LogicError::Syntax(format!("invalid variable `{text}`")));
            }
            Ok(Term::Var(sym(text)))
        } else if (first.is_ascii_lowercase() && !schema::is_identifier(text))
            || (!first.is_ascii_lowercase() && text.parse::<f64>().is_err())
        {
            Err(LogicError::Syntax(format!("invalid constant `{text}`")))
        } else {
            Ok(Term::Const(sym(text)))
        }
    }

    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(sym(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn symbol(&self) -> &Sym {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A fully ground atom with its value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAtom {
    pub pred: Sym,
    pub args: Vec<Sym>,
    pub value: Value,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str], value: Value) -> Self {
        GroundAtom { pred: sym(pred), args: args.iter().map(|a| sym(a)).collect(), value }
    }

    pub fn boolean(pred: &str, args: &[&str]) -> Self {
        Self::new(pred, args, Value::Bool(true))
    }

    /// `name(a,b)` without the value part.
    pub fn key(&self) -> String {
        format!("{}({})", self.pred, self.args.join(","))
    }

    /// Same predicate and arguments, ignoring the value.
    pub fn same_key(&self, other: &GroundAtom) -> bool {
        self.pred == other.pred && self.args == other.args
    }
}

impl Eq for GroundAtom {}

impl Ord for GroundAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pred
            .cmp(&other.pred)
            .then_with(|| self.args.cmp(&other.args))
            .then_with(|| self.value.total_cmp(&other.value))
    }
}

impl PartialOrd for GroundAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroundAtom {
    /// Facts-file rendering: booleans that hold print bare, other values as `=v`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())?;
        match self.value {
            Value::Bool(true) => Ok(()),
            v => write!(f, "={v}"),
        }
    }
}

/// Constraint on the value of a matched fact.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueTest {
    Any,
    Eq(Value),
    Lt(f64),
    Ge(f64),
}

impl ValueTest {
    pub fn accepts(&self, value: &Value) -> bool {
        match self {
            ValueTest::Any => true,
            ValueTest::Eq(v) => v == value,
            ValueTest::Lt(c) => value.as_f64() < *c,
            ValueTest::Ge(c) => value.as_f64() >= *c,
        }
    }
}

/// A possibly non-ground atom with an optional value test.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
    pub test: ValueTest,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: sym(pred), args, test: ValueTest::Any }
    }

    pub fn with_test(mut self, test: ValueTest) -> Self {
        self.test = test;
        self
    }

    pub fn vars(&self) -> impl Iterator<Item = &Sym> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")?;
        match &self.test {
            ValueTest::Any => Ok(()),
            ValueTest::Eq(v) => write!(f, "={v}"),
            ValueTest::Lt(c) => write!(f, "<{c:?}"),
            ValueTest::Ge(c) => write!(f, ">={c:?}"),
        }
    }
}

/// Body literal; negated literals use negation as failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, negated: false }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, negated: true }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("\\+")?;
        }
        write!(f, "{}", self.atom)
    }
}

pub fn format_literals(lits: &[Literal]) -> String {
    lits.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Mapping from variables to constants.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Sym, Sym>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Substitution(pairs.into_iter().map(|(v, c)| (sym(v), sym(c))).collect())
    }

    pub fn get(&self, var: &str) -> Option<&Sym> {
        self.0.get(var)
    }

    pub fn bind(&mut self, var: Sym, value: Sym) -> Option<Sym> {
        self.0.insert(var, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sym, &Sym)> {
        self.0.iter()
    }

    /// Replaces mapped variables by their constants; unmapped variables stay.
    pub fn apply(&self, atom: &Atom) -> Atom {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => self.0.get(v).map_or_else(|| t.clone(), |c| Term::Const(c.clone())),
                Term::Const(_) => t.clone(),
            })
            .collect();
        Atom { pred: atom.pred.clone(), args, test: atom.test.clone() }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{c}")?;
        }
        f.write_str("}")
    }
}

/// Head variables used for a target of the given arity: `A`, `B`, ...
pub fn head_vars(arity: usize) -> Vec<Sym> {
    (0..arity)
        .map(|i| {
            if i < 26 {
                sym(&((b'A' + i as u8) as char).to_string())
            } else {
                sym(&format!("A{i}"))
            }
        })
        .collect()
}

/// Binds the head variables to the arguments of a ground target.
pub fn head_binding(target: &GroundAtom) -> Substitution {
    let mut s = Substitution::new();
    for (v, c) in head_vars(target.args.len()).into_iter().zip(&target.args) {
        s.bind(v, c.clone());
    }
    s
}
