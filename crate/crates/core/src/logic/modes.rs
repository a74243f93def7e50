use std::fmt;

use super::parse::{split_atom, statements};
use super::{LogicError, Schema, Sym};

/// How a literal argument may be filled when the tree learner proposes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgMode {
    /// `+`: an already bound variable.
    Input,
    /// `-`: an existing or a fresh variable.
    Output,
    /// `#`: a constant observed at this position.
    Constant,
}

impl ArgMode {
    fn symbol(self) -> char {
        match self {
            ArgMode::Input => '+',
            ArgMode::Output => '-',
            ArgMode::Constant => '#',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeDeclaration {
    pub pred: Sym,
    pub modes: Vec<ArgMode>,
}

impl fmt::Display for ModeDeclaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode: {}(", self.pred)?;
        for (i, m) in self.modes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", m.symbol())?;
        }
        f.write_str(").")
    }
}

/// Mode declarations in file order. A predicate may have several declarations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeSet {
    decls: Vec<ModeDeclaration>,
}

impl ModeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, schema: &Schema, decl: ModeDeclaration) -> Result<(), LogicError> {
        let sig = schema.require(&decl.pred)?;
        if sig.arity != decl.modes.len() {
            return Err(LogicError::Arity { name: sig.name.to_string(), expected: sig.arity, found: decl.modes.len() });
        }
        if !self.decls.contains(&decl) {
            self.decls.push(decl);
        }
        Ok(())
    }

    /// Parses `mode: name(+,-,#).` lines.
    pub fn parse(text: &str, schema: &Schema) -> Result<ModeSet, LogicError> {
        let mut set = ModeSet::new();
        for stmt in statements(text) {
            let (line, body) = stmt?;
            let at = |e: LogicError| e.at(line);
            let body = body
                .trim()
                .strip_prefix("mode:")
                .ok_or_else(|| at(LogicError::Syntax("expected `mode: name(...)`".into())))?;
            let raw = split_atom(body).map_err(at)?;
            if raw.negated || raw.op.is_some() {
                return Err(at(LogicError::Syntax("mode declarations take plain argument lists".into())));
            }
            let modes = raw
                .args
                .iter()
                .map(|a| match *a {
                    "+" => Ok(ArgMode::Input),
                    "-" => Ok(ArgMode::Output),
                    "#" => Ok(ArgMode::Constant),
                    other => Err(at(LogicError::Syntax(format!("unknown mode `{other}`")))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let pred = schema.require(raw.name).map_err(at)?.name.clone();
            set.push(schema, ModeDeclaration { pred, modes }).map_err(at)?;
        }
        Ok(set)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeDeclaration> {
        self.decls.iter()
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn serialize(&self) -> String {
        self.decls.iter().map(|d| format!("{d}\n")).collect()
    }
}
