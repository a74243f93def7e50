//! Line-oriented readers for facts, examples and clause literals.
//!
//! Grammar: `name(arg1,...,argN).` is a true boolean fact, `name(args)=<value>.`
//! carries a multiclass/count/continuous value. `%` starts a comment and whitespace
//! outside identifiers is ignored.

use std::sync::Arc;

use super::examples::{ExampleFile, ExampleSet};
use super::facts::validate_fact;
use super::{sym, Atom, FactBase, GroundAtom, Literal, LogicError, PredicateSignature, Schema, Term, Value, ValueTest};

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Raw pieces of `name(a,b)<op><value>`.
pub(crate) struct RawAtom<'a> {
    pub negated: bool,
    pub name: &'a str,
    pub args: Vec<&'a str>,
    pub op: Option<&'static str>,
    pub value: Option<&'a str>,
}

/// Splits a single atom. `text` must not contain the terminating `.`.
pub(crate) fn split_atom(text: &str) -> Result<RawAtom<'_>, LogicError> {
    let text = text.trim();
    let (negated, text) = match text.strip_prefix("\\+") {
        Some(rest) => (true, rest.trim_start()),
        None => (false, text),
    };
    let open = text.find('(').ok_or_else(|| LogicError::Syntax(format!("expected `(` in `{text}`")))?;
    let close = text.find(')').ok_or_else(|| LogicError::Syntax(format!("expected `)` in `{text}`")))?;
    if close < open {
        return Err(LogicError::Syntax(format!("unbalanced parentheses in `{text}`")));
    }
    let name = text[..open].trim();
    if !super::schema::is_identifier(name) || !name.starts_with(|c: char| c.is_ascii_lowercase()) {
        return Err(LogicError::Syntax(format!("invalid predicate name `{name}`")));
    }
    let inner = text[open + 1..close].trim();
    let args: Vec<&str> = if inner.is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
    if args.iter().any(|a| a.is_empty()) {
        return Err(LogicError::Syntax(format!("empty argument in `{text}`")));
    }
    let rest = text[close + 1..].trim();
    let (op, value) = if rest.is_empty() {
        (None, None)
    } else if let Some(v) = rest.strip_prefix(">=") {
        (Some(">="), Some(v.trim()))
    } else if let Some(v) = rest.strip_prefix('<') {
        (Some("<"), Some(v.trim()))
    } else if let Some(v) = rest.strip_prefix('=') {
        (Some("="), Some(v.trim()))
    } else {
        return Err(LogicError::Syntax(format!("unexpected `{rest}` after atom")));
    };
    if value.is_some_and(str::is_empty) {
        return Err(LogicError::Syntax(format!("missing value in `{text}`")));
    }
    Ok(RawAtom { negated, name, args, op, value })
}

/// Parses one ground atom line body (no terminator) against the schema.
pub(crate) fn parse_ground(text: &str, schema: &Schema) -> Result<GroundAtom, LogicError> {
    let raw = split_atom(text)?;
    if raw.negated {
        return Err(LogicError::Syntax("negation is not allowed in facts".into()));
    }
    let sig = schema.require(raw.name)?;
    if sig.arity != raw.args.len() {
        return Err(LogicError::Arity { name: raw.name.to_string(), expected: sig.arity, found: raw.args.len() });
    }
    let mut args = Vec::with_capacity(raw.args.len());
    for a in &raw.args {
        match Term::parse(a)? {
            Term::Const(c) => args.push(c),
            Term::Var(_) => return Err(LogicError::NonGround(text.trim().to_string())),
        }
    }
    let value = match (raw.op, raw.value) {
        (None, _) => {
            if sig.kind != super::ValueKind::Boolean {
                return Err(LogicError::ValueKind { name: raw.name.into(), kind: sig.kind, value: "<missing>".into() });
            }
            Value::Bool(true)
        }
        (Some("="), Some(v)) => Value::parse(v, sig.kind)
            .ok_or_else(|| LogicError::ValueKind { name: raw.name.into(), kind: sig.kind, value: v.into() })?,
        _ => return Err(LogicError::Syntax(format!("comparison not allowed in a fact: `{}`", text.trim()))),
    };
    let atom = GroundAtom { pred: sig.name.clone(), args, value };
    validate_fact(schema, &atom)?;
    Ok(atom)
}

/// Iterates `(line number, statement)` over non-empty lines, stripping comments and
/// the terminating `.`.
pub(crate) fn statements(text: &str) -> impl Iterator<Item = Result<(usize, &str), LogicError>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            return None;
        }
        Some(match line.strip_suffix('.') {
            Some(body) => Ok((i + 1, body)),
            None => Err(LogicError::Syntax("statement must end with `.`".into()).at(i + 1)),
        })
    })
}

/// Reads a facts file into an indexed [`FactBase`].
pub fn parse_facts(text: &str, schema: Arc<Schema>) -> Result<FactBase, LogicError> {
    let mut facts = Vec::new();
    for stmt in statements(text) {
        let (line, body) = stmt?;
        let fact = parse_ground(body, &schema).map_err(|e| e.at(line))?;
        if fact.value == Value::Bool(false) {
            return Err(LogicError::Syntax("false boolean facts are implicit; omit the line".into()).at(line));
        }
        facts.push((line, fact));
    }
    // report conflicts with the offending line
    let mut sorted: Vec<&(usize, GroundAtom)> = facts.iter().collect();
    sorted.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    for pair in sorted.windows(2) {
        if pair[0].1.same_key(&pair[1].1) && pair[0].1 != pair[1].1 {
            return Err(LogicError::Conflict(pair[1].1.key()).at(pair[1].0.max(pair[0].0)));
        }
    }
    FactBase::from_facts(schema, facts.into_iter().map(|(_, f)| f))
}

/// Reads an example file for `target`.
///
/// Positive and negative files list bare ground atoms and get labels 1 and 0; valued
/// files carry `=value` payloads matching the target's kind.
pub fn parse_examples(text: &str, target: &PredicateSignature, file: ExampleFile) -> Result<ExampleSet, LogicError> {
    let schema = Schema::from_signatures([target.clone()])?;
    let mut set = ExampleSet::new(target.clone());
    for stmt in statements(text) {
        let (line, body) = stmt?;
        let at = |e: LogicError| e.at(line);
        let raw = split_atom(body).map_err(at)?;
        if raw.name != &*target.name {
            return Err(at(LogicError::Syntax(format!("expected target `{}`, found `{}`", target.name, raw.name))));
        }
        let atom = match file {
            ExampleFile::Positive | ExampleFile::Negative => {
                if raw.op.is_some() {
                    return Err(at(LogicError::Syntax("labelled example files take bare atoms".into())));
                }
                let bare = split_atom(body).map_err(at)?;
                let mut ga = parse_bare_ground(&bare, body, target).map_err(at)?;
                ga.value = Value::Bool(file == ExampleFile::Positive);
                ga
            }
            ExampleFile::Valued => {
                if target.kind == super::ValueKind::Boolean {
                    return Err(at(LogicError::ValueKind {
                        name: target.name.to_string(),
                        kind: target.kind,
                        value: raw.value.unwrap_or("<missing>").to_string(),
                    }));
                }
                parse_ground(body, &schema).map_err(at)?
            }
        };
        set.push(atom).map_err(at)?;
    }
    Ok(set)
}

fn parse_bare_ground(raw: &RawAtom<'_>, text: &str, target: &PredicateSignature) -> Result<GroundAtom, LogicError> {
    if raw.args.len() != target.arity {
        return Err(LogicError::Arity { name: target.name.to_string(), expected: target.arity, found: raw.args.len() });
    }
    let mut args = Vec::with_capacity(raw.args.len());
    for a in &raw.args {
        match Term::parse(a)? {
            Term::Const(c) => args.push(c),
            Term::Var(_) => return Err(LogicError::NonGround(text.trim().to_string())),
        }
    }
    Ok(GroundAtom { pred: target.name.clone(), args, value: Value::Bool(true) })
}

/// Parses a clause literal such as `\+bp(X,Y)>=140.5`. Value tests are checked
/// against the schema.
pub fn parse_literal(text: &str, schema: &Schema) -> Result<Literal, LogicError> {
    let raw = split_atom(text)?;
    let sig = schema.require(raw.name)?;
    if sig.arity != raw.args.len() {
        return Err(LogicError::Arity { name: raw.name.to_string(), expected: sig.arity, found: raw.args.len() });
    }
    let args = raw.args.iter().map(|a| Term::parse(a)).collect::<Result<Vec<_>, _>>()?;
    let test = match (raw.op, raw.value) {
        (None, _) => ValueTest::Any,
        (Some("="), Some(v)) => ValueTest::Eq(
            Value::parse(v, sig.kind)
                .ok_or_else(|| LogicError::ValueKind { name: raw.name.into(), kind: sig.kind, value: v.into() })?,
        ),
        (Some(op), Some(v)) => {
            let c: f64 = v
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite() && sig.kind.is_numeric())
                .ok_or_else(|| LogicError::ValueKind { name: raw.name.into(), kind: sig.kind, value: v.into() })?;
            if op == "<" {
                ValueTest::Lt(c)
            } else {
                ValueTest::Ge(c)
            }
        }
        _ => unreachable!("split_atom pairs operators with values"),
    };
    let atom = Atom { pred: sym(raw.name), args, test };
    Ok(Literal { atom, negated: raw.negated })
}

/// Parses a comma-separated literal list; commas inside parentheses belong to atoms.
pub fn parse_literal_list(text: &str, schema: &Schema) -> Result<Vec<Literal>, LogicError> {
    let text = text.trim();
    if text.is_empty() || text == "true" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(parse_literal(&text[start..i], schema)?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(LogicError::Syntax(format!("unbalanced parentheses in `{text}`")));
    }
    out.push(parse_literal(&text[start..], schema)?);
    Ok(out)
}
