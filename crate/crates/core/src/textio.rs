//! Helpers shared by the model and data file readers.

use std::collections::BTreeMap;

use crate::logic::{PredicateSignature, Schema};

/// Non-blank lines with 1-based line numbers.
pub(crate) fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

/// `key=value` words after a fixed prefix. Words without `=` are an error.
pub(crate) fn header_fields<'a>(line: &'a str, prefix: &str) -> Result<BTreeMap<&'a str, &'a str>, String> {
    let rest = line.trim().strip_prefix(prefix).ok_or_else(|| format!("expected `{prefix}`"))?;
    let mut out = BTreeMap::new();
    for word in rest.split_whitespace() {
        let (k, v) = word.split_once('=').ok_or_else(|| format!("expected key=value, found `{word}`"))?;
        if out.insert(k, v).is_some() {
            return Err(format!("`{k}` given twice"));
        }
    }
    Ok(out)
}

pub(crate) fn required<'a>(fields: &BTreeMap<&str, &'a str>, key: &str) -> Result<&'a str, String> {
    fields.get(key).copied().ok_or_else(|| format!("missing `{key}=`"))
}

pub(crate) fn real(text: &str) -> Result<f64, String> {
    text.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("bad number `{text}`"))
}

/// Resolves `name/arity` against a schema.
pub(crate) fn target_signature(text: &str, schema: &Schema) -> Result<PredicateSignature, String> {
    let (name, arity) = text.split_once('/').ok_or_else(|| format!("expected name/arity, found `{text}`"))?;
    let arity: usize = arity.parse().map_err(|_| format!("bad arity `{arity}`"))?;
    let sig = schema.get(name).ok_or_else(|| format!("target `{name}` is not declared in the schema"))?;
    if sig.arity != arity {
        return Err(format!("target `{name}` has arity {} in the schema, not {arity}", sig.arity));
    }
    Ok(sig.clone())
}
