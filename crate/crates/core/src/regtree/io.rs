use std::collections::BTreeMap;

use super::{Node, RegressionTree, TreeError};
use crate::logic::{format_literals, parse_literal_list, Literal, Schema};

enum Line {
    Split { test: Vec<Literal>, yes: usize, no: usize },
    Leaf(f64),
}

fn err(line: usize, msg: impl Into<String>) -> TreeError {
    TreeError::Parse { line, msg: msg.into() }
}

fn field<'a>(text: &'a str, key: &str, line: usize) -> Result<&'a str, TreeError> {
    text.split_whitespace()
        .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| err(line, format!("missing `{key}=`")))
}

fn number<T: std::str::FromStr>(text: &str, line: usize) -> Result<T, TreeError> {
    text.parse().map_err(|_| err(line, format!("bad number `{text}`")))
}

impl RegressionTree {
    /// Text block: `tree v1 arity=<n>`, nodes in preorder, then `end`.
    pub fn serialize(&self) -> String {
        fn walk(n: &Node, next: &mut usize, out: &mut String) {
            let id = *next;
            *next += 1;
            match n {
                Node::Leaf { value } => out.push_str(&format!("leaf {id} value={value:?}\n")),
                Node::Split { test, yes, no } => {
                    let mut body = String::new();
                    walk(yes, next, &mut body);
                    let no_id = *next;
                    walk(no, next, &mut body);
                    out.push_str(&format!("node {id} test \"{}\" yes={} no={no_id}\n", format_literals(test), id + 1));
                    out.push_str(&body);
                }
            }
        }
        let mut out = format!("tree v1 arity={}\n", self.arity);
        walk(&self.root, &mut 0, &mut out);
        out.push_str("end\n");
        out
    }

    /// Parses exactly one tree block.
    pub fn parse(text: &str, schema: &Schema) -> Result<RegressionTree, TreeError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        let tree = Self::read(&mut lines, schema)?;
        if let Some((line, _)) = lines.next() {
            return Err(err(line, "trailing content after `end`"));
        }
        Ok(tree)
    }

    /// Reads one tree block from numbered lines, consuming through its `end` line.
    pub fn read(
        lines: &mut dyn Iterator<Item = (usize, &str)>,
        schema: &Schema,
    ) -> Result<RegressionTree, TreeError> {
        let (hline, header) = lines.next().ok_or_else(|| err(0, "expected `tree v1`"))?;
        let header = header.trim();
        let rest = header.strip_prefix("tree v1").ok_or_else(|| err(hline, "expected `tree v1 arity=<n>`"))?;
        let arity: usize = number(field(rest, "arity", hline)?, hline)?;
        let mut nodes: BTreeMap<usize, (usize, Line)> = BTreeMap::new();
        let mut closed = false;
        for (line, raw) in &mut *lines {
            let text = raw.trim();
            if text == "end" {
                closed = true;
                break;
            }
            let (kind, rest) = text.split_once(' ').ok_or_else(|| err(line, format!("unexpected `{text}`")))?;
            let rest = rest.trim_start();
            let (id, rest) = rest.split_once(' ').ok_or_else(|| err(line, "missing node id"))?;
            let id: usize = number(id, line)?;
            let parsed = match kind {
                "leaf" => Line::Leaf(number(field(rest, "value", line)?, line)?),
                "node" => {
                    let open = rest.find('"').ok_or_else(|| err(line, "missing quoted test"))?;
                    let close = rest.rfind('"').filter(|&c| c > open).ok_or_else(|| err(line, "unterminated test"))?;
                    let test = parse_literal_list(&rest[open + 1..close], schema).map_err(|e| err(line, e.to_string()))?;
                    if test.is_empty() {
                        return Err(err(line, "empty node test"));
                    }
                    let tail = &rest[close + 1..];
                    let yes = number(field(tail, "yes", line)?, line)?;
                    let no = number(field(tail, "no", line)?, line)?;
                    Line::Split { test, yes, no }
                }
                other => return Err(err(line, format!("unknown entry `{other}`"))),
            };
            if nodes.insert(id, (line, parsed)).is_some() {
                return Err(err(line, format!("duplicate node id {id}")));
            }
        }
        if !closed {
            return Err(err(hline, "tree block not terminated by `end`"));
        }
        fn build(nodes: &mut BTreeMap<usize, (usize, Line)>, id: usize, from: usize) -> Result<Node, TreeError> {
            let (line, entry) = nodes.remove(&id).ok_or_else(|| err(from, format!("missing or reused node id {id}")))?;
            Ok(match entry {
                Line::Leaf(value) => Node::Leaf { value },
                Line::Split { test, yes, no } => Node::Split {
                    test,
                    yes: Box::new(build(nodes, yes, line)?),
                    no: Box::new(build(nodes, no, line)?),
                },
            })
        }
        let root = build(&mut nodes, 0, hline)?;
        if let Some((id, (line, _))) = nodes.into_iter().next() {
            return Err(err(line, format!("node {id} is unreachable")));
        }
        Ok(RegressionTree { arity, root })
    }
}
