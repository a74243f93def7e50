//! Two-slice dynamic Bayesian networks over discrete variables.
//!
//! A sample pairs slice `t` with slice `t+1`. Only the slice `t+1` variables have
//! families: their parents are slice `t` variables (inter-slice arcs, written `a=>b`)
//! or other slice `t+1` variables (intra-slice arcs, `a->b`, kept acyclic). A family's
//! parents are addressed by data column: `i` for `X_i` at `t`, `n + i` at `t+1`.

mod score;
mod search;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use score::{
    bde_family_score, bic_penalty, family_loglik, family_score, mit_family_score, mit_degrees_of_freedom,
    score_network, FamilyCounts, ScoreKind,
};
pub use search::{hill_climb, Move};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbnError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid network: {0}")]
    Network(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn perr(line: usize, msg: impl Into<String>) -> DbnError {
    DbnError::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbnVariable {
    pub name: String,
    pub arity: u32,
}

/// Parses `vars: a:2, b:3`.
fn parse_vars(line: &str, lineno: usize) -> Result<Vec<DbnVariable>, DbnError> {
    let rest = line.trim().strip_prefix("vars:").ok_or_else(|| perr(lineno, "expected `vars: name:arity, ...`"))?;
    let mut vars: Vec<DbnVariable> = Vec::new();
    for item in rest.split(',').map(str::trim) {
        let (name, arity) = item.split_once(':').ok_or_else(|| perr(lineno, format!("expected name:arity, found `{item}`")))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(perr(lineno, format!("bad variable name `{name}`")));
        }
        let arity: u32 = arity
            .trim()
            .parse()
            .ok()
            .filter(|&a| a >= 1)
            .ok_or_else(|| perr(lineno, format!("bad arity `{arity}`")))?;
        if vars.iter().any(|v| v.name == name) {
            return Err(perr(lineno, format!("variable `{name}` declared twice")));
        }
        vars.push(DbnVariable { name: name.to_string(), arity });
    }
    Ok(vars)
}

fn format_vars(vars: &[DbnVariable]) -> String {
    let items: Vec<String> = vars.iter().map(|v| format!("{}:{}", v.name, v.arity)).collect();
    format!("vars: {}\n", items.join(", "))
}

/// Complete discrete data: each row holds slice `t` then slice `t+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDataset {
    pub vars: Vec<DbnVariable>,
    rows: Vec<Vec<u32>>,
}

impl DiscreteDataset {
    pub fn new(vars: Vec<DbnVariable>, rows: Vec<Vec<u32>>) -> Result<Self, DbnError> {
        if vars.is_empty() {
            return Err(DbnError::Config("dataset needs at least one variable".into()));
        }
        let n = vars.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != 2 * n {
                return Err(perr(r + 2, format!("expected {} values, found {}", 2 * n, row.len())));
            }
            for (c, &x) in row.iter().enumerate() {
                let v = &vars[c % n];
                if x >= v.arity {
                    return Err(perr(r + 2, format!("value {x} out of range for `{}` (arity {})", v.name, v.arity)));
                }
            }
        }
        Ok(DiscreteDataset { vars, rows })
    }

    pub fn parse(text: &str) -> Result<Self, DbnError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (lineno, header) = lines.next().ok_or_else(|| perr(1, "empty dataset"))?;
        let vars = parse_vars(header, lineno)?;
        let mut rows = Vec::new();
        for (lineno, line) in lines {
            let row = line
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| perr(lineno, format!("bad state `{}`", x.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != 2 * vars.len() {
                return Err(perr(lineno, format!("expected {} values, found {}", 2 * vars.len(), row.len())));
            }
            rows.push(row);
        }
        DiscreteDataset::new(vars, rows)
    }

    pub fn serialize(&self) -> String {
        let mut out = format_vars(&self.vars);
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Arity of the variable behind a data column.
    pub fn column_arity(&self, column: usize) -> usize {
        self.vars[column % self.vars.len()].arity as usize
    }
}

/// Inter-slice arcs `(a, b)` mean `X_a(t) → X_b(t+1)`; intra-slice `(a, b)` mean
/// `X_a(t+1) → X_b(t+1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSliceNetwork {
    pub vars: Vec<DbnVariable>,
    intra: BTreeSet<(usize, usize)>,
    inter: BTreeSet<(usize, usize)>,
}

impl TwoSliceNetwork {
    pub fn empty(vars: Vec<DbnVariable>) -> Self {
        TwoSliceNetwork { vars, intra: BTreeSet::new(), inter: BTreeSet::new() }
    }

    pub fn intra(&self) -> &BTreeSet<(usize, usize)> {
        &self.intra
    }

    pub fn inter(&self) -> &BTreeSet<(usize, usize)> {
        &self.inter
    }

    fn check(&self, a: usize, b: usize) -> Result<(), DbnError> {
        let n = self.vars.len();
        if a >= n || b >= n {
            return Err(DbnError::Network(format!("arc ({a}, {b}) references a missing variable")));
        }
        Ok(())
    }

    pub fn add_inter(&mut self, a: usize, b: usize) -> Result<(), DbnError> {
        self.check(a, b)?;
        self.inter.insert((a, b));
        Ok(())
    }

    /// Rejects self-loops and arcs that would close a directed cycle.
    pub fn add_intra(&mut self, a: usize, b: usize) -> Result<(), DbnError> {
        self.check(a, b)?;
        if a == b || self.reaches(b, a) {
            return Err(DbnError::Network(format!("intra arc {}->{} creates a cycle", self.vars[a].name, self.vars[b].name)));
        }
        self.intra.insert((a, b));
        Ok(())
    }

    pub fn remove_inter(&mut self, a: usize, b: usize) -> bool {
        self.inter.remove(&(a, b))
    }

    pub fn remove_intra(&mut self, a: usize, b: usize) -> bool {
        self.intra.remove(&(a, b))
    }

    /// Whether a directed intra-slice path leads from `from` to `to`.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.vars.len()];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.intra.iter().filter(|&&(a, _)| a == v).map(|&(_, b)| b));
        }
        false
    }

    /// Parent columns of `X_i(t+1)` in ascending order.
    pub fn parents(&self, i: usize) -> Vec<usize> {
        let n = self.vars.len();
        let mut out: Vec<usize> = self.inter.iter().filter(|&&(_, b)| b == i).map(|&(a, _)| a).collect();
        out.extend(self.intra.iter().filter(|&&(_, b)| b == i).map(|&(a, _)| n + a));
        out
    }

    pub fn arc_count(&self) -> usize {
        self.intra.len() + self.inter.len()
    }

    pub fn parse(text: &str) -> Result<Self, DbnError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (lineno, header) = lines.next().ok_or_else(|| perr(1, "empty network"))?;
        let mut net = TwoSliceNetwork::empty(parse_vars(header, lineno)?);
        let index = |name: &str, line: usize, vars: &[DbnVariable]| {
            vars.iter().position(|v| v.name == name.trim()).ok_or_else(|| perr(line, format!("unknown variable `{}`", name.trim())))
        };
        for (lineno, line) in lines {
            if let Some(arc) = line.strip_prefix("intra ") {
                let (a, b) = arc.split_once("->").ok_or_else(|| perr(lineno, "expected `intra a->b`"))?;
                let (a, b) = (index(a, lineno, &net.vars)?, index(b, lineno, &net.vars)?);
                net.add_intra(a, b).map_err(|e| perr(lineno, e.to_string()))?;
            } else if let Some(arc) = line.strip_prefix("inter ") {
                let (a, b) = arc.split_once("=>").ok_or_else(|| perr(lineno, "expected `inter a=>b`"))?;
                let (a, b) = (index(a, lineno, &net.vars)?, index(b, lineno, &net.vars)?);
                net.add_inter(a, b)?;
            } else {
                return Err(perr(lineno, format!("unexpected `{line}`")));
            }
        }
        Ok(net)
    }
}

impl fmt::Display for TwoSliceNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_vars(&self.vars))?;
        for &(a, b) in &self.inter {
            writeln!(f, "inter {}=>{}", self.vars[a].name, self.vars[b].name)?;
        }
        for &(a, b) in &self.intra {
            writeln!(f, "intra {}->{}", self.vars[a].name, self.vars[b].name)?;
        }
        Ok(())
    }
}
