//! Collapses trajectory streams into atemporal facts so that temporal measurements
//! can serve as hybrid targets or parents.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::HybridError;
use crate::logic::{GroundAtom, PredicateSignature, Schema, Sym, Value, ValueKind};
use crate::rctbn::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    /// Whether the stream ever takes a non-default value (numeric: is ever observed).
    Indicator,
    /// Events entering a non-default value (numeric: number of observations).
    Count,
    Min,
    Max,
    /// Unweighted mean of the observed values.
    Mean,
    Latest,
}

impl Aggregator {
    pub fn output_kind(self) -> ValueKind {
        match self {
            Aggregator::Indicator => ValueKind::Boolean,
            Aggregator::Count => ValueKind::Count,
            _ => ValueKind::Continuous,
        }
    }
}

impl FromStr for Aggregator {
    type Err = HybridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "indicator" => Aggregator::Indicator,
            "count" => Aggregator::Count,
            "min" => Aggregator::Min,
            "max" => Aggregator::Max,
            "mean" => Aggregator::Mean,
            "latest" => Aggregator::Latest,
            other => return Err(HybridError::Config(format!("unknown aggregator `{other}`"))),
        })
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Indicator => "indicator",
            Aggregator::Count => "count",
            Aggregator::Min => "min",
            Aggregator::Max => "max",
            Aggregator::Mean => "mean",
            Aggregator::Latest => "latest",
        })
    }
}

/// Parses `pred=agg,pred=agg`.
pub fn parse_aggregators(text: &str) -> Result<Vec<(String, Aggregator)>, HybridError> {
    let mut out: Vec<(String, Aggregator)> = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (pred, agg) =
            item.split_once('=').ok_or_else(|| HybridError::Config(format!("expected `pred=aggregator`, found `{item}`")))?;
        let pred = pred.trim().to_string();
        if out.iter().any(|(p, _)| *p == pred) {
            return Err(HybridError::Config(format!("`{pred}` aggregated twice")));
        }
        out.push((pred, agg.parse()?));
    }
    Ok(out)
}

/// Aggregates every stream of the listed temporal predicates, one fact per stream and
/// trajectory. Returns `schema` with each listed predicate replaced by its atemporal
/// state view carrying the aggregator's output kind, and the new facts. Boolean
/// outputs only produce facts for true values.
pub fn aggregate(
    trajs: &[Trajectory],
    schema: &Schema,
    specs: &[(String, Aggregator)],
) -> Result<(Schema, Vec<GroundAtom>), HybridError> {
    let mut chosen: BTreeMap<Sym, (Aggregator, ValueKind)> = BTreeMap::new();
    for (pred, agg) in specs {
        let sig = schema.require(pred)?;
        if !sig.temporal {
            return Err(HybridError::Config(format!("`{pred}` is not a temporal predicate")));
        }
        chosen.insert(sig.name.clone(), (*agg, sig.kind));
    }
    let mut out_schema = Schema::new();
    for sig in schema.iter() {
        match chosen.get(&sig.name) {
            Some((agg, _)) => {
                let view = sig.state_view();
                out_schema.insert(PredicateSignature::new(&view.name, view.arity, agg.output_kind())?)?
            }
            None => out_schema.insert(sig.clone())?,
        }
    }

    let mut facts = Vec::new();
    for traj in trajs {
        let mut streams: BTreeMap<(Sym, Vec<Sym>), Vec<Value>> = BTreeMap::new();
        for e in &traj.events {
            if chosen.contains_key(&e.atom.pred) {
                streams.entry((e.atom.pred.clone(), e.atom.args.clone())).or_default().push(e.atom.value);
            }
        }
        for ((pred, args), values) in streams {
            let (agg, kind) = chosen[&pred];
            if let Some(value) = reduce(agg, kind, &values) {
                facts.push(GroundAtom { pred, args, value });
            }
        }
    }
    Ok((out_schema, facts))
}

fn reduce(agg: Aggregator, kind: ValueKind, values: &[Value]) -> Option<Value> {
    let default = Value::default_for(kind);
    let entered = || values.iter().filter(|v| kind.is_numeric() || **v != default).count();
    let xs = || values.iter().map(Value::as_f64);
    match agg {
        Aggregator::Indicator => (entered() > 0).then_some(Value::Bool(true)),
        Aggregator::Count => Some(Value::Count(entered() as u64)),
        Aggregator::Min => Some(Value::Real(xs().fold(f64::INFINITY, f64::min))),
        Aggregator::Max => Some(Value::Real(xs().fold(f64::NEG_INFINITY, f64::max))),
        Aggregator::Mean => Some(Value::Real(xs().sum::<f64>() / values.len() as f64)),
        Aggregator::Latest => values.last().map(|v| Value::Real(v.as_f64())),
    }
}
