use std::collections::BTreeMap;

use super::RctbnError;
use crate::logic::parse::{parse_ground, strip_comment};
use crate::logic::{sym, GroundAtom, Schema, Sym, Value};

/// A stream value observed at a time. Events at `t = 0` give initial values; a stream
/// without one starts at its kind's default (`false`, class 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Atom over the predicate's state view (time argument dropped).
    pub atom: GroundAtom,
}

/// Events of one unit, sorted by time and then by stream key, observed up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub entity: Sym,
    pub events: Vec<Event>,
    pub horizon: f64,
}

impl Trajectory {
    /// Validates and sorts. `schema` is the full schema; every event predicate must be
    /// temporal and events are checked against its state view.
    ///
    /// Discrete streams (boolean, multiclass) must change value at every event after
    /// time 0, and no two discrete streams may change at the same instant. Numeric
    /// streams are measurements and only need strictly increasing times.
    pub fn new(entity: &str, mut events: Vec<Event>, horizon: f64, schema: &Schema) -> Result<Trajectory, RctbnError> {
        let err = |msg: String| RctbnError::Trajectory { entity: entity.to_string(), msg };
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(err(format!("horizon must be positive, got {horizon}")));
        }
        for e in &events {
            let sig = schema.get(&e.atom.pred).ok_or_else(|| err(format!("unknown predicate `{}`", e.atom.pred)))?;
            if !sig.temporal {
                return Err(err(format!("`{}` is not a temporal predicate", e.atom.pred)));
            }
            let view = sig.state_view();
            if view.arity != e.atom.args.len() || !e.atom.value.matches(view.kind) {
                return Err(err(format!("event `{}` does not fit `{}`", e.atom, view.key())));
            }
            if !(e.time.is_finite() && e.time >= 0.0 && e.time < horizon) {
                return Err(err(format!("event time {} outside [0, {horizon})", e.time)));
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.atom.cmp(&b.atom)));

        let mut last: BTreeMap<(Sym, Vec<Sym>), (f64, Value)> = BTreeMap::new();
        let mut last_change: Option<(f64, String)> = None;
        for e in &events {
            let kind = schema.get(&e.atom.pred).expect("checked above").kind;
            let discrete = !kind.is_numeric();
            let key = (e.atom.pred.clone(), e.atom.args.clone());
            let prev = last.get(&key).copied();
            if let Some((t, _)) = prev {
                if t == e.time {
                    return Err(err(format!("two events for `{}` at time {t}", e.atom.key())));
                }
            }
            if discrete && e.time > 0.0 {
                let before = prev.map_or(Value::default_for(kind), |(_, v)| v);
                if before == e.atom.value {
                    return Err(err(format!("event `{}` at {} does not change the value", e.atom, e.time)));
                }
                if let Some((t, other)) = &last_change {
                    if *t == e.time {
                        return Err(err(format!(
                            "`{other}` and `{}` change simultaneously at {t}",
                            e.atom.key()
                        )));
                    }
                }
                last_change = Some((e.time, e.atom.key()));
            }
            last.insert(key, (e.time, e.atom.value));
        }
        Ok(Trajectory { entity: sym(entity), events, horizon })
    }

    /// Stream values in effect at time `t` (events at or before `t` applied), keyed by
    /// predicate and arguments. Only streams that have an event appear.
    pub fn state_at(&self, t: f64) -> BTreeMap<(Sym, Vec<Sym>), Value> {
        let mut state = BTreeMap::new();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            state.insert((e.atom.pred.clone(), e.atom.args.clone()), e.atom.value);
        }
        state
    }
}

/// Parses `traj <entity>` blocks of `t=<real> <atom>=<value>` lines closed by
/// `horizon=<real>`. `%` starts a comment.
pub fn parse_trajectories(text: &str, schema: &Schema) -> Result<Vec<Trajectory>, RctbnError> {
    let view = schema.state_view();
    let mut out = Vec::new();
    let mut open: Option<(usize, String, Vec<Event>)> = None;
    let perr = |line: usize, msg: String| RctbnError::Parse { line, msg };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        if let Some(entity) = text.strip_prefix("traj ") {
            if let Some((start, name, _)) = &open {
                return Err(perr(*start, format!("trajectory `{name}` has no horizon line")));
            }
            open = Some((line, entity.trim().to_string(), Vec::new()));
        } else if let Some(h) = text.strip_prefix("horizon=") {
            let (_, name, events) = open.take().ok_or_else(|| perr(line, "horizon outside a trajectory".into()))?;
            let horizon: f64 = h.trim().parse().map_err(|_| perr(line, format!("bad horizon `{h}`")))?;
            out.push(Trajectory::new(&name, events, horizon, schema).map_err(|e| perr(line, e.to_string()))?);
        } else if let Some(rest) = text.strip_prefix("t=") {
            let (_, _, events) = open.as_mut().ok_or_else(|| perr(line, "event outside a trajectory".into()))?;
            let (time, atom) = rest.split_once(char::is_whitespace).ok_or_else(|| perr(line, "expected `t=<time> <atom>`".into()))?;
            let time: f64 = time.parse().ok().filter(|t: &f64| t.is_finite()).ok_or_else(|| perr(line, format!("time `{time}` is not numeric")))?;
            let atom = atom.trim();
            if !atom.contains('=') {
                return Err(perr(line, format!("event `{atom}` needs an explicit `=value`")));
            }
            let sig = schema.get(atom.split('(').next().unwrap_or("").trim());
            if sig.is_some_and(|s| !s.temporal) {
                return Err(perr(line, format!("`{atom}` is not a temporal predicate")));
            }
            let atom = parse_ground(atom, &view).map_err(|e| perr(line, e.to_string()))?;
            events.push(Event { time, atom });
        } else {
            return Err(perr(line, format!("unexpected `{text}`")));
        }
    }
    if let Some((start, name, _)) = open {
        return Err(perr(start, format!("trajectory `{name}` has no horizon line")));
    }
    Ok(out)
}

pub fn serialize_trajectories(trajs: &[Trajectory]) -> String {
    let mut out = String::new();
    for t in trajs {
        out.push_str(&format!("traj {}\n", t.entity));
        for e in &t.events {
            out.push_str(&format!("t={:?} {}={}\n", e.time, e.atom.key(), e.atom.value));
        }
        out.push_str(&format!("horizon={:?}\n", t.horizon));
    }
    out
}
