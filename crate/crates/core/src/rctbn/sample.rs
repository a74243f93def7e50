use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{Cim, Event, RctbnError, Trajectory};
use crate::logic::parse::strip_comment;
use crate::logic::{
    check_body, format_literals, holds, parse_literal, parse_literal_list, sym, Bindings, FactBase, GroundAtom,
    Layered, Literal, Schema, Substitution, Sym, Term, Value, ValueKind, ValueTest,
};

/// A sampled variable: a temporal predicate's state view and its initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec {
    pub pred: Sym,
    pub arity: usize,
    pub kind: ValueKind,
    pub init: Vec<f64>,
}

impl VarSpec {
    fn states(&self) -> usize {
        self.init.len()
    }

    fn value(&self, state: usize) -> Value {
        match self.kind {
            ValueKind::Boolean => Value::Bool(state == 1),
            _ => Value::Class(state as u32),
        }
    }
}

/// `head :- body` with the CIM that applies to the head grounding while the body holds.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthClause {
    pub head: Literal,
    pub body: Vec<Literal>,
    pub cim: Cim,
}

/// A group of entities sampled together as one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub name: Sym,
    pub entities: Vec<Sym>,
}

/// Generative model for forward sampling. Clauses sharing a head add their rates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSpec {
    pub vars: Vec<VarSpec>,
    pub clauses: Vec<GroundTruthClause>,
    pub units: Vec<Unit>,
}

fn perr(line: usize, msg: impl Into<String>) -> RctbnError {
    RctbnError::Parse { line, msg: msg.into() }
}

impl GroundTruthSpec {
    /// Parses lines of three forms against the full schema:
    ///
    /// ```text
    /// var cvd/1 init=1,0
    /// clause cvd(A) :- parent(B,A), cvd(B). cim=-0.9,0.9;0.0,0.0
    /// unit fam1 = c1 p1 p2
    /// ```
    pub fn parse(text: &str, schema: &Schema) -> Result<GroundTruthSpec, RctbnError> {
        let view = schema.state_view();
        let mut spec = GroundTruthSpec { vars: Vec::new(), clauses: Vec::new(), units: Vec::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let text = strip_comment(raw).trim();
            if text.is_empty() {
                continue;
            }
            if let Some(rest) = text.strip_prefix("var ") {
                let (decl, init) = rest
                    .split_once(" init=")
                    .ok_or_else(|| perr(line, "expected `var name/arity init=p0,p1,...`"))?;
                let (name, arity) = decl.trim().split_once('/').ok_or_else(|| perr(line, "expected name/arity"))?;
                let sig = schema.get(name).ok_or_else(|| perr(line, format!("unknown predicate `{name}`")))?;
                let arity: usize = arity.parse().map_err(|_| perr(line, format!("bad arity `{arity}`")))?;
                if !sig.temporal || sig.arity != arity + 1 {
                    return Err(perr(line, format!("`{name}/{arity}` must be the state view of a temporal predicate")));
                }
                let states = match sig.kind {
                    ValueKind::Boolean => 2,
                    ValueKind::Multiclass(k) => k as usize,
                    _ => return Err(perr(line, format!("`{name}` must be boolean or multiclass"))),
                };
                let init: Vec<f64> = init
                    .split(',')
                    .map(|p| p.trim().parse::<f64>().ok().filter(|p| p.is_finite() && *p >= 0.0))
                    .collect::<Option<_>>()
                    .ok_or_else(|| perr(line, format!("bad initial distribution `{init}`")))?;
                if init.len() != states || (init.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(perr(line, format!("initial distribution must have {states} entries summing to 1")));
                }
                if spec.vars.iter().any(|v| v.pred == sig.name) {
                    return Err(perr(line, format!("`{name}` declared twice")));
                }
                spec.vars.push(VarSpec { pred: sig.name.clone(), arity, kind: sig.kind, init });
            } else if let Some(rest) = text.strip_prefix("clause ") {
                let (clause, cim) = rest.rsplit_once(" cim=").ok_or_else(|| perr(line, "expected `. cim=<rows>`"))?;
                let clause =
                    clause.trim().strip_suffix('.').ok_or_else(|| perr(line, "clause must end with `.`"))?;
                let (head, body) = clause.split_once(":-").unwrap_or((clause, ""));
                let head = parse_literal(head.trim(), &view).map_err(|e| perr(line, e.to_string()))?;
                let body = parse_literal_list(body, &view).map_err(|e| perr(line, e.to_string()))?;
                let var = spec
                    .vars
                    .iter()
                    .find(|v| v.pred == head.atom.pred)
                    .ok_or_else(|| perr(line, format!("clause head `{}` is not a declared var", head.atom.pred)))?;
                let mut seen = Vec::new();
                for t in &head.atom.args {
                    match t {
                        Term::Var(v) if !seen.contains(v) => seen.push(v.clone()),
                        _ => return Err(perr(line, "head arguments must be distinct variables")),
                    }
                }
                if head.negated || head.atom.test != ValueTest::Any {
                    return Err(perr(line, "clause head must be a plain atom"));
                }
                let seed = Substitution::from_pairs(seen.iter().map(|v| (&**v, "_")));
                check_body(&body, &seed).map_err(|e| perr(line, e.to_string()))?;
                let cim = Cim::parse(cim).map_err(|e| perr(line, e.to_string()))?;
                if cim.states() != var.states() {
                    return Err(perr(line, format!("CIM has {} states, `{}` has {}", cim.states(), var.pred, var.states())));
                }
                spec.clauses.push(GroundTruthClause { head, body, cim });
            } else if let Some(rest) = text.strip_prefix("unit ") {
                let (name, members) = rest.split_once('=').ok_or_else(|| perr(line, "expected `unit name = e1 e2 ...`"))?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(perr(line, format!("bad unit name `{name}`")));
                }
                let entities: Vec<Sym> = members.split_whitespace().map(sym).collect();
                if entities.is_empty() {
                    return Err(perr(line, format!("unit `{name}` has no entities")));
                }
                spec.units.push(Unit { name: sym(name), entities });
            } else {
                return Err(perr(line, format!("unexpected `{text}`")));
            }
        }
        Ok(spec)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for v in &self.vars {
            let init: Vec<String> = v.init.iter().map(|p| format!("{p:?}")).collect();
            out.push_str(&format!("var {}/{} init={}\n", v.pred, v.arity, init.join(",")));
        }
        for c in &self.clauses {
            let head = format_literals(std::slice::from_ref(&c.head));
            if c.body.is_empty() {
                out.push_str(&format!("clause {head}. cim={}\n", c.cim));
            } else {
                out.push_str(&format!("clause {head} :- {}. cim={}\n", format_literals(&c.body), c.cim));
            }
        }
        for u in &self.units {
            out.push_str(&format!("unit {} = {}\n", u.name, u.entities.join(" ")));
        }
        out
    }
}

fn tuples(entities: &[Sym], arity: usize) -> Vec<Vec<Sym>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                entities.iter().map(move |e| {
                    let mut t = prefix.clone();
                    t.push(e.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Samples one trajectory per unit by racing exponential clocks.
///
/// Every grounding of every variable over the unit's entities is a stream. Initial
/// states are drawn from the variables' initial distributions and recorded at time
/// 0. At each step every stream draws a candidate time from the exit rate of its
/// current state, summed over the clauses whose bodies hold; the earliest candidate
/// fires and moves to a destination drawn in proportion to the off-diagonal rates.
/// Unit `i` uses the seeded generator on stream `i`.
pub fn forward_sample(
    spec: &GroundTruthSpec,
    db: &FactBase,
    horizon: f64,
    seed: u64,
) -> Result<Vec<Trajectory>, RctbnError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(RctbnError::Config(format!("horizon must be positive, got {horizon}")));
    }
    let view = std::sync::Arc::new(db.schema().state_view());
    spec.units
        .par_iter()
        .enumerate()
        .map(|(i, unit)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_unit(spec, unit, db, &view, horizon, &mut rng)
        })
        .collect()
}

struct Stream {
    var: usize,
    args: Vec<Sym>,
    state: usize,
}

fn sample_unit(
    spec: &GroundTruthSpec,
    unit: &Unit,
    db: &FactBase,
    view: &std::sync::Arc<Schema>,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, RctbnError> {
    let mut streams: Vec<Stream> = Vec::new();
    for (vi, var) in spec.vars.iter().enumerate() {
        for args in tuples(&unit.entities, var.arity) {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut state = var.states() - 1;
            for (k, p) in var.init.iter().enumerate() {
                acc += p;
                if u < acc {
                    state = k;
                    break;
                }
            }
            streams.push(Stream { var: vi, args, state });
        }
    }
    let atom = |s: &Stream| {
        let var = &spec.vars[s.var];
        GroundAtom { pred: var.pred.clone(), args: s.args.clone(), value: var.value(s.state) }
    };
    let mut events: Vec<Event> = streams.iter().map(|s| Event { time: 0.0, atom: atom(s) }).collect();
    let by_head: BTreeMap<&Sym, Vec<&GroundTruthClause>> =
        spec.clauses.iter().fold(BTreeMap::new(), |mut m, c| {
            m.entry(&c.head.atom.pred).or_default().push(c);
            m
        });

    let mut t = 0.0;
    loop {
        let facts: Vec<GroundAtom> = streams.iter().map(atom).filter(|a| a.value != Value::Bool(false)).collect();
        let snapshot = FactBase::from_trusted(view.clone(), facts);
        let world = Layered { base: db, top: &snapshot };
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for (si, s) in streams.iter().enumerate() {
            let var = &spec.vars[s.var];
            let mut row = vec![0.0; var.states()];
            let mut active = false;
            for c in by_head.get(&var.pred).into_iter().flatten() {
                let mut b = Bindings::default();
                for (term, value) in c.head.atom.args.iter().zip(&s.args) {
                    b.push(term.symbol().clone(), value.clone());
                }
                if holds(&c.body, &mut b, &world) {
                    active = true;
                    for (to, r) in row.iter_mut().enumerate() {
                        if to != s.state {
                            *r += c.cim.rate(s.state, to);
                        }
                    }
                }
            }
            if !active {
                return Err(RctbnError::NoActiveClause(atom(s).key()));
            }
            let exit: f64 = row.iter().sum();
            if exit > 0.0 {
                let candidate = Exp::new(exit).expect("positive rate").sample(rng);
                if best.as_ref().is_none_or(|(b, _, _)| candidate < *b) {
                    best = Some((candidate, si, row));
                }
            }
        }
        let Some((dt, si, row)) = best else { break };
        t += dt;
        if t >= horizon {
            break;
        }
        let exit: f64 = row.iter().sum();
        let u: f64 = rng.random::<f64>() * exit;
        let mut acc = 0.0;
        let mut dest = row.iter().rposition(|&r| r > 0.0).expect("positive exit rate");
        for (k, r) in row.iter().enumerate() {
            acc += r;
            if *r > 0.0 && u < acc {
                dest = k;
                break;
            }
        }
        streams[si].state = dest;
        events.push(Event { time: t, atom: atom(&streams[si]) });
    }
    let full = db.schema();
    Trajectory::new(&unit.name, events, horizon, full)
}
