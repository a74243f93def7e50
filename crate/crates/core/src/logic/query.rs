use std::collections::BTreeSet;

use super::{Atom, FactSource, GroundAtom, Literal, LogicError, Substitution, Sym, Term};

/// Variable bindings as a stack so backtracking is a truncate.
#[derive(Debug, Clone, Default)]
pub(crate) struct Bindings(Vec<(Sym, Sym)>);

impl Bindings {
    pub(crate) fn from_subst(s: &Substitution) -> Self {
        Bindings(s.iter().map(|(v, c)| (v.clone(), c.clone())).collect())
    }

    pub(crate) fn get(&self, var: &str) -> Option<&Sym> {
        self.0.iter().rev().find(|(v, _)| &**v == var).map(|(_, c)| c)
    }

    pub(crate) fn push(&mut self, var: Sym, value: Sym) {
        self.0.push((var, value));
    }

    fn to_subst(&self) -> Substitution {
        let mut s = Substitution::new();
        for (v, c) in &self.0 {
            s.bind(v.clone(), c.clone());
        }
        s
    }
}

/// Head variables bound to the target's arguments.
pub(crate) fn head_bindings(target: &GroundAtom) -> Bindings {
    Bindings(super::head_vars(target.args.len()).into_iter().zip(target.args.iter().cloned()).collect())
}

fn pattern<'b>(atom: &'b Atom, b: &'b Bindings) -> Vec<Option<&'b str>> {
    atom.args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Some(&**c),
            Term::Var(v) => b.get(v).map(|c| &**c),
        })
        .collect()
}

/// Binds the unbound variables of `atom` to `fact`'s arguments. Fails on repeated
/// variables that would need two different constants.
fn unify(atom: &Atom, fact: &GroundAtom, b: &mut Bindings) -> bool {
    for (t, c) in atom.args.iter().zip(&fact.args) {
        if let Term::Var(v) = t {
            match b.get(v) {
                Some(bound) => {
                    if bound != c {
                        return false;
                    }
                }
                None => b.0.push((v.clone(), c.clone())),
            }
        }
    }
    true
}

fn exists<S: FactSource + ?Sized>(atom: &Atom, b: &mut Bindings, db: &S) -> bool {
    let mut found = Vec::new();
    db.lookup(&atom.pred, &pattern(atom, b), &mut found);
    let mark = b.0.len();
    for fact in found {
        if atom.test.accepts(&fact.value) {
            let ok = unify(atom, fact, b);
            b.0.truncate(mark);
            if ok {
                return true;
            }
        }
    }
    false
}

/// Existential evaluation with early exit; the fast path used by tree learning and
/// inference. Callers are expected to have validated the body with [`check_body`].
pub(crate) fn holds<S: FactSource + ?Sized>(body: &[Literal], b: &mut Bindings, db: &S) -> bool {
    let Some((first, rest)) = body.split_first() else { return true };
    if first.negated {
        return !exists(&first.atom, b, db) && holds(rest, b, db);
    }
    let mut found = Vec::new();
    db.lookup(&first.atom.pred, &pattern(&first.atom, b), &mut found);
    let mark = b.0.len();
    for fact in found {
        if !first.atom.test.accepts(&fact.value) {
            continue;
        }
        let ok = unify(&first.atom, fact, b) && holds(rest, b, db);
        b.0.truncate(mark);
        if ok {
            return true;
        }
    }
    false
}

fn collect<S: FactSource + ?Sized>(body: &[Literal], b: &mut Bindings, db: &S, out: &mut BTreeSet<Substitution>) {
    let Some((first, rest)) = body.split_first() else {
        out.insert(b.to_subst());
        return;
    };
    if first.negated {
        if !exists(&first.atom, b, db) {
            collect(rest, b, db, out);
        }
        return;
    }
    let mut found = Vec::new();
    db.lookup(&first.atom.pred, &pattern(&first.atom, b), &mut found);
    let mark = b.0.len();
    for fact in found {
        if first.atom.test.accepts(&fact.value) && unify(&first.atom, fact, b) {
            collect(rest, b, db, out);
        }
        b.0.truncate(mark);
    }
}

/// Every extension of `subst` grounding `atom` to a fact, in ascending order.
pub fn match_atom<S: FactSource + ?Sized>(atom: &Atom, subst: &Substitution, db: &S) -> Vec<Substitution> {
    let mut out = BTreeSet::new();
    collect(&[Literal::pos(atom.clone())], &mut Bindings::from_subst(subst), db, &mut out);
    out.into_iter().collect()
}

/// Checks that every negated literal only uses variables bound before it or local to
/// it. A variable first seen inside a negation and reused afterwards can never be bound.
pub fn check_body(body: &[Literal], seed: &Substitution) -> Result<(), LogicError> {
    let mut bound: BTreeSet<&str> = seed.iter().map(|(v, _)| &**v).collect();
    for (i, lit) in body.iter().enumerate() {
        if lit.negated {
            for v in lit.atom.vars() {
                if !bound.contains(&**v) && body[i + 1..].iter().any(|l| l.atom.vars().any(|w| w == v)) {
                    return Err(LogicError::UnboundVariable(v.to_string()));
                }
            }
        } else {
            bound.extend(lit.atom.vars().map(|v| &**v));
        }
    }
    Ok(())
}

/// All groundings of the positive variables of `body` extending `seed`, ascending.
pub fn match_body<S: FactSource + ?Sized>(
    body: &[Literal],
    seed: &Substitution,
    db: &S,
) -> Result<Vec<Substitution>, LogicError> {
    check_body(body, seed)?;
    let mut out = BTreeSet::new();
    collect(body, &mut Bindings::from_subst(seed), db, &mut out);
    Ok(out.into_iter().collect())
}

/// True iff at least one grounding of `body` extending `seed` exists.
pub fn satisfies<S: FactSource + ?Sized>(body: &[Literal], seed: &Substitution, db: &S) -> Result<bool, LogicError> {
    check_body(body, seed)?;
    Ok(holds(body, &mut Bindings::from_subst(seed), db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_facts, parse_literal, parse_literal_list, FactBase, Schema};
    use proptest::prelude::*;
    use std::sync::Arc;

    const TABLE: &str = "\
familyMember(ann,mary).
familyMember(bob,mary).
familyMember(eve,mary).
familyMember(tom,mary).
familyMember(mary,ann).
diabetes(ann,t2).
";

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::parse("pred: familyMember/2.\npred: diabetes/2.\npred: age/1 count.\npred: empty/1.").unwrap())
    }

    fn db() -> FactBase {
        parse_facts(TABLE, schema()).unwrap()
    }

    #[test]
    fn family_members_of_mary() {
        let lit = parse_literal("familyMember(Y,mary)", &schema()).unwrap();
        let subs = match_atom(&lit.atom, &Substitution::new(), &db());
        let ys: Vec<String> = subs.iter().map(|s| s.get("Y").unwrap().to_string()).collect();
        assert_eq!(ys, ["ann", "bob", "eve", "tom"]);
        assert_eq!(subs, match_atom(&lit.atom, &Substitution::new(), &db()));
    }

    #[test]
    fn empty_db_and_ground_atom() {
        let lit = parse_literal("familyMember(Y,mary)", &schema()).unwrap();
        assert!(match_atom(&lit.atom, &Substitution::new(), &FactBase::empty(schema())).is_empty());
        let ground = parse_literal("familyMember(bob,mary)", &schema()).unwrap();
        let seed = Substitution::from_pairs([("Z", "x")]);
        assert_eq!(match_atom(&ground.atom, &seed, &db()), vec![seed]);
    }

    #[test]
    fn satisfies_cases() {
        let s = schema();
        let db = db();
        assert!(satisfies(&[], &Substitution::new(), &db).unwrap());
        let body = parse_literal_list("familyMember(Y,mary), diabetes(Y,T)", &s).unwrap();
        assert!(satisfies(&body, &Substitution::new(), &db).unwrap());
        let grounded = match_body(&body, &Substitution::new(), &db).unwrap();
        assert_eq!(grounded, vec![Substitution::from_pairs([("T", "t2"), ("Y", "ann")])]);
        let none = parse_literal_list("empty(X)", &s).unwrap();
        assert!(!satisfies(&none, &Substitution::new(), &db).unwrap());
    }

    #[test]
    fn negation_as_failure() {
        let s = schema();
        let db = db();
        let body = parse_literal_list("familyMember(Y,mary), \\+diabetes(Y,T)", &s).unwrap();
        let ys: Vec<String> = match_body(&body, &Substitution::new(), &db)
            .unwrap()
            .iter()
            .map(|m| m.get("Y").unwrap().to_string())
            .collect();
        assert_eq!(ys, ["bob", "eve", "tom"]);
        let unsafe_body = parse_literal_list("\\+diabetes(Y,T), familyMember(Y,mary)", &s).unwrap();
        assert!(matches!(satisfies(&unsafe_body, &Substitution::new(), &db), Err(LogicError::UnboundVariable(_))));
    }

    #[test]
    fn repeated_variables_unify() {
        let s = schema();
        let db = parse_facts("familyMember(a,a).\nfamilyMember(a,b).", s.clone()).unwrap();
        let lit = parse_literal("familyMember(X,X)", &s).unwrap();
        assert_eq!(match_atom(&lit.atom, &Substitution::new(), &db).len(), 1);
    }

    #[test]
    fn value_tests_filter() {
        let s = schema();
        let db = parse_facts("age(a)=3.\nage(b)=7.", s.clone()).unwrap();
        let lit = parse_literal("age(X)>=5", &s).unwrap();
        let m = match_atom(&lit.atom, &Substitution::new(), &db);
        assert_eq!(m, vec![Substitution::from_pairs([("X", "b")])]);
    }

    fn random_literal() -> impl Strategy<Value = String> {
        let var = prop::sample::select(vec!["X", "Y", "Z", "a", "b"]);
        (any::<bool>(), any::<bool>(), var.clone(), var).prop_map(|(neg, fam, x, y)| {
            let p = if fam { "familyMember" } else { "diabetes" };
            format!("{}{p}({x},{y})", if neg { "\\+" } else { "" })
        })
    }

    proptest! {
        #[test]
        fn satisfies_agrees_with_match(
            facts in prop::collection::vec((any::<bool>(), 0usize..3, 0usize..3), 0..20),
            lits in prop::collection::vec(random_literal(), 0..=3),
        ) {
            let consts = ["a", "b", "c"];
            let mut text = String::new();
            for (fam, x, y) in facts {
                let p = if fam { "familyMember" } else { "diabetes" };
                text.push_str(&format!("{p}({},{}).\n", consts[x], consts[y]));
            }
            let s = schema();
            let db = parse_facts(&text, s.clone()).unwrap();
            let body: Vec<Literal> = lits.iter().map(|l| parse_literal(l, &s).unwrap()).collect();
            let seed = Substitution::new();
            match satisfies(&body, &seed, &db) {
                Ok(sat) => prop_assert_eq!(sat, !match_body(&body, &seed, &db).unwrap().is_empty()),
                Err(_) => prop_assert!(match_body(&body, &seed, &db).is_err()),
            }
        }
    }
}
