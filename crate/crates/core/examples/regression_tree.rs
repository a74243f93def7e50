//! Fit one relational regression tree to per-example targets.

use std::sync::Arc;

use relboost::logic::{parse_facts, ModeSet};
use relboost::regtree::{fit_tree, RegressionExample, TreeConfig};
use relboost::{GroundAtom, Schema, Value};

fn main() {
    let schema = Arc::new(Schema::parse("pred: risk/1.\npred: smokes/1.\npred: friend/2.\npred: age/1 continuous.").unwrap());
    let mut facts = String::new();
    let mut examples = Vec::new();
    for i in 0..30 {
        let smokes = i % 3 == 0;
        let friend_smokes = i % 5 == 0;
        if smokes {
            facts.push_str(&format!("smokes(p{i}).\n"));
        }
        facts.push_str(&format!("friend(p{i},q{i}).\nage(p{i})={}.0.\n", 20 + 2 * i));
        if friend_smokes {
            facts.push_str(&format!("smokes(q{i}).\n"));
        }
        let target = 0.1 + if smokes { 0.6 } else { 0.0 } + if friend_smokes { 0.2 } else { 0.0 };
        examples.push(RegressionExample::new(GroundAtom::new("risk", &[&format!("p{i}")], Value::Bool(true)), target));
    }
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let modes = ModeSet::parse("mode: smokes(+).\nmode: friend(+,-).\nmode: age(+).", &schema).unwrap();
    let tree = fit_tree(&examples, &db, &modes, &TreeConfig { max_leaves: 4, ..TreeConfig::default() }).unwrap();
    print!("{}", tree.serialize());
    for i in [0, 5, 15, 7] {
        let atom = GroundAtom::new("risk", &[&format!("p{i}")], Value::Bool(true));
        println!("p{i}: {:.3}", tree.evaluate(&atom, &db));
    }
}
