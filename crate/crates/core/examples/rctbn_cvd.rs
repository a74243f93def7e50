//! Forward-sample family trajectories in which a parent's cvd raises the child's onset
//! rate, then learn the onset intensity back from the segments.

use std::collections::BTreeMap;
use std::sync::Arc;

use relboost::logic::{parse_facts, ModeSet, Sym};
use relboost::rctbn::{
    forward_sample, segment, serialize_trajectories, train_rctbn_logged, GroundTruthSpec, RctbnConfig, Transition,
};
use relboost::regtree::TreeConfig;
use relboost::{Schema, Value};

fn main() {
    let schema = Arc::new(Schema::parse("pred: cvd/2 temporal.\npred: hyp/2 temporal.\npred: parent/2.").unwrap());
    let mut spec = String::from(
        "var cvd/1 init=1.0,0.0\n\
         var hyp/1 init=0.5,0.5\n\
         clause cvd(A). cim=-0.1,0.1;0.0,0.0\n\
         clause cvd(A) :- parent(B,A), cvd(B). cim=-0.9,0.9;0.0,0.0\n\
         clause hyp(A). cim=-1.0,1.0;1.0,-1.0\n",
    );
    let mut facts = String::new();
    for i in 0..200 {
        spec.push_str(&format!("unit f{i} = p{i}"));
        for k in 0..4 {
            spec.push_str(&format!(" c{i}_{k}"));
            facts.push_str(&format!("parent(p{i},c{i}_{k}).\n"));
        }
        spec.push('\n');
    }
    let spec = GroundTruthSpec::parse(&spec, &schema).unwrap();
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let trajs = forward_sample(&spec, &db, 10.0, 3).unwrap();
    let text = serialize_trajectories(&trajs);
    println!("sampled {} trajectories; the first begins:", trajs.len());
    text.lines().take(8).for_each(|l| println!("  {l}"));

    let onset = Transition::parse("cvd:false->true", &schema).unwrap();
    let segs = segment(&trajs, &onset, &schema).unwrap();
    println!("{} segments, {} positive", segs.len(), segs.iter().filter(|s| s.positive).count());

    let modes = ModeSet::parse("mode: cvd(+).\nmode: hyp(+).\nmode: parent(-,+).", &schema.state_view()).unwrap();
    let config = RctbnConfig { iterations: 150, tree: TreeConfig { max_leaves: 2, ..TreeConfig::default() }, ..RctbnConfig::default() };
    let (model, log) = train_rctbn_logged(&segs, &db, &onset, &modes, &config).unwrap();
    println!("log-likelihood {:.1} -> {:.1}", log[0], log[log.len() - 1]);
    println!("first split: {}", model.trees[0].root_test_text().unwrap_or_default());

    let parents: BTreeMap<Sym, Sym> = db.facts_of("parent").iter().map(|f| (f.args[1].clone(), f.args[0].clone())).collect();
    let mut by_context: BTreeMap<bool, (f64, usize)> = BTreeMap::new();
    for s in &segs {
        let sick_parent = parents
            .get(&s.target.args[0])
            .is_some_and(|p| s.context.value_of("cvd", std::slice::from_ref(p)) == Some(Value::Bool(true)));
        let e = by_context.entry(sick_parent).or_default();
        e.0 += model.intensity(s, &db);
        e.1 += 1;
    }
    for (sick_parent, (sum, n)) in by_context {
        println!("parent has cvd = {sick_parent}: mean learned onset rate {:.3} over {n} segments", sum / n as f64);
    }
}
