//! Poisson, Gaussian and multinomial targets learned from a boolean parent.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use relboost::hybrid::{train_hybrid_one, HybridConfig, HybridModel};
use relboost::logic::{parse_facts, ExampleSet, FactBase, ModeSet};
use relboost::{GroundAtom, Schema, Value};

fn show(model: &HybridModel, db: &FactBase, who: &[&str]) {
    for e in who {
        let atom = GroundAtom::new(&model.target.name, &[e], Value::default_for(model.target.kind));
        println!("  {e}: {:?}", model.predict(&atom, db));
    }
}

fn main() {
    let schema = Arc::new(
        Schema::parse("pred: smoker/1.\npred: visits/1 count.\npred: level/1 continuous.\npred: risk/1 multiclass:3.").unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 2000;
    let smokers: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    let facts: String = (0..n).filter(|&i| smokers[i]).map(|i| format!("smoker(e{i}).\n")).collect();
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let modes = ModeSet::parse("mode: smoker(+).", &schema).unwrap();

    let (mut visits, mut level, mut risk) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &s) in smokers.iter().enumerate() {
        let e = format!("e{i}");
        let lambda = if s { 5.0 } else { 1.5 };
        visits.push(GroundAtom::new("visits", &[&e], Value::Count(Poisson::new(lambda).unwrap().sample(&mut rng) as u64)));
        let mu = if s { 2.5 } else { 1.0 };
        level.push(GroundAtom::new("level", &[&e], Value::Real(Normal::new(mu, 0.5).unwrap().sample(&mut rng))));
        let high = if s { 0.5 } else { 0.1 };
        let u: f64 = rng.random();
        let k = if u < high { 2 } else if u < high + 0.3 { 1 } else { 0 };
        risk.push(GroundAtom::new("risk", &[&e], Value::Class(k)));
    }
    let who = ["e0", "e1", "e2", "e3"];
    println!("smokers among {who:?}: {:?}", &smokers[..4]);

    // Smaller steps keep e^ψ and σ from overshooting on this data.
    for (name, atoms, eta) in [("visits", visits, Some(0.1)), ("level", level, Some(0.1)), ("risk", risk, None)] {
        let set = ExampleSet::from_entries(schema.require(name).unwrap().clone(), atoms).unwrap();
        let config = HybridConfig { iterations: 60, eta, eta_sigma: eta, ..HybridConfig::default() };
        let model = train_hybrid_one(&set, &db, &modes, &config).unwrap();
        println!("{name} ({:?}, eta {})", model.kind, model.eta);
        show(&model, &db, &who);
    }
}
