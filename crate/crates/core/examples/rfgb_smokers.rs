//! Boosted relational dependency network for `sick/1` on the bundled smokers domain,
//! trained with hard and soft-margin gradients.

use std::path::Path;
use std::sync::Arc;

use relboost::boost::{self, predict_all, BoostConfig, GradientKind};
use relboost::logic::{parse_examples, parse_facts, ExampleFile, ModeSet};
use relboost::metrics::{auc_roc, confusion_report, FDeltaConfig, PredictionSet};
use relboost::regtree::TreeConfig;
use relboost::Schema;

fn read(name: &str) -> String {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/smokers");
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn main() {
    let schema = Arc::new(Schema::parse(&read("schema.txt")).unwrap());
    let db = parse_facts(&read("facts.txt"), schema.clone()).unwrap();
    let modes = ModeSet::parse(&read("modes.txt"), &schema).unwrap();
    let target = schema.require("sick").unwrap();
    let mut examples = parse_examples(&read("pos.txt"), target, ExampleFile::Positive).unwrap();
    examples.merge(parse_examples(&read("neg.txt"), target, ExampleFile::Negative).unwrap()).unwrap();
    println!("{} examples, {} positive", examples.len(), examples.count_positive());

    let config = BoostConfig { iterations: 10, tree: TreeConfig { max_leaves: 4, ..TreeConfig::default() }, ..BoostConfig::default() };
    for kind in [GradientKind::Hard, GradientKind::Soft { alpha: 0.5, beta: -2.0 }] {
        let (model, log) = boost::train_logged(&examples, &db, &modes, &config, kind).unwrap();
        let probs = predict_all(&model, &examples, &db);
        let preds = PredictionSet::new(probs.iter().enumerate().map(|(i, &p)| (p, examples.label(i) == Some(true))).collect());
        let report = confusion_report(&preds, preds.default_threshold(), FDeltaConfig::default()).unwrap();
        println!("\n{kind:?}");
        println!("objective {:.3} -> {:.3}", log[0], log[log.len() - 1]);
        println!("first tree splits on `{}`", model.trees[0].root_test_text().unwrap_or_default());
        println!("training auc_roc {:.3}", auc_roc(&preds).unwrap());
        print!("{report}");
    }
}
