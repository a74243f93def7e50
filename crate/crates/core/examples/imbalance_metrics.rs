//! Weighted AUC-ROC, F-delta and the confusion report on an imbalanced ranking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relboost::metrics::{
    auc_roc, confusion_report, roc_points, strip_weights, weighted_auc_roc, FDeltaConfig, PredictionSet, WeightConfig,
};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // Positives score higher on average; some hide among the low scores.
    let mut items: Vec<(f64, bool)> = (0..20).map(|_| (rng.random_range(0.2..1.0), true)).collect();
    items.extend((0..1000).map(|_| (rng.random_range(0.0..0.6), false)));
    let preds = PredictionSet::new(items);

    println!("strip weights N=4 gamma=0.8: {:?}", strip_weights(WeightConfig { strips: 4, gamma: 0.8 }));
    println!("auc_roc {:.4}", auc_roc(&preds).unwrap());
    for gamma in [0.0, 0.5, 0.8, 0.95] {
        let w = weighted_auc_roc(&preds, WeightConfig { strips: 4, gamma }).unwrap();
        println!("weighted auc_roc gamma={gamma}: {w:.4}");
    }
    let points = roc_points(&preds).unwrap();
    println!("{} roc points; first after the origin {:?}", points.len(), points.get(1));

    let threshold = preds.default_threshold();
    for delta in [1.0, 5.0] {
        let r = confusion_report(&preds, threshold, FDeltaConfig { delta }).unwrap();
        println!("threshold {threshold:.4} delta {delta}: fnr {:.3} fpr {:.3} f_delta {:.4}", r.fnr, r.fpr, r.f_delta);
    }
}
