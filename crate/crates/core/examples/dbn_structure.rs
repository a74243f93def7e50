//! Score and search two-slice DBN structures on a planted dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relboost::dbn::{hill_climb, score_network, DbnVariable, DiscreteDataset, ScoreKind, TwoSliceNetwork};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vars: Vec<DbnVariable> = ["a", "b", "c"].iter().map(|s| DbnVariable { name: s.to_string(), arity: 2 }).collect();
    // a persists across slices, b copies a within a slice, c is noise.
    let rows = (0..3000)
        .map(|_| {
            let prev: Vec<u32> = (0..3).map(|_| rng.random_range(0..2)).collect();
            let a = if rng.random_bool(0.9) { prev[0] } else { 1 - prev[0] };
            let b = if rng.random_bool(0.85) { a } else { 1 - a };
            vec![prev[0], prev[1], prev[2], a, b, rng.random_range(0..2)]
        })
        .collect();
    let data = DiscreteDataset::new(vars.clone(), rows).unwrap();

    let empty = TwoSliceNetwork::empty(vars);
    for kind in [ScoreKind::Bic, ScoreKind::Bde { ess: 1.0 }, ScoreKind::Mit { alpha: 0.999 }] {
        let net = hill_climb(&data, kind, 2).unwrap();
        println!(
            "{kind:?}: empty {:.1}, learned {:.1}, {} arcs",
            score_network(&empty, &data, kind),
            score_network(&net, &data, kind),
            net.arc_count()
        );
        print!("{net}");
    }
}
