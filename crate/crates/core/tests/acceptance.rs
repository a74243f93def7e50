//! End-to-end acceptance checks. Each test prints one `criterion N ... PASS|FAIL` line
//! with its runtime straight to stderr, so the lines survive output capture.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use relboost::boost::{
    self, predict_all, soft_gradient_psi, soft_objective, BoostConfig, BoostedModel, GradientKind,
};
use relboost::dbn::{
    family_score, hill_climb, score_network, DbnVariable, DiscreteDataset, ScoreKind, TwoSliceNetwork,
};
use relboost::hybrid::{
    gaussian_gradients, gaussian_ll, multinomial_gradient, multinomial_ll, multinomial_prob, poisson_gradient,
    poisson_ll, train_hybrid_one, HybridConfig, HybridModel, Prediction,
};
use relboost::logic::{parse_facts, ExampleSet, FactBase, ModeSet, Sym};
use relboost::metrics::{auc_roc, confusion_report, strip_weights, weighted_auc_roc, FDeltaConfig, PredictionSet, WeightConfig};
use relboost::rctbn::{
    amalgamate, forward_sample, neg_gradient_phi, parse_trajectories, pos_gradient_phi, segment, segment_ll,
    serialize_trajectories, train_rctbn_logged, Cim, ConditionalCim, GroundTruthSpec, RctbnConfig, RctbnModel, Segment,
    Transition,
};
use relboost::regtree::TreeConfig;
use relboost::{GroundAtom, Schema, Value};

/// Collects named checks and reports them as one line.
struct Criterion {
    number: u32,
    title: &'static str,
    budget_s: f64,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(number: u32, title: &'static str, budget_s: f64) -> Self {
        Criterion { number, title, budget_s, start: Instant::now(), failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn finish(mut self) {
        let secs = self.start.elapsed().as_secs_f64();
        if secs > self.budget_s {
            self.failures.push(format!("runtime {secs:.2}s over budget {}s", self.budget_s));
        }
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {:>2} {:<34} {verdict} ({secs:.2}s, budget {}s)", self.number, self.title, self.budget_s);
        if !self.notes.is_empty() {
            line.push_str(&format!(" [{}]", self.notes.join("; ")));
        }
        let _ = writeln!(std::io::stderr().lock(), "{line}");
        assert!(self.failures.is_empty(), "criterion {} failed: {}", self.number, self.failures.join("; "));
    }
}

/// Five-point central difference.
fn derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0);
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-9)
}

// ---------------------------------------------------------------------------
// Synthetic relational domain with a controllable class ratio.

struct Domain {
    schema: Arc<Schema>,
    db: FactBase,
    modes: ModeSet,
    train: ExampleSet,
    test: ExampleSet,
}

/// People labelled `sick`. Most positives smoke and are stressed; the rest are only
/// visible through a hazardous workplace, which a few negatives share.
fn imbalanced_domain(pos: usize, neg: usize, seed: u64) -> Domain {
    let schema = Arc::new(
        Schema::parse("pred: sick/1.\npred: smokes/1.\npred: stressed/1.\npred: works_at/2.\npred: hazardous/1.").unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut facts = String::new();
    let sites = 30;
    for s in 0..sites / 3 {
        facts.push_str(&format!("hazardous(s{s}).\n"));
    }
    let mut sets = Vec::new();
    for population in ["a", "b"] {
        let mut atoms = Vec::new();
        for i in 0..pos + neg {
            let person = format!("{population}{i}");
            let label = i < pos;
            let signature = rng.random_bool(if label { 0.6 } else { 0.03 });
            let (smokes, stressed) = if signature {
                (true, true)
            } else {
                let s = rng.random_bool(0.3);
                (s, !s && rng.random_bool(0.3))
            };
            if smokes {
                facts.push_str(&format!("smokes({person}).\n"));
            }
            if stressed {
                facts.push_str(&format!("stressed({person}).\n"));
            }
            let hazard = rng.random_bool(if label { 0.5 } else { 0.05 });
            let site = if hazard { rng.random_range(0..sites / 3) } else { rng.random_range(sites / 3..sites) };
            facts.push_str(&format!("works_at({person},s{site}).\n"));
            atoms.push(GroundAtom::new("sick", &[&person], Value::Bool(label)));
        }
        sets.push(ExampleSet::from_entries(schema.require("sick").unwrap().clone(), atoms).unwrap());
    }
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let modes =
        ModeSet::parse("mode: smokes(+).\nmode: stressed(+).\nmode: works_at(+,-).\nmode: hazardous(+).", &schema).unwrap();
    let test = sets.pop().unwrap();
    let train = sets.pop().unwrap();
    Domain { schema, db, modes, train, test }
}

fn predictions(model: &BoostedModel, examples: &ExampleSet, db: &FactBase) -> PredictionSet {
    let probs = predict_all(model, examples, db);
    PredictionSet::new(probs.into_iter().enumerate().map(|(i, p)| (p, examples.label(i) == Some(true))).collect())
}

#[test]
fn criterion_01_soft_margin_reduction() {
    let mut c = Criterion::new(1, "soft margin reduces to RFGB", 10.0);
    let d = imbalanced_domain(20, 300, 11);
    let config = BoostConfig { iterations: 10, neg_subsample_ratio: Some(4.0), seed: 5, ..BoostConfig::default() };
    let (hard, hard_log) = boost::train_logged(&d.train, &d.db, &d.modes, &config, GradientKind::Hard).unwrap();
    let (soft, soft_log) =
        boost::train_logged(&d.train, &d.db, &d.modes, &config, GradientKind::Soft { alpha: 0.0, beta: 0.0 }).unwrap();
    c.check(hard.trees.len() == 10 && soft.trees.len() == 10, "ten trees each");
    for (i, (h, s)) in hard.trees.iter().zip(&soft.trees).enumerate() {
        c.check(h.serialize() == s.serialize(), format!("tree {i} differs"));
    }
    let body = |m: &BoostedModel| m.serialize().split_once('\n').unwrap().1.to_string();
    c.check(body(&hard) == body(&soft), "serialized trees differ");
    c.check(hard.psi0.to_bits() == soft.psi0.to_bits(), "psi0 differs");
    c.check(hard_log.iter().zip(&soft_log).all(|(a, b)| a.to_bits() == b.to_bits()), "objective logs differ");
    let hp = predict_all(&hard, &d.test, &d.db);
    let sp = predict_all(&soft, &d.test, &d.db);
    c.check(hp.iter().zip(&sp).all(|(a, b)| a.to_bits() == b.to_bits()), "test predictions differ");
    c.finish();
}

#[test]
fn criterion_02_gradient_oracles() {
    let mut c = Criterion::new(2, "analytic gradients vs finite diffs", 30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = 1e-6;
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut record = |name: &'static str, analytic: f64, numeric: f64| {
        let e = relative(analytic, numeric);
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for _ in 0..1000 {
        let label = rng.random_bool(0.5);
        let (alpha, beta, psi) = (rng.random_range(-3.0..3.0), rng.random_range(-8.0..3.0), rng.random_range(-8.0..8.0));
        record("soft", soft_gradient_psi(label, psi, alpha, beta), derivative(|x| soft_objective(label, x, alpha, beta), psi));

        let k = rng.random_range(2..6);
        let psis: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let truth = rng.random_range(0..k);
        let j = rng.random_range(0..k);
        let analytic = multinomial_gradient(truth, &multinomial_prob(&psis))[j];
        let numeric = derivative(
            |x| {
                let mut p = psis.clone();
                p[j] = x;
                multinomial_ll(truth, &p)
            },
            psis[j],
        );
        record("multinomial", analytic, numeric);

        let y = rng.random_range(0..40u64);
        let psi = rng.random_range(-3.0..4.0);
        record("poisson", poisson_gradient(y, psi), derivative(|x| poisson_ll(y, x), psi));

        let (y, mu, sigma) = (rng.random_range(-10.0..10.0), rng.random_range(-5.0..5.0), rng.random_range(0.2..5.0));
        let (dm, ds) = gaussian_gradients(y, mu, sigma).unwrap();
        record("gaussian_mu", dm, derivative(|x| gaussian_ll(y, x, sigma), mu));
        record("gaussian_sigma", ds, derivative(|x| gaussian_ll(y, mu, x), sigma));

        let (phi, t) = (rng.random_range(-4.0..3.0), rng.random_range(0.01..5.0));
        record("rctbn_pos", pos_gradient_phi(phi, t), derivative(|x| segment_ll(true, x, t), phi));
        record("rctbn_neg", neg_gradient_phi(phi, t), derivative(|x| segment_ll(false, x, t), phi));
    }
    for (name, e) in &worst {
        c.check(*e <= tol, format!("{name}: worst relative error {e:e}"));
    }
    let max = worst.values().cloned().fold(0.0, f64::max);
    c.note(format!("7 gradients x 1000 points, worst rel err {max:.1e}"));
    c.finish();
}

#[test]
fn criterion_03_concavity() {
    let mut c = Criterion::new(3, "concavity spot checks", 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-2;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let label = rng.random_bool(0.5);
        let (alpha, beta, psi) = (rng.random_range(-3.0..3.0), rng.random_range(-8.0..3.0), rng.random_range(-8.0..8.0));
        let f = |x: f64| soft_objective(label, x, alpha, beta);
        let d2 = f(psi + h) - 2.0 * f(psi) + f(psi - h);
        worst = worst.max(d2);
        c.check(d2 <= 1e-9, format!("soft objective second difference {d2:e} at psi={psi}"));

        let positive = rng.random_bool(0.5);
        let (phi, t) = (rng.random_range(-4.0..3.0), rng.random_range(0.01..5.0));
        let g = |x: f64| segment_ll(positive, x, t);
        let d2 = g(phi + h) - 2.0 * g(phi) + g(phi - h);
        worst = worst.max(d2);
        c.check(d2 <= 1e-9, format!("segment log-likelihood second difference {d2:e} at phi={phi}, T={t}"));
    }
    c.note(format!("2000 points, largest second difference {worst:.1e}"));
    c.finish();
}

#[test]
fn criterion_04_class_imbalance() {
    let mut c = Criterion::new(4, "soft margin under 1:50 imbalance", 120.0);
    let d = imbalanced_domain(40, 2000, 4);
    let tree = TreeConfig { max_leaves: 8, ..TreeConfig::default() };
    let config = BoostConfig { iterations: 20, tree, neg_subsample_ratio: None, seed: 0 };
    let hard = boost::train(&d.train, &d.db, &d.modes, &config, GradientKind::Hard).unwrap();
    let soft = boost::train(&d.train, &d.db, &d.modes, &config, GradientKind::Soft { alpha: 2.0, beta: -8.0 }).unwrap();
    let hp = predictions(&hard, &d.test, &d.db);
    let sp = predictions(&soft, &d.test, &d.db);
    let threshold = hp.default_threshold();
    c.check((threshold - 40.0 / 2040.0).abs() < 1e-15, "threshold is P/(P+N)");
    let fcfg = FDeltaConfig { delta: 5.0 };
    let (hr, sr) = (confusion_report(&hp, threshold, fcfg).unwrap(), confusion_report(&sp, threshold, fcfg).unwrap());
    let wcfg = WeightConfig { strips: 4, gamma: 0.8 };
    let (hw, sw) = (weighted_auc_roc(&hp, wcfg).unwrap(), weighted_auc_roc(&sp, wcfg).unwrap());
    c.check(sr.fnr < hr.fnr, format!("soft FNR {} not below hard FNR {}", sr.fnr, hr.fnr));
    c.check((sw - hw).abs() <= 0.05, format!("weighted AUC soft {sw} vs hard {hw}"));
    c.note(format!("FNR hard {:.3} soft {:.3}; wAUC hard {hw:.3} soft {sw:.3}", hr.fnr, sr.fnr));
    let min_pos = hp.items.iter().filter(|x| x.1).map(|x| x.0).fold(1.0, f64::min);
    c.note(format!("lowest hard p on a positive {min_pos:.4} vs threshold {threshold:.4}"));
    // Not part of the criterion: the same comparison once ψ has had time to fall
    // below the threshold.
    let longer = BoostConfig { iterations: 60, ..config.clone() };
    let h = predictions(&boost::train(&d.train, &d.db, &d.modes, &longer, GradientKind::Hard).unwrap(), &d.test, &d.db);
    let soft_kind = GradientKind::Soft { alpha: 2.0, beta: -8.0 };
    let s = predictions(&boost::train(&d.train, &d.db, &d.modes, &longer, soft_kind).unwrap(), &d.test, &d.db);
    let (h, s) = (confusion_report(&h, threshold, fcfg).unwrap(), confusion_report(&s, threshold, fcfg).unwrap());
    c.note(format!("at M=60 FNR hard {:.3} soft {:.3}", h.fnr, s.fnr));
    c.finish();
}

/// Exact fraction for checking the strip weights without rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Frac(i128, i128);

impl Frac {
    fn norm(self) -> Frac {
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(self.0, self.1).max(1);
        Frac(self.0 / g, self.1 / g)
    }
    fn add(self, o: Frac) -> Frac {
        Frac(self.0 * o.1 + o.0 * self.1, self.1 * o.1).norm()
    }
    fn mul(self, o: Frac) -> Frac {
        Frac(self.0 * o.0, self.1 * o.1).norm()
    }
    fn div(self, o: Frac) -> Frac {
        Frac(self.0 * o.1, self.1 * o.0).norm()
    }
}

#[test]
fn criterion_05_weighted_auc_identities() {
    let mut c = Criterion::new(5, "weighted AUC identities", 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(10..300);
        let mut items: Vec<(f64, bool)> = (0..n).map(|_| (rng.random::<f64>(), rng.random_bool(0.3))).collect();
        if rng.random_bool(0.5) {
            items.iter_mut().for_each(|it| it.0 = (it.0 * 8.0).floor());
        }
        items[0].1 = true;
        items[1].1 = false;
        let preds = PredictionSet::new(items);
        for strips in [1, 4, 7] {
            let w = weighted_auc_roc(&preds, WeightConfig { strips, gamma: 0.0 }).unwrap();
            worst = worst.max((w - auc_roc(&preds).unwrap()).abs());
        }
    }
    c.check(worst <= 1e-12, format!("gamma=0 differs from AUC by {worst:e}"));

    for (strips, gamma) in [(4, 0.8), (1, 0.5), (10, 0.3), (4, 0.0)] {
        let perfect = PredictionSet::new((0..50).map(|i| (i as f64, i >= 40)).collect());
        let w = weighted_auc_roc(&perfect, WeightConfig { strips, gamma }).unwrap();
        c.check((w - 1.0).abs() <= 1e-12, format!("perfect ranking scores {w} at N={strips}, gamma={gamma}"));
    }

    let expected: [f64; 5] = [0.2, 0.36, 0.488, 0.5904, 3.3616];
    let got = strip_weights(WeightConfig { strips: 4, gamma: 0.8 });
    c.check(got.len() == 5, "five weights");
    let (g, one) = (Frac(4, 5), Frac(1, 1));
    let rest = Frac(1, 5);
    let mut exact = vec![rest];
    for x in 1..4 {
        exact.push(exact[x - 1].mul(g).add(rest));
    }
    exact.push(exact[3].mul(g).add(rest).div(one.add(Frac(-4, 5))));
    let literal = [Frac(1, 5), Frac(9, 25), Frac(61, 125), Frac(369, 625), Frac(2101, 625)];
    c.check(exact == literal, format!("exact recursion gives {exact:?}"));
    let mut max_ulps = 0u64;
    for (w, e) in got.iter().zip(expected) {
        let ulps = (w.to_bits() as i64 - e.to_bits() as i64).unsigned_abs();
        max_ulps = max_ulps.max(ulps);
        c.check((w - e).abs() <= 1e-15 * e.max(1.0), format!("weight {w} vs {e}"));
    }
    c.note(format!("exact in rationals; floats within {max_ulps} ulp"));
    c.finish();
}

// ---------------------------------------------------------------------------
// RCTBN recovery.

const Q_SICK_PARENT: f64 = 1.0;
const Q_BASE: f64 = 0.1;
const CHILDREN: usize = 4;

fn cvd_schema() -> Arc<Schema> {
    Arc::new(Schema::parse("pred: cvd/2 temporal.\npred: hyp/2 temporal.\npred: parent/2.").unwrap())
}

/// Onset of cvd at `Q_BASE`, raised to `Q_SICK_PARENT` while a parent has cvd, plus an
/// unrelated hypertension stream that toggles and cuts extra segments. Each family is
/// one parent and `CHILDREN` children.
fn cvd_spec(families: std::ops::Range<usize>) -> (String, String) {
    let extra = Q_SICK_PARENT - Q_BASE;
    let mut spec = format!(
        "var cvd/1 init=1.0,0.0\nvar hyp/1 init=0.5,0.5\nclause cvd(A). cim=-{Q_BASE:?},{Q_BASE:?};0.0,0.0\n\
         clause cvd(A) :- parent(B,A), cvd(B). cim=-{extra:?},{extra:?};0.0,0.0\nclause hyp(A). cim=-1.0,1.0;1.0,-1.0\n"
    );
    let mut facts = String::new();
    for i in families {
        spec.push_str(&format!("unit f{i} = p{i}"));
        for k in 0..CHILDREN {
            spec.push_str(&format!(" c{i}_{k}"));
            facts.push_str(&format!("parent(p{i},c{i}_{k}).\n"));
        }
        spec.push('\n');
    }
    (spec, facts)
}

fn sick_parent(seg: &Segment, parents: &BTreeMap<Sym, Sym>) -> bool {
    parents
        .get(&seg.target.args[0])
        .is_some_and(|p| seg.context.value_of("cvd", std::slice::from_ref(p)) == Some(Value::Bool(true)))
}

#[test]
fn criterion_06_rctbn_recovery() {
    let mut c = Criterion::new(6, "RCTBN recovery on sampled data", 180.0);
    let schema = cvd_schema();
    let (spec_text, facts) = cvd_spec(0..400);
    let spec = GroundTruthSpec::parse(&spec_text, &schema).unwrap();
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let trajs = forward_sample(&spec, &db, 10.0, 6).unwrap();
    let (train, test) = trajs.split_at(200);
    let transition = Transition::parse("cvd:false->true", &schema).unwrap();
    let modes = ModeSet::parse("mode: cvd(+).\nmode: hyp(+).\nmode: parent(-,+).", &schema.state_view()).unwrap();
    let tree = TreeConfig { max_leaves: 2, ..TreeConfig::default() };
    let config = RctbnConfig { iterations: 200, tree, ..RctbnConfig::default() };
    let train_segs = segment(train, &transition, &schema).unwrap();
    let (model, _) = train_rctbn_logged(&train_segs, &db, &transition, &modes, &config).unwrap();

    let root = model.trees[0].root_test_text().unwrap_or_default();
    c.check(root.contains("parent(") && root.contains("cvd("), format!("first split is `{root}`"));

    let parents: BTreeMap<Sym, Sym> =
        db.facts_of("parent").iter().map(|f| (f.args[1].clone(), f.args[0].clone())).collect();
    let test_segs = segment(test, &transition, &schema).unwrap();
    for (context, truth) in [(true, Q_SICK_PARENT), (false, Q_BASE)] {
        let rates: Vec<f64> =
            test_segs.iter().filter(|s| sick_parent(s, &parents) == context).map(|s| model.intensity(s, &db)).collect();
        let (lo, hi) = rates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &q| (a.min(q), b.max(q)));
        c.check(!rates.is_empty(), "segments in every context");
        c.check(lo >= 0.8 * truth && hi <= 1.2 * truth, format!("context q={truth}: learned intensities in [{lo}, {hi}]"));
        c.note(format!("q={truth}: learned [{lo:.3}, {hi:.3}] over {} segs", rates.len()));
    }

    let learned = PredictionSet::new(test_segs.iter().map(|s| (model.transition_prob(s, &db), s.positive)).collect());
    let truth = PredictionSet::new(
        test_segs
            .iter()
            .map(|s| {
                let q = if sick_parent(s, &parents) { Q_SICK_PARENT } else { Q_BASE };
                (-(-q * s.residence).exp_m1(), s.positive)
            })
            .collect(),
    );
    let (la, ta) = (auc_roc(&learned).unwrap(), auc_roc(&truth).unwrap());
    c.check((la - ta).abs() <= 0.05, format!("test AUC {la} vs ground truth {ta}"));
    c.note(format!("AUC learned {la:.3} truth {ta:.3}"));
    c.finish();
}

// ---------------------------------------------------------------------------

/// Expands every clause CIM over the joint space by direct enumeration of state pairs
/// and sums the results.
fn expand_and_sum(states: &[usize], clauses: &[ConditionalCim]) -> Vec<Vec<f64>> {
    let size: usize = states.iter().product();
    let decode = |mut s: usize| -> Vec<usize> {
        states
            .iter()
            .map(|&r| {
                let v = s % r;
                s /= r;
                v
            })
            .collect()
    };
    let mut total = vec![vec![0.0; size]; size];
    for cl in clauses {
        for (from, row) in total.iter_mut().enumerate() {
            let x = decode(from);
            let mut config = 0;
            for &p in cl.parents.iter().rev() {
                config = config * states[p] + x[p];
            }
            let cim = &cl.cims[config];
            for (to, cell) in row.iter_mut().enumerate() {
                let y = decode(to);
                let others_equal = (0..states.len()).filter(|&v| v != cl.variable).all(|v| x[v] == y[v]);
                if others_equal {
                    *cell += cim.rate(x[cl.variable], y[cl.variable]);
                }
            }
        }
    }
    total
}

#[test]
fn criterion_07_amalgamation() {
    let mut c = Criterion::new(7, "amalgamation oracle", 1.0);
    let cim = |a: f64, b: f64| Cim::new(vec![vec![-a, a], vec![b, -b]]).unwrap();
    // Variables: 0 = CVD(x), 1 = Hyp(y), 2 = BMI(x).
    let clauses = vec![
        ConditionalCim { variable: 0, parents: vec![1], cims: vec![cim(0.2, 0.05), cim(1.3, 0.15)] },
        ConditionalCim { variable: 0, parents: vec![2], cims: vec![cim(0.4, 0.07), cim(0.9, 0.11)] },
        ConditionalCim { variable: 1, parents: vec![], cims: vec![cim(0.3, 0.6)] },
        ConditionalCim { variable: 2, parents: vec![], cims: vec![cim(0.25, 0.35)] },
    ];
    let states = [2, 2, 2];
    let q = amalgamate(&states, &clauses).unwrap();
    let oracle = expand_and_sum(&states, &clauses);
    c.check(q.len() == 8 && q.iter().all(|r| r.len() == 8), "8x8 matrix");
    c.check(q == oracle, "entries differ from the expand-and-sum oracle");
    let worst_row = q.iter().map(|r| r.iter().sum::<f64>().abs()).fold(0.0, f64::max);
    c.check(worst_row <= 1e-12, format!("row sum {worst_row:e}"));
    let mut doubles = 0;
    for (i, row) in q.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let changes = (i ^ j).count_ones();
            if changes == 2 {
                doubles += 1;
                c.check(v == 0.0, format!("double change ({i},{j}) = {v}"));
            }
            if changes == 3 {
                c.check(v == 0.0, format!("triple change ({i},{j}) = {v}"));
            }
        }
    }
    c.check(doubles == 24, format!("{doubles} double-change entries"));
    // State 0: every variable in its first state. CVD's onset adds both clause rates.
    c.check(q[0][1] == 0.2 + 0.4, "shared-head rates add at state 0");
    c.check(q[7][6] == 0.15 + 0.11, "shared-head rates add at state 7");
    c.finish();
}

// ---------------------------------------------------------------------------

fn branch_values(
    model: &HybridModel,
    examples: &ExampleSet,
    db: &FactBase,
    flags: &[bool],
    f: impl Fn(&Prediction) -> Vec<f64>,
) -> [Vec<Vec<f64>>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (e, &flag) in examples.entries().iter().zip(flags) {
        out[usize::from(flag)].push(f(&model.predict(e, db)));
    }
    out
}

#[test]
fn criterion_08_hybrid_recovery() {
    let mut c = Criterion::new(8, "hybrid branch recovery", 60.0);
    let schema = Arc::new(
        Schema::parse("pred: flag/1.\npred: visits/1 count.\npred: level/1 continuous.\npred: grade/1 multiclass:3.")
            .unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 10_000;
    let flags: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let facts: String = names.iter().zip(&flags).filter(|(_, &f)| f).map(|(e, _)| format!("flag({e}).\n")).collect();
    let db = parse_facts(&facts, schema.clone()).unwrap();
    let modes = ModeSet::parse("mode: flag(+).", &schema).unwrap();
    let rates = [Poisson::new(2.0).unwrap(), Poisson::new(6.0).unwrap()];
    let normals = [Normal::new(1.0, 1.0).unwrap(), Normal::new(3.0, 1.0).unwrap()];
    let class_probs = [[0.6, 0.3, 0.1], [0.2, 0.3, 0.5]];
    let (mut counts, mut levels, mut grades) = (Vec::new(), Vec::new(), Vec::new());
    for (e, &f) in names.iter().zip(&flags) {
        let b = usize::from(f);
        counts.push(GroundAtom::new("visits", &[e.as_str()], Value::Count(rates[b].sample(&mut rng) as u64)));
        levels.push(GroundAtom::new("level", &[e.as_str()], Value::Real(normals[b].sample(&mut rng))));
        let u: f64 = rng.random();
        let k = if u < class_probs[b][0] { 0 } else if u < class_probs[b][0] + class_probs[b][1] { 1 } else { 2 };
        grades.push(GroundAtom::new("grade", &[e.as_str()], Value::Class(k)));
    }
    let set = |name: &str, atoms: Vec<GroundAtom>| ExampleSet::from_entries(schema.require(name).unwrap().clone(), atoms).unwrap();
    let (counts, levels, grades) = (set("visits", counts), set("level", levels), set("grade", grades));
    let branch_mean = |ex: &ExampleSet, b: bool| {
        let v: Vec<f64> = ex.entries().iter().zip(&flags).filter(|(_, &f)| f == b).map(|(e, _)| e.value.as_f64()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };

    let poisson =
        train_hybrid_one(&counts, &db, &modes, &HybridConfig { iterations: 40, eta: Some(0.1), ..HybridConfig::default() })
            .unwrap();
    let by_branch = branch_values(&poisson, &counts, &db, &flags, |p| vec![p.point()]);
    for b in [false, true] {
        let ml = branch_mean(&counts, b);
        let worst = by_branch[usize::from(b)].iter().map(|v| relative(v[0], ml)).fold(0.0, f64::max);
        c.check(worst <= 0.05, format!("poisson branch {b}: relative error {worst} vs mean {ml}"));
        c.note(format!("rate[{}] {:.3} vs {ml:.3}", u8::from(b), by_branch[usize::from(b)][0][0]));
    }

    let gaussian =
        train_hybrid_one(&levels, &db, &modes, &HybridConfig { iterations: 40, ..HybridConfig::default() }).unwrap();
    let by_branch = branch_values(&gaussian, &levels, &db, &flags, |p| vec![p.point()]);
    for b in [false, true] {
        let mean = branch_mean(&levels, b);
        let worst = by_branch[usize::from(b)].iter().map(|v| (v[0] - mean).abs()).fold(0.0, f64::max);
        c.check(worst <= 0.05, format!("gaussian branch {b}: absolute error {worst}"));
    }

    let multinomial =
        train_hybrid_one(&grades, &db, &modes, &HybridConfig { iterations: 60, ..HybridConfig::default() }).unwrap();
    let by_branch = branch_values(&multinomial, &grades, &db, &flags, |p| match p {
        Prediction::Classes(v) => v.clone(),
        _ => Vec::new(),
    });
    let mut worst_class = 0.0f64;
    for b in [false, true] {
        let members: Vec<&GroundAtom> = grades.entries().iter().zip(&flags).filter(|(_, &f)| f == b).map(|(e, _)| e).collect();
        for k in 0..3u32 {
            let freq = members.iter().filter(|e| e.value == Value::Class(k)).count() as f64 / members.len() as f64;
            for v in &by_branch[usize::from(b)] {
                worst_class = worst_class.max((v[k as usize] - freq).abs());
            }
        }
    }
    c.check(worst_class <= 0.02, format!("multinomial probabilities off by {worst_class}"));
    c.note(format!("class prob err {worst_class:.1e}"));
    c.finish();
}

// ---------------------------------------------------------------------------
// DBN scores recomputed sample by sample.

fn random_dataset(rng: &mut ChaCha8Rng, arities: &[u32], n: usize) -> DiscreteDataset {
    let vars: Vec<DbnVariable> =
        arities.iter().enumerate().map(|(i, &a)| DbnVariable { name: format!("v{i}"), arity: a }).collect();
    let k = arities.len();
    let rows = (0..n)
        .map(|_| {
            let prev: Vec<u32> = arities.iter().map(|&a| rng.random_range(0..a)).collect();
            let mut next = Vec::with_capacity(k);
            for i in 0..k {
                let v = if rng.random_bool(0.6) { prev[i] % arities[i] } else { rng.random_range(0..arities[i]) };
                let v = if i > 0 && rng.random_bool(0.3) { next[i - 1] % arities[i] } else { v };
                next.push(v);
            }
            [prev, next].concat()
        })
        .collect();
    DiscreteDataset::new(vars, rows).unwrap()
}

fn arity_of(data: &DiscreteDataset, col: usize) -> usize {
    data.vars[col % data.vars.len()].arity as usize
}

/// Family score recomputed from per-sample terms.
fn brute_family(data: &DiscreteDataset, child: usize, parents: &[usize], kind: ScoreKind) -> f64 {
    let k = data.num_vars();
    let col = k + child;
    let r = arity_of(data, col);
    let q: usize = parents.iter().map(|&p| arity_of(data, p)).product();
    let n = data.len() as f64;
    let cfg: Vec<usize> = data.rows().iter().map(|row| parents.iter().fold(0, |acc, &p| acc * 8 + row[p] as usize)).collect();
    let x: Vec<u32> = data.rows().iter().map(|row| row[col]).collect();
    let count = |pred: &dyn Fn(usize) -> bool| (0..cfg.len()).filter(|&i| pred(i)).count() as f64;
    match kind {
        ScoreKind::Bic => {
            let mut ll = 0.0;
            for s in 0..cfg.len() {
                let joint = count(&|i| cfg[i] == cfg[s] && x[i] == x[s]);
                let marg = count(&|i| cfg[i] == cfg[s]);
                ll += (joint / marg).ln();
            }
            ll - (q * (r - 1)) as f64 / 2.0 * n.ln()
        }
        ScoreKind::Bde { ess } => {
            let (a_k, a_j) = (ess / (q * r) as f64, ess / q as f64);
            let mut score = 0.0;
            for s in 0..cfg.len() {
                let njk = (0..s).filter(|&i| cfg[i] == cfg[s] && x[i] == x[s]).count() as f64;
                let nj = (0..s).filter(|&i| cfg[i] == cfg[s]).count() as f64;
                score += ((njk + a_k) / (nj + a_j)).ln();
            }
            score
        }
        ScoreKind::Mit { alpha } => {
            if parents.is_empty() {
                return 0.0;
            }
            let mut mi = 0.0;
            for s in 0..cfg.len() {
                let joint = count(&|i| cfg[i] == cfg[s] && x[i] == x[s]) / n;
                let pc = count(&|i| cfg[i] == cfg[s]) / n;
                let px = count(&|i| x[i] == x[s]) / n;
                mi += (joint / (pc * px)).ln();
            }
            let mut ar: Vec<(usize, usize)> = parents.iter().map(|&p| (arity_of(data, p), p)).collect();
            ar.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut penalty = 0.0;
            let mut prod = 1;
            for (rp, _) in ar {
                let dof = (r - 1) * (rp - 1) * prod;
                prod *= rp;
                if dof > 0 {
                    penalty += ChiSquared::new(dof as f64).unwrap().inverse_cdf(alpha);
                }
            }
            2.0 * mi - penalty
        }
    }
}

fn brute_network(net: &TwoSliceNetwork, data: &DiscreteDataset, kind: ScoreKind) -> f64 {
    (0..data.num_vars()).map(|i| brute_family(data, i, &net.parents(i), kind)).sum()
}

fn planted_dataset(n: usize, seed: u64) -> DiscreteDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = ["a", "b", "c"].iter().map(|s| DbnVariable { name: s.to_string(), arity: 2 }).collect();
    let rows = (0..n)
        .map(|_| {
            let prev: Vec<u32> = (0..3).map(|_| rng.random_range(0..2)).collect();
            let a = if rng.random_bool(0.9) { prev[0] } else { 1 - prev[0] };
            let b = if rng.random_bool(0.85) { a } else { 1 - a };
            let c = rng.random_range(0..2);
            vec![prev[0], prev[1], prev[2], a, b, c]
        })
        .collect();
    DiscreteDataset::new(vars, rows).unwrap()
}

/// Best network score by enumerating every parent set of size <= 2 per variable and
/// every combination that leaves the slice t+1 arcs acyclic. Family scores come from
/// the library, which the first part of criterion 9 checks against [`brute_family`].
fn exhaustive_optimum(data: &DiscreteDataset, kind: ScoreKind) -> f64 {
    let k = data.num_vars();
    let options: Vec<Vec<Vec<usize>>> = (0..k)
        .map(|i| {
            let cols: Vec<usize> = (0..2 * k).filter(|&c| c != k + i).collect();
            let mut sets = vec![Vec::new()];
            for (x, &a) in cols.iter().enumerate() {
                sets.push(vec![a]);
                for &b in &cols[x + 1..] {
                    sets.push(vec![a, b]);
                }
            }
            sets
        })
        .collect();
    let acyclic = |sets: [&Vec<usize>; 3]| {
        let edges: Vec<(usize, usize)> =
            (0..k).flat_map(|i| sets[i].iter().filter(|&&p| p >= k).map(move |&p| (p - k, i))).collect();
        (0..k).all(|start| {
            let mut stack = vec![start];
            let mut seen = [false; 3];
            while let Some(v) = stack.pop() {
                for &(a, b) in &edges {
                    if a == v {
                        if b == start {
                            return false;
                        }
                        if !seen[b] {
                            seen[b] = true;
                            stack.push(b);
                        }
                    }
                }
            }
            true
        })
    };
    let scores: Vec<Vec<f64>> =
        (0..k).map(|i| options[i].iter().map(|p| family_score(data, i, p, kind)).collect()).collect();
    let mut best = f64::NEG_INFINITY;
    for (a, x) in options[0].iter().enumerate() {
        for (b, y) in options[1].iter().enumerate() {
            for (c, z) in options[2].iter().enumerate() {
                if acyclic([x, y, z]) {
                    best = best.max(scores[0][a] + scores[1][b] + scores[2][c]);
                }
            }
        }
    }
    best
}

#[test]
fn criterion_09_dbn_exactness() {
    let mut c = Criterion::new(9, "DBN scores and search", 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let kinds = [ScoreKind::Bic, ScoreKind::Bde { ess: 1.0 }, ScoreKind::Bde { ess: 4.0 }, ScoreKind::Mit { alpha: 0.95 }];
    let mut worst = 0.0f64;
    for trial in 0..12 {
        let arities: Vec<u32> = (0..3).map(|_| rng.random_range(2..4)).collect();
        let data = random_dataset(&mut rng, &arities, 120 + 40 * trial);
        let mut net = TwoSliceNetwork::empty(data.vars.clone());
        for _ in 0..4 {
            let (a, b) = (rng.random_range(0..3), rng.random_range(0..3));
            if rng.random_bool(0.5) {
                let _ = net.add_inter(a, b);
            } else if a != b {
                let _ = net.add_intra(a, b);
            }
        }
        for kind in kinds {
            let (fast, slow) = (score_network(&net, &data, kind), brute_network(&net, &data, kind));
            let e = (fast - slow).abs();
            worst = worst.max(e);
            c.check(e <= 1e-9, format!("{kind} trial {trial}: {fast} vs {slow}"));
        }
    }
    c.note(format!("score error {worst:.1e}"));

    let planted = planted_dataset(5000, 3);
    let found = hill_climb(&planted, ScoreKind::Bde { ess: 1.0 }, 2).unwrap();
    let expected = TwoSliceNetwork::parse("vars: a:2, b:2, c:2\ninter a=>a\nintra a->b\n").unwrap();
    c.check(found == expected, format!("recovered\n{found}"));

    for seed in 0..3 {
        let data = planted_dataset(1500, 40 + seed);
        for kind in [ScoreKind::Bic, ScoreKind::Bde { ess: 1.0 }, ScoreKind::Mit { alpha: 0.95 }] {
            let net = hill_climb(&data, kind, 2).unwrap();
            let (got, best) = (score_network(&net, &data, kind), exhaustive_optimum(&data, kind));
            c.check((got - best).abs() <= 1e-9, format!("{kind} seed {seed}: hill climb {got} vs optimum {best}"));
        }
    }
    c.finish();
}

// ---------------------------------------------------------------------------

fn relboost(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_relboost")).args(args).status().unwrap().code().unwrap_or(-1)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn criterion_10_determinism_and_round_trips() {
    let mut c = Criterion::new(10, "determinism and round trips", 30.0);
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Bundles on disk for the command-line runs.
    let d = imbalanced_domain(15, 150, 10);
    let smokers = root.join("smokers");
    std::fs::create_dir(&smokers).unwrap();
    std::fs::write(smokers.join("schema.txt"), d.schema.serialize()).unwrap();
    std::fs::write(smokers.join("facts.txt"), d.db.serialize()).unwrap();
    std::fs::write(smokers.join("pos.txt"), d.train.serialize_label(true)).unwrap();
    std::fs::write(smokers.join("neg.txt"), d.train.serialize_label(false)).unwrap();
    std::fs::write(smokers.join("modes.txt"), "mode: smokes(+).\nmode: stressed(+).\nmode: works_at(+,-).\nmode: hazardous(+).\n")
        .unwrap();
    let cvd = root.join("cvd");
    std::fs::create_dir(&cvd).unwrap();
    let schema = cvd_schema();
    let (spec_text, facts) = cvd_spec(0..40);
    std::fs::write(cvd.join("schema.txt"), schema.serialize()).unwrap();
    std::fs::write(cvd.join("facts.txt"), &facts).unwrap();
    std::fs::write(cvd.join("spec.txt"), &spec_text).unwrap();
    std::fs::write(cvd.join("modes.txt"), "mode: cvd(+).\nmode: hyp(+).\nmode: parent(-,+).\n").unwrap();
    let dbn_rows = planted_dataset(600, 1).serialize();
    std::fs::write(root.join("dbn.txt"), &dbn_rows).unwrap();

    let mut artifacts: Vec<(String, Vec<Vec<u8>>)> = Vec::new();
    for run in 0..2 {
        let out = |name: &str| root.join(format!("{name}{run}.txt"));
        let runs: Vec<(&str, Vec<String>)> = vec![
            ("sample", vec!["sample".into(), "--bundle".into(), s(&cvd).into(), "--horizon".into(), "8".into(), "--seed".into(), "7".into()]),
            ("rfgb", vec!["train".into(), "--kind".into(), "rfgb".into(), "--bundle".into(), s(&smokers).into(), "--target".into(), "sick".into(), "--neg-ratio".into(), "2".into(), "--seed".into(), "7".into(), "--iters".into(), "5".into()]),
            ("soft", vec!["train".into(), "--kind".into(), "soft-rfgb".into(), "--bundle".into(), s(&smokers).into(), "--target".into(), "sick".into(), "--alpha".into(), "1".into(), "--beta".into(), "-4".into(), "--seed".into(), "7".into(), "--iters".into(), "5".into()]),
            ("rctbn", vec!["train".into(), "--kind".into(), "rctbn".into(), "--bundle".into(), s(&cvd).into(), "--trajectories".into(), s(&root.join("sample0.txt")).into(), "--transition".into(), "cvd:false->true".into(), "--neg-cap".into(), "3".into(), "--seed".into(), "7".into(), "--iters".into(), "5".into()]),
            ("hybrid", vec!["train".into(), "--kind".into(), "hybrid".into(), "--bundle".into(), s(&cvd).into(), "--trajectories".into(), s(&root.join("sample0.txt")).into(), "--aggregate".into(), "hyp=count,cvd=indicator".into(), "--target".into(), "hyp".into(), "--iters".into(), "5".into()]),
            ("dbn", vec!["train".into(), "--kind".into(), "dbn".into(), "--data".into(), s(&root.join("dbn.txt")).into(), "--score".into(), "bde".into()]),
        ];
        for (i, (name, mut args)) in runs.into_iter().enumerate() {
            let path = out(name);
            args.push("--out".into());
            args.push(s(&path).into());
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let code = relboost(&refs);
            c.check(code == 0, format!("{name} exited with {code}"));
            let bytes = std::fs::read(&path).unwrap_or_default();
            if run == 0 {
                artifacts.push((name.to_string(), vec![bytes]));
            } else {
                artifacts[i].1.push(bytes);
            }
        }
    }
    for (name, runs) in &artifacts {
        c.check(!runs[0].is_empty() && runs[0] == runs[1], format!("{name} output not byte-identical"));
    }

    // parse then serialize reproduces every artifact exactly.
    let text = |name: &str| String::from_utf8(artifacts.iter().find(|a| a.0 == name).unwrap().1[0].clone()).unwrap();
    c.check(Schema::parse(&d.schema.serialize()).unwrap().serialize() == d.schema.serialize(), "schema round trip");
    let facts_text = d.db.serialize();
    c.check(parse_facts(&facts_text, d.schema.clone()).unwrap().serialize() == facts_text, "facts round trip");
    for name in ["rfgb", "soft"] {
        let t = text(name);
        c.check(BoostedModel::parse(&t, &d.schema).unwrap().serialize() == t, format!("{name} model round trip"));
    }
    let traj_text = text("sample");
    c.check(serialize_trajectories(&parse_trajectories(&traj_text, &schema).unwrap()) == traj_text, "trajectory round trip");
    let t = text("rctbn");
    c.check(RctbnModel::parse(&t, &schema).unwrap().serialize() == t, "rctbn model round trip");
    let trajs = parse_trajectories(&traj_text, &schema).unwrap();
    let agg = relboost::hybrid::aggregate::parse_aggregators("hyp=count,cvd=indicator").unwrap();
    let (merged, _) = relboost::hybrid::aggregate::aggregate(&trajs, &schema, &agg).unwrap();
    let t = text("hybrid");
    c.check(HybridModel::parse(&t, &merged).unwrap().serialize() == t, "hybrid model round trip");
    let t = text("dbn");
    c.check(TwoSliceNetwork::parse(&t).unwrap().to_string() == t, "network round trip");
    c.check(DiscreteDataset::parse(&dbn_rows).unwrap().serialize() == dbn_rows, "dataset round trip");
    c.check(GroundTruthSpec::parse(&spec_text, &schema).unwrap().serialize() == spec_text, "ground-truth spec round trip");
    let preds = PredictionSet::new(vec![(0.25, true), (1e-17, false), (0.1 + 0.2, true)]);
    c.check(PredictionSet::parse_csv(&preds.to_csv()).unwrap() == preds, "prediction CSV round trip");
    c.finish();
}
