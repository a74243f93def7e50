use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{emit, read_file, write_atomic, CliError, Settings};
use crate::boost::{self, BoostConfig, BoostedModel, GradientKind};
use crate::dbn::{hill_climb, score_network, DiscreteDataset, ScoreKind, TwoSliceNetwork};
use crate::hybrid::aggregate::{aggregate, parse_aggregators};
use crate::hybrid::{train_hybrid_logged, DistributionKind, HybridConfig, HybridModel, Prediction};
use crate::logic::{
    parse_examples, parse_facts, ExampleFile, ExampleSet, FactBase, GroundAtom, ModeSet, PredicateSignature, Schema,
    Value, ValueKind,
};
use crate::metrics::{
    auc_roc, confusion_report, mean_loglik, mse, roc_points, weighted_auc_roc, FDeltaConfig, PredictionSet, WeightConfig,
};
use crate::rctbn::{
    forward_sample, parse_trajectories, segment, serialize_trajectories, train_rctbn_logged, GroundTruthSpec,
    RctbnConfig, RctbnModel, Trajectory, Transition,
};
use crate::regtree::TreeConfig;

/// Schema, relational facts and, when requested, trajectories and their aggregates.
struct World {
    schema: Arc<Schema>,
    facts: FactBase,
    trajectories: Option<Vec<Trajectory>>,
    aggregated: Vec<GroundAtom>,
}

impl World {
    fn load(s: &Settings) -> Result<World, CliError> {
        let schema_path = s.path("schema").ok_or_else(|| CliError::Config("`schema` (or `bundle`) is required".into()))?;
        let mut schema = Schema::parse(&read_file(&schema_path)?)?;
        let trajectories = match s.path("trajectories") {
            Some(p) => Some(parse_trajectories(&read_file(&p)?, &schema)?),
            None => None,
        };
        let mut aggregated = Vec::new();
        if let Some(spec) = s.get("aggregate") {
            let trajs = trajectories
                .as_ref()
                .ok_or_else(|| CliError::Config("`aggregate` needs a trajectory file".into()))?;
            let (merged, facts) = aggregate(trajs, &schema, &parse_aggregators(spec)?)?;
            schema = merged;
            aggregated = facts;
        }
        let schema = Arc::new(schema);
        let facts = match s.path("facts") {
            Some(p) => parse_facts(&read_file(&p)?, schema.clone())?,
            None => FactBase::empty(schema.clone()),
        };
        Ok(World { schema, facts, trajectories, aggregated })
    }

    /// File facts plus aggregated facts, leaving out those of `exclude`.
    fn db(&self, exclude: Option<&str>) -> Result<FactBase, CliError> {
        if self.aggregated.is_empty() {
            return Ok(self.facts.clone());
        }
        let extra = self.aggregated.iter().filter(|f| Some(&*f.pred) != exclude).cloned();
        Ok(FactBase::from_facts(self.schema.clone(), self.facts.facts().cloned().chain(extra))?)
    }

    fn target(&self, s: &Settings) -> Result<PredicateSignature, CliError> {
        let name = s.require("target")?;
        let name = name.split('/').next().unwrap_or(name);
        self.schema.get(name).cloned().ok_or_else(|| CliError::Data(format!("target `{name}` is not declared in the schema")))
    }

    fn trajectories(&self) -> Result<&[Trajectory], CliError> {
        self.trajectories.as_deref().ok_or_else(|| CliError::Config("`trajectories` is required".into()))
    }
}

fn required_path(s: &Settings, key: &str) -> Result<PathBuf, CliError> {
    s.path(key).ok_or_else(|| CliError::Config(format!("`{key}` is required for `{}`", s.command)))
}

fn modes(s: &Settings, schema: &Schema) -> Result<ModeSet, CliError> {
    Ok(ModeSet::parse(&read_file(&required_path(s, "modes")?)?, schema)?)
}

fn boolean_examples(s: &Settings, target: &PredicateSignature) -> Result<ExampleSet, CliError> {
    if target.kind != ValueKind::Boolean {
        return Err(CliError::Data(format!("target `{}` is not boolean", target.name)));
    }
    let mut set = parse_examples(&read_file(&required_path(s, "pos")?)?, target, ExampleFile::Positive)?;
    set.merge(parse_examples(&read_file(&required_path(s, "neg")?)?, target, ExampleFile::Negative)?)?;
    Ok(set)
}

/// Valued examples from a file, or else the aggregated facts of the target.
fn valued_examples(s: &Settings, world: &World, target: &PredicateSignature) -> Result<ExampleSet, CliError> {
    match s.path("examples") {
        Some(p) => Ok(parse_examples(&read_file(&p)?, target, ExampleFile::Valued)?),
        None => {
            let facts = world.aggregated.iter().filter(|f| f.pred == target.name).cloned();
            let set = ExampleSet::from_entries(target.clone(), facts)?;
            if set.is_empty() {
                return Err(CliError::Config(format!("no `examples` file and no aggregated facts for `{}`", target.name)));
            }
            Ok(set)
        }
    }
}

fn tree_config(s: &Settings) -> TreeConfig {
    TreeConfig {
        max_leaves: s.usize("max_leaves").unwrap_or(8),
        max_new_literals_per_node: s.usize("max_lookahead").unwrap_or(2),
        max_fresh_variables: s.usize("max_fresh_vars").unwrap_or(4),
        min_examples_per_leaf: s.usize("min_leaf").unwrap_or(1),
        max_thresholds: s.usize("max_thresholds").unwrap_or(8),
    }
}

fn boost_setup(s: &Settings, kind: &str) -> Result<(BoostConfig, GradientKind), CliError> {
    let config = BoostConfig {
        iterations: s.usize("iters").unwrap_or(20),
        tree: tree_config(s),
        neg_subsample_ratio: s.f64("neg_ratio"),
        seed: s.u64("seed").unwrap_or(0),
    };
    let gradient = match kind {
        "rfgb" => GradientKind::Hard,
        "soft-rfgb" => GradientKind::Soft {
            alpha: s.f64("alpha").ok_or_else(|| CliError::Config("soft-rfgb needs `alpha`".into()))?,
            beta: s.f64("beta").ok_or_else(|| CliError::Config("soft-rfgb needs `beta`".into()))?,
        },
        other => return Err(CliError::Config(format!("unknown kind `{other}`"))),
    };
    Ok((config, gradient))
}

fn log_text(objective: &[f64]) -> String {
    objective.iter().enumerate().map(|(i, v)| format!("iteration={} objective={v:?}\n", i + 1)).collect()
}

fn write_model(s: &Settings, model: &str, log: &str) -> Result<(), CliError> {
    let out = PathBuf::from(s.require("out")?);
    let log_path = s.get("log").map(PathBuf::from).unwrap_or_else(|| {
        let mut p = out.clone().into_os_string();
        p.push(".log");
        PathBuf::from(p)
    });
    write_atomic(&out, model)?;
    write_atomic(&log_path, log)
}

pub(super) fn train(s: &Settings) -> Result<(), CliError> {
    let kind = s.require("kind")?;
    match kind {
        "rfgb" | "soft-rfgb" => {
            let world = World::load(s)?;
            let db = world.db(None)?;
            let target = world.target(s)?;
            let examples = boolean_examples(s, &target)?;
            let modes = modes(s, &world.schema)?;
            let (config, gradient) = boost_setup(s, kind)?;
            let (model, log) = boost::train_logged(&examples, &db, &modes, &config, gradient)?;
            write_model(s, &model.serialize(), &log_text(&log))
        }
        "hybrid" => {
            let world = World::load(s)?;
            let target = world.target(s)?;
            let examples = valued_examples(s, &world, &target)?;
            let db = world.db(Some(&target.name))?;
            let modes = modes(s, &world.schema)?;
            let config = HybridConfig {
                iterations: s.usize("iters").unwrap_or(20),
                tree: tree_config(s),
                eta: s.f64("eta"),
                eta_sigma: s.f64("eta_sigma"),
                parents: s
                    .get("parents")
                    .map(|p| p.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                    .unwrap_or_default(),
            };
            let (model, log) = train_hybrid_logged(&examples, &db, &modes, &config)?;
            write_model(s, &model.serialize(), &log_text(&log))
        }
        "rctbn" => {
            let world = World::load(s)?;
            let db = world.db(None)?;
            let transition = Transition::parse(s.require("transition")?, &world.schema)?;
            let modes = modes(s, &world.schema.state_view())?;
            let config = RctbnConfig {
                iterations: s.usize("iters").unwrap_or(20),
                tree: tree_config(s),
                neg_cap: s.usize("neg_cap"),
                seed: s.u64("seed").unwrap_or(0),
            };
            let segs = segment(world.trajectories()?, &transition, &world.schema)?;
            let (model, log) = train_rctbn_logged(&segs, &db, &transition, &modes, &config)?;
            write_model(s, &model.serialize(), &log_text(&log))
        }
        "dbn" => {
            let data = DiscreteDataset::parse(&read_file(&required_path(s, "data")?)?)?;
            let score: ScoreKind = s.require("score")?.parse()?;
            let net = hill_climb(&data, score, s.usize("max_parents").unwrap_or(2))?;
            let log = format!("score={score} value={:?} arcs={}\n", score_network(&net, &data, score), net.arc_count());
            write_model(s, &net.to_string(), &log)
        }
        other => Err(CliError::Config(format!("unknown kind `{other}`"))),
    }
}

fn weight_config(s: &Settings) -> WeightConfig {
    WeightConfig { strips: s.usize("strips").unwrap_or(4), gamma: s.f64("gamma").unwrap_or(0.8) }
}

fn fdelta_config(s: &Settings) -> FDeltaConfig {
    FDeltaConfig { delta: s.f64("delta").unwrap_or(5.0) }
}

/// Ranking and thresholded metrics as `key=value` lines.
fn binary_report(s: &Settings, preds: &PredictionSet) -> Result<String, CliError> {
    let mut out = String::new();
    writeln!(out, "n={}\npositives={}\nnegatives={}", preds.items.len(), preds.positives(), preds.negatives()).unwrap();
    writeln!(out, "auc_roc={}", auc_roc(preds)?).unwrap();
    writeln!(out, "weighted_auc_roc={}", weighted_auc_roc(preds, weight_config(s))?).unwrap();
    let threshold = s.f64("threshold").unwrap_or_else(|| preds.default_threshold());
    out.push_str(&confusion_report(preds, threshold, fdelta_config(s))?.to_string());
    Ok(out)
}

/// Adds `mse` and `mean_loglik` for probabilistic scores.
fn probability_lines(out: &mut String, preds: &PredictionSet) -> Result<(), CliError> {
    let truth: Vec<f64> = preds.items.iter().map(|&(p, l)| if l { p } else { 1.0 - p }).collect();
    writeln!(out, "mse={}\nmean_loglik={}", mse(&truth)?, mean_loglik(&truth)?).unwrap();
    Ok(())
}

fn write_predictions(s: &Settings, preds: &PredictionSet) -> Result<(), CliError> {
    match s.get("predictions") {
        Some(p) => write_atomic(Path::new(p), &preds.to_csv()),
        None => Ok(()),
    }
}

pub(super) fn eval(s: &Settings) -> Result<(), CliError> {
    let model_text = read_file(&required_path(s, "model")?)?;
    let header = model_text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let report = if header.starts_with("model rfgb") {
        let world = World::load(s)?;
        let db = world.db(None)?;
        let model = BoostedModel::parse(&model_text, &world.schema)?;
        let examples = boolean_examples(s, &model.target)?;
        let probs = boost::predict_all(&model, &examples, &db);
        let labels = (0..examples.len()).map(|i| examples.label(i) == Some(true));
        let preds = PredictionSet::new(probs.into_iter().zip(labels).collect());
        write_predictions(s, &preds)?;
        let mut out = binary_report(s, &preds)?;
        probability_lines(&mut out, &preds)?;
        out
    } else if header.starts_with("model hybrid") {
        let world = World::load(s)?;
        let model = HybridModel::parse(&model_text, &world.schema)?;
        let examples = valued_examples(s, &world, &model.target)?;
        let db = world.db(Some(&model.target.name))?;
        hybrid_report(&model, &examples, &db)?
    } else if header.starts_with("model rctbn") {
        let world = World::load(s)?;
        let db = world.db(None)?;
        let model = RctbnModel::parse(&model_text, &world.schema)?;
        let segs = segment(world.trajectories()?, &model.transition, &world.schema)?;
        let preds = PredictionSet::new(segs.iter().map(|g| (model.transition_prob(g, &db), g.positive)).collect());
        write_predictions(s, &preds)?;
        let mut out = binary_report(s, &preds)?;
        probability_lines(&mut out, &preds)?;
        out
    } else if header.starts_with("vars:") {
        let net = TwoSliceNetwork::parse(&model_text)?;
        let data = DiscreteDataset::parse(&read_file(&required_path(s, "data")?)?)?;
        if data.vars != net.vars {
            return Err(CliError::Data("network and dataset declare different variables".into()));
        }
        let mut out = format!("n={}\narcs={}\n", data.len(), net.arc_count());
        for kind in [ScoreKind::Bic, ScoreKind::Bde { ess: 1.0 }, ScoreKind::Mit { alpha: 0.95 }] {
            let name = kind.to_string();
            writeln!(out, "{}={:?}", name.split(':').next().unwrap_or(&name), score_network(&net, &data, kind)).unwrap();
        }
        out
    } else {
        return Err(CliError::Data(format!("unrecognised model file header `{header}`")));
    };
    emit(s, &report)
}

fn hybrid_report(model: &HybridModel, examples: &ExampleSet, db: &FactBase) -> Result<String, CliError> {
    let mut lls = Vec::with_capacity(examples.len());
    let mut truth = Vec::new();
    let mut squared = 0.0;
    let mut correct = 0usize;
    for e in examples.entries() {
        let scores = model.scores(e, db);
        lls.push(model.log_likelihood(e.value, &scores));
        let pred = model.predict(e, db);
        if let (Prediction::Classes(p), Value::Class(k)) = (&pred, e.value) {
            truth.push(p[k as usize]);
            correct += usize::from(pred.point() as u32 == k);
        }
        squared += (pred.point() - e.value.as_f64()).powi(2);
    }
    let n = examples.len() as f64;
    let mut out = format!("n={}\nmean_loglik={}\n", examples.len(), lls.iter().sum::<f64>() / n);
    match model.kind {
        DistributionKind::Multinomial { .. } => {
            writeln!(out, "mse={}\naccuracy={}", mse(&truth)?, correct as f64 / n).unwrap();
        }
        DistributionKind::Poisson | DistributionKind::Gaussian => {
            writeln!(out, "mse={}", squared / n).unwrap();
        }
    }
    Ok(out)
}

pub(super) fn sample(s: &Settings) -> Result<(), CliError> {
    let schema = Arc::new(Schema::parse(&read_file(&required_path(s, "schema")?)?)?);
    let spec = GroundTruthSpec::parse(&read_file(&required_path(s, "spec")?)?, &schema)?;
    let db = match s.path("facts") {
        Some(p) => parse_facts(&read_file(&p)?, schema.clone())?,
        None => FactBase::empty(schema.clone()),
    };
    let horizon = s.f64("horizon").ok_or_else(|| CliError::Config("`horizon` is required".into()))?;
    let trajs = forward_sample(&spec, &db, horizon, s.u64("seed").unwrap_or(0))?;
    write_atomic(Path::new(s.require("out")?), &serialize_trajectories(&trajs))
}

/// Seeded stratified fold assignment: positives and negatives are shuffled separately,
/// then dealt round-robin, positives first. Returns each example's fold.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (t, &i) in pos.iter().chain(&neg).enumerate() {
        fold[i] = t % k;
    }
    fold
}

pub(super) fn cv(s: &Settings) -> Result<(), CliError> {
    let kind = s.require("kind")?;
    let (config, gradient) = boost_setup(s, kind)?;
    let world = World::load(s)?;
    let db = world.db(None)?;
    let target = world.target(s)?;
    let examples = boolean_examples(s, &target)?;
    let modes = modes(s, &world.schema)?;
    let k = s.usize("folds").unwrap_or(5);
    let labels: Vec<bool> = (0..examples.len()).map(|i| examples.label(i) == Some(true)).collect();
    let positives = labels.iter().filter(|&&l| l).count();
    if positives < k || labels.len() - positives < k {
        return Err(CliError::Data(format!("{k} folds need at least {k} positives and {k} negatives")));
    }
    let folds = stratified_folds(&labels, k, s.u64("seed").unwrap_or(0));
    let keys = ["auc_roc", "weighted_auc_roc", "fnr", "fpr", "precision", "recall", "accuracy", "f_delta"];
    let mut sums = [0.0; 8];
    let mut out = String::new();
    for f in 0..k {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
        let test = examples.subset(&test_idx);
        let model = boost::train(&examples.subset(&train_idx), &db, &modes, &config, gradient)?;
        let probs = boost::predict_all(&model, &test, &db);
        let preds = PredictionSet::new(probs.into_iter().zip(test_idx.iter().map(|&i| labels[i])).collect());
        let threshold = s.f64("threshold").unwrap_or_else(|| preds.default_threshold());
        let report = confusion_report(&preds, threshold, fdelta_config(s))?;
        let values = [
            auc_roc(&preds)?,
            weighted_auc_roc(&preds, weight_config(s))?,
            report.fnr,
            report.fpr,
            report.precision,
            report.recall,
            report.accuracy,
            report.f_delta,
        ];
        write!(out, "fold={} n={} positives={}", f + 1, preds.items.len(), preds.positives()).unwrap();
        for (j, v) in values.iter().enumerate() {
            sums[j] += v;
            write!(out, " {}={v}", keys[j]).unwrap();
        }
        out.push('\n');
    }
    out.push_str("mean");
    for (j, key) in keys.iter().enumerate() {
        write!(out, " {key}={}", sums[j] / k as f64).unwrap();
    }
    out.push('\n');
    emit(s, &out)
}

pub(super) fn metrics(s: &Settings) -> Result<(), CliError> {
    let preds = PredictionSet::parse_csv(&read_file(&required_path(s, "predictions")?)?)?;
    let report = binary_report(s, &preds)?;
    if let Some(p) = s.get("roc") {
        let mut csv = String::from("fpr,tpr\n");
        for (x, y) in roc_points(&preds)? {
            writeln!(csv, "{x},{y}").unwrap();
        }
        write_atomic(Path::new(p), &csv)?;
    }
    emit(s, &report)
}
