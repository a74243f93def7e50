//! Batch frontend behind the `relboost` binary.
//!
//! Every option is a named key. A key can be given as a flag (`--max-leaves 8`) or in
//! a `key=value` file passed with `--config`; flags override the file and the file
//! overrides built-in defaults. Unknown keys and out-of-range numbers are rejected
//! before any work starts.
//!
//! Exit codes: 0 success, 2 data error, 3 configuration error, 4 internal error.

mod commands;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Command};
use thiserror::Error;

use crate::boost::BoostError;
use crate::dbn::DbnError;
use crate::hybrid::HybridError;
use crate::logic::LogicError;
use crate::metrics::MetricsError;
use crate::rctbn::RctbnError;
use crate::regtree::TreeError;

pub use commands::stratified_folds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("data error: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Config(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<BoostError> for CliError {
    fn from(e: BoostError) -> Self {
        match e {
            BoostError::Config(_) | BoostError::NoIterations => CliError::Config(e.to_string()),
            BoostError::Tree(t) => t.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<HybridError> for CliError {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::Config(m) => CliError::Config(m),
            HybridError::Tree(t) => t.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<RctbnError> for CliError {
    fn from(e: RctbnError) -> Self {
        match e {
            RctbnError::Config(m) => CliError::Config(m),
            RctbnError::Tree(t) => t.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DbnError> for CliError {
    fn from(e: DbnError) -> Self {
        match e {
            DbnError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Accepted values of a key.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Ty {
    Text,
    /// Integer `>= min`.
    Count(usize),
    Seed,
    Real,
    Positive,
    /// `[0, 1]`.
    Unit,
}

#[derive(Debug, Clone, Copy)]
struct Key {
    name: &'static str,
    ty: Ty,
    default: Option<&'static str>,
    help: &'static str,
}

const fn key(name: &'static str, ty: Ty, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, ty, default, help }
}

const DATA_KEYS: &[Key] = &[
    key("bundle", Ty::Text, None, "directory holding schema.txt, facts.txt, pos.txt, neg.txt, examples.txt, modes.txt, trajectories.txt"),
    key("schema", Ty::Text, None, "schema file"),
    key("facts", Ty::Text, None, "facts file"),
    key("pos", Ty::Text, None, "positive examples"),
    key("neg", Ty::Text, None, "negative examples"),
    key("examples", Ty::Text, None, "valued examples (hybrid targets)"),
    key("modes", Ty::Text, None, "mode declarations"),
    key("trajectories", Ty::Text, None, "trajectory file"),
    key("aggregate", Ty::Text, None, "collapse trajectory streams into facts, e.g. bp=mean,visit=count"),
    key("target", Ty::Text, None, "target predicate name"),
];

const TREE_KEYS: &[Key] = &[
    key("iters", Ty::Count(1), Some("20"), "boosting iterations"),
    key("max_leaves", Ty::Count(2), Some("8"), "leaves per tree"),
    key("max_lookahead", Ty::Count(1), Some("2"), "literals a node may add"),
    key("max_fresh_vars", Ty::Count(0), Some("4"), "non-head variables along a path"),
    key("min_leaf", Ty::Count(1), Some("1"), "examples per leaf"),
    key("max_thresholds", Ty::Count(1), Some("8"), "thresholds per numeric predicate"),
];

const LEARN_KEYS: &[Key] = &[
    key("alpha", Ty::Real, None, "soft-margin cost on false negatives"),
    key("beta", Ty::Real, None, "soft-margin cost on false positives"),
    key("neg_ratio", Ty::Positive, None, "negatives kept per positive, redrawn every iteration"),
    key("eta", Ty::Positive, None, "hybrid step size"),
    key("eta_sigma", Ty::Positive, None, "hybrid step size for sigma"),
    key("parents", Ty::Text, None, "continuous parents of a hybrid target, comma separated"),
    key("transition", Ty::Text, None, "RCTBN target transition, e.g. cvd:false->true"),
    key("neg_cap", Ty::Count(1), None, "negative segments kept per trajectory"),
    key("seed", Ty::Seed, Some("0"), "random seed"),
];

const EVAL_KEYS: &[Key] = &[
    key("strips", Ty::Count(1), Some("4"), "weighted AUC strips above the bottom one"),
    key("gamma", Ty::Unit, Some("0.8"), "weighted AUC skew"),
    key("delta", Ty::Positive, Some("5"), "F-delta weight"),
    key("threshold", Ty::Unit, None, "decision threshold; defaults to P/(P+N)"),
];

const DBN_KEYS: &[Key] = &[
    key("data", Ty::Text, None, "two-slice discrete dataset"),
    key("score", Ty::Text, Some("bde"), "bic, bde[:ess] or mit[:alpha]"),
    key("max_parents", Ty::Count(1), Some("2"), "parents per variable"),
];

fn command_keys(command: &str) -> Vec<Key> {
    let mut keys = Vec::new();
    match command {
        "train" => {
            keys.push(key("kind", Ty::Text, None, "rfgb, soft-rfgb, hybrid, rctbn or dbn"));
            keys.push(key("out", Ty::Text, None, "model file to write"));
            keys.push(key("log", Ty::Text, None, "training log; defaults to <out>.log"));
            keys.extend(DATA_KEYS);
            keys.extend(TREE_KEYS);
            keys.extend(LEARN_KEYS);
            keys.extend(DBN_KEYS);
        }
        "eval" => {
            keys.push(key("model", Ty::Text, None, "model or network file"));
            keys.push(key("out", Ty::Text, None, "report file; defaults to stdout"));
            keys.push(key("predictions", Ty::Text, None, "write score,label CSV here"));
            keys.extend(DATA_KEYS);
            keys.extend(EVAL_KEYS);
            keys.push(key("data", Ty::Text, None, "two-slice discrete dataset"));
        }
        "sample" => {
            keys.push(key("bundle", Ty::Text, None, "directory holding <key>.txt files"));
            keys.push(key("spec", Ty::Text, None, "ground-truth model"));
            keys.push(key("schema", Ty::Text, None, "schema file"));
            keys.push(key("facts", Ty::Text, None, "relational facts"));
            keys.push(key("horizon", Ty::Positive, None, "trajectory length"));
            keys.push(key("seed", Ty::Seed, Some("0"), "random seed"));
            keys.push(key("out", Ty::Text, None, "trajectory file to write"));
        }
        "cv" => {
            keys.push(key("kind", Ty::Text, Some("rfgb"), "rfgb or soft-rfgb"));
            keys.push(key("folds", Ty::Count(2), Some("5"), "number of folds"));
            keys.push(key("out", Ty::Text, None, "report file; defaults to stdout"));
            keys.extend(DATA_KEYS);
            keys.extend(TREE_KEYS);
            keys.extend(LEARN_KEYS);
            keys.extend(EVAL_KEYS);
        }
        "metrics" => {
            keys.push(key("predictions", Ty::Text, None, "score,label CSV"));
            keys.push(key("out", Ty::Text, None, "report file; defaults to stdout"));
            keys.push(key("roc", Ty::Text, None, "write the ROC polyline as fpr,tpr CSV here"));
            keys.extend(EVAL_KEYS);
        }
        _ => {}
    }
    keys
}

const COMMANDS: &[(&str, &str)] = &[
    ("train", "train a model and write it with its training log"),
    ("eval", "score a test set with a trained model"),
    ("sample", "forward-sample trajectories from a ground-truth model"),
    ("cv", "stratified cross-validation of binary boosting"),
    ("metrics", "metrics for a score,label CSV"),
];

pub fn build_cli() -> Command {
    let mut cmd = Command::new("relboost")
        .about("Relational boosting, relational CTBNs and DBN structure search")
        .subcommand_required(true)
        .after_help(
            "Options may also be set in a key=value file given with --config. Flags override the file, \
             the file overrides defaults. RELBOOST_THREADS caps worker threads.\n\
             Exit codes: 0 ok, 2 data error, 3 configuration error, 4 internal error.",
        );
    for (name, about) in COMMANDS {
        let mut sub = Command::new(*name).about(*about).arg(
            Arg::new("config").long("config").value_name("FILE").help("key=value configuration file"),
        );
        for k in command_keys(name) {
            let mut help = k.help.to_string();
            if let Some(d) = k.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            sub = sub.arg(
                Arg::new(k.name)
                    .long(k.name.replace('_', "-"))
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help(help),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Resolved options of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: String,
    values: BTreeMap<&'static str, String>,
}

fn check_value(k: &Key, v: &str) -> Result<(), CliError> {
    let bad = |what: &str| CliError::Config(format!("`{}` must be {what}, got `{v}`", k.name));
    let real = || v.parse::<f64>().ok().filter(|x| x.is_finite());
    match k.ty {
        Ty::Text => {}
        Ty::Count(min) => {
            if !v.parse::<usize>().is_ok_and(|n| n >= min) {
                return Err(bad(&format!("an integer >= {min}")));
            }
        }
        Ty::Seed => {
            v.parse::<u64>().map_err(|_| bad("a non-negative integer"))?;
        }
        Ty::Real => {
            real().ok_or_else(|| bad("a finite number"))?;
        }
        Ty::Positive => {
            real().filter(|&x| x > 0.0).ok_or_else(|| bad("a positive number"))?;
        }
        Ty::Unit => {
            real().filter(|x| (0.0..=1.0).contains(x)).ok_or_else(|| bad("in [0, 1]"))?;
        }
    }
    Ok(())
}

/// Parses a `key=value` configuration file; `#` starts a comment.
fn parse_config_file(text: &str, keys: &[Key]) -> Result<Vec<(&'static str, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", i + 1)))?;
        let name = k.trim().replace('-', "_");
        let key = keys
            .iter()
            .find(|key| key.name == name)
            .ok_or_else(|| CliError::Config(format!("config line {}: unknown key `{}`", i + 1, k.trim())))?;
        out.push((key.name, v.trim().to_string()));
    }
    Ok(out)
}

impl Settings {
    fn resolve(command: &str, matches: &ArgMatches) -> Result<Settings, CliError> {
        let keys = command_keys(command);
        let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
        for k in &keys {
            if let Some(d) = k.default {
                values.insert(k.name, d.to_string());
            }
        }
        if let Some(path) = matches.get_one::<String>("config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config file {path}: {e}")))?;
            values.extend(parse_config_file(&text, &keys)?);
        }
        for k in &keys {
            if let Some(v) = matches.get_one::<String>(k.name) {
                values.insert(k.name, v.clone());
            }
        }
        for k in &keys {
            if let Some(v) = values.get(k.name) {
                check_value(k, v)?;
            }
        }
        Ok(Settings { command: command.to_string(), values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Config(format!("`{key}` is required for `{}`", self.command)))
    }

    /// Values are range-checked in [`Settings::resolve`], so parsing here cannot fail.
    pub fn usize(&self, key: &str) -> Option<usize> {
        self.get(key).map(|v| v.parse().expect("validated count"))
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        self.get(key).map(|v| v.parse().expect("validated integer"))
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.get(key).map(|v| v.parse().expect("validated number"))
    }

    /// A path key, falling back to `<bundle>/<key>.txt` when a bundle directory is set.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        match (self.get(key), self.get("bundle")) {
            (Some(p), _) => Some(PathBuf::from(p)),
            (None, Some(dir)) if ["schema", "facts", "pos", "neg", "examples", "modes", "trajectories", "spec"].contains(&key) => {
                let p = Path::new(dir).join(format!("{key}.txt"));
                (key == "schema" || key == "facts" || p.exists()).then_some(p)
            }
            _ => None,
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory and renames it into place.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Writes a report to the `out` key's path, or to stdout.
pub(crate) fn emit(settings: &Settings, report: &str) -> Result<(), CliError> {
    match settings.get("out") {
        Some(p) => write_atomic(Path::new(p), report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RELBOOST_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("RELBOOST_THREADS must be a positive integer, got `{v}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a command line and returns the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build_cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("relboost: {e}");
            e.exit_code()
        }
    }
}

fn execute(matches: &ArgMatches) -> Result<(), CliError> {
    configure_threads()?;
    let (name, sub) = matches.subcommand().ok_or_else(|| CliError::Config("missing command".into()))?;
    let settings = Settings::resolve(name, sub)?;
    let outcome = std::panic::catch_unwind(|| match name {
        "train" => commands::train(&settings),
        "eval" => commands::eval(&settings),
        "sample" => commands::sample(&settings),
        "cv" => commands::cv(&settings),
        "metrics" => commands::metrics(&settings),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    });
    outcome.unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    })
}
