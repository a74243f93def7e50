//! Evaluation metrics for scored binary predictions and for probabilistic outputs.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least one positive and one negative example")]
    SingleClass,
    #[error("no predictions")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Scored examples with binary labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    pub items: Vec<(f64, bool)>,
}

impl PredictionSet {
    pub fn new(items: Vec<(f64, bool)>) -> Self {
        PredictionSet { items }
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|(_, l)| *l).count()
    }

    pub fn negatives(&self) -> usize {
        self.items.len() - self.positives()
    }

    /// `P / (P + N)`.
    pub fn default_threshold(&self) -> f64 {
        self.positives() as f64 / self.items.len() as f64
    }

    /// CSV with a `score,label` header; labels are `0` or `1`.
    pub fn parse_csv(text: &str) -> Result<Self, MetricsError> {
        let perr = |line: usize, msg: String| MetricsError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h.replace(' ', "") == "score,label" => {}
            Some((n, h)) => return Err(perr(n, format!("expected header `score,label`, found `{h}`"))),
            None => return Err(MetricsError::Empty),
        }
        let mut items = Vec::new();
        for (n, line) in lines {
            let (s, l) = line.split_once(',').ok_or_else(|| perr(n, format!("expected `score,label`, found `{line}`")))?;
            let score: f64 = s.trim().parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| perr(n, format!("bad score `{s}`")))?;
            let label = match l.trim() {
                "1" => true,
                "0" => false,
                other => return Err(perr(n, format!("label must be 0 or 1, found `{other}`"))),
            };
            items.push((score, label));
        }
        Ok(PredictionSet { items })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,label\n");
        for (s, l) in &self.items {
            out.push_str(&format!("{s:?},{}\n", u8::from(*l)));
        }
        out
    }

    fn check(&self) -> Result<(usize, usize), MetricsError> {
        let (p, n) = (self.positives(), self.negatives());
        if p == 0 || n == 0 {
            return Err(MetricsError::SingleClass);
        }
        Ok((p, n))
    }
}

/// Number of strips above the bottom one (`N`, giving `N + 1` strips) and the
/// skewing parameter `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub strips: usize,
    pub gamma: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { strips: 4, gamma: 0.8 }
    }
}

impl WeightConfig {
    pub fn validate(self) -> Result<Self, MetricsError> {
        if self.strips < 1 {
            return Err(MetricsError::Config("number of strips must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(MetricsError::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDeltaConfig {
    pub delta: f64,
}

impl Default for FDeltaConfig {
    fn default() -> Self {
        FDeltaConfig { delta: 5.0 }
    }
}

/// `W(0) = 1 − γ`, `W(x) = γ W(x−1) + 1 − γ` below the top strip, and the top strip
/// `(γ W(N−1) + 1 − γ) / (1 − γ)`. At `γ = 1` the top weight is 1.
pub fn strip_weights(cfg: WeightConfig) -> Vec<f64> {
    let g = cfg.gamma;
    let n = cfg.strips;
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0 - g);
    for x in 1..n {
        w.push(w[x - 1] * g + (1.0 - g));
    }
    if g == 1.0 {
        w.push(1.0);
    } else {
        w.push((w[n - 1] * g + (1.0 - g)) / (1.0 - g));
    }
    w
}

/// ROC polyline from `(0, 0)` to `(1, 1)`, sweeping scores in descending order; tied
/// scores form a single diagonal step.
pub fn roc_points(preds: &PredictionSet) -> Result<Vec<(f64, f64)>, MetricsError> {
    let (p, n) = preds.check()?;
    let mut sorted = preds.items.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    Ok(points)
}

/// Trapezoidal area under the ROC polyline.
pub fn auc_roc(preds: &PredictionSet) -> Result<f64, MetricsError> {
    let pts = roc_points(preds)?;
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum())
}

/// `∫ (clamp(y(x), lo, hi) − lo) dx` over one linear piece of the ROC polyline.
fn clipped_area((x0, y0): (f64, f64), (x1, y1): (f64, f64), lo: f64, hi: f64) -> f64 {
    if x1 <= x0 {
        return 0.0;
    }
    let mut cuts = vec![x0, x1];
    if y1 != y0 {
        for level in [lo, hi] {
            let t = (level - y0) / (y1 - y0);
            if t > 0.0 && t < 1.0 {
                cuts.push(x0 + t * (x1 - x0));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let y_at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    let h = |x: f64| y_at(x).clamp(lo, hi) - lo;
    cuts.windows(2).map(|c| (c[1] - c[0]) * (h(c[0]) + h(c[1])) / 2.0).sum()
}

/// Area under the ROC curve split into `N + 1` equal horizontal strips by true positive
/// rate, each strip's area scaled by its [`strip_weights`] entry.
pub fn weighted_auc_roc(preds: &PredictionSet, cfg: WeightConfig) -> Result<f64, MetricsError> {
    let cfg = cfg.validate()?;
    let pts = roc_points(preds)?;
    let weights = strip_weights(cfg);
    let height = 1.0 / weights.len() as f64;
    let mut total = 0.0;
    for (s, w) in weights.iter().enumerate() {
        let (lo, hi) = (s as f64 * height, (s + 1) as f64 * height);
        let area: f64 = pts.windows(2).map(|p| clipped_area(p[0], p[1], lo, hi)).sum();
        total += w * area;
    }
    Ok(total)
}

/// `(1 + δ²) P R / (δ² P + R)`.
pub fn f_delta(precision: f64, recall: f64, cfg: FDeltaConfig) -> Result<f64, MetricsError> {
    if !(cfg.delta > 0.0) {
        return Err(MetricsError::Config(format!("delta must be positive, got {}", cfg.delta)));
    }
    if !(0.0..=1.0).contains(&precision) || !(0.0..=1.0).contains(&recall) {
        return Err(MetricsError::Config(format!("precision {precision} and recall {recall} must lie in [0, 1]")));
    }
    if precision == 0.0 && recall == 0.0 {
        return Err(MetricsError::Config("precision and recall are both zero".into()));
    }
    let d2 = cfg.delta * cfg.delta;
    Ok((1.0 + d2) * precision * recall / (d2 * precision + recall))
}

/// Counts and rates at a fixed threshold; a score at or above it predicts positive.
/// Undefined ratios (no predicted positives, precision and recall both zero) are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionReport {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub fnr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub f_delta: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn confusion_report(preds: &PredictionSet, threshold: f64, fcfg: FDeltaConfig) -> Result<ConfusionReport, MetricsError> {
    if preds.items.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(s, l) in &preds.items {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let fd = if precision == 0.0 && recall == 0.0 { 0.0 } else { f_delta(precision, recall, fcfg)? };
    Ok(ConfusionReport {
        threshold,
        tp,
        fp,
        tn,
        fn_,
        fnr: ratio(fn_, tp + fn_),
        fpr: ratio(fp, fp + tn),
        precision,
        recall,
        accuracy: ratio(tp + tn, preds.items.len()),
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        f_delta: fd,
    })
}

impl fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold={}", self.threshold)?;
        writeln!(f, "tp={}\nfp={}\ntn={}\nfn={}", self.tp, self.fp, self.tn, self.fn_)?;
        writeln!(f, "fnr={}\nfpr={}", self.fnr, self.fpr)?;
        writeln!(f, "precision={}\nrecall={}", self.precision, self.recall)?;
        writeln!(f, "accuracy={}\nf1={}\nf_delta={}", self.accuracy, self.f1, self.f_delta)
    }
}

/// `Σ (1 − p)² / n` over the probabilities assigned to the true outcomes.
pub fn mse(probs_of_truth: &[f64]) -> Result<f64, MetricsError> {
    if probs_of_truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(probs_of_truth.iter().map(|p| (1.0 - p) * (1.0 - p)).sum::<f64>() / probs_of_truth.len() as f64)
}

/// Floor applied to probabilities before taking logs.
pub const LOG_FLOOR: f64 = 1e-300;

pub fn mean_loglik(probs_of_truth: &[f64]) -> Result<f64, MetricsError> {
    if probs_of_truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(probs_of_truth.iter().map(|p| p.max(LOG_FLOOR).ln()).sum::<f64>() / probs_of_truth.len() as f64)
}
