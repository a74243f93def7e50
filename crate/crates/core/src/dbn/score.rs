use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{DbnError, DiscreteDataset, TwoSliceNetwork};
use crate::numeric::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreKind {
    Bic,
    Bde { ess: f64 },
    Mit { alpha: f64 },
}

impl ScoreKind {
    pub fn validate(self) -> Result<Self, DbnError> {
        match self {
            ScoreKind::Bde { ess } if !(ess > 0.0 && ess.is_finite()) => {
                Err(DbnError::Config(format!("BDe equivalent sample size must be positive, got {ess}")))
            }
            ScoreKind::Mit { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(DbnError::Config(format!("MIT confidence level must lie in (0, 1), got {alpha}")))
            }
            _ => Ok(self),
        }
    }
}

/// `bic`, `bde`, `bde:<ess>`, `mit`, `mit:<alpha>`; defaults ess = 1, alpha = 0.95.
impl FromStr for ScoreKind {
    type Err = DbnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.trim().split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.trim(), None),
        };
        let num = |default: f64| -> Result<f64, DbnError> {
            arg.map_or(Ok(default), |a| a.trim().parse().map_err(|_| DbnError::Config(format!("bad score parameter `{a}`"))))
        };
        let kind = match name {
            "bic" if arg.is_none() => ScoreKind::Bic,
            "bde" => ScoreKind::Bde { ess: num(1.0)? },
            "mit" => ScoreKind::Mit { alpha: num(0.95)? },
            _ => return Err(DbnError::Config(format!("unknown score `{s}`"))),
        };
        kind.validate()
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreKind::Bic => write!(f, "bic"),
            ScoreKind::Bde { ess } => write!(f, "bde:{ess:?}"),
            ScoreKind::Mit { alpha } => write!(f, "mit:{alpha:?}"),
        }
    }
}

/// Counts `D_ijk` of a family; parent configurations are indexed with the first
/// parent varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCounts {
    pub q: usize,
    pub r: usize,
    /// `counts[j * r + k]`.
    pub counts: Vec<u64>,
}

impl FamilyCounts {
    /// Counts for `X_child(t+1)` given parent data columns.
    pub fn new(data: &DiscreteDataset, child: usize, parents: &[usize]) -> Self {
        let r = data.vars[child].arity as usize;
        let q: usize = parents.iter().map(|&p| data.column_arity(p)).product();
        let column = data.num_vars() + child;
        let mut counts = vec![0u64; q * r];
        for row in data.rows() {
            let mut j = 0;
            let mut scale = 1;
            for &p in parents {
                j += row[p] as usize * scale;
                scale *= data.column_arity(p);
            }
            counts[j * r + row[column] as usize] += 1;
        }
        FamilyCounts { q, r, counts }
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.counts[j * self.r..(j + 1) * self.r]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `Σ_jk D_ijk ln(D_ijk / D_ij)` with `0 ln 0 = 0`.
pub fn family_loglik(counts: &FamilyCounts) -> f64 {
    let mut ll = 0.0;
    for j in 0..counts.q {
        let row = counts.row(j);
        let nij: u64 = row.iter().sum();
        for &d in row.iter().filter(|&&d| d > 0) {
            ll += d as f64 * (d as f64 / nij as f64).ln();
        }
    }
    ll
}

/// `q (r − 1) / 2 · ln N`.
pub fn bic_penalty(q: usize, r: usize, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    q as f64 * (r as f64 - 1.0) / 2.0 * n.ln()
}

/// Dirichlet marginal likelihood with `α_ijk = ess / (q r)`.
pub fn bde_family_score(counts: &FamilyCounts, ess: f64) -> f64 {
    let a_ijk = ess / (counts.q * counts.r) as f64;
    let a_ij = ess / counts.q as f64;
    let mut score = 0.0;
    for j in 0..counts.q {
        let row = counts.row(j);
        let nij: u64 = row.iter().sum();
        if nij == 0 {
            continue;
        }
        score += ln_gamma(a_ij) - ln_gamma(a_ij + nij as f64);
        for &d in row.iter().filter(|&&d| d > 0) {
            score += ln_gamma(a_ijk + d as f64) - ln_gamma(a_ijk);
        }
    }
    score
}

/// Degrees of freedom `l_j = (r_i − 1)(r_σ(j) − 1) Π_{k<j} r_σ(k)` for parents ordered
/// by decreasing arity (ties by column).
pub fn mit_degrees_of_freedom(data: &DiscreteDataset, child: usize, parents: &[usize]) -> Vec<usize> {
    let r = data.vars[child].arity as usize;
    let mut arities: Vec<(usize, usize)> = parents.iter().map(|&p| (data.column_arity(p), p)).collect();
    arities.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut prod = 1;
    arities
        .iter()
        .map(|&(rp, _)| {
            let l = (r - 1) * (rp - 1) * prod;
            prod *= rp;
            l
        })
        .collect()
}

/// `2 N I(X_i; PA_i) − Σ_j χ²_{α, l_j}`; an empty parent set scores 0.
pub fn mit_family_score(data: &DiscreteDataset, child: usize, parents: &[usize], alpha: f64) -> f64 {
    if parents.is_empty() {
        return 0.0;
    }
    let counts = FamilyCounts::new(data, child, parents);
    let n = counts.total() as f64;
    let mut col = vec![0u64; counts.r];
    for j in 0..counts.q {
        for (k, &d) in counts.row(j).iter().enumerate() {
            col[k] += d;
        }
    }
    let mut g = 0.0;
    for j in 0..counts.q {
        let row = counts.row(j);
        let nij: u64 = row.iter().sum();
        for (k, &d) in row.iter().enumerate().filter(|&(_, &d)| d > 0) {
            g += d as f64 * (d as f64 * n / (nij as f64 * col[k] as f64)).ln();
        }
    }
    let penalty: f64 = mit_degrees_of_freedom(data, child, parents)
        .into_iter()
        .filter(|&l| l > 0)
        .map(|l| ChiSquared::new(l as f64).expect("positive degrees of freedom").inverse_cdf(alpha))
        .sum();
    2.0 * g - penalty
}

pub fn family_score(data: &DiscreteDataset, child: usize, parents: &[usize], kind: ScoreKind) -> f64 {
    match kind {
        ScoreKind::Bic => {
            let counts = FamilyCounts::new(data, child, parents);
            family_loglik(&counts) - bic_penalty(counts.q, counts.r, data.len() as f64)
        }
        ScoreKind::Bde { ess } => bde_family_score(&FamilyCounts::new(data, child, parents), ess),
        ScoreKind::Mit { alpha } => mit_family_score(data, child, parents, alpha),
    }
}

/// Sum of the slice `t+1` family scores.
pub fn score_network(net: &TwoSliceNetwork, data: &DiscreteDataset, kind: ScoreKind) -> f64 {
    (0..net.vars.len()).map(|i| family_score(data, i, &net.parents(i), kind)).sum()
}
