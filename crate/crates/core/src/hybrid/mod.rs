//! Exponential-family boosting for multiclass, count and real-valued targets.
//!
//! * multinomial: `p_k = softmax(ψ)_k`, gradient `I(y=k) − p_k` per class function,
//! * Poisson: `λ = e^ψ`, gradient `y − λ`,
//! * Gaussian: `μ = ψ^μ`, `σ = max(σ_floor, ψ^σ)`, gradients `(y−μ)/σ²` and
//!   `(y−μ)²/σ³ − 1/σ`.
//!
//! Continuous parents enter linearly: the score of an output is
//! `ψ⁰(x) + Σ_j x_j ψ^j(x)`, with one boosted function per coefficient.

pub mod aggregate;
mod model;
mod train;

use thiserror::Error;

use crate::logic::LogicError;
use crate::numeric::{clamp_psi, ln_factorial, log_sum_exp, softmax};
use crate::regtree::TreeError;

pub use model::{Coefficient, Function, FunctionLabel, HybridModel, Prediction};
pub use train::{train_hybrid, train_hybrid_one, train_hybrid_logged, HybridConfig};

/// Lower bound applied to every σ estimate.
pub const SIGMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("sigma {0} is below the floor {SIGMA_FLOOR}")]
    SigmaBelowFloor(f64),
    #[error("expected {expected} values, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("target `{0}` has a boolean value kind; use binary boosting")]
    BooleanTarget(String),
    #[error("no examples for target `{0}`")]
    NoExamples(String),
    #[error("`{key}` has value {value} which does not match the target kind")]
    ValueKind { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Distribution family of a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    Multinomial { k: u32 },
    Poisson,
    Gaussian,
}

pub fn multinomial_prob(psis: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = psis.iter().map(|&p| clamp_psi(p)).collect();
    softmax(&clamped)
}

/// `I(j = k) − p_j`; the true-class component is written as the sum of the other
/// probabilities so it stays accurate when `p_k` is close to 1.
pub fn multinomial_gradient(k: usize, probs: &[f64]) -> Vec<f64> {
    let others: f64 = probs.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, p)| p).sum();
    probs.iter().enumerate().map(|(j, &p)| if j == k { others } else { -p }).collect()
}

/// `ln p_k = ψ_k − ln Σ_j e^{ψ_j}`.
pub fn multinomial_ll(k: usize, psis: &[f64]) -> f64 {
    let clamped: Vec<f64> = psis.iter().map(|&p| clamp_psi(p)).collect();
    clamped[k] - log_sum_exp(&clamped)
}

pub fn poisson_gradient(y: u64, psi: f64) -> f64 {
    y as f64 - clamp_psi(psi).exp()
}

/// `y ψ − e^ψ − ln y!`
pub fn poisson_ll(y: u64, psi: f64) -> f64 {
    let psi = clamp_psi(psi);
    y as f64 * psi - psi.exp() - ln_factorial(y)
}

/// Gradients of the Gaussian log-density with respect to μ and σ.
pub fn gaussian_gradients(y: f64, mu: f64, sigma: f64) -> Result<(f64, f64), HybridError> {
    if !(sigma >= SIGMA_FLOOR) {
        return Err(HybridError::SigmaBelowFloor(sigma));
    }
    let r = y - mu;
    Ok((r / (sigma * sigma), r * r / (sigma * sigma * sigma) - 1.0 / sigma))
}

pub fn gaussian_ll(y: f64, mu: f64, sigma: f64) -> f64 {
    let z = (y - mu) / sigma;
    -sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
}

fn linear(intercept: f64, coeffs: &[f64], x: &[f64]) -> Result<f64, HybridError> {
    if coeffs.len() != x.len() {
        return Err(HybridError::Dimension { expected: coeffs.len(), found: x.len() });
    }
    Ok(intercept + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>())
}

/// Softmax over class scores `ψ⁰_k + Σ_j x_j ψ^j_k`; `coeffs[k]` holds class `k`'s
/// coefficients.
pub fn mixed_softmax_prob(intercepts: &[f64], coeffs: &[Vec<f64>], x: &[f64], k: usize) -> Result<f64, HybridError> {
    if coeffs.len() != intercepts.len() {
        return Err(HybridError::Dimension { expected: intercepts.len(), found: coeffs.len() });
    }
    if k >= intercepts.len() {
        return Err(HybridError::Dimension { expected: intercepts.len(), found: k + 1 });
    }
    let scores = intercepts.iter().zip(coeffs).map(|(&i, c)| linear(i, c, x)).collect::<Result<Vec<_>, _>>()?;
    Ok(multinomial_prob(&scores)[k])
}

pub fn mixed_poisson_rate(intercept: f64, coeffs: &[f64], x: &[f64]) -> Result<f64, HybridError> {
    Ok(clamp_psi(linear(intercept, coeffs, x)?).exp())
}

pub fn mixed_gaussian_mean(intercept: f64, coeffs: &[f64], x: &[f64]) -> Result<f64, HybridError> {
    linear(intercept, coeffs, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_err;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 1e-5;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        (f(x + H) - f(x - H)) / (2.0 * H)
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(multinomial_prob(&[0.3; 4]), vec![0.25; 4]);
        let p = multinomial_prob(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let shifted = multinomial_prob(&[2f64.ln() + 5.0, 5.0]);
        assert!(p.iter().zip(&shifted).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn multinomial_gradient_cases() {
        assert_eq!(multinomial_gradient(0, &[1.0, 0.0]), [0.0, 0.0]);
        assert_eq!(multinomial_gradient(0, &[0.25; 4]), [0.75, -0.25, -0.25, -0.25]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let k = rng.random_range(2..6);
            let psis: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = multinomial_prob(&psis);
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
            let g = multinomial_gradient(rng.random_range(0..k), &p);
            assert!(g.iter().sum::<f64>().abs() <= 1e-15);
        }
    }

    #[test]
    fn poisson_cases() {
        assert!(poisson_gradient(3, 3f64.ln()).abs() < 1e-14);
        assert_eq!(poisson_gradient(2, 0.0), 1.0);
        assert!((poisson_gradient(0, 2f64.ln()) + 2.0).abs() < 1e-15);
        assert_eq!(poisson_ll(0, 0.0), -1.0);
        assert!((poisson_ll(1, 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_cases() {
        let (dm, ds) = gaussian_gradients(1.0, 1.0, 2.0).unwrap();
        assert_eq!((dm, ds), (0.0, -0.5));
        let (_, ds) = gaussian_gradients(3.5, 1.0, 2.5).unwrap();
        assert!(ds.abs() < 1e-15);
        assert!(gaussian_gradients(0.0, 0.0, 1e-4).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let k = rng.random_range(2..5);
            let psis: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y = rng.random_range(0..k);
            let g = multinomial_gradient(y, &multinomial_prob(&psis));
            for j in 0..k {
                let f = |v: f64| {
                    let mut q = psis.clone();
                    q[j] = v;
                    multinomial_ll(y, &q)
                };
                assert!(rel_err(g[j], fd(f, psis[j])) <= 1e-6);
            }

            let count = rng.random_range(0..20u64);
            let psi = rng.random_range(-3.0..3.0);
            assert!(rel_err(poisson_gradient(count, psi), fd(|v| poisson_ll(count, v), psi)) <= 1e-6);

            let (yv, mu, sigma) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.5..3.0));
            let (dm, ds) = gaussian_gradients(yv, mu, sigma).unwrap();
            assert!(rel_err(dm, fd(|v| gaussian_ll(yv, v, sigma), mu)) <= 1e-6);
            assert!(rel_err(ds, fd(|v| gaussian_ll(yv, mu, v), sigma)) <= 1e-6);
        }
    }

    #[test]
    fn mixed_parent_formulas() {
        let ints = [2f64.ln(), 0.0];
        let coeffs = vec![vec![0.7], vec![-1.2]];
        assert_eq!(mixed_softmax_prob(&ints, &coeffs, &[0.0], 0).unwrap(), multinomial_prob(&ints)[0]);
        assert!((mixed_softmax_prob(&ints, &[vec![], vec![]], &[], 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(mixed_softmax_prob(&ints, &coeffs, &[1.0, 2.0], 0).is_err());
        let a = mixed_softmax_prob(&ints, &coeffs, &[0.4], 1).unwrap();
        let b = mixed_softmax_prob(&[ints[0] + 5.0, 5.0], &coeffs, &[0.4], 1).unwrap();
        assert!((a - b).abs() < 1e-15);

        assert_eq!(mixed_poisson_rate(0.3, &[5.0], &[0.0]).unwrap(), 0.3f64.exp());
        assert!((mixed_poisson_rate(0.0, &[2f64.ln()], &[1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(mixed_poisson_rate(0.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);

        assert_eq!(mixed_gaussian_mean(1.5, &[3.0], &[0.0]).unwrap(), 1.5);
        assert!((mixed_gaussian_mean(1.0, &[2.0, -0.5], &[3.0, 4.0]).unwrap() - (1.0 + 6.0 - 2.0)).abs() < 1e-15);
        assert_eq!(mixed_gaussian_mean(0.25, &[0.0, 0.0], &[9.0, -9.0]).unwrap(), 0.25);
    }
}
