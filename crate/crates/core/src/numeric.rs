//! Small numeric helpers shared by the learners.

/// Bound applied to every boosted function value before exponentiation.
pub const PSI_CLAMP: f64 = 40.0;

#[inline]
pub fn clamp_psi(psi: f64) -> f64 {
    psi.clamp(-PSI_CLAMP, PSI_CLAMP)
}

/// Logistic function on the clamped argument.
#[inline]
pub fn sigmoid(psi: f64) -> f64 {
    let psi = clamp_psi(psi);
    if psi >= 0.0 {
        1.0 / (1.0 + (-psi).exp())
    } else {
        let e = psi.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Σ e^{x_i}`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0)
}

/// Relative error with unit floor: `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
