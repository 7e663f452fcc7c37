// SPDX-License-Identifier: Apache-2.0

//! Parameter formulas shared by the attacks and the nugget finder. Logarithms
//! are base 2.

use serde::{Deserialize, Serialize};

use crate::AttackError;

pub fn log2r(r: usize) -> f64 {
    (r as f64).log2()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

/// Smallest `k ≥ 1` with `C(n, k) ≥ r · log(r)^(2k)`.
pub fn choose_k(n: usize, r: usize) -> Result<usize, AttackError> {
    let lg = log2r(r);
    for k in 1..=n {
        let rhs = if lg <= 0.0 { f64::NEG_INFINITY } else { (r as f64).ln() + 2.0 * k as f64 * lg.ln() };
        if ln_binomial(n, k) >= rhs - 1e-12 {
            return Ok(k);
        }
    }
    Err(AttackError::NoValidK { n, r })
}

/// `c_ℓ = (n−1)(n−2)…(n−k+ℓ) / ((k−1)(k−2)…ℓ)`, with `c_k = 1`.
pub fn coef(n: usize, k: usize, level: usize) -> f64 {
    assert!(level >= 1 && level <= k, "level {level} outside 1..={k}");
    (0..k - level).map(|j| (n - 1 - j) as f64 / (k - 1 - j) as f64).product()
}

/// The `ρ` grid `R(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RhoGrid {
    /// `{1, 1 + 1/r, …, r}`, `r(r−1)+1` points.
    #[default]
    Full,
    /// `{1, f, f², …}` capped at `r`, for large `r`.
    Geometric { factor: f64 },
}

impl RhoGrid {
    pub fn points(&self, r: usize) -> Vec<f64> {
        match *self {
            RhoGrid::Full => (0..=r * (r.max(1) - 1)).map(|j| 1.0 + j as f64 / r as f64).collect(),
            RhoGrid::Geometric { factor } => {
                let mut v = vec![1.0];
                if factor > 1.0 {
                    while v[v.len() - 1] * factor < r as f64 {
                        v.push(v[v.len() - 1] * factor);
                    }
                }
                if (r as f64) > v[v.len() - 1] {
                    v.push(r as f64);
                }
                v
            }
        }
    }
}

/// Gap threshold and probability threshold of the level-`ℓ` similarity test:
/// `ρ/(256√r) · c_{ℓ−1}^{1/2}/(64 log r)^{k−ℓ+1}` and
/// `1/(2ρ log r) · 64^{−k+ℓ−1}/c_{ℓ−1}^{1/2}`.
pub fn similarity_thresholds(n: usize, k: usize, r: usize, level: usize, rho: f64) -> (f64, f64) {
    let c = coef(n, k, level - 1).sqrt();
    let e = (k + 1 - level) as i32;
    let lg = log2r(r);
    let gap = rho / (256.0 * (r as f64).sqrt()) * c / (64.0 * lg).powi(e);
    let prob = 1.0 / (2.0 * rho * lg) * 64f64.powi(-e) / c;
    (gap, prob)
}

/// Top-level gap test thresholds `ρ/(256√r)` and `1/(2ρ log r)`.
pub fn top_thresholds(r: usize, rho: f64) -> (f64, f64) {
    (rho / (256.0 * (r as f64).sqrt()), 1.0 / (2.0 * rho * log2r(r)))
}

/// Trigger threshold `1/(64√r)` of the game-value attack.
pub fn mart_threshold(r: usize) -> f64 {
    1.0 / (64.0 * (r as f64).sqrt())
}

/// `γ = (ρ*/256√r) · c_{k*}^{1/2} / (64 log r)^{k−k*}` for the Laplace attack.
pub fn dp_gamma(n: usize, k: usize, k_star: usize, r: usize, rho_star: f64) -> f64 {
    rho_star / (256.0 * (r as f64).sqrt()) * coef(n, k, k_star).sqrt() / (64.0 * log2r(r)).powi((k - k_star) as i32)
}

/// Laplace scale `γ / (4 log r)`.
pub fn dp_lambda(gamma: f64, r: usize) -> f64 {
    gamma / (4.0 * log2r(r))
}

/// `α = (ρ*/256√r) · √n · C(n−1,k−1)^{1/2} / (64 log r)^{k−1}` for the
/// singletons attack; its threshold parameter is `γ = α/√n`.
pub fn sing_alpha(n: usize, k: usize, r: usize, rho_star: f64) -> f64 {
    let c = ln_binomial(n - 1, k - 1).exp();
    rho_star / (256.0 * (r as f64).sqrt()) * (n as f64).sqrt() * c.sqrt() / (64.0 * log2r(r)).powi((k - 1) as i32)
}

/// Half-sample deviation bound `4r · exp(−α²/192)`.
pub fn e_event_bound(r: usize, alpha: f64) -> f64 {
    4.0 * r as f64 * (-alpha * alpha / 192.0).exp()
}

/// Guaranteed bias of the game-value attack, `1/(40·128√r) − 1/(200r)`.
pub fn mart_bias_bound(r: usize) -> f64 {
    1.0 / (40.0 * 128.0 * (r as f64).sqrt()) - 1.0 / (200.0 * r as f64)
}

/// Guaranteed backup gap of the Laplace attack,
/// `2^{−16} / (√r log r) · (64² log r)^{−(k−k*)}`, halved into a bias.
pub fn dp_bias_bound(k: usize, k_star: usize, r: usize) -> f64 {
    let lg = log2r(r);
    0.5 / 65536.0 / ((r as f64).sqrt() * lg) * (4096.0 * lg).powi(-((k - k_star) as i32))
}

/// Guaranteed backup gap of the singletons attack,
/// `1/(1024√r log r) · (64² log r)^{−(k−1)} − 2/r`, halved into a bias.
pub fn sing_bias_bound(k: usize, r: usize) -> f64 {
    let lg = log2r(r);
    0.5 * (1.0 / (1024.0 * (r as f64).sqrt() * lg) * (4096.0 * lg).powi(-((k - 1) as i32)) - 2.0 / r as f64)
}
