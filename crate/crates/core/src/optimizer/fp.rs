//! Closed-form auxiliary updates of the Lagrangian-dual and quadratic
//! fractional-programming transforms.

use std::f64::consts::LOG2_E;

/// Auxiliary variables of one BCD iteration, in noise-normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct FpAuxiliaries {
    pub alpha_c1: Vec<f64>,
    pub alpha_c2: Vec<f64>,
    pub rho_c1: Vec<f64>,
    pub rho_c2: Vec<f64>,
    pub y: Vec<f64>,
}

/// The dual-transform maximizer is the SINR itself.
pub fn update_alpha(gamma: &[f64]) -> Vec<f64> {
    gamma.to_vec()
}

/// `log2(1+a) - a log2(e) + (1+a) g/(1+g) log2(e)`; equals `log2(1+g)` at `a = g`.
pub fn dual_transform_rate(alpha: f64, gamma: f64) -> f64 {
    (1.0 + alpha).log2() - alpha * LOG2_E + (1.0 + alpha) * gamma / (1.0 + gamma) * LOG2_E
}

/// `rho = sqrt((1+a) S) / (S + I + noise)`.
pub fn update_rho(alpha: f64, s: f64, i: f64, noise: f64) -> f64 {
    ((1.0 + alpha) * s).sqrt() / (s + i + noise)
}

/// `2 rho sqrt((1+a) S) - rho^2 (S + I + noise)`, a lower bound on
/// `(1+a) S / (S + I + noise)` that is tight at the optimal `rho`.
pub fn quadratic_transform(rho: f64, alpha: f64, s: f64, i: f64, noise: f64) -> f64 {
    2.0 * rho * ((1.0 + alpha) * s).sqrt() - rho * rho * (s + i + noise)
}

/// `y = sqrt(S_r) / (I_r + noise)`.
pub fn update_y(s_r: f64, i_r: f64, noise: f64) -> f64 {
    s_r.sqrt() / (i_r + noise)
}

/// `2 y sqrt(S_r) - y^2 (I_r + noise)`, a lower bound on the sensing SINR.
pub fn sensing_bound(y: f64, s_r: f64, i_r: f64, noise: f64) -> f64 {
    2.0 * y * s_r.sqrt() - y * y * (i_r + noise)
}

/// Surrogate rate of one stream with both transforms applied.
pub fn surrogate_rate(alpha: f64, rho: f64, s: f64, i: f64, noise: f64) -> f64 {
    (1.0 + alpha).log2() - alpha * LOG2_E + quadratic_transform(rho, alpha, s, i, noise) * LOG2_E
}
