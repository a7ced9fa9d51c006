//! Convex surrogates of the reconstruction-error coupling: the AM-GM bound on
//! the cross term of the sensitivity factor and the first-order expansion of
//! the mismatch power.

use crate::channel::OfdmGrid;
use crate::receiver::{t_effective, PowerAllocation};
use crate::sensing::Covariance;
use nalgebra::{DMatrix, Matrix2};
use std::f64::consts::PI;

/// AM-GM scale `a_bar / b_bar`, with `a_bar = mean |n| df` and
/// `b_bar = mean m T_sym`. For a single symbol `b_bar` is floored at
/// `T_sym / 2`.
pub fn amgm_beta(grid: &OfdmGrid) -> f64 {
    let a_bar = grid.indices().map(|n| n.unsigned_abs() as f64).sum::<f64>() * grid.delta_f / grid.n_sc as f64;
    let m = grid.m_symbols;
    let b_bar = (0..m).map(|i| i as f64).sum::<f64>() * grid.t_sym() / m as f64;
    a_bar / b_bar.max(0.5 * grid.t_sym())
}

/// `4 pi^2 (X11 a^2 + X22 b^2 + (beta X11 + X22 / beta) |a b|)`, an upper
/// bound on the sensitivity factor when `X` dominates the covariance.
pub fn omega_surrogate(x: &Matrix2<f64>, beta: f64, n: i64, m: usize, grid: &OfdmGrid) -> f64 {
    let a = n as f64 * grid.delta_f;
    let b = m as f64 * grid.t_sym();
    let ab = (a * b).abs();
    4.0 * PI * PI * (x[(0, 0)] * (a * a + beta * ab) + x[(1, 1)] * (b * b + ab / beta))
}

/// Per-subcarrier weights `(w1, w2)` with
/// `mean_m omega_surrogate = w1 X11 + w2 X22`.
pub fn omega_surrogate_weights(beta: f64, grid: &OfdmGrid) -> Vec<(f64, f64)> {
    let m = grid.m_symbols;
    let c = 4.0 * PI * PI / m as f64;
    grid.indices()
        .map(|n| {
            let a = n as f64 * grid.delta_f;
            (0..m).fold((0.0, 0.0), |(w1, w2), mm| {
                let b = mm as f64 * grid.t_sym();
                let ab = (a * b).abs();
                (w1 + c * (a * a + beta * ab), w2 + c * (b * b + ab / beta))
            })
        })
        .collect()
}

/// `|alpha_R|^2 mean_m omega_surrogate(X)` per subcarrier.
pub fn surrogate_error_variance(alpha_r_sq: f64, x: &Matrix2<f64>, beta: f64, grid: &OfdmGrid) -> Vec<f64> {
    omega_surrogate_weights(beta, grid)
        .into_iter()
        .map(|(w1, w2)| alpha_r_sq * (w1 * x[(0, 0)] + w2 * x[(1, 1)]))
        .collect()
}

/// First-order expansion of `sigma_e^2(X) t(p)` around `(sigma_ref, t_ref)`:
/// `sigma_ref t(p) + t_ref sigma(X) - sigma_ref t_ref`.
#[allow(clippy::too_many_arguments)]
pub fn mismatch_surrogate(
    sigma_ref: &[f64],
    t_ref: &[f64],
    p: &PowerAllocation,
    xi: &DMatrix<f64>,
    x: &Matrix2<f64>,
    beta: f64,
    grid: &OfdmGrid,
    alpha_r_sq: f64,
) -> Vec<f64> {
    let t = t_effective(p, xi);
    let sigma = surrogate_error_variance(alpha_r_sq, x, beta, grid);
    (0..t.len()).map(|n| sigma_ref[n] * t[n] + t_ref[n] * sigma[n] - sigma_ref[n] * t_ref[n]).collect()
}

/// Linearization point and AM-GM scale carried between BCD iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub x_mat: Matrix2<f64>,
    pub z: Vec<f64>,
    pub sigma_ref: Vec<f64>,
    pub t_ref: Vec<f64>,
    pub beta_amgm: f64,
}

impl SurrogateState {
    /// References at an allocation whose exact covariance is `cov`.
    pub fn at(p: &PowerAllocation, xi: &DMatrix<f64>, cov: &Covariance, gamma_r: &[f64], alpha_r_sq: f64, grid: &OfdmGrid) -> Self {
        let beta = amgm_beta(grid);
        let x = cov.matrix();
        Self {
            x_mat: x,
            z: gamma_r.to_vec(),
            sigma_ref: surrogate_error_variance(alpha_r_sq, &x, beta, grid),
            t_ref: t_effective(p, xi),
            beta_amgm: beta,
        }
    }
}

/// Kernel-balance diagnostic: both AM-GM terms at the mean offsets.
pub fn amgm_balance(grid: &OfdmGrid) -> (f64, f64) {
    let beta = amgm_beta(grid);
    let a_bar = grid.indices().map(|n| n.unsigned_abs() as f64).sum::<f64>() * grid.delta_f / grid.n_sc as f64;
    let b_bar = (0..grid.m_symbols).map(|i| i as f64).sum::<f64>() * grid.t_sym() / grid.m_symbols as f64;
    (a_bar * a_bar, beta * a_bar * b_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::omega;

    #[test]
    fn beta_is_positive_and_balanced() {
        let g = OfdmGrid::default();
        let beta = amgm_beta(&g);
        assert!(beta > 0.0);
        let (quad, cross) = amgm_balance(&g);
        assert!((quad / cross).log10().abs() < 1.0);
    }

    #[test]
    fn single_symbol_uses_floor() {
        let g = OfdmGrid { m_symbols: 1, ..OfdmGrid::default() };
        let beta = amgm_beta(&g);
        assert!(beta.is_finite() && beta > 0.0);
    }

    #[test]
    fn beta_scales_with_spacing() {
        // T_sym shrinks with delta_f, so both means move: beta ~ delta_f^2.
        let g = OfdmGrid::default();
        let g10 = OfdmGrid { delta_f: 10.0 * g.delta_f, ..g };
        assert!((amgm_beta(&g10) / amgm_beta(&g) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn dc_subcarrier_has_no_cross_term() {
        let g = OfdmGrid::default();
        let x = Matrix2::new(2e-15, 0.0, 0.0, 30.0);
        for m in 0..g.m_symbols {
            let b = m as f64 * g.t_sym();
            let expect = 4.0 * PI * PI * 30.0 * b * b;
            assert!((omega_surrogate(&x, 1e8, 0, m, &g) - expect).abs() <= 1e-12 * expect.max(1e-30));
        }
    }

    #[test]
    fn surrogate_dominates_uncorrelated_covariance() {
        let g = OfdmGrid::default();
        let cov = Covariance { c_tt: 3e-15, c_nn: 80.0, c_tn: 0.0 };
        let beta = amgm_beta(&g);
        for (pos, n) in g.indices().enumerate() {
            for m in 0..g.m_symbols {
                let exact = omega(n, m, &cov, &g);
                let sur = omega_surrogate(&cov.matrix(), beta, n, m, &g);
                assert!(sur >= exact * (1.0 - 1e-12), "pos {pos} m {m}");
                if n == 0 || m == 0 {
                    assert!((sur - exact).abs() <= 1e-12 * exact.max(1e-300), "pos {pos} m {m}");
                }
            }
        }
    }

    #[test]
    fn weights_match_pointwise_average() {
        let g = OfdmGrid::default();
        let x = Matrix2::new(5e-15, 1e-7, 1e-7, 40.0);
        let beta = amgm_beta(&g);
        let w = omega_surrogate_weights(beta, &g);
        for (pos, n) in g.indices().enumerate() {
            let avg: f64 = (0..g.m_symbols).map(|m| omega_surrogate(&x, beta, n, m, &g)).sum::<f64>() / g.m_symbols as f64;
            let lin = w[pos].0 * x[(0, 0)] + w[pos].1 * x[(1, 1)];
            assert!((avg - lin).abs() <= 1e-12 * avg);
        }
    }

    #[test]
    fn mismatch_anchor_and_zero_reference() {
        let g = OfdmGrid { n_sc: 4, ..OfdmGrid::default() };
        let xi = crate::channel::leakage_matrix(&g, 2000.0);
        let p = PowerAllocation::new(vec![1.0, 0.5, 0.2, 0.1], vec![0.3; 4], vec![0.4, 0.1, 0.9, 0.2]).unwrap();
        let x = Matrix2::new(4e-15, 0.0, 0.0, 60.0);
        let beta = amgm_beta(&g);
        let sigma = surrogate_error_variance(2.0, &x, beta, &g);
        let t = t_effective(&p, &xi);
        let at_ref = mismatch_surrogate(&sigma, &t, &p, &xi, &x, beta, &g, 2.0);
        for n in 0..4 {
            assert!((at_ref[n] - sigma[n] * t[n]).abs() <= 1e-15 * (sigma[n] * t[n]));
        }
        let zero = mismatch_surrogate(&sigma, &[0.0; 4], &p, &xi, &Matrix2::zeros(), beta, &g, 2.0);
        for n in 0..4 {
            assert!((zero[n] - sigma[n] * t[n]).abs() <= 1e-15 * (sigma[n] * t[n]));
        }
    }
}
