//! Delay-Doppler Fisher information, weighted CRLB and the echo
//! reconstruction error it induces.

use crate::channel::{ChannelRealization, OfdmGrid, SPEED_OF_LIGHT};
use crate::receiver::{sensing_sinr, PowerAllocation, ReceiverError};
use nalgebra::Matrix2;
use std::f64::consts::PI;
use thiserror::Error;

/// Smallest admissible `1 - r^2`, with `r` the correlation coefficient of J.
///
/// The raw entries of J differ by ~17 orders of magnitude (s^-2 vs Hz^-2), so
/// an absolute eigenvalue floor cannot separate "singular" from "fine".
pub const FIM_DECORRELATION_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("Fisher information matrix is singular")]
    SingularFim,
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
}

/// Subcarrier-independent FIM kernel constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimKernels {
    pub k_tt: f64,
    pub k_nn: f64,
    pub k_tn: f64,
}

impl FimKernels {
    pub fn new(grid: &OfdmGrid) -> Self {
        let m = grid.m_symbols;
        let sum_m: f64 = (0..m).map(|i| i as f64).sum();
        let sum_m2: f64 = (0..m).map(|i| (i * i) as f64).sum();
        let c = 8.0 * PI * PI;
        let t = grid.t_sym();
        Self {
            k_tt: c * grid.delta_f * grid.delta_f * m as f64,
            k_nn: c * t * t * sum_m2,
            k_tn: c * grid.delta_f * t * sum_m,
        }
    }
}

/// `J = [[K_tt sum n^2 g, K_tn sum n g], [K_tn sum n g, K_nn sum g]]` over the
/// grid's signed index set.
pub fn fim_from_sinr(gamma_r: &[f64], kernels: &FimKernels, grid: &OfdmGrid) -> Matrix2<f64> {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (n, g) in grid.indices().zip(gamma_r) {
        let n = n as f64;
        s0 += g;
        s1 += n * g;
        s2 += n * n * g;
    }
    Matrix2::new(kernels.k_tt * s2, kernels.k_tn * s1, kernels.k_tn * s1, kernels.k_nn * s0)
}

/// Entries of the inverse FIM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    pub c_tt: f64,
    pub c_nn: f64,
    pub c_tn: f64,
}

impl Covariance {
    pub fn zero() -> Self {
        Self { c_tt: 0.0, c_nn: 0.0, c_tn: 0.0 }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.c_tt, self.c_tn, self.c_tn, self.c_nn)
    }
}

/// An invertible FIM and its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherState {
    pub j: Matrix2<f64>,
    pub cov: Covariance,
    pub kernels: FimKernels,
}

/// Whether `j` clears the relative invertibility floor.
pub fn is_invertible(j: &Matrix2<f64>) -> bool {
    let (a, b, d) = (j[(0, 0)], j[(0, 1)], j[(1, 1)]);
    a > 0.0 && d > 0.0 && a.is_finite() && d.is_finite() && 1.0 - (b / a) * (b / d) > FIM_DECORRELATION_FLOOR
}

impl FisherState {
    pub fn new(j: Matrix2<f64>, kernels: FimKernels) -> Result<Self, SensingError> {
        if !is_invertible(&j) {
            return Err(SensingError::SingularFim);
        }
        let (a, b, d) = (j[(0, 0)], j[(0, 1)], j[(1, 1)]);
        // det = a d (1 - r^2), formed without cancellation between a d and b^2.
        let det = a * d * (1.0 - (b / a) * (b / d));
        let cov = Covariance { c_tt: d / det, c_nn: a / det, c_tn: -b / det };
        Ok(Self { j, cov, kernels })
    }

    pub fn from_sinr(gamma_r: &[f64], grid: &OfdmGrid) -> Result<Self, SensingError> {
        let kernels = FimKernels::new(grid);
        Self::new(fim_from_sinr(gamma_r, &kernels, grid), kernels)
    }
}

/// Weights converting delay and Doppler variances to m^2 and (m/s)^2, plus the
/// sensing bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingWeights {
    pub w_tau: f64,
    pub w_nu: f64,
    pub gamma_sens: f64,
}

impl SensingWeights {
    pub fn new(grid: &OfdmGrid, gamma_sens: f64) -> Self {
        let half_lambda = grid.wavelength() / 2.0;
        Self { w_tau: (SPEED_OF_LIGHT / 2.0).powi(2), w_nu: half_lambda * half_lambda, gamma_sens }
    }
}

/// `Tr(W J^-1)`.
pub fn weighted_crlb(fs: &FisherState, w: &SensingWeights) -> f64 {
    weighted_trace(&fs.cov, w)
}

pub fn weighted_trace(cov: &Covariance, w: &SensingWeights) -> f64 {
    w.w_tau * cov.c_tt + w.w_nu * cov.c_nn
}

/// Frequency-time sensitivity factor of the echo reconstruction.
pub fn omega(n: i64, m: usize, cov: &Covariance, grid: &OfdmGrid) -> f64 {
    let a = n as f64 * grid.delta_f;
    let b = m as f64 * grid.t_sym();
    4.0 * PI * PI * (cov.c_tt * a * a + cov.c_nn * b * b - 2.0 * cov.c_tn * a * b)
}

/// Symbol-averaged reconstruction error variance per subcarrier.
pub fn reconstruction_error_variance(alpha_r_sq: f64, cov: &Covariance, grid: &OfdmGrid) -> Vec<f64> {
    let m = grid.m_symbols;
    grid.indices()
        .map(|n| alpha_r_sq * (0..m).map(|mm| omega(n, mm, cov, grid)).sum::<f64>() / m as f64)
        .collect()
}

/// Sensing SINR -> FIM -> covariance -> reconstruction error for an allocation.
pub fn end_to_end_sigma(p: &PowerAllocation, ch: &ChannelRealization) -> Result<(FisherState, Vec<f64>), SensingError> {
    let gamma_r = sensing_sinr(p, ch)?.gamma;
    let fs = FisherState::from_sinr(&gamma_r, &ch.grid)?;
    let sigma = reconstruction_error_variance(ch.echo.alpha_r_sq, &fs.cov, &ch.grid);
    Ok((fs, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::EchoPath;
    use num_complex::Complex64;

    fn grid() -> OfdmGrid {
        OfdmGrid::default()
    }

    #[test]
    fn kernel_constants() {
        let g = grid();
        let k = FimKernels::new(&g);
        let c = 8.0 * PI * PI;
        assert!((k.k_tt - c * 15e3 * 15e3 * 16.0).abs() / k.k_tt < 1e-14);
        // sum m = 120, sum m^2 = 1240 for M = 16.
        let t = 40.0 / (32.0 * 15e3);
        assert!((k.k_nn - c * t * t * 1240.0).abs() / k.k_nn < 1e-14);
        assert!((k.k_tn - c * 15e3 * t * 120.0).abs() / k.k_tn < 1e-14);
        // Cauchy-Schwarz over the symbol index.
        assert!(k.k_tn * k.k_tn <= k.k_tt * k.k_nn * 120.0 * 120.0 / (16.0 * 1240.0) * (1.0 + 1e-12));
    }

    #[test]
    fn zero_sinr_gives_zero_fim() {
        let g = grid();
        assert_eq!(fim_from_sinr(&[0.0; 32], &FimKernels::new(&g), &g), Matrix2::zeros());
    }

    #[test]
    fn uniform_sinr_off_diagonal() {
        let g = grid();
        let k = FimKernels::new(&g);
        let j = fim_from_sinr(&[2.0; 32], &k, &g);
        assert!((j[(0, 1)] - k.k_tn * 2.0 * -16.0).abs() < 1e-9 * j[(0, 1)].abs());
        let n2: f64 = (-16i64..16).map(|n| (n * n) as f64).sum();
        assert!((j[(0, 0)] - k.k_tt * 2.0 * n2).abs() < 1e-9 * j[(0, 0)]);
    }

    #[test]
    fn single_active_subcarrier() {
        let g = grid();
        let k = FimKernels::new(&g);
        let mut gamma = vec![0.0; 32];
        let pos = g.position(5).unwrap();
        gamma[pos] = 1.0;
        let j = fim_from_sinr(&gamma, &k, &g);
        assert_eq!(j, Matrix2::new(k.k_tt * 25.0, k.k_tn * 5.0, k.k_tn * 5.0, k.k_nn));
        // The symbol axis alone decorrelates delay and Doppler.
        assert!(FisherState::new(j, k).is_ok());
    }

    #[test]
    fn diagonal_and_identity_crlb() {
        let k = FimKernels::new(&grid());
        let w = SensingWeights { w_tau: 3.0, w_nu: 5.0, gamma_sens: 1.0 };
        let fs = FisherState::new(Matrix2::new(2.0, 0.0, 0.0, 4.0), k).unwrap();
        assert!((weighted_crlb(&fs, &w) - (1.5 + 1.25)).abs() < 1e-15);
        let w1 = SensingWeights { w_tau: 1.0, w_nu: 1.0, gamma_sens: 1.0 };
        let fs = FisherState::new(Matrix2::identity(), k).unwrap();
        assert_eq!(weighted_crlb(&fs, &w1), 2.0);
    }

    #[test]
    fn inverse_matches_adjugate() {
        let k = FimKernels::new(&grid());
        let j = Matrix2::new(4.0, 1.5, 1.5, 2.0);
        let fs = FisherState::new(j, k).unwrap();
        let prod = j * fs.cov.matrix();
        assert!((prod - Matrix2::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn omega_examples() {
        let g = grid();
        let cov = Covariance { c_tt: 1e-14, c_nn: 50.0, c_tn: 0.0 };
        assert_eq!(omega(0, 0, &cov, &g), 0.0);
        let v = omega(1, 0, &cov, &g);
        assert!((v - 4.0 * PI * PI * 1e-14 * 15e3 * 15e3).abs() < 1e-15 * v.abs().max(1.0));
        assert!((omega(3, 4, &cov, &g) - omega(-3, 4, &cov, &g)).abs() < 1e-15);
    }

    #[test]
    fn toy_error_variance() {
        // J = I, so C = I; M = 2 and N = 4.
        let g = OfdmGrid { n_sc: 4, n_cp: 0, delta_f: 1.0, m_symbols: 2, f_c: 1e9 };
        let cov = Covariance { c_tt: 1.0, c_nn: 1.0, c_tn: 0.0 };
        let t = g.t_sym();
        let s = reconstruction_error_variance(2.0, &cov, &g);
        for (pos, n) in g.indices().enumerate() {
            let a = n as f64;
            let expect = 2.0 * 4.0 * PI * PI * (a * a + 0.5 * t * t);
            assert!((s[pos] - expect).abs() < 1e-12 * expect.max(1.0));
        }
        assert!(reconstruction_error_variance(0.0, &cov, &g).iter().all(|&x| x == 0.0));
    }

    fn static_channel(grid: OfdmGrid) -> ChannelRealization {
        let echo = EchoPath { alpha_r_sq: 1e-11, alpha_r_phase: 0.0, tau_tar: 1e-6, nu_tar: 0.0 };
        ChannelRealization::from_parts(grid, vec![Complex64::new(0.0, 0.0); grid.n_sc], echo, 1e-13)
    }

    #[test]
    fn zero_radar_power_is_singular() {
        let ch = static_channel(grid());
        let p = PowerAllocation::equal_split(32, 0.2, true, true);
        let p = PowerAllocation { p_r: vec![0.0; 32], ..p };
        assert_eq!(end_to_end_sigma(&p, &ch).unwrap_err(), SensingError::SingularFim);
    }

    #[test]
    fn doubling_radar_power_halves_error() {
        let ch = static_channel(grid());
        let p = PowerAllocation { p_r: (0..32).map(|i| 1e-3 * (1.0 + i as f64 / 7.0)).collect(), ..PowerAllocation::zeros(32) };
        let p2 = PowerAllocation { p_r: p.p_r.iter().map(|x| 2.0 * x).collect(), ..PowerAllocation::zeros(32) };
        let (f1, s1) = end_to_end_sigma(&p, &ch).unwrap();
        let (f2, s2) = end_to_end_sigma(&p2, &ch).unwrap();
        assert!((f2.j - 2.0 * f1.j).abs().max() <= 1e-12 * f1.j.abs().max());
        assert!((f2.cov.c_tt - 0.5 * f1.cov.c_tt).abs() < 1e-12 * f1.cov.c_tt);
        assert!((f2.cov.c_nn - 0.5 * f1.cov.c_nn).abs() < 1e-12 * f1.cov.c_nn);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((b - 0.5 * a).abs() <= 1e-12 * a);
        }
    }
}
