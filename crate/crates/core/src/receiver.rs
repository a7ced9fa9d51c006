//! Staged-receiver SINR chain: robust stream, sensing, mismatch and
//! supplementary stream.

use crate::channel::ChannelRealization;
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReceiverError {
    #[error("length mismatch: expected {expected} subcarriers, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative or non-finite power at subcarrier {0}")]
    InvalidPower(usize),
}

/// Per-subcarrier powers in W of the robust stream, supplementary stream and
/// radar sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub p_c1: Vec<f64>,
    pub p_c2: Vec<f64>,
    pub p_r: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p_c1: Vec<f64>, p_c2: Vec<f64>, p_r: Vec<f64>) -> Result<Self, ReceiverError> {
        let p = Self { p_c1, p_c2, p_r };
        p.validate(p.p_c1.len())?;
        Ok(p)
    }

    pub fn zeros(n: usize) -> Self {
        Self { p_c1: vec![0.0; n], p_c2: vec![0.0; n], p_r: vec![0.0; n] }
    }

    /// Every subcarrier gets `p_tx / n` split equally over the three parts
    /// that are enabled.
    pub fn equal_split(n: usize, p_tx: f64, c1: bool, c2: bool) -> Self {
        let parts = 1 + c1 as usize + c2 as usize;
        let each = p_tx / (n * parts) as f64;
        Self {
            p_c1: vec![if c1 { each } else { 0.0 }; n],
            p_c2: vec![if c2 { each } else { 0.0 }; n],
            p_r: vec![each; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p_c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_c1.is_empty()
    }

    /// Power on subcarrier position `i` summed over the three parts.
    pub fn subcarrier_total(&self, i: usize) -> f64 {
        self.p_c1[i] + self.p_c2[i] + self.p_r[i]
    }

    pub fn total(&self) -> f64 {
        (0..self.len()).map(|i| self.subcarrier_total(i)).sum()
    }

    pub fn validate(&self, n: usize) -> Result<(), ReceiverError> {
        for v in [&self.p_c1, &self.p_c2, &self.p_r] {
            if v.len() != n {
                return Err(ReceiverError::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        for i in 0..n {
            if [self.p_c1[i], self.p_c2[i], self.p_r[i]].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(ReceiverError::InvalidPower(i));
            }
        }
        Ok(())
    }

    /// Convex combination `(1 - theta) self + theta other`.
    pub fn blend(&self, other: &Self, theta: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect();
        Self {
            p_c1: mix(&self.p_c1, &other.p_c1),
            p_c2: mix(&self.p_c2, &other.p_c2),
            p_r: mix(&self.p_r, &other.p_r),
        }
    }
}

/// Signal, interference (noise excluded) and SINR of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSinr {
    pub signal: Vec<f64>,
    /// Interference excluding noise.
    pub interference: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl StreamSinr {
    fn assemble(signal: Vec<f64>, interference: Vec<f64>, noise: f64) -> Self {
        let gamma = signal.iter().zip(&interference).map(|(s, i)| s / (i + noise)).collect();
        Self { signal, interference, gamma }
    }
}

/// All per-subcarrier quantities of the four receiver stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrBreakdown {
    pub s_c1: Vec<f64>,
    pub i_c1: Vec<f64>,
    pub gamma_c1: Vec<f64>,
    pub s_r: Vec<f64>,
    pub i_r: Vec<f64>,
    pub gamma_r: Vec<f64>,
    pub p_mismatch: Vec<f64>,
    pub s_c2: Vec<f64>,
    pub i_c2: Vec<f64>,
    pub gamma_c2: Vec<f64>,
    pub r_sum: f64,
}

fn check(p: &PowerAllocation, ch: &ChannelRealization) -> Result<(), ReceiverError> {
    p.validate(ch.grid.n_sc)
}

/// `out[n] = sum_k xi[n,k] v[k]`.
fn leak(xi: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..xi.nrows()).map(|n| xi.row(n).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `out[n] = sum_{k != n} xi[n,k] v[k]`.
fn leak_off_diagonal(xi: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    leak(xi, v).into_iter().enumerate().map(|(n, s)| s - xi[(n, n)] * v[n]).collect()
}

/// Robust stream `s_c1` decoded first with everything else as interference.
pub fn robust_stream_sinr(p: &PowerAllocation, ch: &ChannelRealization) -> Result<StreamSinr, ReceiverError> {
    check(p, ch)?;
    let n = ch.grid.n_sc;
    let all: Vec<f64> = (0..n).map(|k| p.subcarrier_total(k) * ch.h_ep_sq[k]).collect();
    let ep = leak(&ch.xi, &all);
    let signal = (0..n).map(|i| ch.h_dp_sq[i] * p.p_c1[i]).collect();
    let interference = (0..n).map(|i| ch.h_dp_sq[i] * p.p_c2[i] + ep[i]).collect();
    Ok(StreamSinr::assemble(signal, interference, ch.noise_power))
}

/// Radar-sequence SINR after the `s_c1` direct path has been cancelled.
pub fn sensing_sinr(p: &PowerAllocation, ch: &ChannelRealization) -> Result<StreamSinr, ReceiverError> {
    check(p, ch)?;
    let n = ch.grid.n_sc;
    let comm: Vec<f64> = (0..n).map(|k| (p.p_c1[k] + p.p_c2[k]) * ch.h_ep_sq[k]).collect();
    let radar: Vec<f64> = (0..n).map(|k| p.p_r[k] * ch.h_ep_sq[k]).collect();
    let comm_leak = leak(&ch.xi, &comm);
    let radar_ici = leak_off_diagonal(&ch.xi, &radar);
    let signal = (0..n).map(|i| ch.xi[(i, i)] * radar[i]).collect();
    let interference = (0..n).map(|i| ch.h_dp_sq[i] * p.p_c2[i] + comm_leak[i] + radar_ici[i]).collect();
    Ok(StreamSinr::assemble(signal, interference, ch.noise_power))
}

/// ICI-aware energy seen by the echo reconstruction,
/// `t_n = sum_k xi[n,k] (p_c1[k] + p_r[k]) + p_c2[n]`.
pub fn t_effective(p: &PowerAllocation, xi: &DMatrix<f64>) -> Vec<f64> {
    let v: Vec<f64> = p.p_c1.iter().zip(&p.p_r).map(|(a, b)| a + b).collect();
    leak(xi, &v).into_iter().zip(&p.p_c2).map(|(s, c2)| s + c2).collect()
}

/// Residual echo power left by imperfect reconstruction.
pub fn mismatch_power(p: &PowerAllocation, ch: &ChannelRealization, sigma_e_sq: &[f64]) -> Vec<f64> {
    t_effective(p, &ch.xi).iter().zip(sigma_e_sq).map(|(t, s)| s * t).collect()
}

/// Supplementary stream after echo reconstruction and coherent combining.
pub fn supplementary_stream_sinr(
    p: &PowerAllocation,
    ch: &ChannelRealization,
    sigma_e_sq: &[f64],
) -> Result<StreamSinr, ReceiverError> {
    check(p, ch)?;
    if sigma_e_sq.len() != ch.grid.n_sc {
        return Err(ReceiverError::DimensionMismatch { expected: ch.grid.n_sc, got: sigma_e_sq.len() });
    }
    let n = ch.grid.n_sc;
    let pm = mismatch_power(p, ch, sigma_e_sq);
    let self_ici = leak_off_diagonal(&ch.xi, &(0..n).map(|k| p.p_c2[k] * ch.h_ep_sq[k]).collect::<Vec<_>>());
    let signal = (0..n).map(|i| ch.h_comb_sq[i] * p.p_c2[i]).collect();
    let interference = (0..n).map(|i| pm[i] + self_ici[i]).collect();
    Ok(StreamSinr::assemble(signal, interference, ch.noise_power))
}

/// Aggregate spectral efficiency in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEfficiency {
    pub total: f64,
    pub per_subcarrier: f64,
}

pub fn sum_spectral_efficiency(gamma_c1: &[f64], gamma_c2: &[f64]) -> SpectralEfficiency {
    let total: f64 = gamma_c1.iter().zip(gamma_c2).map(|(a, b)| ((1.0 + a) * (1.0 + b)).log2()).sum();
    SpectralEfficiency { total, per_subcarrier: total / gamma_c1.len().max(1) as f64 }
}

/// Runs the whole chain for a given reconstruction error variance.
pub fn evaluate_chain(
    p: &PowerAllocation,
    ch: &ChannelRealization,
    sigma_e_sq: &[f64],
) -> Result<SinrBreakdown, ReceiverError> {
    let c1 = robust_stream_sinr(p, ch)?;
    let r = sensing_sinr(p, ch)?;
    let c2 = supplementary_stream_sinr(p, ch, sigma_e_sq)?;
    let r_sum = sum_spectral_efficiency(&c1.gamma, &c2.gamma).total;
    Ok(SinrBreakdown {
        s_c1: c1.signal,
        i_c1: c1.interference,
        gamma_c1: c1.gamma,
        s_r: r.signal,
        i_r: r.interference,
        gamma_r: r.gamma,
        p_mismatch: mismatch_power(p, ch, sigma_e_sq),
        s_c2: c2.signal,
        i_c2: c2.interference,
        gamma_c2: c2.gamma,
        r_sum,
    })
}
