//! Agreement of the analytic leakage model with the explicit
//! frequency-domain channel matrix, plus leakage conservation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsisac_core::channel::{fd_effective_channel_oracle, leakage_matrix, ChannelError, OfdmGrid, OraclePath};
use num_complex::Complex64;
use serde::Serialize;
use std::time::Instant;

/// Entries with smaller leakage are not compared.
pub const XI_FLOOR: f64 = 1e-6;
pub const REL_TOL: f64 = 0.02;
pub const ROW_SUM_TOL: f64 = 1e-9;
pub const NORMALIZED_DOPPLERS: [f64; 4] = [0.0, 0.1, 0.3, 0.5];

/// One (Doppler, delay) case of the oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub nu_norm: f64,
    pub delay_samples: usize,
    pub compared: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelValidation {
    pub cases: Vec<OracleCase>,
    /// Largest |row sum - 1| over the random Doppler draws.
    pub max_row_sum_err: f64,
    pub row_sum_draws: usize,
    pub oracle_seconds: f64,
}

impl ChannelValidation {
    pub fn oracle_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn conservation_pass(&self) -> bool {
        self.max_row_sum_err <= ROW_SUM_TOL
    }

    pub fn pass(&self) -> bool {
        self.oracle_pass() && self.conservation_pass()
    }
}

/// Compares `|a|^2 xi` against the squared oracle entries for a single path.
pub fn oracle_case(grid: &OfdmGrid, nu_norm: f64, delay_samples: usize, gain: Complex64) -> Result<OracleCase, ChannelError> {
    let nu = nu_norm * grid.delta_f;
    let h = fd_effective_channel_oracle(&[OraclePath { gain, delay_samples, doppler: nu }], grid)?;
    let xi = leakage_matrix(grid, nu);
    let a2 = gain.norm_sqr();
    let mut compared = 0;
    let mut max_rel_err: f64 = 0.0;
    for r in 0..grid.n_sc {
        for c in 0..grid.n_sc {
            let x = xi[(r, c)];
            if x > XI_FLOOR {
                compared += 1;
                max_rel_err = max_rel_err.max((h[(r, c)].norm_sqr() - a2 * x).abs() / (a2 * x));
            }
        }
    }
    Ok(OracleCase { nu_norm, delay_samples, compared, max_rel_err, pass: max_rel_err <= REL_TOL })
}

/// Every delay inside the prefix at each normalized Doppler, then
/// `row_sum_draws` uniform Doppler values in `[-Δf, Δf]` for conservation.
pub fn validate_channel(grid: &OfdmGrid, seed: u64, row_sum_draws: usize) -> Result<ChannelValidation, ChannelError> {
    grid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut cases = Vec::new();
    for &nu in &NORMALIZED_DOPPLERS {
        for d in 0..grid.n_cp.max(1) {
            let gain = Complex64::from_polar(rng.gen_range(1e-4..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            cases.push(oracle_case(grid, nu, d, gain)?);
        }
    }
    let oracle_seconds = start.elapsed().as_secs_f64();
    let mut max_row_sum_err: f64 = 0.0;
    for _ in 0..row_sum_draws {
        let xi = leakage_matrix(grid, rng.gen_range(-1.0..1.0) * grid.delta_f);
        for r in 0..grid.n_sc {
            max_row_sum_err = max_row_sum_err.max((xi.row(r).sum() - 1.0).abs());
        }
    }
    Ok(ChannelValidation { cases, max_row_sum_err, row_sum_draws, oracle_seconds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_passes() {
        let v = validate_channel(&OfdmGrid::default(), 3, 10).unwrap();
        assert_eq!(v.cases.len(), 4 * 8);
        assert!(v.cases.iter().all(|c| c.compared >= 32));
        assert!(v.pass(), "{v:?}");
    }

    #[test]
    fn delay_outside_the_prefix_is_an_error() {
        let g = OfdmGrid::default();
        assert!(oracle_case(&g, 0.1, g.n_cp, Complex64::new(1.0, 0.0)).is_err());
    }
}
