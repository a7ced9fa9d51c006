//! Explicit frequency-domain channel matrix built from the time-domain
//! operators, used to validate the leakage model.

use super::grid::OfdmGrid;
use super::ChannelError;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// One echo path: complex gain, integer sample delay and Doppler in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePath {
    pub gain: Complex64,
    pub delay_samples: usize,
    pub doppler: f64,
}

/// `F B (sum_l a_l Pi^{d_l} Delta(nu_l)) A F^H` with a unitary DFT whose rows
/// follow the signed subcarrier indices.
pub fn fd_effective_channel_oracle(paths: &[OraclePath], grid: &OfdmGrid) -> Result<DMatrix<Complex64>, ChannelError> {
    let (n, cp) = (grid.n_sc, grid.n_cp);
    let ext = n + cp;
    for p in paths {
        if p.delay_samples > 0 && p.delay_samples >= cp {
            return Err(ChannelError::DelayExceedsCp { delay: p.delay_samples, n_cp: cp });
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    // CP insertion A: (N+Ncp) x N.
    let a = DMatrix::from_fn(ext, n, |r, c| if (r + n - cp) % n == c { Complex64::new(1.0, 0.0) } else { zero });
    // CP removal B: N x (N+Ncp).
    let b = DMatrix::from_fn(n, ext, |r, c| if c == r + cp { Complex64::new(1.0, 0.0) } else { zero });
    let mut h_td = DMatrix::from_element(ext, ext, zero);
    for p in paths {
        for col in 0..ext {
            // Delta(nu) then the cyclic shift Pi^d.
            let phase = Complex64::from_polar(1.0, 2.0 * PI * p.doppler * col as f64 / grid.f_s());
            let row = (col + p.delay_samples) % ext;
            h_td[(row, col)] += p.gain * phase;
        }
    }
    let scale = 1.0 / (n as f64).sqrt();
    let f = DMatrix::from_fn(n, n, |r, c| {
        let k = grid.index(r) as f64;
        Complex64::from_polar(scale, -2.0 * PI * k * c as f64 / n as f64)
    });
    let f_h = f.adjoint();
    Ok(&f * (&b * (&h_td * (&a * &f_h))))
}
