use super::geometry::{bistatic_delay, bistatic_echo_gain, residual_doppler, ScenarioGeometry};
use super::grid::OfdmGrid;
use super::leakage::leakage_matrix;
use super::tdl::dp_channel_realization;
use super::ChannelError;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Single dominant bistatic echo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPath {
    pub alpha_r_sq: f64,
    /// Phase of `alpha_R` in [0, 2 pi).
    pub alpha_r_phase: f64,
    /// Bistatic delay in s.
    pub tau_tar: f64,
    /// Residual Doppler in Hz.
    pub nu_tar: f64,
}

impl EchoPath {
    pub fn alpha_r(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_r_sq.sqrt(), self.alpha_r_phase)
    }
}

/// `H_EP,n[m] = alpha_R exp(-j 2 pi n df tau) exp(+j 2 pi m T_sym nu)`.
pub fn ep_coefficient(echo: &EchoPath, grid: &OfdmGrid, n: i64, m: usize) -> Complex64 {
    let phase = -2.0 * PI * n as f64 * grid.delta_f * echo.tau_tar + 2.0 * PI * m as f64 * grid.t_sym() * echo.nu_tar;
    echo.alpha_r() * Complex64::from_polar(1.0, phase)
}

/// Link-budget inputs that turn a geometry into channel gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Target radar cross-section in m^2.
    pub rcs: f64,
    /// Product of the UE and BS antenna gains (linear).
    pub g_product: f64,
    /// TDL delay spread in s.
    pub delay_spread: f64,
    /// Receiver noise power in W.
    pub noise_power: f64,
    /// Average per-subcarrier transmit power `P_tx / N_sc` in W.
    pub p_avg: f64,
    /// Mean direct-path SNR in dB at `p_avg` on every subcarrier.
    pub dp_snr_db: f64,
    /// Direct-path over echo power ratio in dB. `None` keeps the geometric
    /// echo gain from the bistatic radar equation.
    pub delta_g_db: Option<f64>,
}

impl LinkBudget {
    /// Mean `|H_DP,n|^2`.
    pub fn dp_gain(&self) -> f64 {
        10f64.powf(self.dp_snr_db / 10.0) * self.noise_power / self.p_avg
    }

    /// Echo power gain: geometric, or rescaled to sit `delta_g_db` below the
    /// direct path.
    pub fn echo_gain(&self, geom: &ScenarioGeometry, wavelength: f64) -> Result<f64, ChannelError> {
        let geometric = bistatic_echo_gain(geom, wavelength, self.rcs, self.g_product)?;
        Ok(match self.delta_g_db {
            Some(dg) => self.dp_gain() / 10f64.powf(dg / 10.0),
            None => geometric,
        })
    }

    /// Effective DP/EP gap in dB for a given geometry.
    pub fn effective_delta_g_db(&self, geom: &ScenarioGeometry, wavelength: f64) -> Result<f64, ChannelError> {
        Ok(10.0 * (self.dp_gain() / self.echo_gain(geom, wavelength)?).log10())
    }
}

/// One Monte Carlo channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub grid: OfdmGrid,
    pub h_dp: Vec<Complex64>,
    pub h_dp_sq: Vec<f64>,
    pub echo: EchoPath,
    pub xi: DMatrix<f64>,
    pub h_ep_sq: Vec<f64>,
    /// `|H_DP,n + H_EP,n[m]|^2` averaged over the block's symbols.
    pub h_comb_sq: Vec<f64>,
    pub noise_power: f64,
}

impl ChannelRealization {
    /// Assembles a realization from explicit direct-path gains.
    pub fn from_parts(grid: OfdmGrid, h_dp: Vec<Complex64>, echo: EchoPath, noise_power: f64) -> Self {
        let h_dp_sq = h_dp.iter().map(|h| h.norm_sqr()).collect();
        let xi = leakage_matrix(&grid, echo.nu_tar);
        let h_comb_sq = grid
            .indices()
            .zip(&h_dp)
            .map(|(n, h)| {
                (0..grid.m_symbols).map(|m| (h + ep_coefficient(&echo, &grid, n, m)).norm_sqr()).sum::<f64>()
                    / grid.m_symbols as f64
            })
            .collect();
        Self {
            grid,
            h_dp,
            h_dp_sq,
            echo,
            xi,
            h_ep_sq: vec![echo.alpha_r_sq; grid.n_sc],
            h_comb_sq,
            noise_power,
        }
    }

    /// Draws the direct path and the echo phase; delay and Doppler come from
    /// the geometry.
    pub fn draw<R: Rng + ?Sized>(
        grid: &OfdmGrid,
        geom: &ScenarioGeometry,
        link: &LinkBudget,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        let alpha_r_sq = link.echo_gain(geom, grid.wavelength())?;
        let echo = EchoPath {
            alpha_r_sq,
            alpha_r_phase: rng.gen_range(0.0..2.0 * PI),
            tau_tar: bistatic_delay(geom),
            nu_tar: residual_doppler(geom, grid.wavelength()),
        };
        let dp_scale = link.dp_gain().sqrt();
        let h_dp = dp_channel_realization(grid, link.delay_spread, rng).into_iter().map(|h| h * dp_scale).collect();
        Ok(Self::from_parts(*grid, h_dp, echo, link.noise_power))
    }
}
