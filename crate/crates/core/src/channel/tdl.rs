//! Tapped-delay-line direct-path channel on the TDL-C profile.

use super::grid::OfdmGrid;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// TDL-C normalized delays and tap powers in dB (TR 38.901, Table 7.7.2-3).
#[allow(clippy::approx_constant)]
pub const TDL_C: [(f64, f64); 24] = [
    (0.0, -4.4),
    (0.2099, -1.2),
    (0.2219, -3.5),
    (0.2329, -5.2),
    (0.2176, -2.5),
    (0.6366, 0.0),
    (0.6448, -2.2),
    (0.6560, -3.9),
    (0.6584, -7.4),
    (0.7935, -7.1),
    (0.8213, -10.7),
    (0.9336, -11.1),
    (1.2285, -5.1),
    (1.3083, -6.8),
    (2.1704, -8.7),
    (2.7105, -13.2),
    (4.2589, -13.9),
    (4.6003, -13.9),
    (5.4902, -15.8),
    (5.6077, -17.1),
    (6.3065, -16.0),
    (6.6374, -15.7),
    (7.0427, -21.6),
    (8.6523, -22.8),
];

/// One tap: complex gain and delay in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    pub delay: f64,
}

/// Draws Rayleigh taps on the TDL-C profile. Per-tap variances sum to one,
/// so the ensemble-average channel power is one.
pub fn tdl_c_taps<R: Rng + ?Sized>(delay_spread: f64, rng: &mut R) -> Vec<Tap> {
    let total: f64 = TDL_C.iter().map(|&(_, p)| 10f64.powf(p / 10.0)).sum();
    TDL_C
        .iter()
        .map(|&(d, p)| {
            let var = 10f64.powf(p / 10.0) / total;
            let s = (var / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Tap { gain: Complex64::new(re * s, im * s), delay: d * delay_spread }
        })
        .collect()
}

/// Frequency response `sum_l a_l exp(-j 2 pi n df tau_l)` on the grid.
pub fn frequency_response(grid: &OfdmGrid, taps: &[Tap]) -> Vec<Complex64> {
    grid.indices()
        .map(|n| {
            taps.iter()
                .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * grid.delta_f * t.delay))
                .sum()
        })
        .collect()
}

/// Direct-path response for one seeded TDL-C draw.
pub fn dp_channel_realization<R: Rng + ?Sized>(grid: &OfdmGrid, delay_spread: f64, rng: &mut R) -> Vec<Complex64> {
    frequency_response(grid, &tdl_c_taps(delay_spread, rng))
}
