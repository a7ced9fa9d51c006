//! Scenario geometry, direct/echo channel coefficients and Doppler leakage.

pub mod geometry;
pub mod grid;
pub mod leakage;
pub mod oracle;
pub mod realization;
pub mod tdl;

pub use geometry::{bistatic_delay, bistatic_echo_gain, residual_doppler, ScenarioGeometry, Vec2};
pub use grid::{OfdmGrid, SPEED_OF_LIGHT};
pub use leakage::{dirichlet_leakage, leakage_matrix};
pub use oracle::{fd_effective_channel_oracle, OraclePath};
pub use realization::{ep_coefficient, ChannelRealization, EchoPath, LinkBudget};
pub use tdl::{dp_channel_realization, tdl_c_taps, Tap, TDL_C};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("zero bistatic range")]
    ZeroRange,
    #[error("path delay of {delay} samples does not fit in a {n_cp}-sample cyclic prefix")]
    DelayExceedsCp { delay: usize, n_cp: usize },
}
