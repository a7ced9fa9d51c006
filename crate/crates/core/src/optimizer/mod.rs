//! Sensing-constrained power allocation by block coordinate descent over
//! fractional-programming surrogates and a convex conic subproblem.

pub mod bcd;
pub mod fp;
pub mod subproblem;
pub mod surrogate;

pub use bcd::{
    bcd_solve, bcd_solve_from, evaluate_exact, noma_cf_solve, noma_sf_solve, project_to_mask, rs_warm_solve, solve_scheme, BcdConfig,
    BcdOutcome, BcdTrace, Evaluation, TraceRow,
};
pub use fp::{update_alpha, update_rho, update_y, FpAuxiliaries};
pub use subproblem::{build_subproblem, Constraints, NormalizedChannel, SubproblemData, SubproblemMode, XScaling};
pub use surrogate::{amgm_beta, mismatch_surrogate, omega_surrogate, SurrogateState};

use crate::receiver::ReceiverError;
use crate::sensing::SensingError;
use rsisac_conic::ConicError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("sensing target {gamma_sens} unreachable (best weighted CRLB {best_crlb:.3})")]
    SensingInfeasible { best_crlb: f64, gamma_sens: f64 },
    #[error("conic solver failed at BCD iteration {iteration}: {reason}")]
    SolverFailure { iteration: usize, reason: String },
    #[error("invalid surrogate reference: {0}")]
    InvalidReference(String),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
}

impl OptimizerError {
    pub(crate) fn solver(iteration: usize, e: ConicError) -> Self {
        Self::SolverFailure { iteration, reason: e.to_string() }
    }
}

/// Which streams carry power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Rate splitting: both streams.
    Rs,
    /// Communication first: robust stream only.
    NomaCf,
    /// Sensing first: supplementary stream only.
    NomaSf,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Rs, Scheme::NomaCf, Scheme::NomaSf];

    pub fn has_c1(self) -> bool {
        self != Scheme::NomaSf
    }

    pub fn has_c2(self) -> bool {
        self != Scheme::NomaCf
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Rs => "rs",
            Scheme::NomaCf => "noma_cf",
            Scheme::NomaSf => "noma_sf",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rs" => Ok(Scheme::Rs),
            "noma_cf" | "cf" => Ok(Scheme::NomaCf),
            "noma_sf" | "sf" => Ok(Scheme::NomaSf),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}
