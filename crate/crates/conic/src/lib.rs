//! Dense primal-dual interior-point solver for linear programs over products
//! of nonnegative orthants, second-order cones and PSD cones.
//!
//! ```
//! use nalgebra::{dvector, DMatrix};
//! use rsisac_conic::{solve, Cone, ConeProgram, SolveStatus};
//!
//! // maximize -t  s.t.  [[t, 1], [1, 1]] is PSD
//! let mut prog = ConeProgram::new(dvector![-1.0]);
//! let g = DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 0.0]);
//! prog.push_cone(Cone::Psd(2), &g, &dvector![0.0, std::f64::consts::SQRT_2, 1.0]);
//! let sol = solve(&prog).unwrap();
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert!((sol.x[0] - 1.0).abs() < 1e-7);
//! ```

mod chol;
mod cones;
mod error;
pub mod instances;
mod kkt;
mod program;
mod solver;

pub use cones::{smat, svec, svec_index, svec_len, Cone};
pub use error::ConicError;
pub use kkt::{kkt_residuals, KktResiduals};
pub use program::{ConeProgram, ConeSolution, SolveStatus};
pub use solver::{solve, solve_with, SolverSettings};
