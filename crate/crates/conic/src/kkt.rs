//! Optimality certificate computed from the program data and a returned
//! point alone.

use crate::cones::{smat, Cone};
use crate::program::{ConeProgram, ConeSolution};
use nalgebra::{DVector, SymmetricEigen};

/// Relative KKT residuals of a candidate primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Equality, cone-equation and slack-membership violation.
    pub primal: f64,
    /// Stationarity and multiplier-membership violation.
    pub dual: f64,
    /// Relative gap between primal and dual objective values.
    pub gap: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Evaluates the KKT conditions of `prog` (in the minimization form
/// `min -objective^T x`) at the point stored in `sol`.
pub fn kkt_residuals(prog: &ConeProgram, sol: &ConeSolution) -> KktResiduals {
    let c = -&prog.objective;
    let (a, b) = (&prog.eq_matrix, &prog.eq_rhs);
    let (g, h) = (&prog.cone_matrix, &prog.cone_rhs);
    let (x, y, z, s) = (&sol.x, &sol.y, &sol.z, &sol.s);

    let unit = |v: &DVector<f64>| v.norm().max(1.0);
    let eq = if b.is_empty() { 0.0 } else { (a * x - b).norm() / unit(b) };
    let cone_eq = if h.is_empty() { 0.0 } else { (g * x + s - h).norm() / unit(h) };
    let primal = eq.max(cone_eq).max(cone_violation(&prog.cones, s) / unit(h));

    let stat = a.transpose() * y + g.transpose() * z + &c;
    let dual = (stat.norm() / unit(&c)).max(cone_violation(&prog.cones, z) / unit(&c));

    let pcost = c.dot(x);
    let dcost = -(h.dot(z) + b.dot(y));
    let gap = (pcost - dcost).abs().max(s.dot(z).abs()) / pcost.abs().max(1.0);
    KktResiduals { primal, dual, gap }
}

/// Largest distance by which any block of `v` lies outside its cone.
fn cone_violation(cones: &[Cone], v: &DVector<f64>) -> f64 {
    let mut off = 0;
    let mut worst: f64 = 0.0;
    for cone in cones {
        let d = cone.dim();
        let blk = &v.as_slice()[off..off + d];
        let margin = match *cone {
            Cone::Nonnegative(_) => blk.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::SecondOrder(_) => blk[0] - blk[1..].iter().map(|t| t * t).sum::<f64>().sqrt(),
            Cone::Psd(side) => SymmetricEigen::new(smat(blk, side))
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        };
        worst = worst.max(-margin);
        off += d;
    }
    worst
}
