//! Random cone programs whose optimum is known in closed form.
//!
//! Each instance is a separable sum of four parts, so the optimal value is
//! the sum of the part optima:
//!
//! * `max -tr(X)` s.t. `X >= A`, `X >= 0` (PSD order): optimum is minus the sum
//!   of the positive eigenvalues of `A`.
//! * `max a^T u` s.t. `||u - c|| <= r`: optimum `a^T c + r ||a||`.
//! * `max b^T v` s.t. `0 <= v <= ub`: optimum `ub * sum(max(b_i, 0))`.
//! * `max d e` s.t. `e = e0`: optimum `d e0`.

use crate::cones::{svec, svec_index, svec_len, Cone};
use crate::program::ConeProgram;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

/// A random program and its analytic optimal value.
#[derive(Debug, Clone)]
pub struct AnalyticInstance {
    pub program: ConeProgram,
    pub optimum: f64,
}

/// Draws a mixed nonnegative / second-order / PSD instance.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> AnalyticInstance {
    let side = rng.gen_range(2..=4);
    let q = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=4);
    let nx = svec_len(side);
    let n = nx + q + k + 1;
    let (ox, ou, ov, oe) = (0, nx, nx + q, nx + q + k);

    let mut objective = DVector::zeros(n);
    let mut optimum = 0.0;
    let mut prog_rows: Vec<(Cone, DMatrix<f64>, DVector<f64>)> = Vec::new();

    // PSD part.
    let mut a: DMatrix<f64> = DMatrix::zeros(side, side);
    for i in 0..side {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    for j in 0..side {
        objective[ox + svec_index(side, j, j).0] = -1.0;
    }
    optimum -= SymmetricEigen::new(a.clone()).eigenvalues.iter().map(|&l| l.max(0.0)).sum::<f64>();
    let mut g = DMatrix::zeros(nx, n);
    for r in 0..nx {
        g[(r, ox + r)] = -1.0;
    }
    prog_rows.push((Cone::Psd(side), g.clone(), -svec(&a)));
    prog_rows.push((Cone::Psd(side), g, DVector::zeros(nx)));

    // Norm ball.
    let radius = rng.gen_range(0.5..2.0);
    let center: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dir: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dir_norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    optimum += dir.iter().zip(&center).map(|(x, y)| x * y).sum::<f64>() + radius * dir_norm;
    let mut g = DMatrix::zeros(q + 1, n);
    let mut h = DVector::zeros(q + 1);
    h[0] = radius;
    for i in 0..q {
        objective[ou + i] = dir[i];
        g[(i + 1, ou + i)] = -1.0;
        h[i + 1] = -center[i];
    }
    prog_rows.push((Cone::SecondOrder(q + 1), g, h));

    // Box.
    let ub = rng.gen_range(0.5..3.0);
    let mut g = DMatrix::zeros(2 * k, n);
    let mut h = DVector::zeros(2 * k);
    for i in 0..k {
        let c = rng.gen_range(-1.0..1.0);
        objective[ov + i] = c;
        optimum += ub * f64::max(c, 0.0);
        g[(2 * i, ov + i)] = -1.0;
        g[(2 * i + 1, ov + i)] = 1.0;
        h[2 * i + 1] = ub;
    }
    prog_rows.push((Cone::Nonnegative(2 * k), g, h));

    // Pinned variable.
    let d = rng.gen_range(-1.0..1.0);
    let e0 = rng.gen_range(-2.0..2.0);
    objective[oe] = d;
    optimum += d * e0;

    let mut program = ConeProgram::new(objective);
    for (cone, g, h) in &prog_rows {
        program.push_cone(*cone, g, h);
    }
    let mut a_eq = DMatrix::zeros(1, n);
    a_eq[(0, oe)] = 1.0;
    program.push_equality(&a_eq, &DVector::from_element(1, e0));
    AnalyticInstance { program, optimum }
}

/// A strictly feasible point of an instance built by [`random_instance`]:
/// the PSD variable is a shifted copy of `A_+`, the ball and box variables sit
/// at their centers.
pub fn interior_point(inst: &AnalyticInstance) -> DVector<f64> {
    let prog = &inst.program;
    let mut x = DVector::zeros(prog.num_vars());
    // Recover the layout from the cone list.
    let Cone::Psd(side) = prog.cones[0] else {
        unreachable!("instances start with a PSD block")
    };
    let nx = svec_len(side);
    let a = crate::cones::smat((-prog.cone_rhs.rows(0, nx)).as_slice(), side);
    let eig = SymmetricEigen::new(a);
    let shift = eig.eigenvalues.iter().copied().fold(0.0, f64::max) + 1.0;
    let xm = DMatrix::identity(side, side) * shift;
    x.rows_mut(0, nx).copy_from(&svec(&xm));
    let Cone::SecondOrder(qd) = prog.cones[2] else {
        unreachable!("third block is the ball")
    };
    let q = qd - 1;
    let off = 2 * nx;
    for i in 0..q {
        x[nx + i] = -prog.cone_rhs[off + 1 + i];
    }
    let Cone::Nonnegative(k2) = prog.cones[3] else {
        unreachable!("fourth block is the box")
    };
    let off = off + qd;
    for i in 0..k2 / 2 {
        x[nx + q + i] = 0.5 * prog.cone_rhs[off + 2 * i + 1];
    }
    let e = prog.num_vars() - 1;
    x[e] = prog.eq_rhs[0];
    x
}
