//! Cone descriptions and the per-cone algebra used by the interior-point
//! iteration: Jordan products, Nesterov-Todd scalings and step lengths.
//!
//! Positive semidefinite blocks are stored in `svec` form: the lower triangle
//! in column-major order with off-diagonal entries scaled by `sqrt(2)`, so that
//! the Euclidean inner product of two `svec` vectors equals the trace inner
//! product of the matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::SQRT_2;

/// One block of the product cone `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Nonnegative orthant of the given dimension.
    Nonnegative(usize),
    /// Second-order cone `{(t, x) : ||x|| <= t}` of the given total dimension.
    SecondOrder(usize),
    /// Cone of positive semidefinite matrices with the given side length.
    Psd(usize),
}

impl Cone {
    /// Number of rows the block occupies in the slack vector.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Nonnegative(n) | Cone::SecondOrder(n) => n,
            Cone::Psd(side) => svec_len(side),
        }
    }

    /// Barrier degree of the block.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonnegative(n) => n,
            Cone::SecondOrder(_) => 1,
            Cone::Psd(side) => side,
        }
    }

    pub(crate) fn is_valid(&self) -> bool {
        match *self {
            Cone::Nonnegative(n) | Cone::Psd(n) => n > 0,
            Cone::SecondOrder(n) => n > 1,
        }
    }
}

/// Length of the `svec` representation of a `side x side` symmetric matrix.
pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of entry `(row, col)` in the `svec` layout together with the
/// factor applied to that entry (`1` on the diagonal, `sqrt(2)` elsewhere).
pub fn svec_index(side: usize, row: usize, col: usize) -> (usize, f64) {
    let (i, j) = if row >= col { (row, col) } else { (col, row) };
    debug_assert!(i < side);
    // Columns before `j` hold side, side - 1, ... entries.
    let offset = j * side - j * j.saturating_sub(1) / 2;
    (offset + (i - j), if i == j { 1.0 } else { SQRT_2 })
}

/// Packs a symmetric matrix into `svec` form (only the lower triangle is read).
pub fn svec(m: &DMatrix<f64>) -> DVector<f64> {
    let side = m.nrows();
    let mut out = DVector::zeros(svec_len(side));
    let mut k = 0;
    for j in 0..side {
        for i in j..side {
            out[k] = if i == j { m[(i, j)] } else { SQRT_2 * m[(i, j)] };
            k += 1;
        }
    }
    out
}

/// Unpacks an `svec` vector into a full symmetric matrix.
pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        for i in j..side {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] / SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Distance of a block from the boundary: smallest entry, `t - ||x||`, or the
/// smallest eigenvalue. Positive means strictly interior.
pub(crate) fn interior_margin(cone: Cone, v: &[f64]) -> f64 {
    match cone {
        Cone::Nonnegative(_) => v.iter().copied().fold(f64::INFINITY, f64::min),
        Cone::SecondOrder(_) => v[0] - norm(&v[1..]),
        Cone::Psd(side) => min_eigenvalue(&smat(v, side)),
    }
}

pub(crate) fn add_identity(cone: Cone, v: &mut [f64], scale: f64) {
    match cone {
        Cone::Nonnegative(_) => v.iter_mut().for_each(|x| *x += scale),
        Cone::SecondOrder(_) => v[0] += scale,
        Cone::Psd(side) => {
            for j in 0..side {
                v[svec_index(side, j, j).0] += scale;
            }
        }
    }
}

/// Jordan product `u o v` written into `out`.
pub(crate) fn jordan_product(cone: Cone, u: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonnegative(_) => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        Cone::SecondOrder(_) => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        Cone::Psd(side) => {
            let (a, b) = (smat(u, side), smat(v, side));
            let p = &a * &b;
            let sym = (&p + p.transpose()) * 0.5;
            out.copy_from_slice(svec(&sym).as_slice());
        }
    }
}

/// Solves `lambda o x = v` for `x`. For PSD blocks `lambda` must be the `svec`
/// of a diagonal matrix, which holds for Nesterov-Todd scaled points.
pub(crate) fn jordan_solve(cone: Cone, lambda: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::Nonnegative(_) => {
            for i in 0..v.len() {
                out[i] = v[i] / lambda[i];
            }
        }
        Cone::SecondOrder(_) => {
            let det = lambda[0] * lambda[0] - dot(&lambda[1..], &lambda[1..]);
            let l1v1 = dot(&lambda[1..], &v[1..]);
            let x0 = (lambda[0] * v[0] - l1v1) / det;
            out[0] = x0;
            for i in 1..v.len() {
                out[i] = (v[i] - x0 * lambda[i]) / lambda[0];
            }
        }
        Cone::Psd(side) => {
            let diag: Vec<f64> = (0..side).map(|j| lambda[svec_index(side, j, j).0]).collect();
            let mut k = 0;
            for j in 0..side {
                for i in j..side {
                    out[k] = 2.0 * v[k] / (diag[i] + diag[j]);
                    k += 1;
                }
            }
        }
    }
}

/// Largest step `alpha` with `x + alpha * d` in the cone (`f64::INFINITY` if
/// unbounded). `x` must be strictly interior.
pub(crate) fn max_step(cone: Cone, x: &[f64], d: &[f64]) -> f64 {
    match cone {
        Cone::Nonnegative(_) => x
            .iter()
            .zip(d)
            .filter(|(_, &di)| di < 0.0)
            .map(|(&xi, &di)| -xi / di)
            .fold(f64::INFINITY, f64::min),
        Cone::SecondOrder(_) => soc_max_step(x, d),
        Cone::Psd(side) => {
            let xm = smat(x, side);
            let dm = smat(d, side);
            let Some(chol) = xm.cholesky() else {
                return 0.0;
            };
            let l = chol.l();
            let Some(linv) = l.clone().try_inverse() else {
                return 0.0;
            };
            let m = &linv * dm * linv.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let mu = min_eigenvalue(&m);
            if mu < 0.0 {
                -1.0 / mu
            } else {
                f64::INFINITY
            }
        }
    }
}

fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    // f(a) = (x0 + a d0)^2 - ||x1 + a d1||^2 = qa a^2 + 2 qb a + qc
    let qa = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let qb = x[0] * d[0] - dot(&x[1..], &d[1..]);
    let qc = x[0] * x[0] - dot(&x[1..], &x[1..]);
    let mut best = f64::INFINITY;
    if qa.abs() <= 1e-300 {
        if qb < 0.0 {
            best = -qc / (2.0 * qb);
        }
    } else {
        let disc = qb * qb - qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -(qb + qb.signum() * sq);
            let roots = [q / qa, if q != 0.0 { qc / q } else { f64::INFINITY }];
            for r in roots {
                if r > 0.0 && r < best {
                    best = r;
                }
            }
        }
    }
    if d[0] < 0.0 {
        best = best.min(-x[0] / d[0]);
    }
    best
}

/// Scaling of one dense block, stored as explicit matrices with
/// `w * s = w^{-T} * z = lambda`.
#[derive(Debug, Clone)]
pub(crate) struct DenseScaling {
    pub w: DMatrix<f64>,
    pub w_inv: DMatrix<f64>,
}

/// Scaling for one cone block.
#[derive(Debug, Clone)]
pub(crate) enum BlockScaling {
    /// Diagonal `w_i = sqrt(z_i / s_i)`.
    Diagonal(Vec<f64>),
    Dense(DenseScaling),
}

impl BlockScaling {
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            BlockScaling::Diagonal(w) => (0..v.len()).for_each(|i| out[i] = w[i] * v[i]),
            BlockScaling::Dense(d) => mat_vec(&d.w, v, out),
        }
    }

    /// `w^T v`.
    pub fn apply_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            BlockScaling::Diagonal(w) => (0..v.len()).for_each(|i| out[i] = w[i] * v[i]),
            BlockScaling::Dense(d) => mat_t_vec(&d.w, v, out),
        }
    }

    pub fn apply_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            BlockScaling::Diagonal(w) => (0..v.len()).for_each(|i| out[i] = v[i] / w[i]),
            BlockScaling::Dense(d) => mat_vec(&d.w_inv, v, out),
        }
    }

    /// `w^{-T} v`.
    #[cfg(test)]
    pub fn apply_inv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            BlockScaling::Diagonal(w) => (0..v.len()).for_each(|i| out[i] = v[i] / w[i]),
            BlockScaling::Dense(d) => mat_t_vec(&d.w_inv, v, out),
        }
    }

    /// `(w^T w) v`.
    pub fn apply_wtw(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; v.len()];
        self.apply(v, &mut tmp);
        self.apply_t(&tmp, out);
    }

    /// Replaces `self` by `step * self`, where `step` is the scaling of the
    /// already scaled points.
    pub fn compose(&mut self, step: &BlockScaling) {
        match (self, step) {
            (BlockScaling::Diagonal(w), BlockScaling::Diagonal(d)) => {
                w.iter_mut().zip(d).for_each(|(a, b)| *a *= b);
            }
            (BlockScaling::Dense(w), BlockScaling::Dense(d)) => {
                w.w = &d.w * &w.w;
                w.w_inv = &w.w_inv * &d.w_inv;
            }
            _ => unreachable!("scaling kinds are fixed per cone"),
        }
    }

    pub fn identity(cone: Cone) -> Self {
        match cone {
            Cone::Nonnegative(d) => BlockScaling::Diagonal(vec![1.0; d]),
            _ => {
                let eye = DMatrix::identity(cone.dim(), cone.dim());
                BlockScaling::Dense(DenseScaling { w: eye.clone(), w_inv: eye })
            }
        }
    }
}

/// Computes the Nesterov-Todd scaling of a block and the scaled point
/// `lambda`. Returns `None` if either point has left the cone interior.
pub(crate) fn nt_scaling(cone: Cone, s: &[f64], z: &[f64], lambda: &mut [f64]) -> Option<BlockScaling> {
    match cone {
        Cone::Nonnegative(_) => {
            let mut w = Vec::with_capacity(s.len());
            for i in 0..s.len() {
                if s[i] <= 0.0 || z[i] <= 0.0 {
                    return None;
                }
                w.push((z[i] / s[i]).sqrt());
                lambda[i] = (s[i] * z[i]).sqrt();
            }
            Some(BlockScaling::Diagonal(w))
        }
        Cone::SecondOrder(n) => soc_scaling(n, s, z, lambda),
        Cone::Psd(side) => psd_scaling(side, s, z, lambda),
    }
}

fn soc_scaling(n: usize, s: &[f64], z: &[f64], lambda: &mut [f64]) -> Option<BlockScaling> {
    let sdet = s[0] * s[0] - dot(&s[1..], &s[1..]);
    let zdet = z[0] * z[0] - dot(&z[1..], &z[1..]);
    if s[0] <= 0.0 || z[0] <= 0.0 || sdet <= 0.0 || zdet <= 0.0 {
        return None;
    }
    let (sn, zn) = (sdet.sqrt(), zdet.sqrt());
    let sb: Vec<f64> = s.iter().map(|x| x / sn).collect();
    let zb: Vec<f64> = z.iter().map(|x| x / zn).collect();
    let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
    // Hyperbolic scaling point with unit J-norm.
    let mut wb = vec![0.0; n];
    wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    for i in 1..n {
        wb[i] = (sb[i] - zb[i]) / (2.0 * gamma);
    }
    let eta = (sdet / zdet).powf(0.25);
    // hat(w) maps z-bar to lambda-bar; its inverse is J hat(w) J.
    let mut hat = DMatrix::identity(n, n);
    hat[(0, 0)] = wb[0];
    for i in 1..n {
        hat[(0, i)] = wb[i];
        hat[(i, 0)] = wb[i];
        for j in 1..n {
            hat[(i, j)] += wb[i] * wb[j] / (1.0 + wb[0]);
        }
    }
    let mut hat_inv = hat.clone();
    for i in 1..n {
        hat_inv[(0, i)] = -hat_inv[(0, i)];
        hat_inv[(i, 0)] = -hat_inv[(i, 0)];
    }
    // Scaled point: lambda = eta * hat * z.
    let zv = DVector::from_column_slice(z);
    let lam = &hat * zv * eta;
    lambda.copy_from_slice(lam.as_slice());
    // Convention w s = w^{-T} z: w = (eta hat)^{-1}, both symmetric.
    let w = hat_inv * (1.0 / eta);
    let w_inv = hat * eta;
    Some(BlockScaling::Dense(DenseScaling { w, w_inv }))
}

fn psd_scaling(side: usize, s: &[f64], z: &[f64], lambda: &mut [f64]) -> Option<BlockScaling> {
    let sm = smat(s, side);
    let zm = smat(z, side);
    let ls = sm.cholesky()?.l();
    let lz = zm.cholesky()?.l();
    let m = lz.transpose() * &ls;
    let svd = m.svd(true, true);
    let v = svd.v_t?.transpose();
    let sig = svd.singular_values;
    if sig.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    // r = L_s V diag(sig)^{-1/2}; then r^{-1} S r^{-T} = r^T Z r = diag(sig).
    let mut r = &ls * &v;
    for j in 0..side {
        let f = 1.0 / sig[j].sqrt();
        r.column_mut(j).scale_mut(f);
    }
    let r_inv = r.clone().try_inverse()?;
    let dim = svec_len(side);
    let mut w = DMatrix::zeros(dim, dim);
    let mut w_inv = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for k in 0..dim {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[k] = 1.0;
        let ek = smat(&e, side);
        let a = &r_inv * &ek * r_inv.transpose();
        let b = &r * &ek * r.transpose();
        w.set_column(k, &svec(&a));
        w_inv.set_column(k, &svec(&b));
    }
    lambda.iter_mut().for_each(|x| *x = 0.0);
    for j in 0..side {
        lambda[svec_index(side, j, j).0] = sig[j];
    }
    Some(BlockScaling::Dense(DenseScaling { w, w_inv }))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for i in 0..m.nrows() {
        out[i] = (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum();
    }
}

fn mat_t_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for j in 0..m.ncols() {
        out[j] = (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum();
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_scaling(cone: Cone, s: &[f64], z: &[f64]) {
        let n = s.len();
        let mut lambda = vec![0.0; n];
        let sc = nt_scaling(cone, s, z, &mut lambda).unwrap();
        let mut ws = vec![0.0; n];
        let mut wz = vec![0.0; n];
        sc.apply(s, &mut ws);
        sc.apply_inv_t(z, &mut wz);
        for i in 0..n {
            assert!((ws[i] - lambda[i]).abs() < 1e-10, "{cone:?} ws {ws:?} lambda {lambda:?}");
            assert!((wz[i] - lambda[i]).abs() < 1e-10, "{cone:?} wz {wz:?} lambda {lambda:?}");
        }
        let mut back = vec![0.0; n];
        sc.apply_inv(&ws, &mut back);
        for i in 0..n {
            assert!((back[i] - s[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn svec_roundtrip_and_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -1.0, 0.5, 3.0, 0.25, -1.0, 0.25, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, -2.0, 1.0, 4.0, 0.0, 4.0, 2.0]);
        let (va, vb) = (svec(&a), svec(&b));
        assert!((va.dot(&vb) - (&a * &b).trace()).abs() < 1e-12);
        assert!((smat(va.as_slice(), 3) - a).abs().max() < 1e-15);
        assert_eq!(svec_index(3, 2, 0).0, 2);
        assert_eq!(svec_index(3, 1, 1).0, 3);
        assert_eq!(svec_index(3, 2, 2).0, 5);
        assert_eq!(svec_index(4, 3, 2).0, 8);
    }

    #[test]
    fn nt_scaling_maps_both_points_to_lambda() {
        check_scaling(Cone::Nonnegative(3), &[1.0, 2.0, 0.5], &[3.0, 0.1, 2.0]);
        check_scaling(Cone::SecondOrder(3), &[2.0, 0.5, -1.0], &[1.5, -0.3, 0.9]);
        check_scaling(Cone::SecondOrder(4), &[4.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]);
        let s = svec(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]));
        let z = svec(&DMatrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 0.5]));
        check_scaling(Cone::Psd(2), s.as_slice(), z.as_slice());
    }

    #[test]
    fn composed_scaling_matches_direct_scaling() {
        // Scaling the scaled pair again must give the NT scaling of the
        // original pair (up to the orthogonal freedom, so compare W^T W).
        let cone = Cone::Psd(2);
        let s = svec(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]));
        let z = svec(&DMatrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 0.5]));
        let ds = svec(&DMatrix::from_row_slice(2, 2, &[-0.5, 0.1, 0.1, 0.2]));
        let dz = svec(&DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.2, -0.1]));
        let mut lambda = vec![0.0; 3];
        let mut w = nt_scaling(cone, s.as_slice(), z.as_slice(), &mut lambda).unwrap();
        let (mut wds, mut wdz) = (vec![0.0; 3], vec![0.0; 3]);
        w.apply(ds.as_slice(), &mut wds);
        w.apply_inv_t(dz.as_slice(), &mut wdz);
        let st: Vec<f64> = lambda.iter().zip(&wds).map(|(a, b)| a + b).collect();
        let zt: Vec<f64> = lambda.iter().zip(&wdz).map(|(a, b)| a + b).collect();
        let mut lt = vec![0.0; 3];
        let step = nt_scaling(cone, &st, &zt, &mut lt).unwrap();
        w.compose(&step);
        let mut lambda_direct = vec![0.0; 3];
        let direct = nt_scaling(cone, (&s + &ds).as_slice(), (&z + &dz).as_slice(), &mut lambda_direct).unwrap();
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            let (mut a, mut b) = (vec![0.0; 3], vec![0.0; 3]);
            w.apply_wtw(&e, &mut a);
            direct.apply_wtw(&e, &mut b);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-10, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn jordan_solve_inverts_product() {
        let lam = [2.0, 0.5, -0.7];
        let v = [0.3, 1.0, -2.0];
        let mut x = [0.0; 3];
        jordan_solve(Cone::SecondOrder(3), &lam, &v, &mut x);
        let mut back = [0.0; 3];
        jordan_product(Cone::SecondOrder(3), &lam, &x, &mut back);
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let x = [1.0, 0.0];
        let d = [0.0, 1.0];
        assert!((max_step(Cone::SecondOrder(2), &x, &d) - 1.0).abs() < 1e-12);
        let d = [1.0, 0.5];
        assert_eq!(max_step(Cone::SecondOrder(2), &x, &d), f64::INFINITY);
    }

    #[test]
    fn psd_step_matches_eigenvalue() {
        let x = svec(&DMatrix::identity(2, 2));
        let d = svec(&DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 1.0]));
        assert!((max_step(Cone::Psd(2), x.as_slice(), d.as_slice()) - 0.5).abs() < 1e-12);
    }
}
