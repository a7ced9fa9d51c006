//! Assembly of the convex conic subproblem solved in every BCD iteration.
//!
//! All quantities are normalized: powers by `P_avg`, gains by `sigma^2 / P_avg`
//! (so every SNR-like term is dimensionless), and the covariance surrogate
//! by a diagonal congruence `X = D X_hat D` that brings the delay and Doppler
//! blocks of the FIM to comparable magnitude. Square roots are replaced by
//! helpers `u` with `u^2 <= p`, written as `||(2u, p - 1)|| <= p + 1`.

use super::fp::FpAuxiliaries;
use super::surrogate::{amgm_beta, omega_surrogate_weights};
use super::{OptimizerError, Scheme};
use crate::channel::{ChannelRealization, OfdmGrid};
use crate::receiver::PowerAllocation;
use crate::sensing::{FimKernels, SensingWeights};
use nalgebra::{DMatrix, DVector, Matrix2};
use rsisac_conic::{svec_index, svec_len, Cone, ConeProgram, ConeSolution};
use std::f64::consts::LOG2_E;

/// Power mask and sensing target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    pub sensing: SensingWeights,
    /// Per-subcarrier total stays within `P_avg (1 -+ mask)`.
    pub mask: f64,
    /// Lower bound on the eigenvalues of the normalized FIM.
    pub fim_floor: f64,
}

/// Channel gains in noise-normalized units plus the grid constants the
/// subproblem needs.
#[derive(Debug, Clone)]
pub struct NormalizedChannel {
    pub grid: OfdmGrid,
    pub p_avg: f64,
    pub noise: f64,
    pub alpha_r_sq: f64,
    /// `|H_DP,n|^2 P_avg / sigma^2`.
    pub h: Vec<f64>,
    /// Coherently combined gain of the supplementary stream, same units.
    pub g: Vec<f64>,
    /// `|alpha_R|^2 P_avg / sigma^2`.
    pub e: f64,
    pub xi: DMatrix<f64>,
    pub kernels: FimKernels,
    pub beta: f64,
    /// `mean_m omega_surrogate = w1 X11 + w2 X22` per subcarrier.
    pub omega_w: Vec<(f64, f64)>,
}

impl NormalizedChannel {
    pub fn new(ch: &ChannelRealization, p_avg: f64) -> Self {
        let k = p_avg / ch.noise_power;
        let beta = amgm_beta(&ch.grid);
        Self {
            grid: ch.grid,
            p_avg,
            noise: ch.noise_power,
            alpha_r_sq: ch.echo.alpha_r_sq,
            h: ch.h_dp_sq.iter().map(|x| x * k).collect(),
            g: ch.h_comb_sq.iter().map(|x| x * k).collect(),
            e: ch.echo.alpha_r_sq * k,
            xi: ch.xi.clone(),
            kernels: FimKernels::new(&ch.grid),
            beta,
            omega_w: omega_surrogate_weights(beta, &ch.grid),
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n_sc
    }
}

/// Diagonal congruence between the physical covariance surrogate and the
/// solver variable: `X11 = s1 X_hat11`, `X22 = s2 X_hat22`,
/// `X12 = sqrt(s1 s2) X_hat12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XScaling {
    pub s1: f64,
    pub s2: f64,
}

impl XScaling {
    /// Delay axis scaled by `Gamma / w_tau`; Doppler axis chosen so both FIM
    /// diagonals agree at `z_ref`.
    pub fn balanced(nc: &NormalizedChannel, w: &SensingWeights, z_ref: &[f64]) -> Self {
        let s1 = w.gamma_sens / w.w_tau;
        let (mut j11, mut j22) = (0.0, 0.0);
        for (n, z) in nc.grid.indices().zip(z_ref) {
            j11 += nc.kernels.k_tt * (n * n) as f64 * z;
            j22 += nc.kernels.k_nn * z;
        }
        let s2 = if j11 > 0.0 && j22 > 0.0 { s1 * j11 / j22 } else { w.gamma_sens / w.w_nu };
        Self { s1, s2 }
    }

    /// Coefficients of `(J_hat11, J_hat12, J_hat22)` on `z_n` at index `n`.
    pub fn fim_coefficients(&self, k: &FimKernels, n: i64) -> (f64, f64, f64) {
        let n = n as f64;
        (self.s1 * k.k_tt * n * n, (self.s1 * self.s2).sqrt() * k.k_tn * n, self.s2 * k.k_nn)
    }

    /// Coefficients of `Tr(W X) / Gamma` on `(X_hat11, X_hat22)`.
    pub fn trace_coefficients(&self, w: &SensingWeights) -> (f64, f64) {
        (w.w_tau * self.s1 / w.gamma_sens, w.w_nu * self.s2 / w.gamma_sens)
    }

    pub fn to_physical(&self, xh: &Matrix2<f64>) -> Matrix2<f64> {
        let c = (self.s1 * self.s2).sqrt();
        Matrix2::new(self.s1 * xh[(0, 0)], c * xh[(0, 1)], c * xh[(1, 0)], self.s2 * xh[(1, 1)])
    }

    pub fn from_physical(&self, x: &Matrix2<f64>) -> Matrix2<f64> {
        let c = (self.s1 * self.s2).sqrt();
        Matrix2::new(x[(0, 0)] / self.s1, x[(0, 1)] / c, x[(1, 0)] / c, x[(1, 1)] / self.s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemMode {
    /// Rate surrogate subject to the sensing bound.
    Rate,
    /// Minimize the weighted CRLB surrogate alone.
    Phase1,
}

/// Everything needed to assemble one subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemData<'a> {
    pub nc: &'a NormalizedChannel,
    pub scheme: Scheme,
    pub mode: SubproblemMode,
    pub cons: Constraints,
    /// Normalized auxiliaries (`rho` and `y` scaled by the noise amplitude).
    pub aux: &'a FpAuxiliaries,
    /// `|alpha_R|^2 mean_m Omega_tilde P_avg / sigma^2` at the reference.
    pub sigma_ref: &'a [f64],
    /// `t_n / P_avg` at the reference.
    pub t_ref: &'a [f64],
    pub scaling: XScaling,
}

/// Column layout of the subproblem variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub p1: Option<usize>,
    pub p2: Option<usize>,
    pub pr: usize,
    /// `X_hat11, X_hat12, X_hat22`.
    pub x: usize,
    pub z: usize,
    pub u1: Option<usize>,
    pub u2: Option<usize>,
    pub v: usize,
    pub len: usize,
}

impl Layout {
    fn new(n: usize, scheme: Scheme, mode: SubproblemMode) -> Self {
        let mut next = 0;
        let mut take = |k: usize| {
            let at = next;
            next += k;
            at
        };
        let p1 = scheme.has_c1().then(|| take(n));
        let p2 = scheme.has_c2().then(|| take(n));
        let pr = take(n);
        let x = take(3);
        let z = take(n);
        let rate = mode == SubproblemMode::Rate;
        let u1 = (rate && scheme.has_c1()).then(|| take(n));
        let u2 = (rate && scheme.has_c2()).then(|| take(n));
        let v = take(n);
        Self { n, p1, p2, pr, x, z, u1, u2, v, len: next }
    }
}

/// Sparse affine expression `constant + sum coef * x[col]`.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Lin {
    fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    fn add(&mut self, col: Option<usize>, coef: f64) -> &mut Self {
        if let Some(c) = col {
            if coef != 0.0 {
                self.terms.push((c, coef));
            }
        }
        self
    }
}

/// Collects cone blocks whose slack is given by affine expressions.
struct Builder {
    nvars: usize,
    nonneg: Vec<Lin>,
    blocks: Vec<(Cone, Vec<Lin>)>,
}

impl Builder {
    fn finish(self, objective: DVector<f64>) -> ConeProgram {
        let mut all: Vec<(Cone, Vec<Lin>)> = Vec::with_capacity(self.blocks.len() + 1);
        let k = self.nonneg.len();
        all.push((Cone::Nonnegative(k), self.nonneg));
        all.extend(self.blocks);
        let rows: usize = all.iter().map(|(c, _)| c.dim()).sum();
        let mut g = DMatrix::zeros(rows, self.nvars);
        let mut h = DVector::zeros(rows);
        let mut r = 0;
        let mut cones = Vec::with_capacity(all.len());
        for (cone, exprs) in all {
            for e in exprs {
                h[r] = e.constant;
                for (c, v) in e.terms {
                    g[(r, c)] -= v;
                }
                r += 1;
            }
            cones.push(cone);
        }
        let mut prog = ConeProgram::new(objective);
        prog.cone_matrix = g;
        prog.cone_rhs = h;
        prog.cones = cones;
        prog
    }
}

fn col(base: Option<usize>, n: usize) -> Option<usize> {
    base.map(|b| b + n)
}

/// Builds the subproblem and returns it with its column layout.
pub fn build_subproblem(d: &SubproblemData) -> Result<(ConeProgram, Layout), OptimizerError> {
    let nc = d.nc;
    let n = nc.n();
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    let aux = d.aux;
    if !(finite(d.sigma_ref)
        && finite(d.t_ref)
        && finite(&aux.rho_c1)
        && finite(&aux.rho_c2)
        && finite(&aux.alpha_c1)
        && finite(&aux.alpha_c2)
        && finite(&aux.y))
    {
        return Err(OptimizerError::InvalidReference("non-finite auxiliary or reference".into()));
    }
    if d.sigma_ref.len() != n || d.t_ref.len() != n {
        return Err(OptimizerError::InvalidReference("reference length mismatch".into()));
    }

    let lay = Layout::new(n, d.scheme, d.mode);
    let (x11, x22) = (Some(lay.x), Some(lay.x + 2));
    let e = nc.e;
    let xi = &nc.xi;
    let mut b = Builder { nvars: lay.len, nonneg: Vec::new(), blocks: Vec::new() };

    // Power variables are nonnegative and each subcarrier sits in the tube.
    let mut budget = Lin::constant(n as f64);
    for i in 0..n {
        let mut total = Lin::default();
        for base in [lay.p1, lay.p2, Some(lay.pr)] {
            if let Some(c) = col(base, i) {
                b.nonneg.push(Lin { terms: vec![(c, 1.0)], constant: 0.0 });
                total.add(Some(c), 1.0);
                budget.add(Some(c), -1.0);
            }
        }
        let mut lo = total.clone();
        lo.constant = -(1.0 - d.cons.mask);
        let mut hi = Lin::constant(1.0 + d.cons.mask);
        for &(c, v) in &total.terms {
            hi.add(Some(c), -v);
        }
        b.nonneg.push(lo);
        b.nonneg.push(hi);
    }
    b.nonneg.push(budget);

    // Sensing epigraph: z_n <= 2 y sqrt(S_r) - y^2 (I_r + 1) with
    // sqrt(S_r) = sqrt(xi_nn e) v_n and v_n^2 <= p_r.
    for i in 0..n {
        let zc = Some(lay.z + i);
        b.nonneg.push(Lin { terms: vec![(lay.z + i, 1.0)], constant: 0.0 });
        let y = aux.y[i];
        let y2 = y * y;
        let mut row = Lin::constant(-y2);
        row.add(zc, -1.0);
        row.add(Some(lay.v + i), 2.0 * y * (xi[(i, i)] * e).sqrt());
        row.add(col(lay.p2, i), -y2 * nc.h[i]);
        for k in 0..n {
            let w = y2 * e * xi[(i, k)];
            row.add(col(lay.p1, k), -w);
            row.add(col(lay.p2, k), -w);
            if k != i {
                row.add(Some(lay.pr + k), -w);
            }
        }
        b.nonneg.push(row);
        push_sqrt_helper(&mut b, lay.v + i, lay.pr + i);
    }

    let (t1, t2) = d.scaling.trace_coefficients(&d.cons.sensing);
    if d.mode == SubproblemMode::Rate {
        let mut tr = Lin::constant(1.0);
        tr.add(x11, -t1).add(x22, -t2);
        b.nonneg.push(tr);
    }

    // J_hat(z) - floor I and the Schur block [[X_hat, I], [I, J_hat(z)]].
    let mut jhat = [Lin::default(), Lin::default(), Lin::default()];
    for (i, idx) in nc.grid.indices().enumerate() {
        let (a, c, dd) = d.scaling.fim_coefficients(&nc.kernels, idx);
        jhat[0].add(Some(lay.z + i), a);
        jhat[1].add(Some(lay.z + i), c);
        jhat[2].add(Some(lay.z + i), dd);
    }
    {
        let mut m = vec![Lin::default(); svec_len(2)];
        let put = |m: &mut Vec<Lin>, r: usize, c: usize, e: &Lin, shift: f64| {
            let (k, f) = svec_index(2, r, c);
            m[k] = Lin { terms: e.terms.iter().map(|&(j, v)| (j, f * v)).collect(), constant: f * (e.constant + shift) };
        };
        put(&mut m, 0, 0, &jhat[0], -d.cons.fim_floor);
        put(&mut m, 1, 0, &jhat[1], 0.0);
        put(&mut m, 1, 1, &jhat[2], -d.cons.fim_floor);
        b.blocks.push((Cone::Psd(2), m));
    }
    {
        let mut m = vec![Lin::default(); svec_len(4)];
        let mut set = |r: usize, c: usize, e: Lin| {
            let (k, f) = svec_index(4, r, c);
            m[k] = Lin { terms: e.terms.iter().map(|&(j, v)| (j, f * v)).collect(), constant: f * e.constant };
        };
        set(0, 0, Lin { terms: vec![(lay.x, 1.0)], constant: 0.0 });
        set(1, 0, Lin { terms: vec![(lay.x + 1, 1.0)], constant: 0.0 });
        set(1, 1, Lin { terms: vec![(lay.x + 2, 1.0)], constant: 0.0 });
        set(2, 0, Lin::constant(1.0));
        set(3, 1, Lin::constant(1.0));
        set(2, 2, jhat[0].clone());
        set(3, 2, jhat[1].clone());
        set(3, 3, jhat[2].clone());
        b.blocks.push((Cone::Psd(4), m));
    }

    let mut obj = DVector::zeros(lay.len);
    match d.mode {
        SubproblemMode::Phase1 => {
            obj[lay.x] = -t1;
            obj[lay.x + 2] = -t2;
        }
        SubproblemMode::Rate => {
            let scale = LOG2_E / n as f64;
            let acc = |obj: &mut DVector<f64>, c: Option<usize>, v: f64| {
                if let Some(c) = c {
                    obj[c] += v;
                }
            };
            for i in 0..n {
                if let Some(u1) = lay.u1 {
                    let (a, r) = (aux.alpha_c1[i], aux.rho_c1[i]);
                    let lam = scale * r * r;
                    obj[u1 + i] += scale * 2.0 * r * ((1.0 + a) * nc.h[i]).sqrt();
                    push_sqrt_helper(&mut b, u1 + i, lay.p1.unwrap() + i);
                    // C1 = h (p1 + p2) + e sum_k xi (p1 + p2 + pr) + 1.
                    acc(&mut obj, col(lay.p1, i), -lam * nc.h[i]);
                    acc(&mut obj, col(lay.p2, i), -lam * nc.h[i]);
                    for k in 0..n {
                        let w = lam * e * xi[(i, k)];
                        acc(&mut obj, col(lay.p1, k), -w);
                        acc(&mut obj, col(lay.p2, k), -w);
                        acc(&mut obj, Some(lay.pr + k), -w);
                    }
                }
                if let Some(u2) = lay.u2 {
                    let (a, r) = (aux.alpha_c2[i], aux.rho_c2[i]);
                    let lam = scale * r * r;
                    obj[u2 + i] += scale * 2.0 * r * ((1.0 + a) * nc.g[i]).sqrt();
                    push_sqrt_helper(&mut b, u2 + i, lay.p2.unwrap() + i);
                    // C2 = g p2 + sigma_ref t(p) + t_ref sigma(X) + e sum_{k!=n} xi p2 + const.
                    let sr = d.sigma_ref[i];
                    acc(&mut obj, col(lay.p2, i), -lam * (nc.g[i] + sr));
                    for k in 0..n {
                        let w = lam * sr * xi[(i, k)];
                        acc(&mut obj, col(lay.p1, k), -w);
                        acc(&mut obj, Some(lay.pr + k), -w);
                        if k != i {
                            acc(&mut obj, col(lay.p2, k), -lam * e * xi[(i, k)]);
                        }
                    }
                    let (w1, w2) = nc.omega_w[i];
                    let tr = d.t_ref[i] * e;
                    obj[lay.x] -= lam * tr * w1 * d.scaling.s1;
                    obj[lay.x + 2] -= lam * tr * w2 * d.scaling.s2;
                }
            }
        }
    }
    Ok((b.finish(obj), lay))
}

/// `u^2 <= p` as the 3-dimensional cone `(p + 1, 2u, p - 1)`.
fn push_sqrt_helper(b: &mut Builder, u: usize, p: usize) {
    b.blocks.push((
        Cone::SecondOrder(3),
        vec![
            Lin { terms: vec![(p, 1.0)], constant: 1.0 },
            Lin { terms: vec![(u, 2.0)], constant: 0.0 },
            Lin { terms: vec![(p, 1.0)], constant: -1.0 },
        ],
    ));
}

/// Objective constant dropped from the linear program:
/// `sum_n [log2(1+a) - a log2 e] / N - log2e/N sum_n rho^2 (constant part of C)`.
pub fn objective_constant(d: &SubproblemData, lay: &Layout) -> f64 {
    if d.mode == SubproblemMode::Phase1 {
        return 0.0;
    }
    let n = lay.n;
    let scale = LOG2_E / n as f64;
    let mut c = 0.0;
    for i in 0..n {
        if lay.u1.is_some() {
            let a = d.aux.alpha_c1[i];
            c += ((1.0 + a).log2() - a * LOG2_E) / n as f64 - scale * d.aux.rho_c1[i].powi(2);
        }
        if lay.u2.is_some() {
            let a = d.aux.alpha_c2[i];
            let r2 = d.aux.rho_c2[i].powi(2);
            c += ((1.0 + a).log2() - a * LOG2_E) / n as f64 - scale * r2 * (1.0 - d.sigma_ref[i] * d.t_ref[i]);
        }
    }
    c
}

/// Primal point of a solved subproblem in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemPoint {
    pub p: PowerAllocation,
    /// Covariance surrogate in s^2, Hz^2.
    pub x_mat: Matrix2<f64>,
    pub z: Vec<f64>,
}

pub fn extract_point(sol: &ConeSolution, lay: &Layout, nc: &NormalizedChannel, scaling: &XScaling) -> SubproblemPoint {
    let n = lay.n;
    let x = &sol.x;
    let read = |base: Option<usize>| -> Vec<f64> {
        match base {
            Some(b) => (0..n).map(|i| x[b + i].max(0.0) * nc.p_avg).collect(),
            None => vec![0.0; n],
        }
    };
    let xh = Matrix2::new(x[lay.x], x[lay.x + 1], x[lay.x + 1], x[lay.x + 2]);
    SubproblemPoint {
        p: PowerAllocation { p_c1: read(lay.p1), p_c2: read(lay.p2), p_r: read(Some(lay.pr)) },
        x_mat: scaling.to_physical(&xh),
        z: (0..n).map(|i| x[lay.z + i]).collect(),
    }
}
