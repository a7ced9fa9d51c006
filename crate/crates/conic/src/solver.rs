//! Homogeneous self-dual primal-dual interior-point method with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
//!
//! Internally the program is solved in minimization form
//!
//! ```text
//! minimize c^T x  s.t.  A x = b,  G x + s = h,  s in K      (c = -objective)
//! ```
//!
//! embedded in the homogeneous model with extra variables `tau` and `kappa`.
//! Each Newton system is reduced to the normal matrix `G^T W^T W G`, which is
//! factored densely; the equality rows are handled through a Schur complement.

use crate::cones::{self, BlockScaling, Cone};
use crate::error::ConicError;
use crate::program::{ConeProgram, ConeSolution, SolveStatus};
use crate::chol::DenseCholesky;
use nalgebra::{DMatrix, DVector};

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Bound on the relative primal and dual residuals.
    pub feasibility_tol: f64,
    /// Bound on the relative duality gap.
    pub gap_tol: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    pub refinement_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            feasibility_tol: 1e-8,
            gap_tol: 1e-8,
            step_fraction: 0.99,
            refinement_steps: 2,
        }
    }
}

/// Solves `prog` with default settings.
pub fn solve(prog: &ConeProgram) -> Result<ConeSolution, ConicError> {
    solve_with(prog, &SolverSettings::default())
}

/// Solves `prog` with explicit settings.
pub fn solve_with(prog: &ConeProgram, settings: &SolverSettings) -> Result<ConeSolution, ConicError> {
    prog.validate()?;
    Ipm::new(prog, *settings).run()
}

/// Row-compressed copy of a dense matrix.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self { rows }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    /// `out = M^T y`.
    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * yi;
                }
            }
        }
    }
}

/// Columns touched by a dense cone block and the block restricted to them.
struct DenseBlock {
    cols: Vec<usize>,
    sub: DMatrix<f64>,
}

/// Iterate of the homogeneous model. The slack and multiplier of the cone
/// constraint are kept implicitly through the scaling: `s = W^{-1} lambda`,
/// `z = W^T lambda`.
struct Point {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
    scalings: Vec<BlockScaling>,
    lambda: Vec<f64>,
}

/// Search direction with the cone parts in scaled coordinates
/// (`W ds` and `W^{-T} dz`).
struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    s_scaled: Vec<f64>,
    z_scaled: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct KktSolution {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    zs: Vec<f64>,
}

struct Residuals {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
}

/// Factored reduced Newton system for one scaling.
struct Factor {
    chol: DenseCholesky,
    /// `H^{-1} A^T` and the Cholesky factor of `A H^{-1} A^T` when `p > 0`.
    schur: Option<(DMatrix<f64>, DenseCholesky)>,
}

struct Ipm<'a> {
    prog: &'a ConeProgram,
    settings: SolverSettings,
    n: usize,
    p: usize,
    m: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    h: Vec<f64>,
    a: SparseRows,
    g: SparseRows,
    offsets: Vec<usize>,
    dense_blocks: Vec<Option<DenseBlock>>,
    degree: usize,
}

impl<'a> Ipm<'a> {
    fn new(prog: &'a ConeProgram, settings: SolverSettings) -> Self {
        let n = prog.num_vars();
        let g = SparseRows::from_dense(&prog.cone_matrix);
        let mut offsets = vec![0];
        for cone in &prog.cones {
            offsets.push(offsets.last().unwrap() + cone.dim());
        }
        let dense_blocks = prog
            .cones
            .iter()
            .enumerate()
            .map(|(k, cone)| match cone {
                Cone::Nonnegative(_) => None,
                _ => {
                    let rows = offsets[k]..offsets[k + 1];
                    let mut cols: Vec<usize> = rows.clone().flat_map(|i| g.rows[i].iter().map(|e| e.0)).collect();
                    cols.sort_unstable();
                    cols.dedup();
                    let mut sub = DMatrix::zeros(rows.len(), cols.len());
                    for (r, i) in rows.enumerate() {
                        for (q, &j) in cols.iter().enumerate() {
                            sub[(r, q)] = prog.cone_matrix[(i, j)];
                        }
                    }
                    Some(DenseBlock { cols, sub })
                }
            })
            .collect();
        Self {
            prog,
            settings,
            n,
            p: prog.eq_rhs.len(),
            m: prog.cone_rhs.len(),
            c: prog.objective.iter().map(|v| -v).collect(),
            b: prog.eq_rhs.as_slice().to_vec(),
            h: prog.cone_rhs.as_slice().to_vec(),
            a: SparseRows::from_dense(&prog.eq_matrix),
            g,
            offsets,
            dense_blocks,
            degree: prog.degree(),
        }
    }

    fn blocks(&self) -> impl Iterator<Item = (Cone, std::ops::Range<usize>)> + '_ {
        self.prog
            .cones
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, self.offsets[k]..self.offsets[k + 1]))
    }

    /// Normal matrix `G^T W^T W G`, accumulated block by block over the
    /// columns each block touches.
    fn normal_matrix(&self, scalings: &[BlockScaling]) -> DMatrix<f64> {
        let n = self.n;
        let mut hm = DMatrix::zeros(n, n);
        for (k, (_, range)) in self.blocks().enumerate() {
            match &scalings[k] {
                BlockScaling::Diagonal(w) => {
                    for (r, i) in range.enumerate() {
                        let d = w[r] * w[r];
                        let row = &self.g.rows[i];
                        for &(a, va) in row {
                            let f = d * va;
                            for &(bcol, vb) in row {
                                hm[(a, bcol)] += f * vb;
                            }
                        }
                    }
                }
                BlockScaling::Dense(ds) => {
                    let blk = self.dense_blocks[k].as_ref().expect("dense block layout");
                    let scaled = &ds.w * &blk.sub;
                    let local = scaled.transpose() * &scaled;
                    for (qa, &a) in blk.cols.iter().enumerate() {
                        for (qb, &bcol) in blk.cols.iter().enumerate() {
                            hm[(a, bcol)] += local[(qa, qb)];
                        }
                    }
                }
            }
        }
        hm
    }

    fn factor(&self, scalings: &[BlockScaling], iteration: usize) -> Result<Factor, ConicError> {
        // Adding A^T A keeps the matrix definite for variables that only enter
        // equality rows; the right-hand side is compensated in solve_kkt_once.
        let mut hm = self.normal_matrix(scalings);
        if self.p > 0 {
            hm += self.prog.eq_matrix.transpose() * &self.prog.eq_matrix;
        }
        let scale = (0..self.n).map(|i| hm[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = 0.0;
        for attempt in 0..8 {
            if attempt > 0 {
                reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            }
            let mut reg_h = hm.clone();
            for i in 0..self.n {
                reg_h[(i, i)] += reg;
            }
            if let Some(chol) = DenseCholesky::new(&reg_h) {
                let schur = if self.p > 0 {
                    let at = self.prog.eq_matrix.transpose();
                    let hinv_at = chol.solve_matrix(&at);
                    let sa = &self.prog.eq_matrix * &hinv_at;
                    let sa = (&sa + sa.transpose()) * 0.5;
                    match DenseCholesky::new(&sa) {
                        Some(sc) => Some((hinv_at, sc)),
                        None => return Err(ConicError::NumericalBreakdown { iteration }),
                    }
                } else {
                    None
                };
                return Ok(Factor { chol, schur });
            }
        }
        Err(ConicError::NumericalBreakdown { iteration })
    }

    fn apply_blockwise(
        &self,
        scalings: &[BlockScaling],
        v: &[f64],
        out: &mut [f64],
        op: fn(&BlockScaling, &[f64], &mut [f64]),
    ) {
        for (k, (_, range)) in self.blocks().enumerate() {
            op(&scalings[k], &v[range.clone()], &mut out[range]);
        }
    }

    /// Solves `[0 A^T G^T; A 0 0; G 0 -(W^T W)^{-1}] [x; y; z] = [r1; r2; r3]`
    /// with iterative refinement. The multiplier is returned both unscaled and
    /// as `W^{-T} z`.
    fn solve_kkt(
        &self,
        fac: &Factor,
        scalings: &[BlockScaling],
        r1: &[f64],
        r2: &[f64],
        r3: &[f64],
    ) -> KktSolution {
        let mut sol = self.solve_kkt_once(fac, scalings, r1, r2, r3);
        let (n, p, m) = (self.n, self.p, self.m);
        let mut t_n = vec![0.0; n];
        let mut t_m = vec![0.0; m];
        let mut t_p = vec![0.0; p];
        for _ in 0..self.settings.refinement_steps {
            let mut e1 = r1.to_vec();
            self.a.mul_t(&sol.y, &mut t_n);
            e1.iter_mut().zip(&t_n).for_each(|(e, v)| *e -= v);
            self.g.mul_t(&sol.z, &mut t_n);
            e1.iter_mut().zip(&t_n).for_each(|(e, v)| *e -= v);
            let mut e2 = r2.to_vec();
            self.a.mul(&sol.x, &mut t_p);
            e2.iter_mut().zip(&t_p).for_each(|(e, v)| *e -= v);
            let mut e3 = r3.to_vec();
            self.g.mul(&sol.x, &mut t_m);
            e3.iter_mut().zip(&t_m).for_each(|(e, v)| *e -= v);
            self.apply_blockwise(scalings, &sol.zs, &mut t_m, BlockScaling::apply_inv);
            e3.iter_mut().zip(&t_m).for_each(|(e, v)| *e += v);
            let d = self.solve_kkt_once(fac, scalings, &e1, &e2, &e3);
            sol.x.iter_mut().zip(&d.x).for_each(|(a, d)| *a += d);
            sol.y.iter_mut().zip(&d.y).for_each(|(a, d)| *a += d);
            sol.zs.iter_mut().zip(&d.zs).for_each(|(a, d)| *a += d);
            self.apply_blockwise(scalings, &sol.zs, &mut sol.z, BlockScaling::apply_t);
        }
        sol
    }

    fn solve_kkt_once(
        &self,
        fac: &Factor,
        scalings: &[BlockScaling],
        r1: &[f64],
        r2: &[f64],
        r3: &[f64],
    ) -> KktSolution {
        let mut w3 = vec![0.0; self.m];
        self.apply_blockwise(scalings, r3, &mut w3, BlockScaling::apply_wtw);
        let mut q = vec![0.0; self.n];
        self.g.mul_t(&w3, &mut q);
        q.iter_mut().zip(r1).for_each(|(a, b)| *a += b);
        if self.p > 0 {
            let mut atr2 = vec![0.0; self.n];
            self.a.mul_t(r2, &mut atr2);
            q.iter_mut().zip(&atr2).for_each(|(a, b)| *a += b);
        }
        let qv = DVector::from_vec(q);
        let (x, y) = match &fac.schur {
            None => (fac.chol.solve(&qv), DVector::zeros(0)),
            Some((hinv_at, sc)) => {
                let hq = fac.chol.solve(&qv);
                let rhs = &self.prog.eq_matrix * &hq - DVector::from_column_slice(r2);
                let y = sc.solve(&rhs);
                let x = hq - hinv_at * &y;
                (x, y)
            }
        };
        let zs = self.scaled_z(scalings, x.as_slice(), r3);
        let mut z = vec![0.0; self.m];
        self.apply_blockwise(scalings, &zs, &mut z, BlockScaling::apply_t);
        KktSolution { x: x.as_slice().to_vec(), y: y.as_slice().to_vec(), z, zs }
    }

    /// `W (G x - r)`, the scaled multiplier `W^{-T} z` of a KKT solution.
    fn scaled_z(&self, scalings: &[BlockScaling], x: &[f64], r: &[f64]) -> Vec<f64> {
        let mut gx = vec![0.0; self.m];
        self.g.mul(x, &mut gx);
        gx.iter_mut().zip(r).for_each(|(a, b)| *a -= b);
        let mut out = vec![0.0; self.m];
        self.apply_blockwise(scalings, &gx, &mut out, BlockScaling::apply);
        out
    }

    /// Shifts `v` into the cone interior when it is not already interior.
    fn push_interior(&self, v: &mut [f64]) {
        let norm = cones::norm(v).max(1.0);
        let worst = self
            .blocks()
            .map(|(c, r)| -cones::interior_margin(c, &v[r]))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= -1e-8 * norm {
            for (c, r) in self.blocks().collect::<Vec<_>>() {
                cones::add_identity(c, &mut v[r], 1.0 + worst);
            }
        }
    }

    fn initial_point(&self) -> Result<Point, ConicError> {
        let eye: Vec<BlockScaling> = self.prog.cones.iter().map(|&c| BlockScaling::identity(c)).collect();
        let fac = self.factor(&eye, 0)?;
        let zeros_n = vec![0.0; self.n];
        let zeros_p = vec![0.0; self.p];
        let zeros_m = vec![0.0; self.m];

        let primal = self.solve_kkt(&fac, &eye, &zeros_n, &self.b, &self.h);
        let mut x = primal.x;
        let mut s: Vec<f64> = primal.z.iter().map(|v| -v).collect();
        if let Some(ws) = &self.prog.warm_start {
            x = ws.as_slice().to_vec();
            let mut gx = vec![0.0; self.m];
            self.g.mul(&x, &mut gx);
            s = self.h.iter().zip(&gx).map(|(h, g)| h - g).collect();
        }
        self.push_interior(&mut s);

        let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
        let dual = self.solve_kkt(&fac, &eye, &neg_c, &zeros_p, &zeros_m);
        let (y, mut z) = (dual.y, dual.z);
        self.push_interior(&mut z);

        let mut lambda = vec![0.0; self.m];
        let mut scalings = Vec::with_capacity(self.prog.cones.len());
        for (cone, r) in self.blocks() {
            let sc = cones::nt_scaling(cone, &s[r.clone()], &z[r.clone()], &mut lambda[r])
                .ok_or(ConicError::NumericalBreakdown { iteration: 0 })?;
            scalings.push(sc);
        }
        Ok(Point { x, y, s, z, tau: 1.0, kappa: 1.0, scalings, lambda })
    }

    fn residuals(&self, pt: &Point) -> Residuals {
        let (n, p, m) = (self.n, self.p, self.m);
        let mut rx = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.a.mul_t(&pt.y, &mut rx);
        self.g.mul_t(&pt.z, &mut tmp);
        for i in 0..n {
            rx[i] += tmp[i] + self.c[i] * pt.tau;
        }
        let mut ry = vec![0.0; p];
        self.a.mul(&pt.x, &mut ry);
        for i in 0..p {
            ry[i] = self.b[i] * pt.tau - ry[i];
        }
        let mut rz = vec![0.0; m];
        self.g.mul(&pt.x, &mut rz);
        for i in 0..m {
            rz[i] += pt.s[i] - self.h[i] * pt.tau;
        }
        let rtau = pt.kappa + cones::dot(&self.c, &pt.x) + cones::dot(&self.b, &pt.y) + cones::dot(&self.h, &pt.z);
        Residuals { x: rx, y: ry, z: rz, tau: rtau }
    }

    /// Newton direction for the target `lambda o (W ds + W^{-T} dz) = dc`,
    /// `kappa dtau + tau dkappa = dtk`, with linear residuals reduced by
    /// `factor`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        fac: &Factor,
        v1: &KktSolution,
        res: &Residuals,
        pt: &Point,
        factor: f64,
        dc: &[f64],
        dtk: f64,
    ) -> Direction {
        let m = self.m;
        let scalings = &pt.scalings;
        let mut ldc = vec![0.0; m];
        for (cone, r) in self.blocks() {
            cones::jordan_solve(cone, &pt.lambda[r.clone()], &dc[r.clone()], &mut ldc[r]);
        }
        let mut u = vec![0.0; m];
        self.apply_blockwise(scalings, &ldc, &mut u, BlockScaling::apply_inv);

        let r1: Vec<f64> = res.x.iter().map(|v| -factor * v).collect();
        let r2: Vec<f64> = res.y.iter().map(|v| factor * v).collect();
        let r3: Vec<f64> = res.z.iter().zip(&u).map(|(v, ui)| -factor * v - ui).collect();
        let v2 = self.solve_kkt(fac, scalings, &r1, &r2, &r3);
        // With K v = (r1, r2, r3), Phi = (W^T W)^{-1} and w = W (G x - r3):
        //   c'x1 + b'y1 + h'z1 = -||w1||^2
        //   c'x2 + b'y2 + h'z2 = x1'r1 - y1'r2 - z1'r3 - 2 w1'w2
        let (w1, w2) = (&v1.zs, &v2.zs);
        let denom = -cones::dot(w1, w1) - pt.kappa / pt.tau;
        let lin2 = cones::dot(&v1.x, &r1) - cones::dot(&v1.y, &r2) - cones::dot(&v1.z, &r3) - 2.0 * cones::dot(w1, w2);
        let dtau = (-factor * res.tau - dtk / pt.tau - lin2) / denom;
        let dx: Vec<f64> = v2.x.iter().zip(&v1.x).map(|(a, b)| a + dtau * b).collect();
        let dy: Vec<f64> = v2.y.iter().zip(&v1.y).map(|(a, b)| a + dtau * b).collect();
        let dkappa = (dtk - pt.kappa * dtau) / pt.tau;
        // Scaled multiplier step W^{-T} dz = w2 + dtau w1, slack step from
        // the complementarity row.
        let z_scaled: Vec<f64> = w2.iter().zip(w1).map(|(a, b)| a + dtau * b).collect();
        let s_scaled: Vec<f64> = ldc.iter().zip(&z_scaled).map(|(a, b)| a - b).collect();
        Direction { x: dx, y: dy, s_scaled, z_scaled, tau: dtau, kappa: dkappa }
    }

    fn max_step(&self, pt: &Point, d: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        for (cone, r) in self.blocks() {
            let lam = &pt.lambda[r.clone()];
            alpha = alpha.min(cones::max_step(cone, lam, &d.s_scaled[r.clone()]));
            alpha = alpha.min(cones::max_step(cone, lam, &d.z_scaled[r]));
        }
        if d.tau < 0.0 {
            alpha = alpha.min(-pt.tau / d.tau);
        }
        if d.kappa < 0.0 {
            alpha = alpha.min(-pt.kappa / d.kappa);
        }
        alpha
    }

    /// Takes the step and refreshes the scaling from the scaled points.
    fn update(&self, pt: &mut Point, d: &Direction, alpha: f64, iteration: usize) -> Result<(), ConicError> {
        let axpy = |v: &mut Vec<f64>, dv: &[f64]| v.iter_mut().zip(dv).for_each(|(a, b)| *a += alpha * b);
        axpy(&mut pt.x, &d.x);
        axpy(&mut pt.y, &d.y);
        pt.tau += alpha * d.tau;
        pt.kappa += alpha * d.kappa;
        let m = self.m;
        let st: Vec<f64> = pt.lambda.iter().zip(&d.s_scaled).map(|(l, v)| l + alpha * v).collect();
        let zt: Vec<f64> = pt.lambda.iter().zip(&d.z_scaled).map(|(l, v)| l + alpha * v).collect();
        let mut lambda = vec![0.0; m];
        for (k, (cone, r)) in self.blocks().enumerate() {
            let step = cones::nt_scaling(cone, &st[r.clone()], &zt[r.clone()], &mut lambda[r])
                .ok_or(ConicError::NumericalBreakdown { iteration })?;
            pt.scalings[k].compose(&step);
        }
        pt.lambda = lambda;
        self.apply_blockwise(&pt.scalings, &pt.lambda, &mut pt.s, BlockScaling::apply_inv);
        self.apply_blockwise(&pt.scalings, &pt.lambda, &mut pt.z, BlockScaling::apply_t);
        Ok(())
    }

    fn finish(&self, pt: &Point, status: SolveStatus, iterations: usize, stats: Stats) -> ConeSolution {
        let scale = match status {
            SolveStatus::Optimal | SolveStatus::MaxIterations => 1.0 / pt.tau,
            SolveStatus::Infeasible => 1.0 / -(cones::dot(&self.h, &pt.z) + cones::dot(&self.b, &pt.y)),
            SolveStatus::Unbounded => 1.0 / -cones::dot(&self.c, &pt.x),
        };
        let vec = |v: &[f64]| DVector::from_iterator(v.len(), v.iter().map(|x| x * scale));
        let x = vec(&pt.x);
        let objective = self.prog.objective.dot(&x);
        ConeSolution {
            status,
            x,
            y: vec(&pt.y),
            z: vec(&pt.z),
            s: vec(&pt.s),
            objective,
            primal_residual: stats.pres,
            dual_residual: stats.dres,
            gap: stats.gap,
            iterations,
        }
    }

    fn stats(&self, pt: &Point, res: &Residuals) -> Stats {
        let nb = cones::norm(&self.b).max(1.0);
        let nh = cones::norm(&self.h).max(1.0);
        let nc = cones::norm(&self.c).max(1.0);
        let pres = (cones::norm(&res.y) / pt.tau / nb).max(cones::norm(&res.z) / pt.tau / nh);
        let dres = cones::norm(&res.x) / pt.tau / nc;
        let pcost = cones::dot(&self.c, &pt.x) / pt.tau;
        let dcost = -(cones::dot(&self.h, &pt.z) + cones::dot(&self.b, &pt.y)) / pt.tau;
        let sz = cones::dot(&pt.s, &pt.z) / (pt.tau * pt.tau);
        let gap = (pcost - dcost).abs().max(sz) / pcost.abs().max(1.0);
        Stats { pres, dres, gap }
    }

    fn run(&self) -> Result<ConeSolution, ConicError> {
        let mut pt = self.initial_point()?;
        let m = self.m;
        let tol_f = self.settings.feasibility_tol;
        let tol_g = self.settings.gap_tol;
        for iter in 0..=self.settings.max_iterations {
            let res = self.residuals(&pt);
            let st = self.stats(&pt, &res);
            if st.pres <= tol_f && st.dres <= tol_f && st.gap <= tol_g {
                return Ok(self.finish(&pt, SolveStatus::Optimal, iter, st));
            }
            // Infeasibility certificates.
            let hz_by = cones::dot(&self.h, &pt.z) + cones::dot(&self.b, &pt.y);
            if hz_by < 0.0 {
                let mut t = vec![0.0; self.n];
                let mut t2 = vec![0.0; self.n];
                self.a.mul_t(&pt.y, &mut t);
                self.g.mul_t(&pt.z, &mut t2);
                let r: Vec<f64> = t.iter().zip(&t2).map(|(a, b)| a + b).collect();
                if cones::norm(&r) / -hz_by <= tol_f {
                    return Ok(self.finish(&pt, SolveStatus::Infeasible, iter, st));
                }
            }
            let cx = cones::dot(&self.c, &pt.x);
            if cx < 0.0 {
                let mut ax = vec![0.0; self.p];
                self.a.mul(&pt.x, &mut ax);
                let mut gxs = vec![0.0; m];
                self.g.mul(&pt.x, &mut gxs);
                gxs.iter_mut().zip(&pt.s).for_each(|(a, b)| *a += b);
                if cones::norm(&ax).max(cones::norm(&gxs)) / -cx <= tol_f {
                    return Ok(self.finish(&pt, SolveStatus::Unbounded, iter, st));
                }
            }
            if iter == self.settings.max_iterations {
                return Ok(self.finish(&pt, SolveStatus::MaxIterations, iter, st));
            }

            let mu = (cones::dot(&pt.lambda, &pt.lambda) + pt.tau * pt.kappa) / (self.degree as f64 + 1.0);
            let fac = self.factor(&pt.scalings, iter)?;
            let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
            let v1 = self.solve_kkt(&fac, &pt.scalings, &neg_c, &self.b, &self.h);

            let mut lam_sq = vec![0.0; m];
            for (cone, r) in self.blocks() {
                cones::jordan_product(cone, &pt.lambda[r.clone()], &pt.lambda[r.clone()], &mut lam_sq[r]);
            }
            // Predictor.
            let dc_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let d_aff = self.direction(&fac, &v1, &res, &pt, 1.0, &dc_aff, -pt.tau * pt.kappa);
            let alpha_aff = self.max_step(&pt, &d_aff).min(1.0);
            let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let mut cross = vec![0.0; m];
            for (cone, r) in self.blocks() {
                cones::jordan_product(cone, &d_aff.s_scaled[r.clone()], &d_aff.z_scaled[r.clone()], &mut cross[r]);
            }
            let mut dc: Vec<f64> = lam_sq.iter().zip(&cross).map(|(a, b)| -a - b).collect();
            for (cone, r) in self.blocks().collect::<Vec<_>>() {
                cones::add_identity(cone, &mut dc[r], sigma * mu);
            }
            let dtk = -pt.tau * pt.kappa - d_aff.tau * d_aff.kappa + sigma * mu;
            let d = self.direction(&fac, &v1, &res, &pt, 1.0 - sigma, &dc, dtk);
            let alpha = (self.settings.step_fraction * self.max_step(&pt, &d)).min(1.0);
            if !alpha.is_finite() || d.x.iter().any(|v| !v.is_finite()) {
                return Err(ConicError::NumericalBreakdown { iteration: iter });
            }
            self.update(&mut pt, &d, alpha, iter)?;
        }
        unreachable!("loop returns on the final iteration")
    }
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    pres: f64,
    dres: f64,
    gap: f64,
}
