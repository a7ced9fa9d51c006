//! The BCD loop: exact evaluation, closed-form auxiliary updates, surrogate
//! references, conic subproblem.

use super::fp::{update_alpha, update_rho, update_y, FpAuxiliaries};
use super::subproblem::{
    build_subproblem, extract_point, Constraints, NormalizedChannel, SubproblemData,
    SubproblemMode, XScaling,
};
use super::surrogate::surrogate_error_variance;
use super::{OptimizerError, Scheme};
use crate::channel::ChannelRealization;
use crate::receiver::{evaluate_chain, t_effective, PowerAllocation, SinrBreakdown};
use crate::sensing::{end_to_end_sigma, weighted_crlb, FisherState, SensingWeights};
use rsisac_conic::{solve_with, SolveStatus, SolverSettings};
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

/// Loop limits and constraint data.
#[derive(Debug, Clone, Copy)]
pub struct BcdConfig {
    pub gamma_sens: f64,
    /// Total transmit power in W.
    pub p_tx: f64,
    /// Relative half-width of the per-subcarrier power tube.
    pub mask: f64,
    pub max_iterations: usize,
    /// Stop once the per-subcarrier objective improves by less than this.
    pub tolerance: f64,
    /// Eigenvalue floor of the normalized FIM.
    pub fim_floor: f64,
    pub phase1_iterations: usize,
    pub solver: SolverSettings,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            gamma_sens: 200.0,
            p_tx: 0.2,
            mask: 0.05,
            max_iterations: 25,
            tolerance: 1e-4,
            fim_floor: 1e-6,
            phase1_iterations: 30,
            solver: SolverSettings::default(),
        }
    }
}

/// One BCD iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Exact per-subcarrier SE of the best feasible allocation so far.
    pub objective: f64,
    /// Exact per-subcarrier SE of this iteration's subproblem solution.
    pub candidate: f64,
    /// Exact weighted CRLB of the candidate.
    pub crlb: f64,
    pub status: String,
    pub millis: f64,
}

/// Per-iteration record of a BCD run. Row 0 is the starting allocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BcdTrace {
    pub rows: Vec<TraceRow>,
}

impl BcdTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// Objective sequence padded with its last value to `len` entries.
    pub fn padded_objectives(&self, len: usize) -> Vec<f64> {
        let mut v = self.objectives();
        let last = v.last().copied().unwrap_or(0.0);
        v.resize(len.max(v.len()), last);
        v
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "objective", "candidate", "crlb", "status", "millis"])?;
        for r in &self.rows {
            wr.write_record([
                r.iteration.to_string(),
                format!("{:.9}", r.objective),
                format!("{:.9}", r.candidate),
                format!("{:.6}", r.crlb),
                r.status.clone(),
                format!("{:.3}", r.millis),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Exact evaluation of an allocation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Per-subcarrier SE in bps/Hz.
    pub se: f64,
    pub crlb: f64,
    pub fisher: FisherState,
    pub sigma_e_sq: Vec<f64>,
    pub breakdown: SinrBreakdown,
}

pub fn evaluate_exact(p: &PowerAllocation, ch: &ChannelRealization, w: &SensingWeights) -> Result<Evaluation, OptimizerError> {
    let (fisher, sigma_e_sq) = end_to_end_sigma(p, ch)?;
    let breakdown = evaluate_chain(p, ch, &sigma_e_sq)?;
    Ok(Evaluation {
        se: breakdown.r_sum / ch.grid.n_sc as f64,
        crlb: weighted_crlb(&fisher, w),
        fisher,
        sigma_e_sq,
        breakdown,
    })
}

/// Result of a BCD run.
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub allocation: PowerAllocation,
    pub evaluation: Evaluation,
    pub trace: BcdTrace,
    /// Subproblem solves performed.
    pub iterations: usize,
}

impl BcdOutcome {
    pub fn se(&self) -> f64 {
        self.evaluation.se
    }

    pub fn crlb(&self) -> f64 {
        self.evaluation.crlb
    }
}

/// Clips negatives, moves every subcarrier into the tube and trims any
/// excess over the budget from the subcarriers with slack above the floor.
pub fn project_to_mask(p: &PowerAllocation, p_avg: f64, mask: f64) -> PowerAllocation {
    let n = p.len();
    let (lo, hi) = ((1.0 - mask) * p_avg, (1.0 + mask) * p_avg);
    let mut q = PowerAllocation {
        p_c1: p.p_c1.iter().map(|x| x.max(0.0)).collect(),
        p_c2: p.p_c2.iter().map(|x| x.max(0.0)).collect(),
        p_r: p.p_r.iter().map(|x| x.max(0.0)).collect(),
    };
    let scale = |q: &mut PowerAllocation, i: usize, f: f64| {
        q.p_c1[i] *= f;
        q.p_c2[i] *= f;
        q.p_r[i] *= f;
    };
    for i in 0..n {
        let t = q.subcarrier_total(i);
        if t <= 0.0 {
            q.p_r[i] = lo;
        } else if t < lo {
            scale(&mut q, i, lo / t);
        } else if t > hi {
            scale(&mut q, i, hi / t);
        }
    }
    let budget = n as f64 * p_avg;
    let excess = q.total() - budget;
    if excess > 0.0 {
        let slack: Vec<f64> = (0..n).map(|i| (q.subcarrier_total(i) - lo).max(0.0)).collect();
        let total_slack: f64 = slack.iter().sum();
        for i in 0..n {
            let t = q.subcarrier_total(i);
            if t > 0.0 && total_slack > 0.0 {
                scale(&mut q, i, (t - excess * slack[i] / total_slack) / t);
            }
        }
    }
    q
}

/// Where the iterate and the incumbent start.
#[derive(Clone, Copy)]
enum Start<'b> {
    /// Equal split, or the phase-1 point if that is infeasible.
    Default,
    /// Iterate from the given allocation when it is sensing-feasible.
    From(&'b PowerAllocation),
    /// Iterate from the default start but keep the given allocation as the
    /// incumbent until something beats it.
    Incumbent(&'b PowerAllocation),
}

/// State shared by the phase-1 search and the main loop.
struct Problem<'a> {
    ch: &'a ChannelRealization,
    nc: NormalizedChannel,
    scheme: Scheme,
    cfg: BcdConfig,
    weights: SensingWeights,
}

impl<'a> Problem<'a> {
    fn new(ch: &'a ChannelRealization, scheme: Scheme, cfg: &BcdConfig) -> Self {
        let p_avg = cfg.p_tx / ch.grid.n_sc as f64;
        Self {
            ch,
            nc: NormalizedChannel::new(ch, p_avg),
            scheme,
            cfg: *cfg,
            weights: SensingWeights::new(&ch.grid, cfg.gamma_sens),
        }
    }

    fn constraints(&self) -> Constraints {
        Constraints { sensing: self.weights, mask: self.cfg.mask, fim_floor: self.cfg.fim_floor }
    }

    fn feasible(&self, ev: &Evaluation) -> bool {
        ev.crlb <= self.cfg.gamma_sens
    }

    /// Gates the disabled stream to zero.
    fn gate(&self, p: &PowerAllocation) -> PowerAllocation {
        let n = p.len();
        PowerAllocation {
            p_c1: if self.scheme.has_c1() { p.p_c1.clone() } else { vec![0.0; n] },
            p_c2: if self.scheme.has_c2() { p.p_c2.clone() } else { vec![0.0; n] },
            p_r: p.p_r.clone(),
        }
    }

    /// Auxiliaries and Taylor references at the current allocation.
    fn linearize(&self, p: &PowerAllocation, ev: &Evaluation) -> (FpAuxiliaries, Vec<f64>, Vec<f64>, XScaling) {
        let nc = &self.nc;
        let n = nc.n();
        let noise = self.ch.noise_power;
        let b = &ev.breakdown;
        let sigma_ref: Vec<f64> =
            surrogate_error_variance(nc.alpha_r_sq, &ev.fisher.cov.matrix(), nc.beta, &nc.grid)
                .into_iter()
                .map(|s| s * nc.p_avg / noise)
                .collect();
        let t_ref: Vec<f64> = t_effective(p, &self.ch.xi).into_iter().map(|t| t / nc.p_avg).collect();

        let s1: Vec<f64> = b.s_c1.iter().map(|s| s / noise).collect();
        let i1: Vec<f64> = b.i_c1.iter().map(|s| s / noise).collect();
        let g1: Vec<f64> = (0..n).map(|i| s1[i] / (i1[i] + 1.0)).collect();
        // Supplementary stream under the surrogate-consistent model.
        let s2: Vec<f64> = b.s_c2.iter().map(|s| s / noise).collect();
        let i2: Vec<f64> = (0..n)
            .map(|i| {
                let ici: f64 = (0..n).filter(|&k| k != i).map(|k| nc.xi[(i, k)] * p.p_c2[k]).sum::<f64>() * nc.e / nc.p_avg;
                sigma_ref[i] * t_ref[i] + ici
            })
            .collect();
        let g2: Vec<f64> = (0..n).map(|i| s2[i] / (i2[i] + 1.0)).collect();
        let a1 = update_alpha(&g1);
        let a2 = update_alpha(&g2);
        let aux = FpAuxiliaries {
            rho_c1: (0..n).map(|i| update_rho(a1[i], s1[i], i1[i], 1.0)).collect(),
            rho_c2: (0..n).map(|i| update_rho(a2[i], s2[i], i2[i], 1.0)).collect(),
            alpha_c1: a1,
            alpha_c2: a2,
            y: (0..n).map(|i| update_y(b.s_r[i] / noise, b.i_r[i] / noise, 1.0)).collect(),
        };
        let scaling = XScaling::balanced(nc, &self.weights, &b.gamma_r);
        (aux, sigma_ref, t_ref, scaling)
    }

    /// Solves one subproblem; `Ok(None)` when the solver produced no usable point.
    fn step(
        &self,
        mode: SubproblemMode,
        p: &PowerAllocation,
        ev: &Evaluation,
        iteration: usize,
    ) -> Result<(Option<PowerAllocation>, SolveStatus), OptimizerError> {
        let (aux, sigma_ref, t_ref, scaling) = self.linearize(p, ev);
        let data = SubproblemData {
            nc: &self.nc,
            scheme: self.scheme,
            mode,
            cons: self.constraints(),
            aux: &aux,
            sigma_ref: &sigma_ref,
            t_ref: &t_ref,
            scaling,
        };
        let (prog, lay) = build_subproblem(&data)?;
        let sol = match solve_with(&prog, &self.cfg.solver) {
            Ok(s) => s,
            Err(e) => return Err(OptimizerError::solver(iteration, e)),
        };
        let usable = matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIterations)
            && sol.x.iter().all(|v| v.is_finite());
        if !usable {
            return Ok((None, sol.status));
        }
        let pt = extract_point(&sol, &lay, &self.nc, &scaling);
        Ok((Some(self.gate(&project_to_mask(&pt.p, self.nc.p_avg, self.cfg.mask))), sol.status))
    }

    /// Finds a sensing-feasible allocation as close to the equal split as a
    /// halving search allows.
    fn initial_point(&self) -> Result<(PowerAllocation, Evaluation), OptimizerError> {
        let n = self.nc.n();
        let equal = PowerAllocation::equal_split(n, self.cfg.p_tx, self.scheme.has_c1(), self.scheme.has_c2());
        let equal = self.gate(&project_to_mask(&equal, self.nc.p_avg, self.cfg.mask));
        let ev = evaluate_exact(&equal, self.ch, &self.weights)?;
        if self.feasible(&ev) {
            return Ok((equal, ev));
        }
        let mut p = equal.clone();
        let mut cur = ev;
        let mut found = None;
        for it in 0..self.cfg.phase1_iterations {
            let (next, _) = self.step(SubproblemMode::Phase1, &p, &cur, it)?;
            let Some(next) = next else { break };
            let ev = evaluate_exact(&next, self.ch, &self.weights)?;
            let progress = cur.crlb - ev.crlb;
            p = next;
            cur = ev;
            if self.feasible(&cur) {
                found = Some(p.clone());
                break;
            }
            if progress < 1e-6 * cur.crlb {
                break;
            }
        }
        let Some(anchor) = found else {
            return Err(OptimizerError::SensingInfeasible { best_crlb: cur.crlb, gamma_sens: self.cfg.gamma_sens });
        };
        let mut theta = 0.5;
        while theta > 1.0 / 64.0 {
            let q = self.gate(&project_to_mask(&anchor.blend(&equal, theta), self.nc.p_avg, self.cfg.mask));
            let ev = evaluate_exact(&q, self.ch, &self.weights)?;
            if self.feasible(&ev) {
                return Ok((q, ev));
            }
            theta *= 0.5;
        }
        let ev = evaluate_exact(&anchor, self.ch, &self.weights)?;
        Ok((anchor, ev))
    }

    /// A stream with zero power has zero FP weights and never switches on,
    /// so a warm start from a baseline moves a share of the communication
    /// power into the idle stream. The best sensing-feasible split wins;
    /// `None` if no split is feasible.
    fn seed_streams(&self, p: &PowerAllocation) -> Result<Option<(PowerAllocation, Evaluation)>, OptimizerError> {
        if !(self.scheme.has_c1() && self.scheme.has_c2()) {
            return Ok(None);
        }
        let n = p.len();
        let idle_c2 = p.p_c2.iter().all(|&x| x == 0.0);
        let idle_c1 = p.p_c1.iter().all(|&x| x == 0.0);
        if !(idle_c1 || idle_c2) {
            return Ok(None);
        }
        let radar_free = |i: usize| p.p_r[i] < 0.05 * self.nc.p_avg;
        let mut best: Option<(PowerAllocation, Evaluation)> = None;
        for theta in [0.5, 0.25, 0.1] {
            for only_free in [false, true] {
                let mut q = p.clone();
                for i in (0..n).filter(|&i| !only_free || radar_free(i)) {
                    let c = p.p_c1[i] + p.p_c2[i];
                    let moved = theta * c;
                    if idle_c2 {
                        q.p_c1[i] = c - moved;
                        q.p_c2[i] = moved;
                    } else {
                        q.p_c2[i] = c - moved;
                        q.p_c1[i] = moved;
                    }
                }
                let ev = evaluate_exact(&q, self.ch, &self.weights)?;
                if self.feasible(&ev) && best.as_ref().is_none_or(|b| ev.se > b.1.se) {
                    best = Some((q, ev));
                }
            }
        }
        Ok(best)
    }

    fn run(&self, start: Start) -> Result<BcdOutcome, OptimizerError> {
        let t0 = Instant::now();
        let (mut p, mut ev, mut best) = match start {
            Start::Default => {
                let (p, ev) = self.initial_point()?;
                let best = (p.clone(), ev.clone());
                (p, ev, best)
            }
            Start::From(s) => {
                let s = self.gate(s);
                let sev = evaluate_exact(&s, self.ch, &self.weights)?;
                if self.feasible(&sev) {
                    let best = (s.clone(), sev.clone());
                    let (p, ev) = self.seed_streams(&s)?.unwrap_or((s, sev));
                    let best = if ev.se > best.1.se { (p.clone(), ev.clone()) } else { best };
                    (p, ev, best)
                } else {
                    let (p, ev) = self.initial_point()?;
                    let best = (p.clone(), ev.clone());
                    (p, ev, best)
                }
            }
            Start::Incumbent(s) => {
                let s = self.gate(s);
                let sev = evaluate_exact(&s, self.ch, &self.weights)?;
                let ok = self.feasible(&sev);
                let (p, ev) = match self.initial_point() {
                    Ok(pe) => pe,
                    Err(OptimizerError::SensingInfeasible { .. }) if ok => (s.clone(), sev.clone()),
                    Err(e) => return Err(e),
                };
                let best = if ok && sev.se > ev.se { (s, sev) } else { (p.clone(), ev.clone()) };
                (p, ev, best)
            }
        };
        let mut trace = BcdTrace::default();
        trace.rows.push(TraceRow {
            iteration: 0,
            objective: best.1.se,
            candidate: ev.se,
            crlb: ev.crlb,
            status: "start".into(),
            millis: t0.elapsed().as_secs_f64() * 1e3,
        });
        let mut iterations = 0;
        for it in 1..=self.cfg.max_iterations {
            let t = Instant::now();
            let (next, status) = match self.step(SubproblemMode::Rate, &p, &ev, it) {
                Ok(r) => r,
                Err(OptimizerError::SolverFailure { reason, .. }) => {
                    trace.rows.push(TraceRow {
                        iteration: it,
                        objective: best.1.se,
                        candidate: f64::NAN,
                        crlb: f64::NAN,
                        status: reason,
                        millis: t.elapsed().as_secs_f64() * 1e3,
                    });
                    break;
                }
                Err(e) => return Err(e),
            };
            iterations = it;
            let Some(next) = next else {
                trace.rows.push(TraceRow {
                    iteration: it,
                    objective: best.1.se,
                    candidate: f64::NAN,
                    crlb: f64::NAN,
                    status: status.to_string(),
                    millis: t.elapsed().as_secs_f64() * 1e3,
                });
                break;
            };
            let next_ev = match evaluate_exact(&next, self.ch, &self.weights) {
                Ok(e) => e,
                Err(_) => break,
            };
            let prev_se = ev.se;
            let improved = self.feasible(&next_ev) && next_ev.se > best.1.se;
            if improved {
                best = (next.clone(), next_ev.clone());
            }
            trace.rows.push(TraceRow {
                iteration: it,
                objective: best.1.se,
                candidate: next_ev.se,
                crlb: next_ev.crlb,
                status: status.to_string(),
                millis: t.elapsed().as_secs_f64() * 1e3,
            });
            if !self.feasible(&next_ev) {
                break;
            }
            p = next;
            ev = next_ev;
            if (ev.se - prev_se).abs() < self.cfg.tolerance {
                break;
            }
        }
        Ok(BcdOutcome { allocation: best.0, evaluation: best.1, trace, iterations })
    }
}

/// Rate-splitting BCD from the default starting point.
pub fn bcd_solve(ch: &ChannelRealization, cfg: &BcdConfig) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, Scheme::Rs, cfg).run(Start::Default)
}

/// BCD restricted to the robust stream.
pub fn noma_cf_solve(ch: &ChannelRealization, cfg: &BcdConfig) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, Scheme::NomaCf, cfg).run(Start::Default)
}

/// BCD restricted to the supplementary stream.
pub fn noma_sf_solve(ch: &ChannelRealization, cfg: &BcdConfig) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, Scheme::NomaSf, cfg).run(Start::Default)
}

/// Rate-splitting BCD warm-started with a baseline allocation as the initial
/// incumbent. The iterate itself starts from the default point, so the
/// result is never worse than either the cold run or the baseline.
pub fn rs_warm_solve(ch: &ChannelRealization, cfg: &BcdConfig, baseline: &PowerAllocation) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, Scheme::Rs, cfg).run(Start::Incumbent(baseline))
}

/// BCD of any scheme iterating from a given allocation. For rate splitting
/// a baseline start gets part of its communication power moved into the
/// idle stream first.
pub fn bcd_solve_from(
    ch: &ChannelRealization,
    scheme: Scheme,
    cfg: &BcdConfig,
    start: &PowerAllocation,
) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, scheme, cfg).run(Start::From(start))
}

/// Any scheme from the default start.
pub fn solve_scheme(ch: &ChannelRealization, scheme: Scheme, cfg: &BcdConfig) -> Result<BcdOutcome, OptimizerError> {
    Problem::new(ch, scheme, cfg).run(Start::Default)
}
