//! Monte Carlo drivers: single points, ΔG sweeps, convergence traces and the
//! sensing-target study.
//!
//! Realization `r` of every point draws from stream `r` of a ChaCha8
//! generator seeded with the configured seed, so all schemes, ΔG values and
//! mobility profiles see the same direct-path draws. Work is spread over the
//! rayon pool and gathered in job order.

use crate::config::{ExperimentConfig, Mobility};
use crate::stats::{gain_pct, mean_ci95, MeanCi};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rsisac_core::channel::{ChannelError, ChannelRealization};
use rsisac_core::optimizer::{bcd_solve, rs_warm_solve, solve_scheme, BcdConfig, BcdOutcome, OptimizerError, Scheme};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// `None` keeps the geometric echo.
    pub delta_g_db: Option<f64>,
    pub mobility: Mobility,
    pub gamma_sens: f64,
}

impl Point {
    /// The config's own operating point.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self { delta_g_db: cfg.delta_g_db, mobility: cfg.mobility, gamma_sens: cfg.gamma_sens }
    }
}

/// One scheme on one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: String,
    pub delta_g_db: f64,
    pub mobility: String,
    pub gamma_sens: f64,
    pub realization: usize,
    /// Per-subcarrier SE in bps/Hz; 0 when infeasible.
    pub se: f64,
    /// Exact weighted CRLB; for infeasible rows the best value reached, or
    /// NaN after a solver failure.
    pub crlb: f64,
    pub iterations: usize,
    pub feasible: bool,
    /// Summed power over all subcarriers in W; NaN when infeasible.
    pub total_power_w: f64,
    /// Smallest and largest per-subcarrier total relative to `P_tx / N_sc`.
    pub min_tube: f64,
    pub max_tube: f64,
}

/// Solver output of one scheme on one realization.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub result: Result<BcdOutcome, OptimizerError>,
}

pub fn realization_rng(seed: u64, realization: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization as u64);
    rng
}

pub fn draw_channel(cfg: &ExperimentConfig, point: &Point, realization: usize) -> Result<ChannelRealization, ChannelError> {
    let mut rng = realization_rng(cfg.seed, realization);
    ChannelRealization::draw(&cfg.grid, &cfg.geometry(point.mobility), &cfg.link(point.delta_g_db), &mut rng)
}

/// Effective DP/EP gap of a point in dB.
pub fn effective_delta_g(cfg: &ExperimentConfig, point: &Point) -> Result<f64, ChannelError> {
    cfg.link(point.delta_g_db).effective_delta_g_db(&cfg.geometry(point.mobility), cfg.grid.wavelength())
}

/// Solves the requested schemes on one channel. Rate splitting is
/// warm-started with the better feasible NOMA baseline as its initial
/// incumbent, so both baselines are solved whenever it is requested.
pub fn solve_realization(ch: &ChannelRealization, schemes: &[Scheme], bcd: &BcdConfig) -> Vec<SchemeOutcome> {
    let wants_rs = schemes.contains(&Scheme::Rs);
    let baseline = |s: Scheme| (wants_rs || schemes.contains(&s)).then(|| solve_scheme(ch, s, bcd));
    let cf = baseline(Scheme::NomaCf);
    let sf = baseline(Scheme::NomaSf);
    let rs = wants_rs.then(|| {
        let best = [&cf, &sf]
            .into_iter()
            .flatten()
            .filter_map(|r| r.as_ref().ok())
            .max_by(|a, b| a.se().total_cmp(&b.se()));
        match best {
            Some(b) => rs_warm_solve(ch, bcd, &b.allocation),
            None => bcd_solve(ch, bcd),
        }
    });
    schemes
        .iter()
        .map(|&scheme| {
            let result = match scheme {
                Scheme::Rs => rs.clone(),
                Scheme::NomaCf => cf.clone(),
                Scheme::NomaSf => sf.clone(),
            }
            .expect("every requested scheme is solved");
            SchemeOutcome { scheme, result }
        })
        .collect()
}

/// Flattens one outcome; `p_tx` is the total transmit power in W.
pub fn to_row(o: &SchemeOutcome, point: &Point, p_tx: f64, delta_g_db: f64, realization: usize) -> ResultRow {
    let (mut total_power_w, mut min_tube, mut max_tube) = (f64::NAN, f64::NAN, f64::NAN);
    if let Ok(b) = &o.result {
        let a = &b.allocation;
        let p_avg = p_tx / a.len() as f64;
        let tube = (0..a.len()).map(|i| a.subcarrier_total(i) / p_avg);
        total_power_w = a.total();
        min_tube = tube.clone().fold(f64::INFINITY, f64::min);
        max_tube = tube.fold(f64::NEG_INFINITY, f64::max);
    }
    let (se, crlb, iterations, feasible) = match &o.result {
        Ok(b) => (b.se(), b.crlb(), b.iterations, true),
        Err(OptimizerError::SensingInfeasible { best_crlb, .. }) => (0.0, *best_crlb, 0, false),
        Err(_) => (0.0, f64::NAN, 0, false),
    };
    ResultRow {
        scheme: o.scheme.label().into(),
        delta_g_db,
        mobility: point.mobility.label(),
        gamma_sens: point.gamma_sens,
        realization,
        se,
        crlb,
        iterations,
        feasible,
        total_power_w,
        min_tube,
        max_tube,
    }
}

/// Rows of several points, realization-major within each point.
fn run_points(cfg: &ExperimentConfig, points: &[Point]) -> Result<Vec<Vec<ResultRow>>, HarnessError> {
    let dgs: Vec<f64> = points.iter().map(|p| effective_delta_g(cfg, p)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|k| (0..cfg.runs).map(move |r| (k, r))).collect();
    let per_job: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(k, r)| {
            let point = &points[k];
            let ch = draw_channel(cfg, point, r)?;
            let outcomes = solve_realization(&ch, &cfg.schemes, &cfg.bcd(point.gamma_sens));
            Ok(outcomes.iter().map(|o| to_row(o, point, cfg.p_tx(), dgs[k], r)).collect())
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut out = vec![Vec::new(); points.len()];
    for ((k, _), rows) in jobs.into_iter().zip(per_job) {
        out[k].extend(rows);
    }
    Ok(out)
}

/// All configured schemes on `cfg.runs` realizations of one point.
pub fn run_point(cfg: &ExperimentConfig, point: &Point) -> Result<Vec<ResultRow>, HarnessError> {
    Ok(run_points(cfg, std::slice::from_ref(point))?.pop().unwrap_or_default())
}

/// Mean SE of one scheme at one ΔG over its feasible rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub delta_g_db: f64,
    pub scheme: String,
    pub mean_se: f64,
    pub ci95: f64,
    pub feasible: usize,
    pub runs: usize,
}

/// Relative gains of rate splitting at one ΔG, in percent. The envelope is
/// the pointwise better of the two baselines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub delta_g_db: f64,
    pub over_cf_pct: f64,
    pub over_sf_pct: f64,
    pub over_envelope_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub mobility: Mobility,
    pub gamma_sens: f64,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SchemeSummary>,
    /// Empty unless all three schemes ran.
    pub gains: Vec<GainRow>,
}

pub fn summarize(rows: &[ResultRow], scheme: Scheme) -> MeanCi {
    let se: Vec<f64> = rows.iter().filter(|r| r.feasible && r.scheme == scheme.label()).map(|r| r.se).collect();
    mean_ci95(&se)
}

fn runs_of(rows: &[ResultRow], scheme: Scheme) -> usize {
    rows.iter().filter(|r| r.scheme == scheme.label()).count()
}

/// Gains of rate splitting over each baseline from the rows of one point.
pub fn gains(rows: &[ResultRow], delta_g_db: f64) -> GainRow {
    let m = |s| summarize(rows, s).mean;
    let (rs, cf, sf) = (m(Scheme::Rs), m(Scheme::NomaCf), m(Scheme::NomaSf));
    GainRow {
        delta_g_db,
        over_cf_pct: gain_pct(rs, cf),
        over_sf_pct: gain_pct(rs, sf),
        over_envelope_pct: gain_pct(rs, cf.max(sf)),
    }
}

/// Every configured scheme at every ΔG of `cfg.sweep_delta_g_db`.
pub fn sweep_delta_g(cfg: &ExperimentConfig, mobility: Mobility, gamma_sens: f64) -> Result<Sweep, HarnessError> {
    let points: Vec<Point> = cfg
        .sweep_delta_g_db
        .iter()
        .map(|&dg| Point { delta_g_db: Some(dg), mobility, gamma_sens })
        .collect();
    let per_point = run_points(cfg, &points)?;
    let all = Scheme::ALL.iter().all(|s| cfg.schemes.contains(s));
    let mut summary = Vec::new();
    let mut gain_rows = Vec::new();
    for (point, rows) in points.iter().zip(&per_point) {
        let dg = point.delta_g_db.unwrap_or(f64::NAN);
        for &s in &cfg.schemes {
            let m = summarize(rows, s);
            summary.push(SchemeSummary {
                delta_g_db: dg,
                scheme: s.label().into(),
                mean_se: m.mean,
                ci95: m.ci95,
                feasible: m.n,
                runs: runs_of(rows, s),
            });
        }
        if all {
            gain_rows.push(gains(rows, dg));
        }
    }
    Ok(Sweep { mobility, gamma_sens, rows: per_point.into_iter().flatten().collect(), summary, gains: gain_rows })
}

/// Index of the largest envelope gain of a sweep.
pub fn envelope_argmax(gains: &[GainRow]) -> Option<usize> {
    gains
        .iter()
        .enumerate()
        .filter(|(_, g)| g.over_envelope_pct.is_finite())
        .max_by(|a, b| a.1.over_envelope_pct.total_cmp(&b.1.over_envelope_pct))
        .map(|(i, _)| i)
}

/// Averaged rate-splitting BCD trace of one mobility profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    pub mobility: Mobility,
    /// Mean incumbent objective per iteration; entry 0 is the start.
    pub mean: Vec<f64>,
    /// Per-realization traces padded to `max_iterations + 1`.
    pub traces: Vec<Vec<f64>>,
    /// Realizations without a feasible start.
    pub infeasible: usize,
}

/// Cold-start rate-splitting BCD traces at the config's ΔG and sensing
/// target, one curve per mobility profile.
pub fn convergence_trace(cfg: &ExperimentConfig, mobilities: &[Mobility]) -> Result<Vec<ConvergenceCurve>, HarnessError> {
    let len = cfg.max_iterations + 1;
    let jobs: Vec<(usize, usize)> = (0..mobilities.len()).flat_map(|k| (0..cfg.runs).map(move |r| (k, r))).collect();
    let bcd = cfg.bcd(cfg.gamma_sens);
    let traces: Vec<Option<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(k, r)| {
            let point = Point { delta_g_db: cfg.delta_g_db, mobility: mobilities[k], gamma_sens: cfg.gamma_sens };
            let ch = draw_channel(cfg, &point, r)?;
            Ok(bcd_solve(&ch, &bcd).ok().map(|o| o.trace.padded_objectives(len)))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut curves: Vec<ConvergenceCurve> = mobilities
        .iter()
        .map(|&mobility| ConvergenceCurve { mobility, mean: vec![0.0; len], traces: Vec::new(), infeasible: 0 })
        .collect();
    for ((k, _), t) in jobs.into_iter().zip(traces) {
        match t {
            Some(t) => curves[k].traces.push(t),
            None => curves[k].infeasible += 1,
        }
    }
    for c in &mut curves {
        let n = c.traces.len().max(1) as f64;
        for t in &c.traces {
            for (m, v) in c.mean.iter_mut().zip(t) {
                *m += v / n;
            }
        }
        if c.traces.is_empty() {
            c.mean.iter_mut().for_each(|m| *m = f64::NAN);
        }
    }
    Ok(curves)
}

/// Rate-splitting gains at one (sensing target, ΔG) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessCell {
    pub gamma_sens: f64,
    pub delta_g_db: f64,
    pub rs_mean: f64,
    pub cf_mean: f64,
    pub sf_mean: f64,
    pub over_cf_pct: f64,
    pub over_sf_pct: f64,
    /// Feasible rate-splitting rows.
    pub rs_feasible: usize,
    /// Share of feasible rate-splitting rows whose CRLB sits within 1% of
    /// the target, i.e. where the sensing constraint binds.
    pub active_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessStudy {
    pub cells: Vec<TightnessCell>,
    pub rows: Vec<ResultRow>,
}

/// Gains at every combination of `gammas` and `delta_gs`, all three schemes.
pub fn sensing_tightness_study(
    cfg: &ExperimentConfig,
    mobility: Mobility,
    gammas: &[f64],
    delta_gs: &[f64],
) -> Result<TightnessStudy, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.schemes = Scheme::ALL.to_vec();
    let points: Vec<Point> = gammas
        .iter()
        .flat_map(|&g| delta_gs.iter().map(move |&dg| Point { delta_g_db: Some(dg), mobility, gamma_sens: g }))
        .collect();
    let per_point = run_points(&cfg, &points)?;
    let cells = points
        .iter()
        .zip(&per_point)
        .map(|(p, rows)| {
            let dg = p.delta_g_db.unwrap_or(f64::NAN);
            let g = gains(rows, dg);
            let rs_rows: Vec<&ResultRow> = rows.iter().filter(|r| r.feasible && r.scheme == Scheme::Rs.label()).collect();
            let active = rs_rows.iter().filter(|r| r.crlb >= 0.99 * p.gamma_sens).count();
            TightnessCell {
                gamma_sens: p.gamma_sens,
                delta_g_db: dg,
                rs_mean: summarize(rows, Scheme::Rs).mean,
                cf_mean: summarize(rows, Scheme::NomaCf).mean,
                sf_mean: summarize(rows, Scheme::NomaSf).mean,
                over_cf_pct: g.over_cf_pct,
                over_sf_pct: g.over_sf_pct,
                rs_feasible: rs_rows.len(),
                active_share: if rs_rows.is_empty() { f64::NAN } else { active as f64 / rs_rows.len() as f64 },
            }
        })
        .collect();
    Ok(TightnessStudy { cells, rows: per_point.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small() -> ExperimentConfig {
        ExperimentConfig { runs: 2, max_iterations: 3, ..ExperimentConfig::default() }
    }

    #[test]
    fn streams_are_independent_and_repeatable() {
        let a: f64 = realization_rng(5, 0).gen();
        let b: f64 = realization_rng(5, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, realization_rng(5, 0).gen::<f64>());
    }

    #[test]
    fn channel_draw_ignores_delta_g_for_the_direct_path() {
        let cfg = small();
        let p1 = Point { delta_g_db: Some(14.0), mobility: Mobility::Static, gamma_sens: 200.0 };
        let p2 = Point { delta_g_db: Some(29.0), ..p1 };
        let (a, b) = (draw_channel(&cfg, &p1, 3).unwrap(), draw_channel(&cfg, &p2, 3).unwrap());
        assert_eq!(a.h_dp, b.h_dp);
        assert!((a.echo.alpha_r_sq / b.echo.alpha_r_sq - 10f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn geometric_point_reports_its_effective_gap() {
        let cfg = small();
        let dg = effective_delta_g(&cfg, &Point::from_config(&cfg)).unwrap();
        assert!((dg - 28.6).abs() < 0.1, "{dg}");
    }

    #[test]
    fn restricted_schemes_leave_their_stream_empty() {
        let cfg = small();
        let ch = draw_channel(&cfg, &Point { delta_g_db: Some(25.0), ..Point::from_config(&cfg) }, 0).unwrap();
        let out = solve_realization(&ch, &[Scheme::NomaCf, Scheme::NomaSf], &cfg.bcd(200.0));
        let cf = out[0].result.as_ref().unwrap();
        let sf = out[1].result.as_ref().unwrap();
        assert!(cf.allocation.p_c2.iter().all(|&p| p == 0.0));
        assert!(sf.allocation.p_c1.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn run_point_is_deterministic_and_ordered() {
        let cfg = small();
        let point = Point { delta_g_db: Some(25.0), ..Point::from_config(&cfg) };
        let a = run_point(&cfg, &point).unwrap();
        let b = run_point(&cfg, &point).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let order: Vec<(usize, &str)> = a.iter().map(|r| (r.realization, r.scheme.as_str())).collect();
        assert_eq!(order, vec![(0, "rs"), (0, "noma_cf"), (0, "noma_sf"), (1, "rs"), (1, "noma_cf"), (1, "noma_sf")]);
        for r in a.iter().filter(|r| r.feasible) {
            assert!(r.crlb <= 200.0 * 1.01);
        }
    }

    #[test]
    fn single_point_sweep_matches_run_point() {
        let mut cfg = small();
        cfg.sweep_delta_g_db = vec![25.0];
        let sweep = sweep_delta_g(&cfg, Mobility::Static, 200.0).unwrap();
        let rows = run_point(&cfg, &Point { delta_g_db: Some(25.0), mobility: Mobility::Static, gamma_sens: 200.0 }).unwrap();
        assert_eq!(sweep.rows, rows);
        assert_eq!(sweep.summary.len(), 3);
        assert_eq!(sweep.gains.len(), 1);
        assert_eq!(sweep.gains[0], gains(&rows, 25.0));
    }
}
