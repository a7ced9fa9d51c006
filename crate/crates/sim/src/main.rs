use clap::{Args, Parser, Subcommand};
use rsisac_sim::config::{parse_schemes, ConfigError, ExperimentConfig, Mobility};
use rsisac_sim::experiment::{self, HarnessError, Point};
use rsisac_sim::output::{self, OutputError};
use rsisac_sim::stats::mean_ci95;
use rsisac_sim::validate;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "rsisac", version, about = "Rate-splitting ISAC power allocation experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Key/value config file; unset keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Realizations per operating point.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of rs, noma_cf, noma_sf.
    #[arg(long, global = true)]
    schemes: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// All schemes at the configured operating point; writes rows.csv.
    Simulate,
    /// ΔG sweep; writes sweep, gains and rows files.
    Sweep {
        /// Mobility profile; defaults to the config's.
        #[arg(long)]
        mobility: Option<Mobility>,
    },
    /// Averaged rate-splitting BCD traces for static and severe mobility.
    Convergence,
    /// Gains for sensing targets 100 and 200 at ΔG 14, 25 and 29 dB.
    Tightness,
    /// Leakage model against the explicit frequency-domain channel matrix.
    ValidateChannel,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("channel validation failed")]
    ValidationFailed,
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Harness(_) => "harness",
            CliError::Output(_) => "output",
            CliError::ValidationFailed => "validation",
        }
    }
}

fn load(g: &Global) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(r) = g.runs {
        cfg.runs = r;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = &g.schemes {
        cfg.schemes = parse_schemes(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load(&cli.global)?;
    match cli.command {
        Command::Simulate => {
            let point = Point::from_config(&cfg);
            let rows = experiment::run_point(&cfg, &point)?;
            for &s in &cfg.schemes {
                let m = experiment::summarize(&rows, s);
                let crlbs: Vec<f64> = rows.iter().filter(|r| r.feasible && r.scheme == s.label()).map(|r| r.crlb).collect();
                let crlb = mean_ci95(&crlbs);
                println!(
                    "{:8} se {:.4} ± {:.4} bps/Hz  feasible {}/{}  mean crlb {:.2}",
                    s.label(),
                    m.mean,
                    m.ci95,
                    m.n,
                    cfg.runs,
                    crlb.mean
                );
            }
            report(&[output::write_rows(&cfg.out_dir.join("rows.csv"), &rows)?]);
        }
        Command::Sweep { mobility } => {
            let sweep = experiment::sweep_delta_g(&cfg, mobility.unwrap_or(cfg.mobility), cfg.gamma_sens)?;
            for s in &sweep.summary {
                println!("{:6.2} dB {:8} {:.4} ± {:.4}", s.delta_g_db, s.scheme, s.mean_se, s.ci95);
            }
            for g in &sweep.gains {
                println!(
                    "{:6.2} dB gain over cf {:6.2}%  sf {:6.2}%  envelope {:6.2}%",
                    g.delta_g_db, g.over_cf_pct, g.over_sf_pct, g.over_envelope_pct
                );
            }
            report(&output::write_sweep(&cfg.out_dir, &sweep)?);
        }
        Command::Convergence => {
            let curves = experiment::convergence_trace(&cfg, &[Mobility::Static, Mobility::Severe])?;
            for c in &curves {
                let last = c.mean.last().copied().unwrap_or(f64::NAN);
                println!("{:8} final {:.4} bps/Hz over {} runs ({} infeasible)", c.mobility.label(), last, c.traces.len(), c.infeasible);
            }
            report(&output::write_convergence(&cfg.out_dir, &curves)?);
        }
        Command::Tightness => {
            let study = experiment::sensing_tightness_study(&cfg, cfg.mobility, &[100.0, 200.0], &[14.0, 25.0, 29.0])?;
            for c in &study.cells {
                println!(
                    "gamma {:5} {:5.1} dB  over cf {:6.2}%  over sf {:6.2}%  active {:.2}",
                    c.gamma_sens, c.delta_g_db, c.over_cf_pct, c.over_sf_pct, c.active_share
                );
            }
            report(&output::write_tightness(&cfg.out_dir, &study.cells)?);
            report(&[output::write_rows(&cfg.out_dir.join("rows_tightness.csv"), &study.rows)?]);
        }
        Command::ValidateChannel => {
            let v = validate::validate_channel(&cfg.grid, cfg.seed, 100).map_err(HarnessError::from)?;
            for c in &v.cases {
                println!(
                    "nu/df {:.1} delay {} compared {} max rel err {:.2e} {}",
                    c.nu_norm,
                    c.delay_samples,
                    c.compared,
                    c.max_rel_err,
                    if c.pass { "ok" } else { "FAIL" }
                );
            }
            println!("row sums: max |sum - 1| {:.2e} over {} draws", v.max_row_sum_err, v.row_sum_draws);
            println!("oracle time {:.3} s", v.oracle_seconds);
            if !v.pass() {
                return Err(CliError::ValidationFailed);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message=\"{}\"", e.kind(), msg.replace('"', "'"));
            ExitCode::FAILURE
        }
    }
}
