use rsisac_core::optimizer::Scheme;
use rsisac_sim::config::{ExperimentConfig, Mobility};
use rsisac_sim::experiment::{convergence_trace, sensing_tightness_study, sweep_delta_g};
use rsisac_sim::output::{write_convergence, write_sweep, write_tightness};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        runs: 2,
        max_iterations: 3,
        sweep_delta_g_db: vec![17.0, 26.0],
        ..ExperimentConfig::default()
    }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn emit_all(cfg: &ExperimentConfig, dir: &Path) {
    let sweep = sweep_delta_g(cfg, Mobility::Severe, cfg.gamma_sens).unwrap();
    write_sweep(dir, &sweep).unwrap();
    let curves = convergence_trace(cfg, &[Mobility::Static]).unwrap();
    write_convergence(dir, &curves).unwrap();
    let study = sensing_tightness_study(cfg, Mobility::Static, &[200.0], &[26.0]).unwrap();
    write_tightness(dir, &study.cells).unwrap();
}

#[test]
fn seeded_runs_give_identical_output_trees() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_all(&cfg, a.path());
    emit_all(&cfg, b.path());
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    assert_eq!(ta, tb);

    let sweep = String::from_utf8(ta["sweep_severe.csv"].clone()).unwrap();
    let header = sweep.lines().next().unwrap();
    assert!(header.starts_with("delta_g_db,scheme,mean_se,ci95"), "{header}");
    assert_eq!(sweep.lines().count(), 1 + 2 * 3);
    assert!(ta.contains_key("gains_severe.csv"));
    assert!(ta.contains_key("convergence.csv"));
    assert!(ta.contains_key("tightness.csv"));
}

#[test]
fn feasible_rows_meet_the_sensing_target() {
    let cfg = small();
    let sweep = sweep_delta_g(&cfg, Mobility::Static, 200.0).unwrap();
    assert_eq!(sweep.rows.len(), 2 * 2 * 3);
    for r in sweep.rows.iter().filter(|r| r.feasible) {
        assert!(r.crlb <= 1.01 * r.gamma_sens, "{r:?}");
        assert!(r.total_power_w <= cfg.p_tx() * (1.0 + 1e-12));
    }
    // Dominance of warm-started rate splitting on every realization.
    for k in 0..sweep.rows.len() / 3 {
        let chunk = &sweep.rows[3 * k..3 * k + 3];
        assert_eq!(chunk[0].scheme, Scheme::Rs.label());
        assert!(chunk[0].se >= chunk[1].se.max(chunk[2].se) - 1e-6, "{chunk:?}");
    }
}

fn rsisac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rsisac"))
}

#[test]
fn cli_reports_errors_on_one_line() {
    let out = rsisac().args(["--runs", "0", "simulate"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=config message="), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "sensing.gamma = 200\nsensing.gama = 100\n").unwrap();
    let out = rsisac().args(["--config", cfg.to_str().unwrap(), "sweep"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2: unknown key `sensing.gama`"));

    let out = rsisac().args(["--schemes", "rs,oma", "simulate"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn cli_validates_the_channel_model() {
    let out = rsisac().arg("validate-channel").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 32);
}

#[test]
fn cli_simulate_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# tiny run\noptimizer.max_iterations = 2\nlink.delta_g_db = 20\n").unwrap();
    let out = rsisac()
        .args(["--config", cfg.to_str().unwrap(), "--runs", "1", "--schemes", "noma_cf", "--out"])
        .arg(dir.path())
        .arg("simulate")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    let mut lines = rows.lines();
    assert!(lines.next().unwrap().starts_with("scheme,delta_g_db,mobility,gamma_sens,realization,se,crlb"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("noma_cf,20.0,static,200.0,0,"), "{row}");
    assert!(lines.next().is_none());
}
