//! End-to-end checks of the `lpnse` binary: every subcommand, exit codes,
//! run-directory layout, and CLI-level determinism.

use lpnse::config::read_diagnostics_csv;
use lpnse::harness::{make_initial, ConstantEstimate, InitialCondition};
use lpnse::snapshot::write_snapshot;
use lpnse::{inverse_transform_vec, Grid};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lpnse"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const CONFIG: &str = "\
# small decaying vortex
grid.n = 16
dt = 1e-3
t_end = 0.05
viscosity = 1.0
diag_every = 10
initial_condition = taylor_green_2d3
ic.amplitude = 0.5
";

#[test]
fn simulate_writes_run_dir_and_respects_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, CONFIG).unwrap();
    let out_dir = dir.path().join("out");

    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--c-hat")
        .arg("1.0"));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("verdict.json").exists());
    // the tool's own reader must accept the CSV it wrote
    let record = read_diagnostics_csv(&out_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(record.rows.len(), 6);
    assert!(record.rows.iter().all(|r| r.criterion_margin.is_finite()));

    // existing directory is refused without --force
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--c-hat")
        .arg("1.0")
        .output()
        .unwrap();
    assert!(!out.status.success());

    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .arg("--force")
        .arg("--c-hat")
        .arg("1.0"));
}

#[test]
fn simulate_rejects_bad_config_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    std::fs::write(&cfg_path, "grid.n = 16\ndt = 1e-3\nt_end = 0.1\nviscocity = 2\ninitial_condition = taylor_green_2d3\n").unwrap();
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("x"))
        .arg("--c-hat")
        .arg("1.0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "{stderr}");
    assert!(stderr.contains("viscosity"), "{stderr}");
}

fn write_tg_snapshot(path: &Path) {
    let grid = Grid::cubic(16).unwrap();
    let u = make_initial(&InitialCondition::TaylorGreen2d3 { amplitude: 1.0 }, &grid).unwrap();
    let phys = inverse_transform_vec(&u).unwrap();
    write_snapshot(path, &phys).unwrap();
}

#[test]
fn norms_reports_snapshot_values() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("tg.lpnse");
    write_tg_snapshot(&snap);
    let out = run_ok(bin().arg("norms").arg("--snapshot").arg(&snap));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("time,l2,grad_l2,lap_l2,besov_m1_inf_inf"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // ||u||_L2 of the Taylor-Green field is sqrt((2 pi)^3 / 2) by direct
    // quadrature of sin^2 cos^2 + cos^2 sin^2
    let expected = ((2.0 * std::f64::consts::PI).powi(3) / 2.0).sqrt();
    assert!((row[1] - expected).abs() < 1e-10, "l2 = {}", row[1]);
}

#[test]
fn audit_emits_parseable_json() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("tg.lpnse");
    write_tg_snapshot(&snap);
    let out = run_ok(bin().arg("audit").arg("--snapshot").arg(&snap));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = v["hdot_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-12);
}

#[test]
fn check_interp_writes_constant_json() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("constant.json");
    run_ok(bin()
        .arg("check-interp")
        .arg("--size")
        .arg("4")
        .arg("--n")
        .arg("16")
        .arg("--out")
        .arg(&json_path));
    let est: ConstantEstimate =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(est.corpus.size, 4);
    assert_eq!(est.corpus.seeds, vec![0, 1, 2, 3]);
    assert_eq!(est.eps0_hat * est.c_hat, 1.0);
    assert_eq!(est.pairs.len(), 2);
}

#[test]
fn sweep_is_deterministic_at_the_cli_level() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a.cfg", 5u64), ("b.cfg", 6u64)] {
        std::fs::write(
            dir.path().join(name),
            format!(
                "grid.n = 16\ndt = 1e-3\nt_end = 0.05\ndiag_every = 10\n\
                 initial_condition = random_spectrum\nic.amplitude = 0.5\nic.seed = {seed}\n"
            ),
        )
        .unwrap();
    }
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "a.cfg\nb.cfg\n").unwrap();

    let mut summaries = Vec::new();
    for pass in 0..2 {
        let out_dir = dir.path().join(format!("sweep{pass}"));
        run_ok(bin()
            .arg("sweep")
            .arg("--plan")
            .arg(&plan)
            .arg("--out")
            .arg(&out_dir)
            .arg("--c-hat")
            .arg("1.5"));
        assert!(out_dir.join("000_a.csv").exists());
        assert!(out_dir.join("001_b.csv").exists());
        summaries.push(std::fs::read(out_dir.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}
