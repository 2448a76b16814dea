//! Command-line front end: simulate, norms, check-interp, audit, sweep.
//! Exit code 0 means every asserted invariant held.

use clap::{Parser, Subcommand};
use lpnse::config::{
    parse_config, parse_plan, write_run_dir, write_sweep_csv, RunConfig, RunManifest,
};
use lpnse::error::{Error, Result};
use lpnse::harness::{
    build_corpus, estimate_constant, exponent_audit, run_experiment, sweep, ConstantEstimate,
    CorpusSpec, SweepEntry,
};
use lpnse::littlewood_paley::{build_partition, CutoffProfile};
use lpnse::norms::{
    besov_inf_inf_from_profile, lp_norm, lp_norm_components, lq_key, shell_linf_profile_components,
    sobolev_norm, sobolev_norm_components,
};
use lpnse::snapshot::read_snapshot;
use lpnse::{transform, Grid, SpectralField, SpectralVectorField};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lpnse", version, about = "Pseudospectral periodic-box Navier-Stokes toolkit with dyadic-band diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file and write a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
        /// Override the initial-condition seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Empirical constant for the criterion margin.
        #[arg(long)]
        c_hat: Option<f64>,
        /// JSON file from `check-interp` supplying the constant.
        #[arg(long)]
        constant: Option<PathBuf>,
    },
    /// Print the norm report of a snapshot file as CSV.
    Norms {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value = "smooth")]
        profile: String,
        /// Time column value for the report.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Estimate the interpolation constant over a random corpus.
    CheckInterp {
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value = "smooth")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        /// Exponent pairs as `q,alpha` separated by `;`.
        #[arg(long, default_value = "6,1;3,2")]
        pairs: String,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 4.0)]
        slope: f64,
        #[arg(long, default_value_t = 2.0)]
        peak_shell: f64,
        /// Write the estimate JSON here (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the spectral and shell-wise identities on a snapshot.
    Audit {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, default_value = "box")]
        profile: String,
    },
    /// Run every config in a plan file and write a summary CSV.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        c_hat: Option<f64>,
        #[arg(long)]
        constant: Option<PathBuf>,
    },
}

fn parse_profile(name: &str) -> Result<CutoffProfile> {
    match name {
        "box" => Ok(CutoffProfile::Box),
        "smooth" => Ok(CutoffProfile::SmoothRamp),
        other => Err(Error::Parameter(format!(
            "unknown profile '{other}' (expected box or smooth)"
        ))),
    }
}

fn parse_pairs(spec: &str) -> Result<Vec<(f64, f64)>> {
    spec.split(';')
        .map(|chunk| {
            let (q, a) = chunk.split_once(',').ok_or_else(|| {
                Error::Parameter(format!("bad pair '{chunk}', expected 'q,alpha'"))
            })?;
            Ok((
                q.trim()
                    .parse()
                    .map_err(|e| Error::Parameter(format!("bad q in '{chunk}': {e}")))?,
                a.trim()
                    .parse()
                    .map_err(|e| Error::Parameter(format!("bad alpha in '{chunk}': {e}")))?,
            ))
        })
        .collect()
}

fn resolve_c_hat(c_hat: Option<f64>, constant: Option<PathBuf>) -> Result<f64> {
    match (c_hat, constant) {
        (Some(c), None) => Ok(c),
        (None, Some(path)) => {
            let est: ConstantEstimate = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            Ok(est.c_hat)
        }
        (Some(_), Some(_)) => Err(Error::Parameter(
            "pass either --c-hat or --constant, not both".into(),
        )),
        (None, None) => Err(Error::Parameter(
            "a constant is required: pass --c-hat <value> or --constant <json>".into(),
        )),
    }
}

fn snapshot_fields(path: &PathBuf) -> Result<(Grid, Vec<SpectralField>)> {
    let phys = read_snapshot(path)?;
    let grid = phys[0].grid().clone();
    Ok((grid, phys.iter().map(transform).collect()))
}

fn cmd_simulate(
    config: PathBuf,
    out: Option<PathBuf>,
    force: bool,
    seed: Option<u64>,
    c_hat: Option<f64>,
    constant: Option<PathBuf>,
) -> Result<bool> {
    let RunConfig {
        solver,
        ic,
        profile,
        output_dir,
    } = parse_config(&config)?;
    let ic = match seed {
        Some(s) => ic.with_seed(s),
        None => ic,
    };
    let c_hat = resolve_c_hat(c_hat, constant)?;
    let dir = out
        .or(output_dir)
        .ok_or_else(|| Error::Parameter("no output directory (set output_dir or --out)".into()))?;

    let run_config = RunConfig {
        solver: solver.clone(),
        ic: ic.clone(),
        profile: profile.clone(),
        output_dir: Some(dir.clone()),
    };
    let (verdict, record) = run_experiment(&solver, &ic, c_hat, profile)?;
    let manifest = RunManifest::new(run_config.config_hash(), ic.seed().into_iter().collect());
    write_run_dir(&dir, manifest, &record, force)?;
    std::fs::write(
        dir.join("verdict.json"),
        serde_json::to_string_pretty(&verdict)?,
    )?;

    println!(
        "run finished: t in [0, {:.6}], {} diagnostic samples -> {}",
        record.rows.last().map_or(0.0, |r| r.time),
        record.rows.len(),
        dir.display()
    );
    println!(
        "always_small = {}, enstrophy_monotone = {}, margin_monotone_ok = {}, holder_ok = {}, energy_ok = {}",
        verdict.always_small,
        verdict.enstrophy_monotone,
        verdict.margin_monotone_ok,
        verdict.holder_ok,
        verdict.energy_ok
    );
    if let Some(t) = verdict.first_violation_time {
        println!("first margin violation at t = {t:.6}");
    }
    if let Some(t) = verdict.blow_up_time {
        println!("blow-up detected at t = {t:.6}; partial record kept");
    }
    Ok(verdict.all_invariants_ok())
}

fn cmd_norms(snapshot: PathBuf, profile: String, time: f64) -> Result<bool> {
    let profile = parse_profile(&profile)?;
    let (grid, fields) = snapshot_fields(&snapshot)?;
    let partition = build_partition(&grid, profile)?;
    let phys: Vec<_> = fields
        .iter()
        .map(lpnse::inverse_transform)
        .collect::<Result<_>>()?;

    let mut extras: BTreeMap<String, f64> = BTreeMap::new();
    let (l2, grad_l2, lap_l2, besov);
    match fields.len() {
        1 => {
            l2 = lp_norm(&phys[0], 2.0)?;
            grad_l2 = sobolev_norm(&fields[0], 1.0);
            lap_l2 = sobolev_norm(&fields[0], 2.0);
            let shells = shell_linf_profile_components(&fields, &partition);
            besov = besov_inf_inf_from_profile(&shells, -1.0);
            extras.insert(lq_key(3.0), lp_norm(&phys[0], 3.0)?);
            extras.insert(lq_key(6.0), lp_norm(&phys[0], 6.0)?);
        }
        3 => {
            let u = SpectralVectorField::new([
                fields[0].clone(),
                fields[1].clone(),
                fields[2].clone(),
            ])?;
            l2 = u.l2_norm();
            grad_l2 = sobolev_norm_components(u.components(), 1.0);
            lap_l2 = sobolev_norm_components(u.components(), 2.0);
            let shells = shell_linf_profile_components(u.components(), &partition);
            besov = besov_inf_inf_from_profile(&shells, -1.0);
            extras.insert(lq_key(3.0), lp_norm_components(&phys, 3.0)?);
            extras.insert(lq_key(6.0), lp_norm_components(&phys, 6.0)?);
        }
        other => {
            return Err(Error::Parameter(format!(
                "expected 1 or 3 components, snapshot has {other}"
            )))
        }
    }

    let mut header = String::from("time,l2,grad_l2,lap_l2,besov_m1_inf_inf");
    let mut row = format!(
        "{},{},{},{},{}",
        lpnse::config::fmt_f64(time),
        lpnse::config::fmt_f64(l2),
        lpnse::config::fmt_f64(grad_l2),
        lpnse::config::fmt_f64(lap_l2),
        lpnse::config::fmt_f64(besov)
    );
    for (k, v) in &extras {
        header.push(',');
        header.push_str(k);
        row.push(',');
        row.push_str(&lpnse::config::fmt_f64(*v));
    }
    println!("{header}");
    println!("{row}");
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_interp(
    size: usize,
    n: usize,
    profile: String,
    first_seed: u64,
    pairs: String,
    amplitude: f64,
    slope: f64,
    peak_shell: f64,
    out: Option<PathBuf>,
) -> Result<bool> {
    let profile = parse_profile(&profile)?;
    let pairs = parse_pairs(&pairs)?;
    let grid = Grid::cubic(n)?;
    let partition = build_partition(&grid, profile)?;
    let spec = CorpusSpec {
        n,
        seeds: (first_seed..first_seed + size as u64).collect(),
        amplitude,
        slope,
        peak_shell,
    };
    let corpus = build_corpus(&spec)?;
    let estimate = estimate_constant(&corpus, &pairs, &partition)?;
    let json = serde_json::to_string_pretty(&estimate)?;
    match out {
        Some(path) => {
            std::fs::write(&path, json)?;
            println!(
                "c_hat = {:.6}, eps0_hat = {:.6} over {} fields -> {}",
                estimate.c_hat,
                estimate.eps0_hat,
                estimate.corpus.size,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(true)
}

fn cmd_audit(snapshot: PathBuf, profile: String) -> Result<bool> {
    let profile = parse_profile(&profile)?;
    let (grid, fields) = snapshot_fields(&snapshot)?;
    if fields.len() != 3 {
        return Err(Error::Parameter(format!(
            "audit expects a 3-component snapshot, found {}",
            fields.len()
        )));
    }
    let partition = build_partition(&grid, profile)?;
    let u = SpectralVectorField::new([fields[0].clone(), fields[1].clone(), fields[2].clone()])?;
    let audit = exponent_audit(&u, &partition);
    println!("{}", serde_json::to_string_pretty(&audit)?);
    Ok(true)
}

fn cmd_sweep(
    plan: PathBuf,
    out: PathBuf,
    force: bool,
    c_hat: Option<f64>,
    constant: Option<PathBuf>,
) -> Result<bool> {
    let c_hat = resolve_c_hat(c_hat, constant)?;
    let config_paths = parse_plan(&plan)?;
    let mut entries = Vec::with_capacity(config_paths.len());
    let mut profile = None;
    for (idx, path) in config_paths.iter().enumerate() {
        let cfg = parse_config(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| format!("run{idx}"));
        profile.get_or_insert(cfg.profile.clone());
        entries.push(SweepEntry {
            name: format!("{idx:03}_{stem}"),
            cfg: cfg.solver,
            ic: cfg.ic,
        });
    }
    let profile = profile.expect("nonempty plan");

    if out.exists() && !force {
        return Err(Error::RunDirExists(out.display().to_string()));
    }
    std::fs::create_dir_all(&out)?;

    let outcome = sweep(&entries, c_hat, profile)?;
    write_sweep_csv(&out.join("summary.csv"), &outcome.rows)?;
    for (entry, v) in entries.iter().zip(outcome.verdicts.iter()) {
        if let Some((_, record)) = v {
            lpnse::config::write_diagnostics_csv(&out.join(format!("{}.csv", entry.name)), record)?;
        }
    }
    let meta = serde_json::json!({
        "c_hat_initial": outcome.c_hat_initial,
        "c_hat_final": outcome.c_hat_final,
        "runs": outcome.rows.len(),
    });
    std::fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&meta)?)?;

    let mut all_ok = true;
    for row in &outcome.rows {
        println!(
            "{}: status={} always_small={} enstrophy_monotone={} margin_monotone_ok={}",
            row.name, row.status, row.always_small, row.enstrophy_monotone, row.margin_monotone_ok
        );
        if row.status != "ok" || !(row.margin_monotone_ok && row.holder_ok && row.energy_ok) {
            all_ok = false;
        }
    }
    if outcome.c_hat_final > outcome.c_hat_initial {
        println!(
            "coverage gaps raised the constant: c_hat {} -> {}",
            outcome.c_hat_initial, outcome.c_hat_final
        );
    }
    println!("summary -> {}", out.join("summary.csv").display());
    Ok(all_ok)
}

fn run() -> Result<bool> {
    if let Ok(threads) = std::env::var("LPNSE_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| Error::Parameter(format!("bad LPNSE_THREADS value '{threads}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("could not size the thread pool: {e}")))?;
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            out,
            force,
            seed,
            c_hat,
            constant,
        } => cmd_simulate(config, out, force, seed, c_hat, constant),
        Command::Norms {
            snapshot,
            profile,
            time,
        } => cmd_norms(snapshot, profile, time),
        Command::CheckInterp {
            size,
            n,
            profile,
            first_seed,
            pairs,
            amplitude,
            slope,
            peak_shell,
            out,
        } => cmd_check_interp(
            size, n, profile, first_seed, pairs, amplitude, slope, peak_shell, out,
        ),
        Command::Audit { snapshot, profile } => cmd_audit(snapshot, profile),
        Command::Sweep {
            plan,
            out,
            force,
            c_hat,
            constant,
        } => cmd_sweep(plan, out, force, c_hat, constant),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more asserted invariants failed");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
