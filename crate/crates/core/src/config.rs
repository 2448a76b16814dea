//! Run configuration files, run-directory layout, and CSV persistence.
//!
//! Config files are line-oriented `key = value` text; `#` starts a comment.
//! Unknown keys are rejected with a nearest-known-key suggestion. Floats are
//! serialized with 17 significant digits so every CSV value round-trips
//! bit-exactly through the tool's own readers.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::{DiagRow, InitialCondition, RunRecord, SweepRow, DIAG_HEADER};
use crate::littlewood_paley::CutoffProfile;
use crate::solver::{Dealias, SolverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Lossless float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parameter(format!("bad float '{s}': {e}")))
}

const KNOWN_KEYS: &[&str] = &[
    "grid.n",
    "box_length",
    "dt",
    "t_end",
    "viscosity",
    "dealias",
    "diag_every",
    "profile",
    "initial_condition",
    "ic.amplitude",
    "ic.seed",
    "ic.slope",
    "ic.peak_shell",
    "ic.shell",
    "output_dir",
];

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cur = row[j + 1];
            row[j + 1] = if ca == cb {
                prev
            } else {
                1 + prev.min(row[j]).min(row[j + 1])
            };
            prev = cur;
        }
    }
    row[b.len()]
}

fn suggest(key: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .map(|k| (levenshtein(key, k), *k))
        .min()
        .filter(|(d, _)| *d <= 3)
        .map(|(_, k)| k)
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub ic: InitialCondition,
    pub profile: CutoffProfile,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Canonical key-sorted rendering of every effective setting; two
    /// semantically identical configs produce identical text.
    pub fn canonical_form(&self) -> String {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        map.insert("grid.n".into(), self.solver.grid.n().to_string());
        map.insert(
            "box_length".into(),
            fmt_f64(self.solver.grid.box_length()),
        );
        map.insert("dt".into(), fmt_f64(self.solver.dt));
        map.insert("t_end".into(), fmt_f64(self.solver.t_end));
        map.insert("viscosity".into(), fmt_f64(self.solver.viscosity));
        map.insert("dealias".into(), self.solver.dealias.name().to_string());
        map.insert("diag_every".into(), self.solver.diag_every.to_string());
        map.insert("profile".into(), self.profile.name().to_string());
        map.insert("initial_condition".into(), self.ic.tag().to_string());
        match &self.ic {
            InitialCondition::TaylorGreen2d3 { amplitude }
            | InitialCondition::AbcFlow { amplitude } => {
                map.insert("ic.amplitude".into(), fmt_f64(*amplitude));
            }
            InitialCondition::RandomSpectrum {
                amplitude,
                slope,
                peak_shell,
                seed,
            } => {
                map.insert("ic.amplitude".into(), fmt_f64(*amplitude));
                map.insert("ic.slope".into(), fmt_f64(*slope));
                map.insert("ic.peak_shell".into(), fmt_f64(*peak_shell));
                map.insert("ic.seed".into(), seed.to_string());
            }
            InitialCondition::SingleShell {
                shell,
                amplitude,
                seed,
            } => {
                map.insert("ic.amplitude".into(), fmt_f64(*amplitude));
                map.insert("ic.shell".into(), fmt_f64(*shell));
                map.insert("ic.seed".into(), seed.to_string());
            }
        }
        map.iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect::<String>()
    }

    /// SHA-256 of the canonical form, hex-encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_form().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse a config file. Every key is validated; unknown keys are rejected
/// with a suggestion, constraint violations name the key and line.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut pairs: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            let hint = suggest(&key)
                .map(|s| format!("; did you mean '{s}'?"))
                .unwrap_or_default();
            return Err(Error::Parse {
                line: line_no,
                message: format!("unknown key '{key}'{hint}"),
            });
        }
        if pairs.insert(key.clone(), (value, line_no)).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
    }

    let mut take = |key: &str| pairs.remove(key);
    let required = |key: &str, v: Option<(String, usize)>| -> Result<(String, usize)> {
        v.ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing required key '{key}'"),
        })
    };
    let parse_pos_f64 = |key: &str, (v, line): (String, usize)| -> Result<f64> {
        let x = v.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("key '{key}': expected a number, got '{v}'"),
        })?;
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("key '{key}': must be positive, got {x}"),
            });
        }
        Ok(x)
    };

    let (n_str, n_line) = required("grid.n", take("grid.n"))?;
    let n: usize = n_str.parse().map_err(|_| Error::Parse {
        line: n_line,
        message: format!("key 'grid.n': expected a positive integer, got '{n_str}'"),
    })?;
    let box_length = match take("box_length") {
        Some(v) => parse_pos_f64("box_length", v)?,
        None => 2.0 * std::f64::consts::PI,
    };
    let grid = Grid::new(n, box_length).map_err(|e| Error::Parse {
        line: n_line,
        message: format!("key 'grid.n': {e}"),
    })?;
    let dt = parse_pos_f64("dt", required("dt", take("dt"))?)?;
    let t_end = parse_pos_f64("t_end", required("t_end", take("t_end"))?)?;
    let viscosity = match take("viscosity") {
        Some(v) => parse_pos_f64("viscosity", v)?,
        None => 1.0,
    };
    let dealias = match take("dealias") {
        Some((v, line)) => Dealias::parse(&v).map_err(|e| Error::Parse {
            line,
            message: format!("key 'dealias': {e}"),
        })?,
        None => Dealias::TwoThirds,
    };
    let diag_every = match take("diag_every") {
        Some((v, line)) => v.parse::<usize>().ok().filter(|d| *d > 0).ok_or_else(|| {
            Error::Parse {
                line,
                message: format!("key 'diag_every': expected a positive integer, got '{v}'"),
            }
        })?,
        None => 10,
    };
    let profile = match take("profile") {
        Some((v, line)) => match v.as_str() {
            "box" => CutoffProfile::Box,
            "smooth" => CutoffProfile::SmoothRamp,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("key 'profile': expected box or smooth, got '{other}'"),
                })
            }
        },
        None => CutoffProfile::SmoothRamp,
    };

    let (ic_tag, ic_line) = required("initial_condition", take("initial_condition"))?;
    let amplitude = match take("ic.amplitude") {
        Some((v, line)) => {
            let x = v.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("key 'ic.amplitude': expected a number, got '{v}'"),
            })?;
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Parse {
                    line,
                    message: format!("key 'ic.amplitude': must be nonnegative, got {x}"),
                });
            }
            x
        }
        None => 1.0,
    };
    let seed = match take("ic.seed") {
        Some((v, line)) => v.parse::<u64>().map_err(|_| Error::Parse {
            line,
            message: format!("key 'ic.seed': expected an unsigned integer, got '{v}'"),
        })?,
        None => 0,
    };
    let slope_kv = take("ic.slope");
    let peak_kv = take("ic.peak_shell");
    let shell_kv = take("ic.shell");

    let reject_inapplicable = |name: &str, kv: &Option<(String, usize)>| -> Result<()> {
        if let Some((_, line)) = kv {
            return Err(Error::Parse {
                line: *line,
                message: format!("key '{name}' does not apply to initial_condition {ic_tag}"),
            });
        }
        Ok(())
    };

    let ic = match ic_tag.as_str() {
        "taylor_green_2d3" => {
            reject_inapplicable("ic.slope", &slope_kv)?;
            reject_inapplicable("ic.peak_shell", &peak_kv)?;
            reject_inapplicable("ic.shell", &shell_kv)?;
            InitialCondition::TaylorGreen2d3 { amplitude }
        }
        "abc_flow" => {
            reject_inapplicable("ic.slope", &slope_kv)?;
            reject_inapplicable("ic.peak_shell", &peak_kv)?;
            reject_inapplicable("ic.shell", &shell_kv)?;
            InitialCondition::AbcFlow { amplitude }
        }
        "random_spectrum" => {
            reject_inapplicable("ic.shell", &shell_kv)?;
            let slope = match slope_kv {
                Some((v, line)) => v.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("key 'ic.slope': expected a number, got '{v}'"),
                })?,
                None => 4.0,
            };
            let peak_shell = match peak_kv {
                Some(kv) => parse_pos_f64("ic.peak_shell", kv)?,
                None => 2.0,
            };
            InitialCondition::RandomSpectrum {
                amplitude,
                slope,
                peak_shell,
                seed,
            }
        }
        "single_shell" => {
            reject_inapplicable("ic.slope", &slope_kv)?;
            reject_inapplicable("ic.peak_shell", &peak_kv)?;
            let shell = match shell_kv {
                Some(kv) => parse_pos_f64("ic.shell", kv)?,
                None => 4.0,
            };
            InitialCondition::SingleShell {
                shell,
                amplitude,
                seed,
            }
        }
        other => {
            return Err(Error::Parse {
                line: ic_line,
                message: format!(
                    "key 'initial_condition': unknown tag '{other}' \
                     (expected taylor_green_2d3, random_spectrum, single_shell, abc_flow)"
                ),
            })
        }
    };

    let output_dir = take("output_dir").map(|(v, _)| PathBuf::from(v));

    let mut solver = SolverConfig::new(grid, dt, t_end, viscosity).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    solver.dealias = dealias;
    solver.diag_every = diag_every;

    Ok(RunConfig {
        solver,
        ic,
        profile,
        output_dir,
    })
}

/// Metadata written alongside every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seeds: Vec<u64>,
    /// Output files in this directory besides the manifest itself.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(config_hash: String, seeds: Vec<u64>) -> Self {
        Self {
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            seeds,
            files: Vec::new(),
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Write a run directory: `manifest.json` plus `diagnostics.csv`. Refuses to
/// touch an existing directory unless `force` is set.
pub fn write_run_dir(
    dir: &Path,
    mut manifest: RunManifest,
    record: &RunRecord,
    force: bool,
) -> Result<()> {
    if dir.exists() && !force {
        return Err(Error::RunDirExists(dir.display().to_string()));
    }
    fs::create_dir_all(dir)?;
    let csv_name = "diagnostics.csv";
    write_diagnostics_csv(&dir.join(csv_name), record)?;
    manifest.files = vec![csv_name.to_string()];
    manifest.finished_unix = unix_now();
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn write_diagnostics_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut out = String::with_capacity(64 + record.rows.len() * 256);
    out.push_str(DIAG_HEADER);
    out.push('\n');
    for r in &record.rows {
        let fields = [
            r.time,
            r.l2,
            r.grad_l2,
            r.lap_l2,
            r.besov_m1_inf_inf,
            r.besov_grad_m2,
            r.grad_l3,
            r.l3,
            r.l6,
            r.nonlinear_i,
            r.lhs_enstrophy,
            r.energy_residual,
            r.criterion_margin,
        ];
        let line: Vec<String> = fields.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_diagnostics_csv(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty diagnostics file".into(),
    })?;
    if header != DIAG_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header '{header}'"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(Error::Parse {
                line: idx + 2,
                message: format!("expected 13 columns, got {}", cols.len()),
            });
        }
        let v: Vec<f64> = cols
            .iter()
            .map(|c| parse_f64(c))
            .collect::<Result<_>>()
            .map_err(|e| Error::Parse {
                line: idx + 2,
                message: e.to_string(),
            })?;
        rows.push(DiagRow {
            time: v[0],
            l2: v[1],
            grad_l2: v[2],
            lap_l2: v[3],
            besov_m1_inf_inf: v[4],
            besov_grad_m2: v[5],
            grad_l3: v[6],
            l3: v[7],
            l6: v[8],
            nonlinear_i: v[9],
            lhs_enstrophy: v[10],
            energy_residual: v[11],
            criterion_margin: v[12],
        });
    }
    Ok(RunRecord { rows })
}

pub const SWEEP_HEADER: &str = "name,ic_tag,seed,n,dt,t_end,always_small,enstrophy_monotone,margin_monotone_ok,holder_ok,energy_ok,first_violation_time,besov_initial,besov_final,min_margin,time_to_margin_negative,serrin_p4_q6,serrin_pinf_q3,coverage_gap_count,status";

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [
            r.name.clone(),
            r.ic_tag.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.n.to_string(),
            fmt_f64(r.dt),
            fmt_f64(r.t_end),
            r.always_small.to_string(),
            r.enstrophy_monotone.to_string(),
            r.margin_monotone_ok.to_string(),
            r.holder_ok.to_string(),
            r.energy_ok.to_string(),
            fmt_opt_f64(r.first_violation_time),
            fmt_f64(r.besov_initial),
            fmt_f64(r.besov_final),
            fmt_f64(r.min_margin),
            fmt_opt_f64(r.time_to_margin_negative),
            fmt_f64(r.serrin_p4_q6),
            fmt_f64(r.serrin_pinf_q3),
            r.coverage_gap_count.to_string(),
            r.status.clone(),
        ];
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Plan files list one run-config path per line (`#` comments allowed).
pub fn parse_plan(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p = PathBuf::from(line);
        out.push(if p.is_absolute() { p } else { base.join(p) });
    }
    if out.is_empty() {
        return Err(Error::Parameter("plan file lists no configs".into()));
    }
    Ok(out)
}
