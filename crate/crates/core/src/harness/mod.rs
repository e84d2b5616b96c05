//! Scenario files, convergence sweeps, order estimates and reports.

pub mod config;
pub mod order;
pub mod presets;
pub mod report;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use log::info;

pub use config::ScenarioConfig;
pub use order::{estimate_order, OrderFit};
pub use report::{emit_csv, emit_plots, read_csv, ResultRow, CSV_HEADER, METRICS};
pub use sweep::{run_sweep, CellOutcome, RunResult};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::fld;
use crate::wkb::write_snapshot;

/// Files written by [`run_scenario`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub csv: PathBuf,
    pub plots: Vec<PathBuf>,
    pub result: RunResult,
}

fn slug(x: f64) -> String {
    format!("{x:e}").replace('-', "m").replace('.', "p")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs the sweep and writes `config.json`, `results.csv`, one SVG per
/// metric, `failures.txt` when cells tripped a guard, and final states when
/// snapshots are requested.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>, exec: Execution) -> Result<RunSummary> {
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.name.as_deref().unwrap_or("scenario")));
    let result = run_sweep(cfg, exec)?;
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_file(&out_dir.join("config.json"), &cfg.to_json())?;
    let rows = result.rows();
    let csv = out_dir.join("results.csv");
    emit_csv(&rows, &csv)?;
    let plots = emit_plots(&rows, &out_dir)?;

    let failures: Vec<String> = result
        .cells
        .iter()
        .filter_map(|c| c.failure.as_ref().map(|m| format!("eps={} dt={}: {m}\n", c.row.eps, c.row.dt)))
        .collect();
    let failures_path = out_dir.join("failures.txt");
    if failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
        }
    } else {
        write_file(&failures_path, &failures.concat())?;
    }

    if cfg.snapshots {
        let dir = out_dir.join("snapshots");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for c in &result.cells {
            let stem = format!("eps{}_dt{}", slug(c.row.eps), slug(c.row.dt));
            if let Some(s) = &c.wkb_final {
                write_snapshot(&dir, &stem, s)?;
            }
            if let Some(u) = &c.wave_final {
                fld::write_complex(dir.join(format!("{stem}_wave.fld")), u.field())?;
            }
        }
    }
    info!("wrote {} rows to {}", rows.len(), csv.display());
    Ok(RunSummary {
        out_dir,
        csv,
        plots,
        result,
    })
}

/// Order fit of every metric for every `eps` in a results table.
pub fn fit_orders(rows: &[ResultRow]) -> Vec<(f64, &'static str, Result<OrderFit>)> {
    let mut eps: Vec<f64> = Vec::new();
    for r in rows {
        if !eps.contains(&r.eps) {
            eps.push(r.eps);
        }
    }
    let mut out = Vec::new();
    for &e in &eps {
        for (name, metric) in METRICS {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.eps == e)
                .filter_map(|r| metric(r).map(|v| (r.dt, v)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            out.push((e, name, estimate_order(&pairs)));
        }
    }
    out
}
