//! `scan`: cartesian parameter sweeps with a resumable cell journal.
//!
//! Completed cells are appended to a JSON-lines journal as they finish;
//! `--resume` skips cells already journaled. The final CSV is rebuilt from
//! all rows in canonical cell order, so an interrupted-and-resumed scan is
//! row-identical to an uninterrupted one. Wall-clock runtimes live in the
//! journal only, keeping the CSV deterministic.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use softsqueeze::analysis::optimal_squeezing;
use softsqueeze::error::Error;
use softsqueeze::model::Variant;
use softsqueeze::planner::hz_to_angular;

use crate::build::build_setup;
use crate::commands::simulate::run_series;
use crate::config::{IsingMethod, RunConfig, ScanConfig};
use crate::output::{self, ScanRow};

#[derive(Clone, Debug)]
struct Cell {
    side: usize,
    r_b: f64,
    gamma_over_j0: f64,
    variant: Variant,
    b_over_njbar: f64,
}

impl Cell {
    fn id(&self) -> String {
        format!(
            "L{}_rb{}_g{}_v{}_b{}",
            self.side,
            self.r_b,
            self.gamma_over_j0,
            variant_name(self.variant),
            self.b_over_njbar
        )
    }
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Ising => "ising",
        Variant::XxRwa => "xx_rwa",
        Variant::LabFrameDriven => "lab_frame_driven",
        Variant::Oat => "oat",
        Variant::Goat => "goat",
    }
}

fn enumerate_cells(cfg: &RunConfig, scan: &ScanConfig) -> anyhow::Result<Vec<Cell>> {
    let base_side = cfg.lattice.lengths[0];
    let base_r_b = cfg
        .potential
        .r_b
        .ok_or_else(|| Error::invalid("scan requires potential.r_b in the base config"))?;
    if cfg.potential.j_plateau_hz.is_none() {
        return Err(Error::invalid("scan requires potential.j_plateau_hz").into());
    }
    if !scan.variants.is_empty() && !scan.b_over_njbar.is_empty() {
        return Err(Error::invalid(
            "scan axes `variants` and `b_over_njbar` cannot be combined \
             (a finite drive ratio implies the lab-frame model)",
        )
        .into());
    }
    let sides = if scan.side_lengths.is_empty() { vec![base_side] } else { scan.side_lengths.clone() };
    let r_bs = if scan.r_b.is_empty() { vec![base_r_b] } else { scan.r_b.clone() };
    let gammas = if scan.gamma_over_j0.is_empty() { vec![f64::NAN] } else { scan.gamma_over_j0.clone() };
    let mut cells = Vec::new();
    for &side in &sides {
        for &r_b in &r_bs {
            for &g in &gammas {
                if scan.b_over_njbar.is_empty() {
                    let variants = if scan.variants.is_empty() {
                        vec![cfg.model.variant]
                    } else {
                        scan.variants.clone()
                    };
                    for v in &variants {
                        cells.push(Cell {
                            side,
                            r_b,
                            gamma_over_j0: g,
                            variant: *v,
                            b_over_njbar: f64::INFINITY,
                        });
                    }
                } else {
                    for &b in &scan.b_over_njbar {
                        let variant =
                            if b.is_infinite() { Variant::XxRwa } else { Variant::LabFrameDriven };
                        cells.push(Cell {
                            side,
                            r_b,
                            gamma_over_j0: g,
                            variant,
                            b_over_njbar: b,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn cell_config(cfg: &RunConfig, cell: &Cell) -> RunConfig {
    let mut c = cfg.clone();
    c.lattice.lengths = vec![cell.side; c.lattice.dimension];
    c.potential.r_b = Some(cell.r_b);
    c.model.variant = cell.variant;
    if !cell.gamma_over_j0.is_nan() {
        let j0_angular = hz_to_angular(c.potential.j_plateau_hz.unwrap());
        c.dissipation.gamma_minus_per_s = cell.gamma_over_j0 * j0_angular;
        c.dissipation.gamma_d_per_s = c.dissipation.gamma_minus_per_s;
        // Decoherent Ising cells use the exact product-form evaluator.
        if cell.variant == Variant::Ising && cell.gamma_over_j0 > 0.0 {
            c.model.ising_method = IsingMethod::ClosedForm;
        }
    }
    if cell.variant == Variant::LabFrameDriven && cell.b_over_njbar.is_finite() {
        c.model.transverse_field_hz = None;
        c.model.transverse_field_over_njbar = Some(cell.b_over_njbar);
    } else {
        c.model.transverse_field_over_njbar = None;
    }
    c
}

fn run_cell(
    cfg: &RunConfig,
    cell: &Cell,
    seed: Option<u64>,
) -> Result<(ScanRow, softsqueeze::observables::ObservableSeries), Error> {
    let cell_cfg = cell_config(cfg, cell);
    let setup = build_setup(&cell_cfg, seed)?;
    let (series, _) = run_series(&setup)?;
    if !series.moments_finite() {
        return Err(Error::Numerical("non-finite values in observables".into()));
    }
    let r = optimal_squeezing(&series)?;
    let row = ScanRow {
        side_length: cell.side,
        r_b: cell.r_b,
        gamma_over_j0: if cell.gamma_over_j0.is_nan() { 0.0 } else { cell.gamma_over_j0 },
        variant: variant_name(cell.variant).to_string(),
        b_over_njbar: cell.b_over_njbar,
        n_sites: setup.couplings.n_sites,
        xi2_opt: r.xi2_opt,
        xi2_opt_db: r.xi2_opt_db,
        t_opt_s: r.t_opt,
        contrast: r.contrast,
        collectivity: r.collectivity,
        boundary_minimum: r.boundary_minimum,
        n_b: setup.couplings.n_b,
        n_b_tilde: setup.couplings.n_b + 1,
        njbar_hz: setup.n_jbar_angular / std::f64::consts::TAU,
        n_traj: series.n_samples,
    };
    Ok((row, series))
}

pub fn execute(
    cfg: &RunConfig,
    seed: Option<u64>,
    out_dir: &Path,
    resume: bool,
) -> anyhow::Result<()> {
    let scan = cfg
        .scan
        .clone()
        .ok_or_else(|| Error::invalid("config has no [scan] section"))?;
    let cells = enumerate_cells(cfg, &scan)?;
    std::fs::create_dir_all(out_dir)?;
    let journal_path = out_dir.join(&scan.journal);
    let csv_path = out_dir.join(&scan.output);

    let mut done: HashMap<String, ScanRow> = HashMap::new();
    let mut failed = 0usize;
    if resume {
        if journal_path.exists() {
            let text = std::fs::read_to_string(&journal_path)
                .with_context(|| format!("reading {}", journal_path.display()))?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let v: serde_json::Value = serde_json::from_str(line)
                    .with_context(|| "parsing scan journal line")?;
                if v["status"] == "done" {
                    let row: ScanRow = serde_json::from_value(v["row"].clone())?;
                    done.insert(v["id"].as_str().unwrap_or_default().to_string(), row);
                }
            }
        }
    } else if journal_path.exists() {
        std::fs::remove_file(&journal_path)?;
    }

    let total = cells.len();
    let mut completed_now = 0usize;
    for cell in &cells {
        let id = cell.id();
        if done.contains_key(&id) {
            continue;
        }
        let started = Instant::now();
        match run_cell(cfg, cell, seed) {
            Ok((row, series)) => {
                if scan.write_timeseries {
                    let ts_path = out_dir.join(format!("timeseries_{id}.csv"));
                    output::write_timeseries(&ts_path, &series)?;
                }
                let entry = serde_json::json!({
                    "id": id,
                    "status": "done",
                    "runtime_s": started.elapsed().as_secs_f64(),
                    "row": row,
                });
                output::append_journal(&journal_path, &entry)?;
                done.insert(id, row);
                completed_now += 1;
            }
            Err(err) => {
                log::warn!("cell {id} failed: {err}");
                let entry = serde_json::json!({
                    "id": id,
                    "status": "failed",
                    "runtime_s": started.elapsed().as_secs_f64(),
                    "error": err.to_string(),
                });
                output::append_journal(&journal_path, &entry)?;
                failed += 1;
            }
        }
    }

    // Canonical order: the enumeration order of the cell grid.
    let rows: Vec<ScanRow> =
        cells.iter().filter_map(|c| done.get(&c.id())).cloned().collect();
    output::write_scan_csv(&csv_path, &rows)?;
    println!(
        "scan: {} cells ({} cached, {} run, {} failed) -> {}",
        total,
        total - completed_now - failed,
        completed_now,
        failed,
        csv_path.display()
    );
    Ok(())
}
