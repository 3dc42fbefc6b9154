//! File outputs: the fixed-schema timeseries CSV, scan tables, and summary
//! documents. Values are written with Rust's shortest-roundtrip float
//! formatting, so identical runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use softsqueeze::analysis::SqueezingResult;
use softsqueeze::observables::ObservableSeries;

/// Fixed column order; stable across versions (golden-file tested).
pub const TIMESERIES_HEADER: &str =
    "time,Sx,Sy,Sz,Sxx,Syy,Szz,Sxy,Sxz,Syz,S2,xi2,xi2_db,err_Sx,err_Sy,err_Sz";

pub fn write_timeseries(path: &Path, series: &ObservableSeries) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for k in 0..series.len() {
        let row = [
            series.times[k],
            series.sx[k],
            series.sy[k],
            series.sz[k],
            series.sxx[k],
            series.syy[k],
            series.szz[k],
            series.sxy[k],
            series.sxz[k],
            series.syz[k],
            series.s2[k],
            series.xi2[k],
            series.xi2_db[k],
            series.err_sx[k],
            series.err_sy[k],
            series.err_sz[k],
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)
}

pub const SCAN_HEADER: &str = "side_length,r_b,gamma_over_j0,variant,b_over_njbar,n_sites,\
xi2_opt,xi2_opt_db,t_opt_s,contrast,collectivity,boundary_minimum,n_b,n_b_tilde,njbar_hz,n_traj";

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ScanRow {
    pub side_length: usize,
    pub r_b: f64,
    pub gamma_over_j0: f64,
    pub variant: String,
    /// May be infinite (rotating-frame limit); JSON stores it as a string.
    #[serde(with = "maybe_inf")]
    pub b_over_njbar: f64,
    pub n_sites: usize,
    pub xi2_opt: f64,
    pub xi2_opt_db: f64,
    pub t_opt_s: f64,
    pub contrast: f64,
    pub collectivity: f64,
    pub boundary_minimum: bool,
    pub n_b: usize,
    pub n_b_tilde: usize,
    pub njbar_hz: f64,
    pub n_traj: usize,
}

impl ScanRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.side_length,
            self.r_b,
            self.gamma_over_j0,
            self.variant,
            self.b_over_njbar,
            self.n_sites,
            self.xi2_opt,
            self.xi2_opt_db,
            self.t_opt_s,
            self.contrast,
            self.collectivity,
            self.boundary_minimum,
            self.n_b,
            self.n_b_tilde,
            self.njbar_hz,
            self.n_traj
        )
    }
}

pub fn write_scan_csv(path: &Path, rows: &[ScanRow]) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(SCAN_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    fs::write(path, out)
}

#[derive(serde::Serialize)]
pub struct Summary<'a> {
    pub tool_version: &'a str,
    pub command: &'a str,
    pub master_seed: u64,
    pub workers: usize,
    pub n_sites: usize,
    pub n_traj: usize,
    pub xi2_opt: f64,
    pub xi2_opt_db: f64,
    pub t_opt_s: f64,
    pub contrast_at_t_opt: f64,
    pub collectivity_at_t_opt: f64,
    pub boundary_minimum: bool,
    pub wall_time_s: f64,
    pub max_norm_drift: f64,
    pub dt_warning: bool,
    pub config: &'a crate::config::RunConfig,
}

pub fn write_summary(path: &Path, summary: &Summary) -> anyhow::Result<()> {
    let text = toml::to_string_pretty(summary)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn summary_fields(result: &SqueezingResult) -> (f64, f64, f64, f64, f64, bool) {
    (
        result.xi2_opt,
        result.xi2_opt_db,
        result.t_opt,
        result.contrast,
        result.collectivity,
        result.boundary_minimum,
    )
}

/// JSON has no inf; round-trip non-finite floats through strings.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum NumOrStr {
            Num(f64),
            Str(String),
        }
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Append one JSON line to the scan journal.
pub fn append_journal(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{value}")?;
    f.flush()
}
