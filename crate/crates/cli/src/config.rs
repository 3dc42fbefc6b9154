//! Declarative run configuration.
//!
//! Configs are TOML with nested sections mirroring the library modules.
//! Unknown keys are rejected. Frequencies are entered as ordinary
//! frequencies in Hz (`*_hz` keys), decay rates in 1/s, times in seconds;
//! conversion to angular units happens in [`crate::build`].

use serde::{Deserialize, Serialize};
use softsqueeze::engine::InitialAxis;
use softsqueeze::lattice::{Boundary, PotentialKind};
use softsqueeze::model::Variant;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub lattice: LatticeConfig,
    pub potential: PotentialConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub dissipation: DissipationConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub benchmark: Option<BenchmarkConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dimension: usize,
    pub lengths: Vec<usize>,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    /// Blockade radius in lattice units; optional when planner-derived.
    #[serde(default)]
    pub r_b: Option<f64>,
    /// Plateau coupling as an ordinary frequency; optional when
    /// planner-derived.
    #[serde(default)]
    pub j_plateau_hz: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Transverse drive as an ordinary frequency (lab-frame model only).
    #[serde(default)]
    pub transverse_field_hz: Option<f64>,
    /// Alternative: drive in units of `N * j_bar` (angular).
    #[serde(default)]
    pub transverse_field_over_njbar: Option<f64>,
    #[serde(default)]
    pub detuning_compensation: bool,
    #[serde(default)]
    pub echo_pulse: bool,
    #[serde(default)]
    pub include_longitudinal: bool,
    /// How Ising dynamics are evaluated: trajectory sampling or the exact
    /// product-form correlators (+x initial state only).
    #[serde(default)]
    pub ising_method: IsingMethod,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsingMethod {
    #[default]
    Dtwa,
    ClosedForm,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    #[serde(default)]
    pub gamma_minus_per_s: f64,
    #[serde(default)]
    pub gamma_d_per_s: f64,
    /// Derive rates (and the potential) from physical dressing parameters.
    #[serde(default)]
    pub planner: Option<PlannerInput>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerInput {
    pub species: String,
    pub f: f64,
    /// Either the drive amplitude or the blockade radius fixes the operating
    /// point.
    #[serde(default)]
    pub omega_hz: Option<f64>,
    #[serde(default)]
    pub r_b: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub dt_s: f64,
    pub t_max_s: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    pub master_seed: u64,
    pub initial_axis: InitialAxis,
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_timeseries")]
    pub timeseries: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
            timeseries: default_timeseries(),
            summary: default_summary(),
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}
fn default_timeseries() -> String {
    "timeseries.csv".into()
}
fn default_summary() -> String {
    "summary.toml".into()
}

/// Scan axes; an absent axis keeps the base-config value. Cells are the
/// cartesian product in the fixed order: side length, r_b, gamma ratio,
/// variant, drive ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Lattice side lengths (1D chain length, or L for an L x L square).
    #[serde(default)]
    pub side_lengths: Vec<usize>,
    #[serde(default)]
    pub r_b: Vec<f64>,
    /// `gamma_- / J_0` (rate over angular plateau coupling); sets
    /// `gamma_d = gamma_-`.
    #[serde(default)]
    pub gamma_over_j0: Vec<f64>,
    #[serde(default)]
    pub variants: Vec<Variant>,
    /// `B / (N j_bar)`; `inf` selects the rotating-frame (XX) limit.
    #[serde(default)]
    pub b_over_njbar: Vec<f64>,
    /// Also write one timeseries CSV per cell (named by cell id).
    #[serde(default)]
    pub write_timeseries: bool,
    #[serde(default = "default_scan_output")]
    pub output: String,
    #[serde(default = "default_journal")]
    pub journal: String,
}

fn default_scan_output() -> String {
    "scan.csv".into()
}
fn default_journal() -> String {
    "scan_journal.jsonl".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_tol_db")]
    pub tolerance_db: f64,
    #[serde(default = "default_tol_steps")]
    pub tolerance_steps: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_tol_db() -> f64 {
    0.5
}
fn default_tol_steps() -> f64 {
    2.0
}
fn default_sigma() -> f64 {
    3.0
}
fn default_report() -> String {
    "benchmark.toml".into()
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.version != 1 {
            return Err(format!("unsupported config version {} (expected 1)", cfg.version));
        }
        Ok(cfg)
    }
}
