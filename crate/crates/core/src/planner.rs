//! Experimental-parameter planner for Rydberg dressing.
//!
//! Converts physical dressing parameters (Rabi frequency, detuning, Rydberg
//! fraction) into blockade radii and coupling strengths, embeds the species
//! table, applies `n*` scaling laws, and checks drive/interaction
//! constraints.
//!
//! Unit convention: all frequencies in this module are ordinary frequencies
//! (`nu`, in Hz; the species table quotes `C6/2pi`) and decay rates are
//! inverse times. Conversion to angular units happens once, at the
//! simulation boundary, via [`hz_to_angular`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, coupling_matrix, LatticeSpec, PotentialSpec};

/// `omega = 2 pi nu`: the single conversion point between ordinary and
/// angular frequencies.
pub fn hz_to_angular(nu_hz: f64) -> f64 {
    std::f64::consts::TAU * nu_hz
}

/// Drive amplitude cap `Omega <= 2pi x 10 MHz` (stored as `nu`).
pub const OMEGA_CAP_HZ: f64 = 10.0e6;
/// Interaction cap `N j_bar <= 2pi x 20 kHz` for RWA validity (as `nu`).
pub const N_JBAR_CAP_HZ: f64 = 20.0e3;
/// Transverse-field presets `B / (N j_bar)` used for finite-drive studies.
pub const B_RATIO_PRESETS: [f64; 2] = [2.5, 12.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesRecord {
    pub label: String,
    /// Principal quantum number of the tabulated state.
    pub n: u32,
    pub lattice_spacing_um: f64,
    pub c6_over_2pi_ghz_um6: f64,
    pub tau_300k_us: f64,
    /// Quantum defect used with the lifetime fit (Sr only; pinned by
    /// reproducing the tabulated lifetimes).
    pub quantum_defect: Option<f64>,
    pub fit_a_per_us: Option<f64>,
    pub fit_b_per_us: Option<f64>,
}

impl SpeciesRecord {
    pub fn c6_over_2pi_hz_um6(&self) -> f64 {
        self.c6_over_2pi_ghz_um6 * 1e9
    }

    /// Total decay rate of the Rydberg state, 1/s.
    pub fn gamma_r_per_s(&self) -> f64 {
        1e6 / self.tau_300k_us
    }

    pub fn n_star(&self) -> Option<f64> {
        self.quantum_defect.map(|d| self.n as f64 - d)
    }
}

#[derive(Deserialize)]
struct SpeciesFile {
    version: u32,
    species: Vec<SpeciesRecord>,
}

const SPECIES_TOML: &str = include_str!("../data/species.toml");

/// The embedded species table (parsed once).
pub fn species_table() -> &'static [SpeciesRecord] {
    static TABLE: OnceLock<Vec<SpeciesRecord>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: SpeciesFile =
            toml::from_str(SPECIES_TOML).expect("embedded species table must parse");
        assert_eq!(file.version, 1, "unexpected species table version");
        file.species
    })
}

pub fn find_species(label: &str) -> Result<&'static SpeciesRecord> {
    species_table().iter().find(|s| s.label == label).ok_or_else(|| {
        let known: Vec<&str> = species_table().iter().map(|s| s.label.as_str()).collect();
        Error::invalid(format!("unknown species '{label}'; available: {}", known.join(", ")))
    })
}

/// Derived dressing parameters. Frequencies are `nu` (Hz); `delta_hz` is
/// signed (opposite sign to `C6`).
#[derive(Clone, Debug, Serialize)]
pub struct DressingParams {
    pub species: String,
    pub f: f64,
    pub omega_hz: f64,
    pub delta_hz: f64,
    pub r_b_phys_um: f64,
    /// Blockade radius in lattice units.
    pub r_b: f64,
    /// Plateau coupling `J_0 = f^{3/2} Omega` (as `nu`).
    pub j0_hz: f64,
}

impl DressingParams {
    /// Recover the Rydberg fraction from the stored drive parameters.
    pub fn f_roundtrip(&self) -> f64 {
        let x = self.omega_hz / (2.0 * self.delta_hz);
        x * x
    }
}

fn validate_f(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 0.25) {
        return Err(Error::invalid(format!(
            "Rydberg fraction must lie in (0, 0.25) for weak dressing, got {f}"
        )));
    }
    if f > 0.05 {
        log::warn!("Rydberg fraction f = {f} is large; weak-dressing picture degrades");
    }
    Ok(())
}

/// Dressing parameters from a drive amplitude at fixed Rydberg fraction:
/// `|Delta| = Omega / (2 sqrt(f))`, `r_b = (|C6| / 2|Delta|)^(1/6)`,
/// `J_0 = f^(3/2) Omega`.
pub fn dressing_from(omega_hz: f64, f: f64, species: &SpeciesRecord) -> Result<DressingParams> {
    if !(omega_hz > 0.0) || !omega_hz.is_finite() {
        return Err(Error::invalid(format!("Omega must be > 0, got {omega_hz}")));
    }
    validate_f(f)?;
    let abs_delta = omega_hz / (2.0 * f.sqrt());
    let c6 = species.c6_over_2pi_hz_um6();
    if c6 == 0.0 {
        return Err(Error::invalid("species C6 must be nonzero"));
    }
    // C6 / r_b^6 = -2 Delta: the detuning sign is opposite to C6.
    let delta_hz = -c6.signum() * abs_delta;
    let r_b_phys_um = (c6.abs() / (2.0 * abs_delta)).powf(1.0 / 6.0);
    Ok(DressingParams {
        species: species.label.clone(),
        f,
        omega_hz,
        delta_hz,
        r_b_phys_um,
        r_b: r_b_phys_um / species.lattice_spacing_um,
        j0_hz: f.powf(1.5) * omega_hz,
    })
}

/// Invert [`dressing_from`]: the drive amplitude that places the blockade
/// radius at `r_b` lattice units for fixed `f`.
pub fn dressing_from_r_b(r_b: f64, f: f64, species: &SpeciesRecord) -> Result<DressingParams> {
    if !(r_b > 0.0) || !r_b.is_finite() {
        return Err(Error::invalid(format!("r_b must be > 0, got {r_b}")));
    }
    validate_f(f)?;
    let r_phys = r_b * species.lattice_spacing_um;
    let abs_delta = species.c6_over_2pi_hz_um6().abs() / (2.0 * r_phys.powi(6));
    let omega_hz = 2.0 * f.sqrt() * abs_delta;
    dressing_from(omega_hz, f, species)
}

/// Total decay rate from the fit `gamma = a n*^-3 + b n*^-2`.
/// Returns `(gamma in 1/us, tau in us)`.
pub fn lifetime(n: u32, quantum_defect: f64, a_per_us: f64, b_per_us: f64) -> Result<(f64, f64)> {
    let n_star = n as f64 - quantum_defect;
    if !(n_star > 0.0) {
        return Err(Error::invalid(format!(
            "effective principal quantum number must be > 0, got {n_star}"
        )));
    }
    let gamma = a_per_us * n_star.powi(-3) + b_per_us * n_star.powi(-2);
    Ok((gamma, 1.0 / gamma))
}

/// Quantities subject to the `n*` scaling laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingReference {
    pub n_star: f64,
    pub omega_hz: f64,
    pub delta_hz: f64,
    pub j0_hz: f64,
    pub n_jbar_hz: f64,
    pub lattice_spacing_um: f64,
    pub c6_over_2pi_ghz_um6: f64,
}

impl ScalingReference {
    /// Blockade radius in lattice units; invariant under projection.
    pub fn r_b(&self) -> f64 {
        let r_phys =
            (self.c6_over_2pi_ghz_um6.abs() * 1e9 / (2.0 * self.delta_hz.abs())).powf(1.0 / 6.0);
        r_phys / self.lattice_spacing_um
    }
}

/// Project dressing parameters to a different effective principal quantum
/// number: `Omega, Delta, J_0, N j_bar ~ n*^-3`, `a ~ n*^(7/3)`,
/// `C6 ~ n*^11`.
pub fn scaling_project(reference: &ScalingReference, n_star_target: f64) -> Result<ScalingReference> {
    if !(reference.n_star > 0.0) || !(n_star_target > 0.0) {
        return Err(Error::invalid("effective principal quantum numbers must be > 0"));
    }
    let r = n_star_target / reference.n_star;
    Ok(ScalingReference {
        n_star: n_star_target,
        omega_hz: reference.omega_hz * r.powi(-3),
        delta_hz: reference.delta_hz * r.powi(-3),
        j0_hz: reference.j0_hz * r.powi(-3),
        n_jbar_hz: reference.n_jbar_hz * r.powi(-3),
        lattice_spacing_um: reference.lattice_spacing_um * r.powf(7.0 / 3.0),
        c6_over_2pi_ghz_um6: reference.c6_over_2pi_ghz_um6 * r.powi(11),
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConstraintReport {
    pub omega_hz: f64,
    pub n_jbar_hz: f64,
    pub omega_ok: bool,
    pub n_jbar_ok: bool,
    pub violations: Vec<String>,
    /// Suggested transverse-field presets `B = ratio * N j_bar`.
    pub b_over_n_jbar_presets: Vec<f64>,
}

impl ConstraintReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flag violations of the drive and interaction caps (inclusive thresholds).
pub fn constraint_check(omega_hz: f64, n_jbar_hz: f64) -> ConstraintReport {
    let omega_ok = omega_hz <= OMEGA_CAP_HZ;
    let n_jbar_ok = n_jbar_hz <= N_JBAR_CAP_HZ;
    let mut violations = Vec::new();
    if !omega_ok {
        violations.push(format!(
            "Omega = {:.4e} Hz exceeds the cap of {:.4e} Hz",
            omega_hz, OMEGA_CAP_HZ
        ));
    }
    if !n_jbar_ok {
        violations.push(format!(
            "N*j_bar = {:.4e} Hz exceeds the cap of {:.4e} Hz (RWA validity)",
            n_jbar_hz, N_JBAR_CAP_HZ
        ));
    }
    ConstraintReport {
        omega_hz,
        n_jbar_hz,
        omega_ok,
        n_jbar_ok,
        violations,
        b_over_n_jbar_presets: B_RATIO_PRESETS.to_vec(),
    }
}

/// One point of a parameter-overlay curve at fixed `f`.
#[derive(Clone, Debug, Serialize)]
pub struct OverlayRow {
    pub r_b: f64,
    pub omega_hz: f64,
    pub j0_hz: f64,
    pub n_jbar_hz: f64,
    /// `gamma_- / J_0` (rate over angular coupling), dimensionless.
    pub gamma_over_j0: f64,
    /// `j_bar * tau / f` (angular coupling times lifetime), dimensionless.
    pub jbar_tau_over_f: f64,
    pub gamma_minus_per_s: f64,
    pub gamma_d_per_s: f64,
    pub feasible: bool,
}

/// Parameter curves over a blockade-radius grid: for each `r_b`, the drive
/// giving that radius at fixed `f`, the resulting couplings on the given
/// lattice, the decoherence ratios (with `gamma_- = gamma_d = f gamma_r /
/// 2`), and the constraint verdict.
pub fn fig3_overlay(
    species: &SpeciesRecord,
    f: f64,
    r_b_grid: &[f64],
    lattice: &LatticeSpec,
) -> Result<Vec<OverlayRow>> {
    let lat = build_lattice(lattice)?;
    let n = lat.n_sites() as f64;
    let gamma_r = species.gamma_r_per_s();
    let gamma_minus = f * gamma_r / 2.0;
    let mut rows = Vec::with_capacity(r_b_grid.len());
    for &r_b in r_b_grid {
        let params = dressing_from_r_b(r_b, f, species)?;
        let couplings = coupling_matrix(&lat, &PotentialSpec::soft_core(r_b, 1.0))?;
        let jbar_hz = couplings.j_bar * params.j0_hz;
        let n_jbar_hz = n * jbar_hz;
        let report = constraint_check(params.omega_hz, n_jbar_hz);
        let tau_s = species.tau_300k_us * 1e-6;
        rows.push(OverlayRow {
            r_b,
            omega_hz: params.omega_hz,
            j0_hz: params.j0_hz,
            n_jbar_hz,
            gamma_over_j0: gamma_minus / hz_to_angular(params.j0_hz),
            jbar_tau_over_f: hz_to_angular(jbar_hz) * tau_s / f,
            gamma_minus_per_s: gamma_minus,
            gamma_d_per_s: gamma_minus,
            feasible: report.pass(),
        });
    }
    Ok(rows)
}
