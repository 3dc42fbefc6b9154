//! Conversion from the validated config to library objects. All `*_hz`
//! frequencies become angular (rad/s) here; decay rates are 1/s and times
//! seconds throughout.

use softsqueeze::engine::{EnsembleSpec, InitialAxis};
use softsqueeze::error::{Error, Result};
use softsqueeze::lattice::{build_lattice, coupling_matrix, CouplingMatrix, LatticeSpec, PotentialSpec};
use softsqueeze::model::{DissipationSpec, ModelSpec, Variant};
use softsqueeze::planner::{dressing_from, dressing_from_r_b, find_species, hz_to_angular};

use crate::config::{IsingMethod, RunConfig};

/// Everything a run needs, in simulation units.
pub struct RunSetup {
    pub couplings: CouplingMatrix,
    pub model: ModelSpec,
    pub dissipation: DissipationSpec,
    pub ensemble: EnsembleSpec,
    pub ising_method: IsingMethod,
    /// `N * j_bar` in rad/s, for reporting.
    pub n_jbar_angular: f64,
}

pub fn build_setup(cfg: &RunConfig, seed_override: Option<u64>) -> Result<RunSetup> {
    let lattice_spec = LatticeSpec {
        dimension: cfg.lattice.dimension,
        lengths: cfg.lattice.lengths.clone(),
        boundary: cfg.lattice.boundary,
    };
    let lattice = build_lattice(&lattice_spec)?;

    // Potential: explicit, or derived from physical dressing parameters.
    let (r_b, j_plateau, dissipation) = match &cfg.dissipation.planner {
        None => {
            let r_b = cfg.potential.r_b.ok_or_else(|| {
                Error::invalid("potential.r_b is required unless dissipation.planner is set")
            })?;
            let j_hz = cfg.potential.j_plateau_hz.ok_or_else(|| {
                Error::invalid(
                    "potential.j_plateau_hz is required unless dissipation.planner is set",
                )
            })?;
            if !(j_hz > 0.0) {
                return Err(Error::invalid(format!(
                    "potential.j_plateau_hz must be > 0, got {j_hz}"
                )));
            }
            let d = DissipationSpec::new(
                cfg.dissipation.gamma_minus_per_s,
                cfg.dissipation.gamma_d_per_s,
            )?;
            (r_b, hz_to_angular(j_hz), d)
        }
        Some(p) => {
            if cfg.potential.r_b.is_some() || cfg.potential.j_plateau_hz.is_some() {
                return Err(Error::invalid(
                    "potential.r_b / j_plateau_hz must be omitted when dissipation.planner is set",
                ));
            }
            if cfg.dissipation.gamma_minus_per_s != 0.0 || cfg.dissipation.gamma_d_per_s != 0.0 {
                return Err(Error::invalid(
                    "explicit rates conflict with dissipation.planner",
                ));
            }
            let species = find_species(&p.species)?;
            let params = match (p.omega_hz, p.r_b) {
                (Some(omega), None) => dressing_from(omega, p.f, species)?,
                (None, Some(r_b)) => dressing_from_r_b(r_b, p.f, species)?,
                _ => {
                    return Err(Error::invalid(
                        "dissipation.planner needs exactly one of omega_hz or r_b",
                    ))
                }
            };
            let gamma = p.f * species.gamma_r_per_s() / 2.0;
            (
                params.r_b,
                hz_to_angular(params.j0_hz),
                DissipationSpec::new(gamma, gamma)?,
            )
        }
    };
    let potential = PotentialSpec { kind: cfg.potential.kind, r_b, j_plateau };
    let couplings = coupling_matrix(&lattice, &potential)?;
    let n_jbar_angular = couplings.n_sites as f64 * couplings.j_bar;

    let transverse_field = match (cfg.model.transverse_field_hz, cfg.model.transverse_field_over_njbar)
    {
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "set only one of transverse_field_hz / transverse_field_over_njbar",
            ))
        }
        (Some(hz), None) => hz_to_angular(hz),
        (None, Some(ratio)) => ratio * n_jbar_angular,
        (None, None) => 0.0,
    };
    let model = ModelSpec {
        variant: cfg.model.variant,
        transverse_field,
        detuning_compensation: cfg.model.detuning_compensation,
        echo_pulse: cfg.model.echo_pulse,
        include_longitudinal: cfg.model.include_longitudinal
            || cfg.model.variant == Variant::LabFrameDriven,
    };
    model.validate()?;

    let ensemble = EnsembleSpec {
        n_traj: cfg.ensemble.n_traj,
        dt: cfg.ensemble.dt_s,
        t_max: cfg.ensemble.t_max_s,
        sample_stride: cfg.ensemble.sample_stride,
        master_seed: seed_override.unwrap_or(cfg.ensemble.master_seed),
        initial_axis: cfg.ensemble.initial_axis,
    };
    ensemble.validate()?;

    if cfg.model.ising_method == IsingMethod::ClosedForm {
        if cfg.model.variant != Variant::Ising {
            return Err(Error::invalid(
                "ising_method = \"closed-form\" applies only to the ising variant",
            ));
        }
        if ensemble.initial_axis != InitialAxis::X {
            return Err(Error::invalid(
                "the closed-form Ising evaluator requires initial_axis = \"x\"",
            ));
        }
    }
    if cfg.model.variant == Variant::Ising
        && cfg.model.ising_method == IsingMethod::Dtwa
        && !dissipation.is_zero()
    {
        return Err(Error::invalid(
            "dissipative Ising dynamics need ising_method = \"closed-form\" \
             (trajectory dephasing channels exist only in the rotating frame)",
        ));
    }

    Ok(RunSetup {
        couplings,
        model,
        dissipation,
        ensemble,
        ising_method: cfg.model.ising_method,
        n_jbar_angular,
    })
}

/// Recorded time grid of an ensemble spec (shared by engine and oracles).
pub fn recorded_times(ensemble: &EnsembleSpec) -> Result<Vec<f64>> {
    let n_steps = ensemble.n_steps()?;
    Ok((0..=n_steps)
        .filter(|k| k % ensemble.sample_stride == 0 || *k == n_steps)
        .map(|k| k as f64 * ensemble.dt)
        .collect())
}
