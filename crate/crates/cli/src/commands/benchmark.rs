//! `benchmark`: trajectory engine vs exact reference on one configuration.

use std::path::Path;

use softsqueeze::analysis::{bootstrap_xi2_opt, optimal_squeezing};
use softsqueeze::engine::{run_ensemble, InitialAxis};
use softsqueeze::error::Error;
use softsqueeze::oracle::{
    coherent_state, density_from_state, evolve_lindblad_series, evolve_state_series,
    hamiltonian_terms, JumpOp, MAX_RHO_SPINS, MAX_STATE_SPINS,
};

use crate::build::build_setup;
use crate::config::{BenchmarkConfig, RunConfig};

#[derive(serde::Serialize)]
pub struct BenchmarkReport {
    pub n_sites: usize,
    pub n_traj: usize,
    pub dissipative: bool,
    pub dtwa_xi2_opt_db: f64,
    pub oracle_xi2_opt_db: f64,
    pub delta_xi2_db: f64,
    pub xi2_db_se: f64,
    pub dtwa_t_opt_s: f64,
    pub oracle_t_opt_s: f64,
    pub delta_t_opt_grid_steps: f64,
    pub max_first_moment_sigma: f64,
    pub tolerance_db: f64,
    pub tolerance_steps: f64,
    pub sigma: f64,
    pub pass: bool,
}

pub fn execute(
    cfg: &RunConfig,
    seed: Option<u64>,
    out_dir: &Path,
    workers: usize,
) -> anyhow::Result<()> {
    let _ = workers;
    let bench: BenchmarkConfig = cfg.benchmark.clone().unwrap_or_else(|| {
        toml::from_str("").expect("benchmark defaults")
    });
    let setup = build_setup(cfg, seed)?;
    let n = setup.couplings.n_sites;
    let dissipative = !setup.dissipation.is_zero();
    if dissipative && n > MAX_RHO_SPINS {
        return Err(Error::Resource(format!(
            "dissipative benchmark limited to {MAX_RHO_SPINS} spins, got {n}"
        ))
        .into());
    }
    if !dissipative && n > MAX_STATE_SPINS {
        return Err(Error::Resource(format!(
            "coherent benchmark limited to {MAX_STATE_SPINS} spins, got {n}"
        ))
        .into());
    }

    let run = run_ensemble(&setup.model, &setup.couplings, &setup.dissipation, &setup.ensemble)?;
    let h = hamiltonian_terms(&setup.model, &setup.couplings)?;
    let psi0 = coherent_state(n, setup.ensemble.initial_axis == InitialAxis::X);
    let oracle = if dissipative {
        let [gx, gy, gz] = setup.dissipation.channel_rates();
        evolve_lindblad_series(
            &h,
            &[(gx, JumpOp::Sx), (gy, JumpOp::Sy), (gz, JumpOp::Sz)],
            &density_from_state(&psi0),
            &run.series.times,
        )?
    } else {
        evolve_state_series(&h, &psi0, &run.series.times)?
    };

    let rd = optimal_squeezing(&run.series)?;
    let ro = optimal_squeezing(&oracle)?;
    let boot = bootstrap_xi2_opt(&run.blocks, 200, setup.ensemble.master_seed ^ 0xb001)?;
    let grid_step = run.series.times.get(1).copied().unwrap_or(setup.ensemble.dt)
        - run.series.times[0];

    let mut max_sigma = 0.0f64;
    for k in 0..run.series.len() {
        for (d, e, se) in [
            (run.series.sx[k], oracle.sx[k], run.series.err_sx[k]),
            (run.series.sy[k], oracle.sy[k], run.series.err_sy[k]),
            (run.series.sz[k], oracle.sz[k], run.series.err_sz[k]),
        ] {
            let sigma = (d - e).abs() / se.max(1e-12);
            max_sigma = max_sigma.max(sigma);
        }
    }

    let delta_db = rd.xi2_opt_db - ro.xi2_opt_db;
    let delta_steps = (rd.t_opt - ro.t_opt) / grid_step;
    let pass = delta_db.abs() <= bench.tolerance_db
        && delta_steps.abs() <= bench.tolerance_steps
        && max_sigma <= bench.sigma;
    let report = BenchmarkReport {
        n_sites: n,
        n_traj: setup.ensemble.n_traj,
        dissipative,
        dtwa_xi2_opt_db: rd.xi2_opt_db,
        oracle_xi2_opt_db: ro.xi2_opt_db,
        delta_xi2_db: delta_db,
        xi2_db_se: boot.se_db,
        dtwa_t_opt_s: rd.t_opt,
        oracle_t_opt_s: ro.t_opt,
        delta_t_opt_grid_steps: delta_steps,
        max_first_moment_sigma: max_sigma,
        tolerance_db: bench.tolerance_db,
        tolerance_steps: bench.tolerance_steps,
        sigma: bench.sigma,
        pass,
    };

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(&bench.report);
    std::fs::write(&path, toml::to_string_pretty(&report)?)?;
    println!(
        "benchmark: N={n} {}  dtwa={:.3} dB oracle={:.3} dB  d_xi2={:+.3} dB (se {:.3})  \
         d_t={:+.2} steps  max|dS|/se={:.2}  -> {}",
        if dissipative { "dissipative" } else { "coherent" },
        report.dtwa_xi2_opt_db,
        report.oracle_xi2_opt_db,
        report.delta_xi2_db,
        report.xi2_db_se,
        report.delta_t_opt_grid_steps,
        report.max_first_moment_sigma,
        if pass { "PASS" } else { "FAIL" },
    );
    Ok(())
}
