//! `simulate`: one configured run, timeseries CSV plus summary document.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use softsqueeze::analysis::optimal_squeezing;
use softsqueeze::engine::run_ensemble;
use softsqueeze::error::Error;
use softsqueeze::observables::ObservableSeries;
use softsqueeze::oracle::ising_closed_form;

use crate::build::{build_setup, recorded_times, RunSetup};
use crate::config::{IsingMethod, RunConfig};
use crate::output;

/// Run the configured dynamics and return the observable series plus
/// engine diagnostics when the trajectory engine was used.
pub fn run_series(
    setup: &RunSetup,
) -> Result<(ObservableSeries, Option<softsqueeze::engine::RunDiagnostics>), Error> {
    if setup.ising_method == IsingMethod::ClosedForm {
        let times = recorded_times(&setup.ensemble)?;
        let series = ising_closed_form(
            &setup.couplings,
            setup.dissipation.gamma_minus,
            setup.dissipation.gamma_d,
            setup.model.include_longitudinal,
            &times,
        )?;
        return Ok((series, None));
    }
    let run = run_ensemble(&setup.model, &setup.couplings, &setup.dissipation, &setup.ensemble)?;
    Ok((run.series, Some(run.diagnostics)))
}

pub fn execute(cfg: &RunConfig, seed: Option<u64>, out_dir: &Path, workers: usize) -> anyhow::Result<()> {
    let start = Instant::now();
    let setup = build_setup(cfg, seed)?;
    let (series, diagnostics) = run_series(&setup)?;
    if !series.moments_finite() {
        return Err(Error::Numerical("non-finite values in observables".into()).into());
    }
    let result = optimal_squeezing(&series)?;

    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let ts_path = out_dir.join(&cfg.output.timeseries);
    output::write_timeseries(&ts_path, &series)
        .with_context(|| format!("writing {}", ts_path.display()))?;

    let (xi2_opt, xi2_opt_db, t_opt_s, contrast, collectivity, boundary) =
        output::summary_fields(&result);
    let summary = output::Summary {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        master_seed: setup.ensemble.master_seed,
        workers,
        n_sites: setup.couplings.n_sites,
        n_traj: series.n_samples,
        xi2_opt,
        xi2_opt_db,
        t_opt_s,
        contrast_at_t_opt: contrast,
        collectivity_at_t_opt: collectivity,
        boundary_minimum: boundary,
        wall_time_s: start.elapsed().as_secs_f64(),
        max_norm_drift: diagnostics.map_or(0.0, |d| d.max_norm_drift),
        dt_warning: diagnostics.is_some_and(|d| d.dt_warning),
        config: cfg,
    };
    let summary_path = out_dir.join(&cfg.output.summary);
    output::write_summary(&summary_path, &summary)?;
    println!(
        "simulate: N={} xi2_opt={:.6} ({:+.3} dB) at t={:.6e} s{}  -> {}",
        setup.couplings.n_sites,
        xi2_opt,
        xi2_opt_db,
        t_opt_s,
        if boundary { " [boundary minimum]" } else { "" },
        ts_path.display()
    );
    Ok(())
}
