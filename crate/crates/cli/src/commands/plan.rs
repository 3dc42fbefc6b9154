//! `plan`: physical dressing parameters, constraint report, and optional
//! parameter-overlay curves.

use std::path::Path;

use anyhow::Context;
use softsqueeze::error::Error;
use softsqueeze::lattice::{build_lattice, coupling_matrix, Boundary, LatticeSpec, PotentialSpec};
use softsqueeze::planner::{
    constraint_check, dressing_from, dressing_from_r_b, fig3_overlay, find_species, DressingParams,
};

pub struct PlanArgs {
    pub species: String,
    pub f: f64,
    pub omega_hz: Option<f64>,
    pub r_b: Option<f64>,
    pub lattice: String,
    pub overlay: Option<String>,
    pub r_b_grid: String,
}

fn parse_lattice(text: &str) -> Result<LatticeSpec, Error> {
    let parts: Vec<&str> = text.split('x').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("bad lattice spec '{text}' (use e.g. 14x14 or 12)")))
    };
    match parts.len() {
        1 => Ok(LatticeSpec::chain(parse(parts[0])?, Boundary::Open)),
        2 => Ok(LatticeSpec::square(parse(parts[0])?, parse(parts[1])?, Boundary::Open)),
        _ => Err(Error::invalid(format!("bad lattice spec '{text}'"))),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!("bad grid '{text}' (use start:stop:step)")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad grid number '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::invalid(format!("bad grid '{text}'")));
    }
    let mut grid = Vec::new();
    let mut x = start;
    while x <= stop + 1e-12 {
        grid.push(x);
        x += step;
    }
    Ok(grid)
}

pub fn execute(args: &PlanArgs, out_dir: &Path) -> anyhow::Result<()> {
    let species = find_species(&args.species)?;
    let params: DressingParams = match (args.omega_hz, args.r_b) {
        (Some(omega), None) => dressing_from(omega, args.f, species)?,
        (None, Some(r_b)) => dressing_from_r_b(r_b, args.f, species)?,
        _ => return Err(Error::invalid("pass exactly one of --omega-hz or --r-b").into()),
    };
    let lattice_spec = parse_lattice(&args.lattice)?;
    let lattice = build_lattice(&lattice_spec)?;
    let couplings = coupling_matrix(&lattice, &PotentialSpec::soft_core(params.r_b, 1.0))?;
    let n_jbar_hz = couplings.n_sites as f64 * couplings.j_bar * params.j0_hz;
    let report = constraint_check(params.omega_hz, n_jbar_hz);

    println!("species        : {} (n = {})", species.label, species.n);
    println!("lattice        : {} sites, spacing {} um", couplings.n_sites, species.lattice_spacing_um);
    println!("f              : {:.6}", params.f);
    println!("Omega          : {:.6e} Hz", params.omega_hz);
    println!("Delta          : {:.6e} Hz", params.delta_hz);
    println!("r_b (physical) : {:.4} um", params.r_b_phys_um);
    println!("r_b (lattice)  : {:.4}", params.r_b);
    println!("J_0            : {:.6e} Hz", params.j0_hz);
    println!("N j_bar        : {:.6e} Hz", n_jbar_hz);
    println!("tau (300 K)    : {:.1} us", species.tau_300k_us);
    println!(
        "gamma_-=gamma_d: {:.6e} 1/s (f gamma_r / 2)",
        args.f * species.gamma_r_per_s() / 2.0
    );
    if report.pass() {
        println!("constraints    : pass (Omega and N j_bar within caps)");
    } else {
        for v in &report.violations {
            println!("constraint     : VIOLATED - {v}");
        }
    }
    println!(
        "suggested B    : B/(N j_bar) in {:?} for finite-drive runs",
        report.b_over_n_jbar_presets
    );

    if let Some(overlay_name) = &args.overlay {
        let grid = parse_grid(&args.r_b_grid)?;
        let rows = fig3_overlay(species, args.f, &grid, &lattice_spec)?;
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(overlay_name);
        let mut text = String::from(
            "r_b,omega_hz,j0_hz,njbar_hz,gamma_minus_per_s,gamma_over_j0,jbar_tau_over_f,feasible\n",
        );
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.r_b,
                r.omega_hz,
                r.j0_hz,
                r.n_jbar_hz,
                r.gamma_minus_per_s,
                r.gamma_over_j0,
                r.jbar_tau_over_f,
                r.feasible
            ));
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("overlay        : {} rows -> {}", rows.len(), path.display());
    }
    Ok(())
}
