//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use softsqueeze::analysis::{
    bootstrap_xi2_opt, count_prominent_extrema, loglog_slope, min_perpendicular_variance,
    optimal_squeezing,
};
use softsqueeze::engine::{run_ensemble, EnsembleSpec, InitialAxis, Stepper, TrajectoryState};
use softsqueeze::lattice::{
    build_lattice, coupling_matrix, Boundary, LatticeSpec, PotentialKind, PotentialSpec,
};
use softsqueeze::model::{DissipationSpec, DriftCtx, ModelSpec, Variant};
use softsqueeze::observables::ObservableSeries;
use softsqueeze::oracle::{
    coherent_state, density_from_state, evolve_lindblad_series, evolve_state_series,
    hamiltonian_terms, ising_closed_form, oat_reference, JumpOp,
};
use softsqueeze::planner::{
    constraint_check, dressing_from, fig3_overlay, find_species, lifetime, species_table,
    N_JBAR_CAP_HZ, OMEGA_CAP_HZ,
};

fn xx_ensemble(n_traj: usize, dt: f64, t_max: f64, stride: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        n_traj,
        dt,
        t_max,
        sample_stride: stride,
        master_seed: seed,
        initial_axis: InitialAxis::Z,
    }
}

/// Criterion 1: engine vs dense Schrödinger oracle for 1D XX chains with a
/// sharp cutoff (the geometry where an exact reference is tractable).
#[test]
fn criterion_01_engine_vs_oracle_1d() {
    let model = ModelSpec::new(Variant::XxRwa);
    let stride = 10; // recording grid 0.2/J
    let mut worst_db = 0.0f64;
    let mut worst_steps = 0.0f64;
    for r_b in [2.0, 3.0] {
        for l in [8usize, 10, 12] {
            let lat = build_lattice(&LatticeSpec::chain(l, Boundary::Open)).unwrap();
            let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(r_b, 1.0)).unwrap();
            let run = run_ensemble(
                &model,
                &m,
                &DissipationSpec::none(),
                &xx_ensemble(10_000, 0.02, 8.0, stride, 7),
            )
            .unwrap();
            let h = hamiltonian_terms(&model, &m).unwrap();
            let exact =
                evolve_state_series(&h, &coherent_state(l, false), &run.series.times).unwrap();
            let rd = optimal_squeezing(&run.series).unwrap();
            let re = optimal_squeezing(&exact).unwrap();
            assert!(!rd.boundary_minimum && !re.boundary_minimum);
            let d_db = (rd.xi2_opt_db - re.xi2_opt_db).abs();
            let d_steps = ((rd.t_opt - re.t_opt) / (0.02 * stride as f64)).abs();
            assert!(d_db <= 0.5, "L={l} r_b={r_b}: |d xi2| = {d_db:.3} dB > 0.5 dB");
            assert!(d_steps <= 2.0, "L={l} r_b={r_b}: |d t_opt| = {d_steps:.1} grid steps > 2");
            worst_db = worst_db.max(d_db);
            worst_steps = worst_steps.max(d_steps);
        }
    }

    // r_b = 1: the engine may not beat the oracle's squeezing beyond noise
    // (the semiclassical method underestimates attainable squeezing here).
    let lat = build_lattice(&LatticeSpec::chain(8, Boundary::Open)).unwrap();
    let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(1.0, 1.0)).unwrap();
    let run = run_ensemble(
        &model,
        &m,
        &DissipationSpec::none(),
        &xx_ensemble(10_000, 0.02, 8.0, stride, 7),
    )
    .unwrap();
    let h = hamiltonian_terms(&model, &m).unwrap();
    let exact = evolve_state_series(&h, &coherent_state(8, false), &run.series.times).unwrap();
    let rd = optimal_squeezing(&run.series).unwrap();
    let re = optimal_squeezing(&exact).unwrap();
    let se = bootstrap_xi2_opt(&run.blocks, 200, 99).unwrap().se_xi2;
    assert!(
        rd.xi2_opt >= re.xi2_opt - 2.0 * se,
        "r_b=1: DTWA xi2 {} improbably beats the oracle {} (se {se})",
        rd.xi2_opt,
        re.xi2_opt
    );
    println!(
        "criterion 01 PASS: max |d xi2| = {worst_db:.3} dB (cap 0.5), max |d t_opt| = \
         {worst_steps:.1} grid steps (cap 2); r_b=1 signed check {:+.4} vs -2se {:+.4}",
        rd.xi2_opt - re.xi2_opt,
        -2.0 * se
    );
}

/// Criterion 2: single-spin dephasing calibration against the 2x2 Lindblad
/// propagator with isotropic channels.
#[test]
fn criterion_02_dissipation_calibration() {
    let gamma = 1.0;
    let m = softsqueeze::lattice::CouplingMatrix::from_values(1, vec![0.0], 0).unwrap();
    // gamma_- = gamma_d = 1 maps to channel rates (1, 1, 1).
    let d = DissipationSpec::new(gamma, gamma).unwrap();
    assert_eq!(d.channel_rates(), [1.0, 1.0, 1.0]);
    let run = run_ensemble(
        &ModelSpec::new(Variant::XxRwa),
        &m,
        &d,
        &EnsembleSpec {
            n_traj: 100_000,
            dt: 1e-3,
            t_max: 3.0,
            sample_stride: 30,
            master_seed: 2,
            initial_axis: InitialAxis::Z,
        },
    )
    .unwrap();
    let ch = [(gamma, JumpOp::Sx), (gamma, JumpOp::Sy), (gamma, JumpOp::Sz)];
    let rho0 = density_from_state(&coherent_state(1, false));
    let exact = evolve_lindblad_series(&[], &ch, &rho0, &run.series.times).unwrap();
    let mut worst = 0.0f64;
    for k in 0..run.series.len() {
        for (a, b) in [
            (run.series.sx[k], exact.sx[k]),
            (run.series.sy[k], exact.sy[k]),
            (run.series.sz[k], exact.sz[k]),
        ] {
            let dev = (a - b).abs();
            assert!(dev < 1e-2, "t={}: |{a} - {b}| >= 1e-2", run.series.times[k]);
            worst = worst.max(dev);
        }
    }
    println!("criterion 02 PASS: max Bloch-component deviation {worst:.2e} (cap 1e-2)");
}

/// Criterion 3: dissipative XX ensemble at N = 6 against the dense Lindblad
/// oracle. Twenty checkpoints span the squeezing window (to 1.5x the oracle
/// optimum); the squeezing comparison covers all checkpoints with contrast
/// above 0.5.
#[test]
fn criterion_03_dissipative_consistency_n6() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let r_b = 1.3 + 0.9 * rng.gen::<f64>();
    let lat = build_lattice(&LatticeSpec::chain(6, Boundary::Open)).unwrap();
    let m = coupling_matrix(&lat, &PotentialSpec::soft_core(r_b, 1.0)).unwrap();
    let model = ModelSpec::new(Variant::XxRwa);
    let d = DissipationSpec::new(0.1, 0.1).unwrap();
    let run = run_ensemble(&model, &m, &d, &xx_ensemble(40_000, 0.02, 3.0, 2, 3)).unwrap();
    let h = hamiltonian_terms(&model, &m).unwrap();
    let [gx, gy, gz] = d.channel_rates();
    let rho0 = density_from_state(&coherent_state(6, false));
    let exact = evolve_lindblad_series(
        &h,
        &[(gx, JumpOp::Sx), (gy, JumpOp::Sy), (gz, JumpOp::Sz)],
        &rho0,
        &run.series.times,
    )
    .unwrap();
    let t_opt = optimal_squeezing(&exact).unwrap().t_opt;
    let window = 1.5 * t_opt;
    let in_window: Vec<usize> =
        (0..run.series.len()).filter(|&k| run.series.times[k] <= window).collect();
    assert!(in_window.len() >= 20, "recording grid too coarse for 20 checkpoints");
    let step = in_window.len() as f64 / 20.0;
    let checkpoints: Vec<usize> =
        (0..20).map(|i| in_window[(i as f64 * step) as usize]).collect();

    let mut worst_sigma = 0.0f64;
    let mut worst_db = 0.0f64;
    for &k in &checkpoints {
        for (a, b, se) in [
            (run.series.sx[k], exact.sx[k], run.series.err_sx[k]),
            (run.series.sy[k], exact.sy[k], run.series.err_sy[k]),
            (run.series.sz[k], exact.sz[k], run.series.err_sz[k]),
        ] {
            let sigma = (a - b).abs() / se.max(1e-12);
            assert!(
                sigma <= 3.0,
                "t={}: first moment off by {sigma:.2} se",
                run.series.times[k]
            );
            worst_sigma = worst_sigma.max(sigma);
        }
        if exact.moments_at(k).contrast() > 0.5 {
            let ddb = (10.0 * (run.series.xi2[k] / exact.xi2[k]).log10()).abs();
            assert!(
                ddb <= 0.3,
                "t={}: |d xi2| = {ddb:.3} dB > 0.3 dB",
                run.series.times[k]
            );
            worst_db = worst_db.max(ddb);
        }
    }
    println!(
        "criterion 03 PASS: r_b={r_b:.3}, 20 checkpoints to t={window:.2}; \
         max first-moment dev {worst_sigma:.2} se (cap 3), max |d xi2| {worst_db:.3} dB (cap 0.3)"
    );
}

/// Criterion 4: one-axis-twisting scaling laws from the Dicke-basis oracle.
/// The N^(-2/3) law the scaling claim refers to is the variance-normalized
/// squeezing parameter (the contrast-weighted Wineland definition carries
/// additional finite-size corrections; its slope is reported alongside).
#[test]
fn criterion_04_oat_scaling() {
    let sizes = [32usize, 64, 128, 256, 512, 1024];
    let mut ns = vec![];
    let mut ku = vec![];
    let mut t_opt = vec![];
    let mut wineland = vec![];
    for &n in &sizes {
        let grid = softsqueeze::analysis::oat_time_grid(n, 1.0);
        let series = oat_reference(n, 1.0, &grid).unwrap();
        // Variance-only parameter: min Var_perp / (S/2), minimized over t.
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..series.len() {
            let v = min_perpendicular_variance(&series.moments_at(k)).unwrap()
                / (n as f64 / 4.0);
            if v < best.0 {
                best = (v, series.times[k]);
            }
        }
        let r = optimal_squeezing(&series).unwrap();
        assert!(!r.boundary_minimum);
        ns.push(n as f64);
        ku.push(best.0);
        t_opt.push(best.1);
        wineland.push(r.xi2_opt);
    }
    let slope_xi2 = loglog_slope(&ns, &ku);
    let slope_t = loglog_slope(&ns, &t_opt);
    let slope_w = loglog_slope(&ns, &wineland);
    assert!(
        (slope_xi2 + 2.0 / 3.0).abs() <= 0.03,
        "xi2 slope {slope_xi2:.4} outside -2/3 +- 0.03"
    );
    assert!(
        (slope_t + 2.0 / 3.0).abs() <= 0.05,
        "t_opt slope {slope_t:.4} outside -2/3 +- 0.05"
    );
    println!(
        "criterion 04 PASS: variance slope {slope_xi2:.4} (-2/3 +- 0.03), \
         t_opt slope {slope_t:.4} (-2/3 +- 0.05); Wineland slope {slope_w:.4} for reference"
    );
}

/// Criterion 5: closed-form Ising correlators against the dense propagators
/// on 20 random lattices and couplings.
#[test]
fn criterion_05_ising_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_lindblad = 0.0f64;
    let mut worst_state = 0.0f64;
    for case in 0..20 {
        let spec = if rng.gen::<bool>() {
            LatticeSpec::chain(
                2 + rng.gen_range(0..7),
                if rng.gen::<bool>() { Boundary::Open } else { Boundary::Periodic },
            )
        } else {
            let (lx, ly) = *[(2usize, 2usize), (2, 3), (2, 4), (3, 2)]
                .iter()
                .nth(rng.gen_range(0..4))
                .unwrap();
            LatticeSpec::square(lx, ly, if rng.gen::<bool>() { Boundary::Open } else { Boundary::Periodic })
        };
        let lat = build_lattice(&spec).unwrap();
        let n = lat.n_sites();
        let kind = if rng.gen::<bool>() { PotentialKind::SoftCoreVdw } else { PotentialKind::SharpCutoff };
        let potential = PotentialSpec { kind, r_b: 1.0 + 2.0 * rng.gen::<f64>(), j_plateau: 0.5 + rng.gen::<f64>() };
        let m = coupling_matrix(&lat, &potential).unwrap();
        let include_long = rng.gen::<bool>();
        let (gm, gd) = (0.05 + 0.15 * rng.gen::<f64>(), 0.05 + 0.15 * rng.gen::<f64>());
        let t_grid: Vec<f64> = (0..=15).map(|k| 3.0 * k as f64 / 15.0).collect();
        let model = ModelSpec { include_longitudinal: include_long, ..ModelSpec::new(Variant::Ising) };
        let h = hamiltonian_terms(&model, &m).unwrap();
        let psi0 = coherent_state(n, true);

        // Coherent: closed form vs Schrödinger evolution.
        let closed0 = ising_closed_form(&m, 0.0, 0.0, include_long, &t_grid).unwrap();
        let state = evolve_state_series(&h, &psi0, &t_grid).unwrap();
        worst_state = worst_state.max(max_moment_dev(&closed0, &state));
        assert!(
            worst_state < 1e-10,
            "case {case}: coherent deviation {worst_state:.2e} >= 1e-10"
        );

        // Dissipative: closed form vs Lindblad evolution.
        let closed = ising_closed_form(&m, gm, gd, include_long, &t_grid).unwrap();
        let lind = evolve_lindblad_series(
            &h,
            &[(gm, JumpOp::SMinus), (gd, JumpOp::NumProj)],
            &density_from_state(&psi0),
            &t_grid,
        )
        .unwrap();
        worst_lindblad = worst_lindblad.max(max_moment_dev(&closed, &lind));
        assert!(
            worst_lindblad < 1e-6,
            "case {case}: dissipative deviation {worst_lindblad:.2e} >= 1e-6"
        );
    }
    println!(
        "criterion 05 PASS: 20 random systems; max coherent dev {worst_state:.2e} (cap 1e-10), \
         max dissipative dev {worst_lindblad:.2e} (cap 1e-6)"
    );
}

fn max_moment_dev(a: &ObservableSeries, b: &ObservableSeries) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..a.len() {
        for (x, y) in [
            (a.sx[k], b.sx[k]),
            (a.sy[k], b.sy[k]),
            (a.sz[k], b.sz[k]),
            (a.sxx[k], b.sxx[k]),
            (a.syy[k], b.syy[k]),
            (a.szz[k], b.szz[k]),
            (a.sxy[k], b.sxy[k]),
            (a.sxz[k], b.sxz[k]),
            (a.syz[k], b.syz[k]),
        ] {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Criterion 6: gap protection at desk scale. On a periodic 10x10 lattice
/// with a sharp cutoff at r_b = 3, the XX model squeezes at least 2 dB
/// deeper than the exact Ising dynamics and stays collective.
#[test]
fn criterion_06_gap_protection_2d() {
    let lat = build_lattice(&LatticeSpec::square(10, 10, Boundary::Periodic)).unwrap();
    let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(3.0, 1.0)).unwrap();
    let run = run_ensemble(
        &ModelSpec::new(Variant::XxRwa),
        &m,
        &DissipationSpec::none(),
        &xx_ensemble(6000, 0.012, 2.0, 5, 1),
    )
    .unwrap();
    let rx = optimal_squeezing(&run.series).unwrap();
    let times: Vec<f64> = (0..=600).map(|k| 1.5 * k as f64 / 600.0).collect();
    let ising = ising_closed_form(&m, 0.0, 0.0, false, &times).unwrap();
    let ri = optimal_squeezing(&ising).unwrap();
    assert!(!rx.boundary_minimum && !ri.boundary_minimum);
    let advantage = ri.xi2_opt_db - rx.xi2_opt_db;
    assert!(advantage >= 2.0, "gap advantage {advantage:.2} dB < 2 dB");
    assert!(rx.collectivity > 0.9, "XX collectivity {:.3} <= 0.9", rx.collectivity);
    println!(
        "criterion 06 PASS: XX {:.2} dB vs Ising {:.2} dB (advantage {advantage:.2} dB >= 2), \
         XX collectivity {:.3} > 0.9",
        rx.xi2_opt_db, ri.xi2_opt_db, rx.collectivity
    );
}

/// Criterion 7: finite transverse field converges to the rotating-frame
/// limit. The time-averaged squeezing difference decreases monotonically in
/// B, and the weakest drive shows pronounced Rabi-cycle oscillations.
#[test]
fn criterion_07_finite_field_convergence() {
    let lat = build_lattice(&LatticeSpec::square(8, 8, Boundary::Open)).unwrap();
    let m = coupling_matrix(&lat, &PotentialSpec::soft_core(2.0, 1.0)).unwrap();
    let n_jbar = 64.0 * m.j_bar;
    let xx = run_ensemble(
        &ModelSpec::new(Variant::XxRwa),
        &m,
        &DissipationSpec::none(),
        &xx_ensemble(3000, 0.02, 2.4, 1, 5),
    )
    .unwrap();
    let rx = optimal_squeezing(&xx.series).unwrap();
    assert!(!rx.boundary_minimum);
    let k_opt = rx.t_index;

    let mut avgs = Vec::new();
    let mut extrema = Vec::new();
    for (ratio, dt, stride) in [(2.5, 0.005, 4usize), (12.5, 0.00125, 16)] {
        let model = ModelSpec {
            detuning_compensation: true,
            ..ModelSpec::lab_frame(ratio * n_jbar, true)
        };
        let run = run_ensemble(
            &model,
            &m,
            &DissipationSpec::none(),
            &EnsembleSpec {
                n_traj: 2500,
                dt,
                t_max: 2.4,
                sample_stride: stride,
                master_seed: 5,
                initial_axis: InitialAxis::Z,
            },
        )
        .unwrap();
        assert_eq!(run.series.len(), xx.series.len(), "recording grids must align");
        let diffs: Vec<f64> =
            (1..=k_opt).map(|k| (run.series.xi2[k] - xx.series.xi2[k]).abs()).collect();
        avgs.push(diffs.iter().sum::<f64>() / diffs.len() as f64);
        let window = &run.series.xi2[..=k_opt];
        let finite: Vec<f64> = window.iter().copied().filter(|v| v.is_finite()).collect();
        let range = finite.iter().cloned().fold(f64::MIN, f64::max)
            - finite.iter().cloned().fold(f64::MAX, f64::min);
        extrema.push(count_prominent_extrema(window, 0.05 * range));
    }
    // Monotone approach to the RWA limit: avg(2.5) > avg(12.5) > avg(inf)=0.
    assert!(
        avgs[0] > avgs[1] && avgs[1] > 0.0,
        "time-averaged |d xi2| not monotone: {avgs:?}"
    );
    assert!(extrema[0] >= 5, "B/N j_bar = 2.5 trace has {} < 5 oscillation extrema", extrema[0]);
    println!(
        "criterion 07 PASS: avg |xi2_B - xi2_RWA| = {:.4} (B=2.5 N jbar) > {:.4} (B=12.5) > 0; \
         {} prominent extrema at B=2.5 (>= 5)",
        avgs[0], avgs[1], extrema[0]
    );
}

/// Criterion 8: planner golden values from the species table.
#[test]
fn criterion_08_planner_golden() {
    let expected: [(&str, u32, f64, f64, f64); 5] = [
        ("Sr88_41S3S1", 41, 0.651, 1.5, 20.0),
        ("Sr88_60S3S1", 60, 1.79, 156.0, 61.3),
        ("Sr88_80S3S1", 80, 3.76, 4800.0, 137.0),
        ("Rb87_60S", 60, 1.74, 138.0, 101.0),
        ("Cs133_60S", 60, 1.62, 107.0, 95.6),
    ];
    assert_eq!(species_table().len(), 5);
    for (label, n, a, c6, tau) in expected {
        let s = find_species(label).unwrap();
        assert_eq!((s.n, s.lattice_spacing_um, s.c6_over_2pi_ghz_um6, s.tau_300k_us), (n, a, c6, tau));
    }

    // J_0 = f^(3/2) Omega to 1e-12.
    let s = find_species("Cs133_60S").unwrap();
    for (omega, f) in [(2.0e6, 0.001), (8.0e6, 0.02)] {
        let p = dressing_from(omega, f, s).unwrap();
        assert!((p.j0_hz - f.powf(1.5) * omega).abs() <= 1e-12 * p.j0_hz.abs());
    }

    // Sr lifetime fit with the pinned quantum defect.
    let sr = find_species("Sr88_80S3S1").unwrap();
    let (a_fit, b_fit) = (sr.fit_a_per_us.unwrap(), sr.fit_b_per_us.unwrap());
    assert_eq!((a_fit, b_fit), (2070.0, 15.8));
    let defect = sr.quantum_defect.unwrap();
    let (_, tau80) = lifetime(80, defect, a_fit, b_fit).unwrap();
    let (_, tau41) = lifetime(41, defect, a_fit, b_fit).unwrap();
    assert!((tau80 - 137.0).abs() <= 1.0, "tau(80) = {tau80}");
    assert!((tau41 - 20.0).abs() <= 1.0, "tau(41) = {tau41}");

    // Inclusive caps, enforced at curve termination.
    assert!(constraint_check(OMEGA_CAP_HZ, N_JBAR_CAP_HZ).pass());
    assert!(!constraint_check(OMEGA_CAP_HZ * 1.0001, 0.0).pass());
    let grid: Vec<f64> = (2..=20).map(|k| 0.25 * k as f64).collect();
    let rows = fig3_overlay(sr, 0.001, &grid, &LatticeSpec::square(14, 14, Boundary::Open)).unwrap();
    let infeasible: Vec<_> = rows.iter().filter(|r| !r.feasible).collect();
    assert!(!infeasible.is_empty(), "overlay never hits a cap");
    for r in &infeasible {
        assert!(
            r.omega_hz > OMEGA_CAP_HZ || r.n_jbar_hz > N_JBAR_CAP_HZ,
            "infeasible row violates no cap"
        );
    }
    assert!(rows.iter().any(|r| r.feasible));
    println!(
        "criterion 08 PASS: table verbatim; tau(80)={tau80:.1} us, tau(41)={tau41:.1} us; \
         caps enforced at curve termination ({} of {} overlay rows infeasible)",
        infeasible.len(),
        rows.len()
    );
}

/// Criterion 9: identical seeds give byte-identical outputs for worker
/// counts 1, 4, and 8, for both simulate and scan.
#[test]
fn criterion_09_determinism_across_workers() {
    let bin = env!("CARGO_BIN_EXE_softsqueeze");
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
version = 1

[lattice]
dimension = 1
lengths = [5]
boundary = "open"

[potential]
kind = "soft-core-vdw"
r_b = 1.5
j_plateau_hz = 0.15915494309189535

[model]
variant = "xx_rwa"

[dissipation]
gamma_minus_per_s = 0.05
gamma_d_per_s = 0.02

[ensemble]
n_traj = 256
dt_s = 0.02
t_max_s = 1.0
sample_stride = 5
master_seed = 31
initial_axis = "z"

[scan]
side_lengths = [4, 5]
r_b = [1.0, 2.0]
"#;
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, config).unwrap();

    let mut sim_outputs = Vec::new();
    let mut scan_outputs = Vec::new();
    for workers in ["1", "4", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(bin)
            .args(["simulate", "--config", cfg_path.to_str().unwrap(), "--workers", workers, "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        sim_outputs.push(std::fs::read(out.join("timeseries.csv")).unwrap());

        let scan_out = dir.path().join(format!("s{workers}"));
        let status = Command::new(bin)
            .args(["scan", "--config", cfg_path.to_str().unwrap(), "--workers", workers, "--out", scan_out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        scan_outputs.push(std::fs::read(scan_out.join("scan.csv")).unwrap());
    }
    assert!(sim_outputs.windows(2).all(|w| w[0] == w[1]), "timeseries differ across workers");
    assert!(scan_outputs.windows(2).all(|w| w[0] == w[1]), "scan tables differ across workers");
    println!(
        "criterion 09 PASS: timeseries ({} bytes) and scan ({} bytes) byte-identical for workers 1/4/8",
        sim_outputs[0].len(),
        scan_outputs[0].len()
    );
}

/// Criterion 10: conservation suite at the default step. Rotational updates
/// keep each |S_i| to machine precision, the classical energy drifts below
/// 1e-6 relative over the squeezing window, and Ising trajectories conserve
/// every S_z bitwise.
#[test]
fn criterion_10_conservation() {
    let lat = build_lattice(&LatticeSpec::chain(8, Boundary::Open)).unwrap();
    let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(2.0, 1.0)).unwrap();

    // Norm conservation over a full ensemble run up to past t_opt.
    let run = run_ensemble(
        &ModelSpec::new(Variant::XxRwa),
        &m,
        &DissipationSpec::none(),
        &xx_ensemble(2000, 0.02, 3.0, 5, 13),
    )
    .unwrap();
    assert!(!run.diagnostics.dt_warning);
    assert!(
        run.diagnostics.max_norm_drift <= 1e-8,
        "norm drift {} > 1e-8",
        run.diagnostics.max_norm_drift
    );
    let t_opt = optimal_squeezing(&run.series).unwrap().t_opt;

    // Classical energy drift for sampled trajectories of each coherent model.
    let mut worst_energy = 0.0f64;
    for model in [
        ModelSpec::new(Variant::XxRwa),
        ModelSpec::new(Variant::Goat),
        ModelSpec::lab_frame(1.0, true),
    ] {
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let mut state =
                softsqueeze::engine::sample_initial(8, InitialAxis::Z, &mut rng);
            let e0 = ctx.classical_energy(&state.spins);
            let mut stepper = Stepper::new(&ctx);
            let steps = (t_opt / 0.02).ceil() as usize;
            for _ in 0..steps {
                stepper.drift_step(&mut state.spins, 0.02);
            }
            let e1 = ctx.classical_energy(&state.spins);
            let rel = (e1 - e0).abs() / (e0.abs().max(1e-12));
            assert!(
                (e1 - e0).abs() <= 1e-6 * e0.abs() + 1e-9,
                "energy drift {:.3e} (relative {rel:.3e})",
                e1 - e0
            );
            worst_energy = worst_energy.max(rel);
        }
    }

    // Ising conserves every per-trajectory S_z bitwise.
    let ctx = DriftCtx::new(&ModelSpec::new(Variant::Ising), &m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let mut state = softsqueeze::engine::sample_initial(8, InitialAxis::X, &mut rng);
        let before: Vec<u64> = state.spins.iter().map(|s| s[2].to_bits()).collect();
        let mut stepper = Stepper::new(&ctx);
        for _ in 0..200 {
            stepper.drift_step(&mut state.spins, 0.02);
        }
        let after: Vec<u64> = state.spins.iter().map(|s| s[2].to_bits()).collect();
        assert_eq!(before, after, "Ising S_z not conserved bitwise");
    }
    // And the ensemble-level <S_z> column is constant to the last bit.
    let ising_run = run_ensemble(
        &ModelSpec::new(Variant::Ising),
        &m,
        &DissipationSpec::none(),
        &xx_ensemble(500, 0.02, 2.0, 10, 3),
    )
    .unwrap();
    for v in &ising_run.series.sz {
        assert_eq!(v.to_bits(), ising_run.series.sz[0].to_bits());
    }

    println!(
        "criterion 10 PASS: norm drift {:.2e} (cap 1e-8), worst relative energy drift \
         {worst_energy:.2e} (cap 1e-6), Ising S_z bitwise-constant",
        run.diagnostics.max_norm_drift
    );
    let _ = TrajectoryState::polarized(1, InitialAxis::Z);
}
