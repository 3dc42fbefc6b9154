//! Discrete truncated Wigner trajectory engine.
//!
//! Initial conditions are sampled from the discrete Wigner function of a
//! spin-polarized product state (four phase-space points per spin). Coherent
//! dynamics integrate `dS_i/dt = Omega_i x S_i` with a fixed-step
//! fourth-order commutator-free Lie-group scheme built from exact per-spin
//! rotations, so `|S_i|` is conserved to machine precision. Dephasing
//! channels are exact rotations about the channel axis by Gaussian angles of
//! variance `gamma_mu * dt`, which reproduces the Lindblad transverse decay
//! `exp(-gamma_mu t / 2)` of the two orthogonal components.
//!
//! Trajectories are partitioned into fixed-size blocks; block partial sums
//! are combined in index order, so results are bit-identical for any worker
//! count (and for the sequential fallback built without the `parallel`
//! feature).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::model::{DissipationSpec, DriftCtx, ModelSpec, Variant};
use crate::observables::{BlockMoments, BlockSum, ObservableSeries};

/// Trajectories per reduction block. Fixed: the block structure (not the
/// worker count) defines the floating-point summation order.
const BLOCK_SIZE: usize = 64;

/// Warn when `max|Omega| * dt` exceeds this.
const STEP_PHASE_WARN: f64 = 0.2;

const MAX_STEPS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialAxis {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    /// Time step, in the run's time units (1/J for dimensionless studies).
    pub dt: f64,
    pub t_max: f64,
    /// Record every k-th step (plus the final step).
    pub sample_stride: usize,
    pub master_seed: u64,
    pub initial_axis: InitialAxis,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 1 {
            return Err(Error::invalid("n_traj must be >= 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::invalid(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.sample_stride < 1 {
            return Err(Error::invalid("sample_stride must be >= 1"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> Result<usize> {
        let steps = (self.t_max / self.dt).round();
        if !steps.is_finite() || steps as usize > MAX_STEPS {
            return Err(Error::Resource(format!(
                "t_max/dt = {steps:.3e} exceeds the step cap of {MAX_STEPS}"
            )));
        }
        Ok((steps as usize).max(1))
    }
}

/// Classical configuration of `N` spins.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub spins: Vec<[f64; 3]>,
    pub time: f64,
}

impl TrajectoryState {
    /// Fully polarized state with no transverse sampling (mean-field test
    /// hook; not part of the DTWA sampling scheme).
    pub fn polarized(n: usize, axis: InitialAxis) -> Self {
        let spin = match axis {
            InitialAxis::X => [0.5, 0.0, 0.0],
            InitialAxis::Z => [0.0, 0.0, 0.5],
        };
        TrajectoryState { spins: vec![spin; n], time: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.spins.iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Draw one trajectory's initial condition: the component along
/// `initial_axis` is +1/2 and each transverse component is an independent
/// fair coin over {-1/2, +1/2}.
pub fn sample_initial(n: usize, axis: InitialAxis, rng: &mut impl Rng) -> TrajectoryState {
    let mut spins = Vec::with_capacity(n);
    for _ in 0..n {
        let a = if rng.gen::<bool>() { 0.5 } else { -0.5 };
        let b = if rng.gen::<bool>() { 0.5 } else { -0.5 };
        spins.push(match axis {
            InitialAxis::Z => [a, b, 0.5],
            InitialAxis::X => [0.5, a, b],
        });
    }
    TrajectoryState { spins, time: 0.0 }
}

/// Pi rotation about x applied to every spin: `(Sx, Sy, Sz) -> (Sx, -Sy, -Sz)`.
pub fn echo_flip(spins: &mut [[f64; 3]]) {
    for s in spins.iter_mut() {
        s[1] = -s[1];
        s[2] = -s[2];
    }
}

/// Rotate `v` by the axis-angle vector `w` (angle = |w|).
///
/// Pure coordinate-axis rotations take a two-component fast path that leaves
/// the on-axis component bitwise untouched (Ising drift then conserves every
/// `S_z` exactly).
#[inline]
fn rotate(v: [f64; 3], w: [f64; 3]) -> [f64; 3] {
    match (w[0] == 0.0, w[1] == 0.0, w[2] == 0.0) {
        (true, true, true) => v,
        (false, true, true) => rotate_about_axis(v, 0, w[0]),
        (true, false, true) => rotate_about_axis(v, 1, w[1]),
        (true, true, false) => rotate_about_axis(v, 2, w[2]),
        _ => {
            let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            let u = [w[0] / theta, w[1] / theta, w[2] / theta];
            let (s, c) = theta.sin_cos();
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cx = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            [
                v[0] * c + cx[0] * s + u[0] * dot * (1.0 - c),
                v[1] * c + cx[1] * s + u[1] * dot * (1.0 - c),
                v[2] * c + cx[2] * s + u[2] * dot * (1.0 - c),
            ]
        }
    }
}

/// Right-handed rotation about coordinate axis `axis` by `theta`.
#[inline]
fn rotate_about_axis(v: [f64; 3], axis: usize, theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let mut out = v;
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    out[a] = c * v[a] - s * v[b];
    out[b] = s * v[a] + c * v[b];
    out
}

/// Reusable integrator for one `(model, couplings)` pair.
///
/// The drift step is the CF4 commutator-free scheme: four drift evaluations
/// per step, applied as exact per-spin rotations.
pub struct Stepper<'a> {
    ctx: &'a DriftCtx,
    k1: Vec<[f64; 3]>,
    k2: Vec<[f64; 3]>,
    k3: Vec<[f64; 3]>,
    k4: Vec<[f64; 3]>,
    stage: Vec<[f64; 3]>,
    stage2: Vec<[f64; 3]>,
}

impl<'a> Stepper<'a> {
    pub fn new(ctx: &'a DriftCtx) -> Self {
        let n = ctx.n_sites;
        Stepper {
            ctx,
            k1: vec![[0.0; 3]; n],
            k2: vec![[0.0; 3]; n],
            k3: vec![[0.0; 3]; n],
            k4: vec![[0.0; 3]; n],
            stage: vec![[0.0; 3]; n],
            stage2: vec![[0.0; 3]; n],
        }
    }

    /// One deterministic drift step of size `dt`.
    pub fn drift_step(&mut self, spins: &mut [[f64; 3]], dt: f64) {
        let n = spins.len();
        self.ctx.fill(spins, &mut self.k1);
        let h2 = dt / 2.0;
        for i in 0..n {
            let w = [h2 * self.k1[i][0], h2 * self.k1[i][1], h2 * self.k1[i][2]];
            self.stage[i] = rotate(spins[i], w);
        }
        self.ctx.fill(&self.stage, &mut self.k2);
        for i in 0..n {
            let w = [h2 * self.k2[i][0], h2 * self.k2[i][1], h2 * self.k2[i][2]];
            self.stage2[i] = rotate(spins[i], w);
        }
        self.ctx.fill(&self.stage2, &mut self.k3);
        // Y4 = exp(h k3 - h/2 k1) Y2
        for i in 0..n {
            let w = [
                dt * self.k3[i][0] - h2 * self.k1[i][0],
                dt * self.k3[i][1] - h2 * self.k1[i][1],
                dt * self.k3[i][2] - h2 * self.k1[i][2],
            ];
            self.stage2[i] = rotate(self.stage[i], w);
        }
        self.ctx.fill(&self.stage2, &mut self.k4);
        let h12 = dt / 12.0;
        for i in 0..n {
            let early = [
                h12 * (3.0 * self.k1[i][0] + 2.0 * self.k2[i][0] + 2.0 * self.k3[i][0] - self.k4[i][0]),
                h12 * (3.0 * self.k1[i][1] + 2.0 * self.k2[i][1] + 2.0 * self.k3[i][1] - self.k4[i][1]),
                h12 * (3.0 * self.k1[i][2] + 2.0 * self.k2[i][2] + 2.0 * self.k3[i][2] - self.k4[i][2]),
            ];
            let late = [
                h12 * (-self.k1[i][0] + 2.0 * self.k2[i][0] + 2.0 * self.k3[i][0] + 3.0 * self.k4[i][0]),
                h12 * (-self.k1[i][1] + 2.0 * self.k2[i][1] + 2.0 * self.k3[i][1] + 3.0 * self.k4[i][1]),
                h12 * (-self.k1[i][2] + 2.0 * self.k2[i][2] + 2.0 * self.k3[i][2] + 3.0 * self.k4[i][2]),
            ];
            spins[i] = rotate(rotate(spins[i], early), late);
        }
    }

    /// Stochastic dephasing: for each spin and each axis with a positive
    /// channel rate, rotate about that axis by an angle drawn from
    /// `Normal(0, gamma_mu * dt)`. Rotations are isometries, so `|S_i|` is
    /// unchanged.
    pub fn noise_step(
        spins: &mut [[f64; 3]],
        channel_rates: [f64; 3],
        dt: f64,
        rng: &mut impl Rng,
    ) {
        let std = [
            (channel_rates[0] * dt).sqrt(),
            (channel_rates[1] * dt).sqrt(),
            (channel_rates[2] * dt).sqrt(),
        ];
        for s in spins.iter_mut() {
            #[cfg(debug_assertions)]
            let norm_before = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
            for axis in 0..3 {
                if channel_rates[axis] > 0.0 {
                    let g: f64 = rng.sample(StandardNormal);
                    *s = rotate_about_axis(*s, axis, std[axis] * g);
                }
            }
            #[cfg(debug_assertions)]
            {
                let norm_after = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
                debug_assert!(
                    (norm_after - norm_before).abs() < 1e-12,
                    "dephasing changed |S|^2 by {}",
                    norm_after - norm_before
                );
            }
        }
    }

    /// Operator-split update: drift, then noise.
    pub fn step(
        &mut self,
        state: &mut TrajectoryState,
        channel_rates: [f64; 3],
        dt: f64,
        rng: &mut impl Rng,
    ) {
        self.drift_step(&mut state.spins, dt);
        if channel_rates.iter().any(|&g| g > 0.0) {
            Self::noise_step(&mut state.spins, channel_rates, dt, rng);
        }
        state.time += dt;
    }
}

/// Single-call form of the operator-split update (spec-level API; allocates
/// scratch buffers internally; use [`Stepper`] in hot loops).
pub fn step_trajectory(
    state: &mut TrajectoryState,
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    dissipation: &DissipationSpec,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    if state.spins.len() != couplings.n_sites {
        return Err(Error::Dimension(format!(
            "state has {} spins, couplings expect {}",
            state.spins.len(),
            couplings.n_sites
        )));
    }
    dissipation.validate()?;
    let ctx = DriftCtx::new(model, couplings)?;
    let mut stepper = Stepper::new(&ctx);
    stepper.step(state, dissipation.channel_rates(), dt, rng);
    if !state.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite spin components after step at t = {}",
            state.time
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// Largest observed `| |S_i|^2 - 3/4 |` at recorded times.
    pub max_norm_drift: f64,
    /// Static bound on `max_i |Omega_i|`.
    pub drift_bound: f64,
    /// Set when `drift_bound * dt` exceeded the warning threshold.
    pub dt_warning: bool,
    pub n_steps: usize,
    pub echo_step: Option<usize>,
}

/// A completed ensemble run: reduced series plus the per-block sums that
/// produced it (kept for block-bootstrap error bars).
pub struct EnsembleRun {
    pub series: ObservableSeries,
    pub blocks: BlockMoments,
    pub diagnostics: RunDiagnostics,
}

/// Run an ensemble with the dissipation channels derived from physical rates.
pub fn run_ensemble(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    dissipation: &DissipationSpec,
    ensemble: &EnsembleSpec,
) -> Result<EnsembleRun> {
    dissipation.validate()?;
    if !dissipation.is_zero()
        && matches!(model.variant, Variant::Ising | Variant::LabFrameDriven)
    {
        return Err(Error::invalid(
            "dissipation is supported only for rotating-frame variants (xx_rwa, oat, goat)",
        ));
    }
    run_ensemble_channels(model, couplings, dissipation.channel_rates(), ensemble)
}

/// Run an ensemble with explicit per-axis dephasing channel rates.
pub fn run_ensemble_channels(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    channel_rates: [f64; 3],
    ensemble: &EnsembleSpec,
) -> Result<EnsembleRun> {
    run_inner(model, couplings, channel_rates, ensemble, true)
}

/// Sequential execution regardless of the `parallel` feature (bench
/// baseline; output is bit-identical to the parallel path).
pub fn run_ensemble_sequential(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    dissipation: &DissipationSpec,
    ensemble: &EnsembleSpec,
) -> Result<EnsembleRun> {
    dissipation.validate()?;
    run_inner(model, couplings, dissipation.channel_rates(), ensemble, false)
}

struct GridPlan {
    n_steps: usize,
    echo_step: Option<usize>,
    /// Recorded step indices, ascending.
    recorded: Vec<usize>,
}

fn plan_grid(ensemble: &EnsembleSpec, echo: bool) -> Result<GridPlan> {
    let n_steps = ensemble.n_steps()?;
    let recorded: Vec<usize> =
        (0..=n_steps).filter(|k| k % ensemble.sample_stride == 0 || *k == n_steps).collect();
    Ok(GridPlan { n_steps, echo_step: echo.then_some(n_steps / 2), recorded })
}

fn run_inner(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    channel_rates: [f64; 3],
    ensemble: &EnsembleSpec,
    parallel: bool,
) -> Result<EnsembleRun> {
    model.validate()?;
    ensemble.validate()?;
    if channel_rates.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(Error::invalid("channel rates must be finite and >= 0"));
    }
    let ctx = DriftCtx::new(model, couplings)?;
    let plan = plan_grid(ensemble, model.echo_pulse)?;

    let drift_bound = ctx.drift_bound();
    let dt_warning = drift_bound * ensemble.dt > STEP_PHASE_WARN;
    if dt_warning {
        log::warn!(
            "time step too coarse: max|Omega|*dt <= {:.3} exceeds {}",
            drift_bound * ensemble.dt,
            STEP_PHASE_WARN
        );
    }

    let n_blocks = ensemble.n_traj.div_ceil(BLOCK_SIZE);
    let worker = |block: usize| -> Result<(BlockSum, f64)> {
        let start = block * BLOCK_SIZE;
        let end = ((block + 1) * BLOCK_SIZE).min(ensemble.n_traj);
        block_worker(&ctx, channel_rates, ensemble, &plan, start, end)
    };

    let results: Result<Vec<(BlockSum, f64)>> = if parallel {
        #[cfg(feature = "parallel")]
        {
            (0..n_blocks).into_par_iter().map(worker).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n_blocks).map(worker).collect()
        }
    } else {
        (0..n_blocks).map(worker).collect()
    };
    let results = results?;

    let max_norm_drift = results.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let blocks = BlockMoments {
        n_sites: couplings.n_sites,
        times: plan.recorded.iter().map(|&k| k as f64 * ensemble.dt).collect(),
        blocks: results.into_iter().map(|(b, _)| b).collect(),
    };
    let mut series = blocks.combine()?;
    if !series.moments_finite() {
        return Err(Error::Numerical("non-finite ensemble moments".into()));
    }
    crate::analysis::fill_squeezing(&mut series);
    Ok(EnsembleRun {
        series,
        blocks,
        diagnostics: RunDiagnostics {
            max_norm_drift,
            drift_bound,
            dt_warning,
            n_steps: plan.n_steps,
            echo_step: plan.echo_step,
        },
    })
}

fn block_worker(
    ctx: &DriftCtx,
    channel_rates: [f64; 3],
    ensemble: &EnsembleSpec,
    plan: &GridPlan,
    start: usize,
    end: usize,
) -> Result<(BlockSum, f64)> {
    let n = ctx.n_sites;
    let mut sums = BlockSum::zeros(plan.recorded.len(), end - start);
    let mut stepper = Stepper::new(ctx);
    let mut max_norm_drift = 0.0f64;
    let noisy = channel_rates.iter().any(|&g| g > 0.0);

    for traj in start..end {
        let mut rng = ChaCha8Rng::seed_from_u64(ensemble.master_seed);
        rng.set_stream(traj as u64);
        let mut state = sample_initial(n, ensemble.initial_axis, &mut rng);
        let mut rec = 0usize;
        for k in 0..=plan.n_steps {
            if rec < plan.recorded.len() && plan.recorded[rec] == k {
                if !state.is_finite() {
                    return Err(Error::Numerical(format!(
                        "trajectory {traj} became non-finite at step {k}"
                    )));
                }
                accumulate(&mut sums, rec, &state.spins, &mut max_norm_drift);
                rec += 1;
            }
            if k == plan.n_steps {
                break;
            }
            // The echo pulse fires between integration steps, after the
            // pre-pulse state has been recorded.
            if plan.echo_step == Some(k) {
                echo_flip(&mut state.spins);
            }
            stepper.drift_step(&mut state.spins, ensemble.dt);
            if noisy {
                Stepper::noise_step(&mut state.spins, channel_rates, ensemble.dt, &mut rng);
            }
            state.time += ensemble.dt;
        }
    }
    Ok((sums, max_norm_drift))
}

fn accumulate(sums: &mut BlockSum, rec: usize, spins: &[[f64; 3]], max_norm_drift: &mut f64) {
    let mut x = [0.0f64; 3];
    for s in spins {
        x[0] += s[0];
        x[1] += s[1];
        x[2] += s[2];
        let norm = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        let drift = (norm - 0.75).abs();
        if drift > *max_norm_drift {
            *max_norm_drift = drift;
        }
    }
    let p = &mut sums.p[rec];
    for mu in 0..3 {
        p[mu] += x[mu];
    }
    let q = &mut sums.q[rec];
    q[0] += x[0] * x[0];
    q[1] += x[1] * x[1];
    q[2] += x[2] * x[2];
    q[3] += x[0] * x[1];
    q[4] += x[0] * x[2];
    q[5] += x[1] * x[2];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, coupling_matrix, Boundary, LatticeSpec, PotentialSpec};
    use approx::assert_relative_eq;

    fn ens(n_traj: usize, dt: f64, t_max: f64, seed: u64, axis: InitialAxis) -> EnsembleSpec {
        EnsembleSpec {
            n_traj,
            dt,
            t_max,
            sample_stride: 5,
            master_seed: seed,
            initial_axis: axis,
        }
    }

    fn single_site() -> CouplingMatrix {
        CouplingMatrix::from_values(1, vec![0.0], 0).unwrap()
    }

    #[test]
    fn sampling_matches_discrete_wigner_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 2000;
        let state = sample_initial(n, InitialAxis::Z, &mut rng);
        let mut sum_x = 0.0;
        for s in &state.spins {
            assert_eq!(s[2], 0.5, "polarized component is not sampled");
            assert!(s[0] == 0.5 || s[0] == -0.5);
            assert!(s[1] == 0.5 || s[1] == -0.5);
            assert_eq!(s[0] * s[0], 0.25);
            sum_x += s[0];
        }
        // Fair coin: mean within 5 sigma of zero.
        assert!((sum_x / n as f64).abs() < 5.0 * 0.5 / (n as f64).sqrt());

        let state = sample_initial(n, InitialAxis::X, &mut rng);
        for s in &state.spins {
            assert_eq!(s[0], 0.5);
            assert!(s[1].abs() == 0.5 && s[2].abs() == 0.5);
        }
    }

    #[test]
    fn free_spin_is_frozen() {
        let model = ModelSpec::new(Variant::XxRwa);
        let m = single_site();
        let run = run_ensemble(
            &model,
            &m,
            &DissipationSpec::none(),
            &ens(8, 0.01, 1.0, 3, InitialAxis::Z),
        )
        .unwrap();
        for k in 0..run.series.len() {
            assert_eq!(run.series.sz[k], 0.5);
            assert_eq!(run.series.sx[k], run.series.sx[0]);
        }
    }

    #[test]
    fn larmor_precession_matches_rabi_formula() {
        // Single spin, transverse drive B about x, start along z. The
        // undistributed (mean-field) trajectory follows S_z(t) = cos(Bt)/2
        // exactly; the sampled ensemble reproduces it in the mean.
        let b = 1.3;
        let model = ModelSpec::lab_frame(b, false);
        let m = single_site();
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let mut state = TrajectoryState::polarized(1, InitialAxis::Z);
        let mut stepper = Stepper::new(&ctx);
        let dt = 0.005;
        for k in 0..800 {
            stepper.drift_step(&mut state.spins, dt);
            let t = (k + 1) as f64 * dt;
            assert_relative_eq!(state.spins[0][2], 0.5 * (b * t).cos(), epsilon = 1e-9);
            // The undistributed state has |S|^2 = 1/4; rotations keep it.
            let norm: f64 = state.spins[0].iter().map(|v| v * v).sum();
            assert!((norm - 0.25).abs() < 1e-12);
        }

        let spec = ens(2000, 0.005, 4.0, 9, InitialAxis::Z);
        let run = run_ensemble(&model, &m, &DissipationSpec::none(), &spec).unwrap();
        for (k, &t) in run.series.times.iter().enumerate() {
            let tol = 4.0 * run.series.err_sz[k].max(1e-9);
            assert!(
                (run.series.sz[k] - 0.5 * (b * t).cos()).abs() < tol,
                "t={t}: {} vs {}",
                run.series.sz[k],
                0.5 * (b * t).cos()
            );
        }
        assert!(run.diagnostics.max_norm_drift < 1e-12);
    }

    /// The drift integrator must be fourth-order accurate: halving the step
    /// reduces the error by ~16.
    #[test]
    fn cf4_convergence_order() {
        let lat = build_lattice(&LatticeSpec::chain(3, Boundary::Open)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::soft_core(1.5, 1.0)).unwrap();
        let model = ModelSpec::new(Variant::XxRwa);
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let start = vec![[0.5, 0.5, 0.5], [-0.5, 0.5, 0.5], [0.5, -0.5, 0.5]];
        let t_final = 2.0;
        let run_with = |steps: usize| -> Vec<[f64; 3]> {
            let mut spins = start.clone();
            let mut stepper = Stepper::new(&ctx);
            for _ in 0..steps {
                stepper.drift_step(&mut spins, t_final / steps as f64);
            }
            spins
        };
        let reference = run_with(131072);
        let err = |steps: usize| -> f64 {
            run_with(steps)
                .iter()
                .zip(&reference)
                .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
                .fold(0.0, f64::max)
        };
        let e1 = err(128);
        let e2 = err(256);
        let order = (e1 / e2).log2();
        assert!(order > 3.7, "observed order {order}, errors {e1:.3e}/{e2:.3e}");
    }

    #[test]
    fn coherent_run_conserves_norm_and_energy() {
        let lat = build_lattice(&LatticeSpec::chain(8, Boundary::Open)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(2.0, 1.0)).unwrap();
        let model = ModelSpec::new(Variant::XxRwa);
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut state = sample_initial(8, InitialAxis::Z, &mut rng);
        let e0 = ctx.classical_energy(&state.spins);
        let mut stepper = Stepper::new(&ctx);
        for _ in 0..300 {
            stepper.drift_step(&mut state.spins, 0.02);
        }
        for s in &state.spins {
            let norm = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
            assert!((norm - 0.75).abs() < 1e-12);
        }
        let e1 = ctx.classical_energy(&state.spins);
        assert!(
            (e1 - e0).abs() <= 1e-6 * e0.abs() + 1e-9,
            "energy drift {:.3e}",
            e1 - e0
        );
    }

    #[test]
    fn ising_conserves_sz_bitwise() {
        let lat = build_lattice(&LatticeSpec::chain(6, Boundary::Periodic)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(2.0, 1.0)).unwrap();
        let model = ModelSpec::new(Variant::Ising);
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = sample_initial(6, InitialAxis::X, &mut rng);
        let z0: Vec<u64> = state.spins.iter().map(|s| s[2].to_bits()).collect();
        let mut stepper = Stepper::new(&ctx);
        for _ in 0..200 {
            stepper.drift_step(&mut state.spins, 0.02);
        }
        let z1: Vec<u64> = state.spins.iter().map(|s| s[2].to_bits()).collect();
        assert_eq!(z0, z1);
    }

    #[test]
    fn dephasing_rotation_calibration() {
        // gamma_z only: <S_x>(t) = exp(-gamma t / 2)/2 over the ensemble.
        let gamma = 2.0;
        let model = ModelSpec::new(Variant::XxRwa);
        let m = single_site();
        let spec = EnsembleSpec {
            n_traj: 40_000,
            dt: 1e-3,
            t_max: 1.0,
            sample_stride: 100,
            master_seed: 21,
            initial_axis: InitialAxis::X,
        };
        let run = run_ensemble_channels(&model, &m, [0.0, 0.0, gamma], &spec).unwrap();
        for (k, &t) in run.series.times.iter().enumerate() {
            let expected = 0.5 * (-gamma * t / 2.0).exp();
            assert!(
                (run.series.sx[k] - expected).abs() < 4.0 * run.series.err_sx[k].max(1e-4),
                "t={t}: got {} expected {expected}",
                run.series.sx[k]
            );
        }
    }

    #[test]
    fn echo_reverses_static_longitudinal_phase() {
        // Mean-field hook: transverse components zeroed, so the Ising
        // interaction field vanishes and only B_par = J/2 acts. The echo
        // must return S_x to its initial value exactly.
        let m = CouplingMatrix::from_values(2, vec![0.0, 1.0, 1.0, 0.0], 1).unwrap();
        let model = ModelSpec {
            echo_pulse: true,
            include_longitudinal: true,
            ..ModelSpec::new(Variant::Ising)
        };
        let ctx = DriftCtx::new(&model, &m).unwrap();
        let mut spins = vec![[0.5, 0.0, 0.0]; 2];
        let mut stepper = Stepper::new(&ctx);
        let n_steps = 100;
        for k in 0..n_steps {
            if k == n_steps / 2 {
                echo_flip(&mut spins);
            }
            stepper.drift_step(&mut spins, 0.02);
        }
        // Not at the +x axis without the echo (total phase J/2 * 2 = 1 rad).
        for s in &spins {
            assert_relative_eq!(s[0], 0.5, epsilon = 1e-10);
            assert_relative_eq!(s[1], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn parallel_and_sequential_runs_are_bit_identical() {
        let lat = build_lattice(&LatticeSpec::chain(5, Boundary::Open)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::soft_core(1.5, 1.0)).unwrap();
        let model = ModelSpec::new(Variant::XxRwa);
        let d = DissipationSpec::new(0.05, 0.02).unwrap();
        let spec = ens(300, 0.01, 0.5, 12345, InitialAxis::Z);
        let a = run_ensemble(&model, &m, &d, &spec).unwrap();
        let b = run_ensemble_sequential(&model, &m, &d, &spec).unwrap();
        assert_eq!(a.series.len(), b.series.len());
        for k in 0..a.series.len() {
            assert_eq!(a.series.sx[k].to_bits(), b.series.sx[k].to_bits());
            assert_eq!(a.series.syz[k].to_bits(), b.series.syz[k].to_bits());
            assert_eq!(a.series.xi2[k].to_bits(), b.series.xi2[k].to_bits());
        }
    }

    #[test]
    fn dissipation_rejected_outside_rotating_frame() {
        let m = single_site();
        let d = DissipationSpec::new(0.1, 0.0).unwrap();
        let spec = ens(4, 0.01, 0.1, 1, InitialAxis::Z);
        for model in [ModelSpec::new(Variant::Ising), ModelSpec::lab_frame(1.0, false)] {
            assert!(matches!(
                run_ensemble(&model, &m, &d, &spec),
                Err(Error::InvalidSpec(_))
            ));
        }
        assert!(run_ensemble(&ModelSpec::new(Variant::Oat), &m, &d, &spec).is_ok());
    }

    #[test]
    fn non_finite_state_aborts_with_numerical_error() {
        let m = single_site();
        let model = ModelSpec::new(Variant::XxRwa);
        let mut state = TrajectoryState { spins: vec![[f64::NAN, 0.0, 0.5]], time: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = step_trajectory(
            &mut state,
            &model,
            &m,
            &DissipationSpec::none(),
            0.01,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn initial_moments_of_coherent_state() {
        let lat = build_lattice(&LatticeSpec::chain(6, Boundary::Open)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(1.0, 1.0)).unwrap();
        let run = run_ensemble(
            &ModelSpec::new(Variant::XxRwa),
            &m,
            &DissipationSpec::none(),
            &ens(4000, 0.02, 0.1, 7, InitialAxis::Z),
        )
        .unwrap();
        let n = 6.0;
        // <S_z> = N/2 exactly; <S^2> = (N/2)(N/2+1) up to transverse
        // sampling noise (the sampled components square to 1/4 identically).
        assert_eq!(run.series.sz[0], n / 2.0);
        let s2 = run.series.s2[0];
        assert_relative_eq!(s2, (n / 2.0) * (n / 2.0 + 1.0), max_relative = 0.02);
        assert_relative_eq!(run.series.szz[0], n * n / 4.0, max_relative = 1e-12);
        assert_relative_eq!(run.series.xi2[0], 1.0, max_relative = 0.05);
    }

    #[test]
    fn mean_field_hook_reduces_to_pure_precession() {
        let lat = build_lattice(&LatticeSpec::chain(4, Boundary::Periodic)).unwrap();
        let m = coupling_matrix(&lat, &PotentialSpec::sharp_cutoff(1.0, 1.0)).unwrap();
        let model = ModelSpec {
            include_longitudinal: true,
            ..ModelSpec::new(Variant::Ising)
        };
        let ctx = DriftCtx::new(&model, &m).unwrap();
        // Undistributed state: transverse components zero, S_z = 1/2.
        let mut state = TrajectoryState::polarized(4, InitialAxis::Z);
        // Constant field: Sz_j = 1/2 everywhere -> Omega_z = sum_j J/2 + B_par
        // = 1 + 1 = 2 for the periodic r_b=1 chain; z components never move.
        let mut stepper = Stepper::new(&ctx);
        let mut fields = vec![[0.0; 3]; 4];
        ctx.fill(&state.spins, &mut fields);
        for f in &fields {
            assert_relative_eq!(f[2], 2.0);
        }
        for _ in 0..50 {
            stepper.drift_step(&mut state.spins, 0.02);
        }
        for s in &state.spins {
            assert_eq!(s[2], 0.5);
            assert_eq!(s[0], 0.0);
            assert_eq!(s[1], 0.0);
        }
    }
}
