//! Reference propagators: dense Schrödinger evolution and Lindblad master
//! equation integration, both matrix-free over operator term lists.
//!
//! Time stepping uses segmented Taylor expansion of the exact propagator
//! (`exp(G dt)` applied to the vector): the step is split so that the
//! generator norm bound per segment stays below a fixed radius, after which
//! the Taylor series converges to machine precision in a few dozen terms.

use num_complex::Complex64 as C64;

use super::ops::{apply_terms, collective_terms, lindblad_generator_terms, JumpOp, LocalOp, Term};
use crate::analysis;
use crate::error::{Error, Result};
use crate::observables::{Moments, ObservableSeries};

/// Per-segment bound on `||G|| * dt`.
const SEGMENT_RADIUS: f64 = 2.0;
const MAX_TAYLOR_TERMS: usize = 120;
/// Schrödinger states capped at 14 spins, density matrices at 8.
pub const MAX_STATE_SPINS: usize = 14;
pub const MAX_RHO_SPINS: usize = 8;

/// Matrix-free propagator for `d psi / dt = G psi`.
pub struct Propagator {
    terms: Vec<Term>,
    n_slots: usize,
    norm_bound: f64,
}

impl Propagator {
    pub fn new(terms: Vec<Term>, n_slots: usize) -> Self {
        let norm_bound: f64 = terms.iter().map(Term::norm_bound).sum();
        Propagator { terms, n_slots, norm_bound }
    }

    /// Advance `psi` by `dt` in place.
    pub fn advance(&self, psi: &mut [C64], dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let segments = ((self.norm_bound * dt / SEGMENT_RADIUS).ceil() as usize).max(1);
        let delta = dt / segments as f64;
        let dim = psi.len();
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut w = vec![C64::new(0.0, 0.0); dim];
        let mut scratch = vec![C64::new(0.0, 0.0); dim];
        for _ in 0..segments {
            acc.copy_from_slice(psi);
            w.copy_from_slice(psi);
            let mut converged = false;
            for k in 1..=MAX_TAYLOR_TERMS {
                scratch.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                apply_terms(&self.terms, self.n_slots, &w, &mut scratch);
                let scale = C64::new(delta / k as f64, 0.0);
                for (wv, sv) in w.iter_mut().zip(&scratch) {
                    *wv = sv * scale;
                }
                let mut wn = 0.0;
                let mut an = 0.0;
                for (av, wv) in acc.iter_mut().zip(&w) {
                    *av += wv;
                    wn += wv.norm_sqr();
                    an += av.norm_sqr();
                }
                if wn <= 1e-32 * an {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(
                    "propagator Taylor series failed to converge".into(),
                ));
            }
            psi.copy_from_slice(&acc);
        }
        Ok(())
    }
}

fn spins_from_dim(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Dimension(format!("state dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("time grid must be ascending and non-negative"));
    }
    Ok(())
}

/// Product state polarized along `+z` or `+x`.
pub fn coherent_state(n: usize, axis_x: bool) -> Vec<C64> {
    let dim = 1usize << n;
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    if axis_x {
        let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        psi.iter_mut().for_each(|v| *v = amp);
    } else {
        psi[dim - 1] = C64::new(1.0, 0.0);
    }
    psi
}

/// `vec(|psi><psi|)` with row spins in the high bits.
pub fn density_from_state(psi: &[C64]) -> Vec<C64> {
    let dim = psi.len();
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            rho[r * dim + c] = psi[r] * psi[c].conj();
        }
    }
    rho
}

/// Schrödinger evolution `psi(t) = exp(-i H t) psi0` on an ascending grid.
pub fn evolve_state(h: &[Term], psi0: &[C64], t_grid: &[f64]) -> Result<Vec<Vec<C64>>> {
    let n = spins_from_dim(psi0.len())?;
    if n > MAX_STATE_SPINS {
        return Err(Error::Resource(format!(
            "state propagation limited to {MAX_STATE_SPINS} spins, got {n}"
        )));
    }
    validate_grid(t_grid)?;
    let gen: Vec<Term> = h.iter().map(|t| t.scaled(C64::new(0.0, -1.0))).collect();
    let prop = Propagator::new(gen, n);
    let norm0: f64 = psi0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut psi = psi0.to_vec();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t_prev = 0.0;
    for &t in t_grid {
        prop.advance(&mut psi, t - t_prev)?;
        t_prev = t;
        let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if ((norm - norm0) / norm0).abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "propagated state norm drifted by {:.3e} at t = {t}",
                (norm - norm0) / norm0
            )));
        }
        out.push(psi.clone());
    }
    Ok(out)
}

pub struct LindbladRun {
    /// `vec(rho)` at each grid time.
    pub states: Vec<Vec<C64>>,
    /// Smallest eigenvalue of (hermitized) `rho` seen across the grid.
    pub min_eigenvalue: f64,
    /// Largest deviation of `tr(rho)` from its initial value.
    pub max_trace_error: f64,
}

/// Lindblad evolution of `vec(rho0)` under `H` plus per-site channels.
pub fn evolve_lindblad(
    h: &[Term],
    channels: &[(f64, JumpOp)],
    rho0: &[C64],
    t_grid: &[f64],
) -> Result<LindbladRun> {
    let dim2 = rho0.len();
    let dim = (dim2 as f64).sqrt().round() as usize;
    if dim * dim != dim2 {
        return Err(Error::Dimension("density matrix length is not a perfect square".into()));
    }
    let n = spins_from_dim(dim)?;
    if n > MAX_RHO_SPINS {
        return Err(Error::Resource(format!(
            "Lindblad propagation limited to {MAX_RHO_SPINS} spins, got {n}"
        )));
    }
    validate_grid(t_grid)?;
    let gen = lindblad_generator_terms(h, channels, n)?;
    let prop = Propagator::new(gen, 2 * n);
    let trace0 = trace(rho0, dim).re;
    let mut rho = rho0.to_vec();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut min_eig = f64::INFINITY;
    let mut max_trace_err = 0.0f64;
    let mut t_prev = 0.0;
    for &t in t_grid {
        prop.advance(&mut rho, t - t_prev)?;
        t_prev = t;
        let tr = trace(&rho, dim);
        let err = (tr.re - trace0).abs().max(tr.im.abs());
        max_trace_err = max_trace_err.max(err);
        if err > 1e-9 * trace0.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "Lindblad trace drifted by {err:.3e} at t = {t}"
            )));
        }
        let eig = min_eigenvalue(&rho, dim);
        min_eig = min_eig.min(eig);
        if eig < -1e-9 {
            return Err(Error::Numerical(format!(
                "density matrix lost positivity (min eigenvalue {eig:.3e}) at t = {t}"
            )));
        }
        states.push(rho.clone());
    }
    Ok(LindbladRun { states, min_eigenvalue: min_eig, max_trace_error: max_trace_err })
}

pub fn trace(rho: &[C64], dim: usize) -> C64 {
    (0..dim).map(|r| rho[r * dim + r]).sum()
}

fn min_eigenvalue(rho: &[C64], dim: usize) -> f64 {
    use nalgebra::DMatrix;
    // Hermitize before the eigensolve; propagation error can leave a tiny
    // antihermitian residue.
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        0.5 * (rho[r * dim + c] + rho[c * dim + r].conj())
    });
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Collective first and symmetrized second moments of a pure state.
pub fn moments_from_state(psi: &[C64], n: usize) -> Moments {
    let dim = psi.len();
    let ops = [LocalOp::X, LocalOp::Y, LocalOp::Z];
    let mut phi = Vec::with_capacity(3);
    for op in ops {
        let mut out = vec![C64::new(0.0, 0.0); dim];
        apply_terms(&collective_terms(n, op), n, psi, &mut out);
        phi.push(out);
    }
    let mut first = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for mu in 0..3 {
        first[mu] = phi[mu].iter().zip(psi).map(|(f, p)| (p.conj() * f).re).sum();
        for nu in mu..3 {
            let v: f64 = phi[mu].iter().zip(&phi[nu]).map(|(a, b)| (a.conj() * b).re).sum();
            second[mu][nu] = v;
            second[nu][mu] = v;
        }
    }
    Moments { n_sites: n, first, second }
}

/// Collective moments of `vec(rho)`.
pub fn moments_from_rho(rho: &[C64], n: usize) -> Moments {
    let dim = 1usize << n;
    let ops = [LocalOp::X, LocalOp::Y, LocalOp::Z];
    // Row-register collective operators.
    let row_terms: Vec<Vec<Term>> = ops
        .iter()
        .map(|&op| (0..n).map(|i| Term::one(1.0, n + i, op)).collect())
        .collect();
    let mut first = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    let mut a = vec![C64::new(0.0, 0.0); dim * dim];
    let mut b = vec![C64::new(0.0, 0.0); dim * dim];
    for mu in 0..3 {
        a.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        apply_terms(&row_terms[mu], 2 * n, rho, &mut a);
        first[mu] = trace(&a, dim).re;
        for nu in mu..3 {
            // tr(S_nu S_mu rho), real part = symmetrized moment.
            b.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            apply_terms(&row_terms[nu], 2 * n, &a, &mut b);
            let v = trace(&b, dim).re;
            second[mu][nu] = v;
            second[nu][mu] = v;
        }
    }
    Moments { n_sites: n, first, second }
}

/// Schrödinger evolution reduced to an observable series.
pub fn evolve_state_series(h: &[Term], psi0: &[C64], t_grid: &[f64]) -> Result<ObservableSeries> {
    let n = spins_from_dim(psi0.len())?;
    let states = evolve_state(h, psi0, t_grid)?;
    let mut series = ObservableSeries::new(n, 0);
    for (k, psi) in states.iter().enumerate() {
        push_moments(&mut series, t_grid[k], &moments_from_state(psi, n));
    }
    analysis::fill_squeezing(&mut series);
    Ok(series)
}

/// Lindblad evolution reduced to an observable series.
pub fn evolve_lindblad_series(
    h: &[Term],
    channels: &[(f64, JumpOp)],
    rho0: &[C64],
    t_grid: &[f64],
) -> Result<ObservableSeries> {
    let dim = (rho0.len() as f64).sqrt().round() as usize;
    let n = spins_from_dim(dim)?;
    let run = evolve_lindblad(h, channels, rho0, t_grid)?;
    let mut series = ObservableSeries::new(n, 0);
    for (k, rho) in run.states.iter().enumerate() {
        push_moments(&mut series, t_grid[k], &moments_from_rho(rho, n));
    }
    analysis::fill_squeezing(&mut series);
    Ok(series)
}

fn push_moments(series: &mut ObservableSeries, t: f64, m: &Moments) {
    series.push(
        t,
        m.first,
        [
            m.second[0][0],
            m.second[1][1],
            m.second[2][2],
            m.second[0][1],
            m.second[0][2],
            m.second[1][2],
        ],
        [0.0; 3],
    );
}
