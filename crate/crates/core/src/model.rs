//! Hamiltonian variants, their classical drift fields, and the mapping from
//! physical decay/dephasing rates to rotating-frame dephasing channels.
//!
//! The classical equations of motion are `dS_i/dt = Omega_i x S_i` with
//! `Omega_i = dH_cl/dS_i`; the sign convention is pinned by the single-spin
//! Larmor test against the exact propagator (see `oracle` tests).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `sum_{i<j} J_ij s_i^z s_j^z`, with the dressing-induced longitudinal
    /// field optionally retained.
    Ising,
    /// `(1/2) sum_{i<j} J_ij (s_i^y s_j^y + s_i^z s_j^z)`.
    XxRwa,
    /// Ising interactions plus longitudinal field and a transverse drive
    /// `B sum_i s_i^x`, optionally detuned by the mean longitudinal field.
    LabFrameDriven,
    /// Collective one-axis twisting `(j_bar/2) S_z^2`.
    Oat,
    /// Gapped OAT: `sum_{i<j} J_ij s_i . s_j - (j_bar/2) S_x^2`.
    Goat,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    /// Transverse drive amplitude (rad/time); used by `LabFrameDriven` only.
    pub transverse_field: f64,
    /// Subtract the lattice-mean longitudinal field as a uniform detuning.
    pub detuning_compensation: bool,
    /// Apply a pi rotation about x halfway through the evolution.
    pub echo_pulse: bool,
    /// Keep the `(1/2)`-offset longitudinal terms of the Ising Hamiltonian.
    /// Forced true for `LabFrameDriven`.
    pub include_longitudinal: bool,
}

impl ModelSpec {
    pub fn new(variant: Variant) -> Self {
        ModelSpec {
            variant,
            transverse_field: 0.0,
            detuning_compensation: false,
            echo_pulse: false,
            include_longitudinal: false,
        }
    }

    pub fn lab_frame(b: f64, detuning_compensation: bool) -> Self {
        ModelSpec {
            variant: Variant::LabFrameDriven,
            transverse_field: b,
            detuning_compensation,
            echo_pulse: false,
            include_longitudinal: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transverse_field < 0.0 || !self.transverse_field.is_finite() {
            return Err(Error::invalid(format!(
                "transverse field must be finite and >= 0, got {}",
                self.transverse_field
            )));
        }
        Ok(())
    }

    pub fn includes_longitudinal(&self) -> bool {
        self.include_longitudinal || self.variant == Variant::LabFrameDriven
    }
}

/// Physical rates and the derived rotating-frame dephasing channels.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct DissipationSpec {
    pub gamma_minus: f64,
    pub gamma_d: f64,
}

impl DissipationSpec {
    pub fn new(gamma_minus: f64, gamma_d: f64) -> Result<Self> {
        let d = DissipationSpec { gamma_minus, gamma_d };
        d.validate()?;
        Ok(d)
    }

    pub fn none() -> Self {
        DissipationSpec { gamma_minus: 0.0, gamma_d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        rotating_frame_rates(self.gamma_minus, self.gamma_d).map(|_| ())
    }

    pub fn is_zero(&self) -> bool {
        self.gamma_minus == 0.0 && self.gamma_d == 0.0
    }

    /// Rotating-frame dephasing channel rates `(gamma_x, gamma_y, gamma_z)`.
    pub fn channel_rates(&self) -> [f64; 3] {
        let (gx, gy, gz) = rotating_frame_rates(self.gamma_minus, self.gamma_d)
            .expect("validated DissipationSpec");
        [gx, gy, gz]
    }
}

/// Map decay `gamma_-` and dephasing `gamma_d` to the rotating-frame channel
/// rates: dephasing along the transverse-field direction at `gamma_-` and
/// along the two orthogonal directions at `(gamma_- + gamma_d)/2`.
pub fn rotating_frame_rates(gamma_minus: f64, gamma_d: f64) -> Result<(f64, f64, f64)> {
    if gamma_minus < 0.0 || gamma_d < 0.0 || !gamma_minus.is_finite() || !gamma_d.is_finite() {
        return Err(Error::invalid(format!(
            "rates must be finite and >= 0, got gamma_minus={gamma_minus}, gamma_d={gamma_d}"
        )));
    }
    let orth = 0.5 * (gamma_minus + gamma_d);
    Ok((gamma_minus, orth, orth))
}

/// Effective two-level rates from the three-level decay picture:
/// `gamma_- = f*gamma_rg + (1-f)*gamma_eg`, `gamma_d = f*gamma_re`.
pub fn physical_rates(f: f64, gamma_rg: f64, gamma_re: f64, gamma_eg: f64) -> Result<(f64, f64)> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::invalid(format!("Rydberg fraction must lie in (0,1), got {f}")));
    }
    if gamma_rg < 0.0 || gamma_re < 0.0 || gamma_eg < 0.0 {
        return Err(Error::invalid("decay rates must be >= 0"));
    }
    Ok((f * gamma_rg + (1.0 - f) * gamma_eg, f * gamma_re))
}

/// Precomputed drift evaluator for a fixed `(model, couplings)` pair.
pub struct DriftCtx {
    pub variant: Variant,
    neighbors: Vec<Vec<(u32, f64)>>,
    b_parallel: Vec<f64>,
    include_longitudinal: bool,
    transverse_field: f64,
    /// Uniform detuning subtracted from the longitudinal field.
    delta: f64,
    j_bar: f64,
    pub n_sites: usize,
}

impl DriftCtx {
    pub fn new(model: &ModelSpec, couplings: &CouplingMatrix) -> Result<Self> {
        model.validate()?;
        let n = couplings.n_sites;
        let delta = if model.variant == Variant::LabFrameDriven && model.detuning_compensation {
            couplings.b_parallel.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        Ok(DriftCtx {
            variant: model.variant,
            neighbors: couplings.neighbor_lists(),
            b_parallel: couplings.b_parallel.clone(),
            include_longitudinal: model.includes_longitudinal(),
            transverse_field: if model.variant == Variant::LabFrameDriven {
                model.transverse_field
            } else {
                0.0
            },
            delta,
            j_bar: couplings.j_bar,
            n_sites: n,
        })
    }

    /// Static bound on `|Omega_i|` over all reachable spin configurations,
    /// used for time-step warnings.
    pub fn drift_bound(&self) -> f64 {
        let smax = 0.75f64.sqrt();
        let max_row: f64 = (0..self.n_sites)
            .map(|i| 2.0 * self.b_parallel[i])
            .fold(0.0, f64::max);
        let n = self.n_sites as f64;
        match self.variant {
            Variant::Ising => max_row * (smax + if self.include_longitudinal { 0.5 } else { 0.0 }),
            Variant::XxRwa => {
                // Two orthogonal components, each bounded by row_sum * smax / 2.
                0.5 * max_row * smax * 2.0_f64.sqrt()
            }
            Variant::LabFrameDriven => {
                let z = max_row * (smax + 0.5) + self.delta;
                (z * z + self.transverse_field * self.transverse_field).sqrt()
            }
            Variant::Oat => self.j_bar * n * smax,
            Variant::Goat => max_row * smax + self.j_bar * n * smax,
        }
    }

    /// Fill `out[i] = Omega_i` for every site.
    pub fn fill(&self, spins: &[[f64; 3]], out: &mut [[f64; 3]]) {
        debug_assert_eq!(spins.len(), self.n_sites);
        match self.variant {
            Variant::Ising => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut z = 0.0;
                    for &(j, jij) in &self.neighbors[i] {
                        z += jij * spins[j as usize][2];
                    }
                    if self.include_longitudinal {
                        z += self.b_parallel[i];
                    }
                    *o = [0.0, 0.0, z];
                }
            }
            Variant::XxRwa => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut y = 0.0;
                    let mut z = 0.0;
                    for &(j, jij) in &self.neighbors[i] {
                        y += jij * spins[j as usize][1];
                        z += jij * spins[j as usize][2];
                    }
                    *o = [0.0, 0.5 * y, 0.5 * z];
                }
            }
            Variant::LabFrameDriven => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut z = self.b_parallel[i] - self.delta;
                    for &(j, jij) in &self.neighbors[i] {
                        z += jij * spins[j as usize][2];
                    }
                    *o = [self.transverse_field, 0.0, z];
                }
            }
            Variant::Oat => {
                let sz: f64 = spins.iter().map(|s| s[2]).sum();
                let field = self.j_bar * sz;
                for o in out.iter_mut() {
                    *o = [0.0, 0.0, field];
                }
            }
            Variant::Goat => {
                let sx: f64 = spins.iter().map(|s| s[0]).sum();
                let collective_x = self.j_bar * sx;
                for (i, o) in out.iter_mut().enumerate() {
                    let mut f = [0.0, 0.0, 0.0];
                    for &(j, jij) in &self.neighbors[i] {
                        let s = &spins[j as usize];
                        f[0] += jij * s[0];
                        f[1] += jij * s[1];
                        f[2] += jij * s[2];
                    }
                    f[0] -= collective_x;
                    *o = f;
                }
            }
        }
    }

    /// Classical Hamiltonian whose gradient generates [`DriftCtx::fill`].
    pub fn classical_energy(&self, spins: &[[f64; 3]]) -> f64 {
        let mut e = 0.0;
        match self.variant {
            Variant::Ising | Variant::LabFrameDriven => {
                for (i, s) in spins.iter().enumerate() {
                    for &(j, jij) in &self.neighbors[i] {
                        if (j as usize) > i {
                            e += jij * s[2] * spins[j as usize][2];
                        }
                    }
                    if self.include_longitudinal {
                        e += self.b_parallel[i] * s[2];
                    }
                    e += self.transverse_field * s[0] - self.delta * s[2];
                }
            }
            Variant::XxRwa => {
                for (i, s) in spins.iter().enumerate() {
                    for &(j, jij) in &self.neighbors[i] {
                        if (j as usize) > i {
                            let t = &spins[j as usize];
                            e += 0.5 * jij * (s[1] * t[1] + s[2] * t[2]);
                        }
                    }
                }
            }
            Variant::Oat => {
                let sz: f64 = spins.iter().map(|s| s[2]).sum();
                e = 0.5 * self.j_bar * sz * sz;
            }
            Variant::Goat => {
                for (i, s) in spins.iter().enumerate() {
                    for &(j, jij) in &self.neighbors[i] {
                        if (j as usize) > i {
                            let t = &spins[j as usize];
                            e += jij * (s[0] * t[0] + s[1] * t[1] + s[2] * t[2]);
                        }
                    }
                }
                let sx: f64 = spins.iter().map(|s| s[0]).sum();
                e -= 0.5 * self.j_bar * sx * sx;
            }
        }
        e
    }
}

/// Verify the gapped-OAT decomposition
/// `H_XX = 1/2 H_gOAT + 1/2 sum_{i<j} (j_bar - J_ij) s_i^x s_j^x`
/// as dense operators, comparing traceless parts (the identity holds up to
/// an additive constant `-N j_bar / 16`). Returns the maximum absolute
/// entry of the difference, which must be at most `1e-12` times the
/// operator scale.
pub fn goat_decomposition_check(couplings: &CouplingMatrix) -> Result<f64> {
    use crate::oracle::{hamiltonian_terms, traceless, DenseOperatorSet, LocalOp, Term};
    let n = couplings.n_sites;
    let set = DenseOperatorSet::new(n)?;
    let h_xx = set.hamiltonian(&hamiltonian_terms(&ModelSpec::new(Variant::XxRwa), couplings)?)?;
    let mut rhs_terms: Vec<Term> =
        hamiltonian_terms(&ModelSpec::new(Variant::Goat), couplings)?
            .iter()
            .map(|t| t.scaled(num_complex::Complex64::new(0.5, 0.0)))
            .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let c = 0.5 * (couplings.j_bar - couplings.get(i, j));
            if c != 0.0 {
                rhs_terms.push(Term::two(c, i, LocalOp::X, j, LocalOp::X));
            }
        }
    }
    let rhs = set.hamiltonian(&rhs_terms)?;
    let diff = traceless(&h_xx) - traceless(&rhs);
    let scale = h_xx.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let max_dev = diff.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_dev > 1e-12 * scale {
        return Err(Error::Numerical(format!(
            "gOAT decomposition deviates by {max_dev:.3e} at operator scale {scale:.3e}"
        )));
    }
    Ok(max_dev)
}

/// Effective field `Omega_i` for a single site.
pub fn drift_field(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    spins: &[[f64; 3]],
    i: usize,
) -> Result<[f64; 3]> {
    if spins.len() != couplings.n_sites {
        return Err(Error::Dimension(format!(
            "state has {} spins, couplings expect {}",
            spins.len(),
            couplings.n_sites
        )));
    }
    if i >= spins.len() {
        return Err(Error::Dimension(format!("site index {i} out of range")));
    }
    let ctx = DriftCtx::new(model, couplings)?;
    let mut out = vec![[0.0; 3]; spins.len()];
    ctx.fill(spins, &mut out);
    Ok(out[i])
}
