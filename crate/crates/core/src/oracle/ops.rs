//! Spin-1/2 operator terms with matrix-free application.
//!
//! Basis convention: bit `i` of the basis index is 1 when spin `i` points up
//! (`s_i^z = +1/2`). Operators are sums of products of at most two
//! single-site factors, which covers every Hamiltonian variant and all
//! Lindblad jump structures used here. Density matrices are treated as
//! vectors on a doubled register (row spins in the high bits, column spins
//! in the low bits), so the same apply routine drives both Schrödinger and
//! Lindblad propagation.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::model::{ModelSpec, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalOp {
    X,
    Y,
    Z,
    /// `s^+ = |up><down|`
    Plus,
    /// `s^- = |down><up|`
    Minus,
    /// `n = |up><up| = 1/2 + s^z`
    UpProj,
}

impl LocalOp {
    /// Operator (spectral) norm, used for propagator step bounds.
    fn norm(self) -> f64 {
        match self {
            LocalOp::X | LocalOp::Y | LocalOp::Z => 0.5,
            LocalOp::Plus | LocalOp::Minus | LocalOp::UpProj => 1.0,
        }
    }

    /// Matrix transpose, for right-multiplication on density matrices.
    /// Returns (op, sign).
    pub fn transpose(self) -> (LocalOp, f64) {
        match self {
            LocalOp::Y => (LocalOp::Y, -1.0),
            LocalOp::Plus => (LocalOp::Minus, 1.0),
            LocalOp::Minus => (LocalOp::Plus, 1.0),
            op => (op, 1.0),
        }
    }

    /// Action on a basis state with bit value `up`: returns
    /// `(flip, amplitude)` such that `op |b> = amplitude |b ^ flip>`.
    #[inline]
    fn action(self, up: bool) -> (bool, C64) {
        match self {
            LocalOp::Z => (false, C64::new(if up { 0.5 } else { -0.5 }, 0.0)),
            LocalOp::UpProj => (false, C64::new(if up { 1.0 } else { 0.0 }, 0.0)),
            LocalOp::X => (true, C64::new(0.5, 0.0)),
            LocalOp::Y => (true, C64::new(0.0, if up { 0.5 } else { -0.5 })),
            LocalOp::Plus => (true, C64::new(if up { 0.0 } else { 1.0 }, 0.0)),
            LocalOp::Minus => (true, C64::new(if up { 1.0 } else { 0.0 }, 0.0)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum TermOps {
    Identity,
    One(usize, LocalOp),
    Two(usize, LocalOp, usize, LocalOp),
}

/// `coeff * (product of local operators)`.
#[derive(Clone, Copy, Debug)]
pub struct Term {
    pub coeff: C64,
    pub ops: TermOps,
}

impl Term {
    pub fn constant(c: C64) -> Self {
        Term { coeff: c, ops: TermOps::Identity }
    }

    pub fn one(c: f64, site: usize, op: LocalOp) -> Self {
        Term { coeff: C64::new(c, 0.0), ops: TermOps::One(site, op) }
    }

    pub fn two(c: f64, i: usize, a: LocalOp, j: usize, b: LocalOp) -> Self {
        debug_assert_ne!(i, j);
        Term { coeff: C64::new(c, 0.0), ops: TermOps::Two(i, a, j, b) }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Term { coeff: self.coeff * c, ops: self.ops }
    }

    pub fn norm_bound(&self) -> f64 {
        let opn = match self.ops {
            TermOps::Identity => 1.0,
            TermOps::One(_, a) => a.norm(),
            TermOps::Two(_, a, _, b) => a.norm() * b.norm(),
        };
        self.coeff.norm() * opn
    }
}

/// `out += terms * psi`, matrix-free. `out` must come in zeroed (or holding a
/// partial sum to accumulate into).
pub fn apply_terms(terms: &[Term], n_slots: usize, psi: &[C64], out: &mut [C64]) {
    let dim = 1usize << n_slots;
    debug_assert_eq!(psi.len(), dim);
    debug_assert_eq!(out.len(), dim);
    for term in terms {
        match term.ops {
            TermOps::Identity => {
                for (o, p) in out.iter_mut().zip(psi) {
                    *o += term.coeff * p;
                }
            }
            TermOps::One(site, op) => {
                let mask = 1usize << site;
                for src in 0..dim {
                    let (flip, amp) = op.action(src & mask != 0);
                    if amp != C64::new(0.0, 0.0) {
                        let dst = if flip { src ^ mask } else { src };
                        out[dst] += term.coeff * amp * psi[src];
                    }
                }
            }
            TermOps::Two(si, a, sj, b) => {
                let mi = 1usize << si;
                let mj = 1usize << sj;
                for src in 0..dim {
                    let (fi, ai) = a.action(src & mi != 0);
                    if ai == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (fj, aj) = b.action(src & mj != 0);
                    if aj == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut dst = src;
                    if fi {
                        dst ^= mi;
                    }
                    if fj {
                        dst ^= mj;
                    }
                    out[dst] += term.coeff * ai * aj * psi[src];
                }
            }
        }
    }
}

/// Hamiltonian of a model variant as a term list over `n` spins.
/// Constant offsets are included, so operator identities hold exactly.
pub fn hamiltonian_terms(model: &ModelSpec, couplings: &CouplingMatrix) -> Result<Vec<Term>> {
    model.validate()?;
    let n = couplings.n_sites;
    if n > 20 {
        return Err(Error::Resource(format!("term builder limited to 20 spins, got {n}")));
    }
    let mut terms = Vec::new();
    let pair = |terms: &mut Vec<Term>, c: f64, i: usize, j: usize, op: LocalOp| {
        if c != 0.0 {
            terms.push(Term::two(c, i, op, j, op));
        }
    };
    match model.variant {
        Variant::Ising | Variant::LabFrameDriven => {
            for i in 0..n {
                for j in (i + 1)..n {
                    pair(&mut terms, couplings.get(i, j), i, j, LocalOp::Z);
                }
            }
            if model.includes_longitudinal() {
                for i in 0..n {
                    if couplings.b_parallel[i] != 0.0 {
                        terms.push(Term::one(couplings.b_parallel[i], i, LocalOp::Z));
                    }
                }
            }
            if model.variant == Variant::LabFrameDriven {
                let delta = if model.detuning_compensation {
                    couplings.b_parallel.iter().sum::<f64>() / n as f64
                } else {
                    0.0
                };
                for i in 0..n {
                    if model.transverse_field != 0.0 {
                        terms.push(Term::one(model.transverse_field, i, LocalOp::X));
                    }
                    if delta != 0.0 {
                        terms.push(Term::one(-delta, i, LocalOp::Z));
                    }
                }
            }
        }
        Variant::XxRwa => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = 0.5 * couplings.get(i, j);
                    pair(&mut terms, c, i, j, LocalOp::Y);
                    pair(&mut terms, c, i, j, LocalOp::Z);
                }
            }
        }
        Variant::Oat => {
            // (j_bar/2) S_z^2 = j_bar [ sum_{i<j} z z + N/8 ]
            let jb = couplings.j_bar;
            for i in 0..n {
                for j in (i + 1)..n {
                    pair(&mut terms, jb, i, j, LocalOp::Z);
                }
            }
            terms.push(Term::constant(C64::new(jb * n as f64 / 8.0, 0.0)));
        }
        Variant::Goat => {
            let jb = couplings.j_bar;
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = couplings.get(i, j);
                    pair(&mut terms, c - jb, i, j, LocalOp::X);
                    pair(&mut terms, c, i, j, LocalOp::Y);
                    pair(&mut terms, c, i, j, LocalOp::Z);
                }
            }
            terms.push(Term::constant(C64::new(-jb * n as f64 / 8.0, 0.0)));
        }
    }
    Ok(terms)
}

/// Collective operator `S_mu = sum_i s_i^mu`.
pub fn collective_terms(n: usize, op: LocalOp) -> Vec<Term> {
    (0..n).map(|i| Term::one(1.0, i, op)).collect()
}

/// Per-site Lindblad jump operators supported by the dissipative oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JumpOp {
    Sx,
    Sy,
    Sz,
    /// Decay `s^-`.
    SMinus,
    /// Dephasing projector `n = 1/2 + s^z`.
    NumProj,
}

impl JumpOp {
    fn local(self) -> LocalOp {
        match self {
            JumpOp::Sx => LocalOp::X,
            JumpOp::Sy => LocalOp::Y,
            JumpOp::Sz => LocalOp::Z,
            JumpOp::SMinus => LocalOp::Minus,
            JumpOp::NumProj => LocalOp::UpProj,
        }
    }
}

/// Terms of the Lindblad generator acting on `vec(rho)` over `2n` slots
/// (row spins at `n..2n`, column spins at `0..n`):
///
/// `L = -i (H x I - I x H^T) + sum_c gamma_c sum_i [ l_i x conj(l_i)
///      - 1/2 (l^dag l)_i x I - 1/2 I x ((l^dag l)^T)_i ]`.
pub fn lindblad_generator_terms(
    h_terms: &[Term],
    channels: &[(f64, JumpOp)],
    n: usize,
) -> Result<Vec<Term>> {
    let mut gen: Vec<Term> = Vec::new();
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    for t in h_terms {
        // -i H rho : H on the row register.
        gen.push(shift_term(t, n).scaled(minus_i));
        // +i rho H : H^T on the column register.
        gen.push(transpose_term(t).scaled(plus_i));
    }
    for &(gamma, jump) in channels {
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::invalid(format!("channel rate must be >= 0, got {gamma}")));
        }
        if gamma == 0.0 {
            continue;
        }
        let l = jump.local();
        for i in 0..n {
            match jump {
                JumpOp::Sx | JumpOp::Sy | JumpOp::Sz => {
                    // l rho l^dag with l hermitian; col factor (l^dag)^T = l^T.
                    let (lt, sign) = l.transpose();
                    gen.push(Term {
                        coeff: C64::new(gamma * sign, 0.0),
                        ops: TermOps::Two(n + i, l, i, lt),
                    });
                    // l^dag l = I/4 on both sides: -gamma/4 total.
                    gen.push(Term::constant(C64::new(-gamma / 4.0, 0.0)));
                }
                JumpOp::SMinus => {
                    // s^- rho s^+ ; col factor (s^+)^T = s^-.
                    gen.push(Term {
                        coeff: C64::new(gamma, 0.0),
                        ops: TermOps::Two(n + i, LocalOp::Minus, i, LocalOp::Minus),
                    });
                    // l^dag l = n.
                    gen.push(Term::one(-0.5 * gamma, n + i, LocalOp::UpProj));
                    gen.push(Term::one(-0.5 * gamma, i, LocalOp::UpProj));
                }
                JumpOp::NumProj => {
                    gen.push(Term {
                        coeff: C64::new(gamma, 0.0),
                        ops: TermOps::Two(n + i, LocalOp::UpProj, i, LocalOp::UpProj),
                    });
                    // l^dag l = n^2 = n.
                    gen.push(Term::one(-0.5 * gamma, n + i, LocalOp::UpProj));
                    gen.push(Term::one(-0.5 * gamma, i, LocalOp::UpProj));
                }
            }
        }
    }
    Ok(gen)
}

/// Move a row-register term up by `n` slots.
fn shift_term(t: &Term, n: usize) -> Term {
    let ops = match t.ops {
        TermOps::Identity => TermOps::Identity,
        TermOps::One(i, a) => TermOps::One(i + n, a),
        TermOps::Two(i, a, j, b) => TermOps::Two(i + n, a, j + n, b),
    };
    Term { coeff: t.coeff, ops }
}

/// Transpose of a (real-coefficient) product term, kept on the column
/// register.
fn transpose_term(t: &Term) -> Term {
    match t.ops {
        TermOps::Identity => *t,
        TermOps::One(i, a) => {
            let (at, sign) = a.transpose();
            Term { coeff: t.coeff * sign, ops: TermOps::One(i, at) }
        }
        TermOps::Two(i, a, j, b) => {
            let (at, sa) = a.transpose();
            let (bt, sb) = b.transpose();
            Term { coeff: t.coeff * sa * sb, ops: TermOps::Two(i, at, j, bt) }
        }
    }
}
