//! Dense operator construction for small systems (operator-identity checks
//! and cross-validation of the matrix-free apply path).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ops::{apply_terms, LocalOp, Term};
use crate::error::{Error, Result};

pub const MAX_DENSE_SPINS: usize = 10;

/// Builders for dense spin operators on `2^N x 2^N`.
///
/// Construction verifies the canonical commutators
/// `[s_i^x, s_j^y] = i delta_ij s_i^z` on sampled site pairs.
pub struct DenseOperatorSet {
    pub n: usize,
    pub dim: usize,
}

impl DenseOperatorSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_SPINS {
            return Err(Error::Resource(format!(
                "dense operators limited to 1..={MAX_DENSE_SPINS} spins, got {n}"
            )));
        }
        let set = DenseOperatorSet { n, dim: 1 << n };
        set.verify_commutators()?;
        Ok(set)
    }

    pub fn site_op(&self, i: usize, op: LocalOp) -> DMatrix<C64> {
        self.from_terms(&[Term::one(1.0, i, op)])
    }

    /// Dense matrix of a term list, built column by column from the
    /// matrix-free apply.
    pub fn from_terms(&self, terms: &[Term]) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, C64::new(0.0, 0.0));
        let mut basis = vec![C64::new(0.0, 0.0); self.dim];
        let mut col = vec![C64::new(0.0, 0.0); self.dim];
        for c in 0..self.dim {
            basis.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            basis[c] = C64::new(1.0, 0.0);
            col.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            apply_terms(terms, self.n, &basis, &mut col);
            for r in 0..self.dim {
                m[(r, c)] = col[r];
            }
        }
        m
    }

    /// Dense Hamiltonian with a hermiticity check (tolerance 1e-13 relative
    /// to the largest entry).
    pub fn hamiltonian(&self, terms: &[Term]) -> Result<DMatrix<C64>> {
        let h = self.from_terms(terms);
        let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let mut max_dev = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                max_dev = max_dev.max((h[(r, c)] - h[(c, r)].conj()).norm());
            }
        }
        if max_dev > 1e-13 * scale {
            return Err(Error::Numerical(format!(
                "Hamiltonian not hermitian: deviation {max_dev:.3e} at scale {scale:.3e}"
            )));
        }
        Ok(h)
    }

    fn verify_commutators(&self) -> Result<()> {
        // Sample a few (i, j) pairs rather than all N^2 at larger N.
        let pairs: Vec<(usize, usize)> = if self.n <= 3 {
            (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).collect()
        } else {
            vec![(0, 0), (0, 1), (self.n - 1, self.n - 1), (1, self.n - 1)]
        };
        for (i, j) in pairs {
            let x = self.site_op(i, LocalOp::X);
            let y = self.site_op(j, LocalOp::Y);
            let comm = &x * &y - &y * &x;
            let expect = if i == j {
                self.site_op(i, LocalOp::Z) * C64::new(0.0, 1.0)
            } else {
                DMatrix::from_element(self.dim, self.dim, C64::new(0.0, 0.0))
            };
            let dev = (&comm - &expect).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if dev > 1e-13 {
                return Err(Error::Numerical(format!(
                    "commutator check failed for sites ({i},{j}): deviation {dev:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Strip the trace: `A - tr(A)/dim * I`.
pub fn traceless(m: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = m.nrows();
    let tr: C64 = (0..dim).map(|k| m[(k, k)]).sum();
    let shift = tr / C64::new(dim as f64, 0.0);
    let mut out = m.clone();
    for k in 0..dim {
        out[(k, k)] -= shift;
    }
    out
}
