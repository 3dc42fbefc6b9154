//! Lattice geometries and soft-core coupling matrices.
//!
//! Distances are measured in lattice units (spacing fixed at 1); physical
//! spacings enter only through the [`crate::planner`] module. Couplings are
//! angular frequencies (rad/time).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Geometry of a 1D chain or 2D square lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// 1 or 2.
    pub dimension: usize,
    /// Per-axis site counts; length must equal `dimension`.
    pub lengths: Vec<usize>,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn chain(len: usize, boundary: Boundary) -> Self {
        LatticeSpec { dimension: 1, lengths: vec![len], boundary }
    }

    pub fn square(lx: usize, ly: usize, boundary: Boundary) -> Self {
        LatticeSpec { dimension: 2, lengths: vec![lx, ly], boundary }
    }

    pub fn n_sites(&self) -> usize {
        self.lengths.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(Error::invalid(format!(
                "lattice dimension must be 1 or 2, got {}",
                self.dimension
            )));
        }
        if self.lengths.len() != self.dimension {
            return Err(Error::invalid(format!(
                "expected {} lattice lengths, got {}",
                self.dimension,
                self.lengths.len()
            )));
        }
        if self.lengths.iter().any(|&l| l == 0) {
            return Err(Error::invalid("lattice axis with zero length"));
        }
        Ok(())
    }
}

/// Interaction potential as a function of distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `J(r) = J_plateau / (1 + (r/r_b)^6)`: plateau inside the blockade
    /// radius with a van der Waals tail.
    SoftCoreVdw,
    /// `J(r) = J_plateau` for `0 < r <= r_b`, zero beyond.
    SharpCutoff,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Blockade radius in lattice units.
    pub r_b: f64,
    /// Plateau coupling strength (rad/time).
    pub j_plateau: f64,
}

impl PotentialSpec {
    pub fn soft_core(r_b: f64, j_plateau: f64) -> Self {
        PotentialSpec { kind: PotentialKind::SoftCoreVdw, r_b, j_plateau }
    }

    pub fn sharp_cutoff(r_b: f64, j_plateau: f64) -> Self {
        PotentialSpec { kind: PotentialKind::SharpCutoff, r_b, j_plateau }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_b > 0.0) || !self.r_b.is_finite() {
            return Err(Error::invalid(format!("blockade radius must be > 0, got {}", self.r_b)));
        }
        if !(self.j_plateau > 0.0) || !self.j_plateau.is_finite() {
            return Err(Error::invalid(format!(
                "plateau coupling must be > 0, got {}",
                self.j_plateau
            )));
        }
        Ok(())
    }

    /// Coupling at distance `r` (lattice units). Zero on the diagonal (`r = 0`).
    pub fn coupling(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self.kind {
            PotentialKind::SoftCoreVdw => self.j_plateau / (1.0 + (r / self.r_b).powi(6)),
            PotentialKind::SharpCutoff => {
                if r <= self.r_b {
                    self.j_plateau
                } else {
                    0.0
                }
            }
        }
    }
}

/// A built lattice: integer site coordinates in row-major order plus the
/// metric induced by the boundary conditions.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub spec: LatticeSpec,
    /// Site coordinates; the second component is 0 for 1D chains.
    pub sites: Vec<[i64; 2]>,
}

/// Enumerate site coordinates in row-major order.
pub fn build_lattice(spec: &LatticeSpec) -> Result<Lattice> {
    spec.validate()?;
    let mut sites = Vec::with_capacity(spec.n_sites());
    match spec.dimension {
        1 => {
            for x in 0..spec.lengths[0] {
                sites.push([x as i64, 0]);
            }
        }
        2 => {
            for x in 0..spec.lengths[0] {
                for y in 0..spec.lengths[1] {
                    sites.push([x as i64, y as i64]);
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(Lattice { spec: spec.clone(), sites })
}

impl Lattice {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Pairwise distance; minimum-image convention under periodic boundaries.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let mut d2 = 0.0;
        for (axis, &len) in self.spec.lengths.iter().enumerate() {
            let mut d = (self.sites[i][axis] - self.sites[j][axis]).unsigned_abs();
            if self.spec.boundary == Boundary::Periodic {
                d = d.min(len as u64 - d);
            }
            d2 += (d as f64) * (d as f64);
        }
        d2.sqrt()
    }

    /// Index of a bulk reference site: any site under periodic boundaries,
    /// the site closest to the geometric center under open boundaries
    /// (ties broken by lowest index).
    pub fn bulk_site(&self) -> usize {
        match self.spec.boundary {
            Boundary::Periodic => 0,
            Boundary::Open => {
                let center: Vec<f64> =
                    self.spec.lengths.iter().map(|&l| (l as f64 - 1.0) / 2.0).collect();
                let mut best = 0;
                let mut best_d2 = f64::INFINITY;
                for (idx, site) in self.sites.iter().enumerate() {
                    let d2: f64 = center
                        .iter()
                        .enumerate()
                        .map(|(a, c)| (site[a] as f64 - c) * (site[a] as f64 - c))
                        .sum();
                    if d2 < best_d2 - 1e-12 {
                        best = idx;
                        best_d2 = d2;
                    }
                }
                best
            }
        }
    }
}

/// Symmetric interaction matrix with derived aggregates.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub n_sites: usize,
    /// Row-major `n x n` couplings, zero diagonal, exactly symmetric.
    values: Vec<f64>,
    /// Mean coupling, normalized so that `(N-1) * j_bar = (1/N) sum_{i,j} J_ij`.
    pub j_bar: f64,
    /// Number of sites within one blockade radius of a bulk reference site
    /// (central site excluded).
    pub n_b: usize,
    /// Longitudinal field `B_i = sum_j J_ij / 2` per site (rad/time).
    pub b_parallel: Vec<f64>,
}

impl CouplingMatrix {
    /// Build from an explicit symmetric matrix; `n_b` must be supplied by the
    /// caller when no lattice geometry is available.
    pub fn from_values(n: usize, values: Vec<f64>, n_b: usize) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "coupling matrix: expected {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::invalid("coupling matrix diagonal must be zero"));
            }
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::invalid("coupling matrix must be symmetric"));
                }
                if values[i * n + j] < 0.0 {
                    return Err(Error::invalid("couplings must be non-negative"));
                }
            }
        }
        let mut m = CouplingMatrix { n_sites: n, values, j_bar: 0.0, n_b, b_parallel: vec![] };
        m.finalize();
        Ok(m)
    }

    fn finalize(&mut self) {
        let n = self.n_sites;
        self.b_parallel = (0..n).map(|i| self.row_sum(i) / 2.0).collect();
        let total: f64 = self.b_parallel.iter().map(|b| 2.0 * b).sum();
        self.j_bar = if n > 1 { total / (n as f64 * (n as f64 - 1.0)) } else { 0.0 };
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_sites + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_sites..(i + 1) * self.n_sites]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// Sparse view: per site, the list of `(neighbor, J)` with nonzero coupling.
    pub fn neighbor_lists(&self) -> Vec<Vec<(u32, f64)>> {
        (0..self.n_sites)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| j != i && v != 0.0)
                    .map(|(j, &v)| (j as u32, v))
                    .collect()
            })
            .collect()
    }

    /// Scale all couplings by a constant (e.g. a planner-derived `J_0`).
    pub fn scaled(&self, factor: f64) -> CouplingMatrix {
        let mut m = CouplingMatrix {
            n_sites: self.n_sites,
            values: self.values.iter().map(|v| v * factor).collect(),
            j_bar: 0.0,
            n_b: self.n_b,
            b_parallel: vec![],
        };
        m.finalize();
        m
    }
}

/// Evaluate the potential on all site pairs and populate aggregates.
pub fn coupling_matrix(lattice: &Lattice, potential: &PotentialSpec) -> Result<CouplingMatrix> {
    potential.validate()?;
    let n = lattice.n_sites();
    let mut values = vec![0.0; n * n];
    // Upper triangle, then mirror: symmetry is bitwise by construction.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = potential.coupling(lattice.distance(i, j));
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    let reference = lattice.bulk_site();
    let n_b = (0..n)
        .filter(|&j| j != reference && lattice.distance(reference, j) <= potential.r_b)
        .count();
    let mut m = CouplingMatrix { n_sites: n, values, j_bar: 0.0, n_b, b_parallel: vec![] };
    m.finalize();
    Ok(m)
}

/// Longitudinal field `B_i = sum_j J_ij / 2` generated by the dressing.
pub fn longitudinal_field(couplings: &CouplingMatrix) -> Vec<f64> {
    couplings.b_parallel.clone()
}
