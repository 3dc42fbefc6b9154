//! Time-resolved collective observables shared by the trajectory engine and
//! the exact oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collective first and (symmetrized) second moments at one time.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub n_sites: usize,
    /// `<S_x>, <S_y>, <S_z>`.
    pub first: [f64; 3],
    /// Symmetrized `<S_mu S_nu>`, full 3x3 (symmetric).
    pub second: [[f64; 3]; 3],
}

impl Moments {
    /// `<S^2> = sum_mu <S_mu^2>`.
    pub fn total_spin_sq(&self) -> f64 {
        self.second[0][0] + self.second[1][1] + self.second[2][2]
    }

    pub fn bloch_length(&self) -> f64 {
        let [x, y, z] = self.first;
        (x * x + y * y + z * z).sqrt()
    }

    /// `|<S>| / (N/2)`.
    pub fn contrast(&self) -> f64 {
        self.bloch_length() / (self.n_sites as f64 / 2.0)
    }

    /// Covariance matrix `Sigma_mn = <S_m S_n>_sym - <S_m><S_n>`.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = [[0.0; 3]; 3];
        for m in 0..3 {
            for n in 0..3 {
                c[m][n] = self.second[m][n] - self.first[m] * self.first[n];
            }
        }
        c
    }
}

/// Second moments in fixed component order `xx, yy, zz, xy, xz, yz`.
pub type SecondMoments = [f64; 6];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub n_sites: usize,
    /// Number of trajectories averaged over (0 for exact references).
    pub n_samples: usize,
    pub times: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub szz: Vec<f64>,
    pub sxy: Vec<f64>,
    pub sxz: Vec<f64>,
    pub syz: Vec<f64>,
    pub s2: Vec<f64>,
    /// Wineland squeezing parameter; NaN where the Bloch vector vanishes.
    pub xi2: Vec<f64>,
    pub xi2_db: Vec<f64>,
    pub err_sx: Vec<f64>,
    pub err_sy: Vec<f64>,
    pub err_sz: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(n_sites: usize, n_samples: usize) -> Self {
        ObservableSeries { n_sites, n_samples, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, time: f64, first: [f64; 3], second: SecondMoments, err: [f64; 3]) {
        self.times.push(time);
        self.sx.push(first[0]);
        self.sy.push(first[1]);
        self.sz.push(first[2]);
        self.sxx.push(second[0]);
        self.syy.push(second[1]);
        self.szz.push(second[2]);
        self.sxy.push(second[3]);
        self.sxz.push(second[4]);
        self.syz.push(second[5]);
        self.s2.push(second[0] + second[1] + second[2]);
        self.xi2.push(f64::NAN);
        self.xi2_db.push(f64::NAN);
        self.err_sx.push(err[0]);
        self.err_sy.push(err[1]);
        self.err_sz.push(err[2]);
    }

    pub fn moments_at(&self, k: usize) -> Moments {
        Moments {
            n_sites: self.n_sites,
            first: [self.sx[k], self.sy[k], self.sz[k]],
            second: [
                [self.sxx[k], self.sxy[k], self.sxz[k]],
                [self.sxy[k], self.syy[k], self.syz[k]],
                [self.sxz[k], self.syz[k], self.szz[k]],
            ],
        }
    }

    /// All moment columns are finite (standard errors and xi2 excluded).
    pub fn moments_finite(&self) -> bool {
        self.sx.iter()
            .chain(&self.sy)
            .chain(&self.sz)
            .chain(&self.sxx)
            .chain(&self.syy)
            .chain(&self.szz)
            .chain(&self.sxy)
            .chain(&self.sxz)
            .chain(&self.syz)
            .all(|v| v.is_finite())
    }
}

/// Raw per-block trajectory sums at every recorded time.
///
/// Blocks are the fixed-size work units of the trajectory engine; keeping
/// their partial sums allows deterministic reduction (blocks are combined in
/// index order regardless of scheduling) and block-bootstrap error bars.
#[derive(Clone, Debug)]
pub struct BlockSum {
    pub n_traj: usize,
    /// Per time: sums over trajectories of the collective components
    /// `X_mu = sum_i S_i^mu`.
    pub p: Vec<[f64; 3]>,
    /// Per time: sums of products `X_mu X_nu` in order `xx,yy,zz,xy,xz,yz`.
    pub q: Vec<[f64; 6]>,
}

impl BlockSum {
    pub fn zeros(n_times: usize, n_traj: usize) -> Self {
        BlockSum { n_traj, p: vec![[0.0; 3]; n_times], q: vec![[0.0; 6]; n_times] }
    }
}

#[derive(Clone, Debug)]
pub struct BlockMoments {
    pub n_sites: usize,
    pub times: Vec<f64>,
    pub blocks: Vec<BlockSum>,
}

impl BlockMoments {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_traj(&self) -> usize {
        self.blocks.iter().map(|b| b.n_traj).sum()
    }

    /// Reduce to an [`ObservableSeries`] with every block counted once.
    pub fn combine(&self) -> Result<ObservableSeries> {
        self.combine_weighted(&vec![1u32; self.n_blocks()])
    }

    /// Weighted reduction (bootstrap resampling): block `b` enters
    /// `weights[b]` times.
    ///
    /// Estimators: `<S_mu> = P_mu / M` and `<S_mu S_nu>_sym = Q_mn / M`, the
    /// trajectory averages of the collective components and of their
    /// products. The product estimator applies the discrete Wigner rule for
    /// symmetrically-ordered correlators to every site pair, including
    /// i = j: at t = 0 the sampled components satisfy `(S_i^mu)^2 = 1/4`
    /// identically, so the initial second moments are exact, and the
    /// conserved spin norm keeps `<S^2>` consistent at later times.
    /// Standard errors of the first moments come from the trajectory
    /// variance of `X_mu`.
    pub fn combine_weighted(&self, weights: &[u32]) -> Result<ObservableSeries> {
        if weights.len() != self.n_blocks() {
            return Err(Error::Dimension(format!(
                "expected {} block weights, got {}",
                self.n_blocks(),
                weights.len()
            )));
        }
        let m: f64 = self
            .blocks
            .iter()
            .zip(weights)
            .map(|(b, &w)| b.n_traj as f64 * w as f64)
            .sum();
        if m < 1.0 {
            return Err(Error::Analysis("no trajectories selected".into()));
        }
        let n_times = self.times.len();
        let mut series = ObservableSeries::new(self.n_sites, m.round() as usize);
        for t in 0..n_times {
            let mut p = [0.0; 3];
            let mut q = [0.0; 6];
            for (b, &w) in self.blocks.iter().zip(weights) {
                if w == 0 {
                    continue;
                }
                let wf = w as f64;
                for k in 0..3 {
                    p[k] += wf * b.p[t][k];
                }
                for k in 0..6 {
                    q[k] += wf * b.q[t][k];
                }
            }
            let first = [p[0] / m, p[1] / m, p[2] / m];
            let second =
                [q[0] / m, q[1] / m, q[2] / m, q[3] / m, q[4] / m, q[5] / m];
            let mut err = [0.0; 3];
            if m > 1.5 {
                for k in 0..3 {
                    let var = (q[k] - p[k] * p[k] / m) / (m - 1.0);
                    err[k] = (var.max(0.0) / m).sqrt();
                }
            }
            series.push(self.times[t], first, second, err);
        }
        Ok(series)
    }
}
