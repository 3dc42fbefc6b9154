//! Squeezing metrics, optimal-time extraction, collectivity, and
//! scaling-scan reductions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{BlockMoments, Moments, ObservableSeries};

/// Bloch vectors shorter than `eps * N` leave the squeezing undefined.
const BLOCH_EPS: f64 = 1e-6;

/// Wineland squeezing parameter `xi^2 = N * min Var(S_perp) / |<S>|^2`
/// from the moments at a single time.
pub fn squeezing_parameter(m: &Moments) -> Result<f64> {
    let b = m.bloch_length();
    if !(b > BLOCH_EPS * m.n_sites as f64) {
        return Err(Error::UndefinedSqueezing(b));
    }
    let bhat = [m.first[0] / b, m.first[1] / b, m.first[2] / b];
    let (e1, e2) = perpendicular_basis(bhat);
    let lambda_min = min_perp_variance(&m.covariance(), e1, e2);
    Ok(m.n_sites as f64 * lambda_min / (b * b))
}

/// Minimum variance over directions perpendicular to the Bloch vector
/// (the numerator of both the Wineland parameter and the variance-only
/// Kitagawa-Ueda parameter `min Var / (S/2)`).
pub fn min_perpendicular_variance(m: &Moments) -> Result<f64> {
    let b = m.bloch_length();
    if !(b > BLOCH_EPS * m.n_sites as f64) {
        return Err(Error::UndefinedSqueezing(b));
    }
    let bhat = [m.first[0] / b, m.first[1] / b, m.first[2] / b];
    let (e1, e2) = perpendicular_basis(bhat);
    Ok(min_perp_variance(&m.covariance(), e1, e2))
}

/// Any orthonormal pair spanning the plane perpendicular to `bhat`.
fn perpendicular_basis(bhat: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // Seed with the coordinate axis least aligned with bhat.
    let abs = [bhat[0].abs(), bhat[1].abs(), bhat[2].abs()];
    let k = if abs[0] <= abs[1] && abs[0] <= abs[2] {
        0
    } else if abs[1] <= abs[2] {
        1
    } else {
        2
    };
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = normalize(cross(bhat, axis));
    let e2 = cross(bhat, e1);
    (e1, e2)
}

/// Smallest eigenvalue of the covariance projected onto span(e1, e2).
fn min_perp_variance(cov: &[[f64; 3]; 3], e1: [f64; 3], e2: [f64; 3]) -> f64 {
    let v11 = quad_form(cov, e1, e1);
    let v22 = quad_form(cov, e2, e2);
    let v12 = quad_form(cov, e1, e2);
    let mean = 0.5 * (v11 + v22);
    let half_diff = 0.5 * (v11 - v22);
    mean - (half_diff * half_diff + v12 * v12).sqrt()
}

fn quad_form(mat: &[[f64; 3]; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i] * mat[i][j] * b[j];
        }
    }
    s
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// `<S^2> / ((N/2)(N/2 + 1))`: 1 on the fully symmetric manifold.
pub fn collectivity(m: &Moments) -> f64 {
    let s = m.n_sites as f64 / 2.0;
    m.total_spin_sq() / (s * (s + 1.0))
}

/// Populate the `xi2` / `xi2_db` columns of a series in place.
pub fn fill_squeezing(series: &mut ObservableSeries) {
    for k in 0..series.len() {
        let xi2 = squeezing_parameter(&series.moments_at(k)).unwrap_or(f64::NAN);
        series.xi2[k] = xi2;
        series.xi2_db[k] = 10.0 * xi2.log10();
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SqueezingResult {
    pub xi2_opt: f64,
    pub xi2_opt_db: f64,
    /// On-grid time of the minimum (no interpolation).
    pub t_opt: f64,
    pub t_index: usize,
    /// `|<S>| / (N/2)` at `t_opt`.
    pub contrast: f64,
    /// `<S^2> / ((N/2)(N/2+1))` at `t_opt`.
    pub collectivity: f64,
    /// Set when the minimum sits on the final grid point (window too short).
    pub boundary_minimum: bool,
}

/// Grid minimum of `xi^2(t)`; ties break toward earlier times.
pub fn optimal_squeezing(series: &ObservableSeries) -> Result<SqueezingResult> {
    if series.is_empty() {
        return Err(Error::Analysis("empty observable series".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in series.xi2.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    let (k, xi2) = best.ok_or_else(|| {
        Error::Analysis("squeezing parameter undefined over the entire series".into())
    })?;
    let m = series.moments_at(k);
    Ok(SqueezingResult {
        xi2_opt: xi2,
        xi2_opt_db: 10.0 * xi2.log10(),
        t_opt: series.times[k],
        t_index: k,
        contrast: m.contrast(),
        collectivity: collectivity(&m),
        boundary_minimum: k + 1 == series.len(),
    })
}

/// Count local extrema whose excursion from the previous accepted extremum
/// exceeds `min_prominence` (noise-robust oscillation counter).
pub fn count_prominent_extrema(values: &[f64], min_prominence: f64) -> usize {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 3 {
        return 0;
    }
    let mut count = 0;
    let mut anchor = finite[0];
    let mut direction = 0i8;
    for &v in &finite[1..] {
        match direction {
            0 => {
                if (v - anchor).abs() >= min_prominence {
                    direction = if v > anchor { 1 } else { -1 };
                    anchor = v;
                }
            }
            1 => {
                if v > anchor {
                    anchor = v;
                } else if anchor - v >= min_prominence {
                    count += 1; // the maximum at `anchor` is confirmed
                    direction = -1;
                    anchor = v;
                }
            }
            _ => {
                if v < anchor {
                    anchor = v;
                } else if v - anchor >= min_prominence {
                    count += 1;
                    direction = 1;
                    anchor = v;
                }
            }
        }
    }
    count
}

/// Standard error of `xi2_opt` (and its dB value) from a block bootstrap
/// over trajectories.
pub struct BootstrapXi2 {
    pub se_xi2: f64,
    pub se_db: f64,
    pub n_resamples: usize,
}

pub fn bootstrap_xi2_opt(blocks: &BlockMoments, n_resamples: usize, seed: u64) -> Result<BootstrapXi2> {
    let nb = blocks.n_blocks();
    if nb < 2 {
        return Err(Error::Analysis("bootstrap needs at least two trajectory blocks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi2s = Vec::with_capacity(n_resamples);
    let mut dbs = Vec::with_capacity(n_resamples);
    let mut weights = vec![0u32; nb];
    for _ in 0..n_resamples {
        weights.iter_mut().for_each(|w| *w = 0);
        for _ in 0..nb {
            weights[rng.gen_range(0..nb)] += 1;
        }
        let mut series = blocks.combine_weighted(&weights)?;
        fill_squeezing(&mut series);
        if let Ok(r) = optimal_squeezing(&series) {
            xi2s.push(r.xi2_opt);
            dbs.push(r.xi2_opt_db);
        }
    }
    if xi2s.len() < 2 {
        return Err(Error::Analysis("bootstrap produced no defined squeezing values".into()));
    }
    Ok(BootstrapXi2 { se_xi2: std_dev(&xi2s), se_db: std_dev(&dbs), n_resamples: xi2s.len() })
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Least-squares slope of `ln y` vs `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Thermodynamic-limit squeezing estimate: the value at the largest scanned
/// size, provided it changed by less than 2% from the second-largest size
/// (returns `None` when not converged).
pub fn xi2_infinity(sizes_and_xi2: &[(usize, f64)]) -> Option<f64> {
    if sizes_and_xi2.len() < 2 {
        return None;
    }
    let mut sorted = sizes_and_xi2.to_vec();
    sorted.sort_by_key(|&(n, _)| n);
    let (_, xi_last) = sorted[sorted.len() - 1];
    let (_, xi_prev) = sorted[sorted.len() - 2];
    if ((xi_last - xi_prev) / xi_prev).abs() < 0.02 {
        Some(xi_last)
    } else {
        None
    }
}

/// Interpolated size at which the collectivity at `t_opt` crosses 0.95
/// (linear in `ln N`); `None` when no bracketing pair exists (censored).
pub fn n_095(sizes: &[usize], collectivity_at_topt: &[f64]) -> Option<f64> {
    assert_eq!(sizes.len(), collectivity_at_topt.len());
    let mut pairs: Vec<(usize, f64)> =
        sizes.iter().copied().zip(collectivity_at_topt.iter().copied()).collect();
    pairs.sort_by_key(|&(n, _)| n);
    for w in pairs.windows(2) {
        let (n1, c1) = w[0];
        let (n2, c2) = w[1];
        if (c1 - 0.95) * (c2 - 0.95) <= 0.0 && c1 != c2 {
            let t = (0.95 - c1) / (c2 - c1);
            let ln_n = (n1 as f64).ln() + t * ((n2 as f64).ln() - (n1 as f64).ln());
            return Some(ln_n.exp());
        }
    }
    None
}

/// Precomputed optimal one-axis-twisting squeezing vs atom number, used to
/// invert a measured `xi2` into an effective OAT atom number.
pub struct OatCurve {
    pub sizes: Vec<usize>,
    pub xi2_opt: Vec<f64>,
    /// `j_bar * t_opt` per size.
    pub t_opt: Vec<f64>,
}

impl OatCurve {
    /// Build from the Dicke-basis reference at unit mean coupling.
    pub fn compute(sizes: &[usize]) -> Result<Self> {
        let mut xi2_opt = Vec::with_capacity(sizes.len());
        let mut t_opt = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let series = crate::oracle::oat_reference(n, 1.0, &oat_time_grid(n, 1.0))?;
            let r = optimal_squeezing(&series)?;
            xi2_opt.push(r.xi2_opt);
            t_opt.push(r.t_opt);
        }
        // The inversion below requires strict monotonicity.
        for w in xi2_opt.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Analysis(
                    "OAT optimal squeezing is not strictly decreasing over the requested sizes"
                        .into(),
                ));
            }
        }
        Ok(OatCurve { sizes: sizes.to_vec(), xi2_opt, t_opt })
    }

    /// Effective OAT atom number for a measured optimal squeezing: bisection
    /// on the precomputed curve with log-linear interpolation between sizes.
    /// `None` when the target lies outside the curve (censored).
    pub fn n_oat(&self, xi2_target: f64) -> Option<f64> {
        let k = self.xi2_opt.partition_point(|&v| v > xi2_target);
        if k == 0 || k == self.xi2_opt.len() {
            return None;
        }
        let (x1, x2) = (self.xi2_opt[k - 1], self.xi2_opt[k]);
        let (n1, n2) = (self.sizes[k - 1] as f64, self.sizes[k] as f64);
        let t = (xi2_target.ln() - x1.ln()) / (x2.ln() - x1.ln());
        Some((n1.ln() + t * (n2.ln() - n1.ln())).exp())
    }
}

/// Dense time grid covering the OAT optimum for `n` spins at mean coupling
/// `j_bar` (the optimum sits near `j_bar * t ~ 2.4 * (n/2)^(-2/3)`).
pub fn oat_time_grid(n: usize, j_bar: f64) -> Vec<f64> {
    let scale = 2.0 * 3.0_f64.powf(1.0 / 6.0) * (n as f64 / 2.0).powf(-2.0 / 3.0) / j_bar;
    let t_max = 2.5 * scale;
    let points = 3000;
    (0..=points).map(|k| t_max * k as f64 / points as f64).collect()
}

/// One cell of a size / blockade-radius scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanCell {
    pub n_sites: usize,
    pub r_b: f64,
    pub n_b: usize,
    /// `N_b + 1` (blockade neighbors including the central site).
    pub n_b_tilde: usize,
    pub j_bar: f64,
    pub result: SqueezingResult,
}

/// Run a simulation per `(size, r_b)` cell and extract squeezing summaries.
///
/// The runner receives the cell's coupling matrix and returns the
/// time-resolved observables (trajectory ensemble, closed form, or Dicke
/// reference; whatever the model family calls for).
pub fn scaling_scan<F>(
    sizes: &[crate::lattice::LatticeSpec],
    r_bs: &[f64],
    kind: crate::lattice::PotentialKind,
    j_plateau: f64,
    runner: F,
) -> Result<Vec<ScanCell>>
where
    F: Fn(&crate::lattice::CouplingMatrix) -> Result<ObservableSeries>,
{
    let mut cells = Vec::with_capacity(sizes.len() * r_bs.len());
    for spec in sizes {
        let lattice = crate::lattice::build_lattice(spec)?;
        for &r_b in r_bs {
            let potential = crate::lattice::PotentialSpec { kind, r_b, j_plateau };
            let couplings = crate::lattice::coupling_matrix(&lattice, &potential)?;
            let series = runner(&couplings)?;
            let result = optimal_squeezing(&series)?;
            cells.push(ScanCell {
                n_sites: couplings.n_sites,
                r_b,
                n_b: couplings.n_b,
                n_b_tilde: couplings.n_b + 1,
                j_bar: couplings.j_bar,
                result,
            });
        }
    }
    Ok(cells)
}

/// Effective OAT atom number per blockade radius: the OAT size whose optimal
/// squeezing matches the scan's thermodynamic-limit estimate. Censored cells
/// (unconverged `xi2_inf` or out-of-range inversion) return `None`.
pub fn n_oat_per_radius(cells: &[ScanCell], curve: &OatCurve) -> Vec<(f64, Option<f64>)> {
    let mut r_bs: Vec<f64> = cells.iter().map(|c| c.r_b).collect();
    r_bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r_bs.dedup();
    r_bs.iter()
        .map(|&r_b| {
            let sizes_xi2: Vec<(usize, f64)> = cells
                .iter()
                .filter(|c| c.r_b == r_b)
                .map(|c| (c.n_sites, c.result.xi2_opt))
                .collect();
            (r_b, xi2_infinity(&sizes_xi2).and_then(|x| curve.n_oat(x)))
        })
        .collect()
}
