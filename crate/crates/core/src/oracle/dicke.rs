//! One-axis-twisting reference in the symmetric (Dicke) basis.
//!
//! The +x coherent state lives in the maximal-spin manifold `S = N/2`;
//! evolution under `H = (j_bar/2) S_z^2` only attaches phases
//! `exp(-i (j_bar/2) m^2 t)` to the Dicke amplitudes, so every observable
//! follows from O(N) ladder-operator sums per time point.

use num_complex::Complex64 as C64;

use crate::analysis;
use crate::error::{Error, Result};
use crate::observables::ObservableSeries;

/// Dicke-basis amplitudes over `m_z = -N/2 .. N/2`.
#[derive(Clone, Debug)]
pub struct DickeState {
    pub n: usize,
    pub amplitudes: Vec<C64>,
}

impl DickeState {
    /// Coherent spin state along +x: `c_k = sqrt(binom(N,k)) / 2^(N/2)`
    /// with `k = m + N/2`.
    pub fn coherent_x(n: usize) -> Self {
        let lnf = ln_factorials(n);
        let amplitudes = (0..=n)
            .map(|k| {
                let ln_binom = lnf[n] - lnf[k] - lnf[n - k];
                C64::new((0.5 * (ln_binom - n as f64 * std::f64::consts::LN_2)).exp(), 0.0)
            })
            .collect();
        DickeState { n, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lnf = vec![0.0; n + 1];
    for k in 1..=n {
        lnf[k] = lnf[k - 1] + (k as f64).ln();
    }
    lnf
}

/// Exact OAT evolution from the +x coherent state: collective moments and
/// squeezing at each grid time.
pub fn oat_reference(n: usize, j_bar: f64, t_grid: &[f64]) -> Result<ObservableSeries> {
    if n < 2 {
        return Err(Error::invalid(format!("OAT reference needs N >= 2, got {n}")));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    let base = DickeState::coherent_x(n);
    let s = n as f64 / 2.0;
    let chi = j_bar / 2.0;
    // Ladder factors A_k = sqrt(S(S+1) - m_k (m_k + 1)), m_k = k - N/2.
    let a_up: Vec<f64> =
        (0..=n).map(|k| {
            let m = k as f64 - s;
            (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
        })
        .collect();

    let mut series = ObservableSeries::new(n, 0);
    let mut amp = vec![C64::new(0.0, 0.0); n + 1];
    for &t in t_grid {
        for (k, a) in amp.iter_mut().enumerate() {
            let m = k as f64 - s;
            let phase = C64::from_polar(1.0, -chi * m * m * t);
            *a = base.amplitudes[k] * phase;
        }
        // <S_z>, <S_z^2>
        let mut sz = 0.0;
        let mut szz = 0.0;
        // <S_+>, <S_+^2>, <S_+ S_z + S_z S_+>, <S_+ S_-> and <S_- S_+>.
        let mut sp = C64::new(0.0, 0.0);
        let mut spp = C64::new(0.0, 0.0);
        let mut spz = C64::new(0.0, 0.0);
        let mut spsm = 0.0;
        let mut smsp = 0.0;
        for k in 0..=n {
            let m = k as f64 - s;
            let p = amp[k].norm_sqr();
            sz += p * m;
            szz += p * m * m;
            spsm += p * (s * (s + 1.0) - m * (m - 1.0));
            smsp += p * (s * (s + 1.0) - m * (m + 1.0));
            if k + 1 <= n {
                sp += amp[k + 1].conj() * amp[k] * a_up[k];
                spz += amp[k + 1].conj() * amp[k] * a_up[k] * (2.0 * m + 1.0);
            }
            if k + 2 <= n {
                spp += amp[k + 2].conj() * amp[k] * a_up[k + 1] * a_up[k];
            }
        }
        let sym = 0.25 * (spsm + smsp);
        let first = [sp.re, sp.im, sz];
        let second = [
            0.5 * spp.re + sym,  // xx
            -0.5 * spp.re + sym, // yy
            szz,                 // zz
            0.5 * spp.im,        // xy
            0.5 * spz.re,        // xz
            0.5 * spz.im,        // yz
        ];
        series.push(t, first, second, [0.0; 3]);
    }
    analysis::fill_squeezing(&mut series);
    Ok(series)
}
