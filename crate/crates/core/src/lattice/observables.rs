//! Observables extracted from two-excitation states: field distributions
//! over center-of-mass/relative coordinates, pair correlations,
//! directional splits, and decay-rate fits.


use super::basis::{TwoExcitationBasis, TwoExcitationState};
use crate::error::Error;
use crate::numerics::log_linear_rate;
use crate::Result;

/// Photon-pair density resolved in center-of-mass and relative
/// coordinates, stored over site pairs `m <= n` (`x_c = (m+n)/2` on the
/// half-integer grid, `r_d = n - m >= 0`; negative separations follow by
/// bosonic symmetry).
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    pub n_sites: usize,
    /// `|v_{mn}|^2` over the triangular pair index.
    pub pair_density: Vec<f64>,
    /// Per-site photon density from the emitter-plus-photon sector.
    pub single_photon_site_density: Vec<f64>,
}

impl FieldSnapshot {
    pub fn from_state(state: &TwoExcitationState, basis: &TwoExcitationBasis) -> Self {
        let n = basis.n_sites();
        let pp0 = basis.pp_offset();
        let pair_density: Vec<f64> = state.amplitudes[pp0..]
            .iter()
            .map(|a| a.norm_sqr())
            .collect();
        let mut single = vec![0.0; n];
        for i in 0..basis.n_emitters() {
            for x in 0..n {
                single[x] += state.amplitudes[basis.eph_index(i, x)].norm_sqr();
            }
        }
        Self {
            t: state.time,
            n_sites: n,
            pair_density,
            single_photon_site_density: single,
        }
    }

    /// Density at pair `(m, n)`; symmetric in the arguments.
    pub fn density(&self, m: usize, n: usize) -> f64 {
        let (m, n) = if m <= n { (m, n) } else { (n, m) };
        self.pair_density[m * (2 * self.n_sites - m + 1) / 2 + (n - m)]
    }

    /// Total photon-pair mass; completes the populations of the other
    /// sectors to the state norm.
    pub fn total_mass(&self) -> f64 {
        self.pair_density.iter().sum()
    }

    /// Iterate `(x_c, r_d, density)` over the triangle.
    pub fn iter_xc_rd(&self) -> impl Iterator<Item = (f64, usize, f64)> + '_ {
        let n = self.n_sites;
        (0..n).flat_map(move |m| {
            (m..n).map(move |x| {
                (
                    0.5 * (m + x) as f64,
                    x - m,
                    self.density(m, x),
                )
            })
        })
    }

    /// Photon-pair mass with center of mass strictly left/right of
    /// `center`; mass exactly on the center splits evenly.
    pub fn split_mass(&self, center: f64) -> (f64, f64) {
        let mut left = 0.0;
        let mut right = 0.0;
        for (xc, _, d) in self.iter_xc_rd() {
            if (xc - center).abs() < 1e-12 {
                left += 0.5 * d;
                right += 0.5 * d;
            } else if xc < center {
                left += d;
            } else {
                right += d;
            }
        }
        (left, right)
    }

    /// Site density including both photon sectors.
    pub fn site_density(&self) -> Vec<f64> {
        let n = self.n_sites;
        let mut dens = self.single_photon_site_density.clone();
        for m in 0..n {
            for x in m..n {
                let d = self.density(m, x);
                if m == x {
                    dens[m] += 2.0 * d;
                } else {
                    dens[m] += d;
                    dens[x] += d;
                }
            }
        }
        dens
    }
}

/// Photon-pair probability left/right of `center` plus the normalized
/// asymmetry `(P_R - P_L) / (P_R + P_L)`.
pub fn directional_split(
    state: &TwoExcitationState,
    basis: &TwoExcitationBasis,
    center: f64,
) -> (f64, f64, f64) {
    let n = basis.n_sites();
    let pp0 = basis.pp_offset();
    let mut left = 0.0;
    let mut right = 0.0;
    let mut idx = pp0;
    for m in 0..n {
        for x in m..n {
            let d = state.amplitudes[idx].norm_sqr();
            idx += 1;
            let xc = 0.5 * (m + x) as f64;
            if (xc - center).abs() < 1e-12 {
                left += 0.5 * d;
                right += 0.5 * d;
            } else if xc < center {
                left += d;
            } else {
                right += d;
            }
        }
    }
    let total = left + right;
    let c_num = if total > 0.0 {
        (right - left) / total
    } else {
        0.0
    };
    (left, right, c_num)
}

/// Two-point correlation `G2(r) = sum_n <n_{n+r} n_n (normal ordered)> /
/// (<n_{n+r}><n_n>)` of the photonic field, for `r = 0..=r_max`.
///
/// Sites with density below `1e-12` are excluded from the sum; a pair
/// population below `1e-6` leaves the denominators ill-conditioned and is
/// rejected.
pub fn pair_correlation(
    state: &TwoExcitationState,
    basis: &TwoExcitationBasis,
    r_max: usize,
) -> Result<Vec<f64>> {
    let occupation = state.two_photon_population(basis);
    if occupation <= 1e-6 {
        return Err(Error::LowOccupation {
            occupation,
            threshold: 1e-6,
        });
    }
    let snapshot = FieldSnapshot::from_state(state, basis);
    let dens = snapshot.site_density();
    let n = basis.n_sites();
    let mut g2 = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        let mut acc = 0.0;
        for site in 0..n.saturating_sub(r) {
            let d1 = dens[site];
            let d2 = dens[site + r];
            if d1 < 1e-12 || d2 < 1e-12 {
                continue;
            }
            // Normal-ordered pair expectation: 2|v_mm|^2 on site, |v_mn|^2
            // across sites.
            let numer = if r == 0 {
                2.0 * snapshot.density(site, site)
            } else {
                snapshot.density(site, site + r)
            };
            acc += numer / (d1 * d2);
        }
        g2.push(acc);
    }
    Ok(g2)
}

/// Result of a log-linear exponential fit to a population trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub samples: usize,
}

/// Fit `values ~ exp(-rate t)` on the window `[t0, t1]`.
///
/// Requires at least 20 samples in the window and a monotonically
/// decreasing trace (oscillation flags a bound-state or non-Markovian
/// regime where the exponential model is wrong).
pub fn fit_decay_rate(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<DecayFit> {
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (t, v) in times.iter().zip(values) {
        if *t >= t0 && *t <= t1 {
            ts.push(*t);
            vs.push(*v);
        }
    }
    if ts.len() < 20 {
        return Err(Error::InvalidInput(format!(
            "only {} samples in fit window [{t0}, {t1}]; need at least 20",
            ts.len()
        )));
    }
    let rising = vs
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-9))
        .count();
    if rising * 10 > vs.len() {
        return Err(Error::NonMonotonic {
            rising,
            total: vs.len(),
        });
    }
    let (rate, residual) = log_linear_rate(&ts, &vs);
    Ok(DecayFit {
        rate,
        residual,
        samples: ts.len(),
    })
}
