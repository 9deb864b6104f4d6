//! Matrix-free application of the two-excitation Hamiltonian.
//!
//! The photon-pair block is applied in parallel over row blocks (fixed
//! `m`, contiguous in `n`); bond cuts enter as zeroed hopping factors so
//! the hot loop stays branch-free. Emitter couplings are a sparse static
//! edge list added serially after the photon pass, which keeps every
//! write owned by exactly one pass.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::basis::TwoExcitationBasis;
use super::schedule::DriveSample;
use crate::emitter::GiantEmitterPair;
use crate::error::Error;
use crate::spectrum::WaveguideParams;
use crate::Result;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One coupling matrix element `H[upper, lower] = g_i * element` between
/// sectors, at unit coupling.
#[derive(Debug, Clone, Copy)]
struct CouplingEdge {
    emitter: usize,
    lower: usize,
    upper: usize,
    element: C64,
}

/// The sparse two-excitation operator for a fixed geometry; every
/// time-dependent quantity comes in through a [`DriveSample`].
#[derive(Debug, Clone)]
pub struct LatticeHamiltonian {
    basis: TwoExcitationBasis,
    params: WaveguideParams,
    edges: Vec<CouplingEdge>,
    /// Per-emitter coupling points `(site, phase)`, flattened pair order.
    points: Vec<[(usize, f64); 2]>,
}

impl LatticeHamiltonian {
    /// Validate the geometry and build the static structure. Emitters are
    /// flattened in pair order: pair `q` owns emitters `2q` and `2q + 1`.
    pub fn new(params: WaveguideParams, pairs: &[GiantEmitterPair]) -> Result<Self> {
        params
            .validate()
            .map_err(|errs| Error::Geometry(errs.join("; ")))?;
        let n = params.num_sites;
        let emitters: Vec<_> = pairs
            .iter()
            .flat_map(|p| [p.emitter_1, p.emitter_2])
            .collect();
        for (i, e) in emitters.iter().enumerate() {
            if e.right_point >= n || e.left_point > e.right_point {
                return Err(Error::Geometry(format!(
                    "emitter {i}: coupling points ({}, {}) invalid for {n} sites",
                    e.left_point, e.right_point
                )));
            }
        }
        let basis = TwoExcitationBasis::new(n, emitters.len());
        let mut edges = Vec::new();
        let points: Vec<[(usize, f64); 2]> = emitters.iter().map(|e| e.points()).collect();
        for (i, pts) in points.iter().enumerate() {
            for &(site, phase) in pts {
                let element = C64::from_polar(1.0, phase);
                // De-excitation of emitter i out of each both-excited pair
                // leaves the partner excited plus a photon at the point.
                for (p, &(a, b)) in basis.ee_pairs().iter().enumerate() {
                    if a == i || b == i {
                        let partner = if a == i { b } else { a };
                        edges.push(CouplingEdge {
                            emitter: i,
                            lower: p,
                            upper: basis.eph_index(partner, site),
                            element,
                        });
                    }
                }
                // De-excitation of emitter i next to an existing photon
                // lands in the pair sector, with the bosonic weight on
                // double occupation.
                for x in 0..n {
                    let w = if x == site { SQRT2 } else { 1.0 };
                    edges.push(CouplingEdge {
                        emitter: i,
                        lower: basis.eph_index(i, x),
                        upper: basis.pp_index(x, site),
                        element: element * w,
                    });
                }
            }
        }
        Ok(Self {
            basis,
            params,
            edges,
            points,
        })
    }

    pub fn basis(&self) -> &TwoExcitationBasis {
        &self.basis
    }

    pub fn params(&self) -> &WaveguideParams {
        &self.params
    }

    /// Coupling points of emitter `i`.
    pub fn emitter_points(&self, i: usize) -> [(usize, f64); 2] {
        self.points[i]
    }

    /// Hopping factor per bond at this sample; cut bonds are zeroed.
    fn bond_factors(&self, sample: &DriveSample) -> Vec<f64> {
        let n = self.basis.n_sites();
        let j = sample.sign * self.params.hopping;
        let mut fac = vec![j; n.saturating_sub(1)];
        for cut in [self.params.cut_bond, sample.cut_bond].into_iter().flatten() {
            if cut + 1 < n {
                fac[cut] = 0.0;
            }
        }
        fac
    }

    /// Crude upper bound on the operator norm at this sample, for step
    /// stability checks.
    pub fn norm_bound(&self, sample: &DriveSample) -> f64 {
        let j = self.params.hopping.abs();
        let u = self.params.interaction().abs();
        let max_det = sample
            .detunings
            .iter()
            .map(|d| (2.0 * d - sample.frame_shift).abs())
            .fold((u + sample.frame_shift.abs()).max(sample.frame_shift.abs()), f64::max);
        let max_g = sample.couplings.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        4.0 * SQRT2 * j + max_det + 4.0 * SQRT2 * max_g
    }

    /// `out = H(sample) * input`.
    pub fn apply(&self, sample: &DriveSample, input: &[C64], out: &mut [C64]) {
        let basis = &self.basis;
        let n = basis.n_sites();
        debug_assert_eq!(input.len(), basis.dim());
        debug_assert_eq!(out.len(), basis.dim());
        debug_assert_eq!(sample.couplings.len(), basis.n_emitters());

        let jfac = self.bond_factors(sample);
        let shift = sample.frame_shift;
        let u_t = sample.sign * self.params.interaction();

        // Both-excited rows: detuning diagonal only (couplings come via
        // the edge pass).
        for (p, &(a, b)) in basis.ee_pairs().iter().enumerate() {
            out[p] = (sample.detunings[a] + sample.detunings[b] - shift) * input[p];
        }

        // Emitter-plus-photon rows: free photon hopping plus detuning.
        for i in 0..basis.n_emitters() {
            let base = basis.eph_index(i, 0);
            let diag = sample.detunings[i] - shift;
            for x in 0..n {
                let mut acc = diag * input[base + x];
                if x > 0 {
                    acc -= jfac[x - 1] * input[base + x - 1];
                }
                if x + 1 < n {
                    acc -= jfac[x] * input[base + x + 1];
                }
                out[base + x] = acc;
            }
        }

        // Photon-pair rows, parallel over the first index.
        let pp0 = basis.pp_offset();
        let (in_pp, out_pp) = (&input[pp0..], &mut out[pp0..]);
        let mut rows: Vec<(usize, &mut [C64])> = Vec::with_capacity(n);
        let mut rest = out_pp;
        for m in 0..n {
            let (row, tail) = rest.split_at_mut(n - m);
            rows.push((m, row));
            rest = tail;
        }
        let row_off = |m: usize| -> usize { m * (2 * n - m + 1) / 2 };
        rows.into_par_iter().for_each(|(m, row)| {
            let off_m = row_off(m);
            // n == m: doubly occupied site.
            {
                let mut acc = (u_t - shift) * in_pp[off_m];
                if m > 0 {
                    acc -= SQRT2 * jfac[m - 1] * in_pp[row_off(m - 1) + 1];
                }
                if m + 1 < n {
                    acc -= SQRT2 * jfac[m] * in_pp[off_m + 1];
                }
                row[0] = acc;
            }
            // n == m + 1: both sqrt(2) moves cross bond m.
            if m + 1 < n {
                let mut acc = -shift * in_pp[off_m + 1]
                    - SQRT2 * jfac[m] * (in_pp[off_m] + in_pp[row_off(m + 1)]);
                if m > 0 {
                    acc -= jfac[m - 1] * in_pp[row_off(m - 1) + 2];
                }
                if m + 2 < n {
                    acc -= jfac[m + 1] * in_pp[off_m + 2];
                }
                row[1] = acc;
            }
            // Interior n: all weights one. Bounded slices keep the bulk
            // loop free of index checks so it vectorizes.
            let len = n - m;
            if len < 3 {
                return;
            }
            let row_in = &in_pp[off_m..off_m + len];
            let below = &in_pp[row_off(m + 1)..row_off(m + 1) + len - 1];
            let j_here = &jfac[m + 1..n - 1];
            let j_down = jfac[m];
            if m > 0 {
                let above = &in_pp[row_off(m - 1) + 3..row_off(m - 1) + len + 1];
                let j_up = jfac[m - 1];
                for idx in 2..len - 1 {
                    row[idx] = -shift * row_in[idx]
                        - j_here[idx - 2] * row_in[idx - 1]
                        - j_here[idx - 1] * row_in[idx + 1]
                        - j_down * below[idx - 1]
                        - j_up * above[idx - 2];
                }
            } else {
                for idx in 2..len - 1 {
                    row[idx] = -shift * row_in[idx]
                        - j_here[idx - 2] * row_in[idx - 1]
                        - j_here[idx - 1] * row_in[idx + 1]
                        - j_down * below[idx - 1];
                }
            }
            // Last column nn = n - 1: no right neighbor.
            let idx = len - 1;
            let mut acc = -shift * row_in[idx]
                - jfac[n - 2] * row_in[idx - 1]
                - j_down * below[idx - 1];
            if m > 0 {
                acc -= jfac[m - 1] * in_pp[row_off(m - 1) + idx + 1];
            }
            row[idx] = acc;
        });

        // Emitter-photon coupling edges, serial, additive.
        for e in &self.edges {
            let g = sample.couplings[e.emitter];
            if g == 0.0 {
                continue;
            }
            let h = g * e.element;
            let lo = input[e.lower];
            let up = input[e.upper];
            out[e.upper] += h * lo;
            out[e.lower] += h.conj() * up;
        }
    }

    /// Expectation value of the (frame-shifted) operator; adding back the
    /// shift gives the physical energy.
    pub fn energy(&self, sample: &DriveSample, state: &[C64], scratch: &mut [C64]) -> f64 {
        self.apply(sample, state, scratch);
        state
            .iter()
            .zip(scratch.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            + sample.frame_shift * state.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Materialize the operator densely; for validation at small sizes.
    pub fn to_dense(&self, sample: &DriveSample) -> Vec<C64> {
        let dim = self.basis.dim();
        let mut dense = vec![C64::new(0.0, 0.0); dim * dim];
        let mut e_j = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e_j[j] = C64::new(1.0, 0.0);
            self.apply(sample, &e_j, &mut col);
            for i in 0..dim {
                dense[i * dim + j] = col[i];
            }
            e_j[j] = C64::new(0.0, 0.0);
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::schedule::{DriveSample, Schedule};
    use crate::lattice::TwoExcitationState;

    fn small_system() -> (LatticeHamiltonian, DriveSample) {
        let mut params = WaveguideParams::new(8, 1.0, 4.0);
        params.cut_bond = None;
        let pair = GiantEmitterPair::colocated(3, 1, 0.7, 1.1, 0.1, -2.55);
        let ham = LatticeHamiltonian::new(params, &[pair]).unwrap();
        let schedule = Schedule::static_drives(vec![(0.1, -2.55); 2], 0.0);
        let mut sample = DriveSample::empty();
        schedule.sample_into(0.0, &mut sample);
        (ham, sample)
    }

    #[test]
    fn dense_matrix_is_hermitian() {
        let (ham, sample) = small_system();
        let dim = ham.basis().dim();
        let h = ham.to_dense(&sample);
        for i in 0..dim {
            for j in 0..dim {
                let diff = (h[i * dim + j] - h[j * dim + i].conj()).norm();
                assert!(diff == 0.0, "H not Hermitian at ({i}, {j})");
            }
        }
    }

    #[test]
    fn zero_coupling_decouples_sectors() {
        let mut params = WaveguideParams::new(8, 1.0, 4.0);
        params.cut_bond = None;
        let pair = GiantEmitterPair::colocated(3, 1, 0.7, 1.1, 0.0, -2.55);
        let ham = LatticeHamiltonian::new(params, &[pair]).unwrap();
        let schedule = Schedule::static_drives(vec![(0.0, -2.55); 2], 0.0);
        let mut sample = DriveSample::empty();
        schedule.sample_into(0.0, &mut sample);
        let basis = ham.basis();
        let dim = basis.dim();
        let h = ham.to_dense(&sample);
        let pp0 = basis.pp_offset();
        for i in 0..pp0 {
            for j in pp0..dim {
                assert_eq!(h[i * dim + j], C64::new(0.0, 0.0));
            }
        }
        for i in 0..basis.n_ee() {
            for j in basis.eph_offset()..pp0 {
                assert_eq!(h[i * dim + j], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn geometry_errors_are_reported() {
        let params = WaveguideParams::new(8, 1.0, 4.0);
        let pair = GiantEmitterPair::colocated(7, 3, 0.0, 0.0, 0.1, -2.55);
        assert!(matches!(
            LatticeHamiltonian::new(params, &[pair]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn cut_bond_blocks_hopping() {
        let mut params = WaveguideParams::new(6, 1.0, 0.0);
        params.cut_bond = Some(2);
        let ham = LatticeHamiltonian::new(params, &[]).unwrap();
        let basis = ham.basis().clone();
        let sample = DriveSample::empty();
        // A photon at site 2 cannot hop across the severed bond to 3.
        let mut state = TwoExcitationState::zero(&basis);
        state.amplitudes[basis.pp_index(1, 2)] = C64::new(1.0, 0.0);
        let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
        ham.apply(&sample, &state.amplitudes, &mut out);
        assert_eq!(out[basis.pp_index(1, 3)], C64::new(0.0, 0.0));
        assert!(out[basis.pp_index(0, 2)].norm() > 0.0);
        // Same state on an intact waveguide does reach (1, 3).
        let params2 = WaveguideParams::new(6, 1.0, 0.0);
        let ham2 = LatticeHamiltonian::new(params2, &[]).unwrap();
        ham2.apply(&sample, &state.amplitudes, &mut out);
        assert!(out[basis.pp_index(1, 3)].norm() > 0.0);
    }

    #[test]
    fn two_photon_block_eigenvalues_contain_doublon_band() {
        // Periodic-ring oracle built independently: the isolated
        // eigenvalues below the scattering continuum must sit on the
        // closed-form doublon band.
        let n = 41;
        let params = WaveguideParams::new(n, 1.0, 4.0);
        let u = params.interaction();
        let n_pp = n * (n + 1) / 2;
        let tri = |m: usize, x: usize| -> usize {
            let (m, x) = if m <= x { (m, x) } else { (x, m) };
            m * (2 * n - m + 1) / 2 + (x - m)
        };
        let mut h = nalgebra::DMatrix::<f64>::zeros(n_pp, n_pp);
        for m in 0..n {
            h[(tri(m, m), tri(m, m))] = u;
            for x in m..n {
                // One photon hops with periodic wrap-around.
                for (a, b) in [(m, x), (x, m)] {
                    for step in [1usize, n - 1] {
                        let a2 = (a + step) % n;
                        let (i, j) = (tri(a, b), tri(a2, b));
                        let w = if a == b || a2 == b { SQRT2 } else { 1.0 };
                        // Accumulate once per unordered element pair.
                        if i <= j {
                            h[(i, j)] = -w;
                            h[(j, i)] = -w;
                        }
                    }
                }
            }
        }
        let eig = h.symmetric_eigen();
        let mut isolated: Vec<f64> = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&e| e < -4.2)
            .collect();
        isolated.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Expected: E_K on the ring momentum grid, K = 2 pi j / n.
        let mut expected: Vec<f64> = (0..n)
            .map(|j| {
                let k = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                crate::spectrum::doublon_energy(k, &params)
            })
            .filter(|&e| e < -4.2)
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(isolated.len(), expected.len());
        for (got, want) in isolated.iter().zip(&expected) {
            assert!(
                (got - want).abs() < 1e-3,
                "doublon level {got} vs closed form {want}"
            );
        }
    }
}
