//! Index maps and state storage for the two-excitation sector.

use num_complex::Complex64 as C64;

/// Index maps for the two-excitation basis over `n_emitters` two-level
/// emitters and `n_sites` cavities.
///
/// Layout: first every pair `(i < j)` of simultaneously excited emitters,
/// then emitter `i` excited with one photon at site `x`, then the photon
/// pair sector over `m <= n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoExcitationBasis {
    n_sites: usize,
    n_emitters: usize,
    ee_pairs: Vec<(usize, usize)>,
    /// Offsets of the two-photon rows: `pp_row_offset[m] + (n - m)`
    /// indexes pair `(m, n)` within the sector.
    pp_row_offset: Vec<usize>,
}

impl TwoExcitationBasis {
    pub fn new(n_sites: usize, n_emitters: usize) -> Self {
        assert!(n_sites >= 2);
        let mut ee_pairs = Vec::new();
        for i in 0..n_emitters {
            for j in i + 1..n_emitters {
                ee_pairs.push((i, j));
            }
        }
        let mut pp_row_offset = Vec::with_capacity(n_sites);
        let mut acc = 0;
        for m in 0..n_sites {
            pp_row_offset.push(acc);
            acc += n_sites - m;
        }
        Self {
            n_sites,
            n_emitters,
            ee_pairs,
            pp_row_offset,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    /// Total dimension `E(E-1)/2 + E N + N(N+1)/2`.
    pub fn dim(&self) -> usize {
        self.pp_offset() + self.n_sites * (self.n_sites + 1) / 2
    }

    pub fn n_ee(&self) -> usize {
        self.ee_pairs.len()
    }

    pub fn ee_pairs(&self) -> &[(usize, usize)] {
        &self.ee_pairs
    }

    /// Index of the both-excited state of emitters `(i, j)`.
    pub fn ee_index(&self, i: usize, j: usize) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        self.ee_pairs
            .iter()
            .position(|&p| p == key)
            .expect("emitter pair in basis")
    }

    /// Offset of the emitter-plus-photon sector.
    pub fn eph_offset(&self) -> usize {
        self.ee_pairs.len()
    }

    /// Index of `emitter i excited, photon at x`.
    #[inline]
    pub fn eph_index(&self, i: usize, x: usize) -> usize {
        self.eph_offset() + i * self.n_sites + x
    }

    /// Offset of the photon-pair sector.
    pub fn pp_offset(&self) -> usize {
        self.eph_offset() + self.n_emitters * self.n_sites
    }

    /// Index of the photon pair at sites `(m, n)` (any order).
    #[inline]
    pub fn pp_index(&self, m: usize, n: usize) -> usize {
        let (m, n) = if m <= n { (m, n) } else { (n, m) };
        self.pp_offset() + self.pp_row_offset[m] + (n - m)
    }

    /// Index within the photon-pair sector only.
    #[inline]
    pub fn pp_local(&self, m: usize, n: usize) -> usize {
        let (m, n) = if m <= n { (m, n) } else { (n, m) };
        self.pp_row_offset[m] + (n - m)
    }

    /// Inverse map of `pp_local`: the `(m, n)` pair of a sector-local index.
    pub fn pp_pair(&self, local: usize) -> (usize, usize) {
        let m = match self.pp_row_offset.binary_search(&local) {
            Ok(m) => m,
            Err(ins) => ins - 1,
        };
        (m, m + local - self.pp_row_offset[m])
    }
}

/// Complex amplitude vector over a [`TwoExcitationBasis`] with a time
/// stamp. The l2 norm is 1 within tolerance after any propagation
/// segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoExcitationState {
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

impl TwoExcitationState {
    pub fn zero(basis: &TwoExcitationBasis) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); basis.dim()],
            time: 0.0,
        }
    }

    /// Both emitters of pair `q` (= emitters `2q`, `2q+1`) excited,
    /// waveguide in vacuum.
    pub fn excited_pair(basis: &TwoExcitationBasis, q: usize) -> Self {
        let mut s = Self::zero(basis);
        s.amplitudes[basis.ee_index(2 * q, 2 * q + 1)] = C64::new(1.0, 0.0);
        s
    }

    /// Build a pure two-photon state from a symmetric pair wavefunction
    /// `psi(m, n)`; the stored amplitudes pick up the bosonic `sqrt(2)`
    /// on off-diagonal pairs. The result is normalized.
    pub fn from_symmetric_pair_fn(
        basis: &TwoExcitationBasis,
        psi: impl Fn(usize, usize) -> C64,
    ) -> Self {
        let mut s = Self::zero(basis);
        let n = basis.n_sites();
        for m in 0..n {
            for x in m..n {
                let v = psi(m, x);
                s.amplitudes[basis.pp_index(m, x)] =
                    if m == x { v } else { 2.0f64.sqrt() * v };
            }
        }
        s.normalize();
        s
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// Population of the both-excited state of pair `q`.
    pub fn pair_population(&self, basis: &TwoExcitationBasis, q: usize) -> f64 {
        self.amplitudes[basis.ee_index(2 * q, 2 * q + 1)].norm_sqr()
    }

    /// Total population of the emitter-plus-photon sector.
    pub fn single_photon_population(&self, basis: &TwoExcitationBasis) -> f64 {
        self.amplitudes[basis.eph_offset()..basis.pp_offset()]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Total population of the photon-pair sector.
    pub fn two_photon_population(&self, basis: &TwoExcitationBasis) -> f64 {
        self.amplitudes[basis.pp_offset()..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_maps_are_bijective() {
        let basis = TwoExcitationBasis::new(7, 4);
        assert_eq!(basis.n_ee(), 6);
        assert_eq!(basis.dim(), 6 + 4 * 7 + 7 * 8 / 2);
        let mut seen = vec![false; basis.dim()];
        for p in 0..basis.n_ee() {
            assert!(!seen[p]);
            seen[p] = true;
        }
        for i in 0..4 {
            for x in 0..7 {
                let idx = basis.eph_index(i, x);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        for m in 0..7 {
            for n in m..7 {
                let idx = basis.pp_index(m, n);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(basis.pp_pair(basis.pp_local(m, n)), (m, n));
                assert_eq!(basis.pp_index(n, m), idx);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn single_pair_dimension_matches_contract() {
        let basis = TwoExcitationBasis::new(600, 2);
        assert_eq!(basis.dim(), 1 + 2 * 600 + 600 * 601 / 2);
    }

    #[test]
    fn symmetric_state_is_normalized_with_bosonic_weights() {
        let basis = TwoExcitationBasis::new(12, 2);
        // psi(m, n) proportional to a symmetric Gaussian pair profile.
        let s = TwoExcitationState::from_symmetric_pair_fn(&basis, |m, n| {
            let xc = 0.5 * (m + n) as f64 - 5.0;
            let r = n as f64 - m as f64;
            C64::new((-0.3 * xc * xc - 0.5 * r * r).exp(), 0.0)
        });
        assert!((s.norm() - 1.0).abs() < 1e-12);
        // Off-diagonal storage carries sqrt(2) relative to the symmetric
        // wavefunction.
        let psi_01 = s.amplitudes[basis.pp_index(0, 1)];
        let psi_00 = s.amplitudes[basis.pp_index(0, 0)];
        let want = 2.0f64.sqrt()
            * ((-0.3 * (0.5 - 5.0f64) * (0.5 - 5.0) - 0.5).exp())
            / ((-0.3 * 25.0f64).exp());
        assert!((psi_01.re / psi_00.re - want).abs() < 1e-12);
    }
}
