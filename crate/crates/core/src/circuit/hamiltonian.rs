use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Complex;

use super::{BasisConfig, ChargeSector, CircuitParams};
use crate::error::Result;
use crate::linalg::{CMat, CVec, C64};

/// Plane-wave label `(n_p, n_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChargeState {
    pub n_p: i32,
    pub n_m: i32,
}

/// Sparse Hermitian Hamiltonian in compressed-row form together with the
/// charge labels of its basis.
#[derive(Debug, Clone)]
pub struct ChargeHamiltonian {
    basis: Vec<ChargeState>,
    index: HashMap<ChargeState, usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl ChargeHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ChargeState] {
        &self.basis
    }

    pub fn index_of(&self, s: ChargeState) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Non-zero entries `(col, value)` of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &CVec) -> CVec {
        CVec::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<C64>()),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// Largest row sum of magnitudes; an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |H − H†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Assemble `H = K + V` in the plane-wave basis.
///
/// Kinetic part: `2 E_C n_p² + 2 E_C/(1 + 2α + 2β) n_m²`. The potential
/// `E_J{2(1 − cos φ_p cos φ_m) + α[1 − cos(2πf + 2φ_m)]}` contributes a
/// constant `(2 + α) E_J`, hops `(±1, ±1)` of amplitude `−E_J/2`, and `n_m`
/// hops by two carrying the flux phase `e^{∓i2πf}`.
pub fn build_hamiltonian(params: &CircuitParams, basis: &BasisConfig) -> Result<ChargeHamiltonian> {
    params.validate()?;
    basis.validate()?;

    let n = basis.n_max as i32;
    let states: Vec<ChargeState> = (-n..=n)
        .flat_map(|n_p| (-n..=n).map(move |n_m| ChargeState { n_p, n_m }))
        .filter(|s| basis.sector == ChargeSector::Full || (s.n_p + s.n_m).rem_euclid(2) == 0)
        .collect();
    let index: HashMap<ChargeState, usize> =
        states.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let ec_m = params.minus_mode_charging();
    let diag_const = (2.0 + params.alpha) * params.ej;
    let hop = C64::new(-params.ej / 2.0, 0.0);
    let flux_hop = -params.alpha * params.ej / 2.0;
    let phase = Complex::from_polar(1.0, 2.0 * PI * params.flux);

    let mut row_ptr = Vec::with_capacity(states.len() + 1);
    let mut cols = Vec::with_capacity(states.len() * 7);
    let mut vals = Vec::with_capacity(states.len() * 7);
    row_ptr.push(0);

    // Row i holds H[i, j]; entries are generated from the column state j that
    // maps onto i, i.e. row state = shifted column state.
    for s in &states {
        let mut entries: Vec<(usize, C64)> = Vec::with_capacity(7);
        let (p, m) = (s.n_p as f64, s.n_m as f64);
        entries.push((
            index[s],
            C64::new(2.0 * params.ec * p * p + ec_m * m * m + diag_const, 0.0),
        ));
        if params.ej != 0.0 {
            for dp in [-1, 1] {
                for dm in [-1, 1] {
                    let src = ChargeState { n_p: s.n_p - dp, n_m: s.n_m - dm };
                    if let Some(&j) = index.get(&src) {
                        entries.push((j, hop));
                    }
                }
            }
            // Lowering n_m by two carries e^{+i2πf}: H[n−2, n] = −αE_J/2 · e^{i2πf}.
            let from_above = ChargeState { n_p: s.n_p, n_m: s.n_m + 2 };
            if let Some(&j) = index.get(&from_above) {
                entries.push((j, phase * flux_hop));
            }
            let from_below = ChargeState { n_p: s.n_p, n_m: s.n_m - 2 };
            if let Some(&j) = index.get(&from_below) {
                entries.push((j, phase.conj() * flux_hop));
            }
        }
        entries.sort_by_key(|e| e.0);
        for (j, v) in entries {
            cols.push(j);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }

    Ok(ChargeHamiltonian {
        basis: states,
        index,
        row_ptr,
        cols,
        vals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(ej: f64, flux: f64) -> CircuitParams {
        CircuitParams { ej, ec: 8.0, alpha: 0.43, beta: 15.7, flux }
    }

    #[test]
    fn zero_coupling_is_diagonal_kinetic() {
        let p = params(0.0, 0.3);
        let h = build_hamiltonian(&p, &BasisConfig::full(4)).unwrap();
        assert_eq!(h.dim(), 81);
        assert_eq!(h.nnz(), 81);
        let ec_m = 2.0 * 8.0 / (1.0 + 0.86 + 31.4);
        for (i, s) in h.basis().iter().enumerate() {
            let want = 2.0 * 8.0 * (s.n_p * s.n_p) as f64 + ec_m * (s.n_m * s.n_m) as f64;
            assert!((h.get(i, i).re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_at_generic_flux() {
        for flux in [0.0, 0.17, 0.5, 0.731] {
            let h = build_hamiltonian(&params(32.0, flux), &BasisConfig::new(6)).unwrap();
            assert!(h.hermiticity_error() <= 1e-14 * h.max_abs());
        }
    }

    #[test]
    fn dimensions_follow_sector() {
        let p = params(10.0, 0.5);
        assert_eq!(build_hamiltonian(&p, &BasisConfig::full(3)).unwrap().dim(), 49);
        assert_eq!(build_hamiltonian(&p, &BasisConfig::new(3)).unwrap().dim(), 25);
    }

    #[test]
    fn flux_hop_phase_convention() {
        let p = params(10.0, 0.125);
        let h = build_hamiltonian(&p, &BasisConfig::full(3)).unwrap();
        let lo = h.index_of(ChargeState { n_p: 0, n_m: -1 }).unwrap();
        let hi = h.index_of(ChargeState { n_p: 0, n_m: 1 }).unwrap();
        let want = Complex::from_polar(-0.43 * 10.0 / 2.0, 2.0 * PI * 0.125);
        assert!((h.get(lo, hi) - want).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = params(10.0, 0.5);
        p.alpha = 1.2;
        assert!(build_hamiltonian(&p, &BasisConfig::new(3)).is_err());
        p.alpha = 0.4;
        p.ec = f64::NAN;
        assert!(build_hamiltonian(&p, &BasisConfig::new(3)).is_err());
        let mut b = BasisConfig::new(200);
        b.max_dim = 1000;
        assert!(matches!(
            build_hamiltonian(&params(1.0, 0.5), &b),
            Err(crate::Error::DimensionOverflow { .. })
        ));
    }
}
