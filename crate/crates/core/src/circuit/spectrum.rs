use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{eigensolve_real, EigenOptions};
use super::hamiltonian::{build_hamiltonian, ChargeHamiltonian, ChargeState};
use super::{BasisConfig, CircuitParams};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64, I};

/// Lowest levels of the circuit at one flux point.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub flux: f64,
    /// Ascending eigenfrequencies, GHz.
    pub levels: Vec<f64>,
    /// Eigenvectors as columns, in the basis of `basis`.
    pub states: CMat,
    pub basis: Vec<ChargeState>,
}

impl Spectrum {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn from_parts(flux: f64, levels: Vec<f64>, states: CMat, basis: Vec<ChargeState>) -> Self {
        Self { flux, levels, states, basis }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transitions {
    pub w_ge: f64,
    pub w_ef: f64,
    pub w_gf: f64,
    pub anharmonicity: f64,
}

pub fn transitions(spec: &Spectrum) -> Result<Transitions> {
    transitions_from_levels(&spec.levels)
}

pub(crate) fn transitions_from_levels(levels: &[f64]) -> Result<Transitions> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels { requested: 3, available: levels.len() });
    }
    let w_ge = levels[1] - levels[0];
    let w_ef = levels[2] - levels[1];
    let w_gf = levels[2] - levels[0];
    Ok(Transitions { w_ge, w_ef, w_gf, anharmonicity: w_ef - w_ge })
}

/// Charge-number operator of one loop coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeOperator {
    ChargeM,
    ChargeP,
}

impl FromStr for ChargeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charge_m" | "n_m" => Ok(Self::ChargeM),
            "charge_p" | "n_p" => Ok(Self::ChargeP),
            other => Err(Error::Unknown(other.to_string())),
        }
    }
}

/// `|⟨i| n̂ |j⟩|` for the diagonal charge operator of the chosen coordinate.
pub fn matrix_element(spec: &Spectrum, op: ChargeOperator, i: usize, j: usize) -> Result<f64> {
    let n = spec.n_levels();
    if i >= n || j >= n {
        return Err(Error::TooFewLevels { requested: i.max(j) + 1, available: n });
    }
    let vi = spec.states.column(i);
    let vj = spec.states.column(j);
    let elem: C64 = spec
        .basis
        .iter()
        .enumerate()
        .map(|(r, s)| {
            let q = match op {
                ChargeOperator::ChargeM => s.n_m,
                ChargeOperator::ChargeP => s.n_p,
            } as f64;
            vi[r].conj() * vj[r] * q
        })
        .sum();
    Ok(elem.norm())
}

/// One column of the symmetry-adapted basis: sparse coefficients over the
/// charge basis.
type AdaptedVector = Vec<(usize, C64)>;

/// Real orthonormal bases of the two `n_p`-parity blocks.
///
/// The potential is even in `φ_p`, so `n_p → −n_p` commutes with `H`. The
/// combined inversion `n → −n` followed by complex conjugation is an
/// antiunitary symmetry squaring to one at any flux; in a basis of its fixed
/// vectors each block is real symmetric.
fn adapted_blocks(h: &ChargeHamiltonian) -> [Vec<AdaptedVector>; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut blocks: [Vec<AdaptedVector>; 2] = [Vec::new(), Vec::new()];
    for (bi, parity) in [1.0_f64, -1.0].into_iter().enumerate() {
        // c(p, m) = (|p,m⟩ + s|−p,m⟩)/√2, or |0,m⟩.
        let parity_vec = |st: ChargeState| -> Option<AdaptedVector> {
            let a = h.index_of(st)?;
            if st.n_p == 0 {
                (parity > 0.0).then(|| vec![(a, C64::new(1.0, 0.0))])
            } else {
                let b = h.index_of(ChargeState { n_p: -st.n_p, n_m: st.n_m })?;
                Some(vec![(a, C64::new(r, 0.0)), (b, C64::new(parity * r, 0.0))])
            }
        };
        for st in h.basis() {
            if st.n_p < 0 || st.n_m < 0 {
                continue;
            }
            let Some(cm) = parity_vec(*st) else { continue };
            if st.n_m == 0 {
                let phase = if parity > 0.0 { C64::new(1.0, 0.0) } else { I };
                blocks[bi].push(cm.into_iter().map(|(k, v)| (k, v * phase)).collect());
                continue;
            }
            let partner = ChargeState { n_p: st.n_p, n_m: -st.n_m };
            let Some(cneg) = parity_vec(partner) else { continue };
            let combine = |w1: C64, w2: C64| -> AdaptedVector {
                cm.iter()
                    .map(|&(k, v)| (k, v * w1))
                    .chain(cneg.iter().map(|&(k, v)| (k, v * w2)))
                    .collect()
            };
            blocks[bi].push(combine(C64::new(r, 0.0), C64::new(parity * r, 0.0)));
            blocks[bi].push(combine(I * r, -I * (parity * r)));
        }
    }
    blocks
}

fn project_block(h: &ChargeHamiltonian, block: &[AdaptedVector]) -> Result<DMatrix<f64>> {
    let n = h.dim();
    let b = block.len();
    let mut m = DMatrix::<f64>::zeros(b, b);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let scale = h.max_abs().max(1.0);
    let mut worst_imag = 0.0_f64;
    for (col, vb) in block.iter().enumerate() {
        w.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        // (H v)[i] = Σ_j H[i, j] v[j] = Σ_j conj(H[j, i]) v[j]
        for &(j, coef) in vb {
            for (i, hv) in h.row(j) {
                w[i] += hv.conj() * coef;
            }
        }
        for (row, va) in block.iter().enumerate() {
            let z: C64 = va.iter().map(|&(i, coef)| coef.conj() * w[i]).sum();
            worst_imag = worst_imag.max(z.im.abs());
            m[(row, col)] = z.re;
        }
    }
    if worst_imag > 1e-10 * scale {
        return Err(Error::Integration(format!(
            "symmetry-adapted block is not real (|Im| = {worst_imag:.3e})"
        )));
    }
    // symmetrize away rounding
    Ok((&m + m.transpose()) * 0.5)
}

/// Solve for the `k` lowest circuit levels using the parity-reduced real
/// blocks.
pub fn solve_spectrum(params: &CircuitParams, basis: &BasisConfig, k: usize) -> Result<Spectrum> {
    let h = build_hamiltonian(params, basis)?;
    spectrum_of(&h, params.flux, k, &EigenOptions::default())
}

pub(crate) fn spectrum_of(
    h: &ChargeHamiltonian,
    flux: f64,
    k: usize,
    opts: &EigenOptions,
) -> Result<Spectrum> {
    if k > h.dim() {
        return Err(Error::TooFewLevels { requested: k, available: h.dim() });
    }
    let blocks = adapted_blocks(h);
    debug_assert_eq!(blocks[0].len() + blocks[1].len(), h.dim());

    // (energy, block, index) candidates
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut solved = Vec::with_capacity(2);
    for (bi, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            solved.push((Vec::new(), DMatrix::zeros(0, 0)));
            continue;
        }
        let m = project_block(h, block)?;
        let (vals, vecs) = eigensolve_real(m, opts)?;
        candidates.extend(vals.iter().take(k).enumerate().map(|(i, &e)| (e, bi, i)));
        solved.push((vals, vecs));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    candidates.truncate(k);

    let n = h.dim();
    let mut states = CMat::zeros(n, k);
    let mut levels = Vec::with_capacity(k);
    for (col, &(e, bi, idx)) in candidates.iter().enumerate() {
        levels.push(e);
        let y = solved[bi].1.column(idx);
        let mut v = CVec::zeros(n);
        for (a, basis_vec) in blocks[bi].iter().enumerate() {
            for &(i, coef) in basis_vec {
                v[i] += coef * y[a];
            }
        }
        states.set_column(col, &v);
    }
    Ok(Spectrum { flux, levels, states, basis: h.basis().to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub flux: f64,
    pub w_ge: f64,
    pub w_gf: f64,
    pub anharmonicity: f64,
}

/// Transition table over a flux grid; rows are independent and returned in
/// input order.
pub fn flux_sweep(
    params: &CircuitParams,
    flux_grid: &[f64],
    basis: &BasisConfig,
    k: usize,
) -> Result<Vec<SweepRow>> {
    if flux_grid.is_empty() {
        return Err(Error::param("flux_grid", "must not be empty"));
    }
    if let Some(bad) = flux_grid.iter().find(|f| !f.is_finite()) {
        return Err(Error::param("flux_grid", format!("non-finite flux {bad}")));
    }
    let k = k.max(3);
    flux_grid
        .par_iter()
        .enumerate()
        .map(|(row, &flux)| {
            let wrap = |e: Error| Error::SweepRow { row, source: Box::new(e) };
            let spec = solve_spectrum(&params.with_flux(flux), basis, k).map_err(wrap)?;
            let t = transitions(&spec).map_err(wrap)?;
            Ok(SweepRow { flux, w_ge: t.w_ge, w_gf: t.w_gf, anharmonicity: t.anharmonicity })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{eigensolve, ChargeSector};

    fn device(flux: f64) -> CircuitParams {
        CircuitParams { ej: 32.0, ec: 8.0, alpha: 0.43, beta: 15.0, flux }
    }

    #[test]
    fn reduced_solver_matches_dense_solver() {
        for flux in [0.5, 0.47, 0.2] {
            let p = device(flux);
            let basis = BasisConfig::new(6);
            let h = build_hamiltonian(&p, &basis).unwrap();
            let dense = eigensolve(&h.to_dense(), 6, &EigenOptions::default()).unwrap();
            let reduced = solve_spectrum(&p, &basis, 6).unwrap();
            for (a, b) in dense.values.iter().zip(&reduced.levels) {
                assert!((a - b).abs() < 1e-9, "flux {flux}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reduced_states_are_orthonormal_eigenvectors() {
        let p = device(0.493);
        let basis = BasisConfig::new(7);
        let h = build_hamiltonian(&p, &basis).unwrap();
        let s = solve_spectrum(&p, &basis, 5).unwrap();
        let gram = s.states.adjoint() * &s.states;
        assert!((gram - CMat::identity(5, 5)).norm() < 1e-10);
        for (i, &e) in s.levels.iter().enumerate() {
            let v: CVec = s.states.column(i).into_owned();
            let r = (h.matvec(&v) - &v * C64::new(e, 0.0)).norm();
            assert!(r <= 1e-8 * h.norm_bound());
        }
    }

    #[test]
    fn full_sector_has_spurious_doublets() {
        let p = device(0.5);
        let full = solve_spectrum(&p, &BasisConfig::full(6), 2).unwrap();
        let phys = solve_spectrum(&p, &BasisConfig { sector: ChargeSector::Physical, ..BasisConfig::new(6) }, 2)
            .unwrap();
        // the shifted copy of the ground well sits almost on top of the ground state
        assert!(full.levels[1] - full.levels[0] < 0.1 * (phys.levels[1] - phys.levels[0]));
    }

    #[test]
    fn transitions_from_reference_levels() {
        let t = transitions_from_levels(&[0.0, 2.661, 6.170]).unwrap();
        assert!((t.anharmonicity - 0.848).abs() < 1e-12);
        assert!(((t.w_gf - 2.0 * t.w_ge) - t.anharmonicity).abs() < 1e-12);
        let t = transitions_from_levels(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(t.anharmonicity, 0.0);
        let t = transitions_from_levels(&[0.0, 2.661, 6.583]).unwrap();
        assert!((t.anharmonicity - 1.261).abs() < 1e-12);
        assert!(transitions_from_levels(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn unknown_operator_tag() {
        assert!("charge_q".parse::<ChargeOperator>().is_err());
        assert_eq!("charge_m".parse::<ChargeOperator>().unwrap(), ChargeOperator::ChargeM);
    }

    #[test]
    fn sweep_rows_keep_order_and_report_row() {
        let p = device(0.5);
        let grid = [0.52, 0.5, 0.48];
        let rows = flux_sweep(&p, &grid, &BasisConfig::new(6), 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.flux).collect::<Vec<_>>(), grid.to_vec());
        assert!((rows[0].w_ge - rows[2].w_ge).abs() < 1e-9);

        let err = flux_sweep(&p, &[0.5, f64::NAN], &BasisConfig::new(6), 3).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
        let mut bad = p;
        bad.alpha = 0.0;
        let err = flux_sweep(&bad, &[0.5, 0.6], &BasisConfig::new(6), 3).unwrap_err();
        assert!(matches!(err, Error::SweepRow { row: 0, .. }));
    }
}
