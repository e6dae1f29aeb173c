use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{solve_spectrum, transitions, BasisConfig, CircuitParams};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmSettings};

/// Circuit knobs that `fit_parameters` may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeParam {
    Ej,
    Ec,
    Alpha,
    Beta,
}

impl FreeParam {
    fn get(self, p: &CircuitParams) -> f64 {
        match self {
            FreeParam::Ej => p.ej,
            FreeParam::Ec => p.ec,
            FreeParam::Alpha => p.alpha,
            FreeParam::Beta => p.beta,
        }
    }

    fn set(self, p: &mut CircuitParams, v: f64) {
        match self {
            FreeParam::Ej => p.ej = v,
            FreeParam::Ec => p.ec = v,
            FreeParam::Alpha => p.alpha = v,
            FreeParam::Beta => p.beta = v,
        }
    }

    // alpha lives in (0, 1); the others are positive.
    fn to_internal(self, v: f64) -> f64 {
        match self {
            FreeParam::Alpha => (v / (1.0 - v)).ln(),
            _ => v.ln(),
        }
    }

    fn from_internal(self, q: f64) -> f64 {
        match self {
            FreeParam::Alpha => 1.0 / (1.0 + (-q).exp()),
            _ => q.exp(),
        }
    }
}

/// Observed transitions at one flux point, GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTargets {
    pub w_ge: f64,
    pub anharmonicity: f64,
    pub flux: f64,
}

impl FitTargets {
    /// Acceptance window on `w_ge`, GHz.
    pub const W_GE_TOL: f64 = 1e-3;
    /// Acceptance window on the anharmonicity, GHz.
    pub const ANHARM_TOL: f64 = 2e-3;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterFit {
    pub params: CircuitParams,
    /// Model minus target for `[w_ge, anharmonicity]`, GHz.
    pub residuals: [f64; 2],
    pub iterations: usize,
}

/// Residuals this small count as an exact match.
const EXACT: f64 = 1e-9;

fn residuals_at(params: &CircuitParams, targets: &FitTargets, basis: &BasisConfig) -> Result<[f64; 2]> {
    let spec = solve_spectrum(&params.with_flux(targets.flux), basis, 3)?;
    let t = transitions(&spec)?;
    Ok([t.w_ge - targets.w_ge, t.anharmonicity - targets.anharmonicity])
}

/// Adjust the `free` knobs of `initial` until the spectrum at `targets.flux`
/// reproduces the target transitions.
///
/// The Jacobian is a forward difference over repeated eigensolves in log
/// (or logit, for alpha) coordinates.
pub fn fit_parameters(
    targets: &FitTargets,
    initial: &CircuitParams,
    free: &[FreeParam],
    basis: &BasisConfig,
) -> Result<ParameterFit> {
    if !(targets.w_ge > 0.0 && targets.anharmonicity.is_finite() && targets.anharmonicity > 0.0) {
        return Err(Error::param("targets", "w_ge and anharmonicity must be positive"));
    }
    if free.len() > 2 {
        return Err(Error::param(
            "free",
            format!("{} free parameters but only two targets", free.len()),
        ));
    }
    for (i, a) in free.iter().enumerate() {
        if free[..i].contains(a) {
            return Err(Error::param("free", format!("{a:?} listed twice")));
        }
    }
    initial.validate()?;
    if initial.ej <= 0.0 {
        return Err(Error::param("ej", "must be positive for fitting"));
    }

    let r0 = residuals_at(initial, targets, basis)?;
    if r0.iter().all(|r| r.abs() <= EXACT) || free.is_empty() {
        return finish(*initial, r0, 0);
    }

    let build = |q: &DVector<f64>| {
        let mut p = *initial;
        for (k, fp) in free.iter().enumerate() {
            fp.set(&mut p, fp.from_internal(q[k]));
        }
        p
    };
    let residual = |q: &DVector<f64>| -> Result<DVector<f64>> {
        let r = residuals_at(&build(q), targets, basis)?;
        Ok(DVector::from_row_slice(&r))
    };
    let jacobian = |q: &DVector<f64>| -> Result<DMatrix<f64>> {
        let base = residual(q)?;
        let mut jac = DMatrix::zeros(2, free.len());
        for k in 0..free.len() {
            let h = 1e-6 * q[k].abs().max(1.0);
            let mut qk = q.clone();
            qk[k] += h;
            let col = (residual(&qk)? - &base) / h;
            jac.set_column(k, &col);
        }
        Ok(jac)
    };
    let q0 = DVector::from_iterator(free.len(), free.iter().map(|fp| fp.to_internal(fp.get(initial))));
    let settings = LmSettings { max_iterations: 100, ..LmSettings::default() };
    let sol = levenberg_marquardt(q0, &settings, residual, jacobian)?;
    let params = build(&sol.x);
    let r = residuals_at(&params, targets, basis)?;
    finish(params, r, sol.iterations)
}

fn finish(params: CircuitParams, r: [f64; 2], iterations: usize) -> Result<ParameterFit> {
    if r[0].abs() > FitTargets::W_GE_TOL || r[1].abs() > FitTargets::ANHARM_TOL {
        return Err(Error::ParameterFit { residuals: r.to_vec() });
    }
    Ok(ParameterFit { params, residuals: r, iterations })
}
