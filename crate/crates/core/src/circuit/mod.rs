//! Quantized C-shunt flux-qubit circuit.
//!
//! The two junction-loop coordinates `φ_p`, `φ_m` are expanded in plane waves
//! `exp(i n φ)`. Energies are in GHz (h = 1) and flux is the reduced external
//! flux `f = Φ_ext / Φ_0`.

mod eigen;
mod fit;
mod hamiltonian;
mod spectrum;

pub use eigen::{eigensolve, EigenOptions, EigenPairs};
pub use fit::{fit_parameters, FitTargets, FreeParam, ParameterFit};
pub use hamiltonian::{build_hamiltonian, ChargeHamiltonian, ChargeState};
pub use spectrum::{
    flux_sweep, matrix_element, solve_spectrum, transitions, ChargeOperator, Spectrum, SweepRow,
    Transitions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical device knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// Josephson energy of the two large junctions.
    #[serde(rename = "ej_ghz")]
    pub ej: f64,
    /// Single-junction charging energy `e²/(2C_J)`.
    #[serde(rename = "ec_ghz")]
    pub ec: f64,
    /// Small-junction scale.
    pub alpha: f64,
    /// Shunt-capacitance ratio `C_sh / C_J`.
    pub beta: f64,
    /// Reduced external flux.
    pub flux: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.ej, self.ec, self.alpha, self.beta, self.flux]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("circuit", "all parameters must be finite"));
        }
        // ej = 0 is admitted: it is the uncoupled charge limit used in tests.
        if self.ej < 0.0 {
            return Err(Error::param("ej", format!("must be non-negative, got {}", self.ej)));
        }
        if self.ec <= 0.0 {
            return Err(Error::param("ec", format!("must be positive, got {}", self.ec)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.beta < 0.0 {
            return Err(Error::param("beta", format!("must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_flux(self, flux: f64) -> Self {
        Self { flux, ..self }
    }

    /// Flux folded into `[0, 1)` for reporting.
    pub fn reduced_flux(&self) -> f64 {
        self.flux.rem_euclid(1.0)
    }

    /// Charging coefficient of `n_m²`: `2 E_C / (1 + 2α + 2β)`.
    pub fn minus_mode_charging(&self) -> f64 {
        2.0 * self.ec / (1.0 + 2.0 * self.alpha + 2.0 * self.beta)
    }
}

/// Which charge states enter the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeSector {
    /// Only states with `n_p + n_m` even. These are the wavefunctions that are
    /// single-valued in the original junction phases; the odd states are a
    /// second copy of the potential landscape shifted by `(π, π)`.
    #[default]
    Physical,
    /// The full tensor product `[−n_max, n_max]²`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub n_max: usize,
    pub sector: ChargeSector,
    /// Refuse to build bases larger than this.
    pub max_dim: usize,
}

impl BasisConfig {
    pub const DEFAULT_N_MAX: usize = 15;

    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            sector: ChargeSector::Physical,
            max_dim: 20_000,
        }
    }

    pub fn full(n_max: usize) -> Self {
        Self {
            sector: ChargeSector::Full,
            ..Self::new(n_max)
        }
    }

    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        let full = self.side() * self.side();
        match self.sector {
            ChargeSector::Full => full,
            ChargeSector::Physical => full.div_ceil(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::param("n_max", "must be at least 1"));
        }
        let side = self.side();
        let dim = side
            .checked_mul(side)
            .ok_or(Error::DimensionOverflow { dim: usize::MAX, cap: self.max_dim })?;
        let dim = if self.sector == ChargeSector::Physical { dim.div_ceil(2) } else { dim };
        if dim > self.max_dim {
            return Err(Error::DimensionOverflow { dim, cap: self.max_dim });
        }
        Ok(())
    }
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_N_MAX)
    }
}
