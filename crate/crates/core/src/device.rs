//! Precomputed superoperators of the native gates.
//!
//! Gate pulses are time-translation invariant in the rotating frame, so one
//! propagation per native gate is enough to evaluate any gate stream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{BasisConfig, CircuitParams};
use crate::dynamics::{
    channel_from_superop, lindblad_superop, propagate_unitary, GateChannel, NoiseModel,
    SystemModel, DEFAULT_DT,
};
use crate::error::Result;
use crate::linalg::{unitary_superop, CMat, CVec, C64};
use crate::pulses::{GateCalibration, GaussianShape, PhysicalGate};

/// Everything needed to simulate calibrated gates on one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub system: SystemModel,
    /// `None` simulates the closed system.
    pub noise: Option<NoiseModel>,
    pub cal: GateCalibration,
    /// Integration step, ns.
    pub dt: f64,
}

impl Device {
    /// `dims`-level model of the circuit with area-rule gates on resonance.
    pub fn from_circuit(params: &CircuitParams, dims: usize, noise: Option<NoiseModel>) -> Result<Self> {
        let system = SystemModel::from_circuit(params, &BasisConfig::default(), dims)?;
        let cal = GateCalibration::from_area(GaussianShape::default(), system.w_ge)?;
        Ok(Self { system, noise, cal, dt: DEFAULT_DT })
    }

    pub fn gate_set(&self) -> Result<GateSet> {
        GateSet::build(&self.system, self.noise.as_ref(), &self.cal, self.dt)
    }

    pub fn noise_or_noiseless(&self) -> NoiseModel {
        self.noise.unwrap_or_else(NoiseModel::noiseless)
    }
}

#[derive(Debug, Clone)]
pub struct GateSet {
    dims: usize,
    superops: Vec<CMat>,
}

/// Superoperator of a gate whose drive phase is advanced by `phi`:
/// `U_φ = D U D†` with `D = diag(e^{ijφ})`.
pub fn phase_shift_superop(s: &CMat, dims: usize, phi: f64) -> CMat {
    let n = dims * dims;
    // vec index r = a + d·b carries ρ_ab, which picks up e^{i(a−b)φ}.
    let phase = |r: usize| {
        let (a, b) = (r % dims, r / dims);
        C64::from_polar(1.0, (a as f64 - b as f64) * phi)
    };
    CMat::from_fn(n, n, |r, k| phase(r) * s[(r, k)] * phase(k).conj())
}

impl GateSet {
    pub fn build(system: &SystemModel, noise: Option<&NoiseModel>, cal: &GateCalibration, dt: f64) -> Result<Self> {
        let superops = PhysicalGate::ALL
            .par_iter()
            .map(|&g| {
                let prog = cal.program(&[g]);
                match noise {
                    Some(n) => lindblad_superop(system, n, &prog, dt),
                    None => Ok(unitary_superop(&propagate_unitary(system, &prog, dt)?)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dims: system.dims, superops })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn superop(&self, g: PhysicalGate) -> &CMat {
        &self.superops[g.index()]
    }

    /// Apply a gate stream (first gate first) to a vectorized state.
    pub fn apply(&self, gates: &[PhysicalGate], mut state: CVec) -> CVec {
        for &g in gates {
            state = self.superop(g) * state;
        }
        state
    }

    pub fn compose(&self, gates: &[PhysicalGate]) -> CMat {
        let n = self.dims * self.dims;
        gates.iter().fold(CMat::identity(n, n), |acc, &g| self.superop(g) * acc)
    }

    pub fn channel(&self, gates: &[PhysicalGate]) -> GateChannel {
        channel_from_superop(&self.compose(gates), self.dims)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::channel_from_program;

    #[test]
    fn composed_superops_match_direct_propagation() {
        let sys = SystemModel::three_level(2.661, 0.848, 1.679);
        let noise = NoiseModel::paper_ramsey();
        let mut cal = GateCalibration::from_area(GaussianShape::default(), 2.661).unwrap();
        cal.eta = -0.15;
        let gs = GateSet::build(&sys, Some(&noise), &cal, DEFAULT_DT).unwrap();
        let gates = [PhysicalGate::X90, PhysicalGate::Ym90, PhysicalGate::I, PhysicalGate::Y180];
        let direct = channel_from_program(&sys, Some(&noise), &cal.program(&gates), DEFAULT_DT).unwrap();
        let composed = gs.channel(&gates);
        assert!((direct.ptm - composed.ptm).norm() < 1e-10);
    }

    #[test]
    fn phase_shift_maps_x_to_y() {
        let sys = SystemModel::three_level(2.661, 0.848, 1.679);
        let cal = GateCalibration::from_area(GaussianShape::default(), 2.661).unwrap();
        let gs = GateSet::build(&sys, None, &cal, DEFAULT_DT).unwrap();
        let shifted = phase_shift_superop(gs.superop(PhysicalGate::X90), 3, std::f64::consts::FRAC_PI_2);
        assert!((shifted - gs.superop(PhysicalGate::Y90)).norm() < 1e-10);
    }
}
