//! Few-level qubit dynamics in the frame rotating with the drive.
//!
//! Time is in ns, angular rates in rad/ns, frequencies in GHz, and coherence
//! times in µs (converted at the boundary).

mod channel;
mod propagate;
mod readout;

pub use channel::{
    average_gate_fidelity, channel_from_program, channel_from_superop, ptm_of_unitary, GateChannel,
};
pub use propagate::{
    idle_superop, lindblad_superop, propagate_lindblad, propagate_unitary, static_generator,
    DEFAULT_DT,
};
pub use readout::{measure, sample_shots, sample_shots_with, task_rng, Confusion, Readout};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{matrix_element, solve_spectrum, BasisConfig, ChargeOperator, CircuitParams};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};
use crate::pulses::{complex_drive, PulseProgram, PulseSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub dims: usize,
    /// GHz
    pub w_ge: f64,
    /// GHz; `w_ef = w_ge + anharm`.
    pub anharm: f64,
    /// `λ_{j,j+1}` relative to the g–e element; `drive_weights[0] == 1`.
    pub drive_weights: Vec<f64>,
}

impl SystemModel {
    pub fn two_level(w_ge: f64) -> Self {
        Self { dims: 2, w_ge, anharm: 0.0, drive_weights: vec![1.0] }
    }

    /// Ladder with the harmonic-oscillator weights `√(j+1)`.
    pub fn harmonic_weights(w_ge: f64, anharm: f64, dims: usize) -> Self {
        let drive_weights = (0..dims.saturating_sub(1)).map(|j| ((j + 1) as f64).sqrt()).collect();
        Self { dims, w_ge, anharm, drive_weights }
    }

    pub fn three_level(w_ge: f64, anharm: f64, lambda12: f64) -> Self {
        Self { dims: 3, w_ge, anharm, drive_weights: vec![1.0, lambda12] }
    }

    /// Transition frequencies and `n_m` drive weights from the circuit at the
    /// flux stored in `params`.
    pub fn from_circuit(params: &CircuitParams, basis: &BasisConfig, dims: usize) -> Result<Self> {
        if dims < 2 {
            return Err(Error::param("dims", "need at least two levels"));
        }
        let spec = solve_spectrum(params, basis, dims.max(3))?;
        let e = &spec.levels;
        let w_ge = e[1] - e[0];
        let anharm = (e[2] - e[1]) - w_ge;
        let base = matrix_element(&spec, ChargeOperator::ChargeM, 0, 1)?;
        if base == 0.0 {
            return Err(Error::param("circuit", "vanishing g–e charge matrix element"));
        }
        let mut weights = Vec::with_capacity(dims - 1);
        for j in 0..dims - 1 {
            weights.push(matrix_element(&spec, ChargeOperator::ChargeM, j, j + 1)? / base);
        }
        Ok(Self { dims, w_ge, anharm, drive_weights: weights })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims < 2 {
            return Err(Error::param("dims", "need at least two levels"));
        }
        if !(self.w_ge > 0.0 && self.w_ge.is_finite()) {
            return Err(Error::param("w_ge", "must be positive"));
        }
        if !self.anharm.is_finite() {
            return Err(Error::param("anharm", "must be finite"));
        }
        if self.drive_weights.len() != self.dims - 1 {
            return Err(Error::param("drive_weights", "need one weight per adjacent pair"));
        }
        if self.drive_weights[0] != 1.0 {
            return Err(Error::param("drive_weights", "first weight must be 1"));
        }
        if self.drive_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("drive_weights", "must be finite"));
        }
        Ok(())
    }

    /// Bare level energy `E_j`, GHz (Duffing ladder beyond the f level).
    pub fn energy(&self, j: usize) -> f64 {
        let jf = j as f64;
        jf * self.w_ge + 0.5 * jf * (jf - 1.0) * self.anharm
    }
}

/// Markovian noise. Times in µs; `f64::INFINITY` switches a channel off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub t1: f64,
    pub t_phi: f64,
    #[serde(default)]
    pub confusion: Confusion,
}

impl NoiseModel {
    /// Pure-dephasing time implied by `1/T2 = 1/(2T1) + 1/Tφ`.
    pub fn t_phi_from_t2(t1: f64, t2: f64) -> Result<f64> {
        let rate = 1.0 / t2 - 1.0 / (2.0 * t1);
        if !(rate > 0.0) {
            return Err(Error::param("t2", "T2 must be shorter than 2·T1"));
        }
        Ok(1.0 / rate)
    }

    /// T1 = 23 µs with Tφ matched to the 6.3 µs Ramsey decay.
    pub fn paper_ramsey() -> Self {
        Self { t1: 23.0, t_phi: Self::t_phi_from_t2(23.0, 6.3).unwrap(), confusion: Confusion::paper() }
    }

    /// T1 = 23 µs with Tφ matched to the 17.4 µs echo decay.
    pub fn paper_echo() -> Self {
        Self { t1: 23.0, t_phi: Self::t_phi_from_t2(23.0, 17.4).unwrap(), confusion: Confusion::paper() }
    }

    /// Second device: shorter T1, dephasing borrowed from the first device.
    pub fn device_b() -> Self {
        Self { t1: 6.6, ..Self::paper_ramsey() }
    }

    pub fn noiseless() -> Self {
        Self { t1: f64::INFINITY, t_phi: f64::INFINITY, confusion: Confusion::ideal() }
    }

    pub fn with_confusion(self, confusion: Confusion) -> Self {
        Self { confusion, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0) {
            return Err(Error::param("t1", "must be positive"));
        }
        if !(self.t_phi > 0.0) {
            return Err(Error::param("t_phi", "must be positive"));
        }
        self.confusion.validate()
    }

    /// `T2 = 1/(1/(2T1) + 1/Tφ)`, µs.
    pub fn t2(&self) -> f64 {
        1.0 / (0.5 / self.t1 + 1.0 / self.t_phi)
    }

    /// Collapse operators in 1/√ns units: `√(j/T1)|j−1⟩⟨j|` and `√(2/Tφ)·N̂`.
    pub fn collapse_operators(&self, dims: usize) -> Vec<CMat> {
        let mut ops = Vec::new();
        let gamma1 = 1.0 / (self.t1 * 1e3);
        if gamma1 > 0.0 {
            for j in 1..dims {
                let mut l = CMat::zeros(dims, dims);
                l[(j - 1, j)] = c((j as f64 * gamma1).sqrt(), 0.0);
                ops.push(l);
            }
        }
        let gamma_phi = 1.0 / (self.t_phi * 1e3);
        if gamma_phi > 0.0 {
            let amp = (2.0 * gamma_phi).sqrt();
            ops.push(CMat::from_diagonal(&nalgebra::DVector::from_fn(dims, |j, _| c(amp * j as f64, 0.0))));
        }
        ops
    }
}

/// Frame frequency of a program: the first segment's carrier, else `w_ge`.
pub fn frame_frequency(system: &SystemModel, program: &PulseProgram) -> f64 {
    program.segments.first().map_or(system.w_ge, |s| s.carrier)
}

/// Drift part `2π(E_j − jω_d)` on the diagonal, rad/ns.
pub(crate) fn drift(system: &SystemModel, frame: f64) -> Vec<f64> {
    (0..system.dims)
        .map(|j| 2.0 * PI * (system.energy(j) - j as f64 * frame))
        .collect()
}

/// Fill `h` with the RWA Hamiltonian at absolute time `t`.
pub(crate) fn hamiltonian_into(
    h: &mut CMat,
    system: &SystemModel,
    diag: &[f64],
    segment: Option<&PulseSegment>,
    frame: f64,
    t: f64,
) {
    h.fill(C64::new(0.0, 0.0));
    for (j, &d) in diag.iter().enumerate() {
        h[(j, j)] = c(d, 0.0);
    }
    if let Some(seg) = segment {
        let mut drive = complex_drive(seg, t);
        let detune = seg.carrier - frame;
        if detune != 0.0 {
            drive *= C64::from_polar(1.0, -2.0 * PI * detune * t);
        }
        for (j, &w) in system.drive_weights.iter().enumerate() {
            let v = drive * (0.5 * w);
            h[(j, j + 1)] = v;
            h[(j + 1, j)] = v.conj();
        }
    }
}

/// Rotating-frame Hamiltonian at time `t`, rad/ns.
pub fn rotating_hamiltonian(system: &SystemModel, program: &PulseProgram, t: f64) -> Result<CMat> {
    system.validate()?;
    if !(0.0..=program.duration).contains(&t) {
        return Err(Error::TimeOutOfRange { t, end: program.duration });
    }
    let frame = frame_frequency(system, program);
    let diag = drift(system, frame);
    let mut h = CMat::zeros(system.dims, system.dims);
    hamiltonian_into(&mut h, system, &diag, program.segment_at(t), frame, t);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{GaussianShape, PulseShape};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_drive_two_level_is_zero() {
        let sys = SystemModel::two_level(2.661);
        let mut p = PulseProgram::new();
        p.push(PulseShape::Gaussian(GaussianShape::default()), 0.0, 2.661);
        let h = rotating_hamiltonian(&sys, &p, 7.0).unwrap();
        assert_eq!(h, CMat::zeros(2, 2));
    }

    #[test]
    fn resonant_frame_three_level_diagonal() {
        let sys = SystemModel::three_level(2.661, 0.848, 1.679);
        let p = PulseProgram { segments: vec![], duration: 1.0 };
        let h = rotating_hamiltonian(&sys, &p, 0.5).unwrap();
        assert!(h[(0, 0)].norm() < 1e-15);
        assert!(h[(1, 1)].norm() < 1e-12);
        assert!((h[(2, 2)].re - 2.0 * PI * 0.848).abs() < 1e-12);
    }

    #[test]
    fn phase_selects_rotation_axis() {
        let sys = SystemModel::two_level(2.661);
        let shape = PulseShape::Square { length: 10.0, amplitude: 0.2 };
        let mut px = PulseProgram::new();
        px.push(shape, 0.0, 2.661);
        let mut py = PulseProgram::new();
        py.push(shape, FRAC_PI_2, 2.661);
        let hx = rotating_hamiltonian(&sys, &px, 5.0).unwrap();
        let hy = rotating_hamiltonian(&sys, &py, 5.0).unwrap();
        // ½Ω σx and ½Ω σy
        assert!((hx[(0, 1)] - c(0.1, 0.0)).norm() < 1e-15);
        assert!((hy[(0, 1)] - c(0.0, -0.1)).norm() < 1e-15);
        assert!((hy[(1, 0)] - c(0.0, 0.1)).norm() < 1e-15);
        assert!(rotating_hamiltonian(&sys, &px, 11.0).is_err());
    }

    #[test]
    fn t_phi_presets() {
        assert!((NoiseModel::paper_ramsey().t_phi - 7.299).abs() < 1e-3);
        assert!((NoiseModel::paper_echo().t_phi - 27.99).abs() < 1e-2);
        assert!((NoiseModel::paper_ramsey().t2() - 6.3).abs() < 1e-12);
        assert!(NoiseModel::t_phi_from_t2(5.0, 10.0).is_err());
    }
}
