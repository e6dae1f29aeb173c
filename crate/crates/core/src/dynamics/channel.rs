use nalgebra::{Matrix2, Matrix4};
use serde::Serialize;

use super::{lindblad_superop, propagate_unitary, NoiseModel, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::{c, embed2, paulis, unitary_superop, unvectorize, vectorize, CMat, C64};
use crate::pulses::PulseProgram;

/// Action of a gate restricted to the qubit subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateChannel {
    /// Pauli transfer matrix, basis order I, X, Y, Z.
    pub ptm: Matrix4<f64>,
    /// Mean population leaving the qubit subspace over |0⟩, |1⟩, |+⟩, |+i⟩.
    pub leakage: f64,
}

impl GateChannel {
    pub fn identity() -> Self {
        Self { ptm: Matrix4::identity(), leakage: 0.0 }
    }

    /// Rows of the transfer matrix, for JSON dumps.
    pub fn ptm_rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.ptm[(i, j)];
            }
        }
        out
    }
}

fn top_left(m: &CMat) -> Matrix2<C64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Restrict a `d² × d²` superoperator to the qubit subspace.
pub fn channel_from_superop(s: &CMat, d: usize) -> GateChannel {
    let p = paulis();
    let mut ptm = Matrix4::zeros();
    for j in 0..4 {
        let out = top_left(&unvectorize(&(s * vectorize(&embed2(&p[j], d))), d));
        for i in 0..4 {
            ptm[(i, j)] = 0.5 * (p[i] * out).trace().re;
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(h, 0.0), c(h, 0.0)],
        [c(h, 0.0), c(0.0, h)],
    ];
    let leakage = kets
        .iter()
        .map(|k| {
            let rho = Matrix2::from_fn(|a, b| k[a] * k[b].conj());
            let out = unvectorize(&(s * vectorize(&embed2(&rho, d))), d);
            (1.0 - out[(0, 0)].re - out[(1, 1)].re).max(0.0)
        })
        .sum::<f64>()
        / 4.0;
    GateChannel { ptm, leakage }
}

pub fn ptm_of_unitary(u: &Matrix2<C64>) -> Matrix4<f64> {
    let p = paulis();
    Matrix4::from_fn(|i, j| 0.5 * (p[i] * u * p[j] * u.adjoint()).trace().re)
}

/// Channel of `program`; `noise = None` gives the closed-system channel.
pub fn channel_from_program(
    system: &SystemModel,
    noise: Option<&NoiseModel>,
    program: &PulseProgram,
    dt: f64,
) -> Result<GateChannel> {
    let s = match noise {
        Some(n) => lindblad_superop(system, n, program, dt)?,
        None => unitary_superop(&propagate_unitary(system, program, dt)?),
    };
    Ok(channel_from_superop(&s, system.dims))
}

/// Average gate fidelity `(2·F_pro + 1)/3` against a target unitary.
pub fn average_gate_fidelity(channel: &GateChannel, target: &Matrix2<C64>) -> Result<f64> {
    let err = (target.adjoint() * target - Matrix2::identity()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if err > 1e-10 {
        return Err(Error::param("target", format!("not unitary (error {err:.3e})")));
    }
    let rt = ptm_of_unitary(target);
    let f_pro = (rt.transpose() * channel.ptm).trace() / 4.0;
    Ok((2.0 * f_pro + 1.0) / 3.0)
}
