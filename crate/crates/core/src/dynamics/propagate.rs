use nalgebra::DVector;

use super::{drift, frame_frequency, hamiltonian_into, NoiseModel, SystemModel};
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator_generator, dissipator_generator, trace, unitarity_error, unvectorize, vectorize, CMat, C64,
};
use crate::pulses::{PulseProgram, PulseSegment};

/// Default integration step, ns.
pub const DEFAULT_DT: f64 = 0.01;

const MAX_STEPS: f64 = 1e8;

// Gauss–Legendre nodes on [0, 1].
const G1: f64 = 0.5 - 0.288_675_134_594_812_9;
const G2: f64 = 0.5 + 0.288_675_134_594_812_9;

/// Fourth-order Magnus propagator of `dX/dt = A(t) X` across one segment.
fn magnus_segment<F>(seg: &PulseSegment, dt: f64, generator: F, acc: &mut CMat) -> Result<()>
where
    F: Fn(Option<&PulseSegment>, f64) -> CMat,
{
    let len = seg.shape.length();
    let steps = (len / dt - 1e-9).ceil().max(1.0);
    if steps > MAX_STEPS {
        return Err(Error::Integration(format!("{steps} steps exceed the limit")));
    }
    let n = steps as usize;
    let h = len / n as f64;
    let k2 = 3f64.sqrt() * h * h / 12.0;
    for k in 0..n {
        let t0 = seg.start + k as f64 * h;
        let a1 = generator(Some(seg), t0 + G1 * h);
        let a2 = generator(Some(seg), t0 + G2 * h);
        let comm = &a2 * &a1 - &a1 * &a2;
        let omega = (a1 + a2) * c(0.5 * h, 0.0) + comm * c(k2, 0.0);
        *acc = omega.exp() * &*acc;
    }
    Ok(())
}

/// Walk the program: Magnus steps inside segments, `gap(τ)` between them.
fn run_program<F, G>(program: &PulseProgram, dim: usize, dt: f64, generator: F, gap: G) -> Result<CMat>
where
    F: Fn(Option<&PulseSegment>, f64) -> CMat + Copy,
    G: Fn(f64) -> CMat,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    program.validate()?;
    let mut acc = CMat::identity(dim, dim);
    let mut t = 0.0;
    for seg in &program.segments {
        if seg.start > t {
            acc = gap(seg.start - t) * acc;
        }
        if seg.shape.amplitude() == 0.0 {
            acc = gap(seg.shape.length()) * acc;
        } else {
            magnus_segment(seg, dt, generator, &mut acc)?;
        }
        t = seg.end();
    }
    if program.duration > t {
        acc = gap(program.duration - t) * acc;
    }
    Ok(acc)
}

/// Closed-system propagator of `program`.
pub fn propagate_unitary(system: &SystemModel, program: &PulseProgram, dt: f64) -> Result<CMat> {
    system.validate()?;
    let d = system.dims;
    let frame = frame_frequency(system, program);
    let diag = drift(system, frame);
    let gen = |seg: Option<&PulseSegment>, t: f64| {
        let mut h = CMat::zeros(d, d);
        hamiltonian_into(&mut h, system, &diag, seg, frame, t);
        h * c(0.0, -1.0)
    };
    let gap = |tau: f64| CMat::from_diagonal(&DVector::from_fn(d, |j, _| C64::from_polar(1.0, -diag[j] * tau)));
    let u = run_program(program, d, dt, gen, gap)?;
    let err = unitarity_error(&u);
    if err > 1e-8 {
        return Err(Error::Integration(format!("unitarity error {err:.3e}")));
    }
    Ok(u)
}

fn dissipator_sum(system: &SystemModel, noise: &NoiseModel) -> CMat {
    let d = system.dims;
    noise
        .collapse_operators(d)
        .iter()
        .fold(CMat::zeros(d * d, d * d), |acc, l| acc + dissipator_generator(l))
}

/// Time-independent Liouvillian of the undriven system in the given frame.
pub fn static_generator(system: &SystemModel, noise: &NoiseModel, frame: f64) -> CMat {
    let diag = drift(system, frame);
    let h = CMat::from_diagonal(&DVector::from_fn(system.dims, |j, _| c(diag[j], 0.0)));
    commutator_generator(&h) + dissipator_sum(system, noise)
}

/// Superoperator of free evolution for `tau` ns.
pub fn idle_superop(system: &SystemModel, noise: &NoiseModel, frame: f64, tau: f64) -> CMat {
    (static_generator(system, noise, frame) * c(tau, 0.0)).exp()
}

/// Column-stacked superoperator of the whole program under Lindblad noise.
pub fn lindblad_superop(
    system: &SystemModel,
    noise: &NoiseModel,
    program: &PulseProgram,
    dt: f64,
) -> Result<CMat> {
    system.validate()?;
    noise.validate()?;
    let d = system.dims;
    let frame = frame_frequency(system, program);
    let diag = drift(system, frame);
    let diss = dissipator_sum(system, noise);
    let l0 = static_generator(system, noise, frame);
    let gen = |seg: Option<&PulseSegment>, t: f64| {
        let mut h = CMat::zeros(d, d);
        hamiltonian_into(&mut h, system, &diag, seg, frame, t);
        commutator_generator(&h) + &diss
    };
    let gap = |tau: f64| (&l0 * c(tau, 0.0)).exp();
    run_program(program, d * d, dt, gen, gap)
}

fn check_density(rho: &CMat, d: usize) -> Result<()> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::param("rho0", format!("expected a {d}×{d} matrix")));
    }
    if (rho - rho.adjoint()).iter().any(|z| z.norm() > 1e-10) {
        return Err(Error::param("rho0", "not Hermitian"));
    }
    if (trace(rho).re - 1.0).abs() > 1e-10 {
        return Err(Error::param("rho0", "trace differs from 1"));
    }
    if min_eigenvalue(rho) < -1e-10 {
        return Err(Error::param("rho0", "not positive semidefinite"));
    }
    Ok(())
}

fn min_eigenvalue(rho: &CMat) -> f64 {
    let herm = (rho + rho.adjoint()) * c(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &v| m.min(v))
}

/// Evolve a density matrix through `program` under Lindblad noise.
pub fn propagate_lindblad(
    system: &SystemModel,
    noise: &NoiseModel,
    program: &PulseProgram,
    rho0: &CMat,
    dt: f64,
) -> Result<CMat> {
    check_density(rho0, system.dims)?;
    let s = lindblad_superop(system, noise, program, dt)?;
    let rho = unvectorize(&(s * vectorize(rho0)), system.dims);
    let drift = (trace(&rho).re - 1.0).abs();
    if drift > 1e-6 {
        return Err(Error::Integration(format!("trace drifted by {drift:.3e}")));
    }
    let low = min_eigenvalue(&rho);
    if low < -1e-6 {
        return Err(Error::Integration(format!("lost positivity (eigenvalue {low:.3e})")));
    }
    Ok(rho)
}
