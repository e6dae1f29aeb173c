//! Virtual coherence and spectroscopy measurements.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{flux_sweep, BasisConfig, CircuitParams};
use crate::device::{phase_shift_superop, Device};
use crate::dynamics::{idle_superop, measure, sample_shots_with, task_rng, Confusion, NoiseModel};
use crate::error::{Error, Result};
use crate::fit::{fit_damped_cosine, fit_exponential, FitOutcome};
use crate::linalg::{ket_bra, unvectorize, vectorize, CMat, CVec};
use crate::pulses::PhysicalGate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    /// ns
    pub delays: Vec<f64>,
    /// Reported excited-state probability per delay.
    pub values: Vec<f64>,
    /// Shots per point; 0 means exact probabilities.
    pub shots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceKind {
    T1,
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceResult {
    pub kind: CoherenceKind,
    pub curve: DecayCurve,
    pub fit: Option<FitOutcome>,
    /// Why the fit failed, if it did. The curve is kept either way.
    pub fit_error: Option<String>,
    /// Fitted decay time, µs.
    pub time_us: Option<f64>,
    pub time_stderr_us: Option<f64>,
    /// Fitted Ramsey fringe frequency, MHz.
    pub frequency_mhz: Option<f64>,
    pub frequency_stderr_mhz: Option<f64>,
}

impl CoherenceResult {
    fn new(kind: CoherenceKind, curve: DecayCurve, fit: Result<FitOutcome>) -> Self {
        let mut out = Self {
            kind,
            curve,
            fit: None,
            fit_error: None,
            time_us: None,
            time_stderr_us: None,
            frequency_mhz: None,
            frequency_stderr_mhz: None,
        };
        match fit {
            Ok(f) => {
                out.time_us = Some(f.value("T") * 1e-3);
                out.time_stderr_us = Some(f.error("T") * 1e-3);
                if kind == CoherenceKind::Ramsey {
                    let (fr, fe) = f.get("f").unwrap_or((0.0, 0.0));
                    out.frequency_mhz = Some(fr.abs() * 1e3);
                    out.frequency_stderr_mhz = Some(fe * 1e3);
                }
                out.fit = Some(f);
            }
            Err(e) => out.fit_error = Some(e.to_string()),
        }
        out
    }
}

/// Linear grid of `n` delays over `[0, 3·expected]`, ns.
pub fn default_delays(expected_ns: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| 3.0 * expected_ns * k as f64 / (n - 1) as f64).collect()
}

/// Shared plumbing: a device, readout switch, and the ground state.
struct Bench<'a> {
    device: &'a Device,
    noise: NoiseModel,
    confusion: Confusion,
    x90: CMat,
    x180: CMat,
}

impl<'a> Bench<'a> {
    fn new(device: &'a Device, ideal_readout: bool) -> Result<Self> {
        let noise = device.noise_or_noiseless();
        let gs = device.gate_set()?;
        let confusion = if ideal_readout { Confusion::ideal() } else { noise.confusion };
        Ok(Self {
            device,
            noise,
            confusion,
            x90: gs.superop(PhysicalGate::X90).clone(),
            x180: gs.superop(PhysicalGate::X180).clone(),
        })
    }

    fn idle(&self, tau: f64) -> CMat {
        if tau == 0.0 {
            let n = self.device.system.dims.pow(2);
            return CMat::identity(n, n);
        }
        idle_superop(&self.device.system, &self.noise, self.device.cal.carrier, tau)
    }

    fn ground(&self) -> CVec {
        vectorize(&ket_bra(self.device.system.dims, 0, 0))
    }

    fn report(&self, state: &CVec) -> f64 {
        measure(&unvectorize(state, self.device.system.dims), &self.confusion).p_e
    }

    /// Evaluate `point(k, delay)` for every delay, then apply shot noise.
    fn run<F>(&self, delays: &[f64], shots: u64, seed: u64, point: F) -> Result<DecayCurve>
    where
        F: Fn(f64) -> CVec + Sync,
    {
        validate_delays(delays)?;
        let values = delays
            .par_iter()
            .enumerate()
            .map(|(k, &tau)| {
                let p = self.report(&point(tau)).clamp(0.0, 1.0);
                if shots == 0 {
                    return Ok(p);
                }
                let mut rng = task_rng(seed, k as u64);
                let counts = sample_shots_with(&[1.0 - p, p], shots, &mut rng)?;
                Ok(counts[1] as f64 / shots as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecayCurve { delays: delays.to_vec(), values, shots })
    }
}

fn validate_delays(delays: &[f64]) -> Result<()> {
    if delays.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::param("delays", "must be finite and non-negative"));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("delays", "must be strictly increasing"));
    }
    Ok(())
}

/// π pulse, wait τ, measure.
pub fn t1_experiment(
    device: &Device,
    delays: &[f64],
    shots: u64,
    seed: u64,
    ideal_readout: bool,
) -> Result<CoherenceResult> {
    let bench = Bench::new(device, ideal_readout)?;
    let excited = &bench.x180 * bench.ground();
    let curve = bench.run(delays, shots, seed, |tau| bench.idle(tau) * &excited)?;
    let fit = fit_exponential(&curve.delays, &curve.values, None);
    Ok(CoherenceResult::new(CoherenceKind::T1, curve, fit))
}

/// X/2, wait τ, X/2 with its phase advanced by `2π·detuning·τ`.
pub fn ramsey_experiment(
    device: &Device,
    delays: &[f64],
    detuning_mhz: f64,
    shots: u64,
    seed: u64,
    ideal_readout: bool,
) -> Result<CoherenceResult> {
    if !detuning_mhz.is_finite() {
        return Err(Error::param("detuning", "must be finite"));
    }
    let bench = Bench::new(device, ideal_readout)?;
    let d = device.system.dims;
    let first = &bench.x90 * bench.ground();
    let curve = bench.run(delays, shots, seed, |tau| {
        let phi = 2.0 * PI * detuning_mhz * 1e-3 * tau;
        let second = phase_shift_superop(&bench.x90, d, phi);
        second * (bench.idle(tau) * &first)
    })?;
    // Without a fringe the decay is a plain exponential.
    let fit = if detuning_mhz == 0.0 {
        fit_exponential(&curve.delays, &curve.values, None)
    } else {
        fit_damped_cosine(&curve.delays, &curve.values, None)
    };
    let mut out = CoherenceResult::new(CoherenceKind::Ramsey, curve, fit);
    if detuning_mhz == 0.0 && out.fit.is_some() {
        out.frequency_mhz = Some(0.0);
        out.frequency_stderr_mhz = Some(0.0);
    }
    Ok(out)
}

/// X/2, τ/2, X, τ/2, X/2.
pub fn echo_experiment(
    device: &Device,
    delays: &[f64],
    shots: u64,
    seed: u64,
    ideal_readout: bool,
) -> Result<CoherenceResult> {
    let bench = Bench::new(device, ideal_readout)?;
    let first = &bench.x90 * bench.ground();
    let curve = bench.run(delays, shots, seed, |tau| {
        let half = bench.idle(tau / 2.0);
        &bench.x90 * (&half * (&bench.x180 * (&half * &first)))
    })?;
    let fit = fit_exponential(&curve.delays, &curve.values, None);
    Ok(CoherenceResult::new(CoherenceKind::Echo, curve, fit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectroscopyRow {
    pub flux: f64,
    pub w_ge: f64,
    pub w_gf: f64,
}

/// The two drivable branches `g→e` and `g→f` over a flux grid.
pub fn spectroscopy(params: &CircuitParams, flux_grid: &[f64], basis: &BasisConfig) -> Result<Vec<SpectroscopyRow>> {
    Ok(flux_sweep(params, flux_grid, basis, 3)?
        .into_iter()
        .map(|r| SpectroscopyRow { flux: r.flux, w_ge: r.w_ge, w_gf: r.w_gf })
        .collect())
}
