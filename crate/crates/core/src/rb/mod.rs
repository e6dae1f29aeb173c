//! Reference and interleaved randomized benchmarking.

mod clifford;

pub use clifford::{interleave, random_sequence, Clifford, CliffordTable, Sequence};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{Device, GateSet};
use crate::dynamics::{average_gate_fidelity, measure, sample_shots_with, task_rng, Confusion};
use crate::error::{Error, Result};
use crate::fit::{fit_rb_decay, FitOutcome};
use crate::linalg::{ket_bra, unvectorize, vectorize};
use crate::pulses::PhysicalGate;

/// Allowed excess of `p_int` over `p_ref` before the pair is rejected.
const INTERLEAVE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    /// Random sequences per length.
    pub k: usize,
    /// Shots per sequence; 0 records exact probabilities.
    pub shots: u64,
    pub interleave: Option<PhysicalGate>,
    pub seed: u64,
    pub ideal_readout: bool,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            lengths: vec![1, 3, 7, 13, 25, 51, 101, 201, 401],
            k: 50,
            shots: 4000,
            interleave: None,
            seed: 0,
            ideal_readout: false,
        }
    }
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() < 4 {
            return Err(Error::param("lengths", "need at least 4 lengths to fit"));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("lengths", "must be positive and strictly increasing"));
        }
        if self.k < 2 {
            return Err(Error::param("k", "need at least 2 sequences per length"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawPoint {
    pub m: usize,
    /// Sequence index within its length.
    pub seed: usize,
    pub p_reported: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryPoint {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub a_stderr: f64,
    pub p: f64,
    pub p_stderr: f64,
    pub b: f64,
    pub b_stderr: f64,
    pub outcome: FitOutcome,
}

impl DecayFit {
    fn new(outcome: FitOutcome) -> Self {
        let (a, a_stderr) = outcome.get("A").unwrap_or((f64::NAN, f64::NAN));
        let (p, p_stderr) = outcome.get("p").unwrap_or((f64::NAN, f64::NAN));
        let (b, b_stderr) = outcome.get("B").unwrap_or((f64::NAN, f64::NAN));
        Self { a, a_stderr, p, p_stderr, b, b_stderr, outcome }
    }

    /// `A + B` with its covariance-propagated error.
    pub fn initial_survival(&self) -> (f64, f64) {
        let o = &self.outcome;
        let var = o.covariance_of("A", "A") + o.covariance_of("B", "B") + 2.0 * o.covariance_of("A", "B");
        (self.a + self.b, var.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayData {
    pub raw: Vec<RawPoint>,
    pub summary: Vec<SummaryPoint>,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
}

impl DecayData {
    fn new(lengths: &[usize], k: usize, values: Vec<f64>) -> Self {
        let raw: Vec<RawPoint> = values
            .iter()
            .enumerate()
            .map(|(t, &p)| RawPoint { m: lengths[t / k], seed: t % k, p_reported: p })
            .collect();
        let summary: Vec<SummaryPoint> = lengths
            .iter()
            .zip(values.chunks(k))
            .map(|(&m, chunk)| {
                let n = chunk.len() as f64;
                let mean = chunk.iter().sum::<f64>() / n;
                let var = chunk.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                SummaryPoint { m, mean, stderr: (var / n).sqrt() }
            })
            .collect();
        let x: Vec<f64> = summary.iter().map(|s| s.m as f64).collect();
        let y: Vec<f64> = summary.iter().map(|s| s.mean).collect();
        let w: Option<Vec<f64>> = if summary.iter().all(|s| s.stderr > 0.0) {
            Some(summary.iter().map(|s| 1.0 / (s.stderr * s.stderr)).collect())
        } else {
            None
        };
        let (fit, fit_error) = match fit_rb_decay(&x, &y, w.as_deref(), None) {
            Ok(o) => (Some(DecayFit::new(o)), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self { raw, summary, fit, fit_error }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RbResult {
    pub reference: DecayData,
    pub interleaved: Option<DecayData>,
    pub interleaved_gate: Option<PhysicalGate>,
    pub f_clifford: Option<f64>,
    pub f_clifford_stderr: Option<f64>,
    pub f_gate: Option<f64>,
    pub f_gate_stderr: Option<f64>,
}

/// `(1 + p) / 2`.
pub fn clifford_fidelity(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", "must lie in [0, 1]"));
    }
    Ok((1.0 + p) / 2.0)
}

/// Gate fidelity from reference and interleaved decay constants with
/// first-order error propagation.
pub fn interleaved_fidelity(p_ref: f64, sigma_ref: f64, p_int: f64, sigma_int: f64) -> Result<(f64, f64)> {
    if !(p_ref > 0.0 && p_ref <= 1.0) {
        return Err(Error::param("p_ref", "must lie in (0, 1]"));
    }
    if !(p_int >= 0.0 && p_int <= p_ref * (1.0 + INTERLEAVE_SLACK)) {
        return Err(Error::param("p_int", "must lie in [0, p_ref]"));
    }
    let f = 1.0 - (1.0 - p_int / p_ref) / 2.0;
    let sigma = 0.5 * ((sigma_int / p_ref).powi(2) + (p_int * sigma_ref / (p_ref * p_ref)).powi(2)).sqrt();
    Ok((f, sigma))
}

/// Mean average gate fidelity of the 24 compiled Cliffords.
pub fn mean_clifford_fidelity(gates: &GateSet, table: &CliffordTable) -> Result<f64> {
    let total = table
        .elements()
        .iter()
        .map(|c| average_gate_fidelity(&gates.channel(&c.decomposition), &c.unitary))
        .sum::<Result<f64>>()?;
    Ok(total / 24.0)
}

/// Average gate fidelity of one native gate.
pub fn gate_fidelity(gates: &GateSet, gate: PhysicalGate) -> Result<f64> {
    average_gate_fidelity(&gates.channel(&[gate]), &gate.unitary())
}

fn survival(gates: &GateSet, sequence: &[PhysicalGate], confusion: &Confusion) -> f64 {
    let d = gates.dims();
    let state = gates.apply(sequence, vectorize(&ket_bra(d, 0, 0)));
    measure(&unvectorize(&state, d), confusion).p_g.clamp(0.0, 1.0)
}

fn sampled<R: rand::Rng>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Ok(p);
    }
    let counts = sample_shots_with(&[p, 1.0 - p], shots, rng)?;
    Ok(counts[0] as f64 / shots as f64)
}

/// Full RB pipeline on a calibrated device. Each `(length, sequence)` task
/// owns an RNG stream, so results do not depend on scheduling.
pub fn run_rb(device: &Device, config: &RbConfig) -> Result<RbResult> {
    config.validate()?;
    let gates = device.gate_set()?;
    let table = CliffordTable::new();
    let confusion = match (&device.noise, config.ideal_readout) {
        (Some(n), false) => n.confusion,
        _ => Confusion::ideal(),
    };
    let k = config.k;
    let tasks: Vec<(usize, usize)> = (0..config.lengths.len() * k).map(|t| (t, config.lengths[t / k])).collect();
    let values = tasks
        .par_iter()
        .map(|&(t, m)| {
            let mut rng = task_rng(config.seed, t as u64);
            let seq = random_sequence(&table, m, &mut rng)?;
            let reference = sampled(survival(&gates, &seq.gates, &confusion), config.shots, &mut rng)?;
            let inter = match config.interleave {
                Some(g) => {
                    let il = interleave(&table, &seq.cliffords, g);
                    Some(sampled(survival(&gates, &il.gates, &confusion), config.shots, &mut rng)?)
                }
                None => None,
            };
            Ok((reference, inter))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = DecayData::new(&config.lengths, k, values.iter().map(|v| v.0).collect());
    let interleaved = config
        .interleave
        .map(|_| DecayData::new(&config.lengths, k, values.iter().map(|v| v.1.unwrap_or(f64::NAN)).collect()));

    let mut out = RbResult {
        reference,
        interleaved,
        interleaved_gate: config.interleave,
        f_clifford: None,
        f_clifford_stderr: None,
        f_gate: None,
        f_gate_stderr: None,
    };
    if let Some(f) = &out.reference.fit {
        if let Ok(fc) = clifford_fidelity(f.p) {
            out.f_clifford = Some(fc);
            out.f_clifford_stderr = Some(f.p_stderr / 2.0);
        }
        if let Some(fi) = out.interleaved.as_ref().and_then(|d| d.fit.as_ref()) {
            match interleaved_fidelity(f.p, f.p_stderr, fi.p, fi.p_stderr) {
                Ok((fg, sg)) => {
                    out.f_gate = Some(fg);
                    out.f_gate_stderr = Some(sg);
                }
                Err(e) => {
                    if let Some(d) = out.interleaved.as_mut() {
                        d.fit_error = Some(e.to_string());
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NoiseModel;
    use crate::presets::{device_a_calibration, device_params};

    fn device(noise: Option<NoiseModel>) -> Device {
        let mut dev = Device::from_circuit(&device_params("device-a").unwrap(), 3, noise).unwrap();
        dev.cal = device_a_calibration();
        dev
    }

    #[test]
    fn fidelity_formulas() {
        assert_eq!(clifford_fidelity(1.0).unwrap(), 1.0);
        assert_eq!(clifford_fidelity(0.0).unwrap(), 0.5);
        assert!((clifford_fidelity(0.9936).unwrap() - 0.9968).abs() < 1e-12);
        assert!(clifford_fidelity(1.1).is_err());
        let (f, s) = interleaved_fidelity(0.99, 1e-4, 0.99, 1e-4).unwrap();
        assert_eq!(f, 1.0);
        assert!(s > 0.0);
        // 99.92 % gate fidelity means p_int / p_ref = 0.9984
        let (f, _) = interleaved_fidelity(0.9936, 0.0, 0.9936 * 0.9984, 0.0).unwrap();
        assert!((f - 0.9992).abs() < 1e-12);
        assert!(interleaved_fidelity(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(interleaved_fidelity(0.9, 0.0, 0.95, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RbConfig::default().validate().is_ok());
        let bad = RbConfig { k: 1, ..RbConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RbConfig { lengths: vec![1, 3, 3, 7], ..RbConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seeded_runs_repeat() {
        let dev = device(Some(NoiseModel::paper_ramsey()));
        let cfg = RbConfig { lengths: vec![1, 5, 20, 50], k: 4, shots: 200, seed: 3, ..RbConfig::default() };
        let a = run_rb(&dev, &cfg).unwrap();
        let b = run_rb(&dev, &cfg).unwrap();
        assert_eq!(a.reference.raw, b.reference.raw);
        assert_eq!(a.reference.raw.len(), 16);
    }

    #[test]
    fn noiseless_floor() {
        let dev = device(None);
        let cfg = RbConfig { shots: 0, ideal_readout: true, k: 10, ..RbConfig::default() };
        let r = run_rb(&dev, &cfg).unwrap();
        let fit = r.reference.fit.as_ref().expect("fit");
        assert!((1.0 - fit.p) < 1e-4, "p = {}", fit.p);
        assert!(r.f_clifford.unwrap() >= 0.99995);
    }

    #[test]
    fn rb_tracks_channel_oracle() {
        for noise in [NoiseModel::paper_ramsey(), NoiseModel { t1: 5.0, t_phi: 3.0, ..NoiseModel::noiseless() }] {
            let dev = device(Some(noise.with_confusion(Confusion::ideal())));
            let cfg = RbConfig { k: 30, shots: 0, seed: 11, ..RbConfig::default() };
            let r = run_rb(&dev, &cfg).unwrap();
            let oracle = mean_clifford_fidelity(&dev.gate_set().unwrap(), &CliffordTable::new()).unwrap();
            let (f, s) = (r.f_clifford.unwrap(), r.f_clifford_stderr.unwrap());
            assert!((f - oracle).abs() <= 3.0 * s, "{f} ± {s} vs {oracle}");
        }
    }
}
