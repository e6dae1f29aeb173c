//! Gate calibration: Rabi seeding, error-amplified amplitude refinement and
//! DRAG coefficient search.
//!
//! Every objective is evaluated on the simulated density matrix directly, so
//! calibration is deterministic and needs no seed.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::Device;
use crate::dynamics::{lindblad_superop, propagate_unitary};
use crate::error::{Error, Result};
use crate::linalg::{embed2, ket_bra, unitary_superop, unvectorize, vectorize, CMat, CVec, C64};
use crate::pulses::{amplitude_for_angle, DragShape, GateCalibration, GaussianShape, PhysicalGate, PulseProgram, PulseShape};

/// Spread below which an objective counts as flat.
const FLAT_TOL: f64 = 1e-9;

/// One grid scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Sequence repetitions used for this scan.
    pub reps: usize,
    pub grid: Vec<f64>,
    pub objective: Vec<f64>,
    /// Refined minimizer of this scan.
    pub optimum: f64,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub parameter: String,
    pub value: f64,
    /// Grid and objective of the last scan.
    pub grid: Vec<f64>,
    pub objective: Vec<f64>,
    /// Repetition counts of the scans, in order (recentred rescans included).
    pub history: Vec<usize>,
    pub stages: Vec<Stage>,
    /// The optimum sat on the edge of the last scan.
    pub boundary: bool,
    /// The objective did not vary over the last scan.
    pub flat: bool,
    pub warning: Option<String>,
}

impl CalibrationResult {
    fn from_stages(parameter: &str, stages: Vec<Stage>) -> Self {
        let last = stages.last().expect("at least one stage");
        let flat = is_flat(&last.objective);
        let warning = if flat {
            Some("objective is flat over the scan".to_string())
        } else if last.boundary {
            Some("optimum lies on the scan boundary".to_string())
        } else {
            None
        };
        Self {
            parameter: parameter.to_string(),
            value: last.optimum,
            grid: last.grid.clone(),
            objective: last.objective.clone(),
            history: stages.iter().map(|s| s.reps).collect(),
            boundary: last.boundary,
            flat,
            warning,
            stages,
        }
    }

    /// Grid spacing of the final scan.
    pub fn resolution(&self) -> f64 {
        match self.grid.as_slice() {
            [a, b, ..] => (b - a).abs(),
            _ => 0.0,
        }
    }
}

fn is_flat(objective: &[f64]) -> bool {
    let (lo, hi) = objective.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= FLAT_TOL
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("grid", "must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Grid minimum refined by the parabola through it and its neighbours.
fn refine_minimum(grid: &[f64], values: &[f64]) -> (f64, bool) {
    let k = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < values[best] { i } else { best });
    if k == 0 || k + 1 == grid.len() {
        return (grid[k], true);
    }
    let (x0, x1, x2) = (grid[k - 1], grid[k], grid[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den.abs() < f64::MIN_POSITIVE || !(num / den).is_finite() {
        return (x1, false);
    }
    let x = x1 - 0.5 * num / den;
    (x.clamp(x0, x2), false)
}

/// Superoperator of a single pulse on the device.
fn pulse_superop(device: &Device, shape: PulseShape, phase: f64) -> Result<CMat> {
    let mut prog = PulseProgram::new();
    prog.push(shape, phase, device.cal.carrier);
    match &device.noise {
        Some(n) => lindblad_superop(&device.system, n, &prog, device.dt),
        None => Ok(unitary_superop(&propagate_unitary(&device.system, &prog, device.dt)?)),
    }
}

/// `s^m · v` by repeated squaring.
fn apply_power(s: &CMat, m: usize, v: CVec) -> CVec {
    let (mut base, mut e, mut out) = (s.clone(), m, v);
    while e > 0 {
        if e & 1 == 1 {
            out = &base * out;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    out
}

fn ground(d: usize) -> CVec {
    vectorize(&ket_bra(d, 0, 0))
}

fn ideal_state(gate: PhysicalGate, reps: usize, d: usize) -> CMat {
    let u = gate.unitary();
    let mut total = Matrix2::<C64>::identity();
    for _ in 0..reps % 4 {
        total = u * total;
    }
    let ug = embed2(&total, d);
    &ug * ket_bra(d, 0, 0) * ug.adjoint()
}

fn state_infidelity(rho: &CMat, ideal: &CMat) -> f64 {
    1.0 - (rho * ideal).trace().re
}

fn template(shape: &GaussianShape, eta: f64, amplitude: f64) -> PulseShape {
    let base = GaussianShape { amplitude, ..*shape };
    if eta != 0.0 && amplitude != 0.0 {
        PulseShape::Drag(DragShape { base, eta })
    } else {
        PulseShape::Gaussian(base)
    }
}

/// One Gaussian pulse per amplitude; the amplitude maximizing reported
/// `P_e` seeds the π amplitude.
pub fn rabi_scan(device: &Device, shape: &GaussianShape, grid: &[f64]) -> Result<CalibrationResult> {
    check_grid(grid)?;
    shape.validate()?;
    let d = device.system.dims;
    let objective = grid
        .par_iter()
        .map(|&a| {
            let s = pulse_superop(device, PulseShape::Gaussian(GaussianShape { amplitude: a, ..*shape }), 0.0)?;
            let rho = unvectorize(&(s * ground(d)), d);
            Ok(1.0 - rho[(0, 0)].re)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = objective
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > objective[best] { i } else { best });
    let boundary = k == 0 || k + 1 == grid.len();
    let stage = Stage { reps: 1, grid: grid.to_vec(), objective, optimum: grid[k], boundary };
    Ok(CalibrationResult::from_stages("amp_pi", vec![stage]))
}

/// Deviation from the ideal state after `reps` back-to-back `gate` pulses at
/// peak amplitude `amplitude`, starting from `|g⟩`.
pub fn amplitude_objective(device: &Device, gate: PhysicalGate, amplitude: f64, reps: usize) -> Result<f64> {
    let d = device.system.dims;
    let shape = template(&device.cal.shape, device.cal.eta, amplitude);
    let s = pulse_superop(device, shape, gate.phase())?;
    let rho = unvectorize(&apply_power(&s, reps, ground(d)), d);
    Ok(state_infidelity(&rho, &ideal_state(gate, reps, d)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplifySettings {
    pub reps: Vec<usize>,
    /// Window half-width divisor between stages.
    pub shrink: f64,
    /// Initial half-width relative to the starting amplitude.
    pub half_width: f64,
    pub points: usize,
}

impl Default for AmplifySettings {
    fn default() -> Self {
        Self { reps: vec![1, 5, 21, 85, 321], shrink: 4.0, half_width: 0.2, points: 21 }
    }
}

impl AmplifySettings {
    pub fn validate(&self) -> Result<()> {
        if self.reps.is_empty() || self.reps.contains(&0) {
            return Err(Error::param("reps", "need at least one positive repetition count"));
        }
        if self.reps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("reps", "must be strictly increasing"));
        }
        if !(self.shrink >= 1.0 && self.shrink.is_finite()) {
            return Err(Error::param("shrink", "must be at least 1"));
        }
        if !(self.half_width > 0.0 && self.half_width < 1.0) {
            return Err(Error::param("half_width", "must lie in (0, 1)"));
        }
        if self.points < 5 {
            return Err(Error::param("points", "need at least 5 grid points"));
        }
        Ok(())
    }
}

/// Error-amplified amplitude refinement of `gate`.
///
/// Each stage scans a window around the previous optimum with `reps[k]`
/// repetitions. An optimum on the window edge recentres the scan at the same
/// repetition count; two edge hits in a row abort.
pub fn amplify_amplitude(
    device: &Device,
    gate: PhysicalGate,
    initial: f64,
    settings: &AmplifySettings,
) -> Result<CalibrationResult> {
    settings.validate()?;
    if gate == PhysicalGate::I {
        return Err(Error::param("gate", "the identity has no amplitude"));
    }
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(Error::param("initial", "must be positive"));
    }
    let mut center = initial;
    let mut half = settings.half_width * initial;
    let mut stages = Vec::new();
    for &m in &settings.reps {
        let mut edge_hits = 0;
        loop {
            let grid = linspace(center - half, center + half, settings.points);
            let objective = grid
                .par_iter()
                .map(|&a| amplitude_objective(device, gate, a, m))
                .collect::<Result<Vec<_>>>()?;
            let (optimum, boundary) = refine_minimum(&grid, &objective);
            stages.push(Stage { reps: m, grid, objective, optimum, boundary });
            center = optimum;
            if !boundary {
                break;
            }
            edge_hits += 1;
            if edge_hits == 2 {
                return Err(Error::Calibration(format!(
                    "{gate} amplitude optimum on the scan boundary twice at m = {m}"
                )));
            }
        }
        half /= settings.shrink;
    }
    Ok(CalibrationResult::from_stages(amp_name(gate), stages))
}

fn amp_name(gate: PhysicalGate) -> &'static str {
    match gate {
        PhysicalGate::X180 | PhysicalGate::Y180 => "amp_pi",
        _ => "amp_half",
    }
}

/// The physical gate undoing `gate` up to global phase.
fn inverse(gate: PhysicalGate) -> PhysicalGate {
    use PhysicalGate::*;
    match gate {
        X90 => Xm90,
        Xm90 => X90,
        Y90 => Ym90,
        Ym90 => Y90,
        g => g,
    }
}

/// Population missing from `|g⟩` after `reps` pairs of `(gate, gate⁻¹)`
/// with DRAG coefficient `eta`.
pub fn drag_objective(device: &Device, gate: PhysicalGate, eta: f64, reps: usize) -> Result<f64> {
    let d = device.system.dims;
    let amp = |g: PhysicalGate| match g {
        PhysicalGate::I => 0.0,
        PhysicalGate::X180 | PhysicalGate::Y180 => device.cal.amp_pi,
        _ => device.cal.amp_half,
    };
    let inv = inverse(gate);
    let a = pulse_superop(device, template(&device.cal.shape, eta, amp(gate)), gate.phase())?;
    let pair = if inv == gate {
        &a * &a
    } else {
        pulse_superop(device, template(&device.cal.shape, eta, amp(inv)), inv.phase())? * a
    };
    let rho = unvectorize(&apply_power(&pair, reps, ground(d)), d);
    Ok(1.0 - rho[(0, 0)].re)
}

/// Scan `eta_grid` and refine the minimum with a parabola.
pub fn calibrate_drag(device: &Device, gate: PhysicalGate, eta_grid: &[f64], reps: usize) -> Result<CalibrationResult> {
    check_grid(eta_grid)?;
    if gate == PhysicalGate::I {
        return Err(Error::param("gate", "the identity carries no drive"));
    }
    if reps == 0 {
        return Err(Error::param("reps", "must be positive"));
    }
    if !(eta_grid[0] < 0.0 && *eta_grid.last().unwrap() > 0.0) {
        return Err(Error::param("eta_grid", "must span both signs"));
    }
    let objective = eta_grid
        .par_iter()
        .map(|&eta| drag_objective(device, gate, eta, reps))
        .collect::<Result<Vec<_>>>()?;
    let (mut optimum, boundary) = refine_minimum(eta_grid, &objective);
    if is_flat(&objective) {
        optimum = 0.0;
    }
    let stage = Stage { reps, grid: eta_grid.to_vec(), objective, optimum, boundary };
    let mut out = CalibrationResult::from_stages("eta", vec![stage]);
    if device.system.dims < 3 && out.warning.is_none() {
        out.warning = Some("no leakage level: the quadrature only adds error, so η = 0 is optimal".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    /// Rabi grid as multiples of the pulse-area π amplitude.
    pub rabi_max: f64,
    pub rabi_points: usize,
    pub amplify: AmplifySettings,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    /// `(X/2, −X/2)` pairs per DRAG objective evaluation.
    pub drag_reps: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            rabi_max: 2.0,
            rabi_points: 101,
            amplify: AmplifySettings::default(),
            eta_min: -0.5,
            eta_max: 0.5,
            eta_points: 101,
            drag_reps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionEstimates {
    /// Final amplitude grid spacing relative to the amplitude.
    pub amp_half_rel: f64,
    pub amp_pi_rel: f64,
    /// Final η grid spacing, ns.
    pub eta_ns: f64,
}

/// Output of the full pipeline; `calibration` is what later runs consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub gate: String,
    /// Calibrated X/2 peak amplitude, rad/ns.
    pub amplitude: f64,
    pub eta_ns: f64,
    pub calibration: GateCalibration,
    pub stages: Vec<CalibrationResult>,
    pub precision_estimates: PrecisionEstimates,
}

/// Rabi seed → X/2 and X amplitudes → two rounds of DRAG on `(X/2, −X/2)`
/// pairs followed by amplitude refinement at the new η.
pub fn calibrate(device: &Device, settings: &CalibrationSettings) -> Result<CalibrationRecord> {
    settings.amplify.validate()?;
    if settings.rabi_points < 3 || settings.eta_points < 3 {
        return Err(Error::param("points", "need at least 3 grid points"));
    }
    let shape = device.cal.shape;
    let area_pi = amplitude_for_angle(std::f64::consts::PI, &PulseShape::Gaussian(shape))?;
    let rabi_grid = linspace(0.0, settings.rabi_max * area_pi, settings.rabi_points);
    let rabi = rabi_scan(device, &shape, &rabi_grid)?;
    if rabi.flat || rabi.boundary {
        return Err(Error::Calibration("Rabi scan found no interior maximum".into()));
    }

    let mut dev = device.clone();
    dev.cal.eta = 0.0;
    let half0 = amplify_amplitude(&dev, PhysicalGate::X90, rabi.value / 2.0, &settings.amplify)?;
    let pi0 = amplify_amplitude(&dev, PhysicalGate::X180, rabi.value, &settings.amplify)?;
    dev.cal.amp_half = half0.value;
    dev.cal.amp_pi = pi0.value;

    // Pairs of opposite rotations cancel amplitude errors, so the η scan
    // barely depends on the amplitudes; two rounds settle both.
    let eta_grid = linspace(settings.eta_min, settings.eta_max, settings.eta_points);
    let mut fine = settings.amplify.clone();
    let skip = fine.reps.len().saturating_sub(2);
    fine.half_width = settings.amplify.half_width / settings.amplify.shrink.powi(skip as i32);
    fine.reps.drain(..skip);
    let mut stages = vec![rabi, half0, pi0];
    let (mut drag, mut half, mut pi) = (None, None, None);
    for _ in 0..2 {
        let d = calibrate_drag(&dev, PhysicalGate::X90, &eta_grid, settings.drag_reps)?;
        if d.boundary && !d.flat {
            return Err(Error::Calibration("DRAG optimum on the scan boundary".into()));
        }
        dev.cal.eta = d.value;
        let h = amplify_amplitude(&dev, PhysicalGate::X90, dev.cal.amp_half, &fine)?;
        let p = amplify_amplitude(&dev, PhysicalGate::X180, dev.cal.amp_pi, &fine)?;
        dev.cal.amp_half = h.value;
        dev.cal.amp_pi = p.value;
        stages.extend([d.clone(), h.clone(), p.clone()]);
        (drag, half, pi) = (Some(d), Some(h), Some(p));
    }
    let (drag, half, pi) = (drag.unwrap(), half.unwrap(), pi.unwrap());

    let precision_estimates = PrecisionEstimates {
        amp_half_rel: half.resolution() / half.value,
        amp_pi_rel: pi.resolution() / pi.value,
        eta_ns: drag.resolution(),
    };
    Ok(CalibrationRecord {
        gate: PhysicalGate::X90.name().to_string(),
        amplitude: dev.cal.amp_half,
        eta_ns: dev.cal.eta,
        calibration: dev.cal,
        stages,
        precision_estimates,
    })
}
