//! Drive envelopes and gate schedules.
//!
//! Envelopes are Rabi rates in rad/ns. A truncated Gaussian has its value at
//! the segment edges subtracted so that every pulse starts and ends at zero.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, xy_rotation, C64};
use nalgebra::Matrix2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianShape {
    /// ns
    pub total_length: f64,
    /// ns
    pub fwhm: f64,
    /// Peak Rabi rate before baseline subtraction, rad/ns.
    pub amplitude: f64,
}

impl Default for GaussianShape {
    fn default() -> Self {
        Self { total_length: 20.0, fwhm: 10.0, amplitude: 0.0 }
    }
}

impl GaussianShape {
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    pub fn center(&self) -> f64 {
        self.total_length / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_length > 0.0 && self.total_length.is_finite()) {
            return Err(Error::param("total_length", "must be positive and finite"));
        }
        if !(self.fwhm > 0.0 && self.fwhm <= self.total_length) {
            return Err(Error::param("fwhm", "must lie in (0, total_length]"));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        Ok(())
    }

    fn value(&self, t: f64) -> f64 {
        let s2 = 2.0 * self.sigma().powi(2);
        let tc = self.center();
        self.amplitude * ((-(t - tc).powi(2) / s2).exp() - (-(tc * tc) / s2).exp())
    }

    fn derivative(&self, t: f64) -> f64 {
        let s = self.sigma();
        let tc = self.center();
        -self.amplitude * (t - tc) / (s * s) * (-(t - tc).powi(2) / (2.0 * s * s)).exp()
    }
}

/// Gaussian with a derivative quadrature scaled by `eta` (ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragShape {
    pub base: GaussianShape,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    Gaussian(GaussianShape),
    Drag(DragShape),
    /// Constant envelope; used for analytic Rabi checks.
    Square { length: f64, amplitude: f64 },
}

impl From<GaussianShape> for PulseShape {
    fn from(g: GaussianShape) -> Self {
        PulseShape::Gaussian(g)
    }
}

impl From<DragShape> for PulseShape {
    fn from(d: DragShape) -> Self {
        PulseShape::Drag(d)
    }
}

impl PulseShape {
    pub fn length(&self) -> f64 {
        match self {
            PulseShape::Gaussian(g) => g.total_length,
            PulseShape::Drag(d) => d.base.total_length,
            PulseShape::Square { length, .. } => *length,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            PulseShape::Gaussian(g) => g.amplitude,
            PulseShape::Drag(d) => d.base.amplitude,
            PulseShape::Square { amplitude, .. } => *amplitude,
        }
    }

    pub fn eta(&self) -> f64 {
        match self {
            PulseShape::Drag(d) => d.eta,
            _ => 0.0,
        }
    }

    pub fn with_amplitude(self, a: f64) -> Self {
        match self {
            PulseShape::Gaussian(g) => PulseShape::Gaussian(GaussianShape { amplitude: a, ..g }),
            PulseShape::Drag(d) => PulseShape::Drag(DragShape { base: GaussianShape { amplitude: a, ..d.base }, ..d }),
            PulseShape::Square { length, .. } => PulseShape::Square { length, amplitude: a },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseShape::Gaussian(g) => g.validate(),
            PulseShape::Drag(d) => {
                if !d.eta.is_finite() {
                    return Err(Error::param("eta", "must be finite"));
                }
                d.base.validate()
            }
            PulseShape::Square { length, amplitude } => {
                if !(*length > 0.0 && length.is_finite() && amplitude.is_finite()) {
                    return Err(Error::param("square", "length must be positive, amplitude finite"));
                }
                Ok(())
            }
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.length()).contains(&t) {
            return Err(Error::TimeOutOfRange { t, end: self.length() });
        }
        Ok(())
    }

    /// In-phase envelope at local time `t`, rad/ns.
    pub fn envelope_i(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.i_at(t))
    }

    /// Quadrature envelope at local time `t`, rad/ns.
    pub fn envelope_q(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.q_at(t))
    }

    // Unchecked variants for the integrators, which only sample inside.
    pub(crate) fn i_at(&self, t: f64) -> f64 {
        match self {
            PulseShape::Gaussian(g) => g.value(t),
            PulseShape::Drag(d) => d.base.value(t),
            PulseShape::Square { amplitude, .. } => *amplitude,
        }
    }

    pub(crate) fn q_at(&self, t: f64) -> f64 {
        match self {
            PulseShape::Drag(d) if d.eta != 0.0 => d.eta * d.base.derivative(t),
            _ => 0.0,
        }
    }
}

/// DRAG quadrature `η·dΩ_I/dt` of a DRAG shape.
pub fn envelope_q(shape: &DragShape, t: f64) -> Result<f64> {
    PulseShape::Drag(*shape).envelope_q(t)
}

/// In-phase envelope of any shape.
pub fn envelope_i(shape: &PulseShape, t: f64) -> Result<f64> {
    shape.envelope_i(t)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // Split first so a symmetric integrand cannot fool the initial estimate.
    let n = 8;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = simpson(x0, x1, f0, fm, f1);
            adaptive(&f, x0, x1, f0, fm, f1, whole, tol / n as f64, 40)
        })
        .sum()
}

/// Rotation angle `∫ Ω_I dt` of one pulse, rad.
pub fn pulse_area(shape: &PulseShape) -> f64 {
    let len = shape.length();
    let scale = shape.amplitude().abs().max(f64::MIN_POSITIVE) * len;
    let area = integrate(|t| shape.i_at(t), 0.0, len, 1e-13 * scale);
    debug_assert!({
        let q = integrate(|t| shape.q_at(t), 0.0, len, 1e-13 * scale);
        q.abs() <= 1e-10 * scale.max(shape.eta().abs() * scale)
    });
    area
}

/// Amplitude that makes `template` rotate by `theta`.
pub fn amplitude_for_angle(theta: f64, template: &PulseShape) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::param("theta", "must be non-negative and finite"));
    }
    template.validate()?;
    let unit = pulse_area(&template.with_amplitude(1.0));
    if unit.abs() < 1e-300 {
        return Err(Error::param("shape", "unit-amplitude area is zero"));
    }
    Ok(theta / unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub shape: PulseShape,
    /// Drive phase, rad.
    pub phase: f64,
    /// Drive frequency, GHz.
    pub carrier: f64,
    /// ns
    pub start: f64,
}

impl PulseSegment {
    pub fn end(&self) -> f64 {
        self.start + self.shape.length()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseProgram {
    pub segments: Vec<PulseSegment>,
    /// ns
    pub duration: f64,
}

/// One row of the `--dump-pulses` output.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentRecord {
    pub start_ns: f64,
    pub length_ns: f64,
    pub phase_rad: f64,
    pub carrier_ghz: f64,
    pub amplitude: f64,
    pub eta_ns: f64,
}

impl PulseProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a segment right after the current end.
    pub fn push(&mut self, shape: PulseShape, phase: f64, carrier: f64) {
        let start = self.duration;
        self.segments.push(PulseSegment { shape, phase, carrier, start });
        self.duration = start + shape.length();
    }

    /// Extend the program with an undriven gap.
    pub fn idle(&mut self, duration: f64) {
        self.duration += duration.max(0.0);
    }

    pub fn validate(&self) -> Result<()> {
        let mut end = 0.0;
        for (k, s) in self.segments.iter().enumerate() {
            s.shape.validate()?;
            if !(s.start >= end - 1e-12) {
                return Err(Error::param("segments", format!("segment {k} overlaps its predecessor")));
            }
            if !s.phase.is_finite() || !s.carrier.is_finite() {
                return Err(Error::param("segments", format!("segment {k} has a non-finite phase or carrier")));
            }
            end = s.end();
        }
        if self.duration < end - 1e-12 {
            return Err(Error::param("duration", "shorter than the last segment"));
        }
        Ok(())
    }

    /// The segment driving at time `t`, if any.
    pub fn segment_at(&self, t: f64) -> Option<&PulseSegment> {
        let k = self.segments.partition_point(|s| s.end() < t);
        self.segments.get(k).filter(|s| s.start <= t && t <= s.end())
    }

    pub fn records(&self) -> Vec<SegmentRecord> {
        self.segments
            .iter()
            .map(|s| SegmentRecord {
                start_ns: s.start,
                length_ns: s.shape.length(),
                phase_rad: s.phase,
                carrier_ghz: s.carrier,
                amplitude: s.shape.amplitude(),
                eta_ns: s.shape.eta(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// A rotation request for [`schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub axis: Axis,
    /// One of 0, ±π/2, ±π.
    pub angle: f64,
    /// ns
    pub eta: f64,
}

fn classify_angle(angle: f64) -> Result<(f64, bool)> {
    for base in [0.0, FRAC_PI_2, PI] {
        if (angle.abs() - base).abs() <= 1e-12 {
            return Ok((base, angle < 0.0 && base > 0.0));
        }
    }
    Err(Error::UnsupportedAngle(angle))
}

fn with_eta(template: &PulseShape, eta: f64) -> PulseShape {
    match *template {
        PulseShape::Gaussian(g) | PulseShape::Drag(DragShape { base: g, .. }) if eta != 0.0 => {
            PulseShape::Drag(DragShape { base: g, eta })
        }
        PulseShape::Drag(d) => PulseShape::Gaussian(d.base),
        other => other,
    }
}

/// Lay out gates back to back using the pulse-area rule for amplitudes.
pub fn schedule(gates: &[GateSpec], carrier: f64, template: &PulseShape) -> Result<PulseProgram> {
    let mut prog = PulseProgram::new();
    for g in gates {
        let (mag, negative) = classify_angle(g.angle)?;
        let amp = if mag == 0.0 { 0.0 } else { amplitude_for_angle(mag, template)? };
        let shape = with_eta(template, if mag == 0.0 { 0.0 } else { g.eta }).with_amplitude(amp);
        let mut phase = match g.axis {
            Axis::X => 0.0,
            Axis::Y => FRAC_PI_2,
        };
        if negative {
            phase += PI;
        }
        prog.push(shape, phase, carrier);
    }
    Ok(prog)
}

/// Native gate set used by calibration and benchmarking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhysicalGate {
    I,
    X90,
    Xm90,
    Y90,
    Ym90,
    X180,
    Y180,
}

impl PhysicalGate {
    pub const ALL: [PhysicalGate; 7] = [
        PhysicalGate::I,
        PhysicalGate::X90,
        PhysicalGate::Xm90,
        PhysicalGate::Y90,
        PhysicalGate::Ym90,
        PhysicalGate::X180,
        PhysicalGate::Y180,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> Axis {
        match self {
            PhysicalGate::Y90 | PhysicalGate::Ym90 | PhysicalGate::Y180 => Axis::Y,
            _ => Axis::X,
        }
    }

    /// Signed rotation angle, rad.
    pub fn angle(self) -> f64 {
        match self {
            PhysicalGate::I => 0.0,
            PhysicalGate::X90 | PhysicalGate::Y90 => FRAC_PI_2,
            PhysicalGate::Xm90 | PhysicalGate::Ym90 => -FRAC_PI_2,
            PhysicalGate::X180 | PhysicalGate::Y180 => PI,
        }
    }

    /// Drive phase of the gate's pulse.
    pub fn phase(self) -> f64 {
        let axis = match self.axis() {
            Axis::X => 0.0,
            Axis::Y => FRAC_PI_2,
        };
        if self.angle() < 0.0 {
            axis + PI
        } else {
            axis
        }
    }

    pub fn spec(self, eta: f64) -> GateSpec {
        GateSpec { axis: self.axis(), angle: self.angle(), eta }
    }

    /// Ideal qubit unitary.
    pub fn unitary(self) -> Matrix2<C64> {
        match self {
            PhysicalGate::I => Matrix2::identity(),
            _ => {
                let phi = match self.axis() {
                    Axis::X => 0.0,
                    Axis::Y => FRAC_PI_2,
                };
                xy_rotation(self.angle(), phi)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhysicalGate::I => "I",
            PhysicalGate::X90 => "X/2",
            PhysicalGate::Xm90 => "-X/2",
            PhysicalGate::Y90 => "Y/2",
            PhysicalGate::Ym90 => "-Y/2",
            PhysicalGate::X180 => "X",
            PhysicalGate::Y180 => "Y",
        }
    }
}

impl fmt::Display for PhysicalGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhysicalGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let g = match s.to_ascii_lowercase().as_str() {
            "i" | "id" | "identity" => PhysicalGate::I,
            "x/2" | "xhalf" | "x90" => PhysicalGate::X90,
            "-x/2" | "mxhalf" | "xmhalf" | "-xhalf" | "xm90" | "x-90" => PhysicalGate::Xm90,
            "y/2" | "yhalf" | "y90" => PhysicalGate::Y90,
            "-y/2" | "myhalf" | "ymhalf" | "-yhalf" | "ym90" | "y-90" => PhysicalGate::Ym90,
            "x" | "x180" | "xpi" => PhysicalGate::X180,
            "y" | "y180" | "ypi" => PhysicalGate::Y180,
            _ => return Err(Error::Unknown(s.to_string())),
        };
        Ok(g)
    }
}

/// Calibrated drive parameters for the native gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateCalibration {
    /// Envelope template; its amplitude is ignored.
    pub shape: GaussianShape,
    /// GHz
    pub carrier: f64,
    /// Peak amplitude of the ±π/2 pulses, rad/ns.
    pub amp_half: f64,
    /// Peak amplitude of the π pulses, rad/ns.
    pub amp_pi: f64,
    /// ns
    pub eta: f64,
}

impl GateCalibration {
    /// Amplitudes from the pulse-area rule, no DRAG.
    pub fn from_area(shape: GaussianShape, carrier: f64) -> Result<Self> {
        let tpl = PulseShape::Gaussian(shape);
        Ok(Self {
            shape,
            carrier,
            amp_half: amplitude_for_angle(FRAC_PI_2, &tpl)?,
            amp_pi: amplitude_for_angle(PI, &tpl)?,
            eta: 0.0,
        })
    }

    pub fn pulse(&self, gate: PhysicalGate) -> PulseShape {
        let amp = match gate {
            PhysicalGate::I => 0.0,
            PhysicalGate::X180 | PhysicalGate::Y180 => self.amp_pi,
            _ => self.amp_half,
        };
        let base = GaussianShape { amplitude: amp, ..self.shape };
        if self.eta != 0.0 && amp != 0.0 {
            PulseShape::Drag(DragShape { base, eta: self.eta })
        } else {
            PulseShape::Gaussian(base)
        }
    }

    pub fn program(&self, gates: &[PhysicalGate]) -> PulseProgram {
        let mut prog = PulseProgram::new();
        for &g in gates {
            prog.push(self.pulse(g), g.phase(), self.carrier);
        }
        prog
    }
}

/// Complex drive `(Ω_I − iΩ_Q)·e^{−iφ}` of a segment at absolute time `t`.
pub(crate) fn complex_drive(seg: &PulseSegment, t: f64) -> C64 {
    let local = (t - seg.start).clamp(0.0, seg.shape.length());
    let (i, q) = (seg.shape.i_at(local), seg.shape.q_at(local));
    c(i, -q) * C64::from_polar(1.0, -seg.phase)
}
