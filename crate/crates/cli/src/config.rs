use std::path::Path;

use serde::Deserialize;

use csfq::calibrate::CalibrationSettings;
use csfq::circuit::{BasisConfig, CircuitParams};
use csfq::device::Device;
use csfq::dynamics::{NoiseModel, DEFAULT_DT};
use csfq::presets::{device_a_calibration, device_params, noise_preset};
use csfq::pulses::{GateCalibration, GaussianShape};
use csfq::rb::RbConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Device preset name; mutually exclusive with `circuit`.
    pub device: Option<String>,
    pub circuit: Option<CircuitParams>,
    pub levels: usize,
    /// Noise preset name, or `custom` together with `custom_noise`.
    pub noise: String,
    pub custom_noise: Option<NoiseModel>,
    pub pulse: GaussianShape,
    pub dt: f64,
    pub seed: Option<u64>,
    pub sweep: SweepBlock,
    pub coherence: CoherenceBlock,
    pub calibration: CalibrationSettings,
    pub rb: RbBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            device: None,
            circuit: None,
            levels: 3,
            noise: "paper-ramsey".into(),
            custom_noise: None,
            pulse: GaussianShape::default(),
            dt: DEFAULT_DT,
            seed: None,
            sweep: SweepBlock::default(),
            coherence: CoherenceBlock::default(),
            calibration: CalibrationSettings::default(),
            rb: RbBlock::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub flux_min: f64,
    pub flux_max: f64,
    pub points: usize,
    /// Explicit grid; overrides the range.
    pub fluxes: Option<Vec<f64>>,
    pub n_max: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { flux_min: 0.46, flux_max: 0.54, points: 81, fluxes: None, n_max: 15 }
    }
}

impl SweepBlock {
    pub fn grid(&self) -> Vec<f64> {
        if let Some(f) = &self.fluxes {
            return f.clone();
        }
        if self.points == 1 {
            return vec![self.flux_min];
        }
        let n = self.points - 1;
        (0..=n).map(|k| self.flux_min + (self.flux_max - self.flux_min) * k as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceBlock {
    /// Explicit delays, ns; overrides `points`/`max_delay_ns`.
    pub delays_ns: Option<Vec<f64>>,
    pub points: Option<usize>,
    pub max_delay_ns: Option<f64>,
    pub detuning_mhz: f64,
    /// 0 records exact probabilities.
    pub shots: u64,
}

impl Default for CoherenceBlock {
    fn default() -> Self {
        Self { delays_ns: None, points: None, max_delay_ns: None, detuning_mhz: 0.5, shots: 0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbBlock {
    pub lengths: Vec<usize>,
    pub k: usize,
    pub shots: u64,
}

impl Default for RbBlock {
    fn default() -> Self {
        let d = RbConfig::default();
        Self { lengths: d.lengths, k: d.k, shots: d.shots }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: Self = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(config_err)?
            }
            None => Self::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.device.is_some() && self.circuit.is_some() {
            return Err(CliError::Config("give either `device` or `circuit`, not both".into()));
        }
        self.circuit_params()?.validate().map_err(config_err)?;
        self.noise_model()?.validate().map_err(config_err)?;
        self.pulse.validate().map_err(config_err)?;
        if self.levels < 2 {
            return Err(CliError::Config("`levels` must be at least 2".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config("`dt` must be positive".into()));
        }
        if self.sweep.points == 0 || self.sweep.fluxes.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(CliError::Config("`sweep` grid is empty".into()));
        }
        BasisConfig::new(self.sweep.n_max).validate().map_err(config_err)?;
        self.calibration.amplify.validate().map_err(config_err)?;
        Ok(())
    }

    pub fn circuit_params(&self) -> Result<CircuitParams, CliError> {
        match (&self.device, &self.circuit) {
            (_, Some(c)) => Ok(*c),
            (Some(name), None) => device_params(name).map_err(config_err),
            (None, None) => device_params("device-a").map_err(config_err),
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        match (self.noise.as_str(), &self.custom_noise) {
            ("custom", Some(n)) => Ok(*n),
            ("custom", None) => Err(CliError::Config("noise `custom` needs a `custom_noise` block".into())),
            (_, Some(_)) => Err(CliError::Config("`custom_noise` requires noise = \"custom\"".into())),
            (name, None) => noise_preset(name).map_err(config_err),
        }
    }

    /// True when the shipped calibration applies to this configuration.
    fn uses_preset_calibration(&self) -> bool {
        matches!(self.device.as_deref(), Some("device-a") | None)
            && self.circuit.is_none()
            && self.levels == 3
            && self.pulse == GaussianShape::default()
            && self.dt == DEFAULT_DT
    }

    /// Closed-system device with area-rule gates.
    pub fn bare_device(&self) -> Result<Device, CliError> {
        let params = self.circuit_params()?;
        let system = csfq::dynamics::SystemModel::from_circuit(&params, &BasisConfig::default(), self.levels)?;
        let cal = GateCalibration::from_area(self.pulse, system.w_ge)?;
        Ok(Device { system, noise: None, cal, dt: self.dt })
    }

    /// Calibration to use when no `--cal-file` is given: the shipped
    /// baseline where it applies, otherwise a fresh closed-system run.
    pub fn default_calibration(&self) -> Result<GateCalibration, CliError> {
        if self.uses_preset_calibration() {
            return Ok(device_a_calibration());
        }
        let dev = self.bare_device()?;
        Ok(csfq::calibrate::calibrate(&dev, &self.calibration)?.calibration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse(r#"{"devise": "device-a"}"#).unwrap_err();
        assert!(err.to_string().contains("devise"), "{err}");
        let err = parse(r#"{"rb": {"kk": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("kk"));
    }

    #[test]
    fn device_sources_are_exclusive() {
        let both = r#"{"device": "device-a", "circuit": {"ej_ghz": 30, "ec_ghz": 8, "alpha": 0.43, "beta": 15, "flux": 0.5}}"#;
        assert!(parse(both).is_err());
        assert!(parse(r#"{"device": "device-z"}"#).is_err());
        assert!(parse(r#"{"device": "device-b"}"#).is_ok());
    }

    #[test]
    fn custom_noise_contract() {
        assert!(parse(r#"{"noise": "custom"}"#).is_err());
        let ok = r#"{"noise": "custom", "custom_noise": {"t1": 10, "t_phi": 5}}"#;
        assert_eq!(parse(ok).unwrap().noise_model().unwrap().t1, 10.0);
        assert!(parse(r#"{"custom_noise": {"t1": 10, "t_phi": 5}}"#).is_err());
    }

    #[test]
    fn sweep_grid() {
        let cfg = parse(r#"{"sweep": {"flux_min": 0.5, "points": 1}}"#).unwrap();
        assert_eq!(cfg.sweep.grid(), vec![0.5]);
        assert_eq!(RunConfig::default().sweep.grid().len(), 81);
    }
}
