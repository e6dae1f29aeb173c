//! Shipped device, noise and calibration presets.

use crate::calibrate::CalibrationRecord;
use crate::circuit::CircuitParams;
use crate::dynamics::NoiseModel;
use crate::error::{Error, Result};
use crate::pulses::GateCalibration;

pub const DEVICE_A: &str = include_str!("../presets/device-a.json");
pub const DEVICE_B: &str = include_str!("../presets/device-b.json");
/// Calibration pipeline output for the closed three-level device A.
pub const CAL_DEVICE_A: &str = include_str!("../presets/cal-device-a.json");

pub const DEVICE_NAMES: [&str; 2] = ["device-a", "device-b"];
pub const NOISE_NAMES: [&str; 4] = ["paper-ramsey", "paper-echo", "device-b", "noiseless"];

pub fn device_params(name: &str) -> Result<CircuitParams> {
    let text = match name {
        "device-a" => DEVICE_A,
        "device-b" => DEVICE_B,
        _ => return Err(Error::Unknown(format!("device preset `{name}`"))),
    };
    let params: CircuitParams = serde_json::from_str(text).expect("shipped preset parses");
    Ok(params)
}

pub fn noise_preset(name: &str) -> Result<NoiseModel> {
    match name {
        "paper-ramsey" => Ok(NoiseModel::paper_ramsey()),
        "paper-echo" => Ok(NoiseModel::paper_echo()),
        "device-b" => Ok(NoiseModel::device_b()),
        "noiseless" => Ok(NoiseModel::noiseless()),
        _ => Err(Error::Unknown(format!("noise preset `{name}`"))),
    }
}

/// Frozen gate calibration of device A.
pub fn device_a_calibration() -> GateCalibration {
    let rec: CalibrationRecord = serde_json::from_str(CAL_DEVICE_A).expect("shipped calibration parses");
    rec.calibration
}
