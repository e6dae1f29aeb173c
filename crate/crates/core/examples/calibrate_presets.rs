//! Regenerate `presets/cal-device-a.json`:
//! `cargo run --release -p csfq --example calibrate_presets`

use csfq::calibrate::{calibrate, CalibrationSettings};
use csfq::device::Device;
use csfq::presets::device_params;

fn main() -> csfq::Result<()> {
    let dev = Device::from_circuit(&device_params("device-a")?, 3, None)?;
    let rec = calibrate(&dev, &CalibrationSettings::default())?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/presets/cal-device-a.json");
    std::fs::write(path, serde_json::to_string_pretty(&rec).expect("serializable") + "\n").expect("writable");
    eprintln!("amp_half {} amp_pi {} eta {}", rec.calibration.amp_half, rec.calibration.amp_pi, rec.eta_ns);
    Ok(())
}
