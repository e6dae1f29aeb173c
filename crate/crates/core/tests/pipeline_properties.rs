use csfq::calibrate::{calibrate, CalibrationSettings};
use csfq::device::Device;
use csfq::dynamics::NoiseModel;
use csfq::experiments::{default_delays, t1_experiment};
use csfq::presets::{device_a_calibration, device_params};
use csfq::pulses::PhysicalGate;
use csfq::rb::{run_rb, RbConfig};

fn device(dims: usize, noise: Option<NoiseModel>) -> Device {
    Device::from_circuit(&device_params("device-a").unwrap(), dims, noise).unwrap()
}

fn calibrated(noise: Option<NoiseModel>) -> Device {
    let mut dev = device(3, noise);
    dev.cal = device_a_calibration();
    dev
}

#[test]
fn calibration_reproduces_shipped_baseline() {
    let dev = device(3, None);
    let a = calibrate(&dev, &CalibrationSettings::default()).unwrap();
    assert_eq!(a.calibration, device_a_calibration());
    let b = calibrate(&dev, &CalibrationSettings::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn two_level_half_pi_returns_to_ground() {
    let mut dev = device(2, None);
    let rec = calibrate(&dev, &CalibrationSettings::default()).unwrap();
    dev.cal = rec.calibration;
    let gs = dev.gate_set().unwrap();
    let ch = gs.channel(&[PhysicalGate::X90; 4]);
    // four quarter turns make a 2π rotation: |g⟩ maps back to |g⟩
    let p_g = 0.5 * (1.0 + ch.ptm[(3, 3)]);
    assert!(1.0 - p_g <= 1e-8, "infidelity {}", 1.0 - p_g);
}

#[test]
fn coherence_shot_noise_is_unbiased() {
    let dev = calibrated(Some(NoiseModel::paper_ramsey()));
    let delays = default_delays(23_000.0, 30);
    let exact = t1_experiment(&dev, &delays, 0, 0, false).unwrap().time_us.unwrap();
    for shots in [1000u64, 16_000] {
        let runs: Vec<(f64, f64)> = (0..32)
            .map(|seed| {
                let r = t1_experiment(&dev, &delays, shots, seed, false).unwrap();
                (r.time_us.unwrap(), r.time_stderr_us.unwrap())
            })
            .collect();
        let mean = runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64;
        let sigma = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
        assert!((mean - exact).abs() < sigma, "shots {shots}: bias {} vs sigma {sigma}", mean - exact);
    }
}

#[test]
fn exact_probabilities_ignore_the_seed() {
    let dev = calibrated(Some(NoiseModel::paper_ramsey()));
    let delays = default_delays(23_000.0, 10);
    let a = t1_experiment(&dev, &delays, 0, 1, false).unwrap();
    let b = t1_experiment(&dev, &delays, 0, 2, false).unwrap();
    assert_eq!(a.curve, b.curve);
    let c = t1_experiment(&dev, &delays, 500, 9, false).unwrap();
    let d = t1_experiment(&dev, &delays, 500, 9, false).unwrap();
    assert_eq!(c.curve, d.curve);
}

fn preset_rb() -> csfq::rb::RbResult {
    let dev = calibrated(Some(NoiseModel::paper_ramsey()));
    run_rb(&dev, &RbConfig { seed: 3, ..RbConfig::default() }).unwrap()
}

#[test]
fn survival_decreases_with_length() {
    let r = preset_rb();
    for w in r.reference.summary.windows(2) {
        let tol = 2.0 * w[0].stderr.hypot(w[1].stderr);
        assert!(w[1].mean <= w[0].mean + tol, "m {} -> {}: {} -> {}", w[0].m, w[1].m, w[0].mean, w[1].mean);
    }
}

/// The reported standard error of F_Clifford at k = 50, 4000 shots should be
/// within a factor of 3 of a ±0.02 % target.
#[test]
fn clifford_fidelity_stderr_is_realistic() {
    let r = preset_rb();
    let s = r.f_clifford_stderr.unwrap();
    let target = 2e-4;
    assert!(s >= target / 3.0 && s <= target * 3.0, "stderr {s:.2e} vs target {target:.0e}");
}
