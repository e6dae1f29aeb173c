use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn csfq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csfq"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let p = dir.path().join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Tag-balance check; enough to catch truncated or mis-nested output.
fn assert_well_formed_svg(text: &str) {
    assert!(text.starts_with("<?xml"));
    assert!(!text.contains("href") && !text.contains("url("), "external reference");
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find('<') {
        let end = rest[i..].find('>').expect("unterminated tag") + i;
        let tag = &rest[i + 1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.ends_with('/') {
            continue;
        }
        let name = tag.split_whitespace().next().unwrap();
        if let Some(closing) = name.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(closing));
        } else {
            stack.push(name.to_string());
        }
    }
    assert!(stack.is_empty(), "unclosed {stack:?}");
}

#[test]
fn single_point_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"sweep": {"fluxes": [0.5]}}"#);
    let out = tmp.path().join("o");
    let o = csfq(&out, &["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "flux,w_ge_ghz,w_gf_ghz,anharm_ghz");
    assert_eq!(lines.len(), 2);
    let v: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((v[1] - 2.661).abs() < 1e-3 && (v[2] - 6.170).abs() < 2e-3);
    assert_well_formed_svg(&std::fs::read_to_string(out.join("sweep.svg")).unwrap());
}

#[test]
fn default_sweep_has_its_minimum_at_half_flux() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"sweep": {"n_max": 10}}"#);
    let o = csfq(tmp.path(), &["spectrum", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 81);
    let min = rows.iter().min_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!((min[0] - 0.5).abs() < 1e-12);
    // 12 significant digits at most
    for cell in csv.lines().skip(1).flat_map(|l| l.split(',')) {
        let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
        assert!(mantissa.trim_start_matches('0').len() <= 12, "{cell}");
    }
}

#[test]
fn malformed_key_exits_2_and_names_it() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"sweep": {"flux_mn": 0.4}}"#);
    let o = csfq(tmp.path(), &["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("flux_mn"));
}

#[test]
fn config_contract_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = csfq(tmp.path(), &["rb"]);
    assert_eq!(o.status.code(), Some(2), "missing seed");
    let o = csfq(tmp.path(), &["rb", "--seed", "1", "--interleave", "zz"]);
    assert_eq!(o.status.code(), Some(2), "unknown gate");
    let cfg = write_config(&tmp, r#"{"device": "device-a", "circuit": {"ej_ghz": 30, "ec_ghz": 8, "alpha": 0.43, "beta": 15, "flux": 0.5}}"#);
    let o = csfq(tmp.path(), &["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "two device sources");
    let cfg = write_config(&tmp, r#"{"coherence": {"shots": 100}}"#);
    let o = csfq(tmp.path(), &["coherence", "t1", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "sampled run without seed");
}

#[test]
fn failed_fit_exits_4_with_data_written() {
    let tmp = TempDir::new().unwrap();
    // no relaxation at all: the curve is flat
    let cfg = write_config(&tmp, r#"{"noise": "noiseless", "coherence": {"max_delay_ns": 1000}}"#);
    let o = csfq(tmp.path(), &["coherence", "t1", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(tmp.path().join("t1.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("t1.json")).unwrap()).unwrap();
    assert!(json["fit_error"].is_string());
}

#[test]
fn calibration_failure_exits_5() {
    let tmp = TempDir::new().unwrap();
    // the Rabi scan stops well short of a π rotation
    let cfg = write_config(&tmp, r#"{"calibration": {"rabi_max": 0.4}}"#);
    let o = csfq(tmp.path(), &["calibrate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn coherence_outputs() {
    let tmp = TempDir::new().unwrap();
    let o = csfq(tmp.path(), &["coherence", "ramsey"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(tmp.path().join("ramsey.csv")).unwrap();
    assert!(csv.starts_with("delay_ns,p_reported\n"));
    assert_eq!(csv.lines().count(), 102);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ramsey.json")).unwrap()).unwrap();
    assert!((json["time_ns"].as_f64().unwrap() / 6300.0 - 1.0).abs() < 0.02);
    let params: Vec<&str> = json["fit"].as_array().unwrap().iter().map(|b| b["param"].as_str().unwrap()).collect();
    assert_eq!(params, ["A", "T", "f", "phi", "C"]);
    assert_well_formed_svg(&std::fs::read_to_string(tmp.path().join("ramsey.svg")).unwrap());
}

#[test]
fn calibrate_two_level_matches_area_rule() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"levels": 2, "noise": "noiseless"}"#);
    let o = csfq(tmp.path(), &["calibrate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("calibration.json")).unwrap()).unwrap();
    // area rule for a π/2 Gaussian of 20 ns / 10 ns FWHM with baseline subtraction
    let area = csfq::pulses::amplitude_for_angle(
        std::f64::consts::FRAC_PI_2,
        &csfq::pulses::PulseShape::Gaussian(csfq::pulses::GaussianShape::default()),
    )
    .unwrap();
    let amp = rec["amplitude"].as_f64().unwrap();
    assert!((amp / area - 1.0).abs() < 1e-4, "{amp} vs {area}");
    assert_eq!(rec["eta_ns"].as_f64().unwrap(), 0.0);
    for key in ["gate", "stages", "precision_estimates"] {
        assert!(!rec[key].is_null(), "{key}");
    }
}

#[test]
fn cal_file_is_used_by_rb() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"seed": 4, "rb": {"lengths": [1, 4, 16, 64], "k": 4, "shots": 0}}"#);
    let cal_dir = tmp.path().join("cal");
    let o = csfq(&cal_dir, &["calibrate", "--config", &cfg, "--dump-pulses", "--dump-channel"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(cal_dir.join("pulses.json").exists() && cal_dir.join("channels.json").exists());
    let cal = cal_dir.join("calibration.json");

    // the shipped baseline is the same pipeline output, so the runs agree
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(csfq(&a, &["rb", "--config", &cfg]).status.success());
    assert!(csfq(&b, &["rb", "--config", &cfg, "--cal-file", cal.to_str().unwrap()]).status.success());
    let read = |d: &Path| std::fs::read(d.join("rb_raw.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    // a detuned record changes the result, so the file is really read
    let mut rec: serde_json::Value = serde_json::from_slice(&std::fs::read(&cal).unwrap()).unwrap();
    let amp = rec["calibration"]["amp_pi"].as_f64().unwrap();
    rec["calibration"]["amp_pi"] = serde_json::json!(amp * 1.05);
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_vec(&rec).unwrap()).unwrap();
    let c = tmp.path().join("c");
    assert!(csfq(&c, &["rb", "--config", &cfg, "--cal-file", bad.to_str().unwrap()]).status.success());
    assert_ne!(read(&a), read(&c));
}

#[test]
fn rb_outputs_and_reruns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, r#"{"rb": {"lengths": [1, 5, 20, 80, 200], "k": 6, "shots": 300}}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = csfq(d, &["rb", "--config", &cfg, "--seed", "9", "--interleave", "xhalf"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["rb_raw.csv", "rb_summary.csv", "rb_interleaved_raw.csv", "rb_interleaved_summary.csv", "rb.json", "rb.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let raw = std::fs::read_to_string(a.join("rb_raw.csv")).unwrap();
    assert!(raw.starts_with("m,seed,p_reported\n"));
    assert_eq!(raw.lines().count(), 1 + 5 * 6);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("rb.json")).unwrap()).unwrap();
    assert!(json["reference"]["f_clifford"].is_f64());
    assert!(json["interleaved"]["f_gate"].is_f64() && json["interleaved"]["f_stderr"].is_f64());
    assert_well_formed_svg(&std::fs::read_to_string(a.join("rb.svg")).unwrap());
}
