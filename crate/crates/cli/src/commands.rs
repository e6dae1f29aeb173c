use std::path::PathBuf;

use serde::Serialize;

use csfq::calibrate::{calibrate, CalibrationRecord};
use csfq::circuit::{flux_sweep, BasisConfig};
use csfq::device::Device;
use csfq::dynamics::average_gate_fidelity;
use csfq::experiments::{default_delays, echo_experiment, ramsey_experiment, t1_experiment, CoherenceKind, CoherenceResult};
use csfq::fit::{CurveModel, DampedCosine, Exponential, FitModel};
use csfq::pulses::{GateCalibration, PhysicalGate, SegmentRecord};
use csfq::rb::{gate_fidelity, mean_clifford_fidelity, run_rb, CliffordTable, DecayData, RbConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{f12, OutDir};
use crate::svg::{Plot, Series, Style};

/// Flags shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub ideal_readout: bool,
    pub cal_file: Option<PathBuf>,
    pub dump_pulses: bool,
    pub dump_channel: bool,
}

impl Globals {
    fn seed(&self, cfg: &RunConfig, why: &str) -> Result<u64, CliError> {
        self.seed
            .or(cfg.seed)
            .ok_or_else(|| CliError::Config(format!("{why} needs a seed (`--seed` or config `seed`)")))
    }
}

fn load_calibration(cfg: &RunConfig, g: &Globals) -> Result<GateCalibration, CliError> {
    match &g.cal_file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let rec: CalibrationRecord = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("calibration file {}: {e}", p.display())))?;
            Ok(rec.calibration)
        }
        None => cfg.default_calibration(),
    }
}

/// Noisy device with the configured calibration.
fn noisy_device(cfg: &RunConfig, g: &Globals) -> Result<Device, CliError> {
    let mut dev = cfg.bare_device()?;
    dev.noise = Some(cfg.noise_model()?);
    dev.cal = load_calibration(cfg, g)?;
    Ok(dev)
}

#[derive(Serialize)]
struct PulseDump {
    gate: &'static str,
    segments: Vec<SegmentRecord>,
}

#[derive(Serialize)]
struct ChannelDump {
    gate: &'static str,
    ptm: [[f64; 4]; 4],
    leakage: f64,
    average_fidelity: f64,
}

fn dumps(dev: &Device, g: &Globals, out: &OutDir) -> Result<(), CliError> {
    if g.dump_pulses {
        let d: Vec<PulseDump> = PhysicalGate::ALL
            .iter()
            .map(|&gate| PulseDump { gate: gate.name(), segments: dev.cal.program(&[gate]).records() })
            .collect();
        out.write_json("pulses.json", &d)?;
    }
    if g.dump_channel {
        let gs = dev.gate_set()?;
        let d = PhysicalGate::ALL
            .iter()
            .map(|&gate| {
                let ch = gs.channel(&[gate]);
                Ok(ChannelDump {
                    gate: gate.name(),
                    ptm: ch.ptm_rows(),
                    leakage: ch.leakage,
                    average_fidelity: average_gate_fidelity(&ch, &gate.unitary())?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        out.write_json("channels.json", &d)?;
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    let params = cfg.circuit_params()?;
    let grid = cfg.sweep.grid();
    let rows = flux_sweep(&params, &grid, &BasisConfig::new(cfg.sweep.n_max), 3)?;
    let out = OutDir::create(&g.out)?;
    let cells: Vec<Vec<String>> =
        rows.iter().map(|r| vec![f12(r.flux), f12(r.w_ge), f12(r.w_gf), f12(r.anharmonicity)]).collect();
    out.write_csv("sweep.csv", &["flux", "w_ge_ghz", "w_gf_ghz", "anharm_ghz"], &cells)?;
    let style = if rows.len() == 1 { Style::Markers } else { Style::Line };
    let plot = Plot {
        title: "Transition frequencies".into(),
        x_label: "reduced flux".into(),
        y_label: "frequency (GHz)".into(),
        series: vec![
            Series::new("g-e", rows.iter().map(|r| (r.flux, r.w_ge)).collect(), style, 0),
            Series::new("g-f", rows.iter().map(|r| (r.flux, r.w_gf)).collect(), style, 1),
        ],
    };
    out.write("sweep.svg", &plot.render())?;
    if let Some(min) = rows.iter().min_by(|a, b| a.w_ge.total_cmp(&b.w_ge)) {
        println!(
            "sweep: {} points; w_ge minimum {:.4} GHz at flux {:.4} (w_gf {:.4} GHz, anharmonicity {:.1} MHz)",
            rows.len(),
            min.w_ge,
            min.flux,
            min.w_gf,
            min.anharmonicity * 1e3
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    T1,
    Ramsey,
    Echo,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::T1 => "t1",
            Experiment::Ramsey => "ramsey",
            Experiment::Echo => "echo",
        }
    }
}

#[derive(Serialize)]
struct ParamBlock {
    param: String,
    value: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct CoherenceJson {
    experiment: &'static str,
    shots: u64,
    seed: Option<u64>,
    detuning_mhz: Option<f64>,
    model: Option<FitModel>,
    fit: Vec<ParamBlock>,
    converged: Option<bool>,
    time_ns: Option<f64>,
    time_stderr_ns: Option<f64>,
    frequency_ghz: Option<f64>,
    frequency_stderr_ghz: Option<f64>,
    fit_error: Option<String>,
    warning: Option<String>,
}

fn delays(cfg: &RunConfig, exp: Experiment, dev: &Device) -> Result<Vec<f64>, CliError> {
    let c = &cfg.coherence;
    if let Some(d) = &c.delays_ns {
        return Ok(d.clone());
    }
    let n = c.points.unwrap_or(if exp == Experiment::Ramsey { 101 } else { 30 });
    let max = match c.max_delay_ns {
        Some(m) => m,
        None => {
            let noise = dev.noise_or_noiseless();
            let expected_us = if exp == Experiment::T1 { noise.t1 } else { noise.t2() };
            if !expected_us.is_finite() {
                return Err(CliError::Config(
                    "no finite decay time to size the delay grid; set `coherence.max_delay_ns` or `delays_ns`".into(),
                ));
            }
            3.0 * expected_us * 1e3
        }
    };
    if !(max > 0.0 && max.is_finite()) || n < 2 {
        return Err(CliError::Config("`coherence` grid needs max_delay_ns > 0 and at least 2 points".into()));
    }
    Ok(default_delays(max / 3.0, n))
}

pub fn coherence(cfg: &RunConfig, g: &Globals, exp: Experiment) -> Result<(), CliError> {
    let dev = noisy_device(cfg, g)?;
    let shots = cfg.coherence.shots;
    let seed = if shots > 0 { Some(g.seed(cfg, "a sampled coherence run")?) } else { g.seed.or(cfg.seed) };
    let delays = delays(cfg, exp, &dev)?;
    let s = seed.unwrap_or(0);
    let res = match exp {
        Experiment::T1 => t1_experiment(&dev, &delays, shots, s, g.ideal_readout)?,
        Experiment::Ramsey => ramsey_experiment(&dev, &delays, cfg.coherence.detuning_mhz, shots, s, g.ideal_readout)?,
        Experiment::Echo => echo_experiment(&dev, &delays, shots, s, g.ideal_readout)?,
    };
    let out = OutDir::create(&g.out)?;
    dumps(&dev, g, &out)?;
    let name = exp.name();
    let cells: Vec<Vec<String>> =
        res.curve.delays.iter().zip(&res.curve.values).map(|(d, v)| vec![f12(*d), f12(*v)]).collect();
    out.write_csv(&format!("{name}.csv"), &["delay_ns", "p_reported"], &cells)?;

    let fit_block = res
        .fit
        .as_ref()
        .map(|f| {
            f.names
                .iter()
                .zip(f.values.iter().zip(&f.stderr))
                .map(|(n, (v, e))| ParamBlock { param: n.clone(), value: *v, stderr: *e })
                .collect()
        })
        .unwrap_or_default();
    let json = CoherenceJson {
        experiment: name,
        shots,
        seed,
        detuning_mhz: (exp == Experiment::Ramsey).then_some(cfg.coherence.detuning_mhz),
        model: res.fit.as_ref().map(|f| f.model),
        fit: fit_block,
        converged: res.fit.as_ref().map(|f| f.converged),
        time_ns: res.time_us.map(|t| t * 1e3),
        time_stderr_ns: res.time_stderr_us.map(|t| t * 1e3),
        frequency_ghz: res.frequency_mhz.map(|f| f * 1e-3),
        frequency_stderr_ghz: res.frequency_stderr_mhz.map(|f| f * 1e-3),
        fit_error: res.fit_error.clone(),
        warning: res.fit.as_ref().and_then(|f| f.warning.clone()),
    };
    out.write_json(&format!("{name}.json"), &json)?;
    out.write(&format!("{name}.svg"), &coherence_plot(&res, name).render())?;

    match (&res.time_us, &res.fit_error) {
        (Some(t), _) => {
            print!("{name}: T = {t:.3} ± {:.3} µs", res.time_stderr_us.unwrap_or(f64::NAN));
            if let Some(f) = res.frequency_mhz {
                print!(", fringe {f:.4} MHz");
            }
            println!();
            Ok(())
        }
        (None, err) => Err(CliError::Fit(err.clone().unwrap_or_else(|| "no fit".into()))),
    }
}

fn coherence_plot(res: &CoherenceResult, name: &str) -> Plot {
    let data: Vec<(f64, f64)> = res.curve.delays.iter().copied().zip(res.curve.values.iter().copied()).collect();
    let mut series = vec![Series::new("data", data, Style::Markers, 0)];
    if let Some(f) = &res.fit {
        let x_max = res.curve.delays.last().copied().unwrap_or(0.0);
        let eval = |x: f64| match f.model {
            FitModel::DampedCosine => DampedCosine.eval(x, &f.values),
            _ => Exponential.eval(x, &f.values),
        };
        let n = 400;
        let curve = (0..=n).map(|i| x_max * i as f64 / n as f64).map(|x| (x, eval(x))).collect();
        series.push(Series::new("fit", curve, Style::Line, 1));
    }
    let title = match res.kind {
        CoherenceKind::T1 => "Energy relaxation",
        CoherenceKind::Ramsey => "Ramsey",
        CoherenceKind::Echo => "Hahn echo",
    };
    Plot {
        title: format!("{title} ({name})"),
        x_label: "delay (ns)".into(),
        y_label: "P(e) reported".into(),
        series,
    }
}

pub fn calibrate_cmd(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    let dev = cfg.bare_device()?;
    let rec = calibrate(&dev, &cfg.calibration)?;
    let out = OutDir::create(&g.out)?;
    let mut calibrated = dev.clone();
    calibrated.cal = rec.calibration;
    dumps(&calibrated, g, &out)?;
    out.write_json("calibration.json", &rec)?;
    println!(
        "calibrate: amp(X/2) = {:.8} rad/ns, amp(X) = {:.8} rad/ns, eta = {:.5} ns",
        rec.calibration.amp_half, rec.calibration.amp_pi, rec.eta_ns
    );
    for w in rec.stages.iter().filter_map(|s| s.warning.as_deref()) {
        println!("warning: {w}");
    }
    Ok(())
}

#[derive(Serialize)]
struct DecayJson {
    #[serde(rename = "A")]
    a: Option<f64>,
    #[serde(rename = "A_stderr")]
    a_stderr: Option<f64>,
    p: Option<f64>,
    p_stderr: Option<f64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    #[serde(rename = "B_stderr")]
    b_stderr: Option<f64>,
    initial_survival: Option<f64>,
    initial_survival_stderr: Option<f64>,
    at_bound: Option<bool>,
    fit_error: Option<String>,
}

impl DecayJson {
    fn new(d: &DecayData) -> Self {
        let f = d.fit.as_ref();
        let init = f.map(|f| f.initial_survival());
        Self {
            a: f.map(|f| f.a),
            a_stderr: f.map(|f| f.a_stderr),
            p: f.map(|f| f.p),
            p_stderr: f.map(|f| f.p_stderr),
            b: f.map(|f| f.b),
            b_stderr: f.map(|f| f.b_stderr),
            initial_survival: init.map(|v| v.0),
            initial_survival_stderr: init.map(|v| v.1),
            at_bound: f.map(|f| f.outcome.at_bound),
            fit_error: d.fit_error.clone(),
        }
    }
}

#[derive(Serialize)]
struct ReferenceJson {
    #[serde(flatten)]
    decay: DecayJson,
    f_clifford: Option<f64>,
    f_stderr: Option<f64>,
    /// Mean Clifford fidelity from the simulated gate channels.
    oracle_f_clifford: f64,
}

#[derive(Serialize)]
struct InterleavedJson {
    gate: &'static str,
    #[serde(flatten)]
    decay: DecayJson,
    f_gate: Option<f64>,
    f_stderr: Option<f64>,
    /// Average fidelity of the simulated gate channel.
    oracle_f_gate: f64,
}

#[derive(Serialize)]
struct RbJson {
    seed: u64,
    k: usize,
    shots: u64,
    lengths: Vec<usize>,
    ideal_readout: bool,
    reference: ReferenceJson,
    interleaved: Option<InterleavedJson>,
}

fn decay_csvs(out: &OutDir, prefix: &str, d: &DecayData) -> Result<(), CliError> {
    let raw: Vec<Vec<String>> =
        d.raw.iter().map(|r| vec![r.m.to_string(), r.seed.to_string(), f12(r.p_reported)]).collect();
    out.write_csv(&format!("{prefix}_raw.csv"), &["m", "seed", "p_reported"], &raw)?;
    let summary: Vec<Vec<String>> =
        d.summary.iter().map(|s| vec![s.m.to_string(), f12(s.mean), f12(s.stderr)]).collect();
    out.write_csv(&format!("{prefix}_summary.csv"), &["m", "mean", "stderr"], &summary)?;
    Ok(())
}

fn decay_series(d: &DecayData, label: &str, color: usize, out: &mut Vec<Series>) {
    let pts = d.summary.iter().map(|s| (s.m as f64, s.mean)).collect();
    out.push(Series::new(label, pts, Style::Markers, color));
    if let Some(f) = &d.fit {
        let m_max = d.summary.last().map_or(1, |s| s.m) as f64;
        let n = 400;
        let curve = (0..=n)
            .map(|i| m_max * i as f64 / n as f64)
            .map(|m| (m, f.a * f.p.powf(m) + f.b))
            .collect();
        out.push(Series::new(format!("{label} fit"), curve, Style::Line, color));
    }
}

pub fn rb(cfg: &RunConfig, g: &Globals, interleave: Option<&str>) -> Result<(), CliError> {
    let gate = interleave
        .map(|s| s.parse::<PhysicalGate>().map_err(|_| CliError::Config(format!("unknown gate `{s}` for --interleave"))))
        .transpose()?;
    let seed = g.seed(cfg, "rb")?;
    let rc = RbConfig {
        lengths: cfg.rb.lengths.clone(),
        k: cfg.rb.k,
        shots: cfg.rb.shots,
        interleave: gate,
        seed,
        ideal_readout: g.ideal_readout,
    };
    rc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let dev = noisy_device(cfg, g)?;
    let res = run_rb(&dev, &rc)?;
    let gs = dev.gate_set()?;
    let table = CliffordTable::new();
    let oracle_fc = mean_clifford_fidelity(&gs, &table)?;

    let out = OutDir::create(&g.out)?;
    dumps(&dev, g, &out)?;
    decay_csvs(&out, "rb", &res.reference)?;
    if let Some(d) = &res.interleaved {
        decay_csvs(&out, "rb_interleaved", d)?;
    }
    let interleaved = match (gate, &res.interleaved) {
        (Some(gt), Some(d)) => Some(InterleavedJson {
            gate: gt.name(),
            decay: DecayJson::new(d),
            f_gate: res.f_gate,
            f_stderr: res.f_gate_stderr,
            oracle_f_gate: gate_fidelity(&gs, gt)?,
        }),
        _ => None,
    };
    let json = RbJson {
        seed,
        k: rc.k,
        shots: rc.shots,
        lengths: rc.lengths.clone(),
        ideal_readout: rc.ideal_readout,
        reference: ReferenceJson {
            decay: DecayJson::new(&res.reference),
            f_clifford: res.f_clifford,
            f_stderr: res.f_clifford_stderr,
            oracle_f_clifford: oracle_fc,
        },
        interleaved,
    };
    out.write_json("rb.json", &json)?;

    let mut series = Vec::new();
    decay_series(&res.reference, "reference", 0, &mut series);
    if let (Some(d), Some(gt)) = (&res.interleaved, gate) {
        decay_series(d, &format!("interleaved {}", gt.name()), 1, &mut series);
    }
    let plot = Plot {
        title: "Randomized benchmarking".into(),
        x_label: "number of Cliffords m".into(),
        y_label: "P(g) reported".into(),
        series,
    };
    out.write("rb.svg", &plot.render())?;

    match (res.f_clifford, res.f_clifford_stderr) {
        (Some(f), Some(s)) => println!(
            "rb: F_Clifford = {:.4} ± {:.4} % (channel oracle {:.4} %; target 99.68 ± 0.02 %)",
            f * 100.0,
            s * 100.0,
            oracle_fc * 100.0
        ),
        _ => {
            let why = res.reference.fit_error.clone().unwrap_or_else(|| "no reference fit".into());
            return Err(CliError::Fit(why));
        }
    }
    if let Some(i) = &json.interleaved {
        match (i.f_gate, i.f_stderr) {
            (Some(f), Some(s)) => println!(
                "rb: F({}) = {:.4} ± {:.4} % (channel oracle {:.4} %; target for X/2 99.92 ± 0.02 %)",
                i.gate,
                f * 100.0,
                s * 100.0,
                i.oracle_f_gate * 100.0
            ),
            _ => {
                let why = i.decay.fit_error.clone().unwrap_or_else(|| "no interleaved fit".into());
                return Err(CliError::Fit(why));
            }
        }
    }
    Ok(())
}
