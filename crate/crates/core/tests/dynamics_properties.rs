use std::f64::consts::PI;

use csfq::dynamics::{propagate_lindblad, propagate_unitary, Confusion, NoiseModel, SystemModel, DEFAULT_DT};
use csfq::linalg::{c, ket_bra, trace, unitarity_error, CMat};
use csfq::pulses::{
    envelope_i, envelope_q, integrate, pulse_area, DragShape, GateCalibration, GaussianShape, PhysicalGate,
    PulseProgram, PulseShape,
};
use proptest::prelude::*;

fn gaussian() -> impl Strategy<Value = GaussianShape> {
    (8.0..40.0f64, 0.2..0.8f64, -1.0..1.0f64)
        .prop_map(|(len, frac, amp)| GaussianShape { total_length: len, fwhm: frac * len, amplitude: amp })
}

fn gates(max: usize) -> impl Strategy<Value = Vec<PhysicalGate>> {
    prop::collection::vec((0usize..7).prop_map(|i| PhysicalGate::ALL[i]), 1..max)
}

fn three_level() -> SystemModel {
    SystemModel::three_level(2.661, 0.848, 1.679)
}

fn cal(eta: f64) -> GateCalibration {
    let mut cal = GateCalibration::from_area(GaussianShape::default(), 2.661).unwrap();
    cal.eta = eta;
    cal
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelope_vanishes_at_both_ends(g in gaussian()) {
        let s = PulseShape::Gaussian(g);
        prop_assert_eq!(envelope_i(&s, 0.0).unwrap(), 0.0);
        prop_assert_eq!(envelope_i(&s, g.total_length).unwrap(), 0.0);
        // continuity: no jumps between close samples
        let n = 2000;
        let h = g.total_length / n as f64;
        let peak = g.amplitude.abs();
        for k in 0..n {
            let a = envelope_i(&s, k as f64 * h).unwrap();
            let b = envelope_i(&s, ((k + 1) as f64 * h).min(g.total_length)).unwrap();
            prop_assert!((a - b).abs() <= 0.05 * peak + 1e-15);
        }
    }

    #[test]
    fn quadrature_integrates_to_zero(g in gaussian(), eta in -1.0..1.0f64) {
        let d = DragShape { base: g, eta };
        let len = g.total_length;
        let q = integrate(|t| envelope_q(&d, t.min(len)).unwrap(), 0.0, len, 1e-14);
        let max = (0..=1000).map(|k| envelope_q(&d, (k as f64 * len / 1000.0).min(len)).unwrap().abs()).fold(0.0, f64::max);
        prop_assert!(q.abs() <= 1e-10 * max * len + 1e-300);
    }

    #[test]
    fn area_is_homogeneous_in_amplitude(g in gaussian(), k in -3.0..3.0f64) {
        let a1 = pulse_area(&PulseShape::Gaussian(g));
        let a2 = pulse_area(&PulseShape::Gaussian(GaussianShape { amplitude: k * g.amplitude, ..g }));
        prop_assert!((a2 - k * a1).abs() <= 1e-10 * (k * a1).abs().max(1e-12));
    }

    #[test]
    fn program_duration_counts_gates(gs in gates(30)) {
        let p = cal(0.0).program(&gs);
        prop_assert!((p.duration - 20.0 * gs.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn propagators_are_unitary(gs in gates(6), eta in -0.5..0.5f64) {
        let u = propagate_unitary(&three_level(), &cal(eta).program(&gs), DEFAULT_DT).unwrap();
        prop_assert!(unitarity_error(&u) <= 1e-8);
    }

    #[test]
    fn lindblad_preserves_trace(gs in gates(5), t1 in 1.0..50.0f64, t_phi in 1.0..50.0f64) {
        let noise = NoiseModel { t1, t_phi, confusion: Confusion::ideal() };
        let calib = cal(-0.13);
        for k in 1..=gs.len() {
            let rho = propagate_lindblad(&three_level(), &noise, &calib.program(&gs[..k]), &ket_bra(3, 0, 0), DEFAULT_DT).unwrap();
            prop_assert!((trace(&rho).re - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn noiseless_lindblad_is_unitary(gs in gates(5), eta in -0.5..0.5f64) {
        let prog = cal(eta).program(&gs);
        let u = propagate_unitary(&three_level(), &prog, DEFAULT_DT).unwrap();
        let psi = u.column(0).into_owned();
        let rho = propagate_lindblad(&three_level(), &NoiseModel::noiseless(), &prog, &ket_bra(3, 0, 0), DEFAULT_DT).unwrap();
        let fid = (psi.adjoint() * &rho * &psi)[(0, 0)].re;
        prop_assert!((1.0 - fid).abs() <= 1e-8);
    }
}

#[test]
fn off_diagonal_decay_over_three_decades() {
    let noise = NoiseModel { t1: 23.0, t_phi: 7.3, confusion: Confusion::ideal() };
    let mut rho0 = CMat::from_element(3, 3, c(0.0, 0.0));
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        rho0[(i, j)] = c(0.5, 0.0);
    }
    let rate = 1.0 / 46_000.0 + 1.0 / 7_300.0;
    for t in [20.0, 200.0, 2_000.0, 20_000.0] {
        let mut p = PulseProgram::new();
        p.idle(t);
        let rho = propagate_lindblad(&three_level(), &noise, &p, &rho0, DEFAULT_DT).unwrap();
        assert!((rho[(0, 1)].norm() / (0.5 * (-t * rate).exp()) - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn small_area_rabi_slope() {
    let sys = SystemModel::two_level(2.661);
    let unit = pulse_area(&PulseShape::Gaussian(GaussianShape { amplitude: 1.0, ..GaussianShape::default() }));
    let pe = |a: f64| {
        let mut p = PulseProgram::new();
        p.push(PulseShape::Gaussian(GaussianShape { amplitude: a, ..GaussianShape::default() }), 0.0, 2.661);
        propagate_unitary(&sys, &p, DEFAULT_DT).unwrap()[(1, 0)].norm_sqr()
    };
    let a = 0.1 / unit;
    let h = 1e-4 * a;
    let fd = (pe(a + h) - pe(a - h)) / (2.0 * h);
    let theta = unit * a;
    let exact = unit * theta.sin() / 2.0;
    assert!((fd / exact - 1.0).abs() <= 1e-4, "{fd} vs {exact}");
    assert!(theta < PI / 4.0);
}
