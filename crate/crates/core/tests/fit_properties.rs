use csfq::fit::{fit_curve, fit_rb_decay, CurveModel, DampedCosine, Exponential, LmSettings, RbDecay};
use csfq::dynamics::task_rng;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

fn fd_check<M: CurveModel>(model: &M, x: f64, p: &[f64]) -> Result<(), String> {
    let mut g = vec![0.0; p.len()];
    model.gradient(x, p, &mut g);
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-6);
        let (mut hi, mut lo) = (p.to_vec(), p.to_vec());
        hi[k] += h;
        lo[k] -= h;
        let fd = (model.eval(x, &hi) - model.eval(x, &lo)) / (2.0 * h);
        // scale by the typical size of the partial to avoid 0/0 near zeros
        let scale = g[k].abs().max(model.eval(x, p).abs().max(1e-3) / p[k].abs().max(1e-6) * 1e-3);
        if (fd - g[k]).abs() > 1e-6 * scale {
            return Err(format!("param {k} at x={x}: analytic {} vs fd {fd}", g[k]));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exponential_gradient(a in 0.1..2.0f64, t in 10.0..1e4f64, c in -1.0..1.0f64, x in 0.0..3e4f64) {
        prop_assert_eq!(fd_check(&Exponential, x, &[a, t, c]), Ok(()));
    }

    #[test]
    fn damped_cosine_gradient(
        a in 0.1..1.0f64, t in 100.0..1e4f64, f in 1e-4..5e-3f64, phi in -3.0..3.0f64, c in 0.0..1.0f64, x in 0.0..2e4f64
    ) {
        let r = fd_check(&DampedCosine, x, &[a, t, f, phi, c]);
        prop_assert_eq!(r, Ok(()));
    }

    #[test]
    fn rb_gradient(a in 0.1..0.5f64, p in 0.9..0.9999f64, b in 0.3..0.6f64, m in 1.0..500.0f64) {
        let model = RbDecay { fixed_b: None };
        prop_assert_eq!(fd_check(&model, m, &[a, p, b]), Ok(()));
    }
}

#[test]
fn rb_fit_is_independent_of_the_starting_point() {
    let m: Vec<f64> = [1, 3, 7, 13, 25, 51, 101, 201, 401].iter().map(|&v| v as f64).collect();
    let model = RbDecay { fixed_b: None };
    let normal = Normal::new(0.0, 0.002).unwrap();
    let mut rng = task_rng(5, 0);
    let y: Vec<f64> = m.iter().map(|&x| model.eval(x, &[0.25, 0.995, 0.5]) + normal.sample(&mut rng)).collect();
    let starts = [[0.25, 0.995, 0.5], [0.1, 0.9, 0.6], [0.5, 0.999, 0.3], [0.3, 0.98, 0.45], [0.2, 0.95, 0.55]];
    let fits: Vec<f64> = starts
        .iter()
        .map(|s| fit_curve(&model, &m, &y, None, s, &LmSettings::default()).unwrap().value("p"))
        .collect();
    let auto = fit_rb_decay(&m, &y, None, None).unwrap().value("p");
    for p in &fits {
        assert!((p - fits[0]).abs() <= 1e-6, "{fits:?}");
    }
    assert!((auto - fits[0]).abs() <= 1e-6);
}
