//! Regenerate the shipped device presets by fitting the circuit to the
//! measured sweet-spot transitions.
//!
//! cargo run --release -p csfq --example fit_presets

use csfq::circuit::{fit_parameters, BasisConfig, CircuitParams, FitTargets, FreeParam};

fn main() -> csfq::Result<()> {
    let basis = BasisConfig::default();

    let a_guess = CircuitParams { ej: 30.0, ec: 8.0, alpha: 0.43, beta: 15.0, flux: 0.5 };
    let a_targets = FitTargets { w_ge: 2.661, anharmonicity: 0.848, flux: 0.5 };
    let a = fit_parameters(&a_targets, &a_guess, &[FreeParam::Ej, FreeParam::Beta], &basis)?;
    println!("device A: {}", serde_json::to_string(&a.params).unwrap());
    println!("  residuals {:?}, iterations {}", a.residuals, a.iterations);

    // Same junctions, different small-junction scale and shunt.
    let b_guess = CircuitParams { alpha: 0.5, beta: 0.6 * a.params.beta, ..a.params };
    let b_targets = FitTargets { w_ge: 2.661, anharmonicity: 1.26, flux: 0.5 };
    let b = fit_parameters(&b_targets, &b_guess, &[FreeParam::Alpha, FreeParam::Beta], &basis)?;
    println!("device B: {}", serde_json::to_string(&b.params).unwrap());
    println!("  residuals {:?}, iterations {}", b.residuals, b.iterations);
    Ok(())
}
