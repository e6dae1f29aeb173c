use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Readout assignment probabilities over {g, e}. Any population outside the
/// qubit subspace is read as e.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Confusion {
    /// P(report g | g)
    pub p_gg: f64,
    /// P(report e | e)
    pub p_ee: f64,
}

impl Default for Confusion {
    fn default() -> Self {
        Self::ideal()
    }
}

impl Confusion {
    pub fn ideal() -> Self {
        Self { p_gg: 1.0, p_ee: 1.0 }
    }

    /// Both assignment fidelities at 0.75.
    pub fn paper() -> Self {
        Self { p_gg: 0.75, p_ee: 0.75 }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.p_gg, self.p_ee] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param("confusion", "entries must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Column-stochastic matrix `[[P(g|g), P(g|e)], [P(e|g), P(e|e)]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.p_gg, 1.0 - self.p_ee], [1.0 - self.p_gg, self.p_ee]]
    }

    pub fn apply(&self, p_true_g: f64) -> Readout {
        let p_true_e = 1.0 - p_true_g;
        let p_g = self.p_gg * p_true_g + (1.0 - self.p_ee) * p_true_e;
        Readout { p_g, p_e: 1.0 - p_g }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Readout {
    pub p_g: f64,
    pub p_e: f64,
}

/// Reported outcome probabilities of a projective g/e measurement.
pub fn measure(rho: &CMat, confusion: &Confusion) -> Readout {
    let total = rho.diagonal().iter().map(|z| z.re).sum::<f64>();
    let p_g = (rho[(0, 0)].re / total).clamp(0.0, 1.0);
    confusion.apply(p_g)
}

/// Generator for task `task` under root seed `root`: the root seeds the key
/// and the task index selects the ChaCha stream.
pub fn task_rng(root: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(task);
    rng
}

/// Multinomial draw by chained binomials.
pub fn sample_shots_with<R: Rng + ?Sized>(probs: &[f64], n_shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::param("probs", "entries must lie in [0, 1]"));
    }
    if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("probs", "must sum to 1"));
    }
    if n_shots == 0 {
        return Err(Error::param("n_shots", "must be at least 1"));
    }
    let mut left = n_shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() || left == 0 {
            counts.push(if k + 1 == probs.len() { left } else { 0 });
            left -= *counts.last().unwrap();
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q).map_err(|e| Error::param("probs", e.to_string()))?.sample(rng);
        counts.push(draw);
        left -= draw;
        mass -= p;
    }
    Ok(counts)
}

pub fn sample_shots(probs: &[f64], n_shots: u64, seed: u64) -> Result<Vec<u64>> {
    sample_shots_with(probs, n_shots, &mut ChaCha8Rng::seed_from_u64(seed))
}
