//! Nonlinear least squares with covariance-based standard errors.
//!
//! A damped Gauss–Newton (Levenberg–Marquardt) loop runs in an internal
//! coordinate system where bounded parameters are unconstrained: decay times
//! through `ln T`, the RB decay constant through `logit p`. Reported values and
//! their covariance are always in natural coordinates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Relative step tolerance.
    pub xtol: f64,
    /// Relative change in the sum of squares.
    pub ftol: f64,
    pub initial_lambda: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self { max_iterations: 200, xtol: 1e-10, ftol: 1e-12, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub x: DVector<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `‖r(x)‖²`. Either closure may fail (non-finite model, failed
/// inner solve); a failed trial step counts as a rejection.
pub fn levenberg_marquardt<R, J>(
    x0: DVector<f64>,
    settings: &LmSettings,
    residuals: R,
    jacobian: J,
) -> Result<LmSolution>
where
    R: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut x = x0;
    let mut r = residuals(&x)?;
    let mut ssr = r.norm_squared();
    if !ssr.is_finite() {
        return Err(Error::fit("non-finite residuals at the initial point"));
    }
    let mut jac = jacobian(&x)?;
    let mut lambda = settings.initial_lambda;
    let n = x.len();

    for iter in 1..=settings.max_iterations {
        if ssr == 0.0 {
            return Ok(LmSolution { x, ssr, iterations: iter - 1, converged: true });
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let dmax = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * dmax);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&grad);
            let rel_step = step.norm() / (x.norm() + settings.xtol);
            let trial = &x + &step;
            let trial_r = match residuals(&trial) {
                Ok(v) if v.iter().all(|z| z.is_finite()) => v,
                _ => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial_ssr = trial_r.norm_squared();
            if trial_ssr < ssr {
                let rel_drop = (ssr - trial_ssr) / ssr;
                x = trial;
                r = trial_r;
                ssr = trial_ssr;
                lambda = (lambda * 0.1).max(1e-12);
                if rel_step < settings.xtol && (rel_drop < settings.ftol || ssr < 1e-300) {
                    return Ok(LmSolution { x, ssr, iterations: iter, converged: true });
                }
                jac = jacobian(&x)?;
                accepted = true;
                break;
            }
            if rel_step < settings.xtol {
                // no decrease available even for a negligible step: at the minimum
                return Ok(LmSolution { x, ssr, iterations: iter, converged: true });
            }
            lambda *= 10.0;
        }
        if !accepted {
            return Ok(LmSolution { x, ssr, iterations: iter, converged: false });
        }
    }
    Ok(LmSolution { x, ssr, iterations: settings.max_iterations, converged: false })
}

/// A parametric curve `y = f(x; θ)` with an analytic gradient in `θ`.
pub trait CurveModel: Sync {
    fn kind(&self) -> FitModel;
    fn param_names(&self) -> &'static [&'static str];
    fn eval(&self, x: f64, params: &[f64]) -> f64;
    fn gradient(&self, x: f64, params: &[f64], out: &mut [f64]);

    /// Map natural parameters to unconstrained optimizer coordinates.
    fn to_internal(&self, params: &[f64]) -> Vec<f64> {
        params.to_vec()
    }
    fn from_internal(&self, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }
    /// Diagonal of `∂θ/∂q`.
    fn chain(&self, q: &[f64]) -> Vec<f64> {
        vec![1.0; q.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Exponential,
    DampedCosine,
    RbDecay,
}

/// `y = A·exp(−x/T) + C`, parameters `[A, T, C]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl CurveModel for Exponential {
    fn kind(&self) -> FitModel {
        FitModel::Exponential
    }
    fn param_names(&self) -> &'static [&'static str] {
        &["A", "T", "C"]
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-x / p[1]).exp() + p[2]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let e = (-x / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * x / (p[1] * p[1]);
        out[2] = 1.0;
    }
    fn to_internal(&self, p: &[f64]) -> Vec<f64> {
        vec![p[0], p[1].ln(), p[2]]
    }
    fn from_internal(&self, q: &[f64]) -> Vec<f64> {
        vec![q[0], q[1].exp(), q[2]]
    }
    fn chain(&self, q: &[f64]) -> Vec<f64> {
        vec![1.0, q[1].exp(), 1.0]
    }
}

/// `y = A·exp(−x/T)·cos(2πf x + φ) + C`, parameters `[A, T, f, φ, C]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DampedCosine;

impl CurveModel for DampedCosine {
    fn kind(&self) -> FitModel {
        FitModel::DampedCosine
    }
    fn param_names(&self) -> &'static [&'static str] {
        &["A", "T", "f", "phi", "C"]
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-x / p[1]).exp() * (2.0 * PI * p[2] * x + p[3]).cos() + p[4]
    }
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let e = (-x / p[1]).exp();
        let arg = 2.0 * PI * p[2] * x + p[3];
        let (s, c) = arg.sin_cos();
        out[0] = e * c;
        out[1] = p[0] * e * c * x / (p[1] * p[1]);
        out[2] = -p[0] * e * s * 2.0 * PI * x;
        out[3] = -p[0] * e * s;
        out[4] = 1.0;
    }
    fn to_internal(&self, p: &[f64]) -> Vec<f64> {
        vec![p[0], p[1].ln(), p[2], p[3], p[4]]
    }
    fn from_internal(&self, q: &[f64]) -> Vec<f64> {
        vec![q[0], q[1].exp(), q[2], q[3], q[4]]
    }
    fn chain(&self, q: &[f64]) -> Vec<f64> {
        vec![1.0, q[1].exp(), 1.0, 1.0, 1.0]
    }
}

/// `y = A·p^m + B`, parameters `[A, p, B]`; with `fixed_b` only `[A, p]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RbDecay {
    pub fixed_b: Option<f64>,
}

fn logistic(q: f64) -> f64 {
    1.0 / (1.0 + (-q).exp())
}

impl CurveModel for RbDecay {
    fn kind(&self) -> FitModel {
        FitModel::RbDecay
    }
    fn param_names(&self) -> &'static [&'static str] {
        if self.fixed_b.is_some() {
            &["A", "p"]
        } else {
            &["A", "p", "B"]
        }
    }
    fn eval(&self, m: f64, p: &[f64]) -> f64 {
        p[0] * p[1].powf(m) + self.fixed_b.unwrap_or_else(|| p[2])
    }
    fn gradient(&self, m: f64, p: &[f64], out: &mut [f64]) {
        out[0] = p[1].powf(m);
        out[1] = if m == 0.0 { 0.0 } else { p[0] * m * p[1].powf(m - 1.0) };
        if self.fixed_b.is_none() {
            out[2] = 1.0;
        }
    }
    fn to_internal(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        q[1] = (p[1] / (1.0 - p[1])).ln();
        q
    }
    fn from_internal(&self, q: &[f64]) -> Vec<f64> {
        let mut p = q.to_vec();
        p[1] = logistic(q[1]);
        p
    }
    fn chain(&self, q: &[f64]) -> Vec<f64> {
        let mut d = vec![1.0; q.len()];
        let s = logistic(q[1]);
        d[1] = s * (1.0 - s);
        d
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOutcome {
    pub model: FitModel,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    /// `‖r‖` of the (weighted) residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// A bounded parameter finished against its bound.
    pub at_bound: bool,
    pub warning: Option<String>,
}

impl FitOutcome {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| (self.values[i], self.stderr[i]))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |v| v.0)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |v| v.1)
    }

    pub fn covariance_of(&self, a: &str, b: &str) -> f64 {
        let ia = self.names.iter().position(|n| n == a);
        let ib = self.names.iter().position(|n| n == b);
        match (ia, ib) {
            (Some(i), Some(j)) => self.covariance[(i, j)],
            _ => f64::NAN,
        }
    }
}

fn check_data(x: &[f64], y: &[f64], weights: Option<&[f64]>, min_points: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::fit("x and y lengths differ"));
    }
    if x.len() < min_points {
        return Err(Error::fit(format!("need at least {min_points} points, got {}", x.len())));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::fit("x must be strictly increasing"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::fit("non-finite data"));
    }
    if let Some(w) = weights {
        if w.len() != x.len() || w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::fit("weights must be positive, finite and match the data"));
        }
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    if spread <= 1e-9 * mean.abs().max(1.0) {
        return Err(Error::fit("degenerate data: all values equal"));
    }
    Ok(())
}

fn weighted_ssr<M: CurveModel>(model: &M, x: &[f64], y: &[f64], w: Option<&[f64]>, p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&xi, &yi))| {
            let r = yi - model.eval(xi, p);
            w.map_or(1.0, |w| w[i]) * r * r
        })
        .sum()
}

/// Fit `model` starting from `initial`, then derive the covariance.
pub fn fit_curve<M: CurveModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    initial: &[f64],
    settings: &LmSettings,
) -> Result<FitOutcome> {
    let np = model.param_names().len();
    if initial.len() != np {
        return Err(Error::fit("initial guess has the wrong length"));
    }
    let sqrt_w: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; x.len()],
    };
    let residuals = |q: &DVector<f64>| -> Result<DVector<f64>> {
        let p = model.from_internal(q.as_slice());
        Ok(DVector::from_iterator(
            x.len(),
            x.iter().zip(y).zip(&sqrt_w).map(|((&xi, &yi), &s)| s * (model.eval(xi, &p) - yi)),
        ))
    };
    let jacobian = |q: &DVector<f64>| -> Result<DMatrix<f64>> {
        let p = model.from_internal(q.as_slice());
        let chain = model.chain(q.as_slice());
        let mut jac = DMatrix::zeros(x.len(), np);
        let mut g = vec![0.0; np];
        for (i, &xi) in x.iter().enumerate() {
            model.gradient(xi, &p, &mut g);
            for k in 0..np {
                jac[(i, k)] = sqrt_w[i] * g[k] * chain[k];
            }
        }
        Ok(jac)
    };
    let q0 = DVector::from_vec(model.to_internal(initial));
    if q0.iter().any(|v| !v.is_finite()) {
        return Err(Error::fit("initial guess outside the parameter domain"));
    }
    let sol = levenberg_marquardt(q0, settings, residuals, jacobian)?;
    let values = model.from_internal(sol.x.as_slice());

    // covariance in natural coordinates
    let mut jn = DMatrix::zeros(x.len(), np);
    let mut g = vec![0.0; np];
    for (i, &xi) in x.iter().enumerate() {
        model.gradient(xi, &values, &mut g);
        for k in 0..np {
            jn[(i, k)] = sqrt_w[i] * g[k];
        }
    }
    let normal = jn.transpose() * &jn;
    let inv = normal
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| normal.clone().try_inverse())
        .ok_or_else(|| Error::fit("singular normal matrix"))?;
    let dof = x.len().saturating_sub(np);
    let scale = match weights {
        Some(_) => 1.0,
        None if dof > 0 => sol.ssr / dof as f64,
        None => 0.0,
    };
    let covariance = inv * scale;
    let stderr: Vec<f64> = (0..np).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();

    let at_bound = match model.kind() {
        FitModel::RbDecay => values[1] > 1.0 - 1e-6 || values[1] < 1e-6,
        _ => false,
    };
    let mut warning = None;
    if !sol.converged {
        warning = Some(format!("not converged after {} iterations; best-so-far values", sol.iterations));
    } else if at_bound {
        warning = Some("decay parameter pinned at its bound".to_string());
    }
    Ok(FitOutcome {
        model: model.kind(),
        names: model.param_names().iter().map(|s| s.to_string()).collect(),
        values,
        stderr,
        covariance,
        residual_norm: sol.ssr.sqrt(),
        converged: sol.converged,
        iterations: sol.iterations,
        at_bound,
        warning,
    })
}

/// Weighted linear least squares on a small design matrix (columns = basis
/// functions). Returns the coefficients and the weighted sum of squares.
fn linear_lsq(cols: &[Vec<f64>], y: &[f64], w: Option<&[f64]>) -> Option<(Vec<f64>, f64)> {
    let k = cols.len();
    let n = y.len();
    let wt = |i: usize| w.map_or(1.0, |w| w[i]);
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for i in 0..n {
        for r in 0..k {
            b[r] += wt(i) * cols[r][i] * y[i];
            for c in 0..k {
                a[(r, c)] += wt(i) * cols[r][i] * cols[c][i];
            }
        }
    }
    let coef = a.lu().solve(&b)?;
    let ssr = (0..n)
        .map(|i| {
            let f: f64 = (0..k).map(|r| coef[r] * cols[r][i]).sum();
            wt(i) * (y[i] - f).powi(2)
        })
        .sum();
    Some((coef.as_slice().to_vec(), ssr))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Seed by regressing `ln|y − floor|` on `x`.
fn exponential_loglinear_seed(x: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let floor = *y.last()?;
    let amp0 = y[0] - floor;
    if amp0 == 0.0 {
        return None;
    }
    let sign = amp0.signum();
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| sign * (yi - floor) > 0.05 * amp0.abs())
        .map(|(&xi, &yi)| (xi, (sign * (yi - floor)).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    let intercept = my - slope * mx;
    Some([sign * intercept.exp(), -1.0 / slope, floor])
}

/// Variable projection over `T`: for fixed `T` the model is linear in `(A, C)`.
fn exponential_scan_seed(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Option<[f64; 3]> {
    let span = x[x.len() - 1] - x[0];
    let mut best: Option<([f64; 3], f64)> = None;
    for t in log_grid(span / 100.0, span * 100.0, 121) {
        let e: Vec<f64> = x.iter().map(|&xi| (-(xi - x[0]) / t).exp()).collect();
        let ones = vec![1.0; x.len()];
        if let Some((c, ssr)) = linear_lsq(&[e, ones], y, w) {
            if best.is_none_or(|b| ssr < b.1) {
                // shift the amplitude back to x = 0
                best = Some(([c[0] * (x[0] / t).exp(), t, c[1]], ssr));
            }
        }
    }
    best.map(|b| b.0)
}

/// Fit `A·exp(−x/T) + C`.
pub fn fit_exponential(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<FitOutcome> {
    check_data(x, y, weights, 4)?;
    let model = Exponential;
    let seeds: Vec<[f64; 3]> = [exponential_loglinear_seed(x, y), exponential_scan_seed(x, y, weights)]
        .into_iter()
        .flatten()
        .collect();
    let seed = seeds
        .into_iter()
        .min_by(|a, b| {
            weighted_ssr(&model, x, y, weights, a).total_cmp(&weighted_ssr(&model, x, y, weights, b))
        })
        .ok_or_else(|| Error::fit("could not seed exponential fit"))?;
    fit_curve(&model, x, y, weights, &seed, &LmSettings::default())
}

/// Fit `A·exp(−x/T)·cos(2πf x + φ) + C`; the frequency is seeded from the
/// periodogram peak.
pub fn fit_damped_cosine(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<FitOutcome> {
    check_data(x, y, weights, 8)?;
    let n = x.len();
    let span = x[n - 1] - x[0];
    let mean = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - mean).collect();

    let df = 1.0 / (10.0 * span);
    let f_hi = (n - 1) as f64 / (2.0 * span);
    let power = |f: f64| -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(&yc) {
            let (s, c) = (2.0 * PI * f * xi).sin_cos();
            re += yi * c;
            im += yi * s;
        }
        re * re + im * im
    };
    let freqs: Vec<f64> = (0..).map(|i| i as f64 * df).take_while(|&f| f <= f_hi).collect();
    let spectrum: Vec<f64> = freqs.iter().map(|&f| power(f)).collect();
    let (peak_idx, peak) = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &p)| (i, p))
        .ok_or_else(|| Error::fit("empty periodogram"))?;
    let mut sorted = spectrum.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    // A peak below one full cycle over the record cannot be told apart from a
    // monotone decay.
    if freqs[peak_idx] < 1.0 / span || peak < 10.0 * median {
        return Err(Error::fit("no spectral peak above the noise floor; cannot seed frequency"));
    }
    let f0 = freqs[peak_idx];

    let mut best: Option<([f64; 5], f64)> = None;
    for k in -20..=20 {
        let f = f0 + k as f64 * df / 4.0;
        if f <= 0.0 {
            continue;
        }
        for t in log_grid(span / 50.0, span * 50.0, 41) {
            let env: Vec<f64> = x.iter().map(|&xi| (-xi / t).exp()).collect();
            let cosc: Vec<f64> = x.iter().zip(&env).map(|(&xi, e)| e * (2.0 * PI * f * xi).cos()).collect();
            let sinc: Vec<f64> = x.iter().zip(&env).map(|(&xi, e)| e * (2.0 * PI * f * xi).sin()).collect();
            if let Some((c, ssr)) = linear_lsq(&[cosc, sinc, vec![1.0; n]], y, weights) {
                if best.is_none_or(|b| ssr < b.1) {
                    let amp = c[0].hypot(c[1]);
                    let phi = (-c[1]).atan2(c[0]);
                    best = Some(([amp, t, f, phi, c[2]], ssr));
                }
            }
        }
    }
    let seed = best.ok_or_else(|| Error::fit("could not seed damped-cosine fit"))?.0;
    fit_curve(&DampedCosine, x, y, weights, &seed, &LmSettings::default())
}

/// Fit `A·p^m + B` (or `A·p^m + b_fixed`).
pub fn fit_rb_decay(
    m: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    fixed_b: Option<f64>,
) -> Result<FitOutcome> {
    check_data(m, y, weights, 4)?;
    let model = RbDecay { fixed_b };
    let n = m.len();
    let mut seeds: Vec<Vec<f64>> = Vec::new();

    // two-point log ratio on floor-subtracted means
    let floor = fixed_b.unwrap_or(y[n - 1] - 0.05 * (y[0] - y[n - 1]));
    let mid = n / 2;
    let (a0, a1) = (y[0] - floor, y[mid] - floor);
    if a0 * a1 > 0.0 && m[mid] > m[0] {
        let p = (a1 / a0).powf(1.0 / (m[mid] - m[0]));
        if p > 0.0 && p < 1.0 {
            let amp = a0 / p.powf(m[0]);
            seeds.push(match fixed_b {
                Some(_) => vec![amp, p],
                None => vec![amp, p, floor],
            });
        }
    }
    // variable projection over logit p
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..=240 {
        let q = -4.0 + 20.0 * i as f64 / 240.0;
        let p = logistic(q);
        let pm: Vec<f64> = m.iter().map(|&mi| p.powf(mi)).collect();
        let fit = match fixed_b {
            Some(b) => {
                let yb: Vec<f64> = y.iter().map(|v| v - b).collect();
                linear_lsq(&[pm], &yb, weights).map(|(c, s)| (vec![c[0], p], s))
            }
            None => linear_lsq(&[pm, vec![1.0; n]], y, weights).map(|(c, s)| (vec![c[0], p, c[1]], s)),
        };
        if let Some((params, ssr)) = fit {
            if best.as_ref().is_none_or(|b| ssr < b.1) {
                best = Some((params, ssr));
            }
        }
    }
    seeds.extend(best.map(|b| b.0));
    let seed = seeds
        .into_iter()
        .min_by(|a, b| weighted_ssr(&model, m, y, weights, a).total_cmp(&weighted_ssr(&model, m, y, weights, b)))
        .ok_or_else(|| Error::fit("could not seed RB fit"))?;
    fit_curve(&model, m, y, weights, &seed, &LmSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, hi: f64) -> Vec<f64> {
        (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exponential_exact_recovery() {
        let x = grid(30, 69_000.0);
        let y: Vec<f64> = x.iter().map(|&t| (-t / 23_000.0).exp()).collect();
        let fit = fit_exponential(&x, &y, None).unwrap();
        assert!(fit.converged);
        assert!((fit.value("A") - 1.0).abs() < 1e-8);
        assert!((fit.value("T") / 23_000.0 - 1.0).abs() < 1e-8);
        assert!(fit.value("C").abs() < 1e-8);
        assert!(fit.error("T") < 1e-6);
    }

    #[test]
    fn flat_data_is_degenerate() {
        let x = grid(10, 1.0);
        let y = vec![0.3; 10];
        let err = fit_exponential(&x, &y, None).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn damped_cosine_exact_recovery() {
        let x = grid(121, 18_900.0);
        let truth = [0.4, 6300.0, 0.0005, 0.3, 0.5];
        let y: Vec<f64> = x.iter().map(|&t| DampedCosine.eval(t, &truth)).collect();
        let fit = fit_damped_cosine(&x, &y, None).unwrap();
        for (v, t) in fit.values.iter().zip(truth) {
            assert!((v - t).abs() <= 1e-6 * t.abs(), "{v} vs {t}");
        }
    }

    #[test]
    fn damped_cosine_phase_wrap_is_equivalent() {
        let x = grid(60, 10.0);
        let p = [1.0, 4.0, 0.7, 0.4, 0.1];
        let mut q = p;
        q[3] += 2.0 * PI;
        let y: Vec<f64> = x.iter().map(|&t| DampedCosine.eval(t, &p)).collect();
        let a = weighted_ssr(&DampedCosine, &x, &y, None, &p);
        let b = weighted_ssr(&DampedCosine, &x, &y, None, &q);
        assert!((a - b).abs() < 1e-20);
    }

    #[test]
    fn zero_frequency_reports_seeding_failure() {
        let x = grid(40, 10.0);
        let y: Vec<f64> = x.iter().map(|&t| (-t / 3.0).exp()).collect();
        let err = fit_damped_cosine(&x, &y, None).unwrap_err();
        assert!(err.to_string().contains("spectral peak"));
    }

    #[test]
    fn rb_exact_recovery() {
        let m = [1.0, 3.0, 7.0, 13.0, 25.0, 51.0, 101.0, 201.0, 401.0];
        let y: Vec<f64> = m.iter().map(|&k| 0.25 * 0.9936_f64.powf(k) + 0.5).collect();
        let fit = fit_rb_decay(&m, &y, None, None).unwrap();
        assert!((fit.value("A") - 0.25).abs() < 1e-8);
        assert!((fit.value("p") - 0.9936).abs() < 1e-8);
        assert!((fit.value("B") - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rb_increasing_data_flags_bound() {
        let m = [1.0, 3.0, 7.0, 13.0, 25.0, 51.0];
        let y: Vec<f64> = m.iter().map(|&k| 0.5 + 0.001 * k).collect();
        let fit = fit_rb_decay(&m, &y, None, None).unwrap();
        assert!(fit.at_bound);
        assert!(fit.warning.is_some());
    }

    #[test]
    fn rb_fixed_floor() {
        let m = [1.0, 5.0, 10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = m.iter().map(|&k| 0.3 * 0.98_f64.powf(k) + 0.5).collect();
        let fit = fit_rb_decay(&m, &y, None, Some(0.5)).unwrap();
        assert_eq!(fit.names, vec!["A", "p"]);
        assert!((fit.value("p") - 0.98).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        assert!(fit_exponential(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.2], None).is_err());
        assert!(fit_exponential(&[0.0, 2.0, 1.0, 3.0], &[1.0, 0.5, 0.2, 0.1], None).is_err());
        assert!(fit_exponential(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.5, 0.2, 0.1], Some(&[1.0, 1.0, 0.0, 1.0])).is_err());
    }
}
