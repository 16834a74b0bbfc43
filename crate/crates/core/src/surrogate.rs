//! Gaussian-process surrogate with deterministic hyperparameter fitting.
//!
//! The model is a zero-mean process on standardized outputs with either an
//! RBF or a Matern-5/2 correlation over per-dimension scaled distances.
//! Hyperparameters (per-dimension length scales, signal variance, noise
//! variance) maximize the log marginal likelihood via seeded multi-start
//! Nelder-Mead in log-parameter space, followed by a coordinate pattern
//! polish. Restart results are reduced by (likelihood, restart index), so
//! the outcome is a pure function of data, config, and seed.
//!
//! Predictions come from one Cholesky factorization of
//! `K = signal * R + (noise + jitter) * I`:
//!
//! ```text
//! mean(x) = y_mean + y_std * k(x)' K^-1 y~
//! var(x)  = y_std^2 * (signal + noise - k(x)' K^-1 k(x))
//! ```
//!
//! where `y~` are the standardized training outputs. The jitter starts at
//! the configured value and escalates by decades when factorization fails.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length scales must be positive and finite, got {0}")]
    InvalidTheta(f64),
    #[error("non-finite training value at row {0}")]
    NonFiniteValue(usize),
    #[error("covariance factorization failed even at jitter {max_jitter}")]
    Factorization { max_jitter: f64 },
    #[error("invalid fit config: {0}")]
    InvalidConfig(String),
}

/// Correlation family over per-dimension scaled distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSpec {
    Rbf,
    Matern52,
}

const SQRT_5: f64 = 2.236_067_977_499_79;

fn correlation(spec: KernelSpec, theta: &[f64], xi: &[f64], xj: &[f64]) -> f64 {
    match spec {
        KernelSpec::Rbf => {
            let s: f64 = xi
                .iter()
                .zip(xj)
                .zip(theta)
                .map(|((a, b), t)| {
                    let d = (a - b) / t;
                    d * d
                })
                .sum();
            (-0.5 * s).exp()
        }
        KernelSpec::Matern52 => {
            // Third term sums the squared per-dimension distances separately;
            // it is not the square of the summed first-order term.
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for ((a, b), t) in xi.iter().zip(xj).zip(theta) {
                let d = (a - b).abs() / t;
                s1 += d;
                s2 += d * d;
            }
            (-SQRT_5 * s1).exp() * (1.0 + SQRT_5 * s1 + (5.0 / 3.0) * s2)
        }
    }
}

/// Correlation between two locations; 1 at zero distance, positive, at most 1.
pub fn kernel_eval(
    spec: KernelSpec,
    theta: &[f64],
    xi: &[f64],
    xj: &[f64],
) -> Result<f64, SurrogateError> {
    if xi.len() != xj.len() {
        return Err(SurrogateError::DimensionMismatch {
            expected: xi.len(),
            got: xj.len(),
        });
    }
    if theta.len() != xi.len() {
        return Err(SurrogateError::DimensionMismatch {
            expected: xi.len(),
            got: theta.len(),
        });
    }
    if let Some(&t) = theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(SurrogateError::InvalidTheta(t));
    }
    Ok(correlation(spec, theta, xi, xj))
}

// ---- Fit configuration ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Seeded restarts of the local search; restart 0 is a fixed canonical
    /// start, the rest draw log-uniform starts inside the bounds.
    pub restarts: usize,
    pub theta_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    pub jitter: f64,
    pub max_jitter: f64,
    pub max_nm_iters: usize,
    /// Minimum likelihood gain for the polish stage to accept a move.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            theta_bounds: (1e-2, 1e2),
            signal_bounds: (1e-4, 1e2),
            noise_bounds: (1e-8, 1.0),
            jitter: 1e-6,
            max_jitter: 1e-2,
            max_nm_iters: 200,
            tolerance: 1e-9,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), SurrogateError> {
        let bounds = [
            ("theta", self.theta_bounds),
            ("signal", self.signal_bounds),
            ("noise", self.noise_bounds),
        ];
        for (name, (lo, hi)) in bounds {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(SurrogateError::InvalidConfig(format!(
                    "{name} bounds [{lo}, {hi}] must be finite with 0 <= lo <= hi"
                )));
            }
            // Log-space search needs a positive lower bound unless pinned.
            if lo == 0.0 && hi > 0.0 {
                return Err(SurrogateError::InvalidConfig(format!(
                    "{name} bounds must be pinned (lo == hi) to allow zero"
                )));
            }
        }
        if self.theta_bounds.0 == 0.0 {
            return Err(SurrogateError::InvalidConfig(
                "length scales cannot be zero".into(),
            ));
        }
        if !(self.jitter >= 0.0 && self.max_jitter >= self.jitter) {
            return Err(SurrogateError::InvalidConfig(
                "jitter must satisfy 0 <= jitter <= max_jitter".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(SurrogateError::InvalidConfig(
                "at least one restart required".into(),
            ));
        }
        Ok(())
    }
}

// ---- Diagnostics ----

#[derive(Debug, Clone, PartialEq)]
pub struct RestartDiag {
    pub start_lml: f64,
    pub best_lml: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub restarts: Vec<RestartDiag>,
    pub final_lml: f64,
    pub jitter_used: f64,
}

// ---- Model ----

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Posterior mean in original output units.
    pub mean: f64,
    /// Posterior variance of a noisy observation, original units squared;
    /// clamped at zero.
    pub variance: f64,
}

#[derive(Clone)]
pub struct GpModel {
    spec: KernelSpec,
    theta: Vec<f64>,
    signal_variance: f64,
    noise_variance: f64,
    jitter: f64,
    x: Vec<Vec<f64>>,
    y_std_vec: DVector<f64>,
    y_mean: f64,
    y_std: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    diagnostics: FitDiagnostics,
}

impl std::fmt::Debug for GpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GpModel")
            .field("spec", &self.spec)
            .field("theta", &self.theta)
            .field("signal_variance", &self.signal_variance)
            .field("noise_variance", &self.noise_variance)
            .field("jitter", &self.jitter)
            .field("train_len", &self.x.len())
            .field("final_lml", &self.diagnostics.final_lml)
            .finish()
    }
}

fn covariance_matrix(
    spec: KernelSpec,
    theta: &[f64],
    signal: f64,
    diag_add: f64,
    x: &[Vec<f64>],
) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = signal + diag_add;
        for j in 0..i {
            let v = signal * correlation(spec, theta, &x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Log marginal likelihood of standardized outputs under the given
/// hyperparameters; `None` when the covariance cannot be factorized.
pub fn log_marginal_likelihood(
    spec: KernelSpec,
    theta: &[f64],
    signal_variance: f64,
    noise_variance: f64,
    jitter: f64,
    x: &[Vec<f64>],
    y_standardized: &[f64],
) -> Option<f64> {
    let n = x.len();
    let k = covariance_matrix(spec, theta, signal_variance, noise_variance + jitter, x);
    let chol = Cholesky::new(k)?;
    let y = DVector::from_column_slice(y_standardized);
    let alpha = chol.solve(&y);
    let log_det_half: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
    Some(-0.5 * y.dot(&alpha) - log_det_half - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

// Duplicate locations are merged by averaging their outputs, preserving
// first-seen order.
fn merge_duplicates(x: &[Vec<f64>], y: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut order: Vec<Vec<f64>> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    let mut index: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
    for (xi, &yi) in x.iter().zip(y) {
        let key: Vec<u64> = xi.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&i) => {
                sums[i].0 += yi;
                sums[i].1 += 1;
            }
            None => {
                index.insert(key, order.len());
                order.push(xi.clone());
                sums.push((yi, 1));
            }
        }
    }
    let values = sums.iter().map(|&(s, c)| s / c as f64).collect();
    (order, values)
}

// Bounded log-space view of the (theta.., signal, noise) parameter vector.
// Pinned coordinates (lo == hi) stay out of the search entirely, which also
// allows pinning a parameter at zero.
struct SearchSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
    free: Vec<usize>,
}

impl SearchSpace {
    fn new(dim: usize, cfg: &FitConfig) -> Self {
        let mut lo = vec![cfg.theta_bounds.0; dim];
        let mut hi = vec![cfg.theta_bounds.1; dim];
        lo.push(cfg.signal_bounds.0);
        hi.push(cfg.signal_bounds.1);
        lo.push(cfg.noise_bounds.0);
        hi.push(cfg.noise_bounds.1);
        let free = (0..dim + 2).filter(|&i| lo[i] < hi[i]).collect();
        Self { lo, hi, free }
    }

    fn clamp_free(&self, coord: usize, z: f64) -> f64 {
        z.clamp(self.lo[coord].ln(), self.hi[coord].ln())
    }

    /// Full parameter vector in value space from a free-coordinate z vector.
    fn params(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.lo.clone();
        for (k, &coord) in self.free.iter().enumerate() {
            out[coord] = self.clamp_free(coord, z[k]).exp();
        }
        out
    }
}

fn split_params(params: &[f64]) -> (&[f64], f64, f64) {
    let d = params.len() - 2;
    (&params[..d], params[d], params[d + 1])
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    start: &[f64],
    max_iters: usize,
    mut f: F,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += 0.5;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut best = simplex
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty simplex")
        .clone();

    for _ in 0..max_iters {
        // Maximization: sort descending, worst last.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if simplex[0].1 > best.1 {
            best = simplex[0].clone();
        }
        let spread = simplex[0].1 - simplex[n].1;
        if spread.is_finite() && spread < 1e-10 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let at = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|k| centroid[k] + coef * (centroid[k] - worst.0[k]))
                .collect()
        };
        let reflected = at(1.0);
        let fr = f(&reflected);
        if fr > simplex[0].1 {
            let expanded = at(2.0);
            let fe = f(&expanded);
            simplex[n] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = at(-0.5);
            let fc = f(&contracted);
            if fc > worst.1 {
                simplex[n] = (contracted, fc);
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = (0..n)
                        .map(|k| 0.5 * (simplex[0].0[k] + simplex[i].0[k]))
                        .collect();
                    let fs = f(&shrunk);
                    simplex[i] = (shrunk, fs);
                }
            }
        }
    }
    for cand in &simplex {
        if cand.1 > best.1 {
            best = cand.clone();
        }
    }
    (best.0, best.1)
}

// Coordinate pattern polish. The step list includes ln(1.2) so a fitted
// optimum cannot be improved beyond tolerance by scaling any single
// parameter by 0.8..1.2.
const POLISH_STEPS: [f64; 3] = [std::f64::consts::LN_2, 0.182_321_556_793_955, 0.048_790_164_169_432];

fn polish<F: FnMut(&[f64]) -> f64>(
    z: &mut Vec<f64>,
    mut value: f64,
    tolerance: f64,
    mut f: F,
) -> f64 {
    for _ in 0..200 {
        let mut improved = false;
        for &step in &POLISH_STEPS {
            for k in 0..z.len() {
                for sign in [1.0, -1.0] {
                    let mut trial = z.clone();
                    trial[k] += sign * step;
                    let fv = f(&trial);
                    if fv > value + tolerance {
                        *z = trial;
                        value = fv;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    value
}

/// Fits hyperparameters by seeded multi-start likelihood maximization and
/// returns a ready-to-predict model. Duplicated training locations are
/// merged by averaging before fitting.
pub fn fit_gp(
    x: &[Vec<f64>],
    y: &[f64],
    spec: KernelSpec,
    cfg: &FitConfig,
    seed: u64,
) -> Result<GpModel, SurrogateError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(SurrogateError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(SurrogateError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dim = x[0].len();
    for xi in x {
        if xi.len() != dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: dim,
                got: xi.len(),
            });
        }
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFiniteValue(row));
    }

    let (xm, ym) = merge_duplicates(x, y);
    let n = xm.len();
    let y_mean = ym.iter().sum::<f64>() / n as f64;
    let var = ym.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
    let y_std = if var.sqrt() > 0.0 { var.sqrt() } else { 1.0 };
    let y_standardized: Vec<f64> = ym.iter().map(|v| (v - y_mean) / y_std).collect();

    let space = SearchSpace::new(dim, cfg);
    let mut lml_of = |z: &[f64]| -> f64 {
        let params = space.params(z);
        let (theta, signal, noise) = split_params(&params);
        log_marginal_likelihood(spec, theta, signal, noise, cfg.jitter, &xm, &y_standardized)
            .unwrap_or(f64::NEG_INFINITY)
    };

    // Canonical start, then seeded log-uniform starts.
    let clamp_start = |coord: usize, v: f64| -> f64 {
        v.clamp(space.lo[coord].max(1e-300), space.hi[coord].max(1e-300))
            .ln()
    };
    let canonical: Vec<f64> = space
        .free
        .iter()
        .map(|&coord| {
            let v = if coord < dim {
                0.3
            } else if coord == dim {
                1.0
            } else {
                1e-4
            };
            clamp_start(coord, v)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_start = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        space
            .free
            .iter()
            .map(|&coord| {
                let lo = space.lo[coord].ln();
                let hi = space.hi[coord].ln();
                lo + rng.random::<f64>() * (hi - lo)
            })
            .collect()
    };

    let mut diags = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..cfg.restarts {
        let start = if r == 0 { canonical.clone() } else { draw_start(&mut rng) };
        let start_lml = lml_of(&start);
        let (z, lml) = if space.free.is_empty() {
            (start.clone(), start_lml)
        } else {
            nelder_mead(&start, cfg.max_nm_iters, &mut lml_of)
        };
        diags.push(RestartDiag {
            start_lml,
            best_lml: lml,
        });
        // Strict comparison keeps the earliest restart on ties.
        if best.as_ref().is_none_or(|(_, b)| lml > *b) {
            best = Some((z, lml));
        }
    }
    let (mut z, mut lml) = best.expect("at least one restart");
    if !space.free.is_empty() {
        lml = polish(&mut z, lml, cfg.tolerance, &mut lml_of);
    }
    if lml == f64::NEG_INFINITY {
        // Every evaluated point failed to factorize at the base jitter; the
        // escalation below is the last resort.
        lml = f64::NAN;
    }

    let params = space.params(&z);
    let (theta, signal, noise) = split_params(&params);
    build_model(
        spec,
        theta.to_vec(),
        signal,
        noise,
        cfg,
        xm,
        y_standardized,
        y_mean,
        y_std,
        diags,
        lml,
    )
}

#[allow(clippy::too_many_arguments)]
fn build_model(
    spec: KernelSpec,
    theta: Vec<f64>,
    signal_variance: f64,
    noise_variance: f64,
    cfg: &FitConfig,
    x: Vec<Vec<f64>>,
    y_standardized: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    restarts: Vec<RestartDiag>,
    lml_hint: f64,
) -> Result<GpModel, SurrogateError> {
    let mut jitter = cfg.jitter;
    let chol = loop {
        let k = covariance_matrix(spec, &theta, signal_variance, noise_variance + jitter, &x);
        match Cholesky::new(k) {
            Some(c) => break c,
            None => {
                let next = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
                if next > cfg.max_jitter {
                    return Err(SurrogateError::Factorization {
                        max_jitter: cfg.max_jitter,
                    });
                }
                jitter = next;
            }
        }
    };
    let y_vec = DVector::from_column_slice(&y_standardized);
    let alpha = chol.solve(&y_vec);
    let final_lml = if jitter == cfg.jitter && lml_hint.is_finite() {
        lml_hint
    } else {
        log_marginal_likelihood(spec, &theta, signal_variance, noise_variance, jitter, &x, &y_standardized)
            .unwrap_or(f64::NAN)
    };
    Ok(GpModel {
        spec,
        theta,
        signal_variance,
        noise_variance,
        jitter,
        x,
        y_std_vec: y_vec,
        y_mean,
        y_std,
        chol,
        alpha,
        diagnostics: FitDiagnostics {
            restarts,
            final_lml,
            jitter_used: jitter,
        },
    })
}

impl GpModel {
    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn train_len(&self) -> usize {
        self.x.len()
    }

    pub fn kernel(&self) -> KernelSpec {
        self.spec
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// Likelihood of alternative hyperparameters on this model's training
    /// data (standardized as fitted), for local-optimality checks.
    pub fn lml_for(
        &self,
        theta: &[f64],
        signal_variance: f64,
        noise_variance: f64,
    ) -> Option<f64> {
        log_marginal_likelihood(
            self.spec,
            theta,
            signal_variance,
            noise_variance,
            self.jitter,
            &self.x,
            self.y_std_vec.as_slice(),
        )
    }

    /// Rebuilds the model on new data keeping the fitted hyperparameters.
    pub fn with_data(&self, x: &[Vec<f64>], y: &[f64], cfg: &FitConfig) -> Result<GpModel, SurrogateError> {
        if x.is_empty() {
            return Err(SurrogateError::EmptyTrainingSet);
        }
        if x.len() != y.len() {
            return Err(SurrogateError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let (xm, ym) = merge_duplicates(x, y);
        let n = xm.len();
        let y_mean = ym.iter().sum::<f64>() / n as f64;
        let var = ym.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_std = if var.sqrt() > 0.0 { var.sqrt() } else { 1.0 };
        let y_standardized: Vec<f64> = ym.iter().map(|v| (v - y_mean) / y_std).collect();
        build_model(
            self.spec,
            self.theta.clone(),
            self.signal_variance,
            self.noise_variance,
            cfg,
            xm,
            y_standardized,
            y_mean,
            y_std,
            Vec::new(),
            f64::NAN,
        )
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SurrogateError> {
        if x.len() != self.dim() {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let k = DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .map(|xi| self.signal_variance * correlation(self.spec, &self.theta, x, xi)),
        );
        let v = self.chol.solve(&k);
        let mean = self.y_mean + self.y_std * k.dot(&self.alpha);
        let var_std = self.signal_variance + self.noise_variance - k.dot(&v);
        let variance = (self.y_std * self.y_std * var_std).max(0.0);
        Ok(Prediction { mean, variance })
    }

    /// Point-by-point batch prediction; identical to looping [`Self::predict`].
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>, SurrogateError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}
