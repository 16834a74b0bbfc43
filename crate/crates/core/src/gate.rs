//! Human-knowledge gate: good/bad labels on the initialization batch become
//! a feasibility surrogate.
//!
//! Each labeled location gets a constraint target `c = d_if - d_f`, the mean
//! L1 distance to the bad-labeled locations minus the mean L1 distance to the
//! good-labeled ones; positive means "closer to good experience". A GP
//! regression over those targets supplies the per-candidate mean `c_bar` that
//! the acquisition penalty consumes. In hard mode every newly selected sample
//! is auto-labeled against the fixed initial sets and the regression refits;
//! in relaxed mode the model fitted at initialization never changes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::strategy::f1;
use crate::surrogate::{fit_gp, FitConfig, GpModel, KernelSpec, SurrogateError};

#[derive(Debug, Error)]
pub enum GateError {
    #[error("gate requires at least one good and one bad labeled location")]
    Inactive,
    #[error("labeled location has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// How strongly human labels steer the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    /// No gate: scores pass through unpenalized.
    None,
    /// Fitted once on the labeled initialization batch, never updated.
    Relaxed,
    /// Auto-labels every selected sample against the fixed initial sets and
    /// refits after each iteration.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateLabel {
    Good,
    Bad,
}

/// The human-labeled initialization locations, normalized space. These sets
/// stay fixed for the whole run; hard-mode additions only extend the
/// regression training data.
#[derive(Debug, Clone, PartialEq)]
pub struct GateData {
    pub good: Vec<Vec<f64>>,
    pub bad: Vec<Vec<f64>>,
}

impl GateData {
    fn validate(&self) -> Result<usize, GateError> {
        if self.good.is_empty() || self.bad.is_empty() {
            return Err(GateError::Inactive);
        }
        let dim = self.good[0].len();
        for loc in self.good.iter().chain(&self.bad) {
            if loc.len() != dim {
                return Err(GateError::DimensionMismatch {
                    expected: dim,
                    got: loc.len(),
                });
            }
        }
        Ok(dim)
    }
}

fn mean_l1(x: &[f64], set: &[Vec<f64>]) -> f64 {
    set.iter().map(|s| f1(x, s)).sum::<f64>() / set.len() as f64
}

/// Constraint target at `x`: mean L1 distance to bad locations minus mean L1
/// distance to good locations. Requires both label classes.
pub fn constraint_value(x: &[f64], data: &GateData) -> Result<f64, GateError> {
    let dim = data.validate()?;
    if x.len() != dim {
        return Err(GateError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    Ok(mean_l1(x, &data.bad) - mean_l1(x, &data.good))
}

/// Feasibility surrogate: fixed labeled sets plus the (possibly grown)
/// regression training pairs and their fitted GP.
#[derive(Debug, Clone)]
pub struct GateModel {
    mode: GateMode,
    data: GateData,
    train_x: Vec<Vec<f64>>,
    train_c: Vec<f64>,
    kernel: KernelSpec,
    fit: FitConfig,
    seed: u64,
    surrogate: GpModel,
}

/// Fits the gate on the labeled initialization batch: every labeled location
/// becomes a training pair with its constraint target.
pub fn fit_gate(
    data: GateData,
    mode: GateMode,
    kernel: KernelSpec,
    fit: &FitConfig,
    seed: u64,
) -> Result<GateModel, GateError> {
    data.validate()?;
    let train_x: Vec<Vec<f64>> = data.good.iter().chain(&data.bad).cloned().collect();
    let train_c = train_x
        .iter()
        .map(|x| constraint_value(x, &data))
        .collect::<Result<Vec<_>, _>>()?;
    let surrogate = fit_gp(&train_x, &train_c, kernel, fit, seed)?;
    Ok(GateModel {
        mode,
        data,
        train_x,
        train_c,
        kernel,
        fit: fit.clone(),
        seed,
        surrogate,
    })
}

/// Predictive constraint mean at each candidate, aligned with the input.
pub fn gate_mean_map(model: &GateModel, candidates: &[Vec<f64>]) -> Result<Vec<f64>, GateError> {
    candidates
        .iter()
        .map(|c| Ok(model.surrogate.predict(c)?.mean))
        .collect()
}

/// Hard mode: auto-label the new location against the fixed initial sets,
/// append the pair, refit. Relaxed and none modes return the model unchanged.
pub fn gate_update(model: &GateModel, new_location: &[f64]) -> Result<GateModel, GateError> {
    match model.mode {
        GateMode::None | GateMode::Relaxed => Ok(model.clone()),
        GateMode::Hard => {
            let c = constraint_value(new_location, &model.data)?;
            let mut train_x = model.train_x.clone();
            let mut train_c = model.train_c.clone();
            train_x.push(new_location.to_vec());
            train_c.push(c);
            let surrogate = fit_gp(&train_x, &train_c, model.kernel, &model.fit, model.seed)?;
            Ok(GateModel {
                mode: model.mode,
                data: model.data.clone(),
                train_x,
                train_c,
                kernel: model.kernel,
                fit: model.fit.clone(),
                seed: model.seed,
                surrogate,
            })
        }
    }
}

impl GateModel {
    pub fn mode(&self) -> GateMode {
        self.mode
    }

    pub fn data(&self) -> &GateData {
        &self.data
    }

    pub fn training_pairs(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.train_x
            .iter()
            .map(Vec::as_slice)
            .zip(self.train_c.iter().copied())
    }

    pub fn train_len(&self) -> usize {
        self.train_x.len()
    }
}
