//! Candidate scoring: expected improvement, the stability ratio, the
//! strategic cost transform, and the knowledge-gate penalty.
//!
//! Scoring is maximization-space throughout. Per iteration the engine feeds
//! every unexplored candidate through [`expected_improvement`], derives the
//! stability ratio `g` of that EI field, transforms each candidate with
//! [`strategic_score`], optionally penalizes gate-infeasible candidates via
//! [`apply_gate`], and picks the winner with [`select_next`].

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::surrogate::Prediction;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AcquisitionError {
    #[error("no unexplored candidates remain")]
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcqConfig {
    /// Expected-improvement exploration margin.
    pub xi: f64,
    /// Stabilizer added to the stability ratio's numerator and denominator.
    pub delta: f64,
    /// Stability threshold at and above which search localizes.
    pub alpha: f64,
    /// Gate penalty strength.
    pub penalty_p: f64,
    /// Guard against division by zero in the exploitative branch.
    pub eps_div: f64,
}

impl Default for AcqConfig {
    fn default() -> Self {
        Self {
            xi: 0.01,
            delta: 1e-5,
            alpha: 0.9,
            penalty_p: 1000.0,
            eps_div: 1e-8,
        }
    }
}

/// Which strategic branch scored a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Exploit,
    Explore,
    Localized,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Exploit => "exploit",
            Branch::Explore => "explore",
            Branch::Localized => "localized",
        }
    }
}

/// Closed-form expected improvement over the incumbent, with margin `xi`.
/// Zero when the predictive deviation is zero; never negative.
pub fn expected_improvement(pred: &Prediction, y_best: f64, xi: f64) -> f64 {
    let sigma = pred.variance.max(0.0).sqrt();
    if sigma == 0.0 {
        return 0.0;
    }
    let improve = pred.mean - y_best - xi;
    let z = improve / sigma;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (improve * normal.cdf(z) + sigma * normal.pdf(z)).max(0.0)
}

/// Stability ratio of an EI field: `(max + delta) / (sum + delta)`. Near 1
/// when a single candidate dominates (the field has stabilized), near `1/n`
/// when improvement is spread evenly.
pub fn stability_ratio(ei: &[f64], delta: f64) -> f64 {
    debug_assert!(!ei.is_empty(), "stability ratio over an empty EI field");
    if ei.is_empty() {
        return 1.0;
    }
    let max = ei.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ei.iter().sum();
    (max + delta) / (sum + delta)
}

/// Strategic transform of a candidate's EI given its distance to the current
/// focus (`f1`), its mean distance to previous foci (`f3`), the stability
/// ratio `g`, and the schedule phase (`s_explore` = the s_i = 1 phase).
pub fn strategic_score(
    ei: f64,
    f1: f64,
    f3: f64,
    g: f64,
    s_explore: bool,
    cfg: &AcqConfig,
) -> (f64, Branch) {
    if g >= cfg.alpha {
        (f3 - f1, Branch::Localized)
    } else if s_explore {
        (ei * (f1 + f3), Branch::Explore)
    } else {
        (ei / (f1 + f3 + cfg.eps_div), Branch::Exploit)
    }
}

/// Penalty scale: the decade ceiling of the largest positive score, so the
/// gate penalty dwarfs every legitimate score. 1 when no score is positive.
pub fn compute_beta(scores: &[f64]) -> f64 {
    let max_positive = scores.iter().copied().filter(|&s| s > 0.0).fold(0.0, f64::max);
    if max_positive > 0.0 {
        10f64.powf(max_positive.log10().ceil())
    } else {
        1.0
    }
}

/// Applies the knowledge-gate penalty: feasible candidates (`c_bar >= 0`)
/// pass through, infeasible ones pay `penalty_p * beta * c_bar` (negative).
pub fn apply_gate(score: f64, c_bar: f64, beta: f64, cfg: &AcqConfig) -> f64 {
    if c_bar >= 0.0 {
        score
    } else {
        score + cfg.penalty_p * beta * c_bar
    }
}

/// One fully scored candidate, as assembled by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    /// Index into the engine's candidate grid.
    pub index: usize,
    /// Normalized location.
    pub location: Vec<f64>,
    pub ei: f64,
    pub strategic: f64,
    /// `None` in vanilla-BO mode, where Eq-style branching is bypassed.
    pub branch: Option<Branch>,
    /// Gate constraint mean at the candidate; `None` without an active gate.
    pub c_bar: Option<f64>,
    pub final_score: f64,
}

/// Argmax over final scores; ties break toward the lowest candidate index.
/// Returns the position within `scored`.
pub fn select_next(scored: &[ScoredCandidate]) -> Result<usize, AcquisitionError> {
    let mut best: Option<usize> = None;
    for (pos, cand) in scored.iter().enumerate() {
        let score = if cand.final_score.is_nan() {
            f64::NEG_INFINITY
        } else {
            cand.final_score
        };
        let better = match best {
            None => true,
            Some(b) => {
                let bs = scored[b].final_score;
                let bs = if bs.is_nan() { f64::NEG_INFINITY } else { bs };
                score > bs || (score == bs && cand.index < scored[b].index)
            }
        };
        if better {
            best = Some(pos);
        }
    }
    best.ok_or(AcquisitionError::Exhausted)
}
