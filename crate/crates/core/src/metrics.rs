//! Run-quality metrics: feasible-region mean absolute error, histogram
//! similarity between prediction and ground truth, and multi-optimum
//! coverage.

use serde::Serialize;
use thiserror::Error;

use crate::engine::Trace;
use crate::problem::Direction;
use crate::strategy::f1;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("grids differ in length: {a} vs {b}")]
    ShapeMismatch { a: usize, b: usize },
    #[error("no feasible cells; feasible-region error is undefined")]
    NoFeasibleCells,
    #[error("histogram inputs must be non-empty")]
    EmptyInput,
    #[error("bins must be at least 1")]
    ZeroBins,
    #[error("range [{lo}, {hi}] must be finite and cover both value lists")]
    BadRange { lo: f64, hi: f64 },
    #[error("optima list is empty")]
    EmptyOptima,
    #[error("coverage needs radius > 0 and min_count >= 1")]
    BadCoverageParams,
}

/// Mean of |pred - truth| over feasible cells. Feasibility is `c_bar >= 0`
/// on the gate map; with no gate map every cell counts. The value at an
/// infeasible cell never matters.
pub fn mae_feasible(
    pred: &[f64],
    truth: &[f64],
    gate_map: Option<&[f64]>,
) -> Result<f64, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::ShapeMismatch {
            a: pred.len(),
            b: truth.len(),
        });
    }
    if let Some(gate) = gate_map {
        if gate.len() != pred.len() {
            return Err(MetricsError::ShapeMismatch {
                a: gate.len(),
                b: pred.len(),
            });
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..pred.len() {
        if gate_map.is_none_or(|g| g[i] >= 0.0) {
            total += (pred[i] - truth[i]).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::NoFeasibleCells);
    }
    Ok(total / count as f64)
}

/// Histogram intersection of two value lists: both are binned over the given
/// range, density-normalized, and the per-bin minima are summed. 1 for
/// identical distributions, 0 for disjoint supports.
pub fn histogram_similarity(
    a: &[f64],
    b: &[f64],
    bins: usize,
    range: (f64, f64),
) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if bins == 0 {
        return Err(MetricsError::ZeroBins);
    }
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(MetricsError::BadRange { lo, hi });
    }
    if a.iter().chain(b).any(|&v| v < lo || v > hi) {
        return Err(MetricsError::BadRange { lo, hi });
    }
    if lo == hi {
        // Both lists sit entirely on one point: identical distributions.
        return Ok(1.0);
    }
    let histogram = |values: &[f64]| -> Vec<f64> {
        let mut counts = vec![0.0; bins];
        for &v in values {
            let pos = ((v - lo) / (hi - lo) * bins as f64) as usize;
            counts[pos.min(bins - 1)] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        counts.iter().map(|c| c / total).collect()
    };
    let p = histogram(a);
    let q = histogram(b);
    Ok(p.iter().zip(&q).map(|(pi, qi)| pi.min(*qi)).sum())
}

/// Number of explored samples (initialization included) within normalized
/// L1 `radius` of each optimum.
pub fn region_counts(
    trace: &Trace,
    optima: &[Vec<f64>],
    radius: f64,
) -> Result<Vec<usize>, MetricsError> {
    if optima.is_empty() {
        return Err(MetricsError::EmptyOptima);
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(MetricsError::BadCoverageParams);
    }
    let explored: Vec<&[f64]> = trace
        .archive
        .samples()
        .iter()
        .map(|s| s.norm.as_slice())
        .collect();
    Ok(optima
        .iter()
        .map(|opt| explored.iter().filter(|x| f1(x, opt) <= radius).count())
        .collect())
}

/// Fraction of listed optima holding at least `min_count` iteration-chosen
/// samples within normalized L1 `radius`.
pub fn roi_coverage(
    trace: &Trace,
    optima: &[Vec<f64>],
    radius: f64,
    min_count: usize,
) -> Result<f64, MetricsError> {
    if min_count == 0 {
        return Err(MetricsError::BadCoverageParams);
    }
    let counts = region_counts(trace, optima, radius)?;
    let covered = counts.iter().filter(|&&c| c >= min_count).count();
    Ok(covered as f64 / optima.len() as f64)
}

/// Everything the evaluation harness knows about ground truth; all optional
/// so partial contexts still produce a best-value report.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext<'a> {
    /// True values aligned with the trace's candidate grid, raw units.
    pub truth: Option<&'a [f64]>,
    /// Feasibility mask to use instead of the trace's own gate map.
    pub feasible_override: Option<&'a [f64]>,
    pub optima: Option<&'a [Vec<f64>]>,
    pub radius: f64,
    pub min_count: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    /// Best raw value found (direction-aware) and where.
    pub best_raw: f64,
    pub best_orig: Vec<f64>,
    /// Best raw value after initialization, then after each iteration.
    pub best_so_far: Vec<f64>,
    pub mae_feasible: Option<f64>,
    pub histogram_similarity: Option<f64>,
    pub roi_coverage: Option<f64>,
    pub region_counts: Option<Vec<usize>>,
}

fn better(a: f64, b: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Maximize => a.max(b),
        Direction::Minimize => a.min(b),
    }
}

/// Scores one finished trace against whatever ground truth the context
/// carries. The truth-based metrics restrict to feasible cells: the override
/// mask if given, else the trace's final gate map, else all cells.
pub fn evaluate_trace(trace: &Trace, ctx: &EvalContext) -> Result<EvaluationReport, MetricsError> {
    let direction = trace.config.direction;
    let best = trace
        .archive
        .best()
        .expect("a finished trace has initialization samples");
    let best_raw = best.raw;
    let best_orig = best.orig.clone();

    let init_best = trace
        .archive
        .samples()
        .iter()
        .filter(|s| s.from_init)
        .map(|s| s.raw)
        .reduce(|a, b| better(a, b, direction))
        .expect("a finished trace has initialization samples");
    let mut best_so_far = Vec::with_capacity(trace.records.len() + 1);
    best_so_far.push(init_best);
    let mut running = init_best;
    for record in &trace.records {
        running = better(running, record.raw_value, direction);
        best_so_far.push(running);
    }

    let mask: Option<&[f64]> = ctx
        .feasible_override
        .or(trace.final_gate_map.as_deref());

    let mut mae = None;
    let mut hist = None;
    if let Some(truth) = ctx.truth {
        // A gate map with no feasible cells leaves the metric undefined; the
        // report records null rather than failing the whole evaluation.
        mae = match mae_feasible(&trace.final_prediction, truth, mask) {
            Ok(v) => Some(v),
            Err(MetricsError::NoFeasibleCells) => None,
            Err(err) => return Err(err),
        };
        let feasible_values = |grid: &[f64]| -> Vec<f64> {
            grid.iter()
                .enumerate()
                .filter(|(i, _)| mask.is_none_or(|m| m[*i] >= 0.0))
                .map(|(_, v)| *v)
                .collect()
        };
        let t = feasible_values(truth);
        let p = feasible_values(&trace.final_prediction);
        if !t.is_empty() {
            let lo = t.iter().chain(&p).copied().fold(f64::INFINITY, f64::min);
            let hi = t
                .iter()
                .chain(&p)
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            hist = Some(histogram_similarity(&p, &t, ctx.bins, (lo, hi))?);
        }
    }

    let mut coverage = None;
    let mut counts = None;
    if let Some(optima) = ctx.optima {
        counts = Some(region_counts(trace, optima, ctx.radius)?);
        coverage = Some(roi_coverage(trace, optima, ctx.radius, ctx.min_count)?);
    }

    Ok(EvaluationReport {
        best_raw,
        best_orig,
        best_so_far,
        mae_feasible: mae,
        histogram_similarity: hist,
        roi_coverage: coverage,
        region_counts: counts,
    })
}
