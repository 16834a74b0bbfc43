//! The optimization loop: initialization, per-iteration surrogate refits and
//! candidate scoring, region-of-interest checks, gate updates, and trace
//! recording. Fully deterministic under a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{
    apply_gate, compute_beta, expected_improvement, select_next, stability_ratio, strategic_score,
    AcqConfig, AcquisitionError, Branch, ScoredCandidate,
};
use crate::archive::Archive;
use crate::gate::{fit_gate, gate_mean_map, gate_update, GateData, GateError, GateLabel, GateMode, GateModel};
use crate::metrics::{evaluate_trace, EvalContext, EvaluationReport, MetricsError};
use crate::problem::{lhs_sample, splitmix64, uniform_sample, BlackBox, Direction, ParameterSpace, ProblemError};
use crate::strategy::{f1, f3, roi_check, FocusEntry, FocusRegistry, RoiEvent, StrategyError};
use crate::surrogate::{fit_gp, FitConfig, GpModel, KernelSpec, SurrogateError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error("gate mode requires labels with at least one good and one bad sample")]
    LabelsRequired,
    #[error("label index {index} out of range for {count} initialization samples")]
    LabelIndex { index: usize, count: usize },
    #[error("duplicate label for initialization sample {0}")]
    DuplicateLabel(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    Lhs,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Sane,
    VanillaBo,
}

/// Full run configuration. The candidate grid itself comes from the
/// `ParameterSpace` handed to [`run`] (or from the black box when it exposes
/// a fixed candidate list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaneConfig {
    /// Iteration budget N.
    pub iterations: usize,
    /// Region-of-interest check interval n.
    pub check_interval: usize,
    pub init_count: usize,
    pub init_method: InitMethod,
    /// Per-iteration explore flags (the s_i schedule), 1-based: entry i-1
    /// governs iteration i. Must cover `iterations` entries in sane mode.
    pub switch_schedule: Vec<bool>,
    pub mode: Mode,
    pub gate_mode: GateMode,
    pub kernel: KernelSpec,
    pub gate_kernel: KernelSpec,
    pub direction: Direction,
    pub acq: AcqConfig,
    pub fit: FitConfig,
    /// Hyperparameters are re-estimated every this many iterations; between
    /// refits the model keeps its hyperparameters and only absorbs new data.
    pub refit_every: usize,
    pub seed: u64,
    /// Pins the initialization stream independently of the master seed, so a
    /// labeled init batch can be reused across a seed sweep.
    pub init_seed: Option<u64>,
    /// Record per-candidate scores each iteration (enables exact replay).
    pub record_details: bool,
}

impl Default for SaneConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            check_interval: 5,
            init_count: 10,
            init_method: InitMethod::Lhs,
            switch_schedule: switch_schedule_at(50, 26),
            mode: Mode::Sane,
            gate_mode: GateMode::None,
            kernel: KernelSpec::Rbf,
            gate_kernel: KernelSpec::Matern52,
            direction: Direction::Maximize,
            acq: AcqConfig::default(),
            fit: FitConfig::default(),
            refit_every: 1,
            seed: 0,
            init_seed: None,
            record_details: false,
        }
    }
}

/// Explore-phase schedule that switches on at iteration `switch_at`
/// (1-based): s_i = 0 for i < switch_at, 1 from there on.
pub fn switch_schedule_at(iterations: usize, switch_at: usize) -> Vec<bool> {
    (1..=iterations).map(|i| i >= switch_at).collect()
}

impl SaneConfig {
    fn validate(&self) -> Result<(), EngineError> {
        if self.check_interval == 0 {
            return Err(EngineError::InvalidConfig(
                "check_interval must be at least 1".into(),
            ));
        }
        if self.init_count < 2 {
            return Err(EngineError::InvalidConfig(
                "init_count must be at least 2 for a usable surrogate".into(),
            ));
        }
        if self.refit_every == 0 {
            return Err(EngineError::InvalidConfig(
                "refit_every must be at least 1".into(),
            ));
        }
        if self.mode == Mode::Sane && self.switch_schedule.len() < self.iterations {
            return Err(EngineError::InvalidConfig(format!(
                "switch_schedule covers {} iterations but {} are requested",
                self.switch_schedule.len(),
                self.iterations
            )));
        }
        Ok(())
    }
}

/// Deterministic sub-seed streams derived from the master seed. Public so
/// reference implementations (oracle tests) can reproduce the engine's fits
/// bit for bit; part of the determinism contract.
pub mod seeds {
    use super::splitmix64;

    fn mix(master: u64, stream: u64) -> u64 {
        splitmix64(master.wrapping_add(splitmix64(stream)))
    }

    /// Initialization sampling stream.
    pub fn init(master: u64) -> u64 {
        mix(master, 1)
    }

    /// Region-of-interest acceptance stream (one RNG for the whole run).
    pub fn roi(master: u64) -> u64 {
        mix(master, 2)
    }

    /// Gate fit stream.
    pub fn gate(master: u64) -> u64 {
        mix(master, 3)
    }

    /// Objective-surrogate fit stream for iteration `i` (1-based). The final
    /// post-run refit uses `i = iterations + 1`.
    pub fn fit(master: u64, iteration: usize) -> u64 {
        mix(master, 0x100 + iteration as u64)
    }
}

/// One initialization location, snapped onto the candidate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSample {
    pub candidate_index: usize,
    pub norm: Vec<f64>,
    pub orig: Vec<f64>,
}

/// Where the gate's labels come from.
#[derive(Clone, Copy)]
pub enum LabelSource<'a> {
    None,
    /// `(init batch position, label)` pairs, one per labeled sample.
    Fixed(&'a [(usize, GateLabel)]),
    /// Labeling rule applied to each evaluated init sample; `None` skips.
    Rule(&'a dyn Fn(&InitSample, f64) -> Option<GateLabel>),
}

/// Candidate locations in normalized and original coordinates, index-aligned.
pub type CandidatePool = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// The scoreable pool: every grid cell (or black-box-provided location) in
/// both coordinate systems, index-aligned.
pub fn candidate_grid(
    space: &ParameterSpace,
    bx: &dyn BlackBox,
) -> Result<CandidatePool, EngineError> {
    if bx.dim() != space.dim() {
        return Err(EngineError::InvalidConfig(format!(
            "black box has {} dimensions but the space has {}",
            bx.dim(),
            space.dim()
        )));
    }
    match bx.candidates() {
        Some(orig) => {
            let norm = orig
                .iter()
                .map(|x| space.to_norm(x))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((norm, orig.to_vec()))
        }
        None => {
            let norm = space.grid_norm();
            let orig = norm
                .iter()
                .map(|u| space.from_norm(u))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((norm, orig))
        }
    }
}

/// Draws the initialization batch (LHS or seeded uniform) and snaps each draw
/// to the nearest unoccupied candidate (L1, ties toward the lower index).
pub fn generate_init(
    cfg: &SaneConfig,
    space: &ParameterSpace,
    candidates_norm: &[Vec<f64>],
    candidates_orig: &[Vec<f64>],
) -> Result<Vec<InitSample>, EngineError> {
    if cfg.init_count > candidates_norm.len() {
        return Err(EngineError::InvalidConfig(format!(
            "init_count {} exceeds the {} available candidates",
            cfg.init_count,
            candidates_norm.len()
        )));
    }
    let seed = cfg.init_seed.unwrap_or_else(|| seeds::init(cfg.seed));
    let raw = match cfg.init_method {
        InitMethod::Lhs => lhs_sample(cfg.init_count, space, seed),
        InitMethod::Random => uniform_sample(cfg.init_count, space, seed),
    };
    let mut occupied = vec![false; candidates_norm.len()];
    let mut out = Vec::with_capacity(raw.len());
    for point in &raw {
        let mut best: Option<(usize, f64)> = None;
        for (idx, cand) in candidates_norm.iter().enumerate() {
            if occupied[idx] {
                continue;
            }
            let d = f1(point, cand);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((idx, d));
            }
        }
        let (idx, _) = best.expect("init_count <= candidate count leaves a free candidate");
        occupied[idx] = true;
        out.push(InitSample {
            candidate_index: idx,
            norm: candidates_norm[idx].clone(),
            orig: candidates_orig[idx].clone(),
        });
    }
    Ok(out)
}

/// Everything recorded about one engine iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    pub candidate_index: usize,
    pub norm: Vec<f64>,
    pub orig: Vec<f64>,
    pub raw_value: f64,
    /// Expected improvement of the chosen candidate.
    pub ei: f64,
    /// Stability ratio of the iteration's EI field.
    pub g: f64,
    /// Schedule phase in effect (always false in vanilla-BO mode).
    pub s_explore: bool,
    /// Strategic branch of the chosen candidate; `None` in vanilla-BO mode.
    pub branch: Option<Branch>,
    /// Strategic (pre-gate) score of the chosen candidate.
    pub strategic: f64,
    /// Gate constraint mean at the chosen candidate; `None` without a gate.
    pub c_bar: Option<f64>,
    /// Whether the gate penalty actually fired on the chosen candidate.
    pub penalty_applied: bool,
    /// Penalty scale in effect this iteration (1 without a gate).
    pub beta: f64,
    /// Incumbent internal maximum used for EI this iteration.
    pub y_best: f64,
    pub final_score: f64,
    /// Focus registry size at the end of the iteration (after any check).
    pub focus_count: usize,
}

/// Per-candidate scores for one iteration, kept only under `record_details`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub candidate_index: usize,
    pub ei: f64,
    /// Distance inputs to the strategic score; zero in vanilla-BO mode.
    pub f1: f64,
    pub f3: f64,
    pub strategic: f64,
    pub branch: Option<Branch>,
    pub c_bar: Option<f64>,
    pub final_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationDetail {
    pub iteration: usize,
    pub g: f64,
    pub s_explore: bool,
    pub beta: f64,
    pub y_best: f64,
    pub scores: Vec<CandidateScore>,
}

/// Complete record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: SaneConfig,
    pub candidates_norm: Vec<Vec<f64>>,
    pub candidates_orig: Vec<Vec<f64>>,
    pub archive: Archive,
    pub registry: FocusRegistry,
    pub records: Vec<IterationRecord>,
    pub roi_events: Vec<RoiEvent>,
    /// Iterations after which the hard gate refitted.
    pub gate_retrains: Vec<usize>,
    /// Per-candidate scoring details, one entry per iteration, only when
    /// `record_details` is set.
    pub details: Vec<IterationDetail>,
    /// Iteration at which the candidate pool ran dry, if it did.
    pub early_stop: Option<usize>,
    /// Post-run surrogate mean over the full candidate grid, in raw output
    /// units (sign restored for minimize problems).
    pub final_prediction: Vec<f64>,
    /// Post-run gate constraint mean over the full grid, when a gate ran.
    pub final_gate_map: Option<Vec<f64>>,
}

fn to_internal(raw: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Maximize => raw,
        Direction::Minimize => -raw,
    }
}

fn from_internal(internal: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Maximize => internal,
        Direction::Minimize => -internal,
    }
}

fn resolve_labels(
    labels: LabelSource,
    init: &[InitSample],
    init_values: &[f64],
) -> Result<Vec<Option<GateLabel>>, EngineError> {
    let mut resolved = vec![None; init.len()];
    match labels {
        LabelSource::None => {}
        LabelSource::Fixed(pairs) => {
            for &(index, label) in pairs {
                if index >= init.len() {
                    return Err(EngineError::LabelIndex {
                        index,
                        count: init.len(),
                    });
                }
                if resolved[index].is_some() {
                    return Err(EngineError::DuplicateLabel(index));
                }
                resolved[index] = Some(label);
            }
        }
        LabelSource::Rule(rule) => {
            for (slot, (sample, &value)) in resolved.iter_mut().zip(init.iter().zip(init_values)) {
                *slot = rule(sample, value);
            }
        }
    }
    Ok(resolved)
}

/// Runs the full loop and returns its trace. `labels` applies to the
/// initialization batch and is required (with both classes present) whenever
/// a gate mode other than none is requested in sane mode; vanilla-BO ignores
/// the gate entirely.
pub fn run(
    cfg: &SaneConfig,
    space: &ParameterSpace,
    bx: &dyn BlackBox,
    labels: LabelSource,
) -> Result<Trace, EngineError> {
    cfg.validate()?;
    let (candidates_norm, candidates_orig) = candidate_grid(space, bx)?;
    let init = generate_init(cfg, space, &candidates_norm, &candidates_orig)?;

    let mut archive = Archive::new();
    let mut sampled = vec![false; candidates_norm.len()];
    let mut init_values = Vec::with_capacity(init.len());
    for s in &init {
        let raw = bx.eval(&s.orig)?;
        init_values.push(raw);
        archive.push(
            s.norm.clone(),
            s.orig.clone(),
            raw,
            to_internal(raw, cfg.direction),
            true,
        );
        sampled[s.candidate_index] = true;
    }

    let best_init = archive.best().expect("init batch is non-empty");
    let mut registry = FocusRegistry::new(FocusEntry {
        archive_index: best_init.index,
        location: best_init.norm.clone(),
        value: best_init.internal,
    });

    let gate_active = cfg.mode == Mode::Sane && cfg.gate_mode != GateMode::None;
    let mut gate: Option<GateModel> = if gate_active {
        let resolved = resolve_labels(labels, &init, &init_values)?;
        let mut good = Vec::new();
        let mut bad = Vec::new();
        for (sample, label) in init.iter().zip(&resolved) {
            match label {
                Some(GateLabel::Good) => good.push(sample.norm.clone()),
                Some(GateLabel::Bad) => bad.push(sample.norm.clone()),
                None => {}
            }
        }
        if good.is_empty() || bad.is_empty() {
            return Err(EngineError::LabelsRequired);
        }
        Some(fit_gate(
            GateData { good, bad },
            cfg.gate_mode,
            cfg.gate_kernel,
            &cfg.fit,
            seeds::gate(cfg.seed),
        )?)
    } else {
        None
    };

    let mut roi_rng = ChaCha8Rng::seed_from_u64(seeds::roi(cfg.seed));
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut roi_events = Vec::new();
    let mut gate_retrains = Vec::new();
    let mut details = Vec::new();
    let mut early_stop = None;
    let mut model: Option<GpModel> = None;
    let mut last_check_len = archive.len();

    for iteration in 1..=cfg.iterations {
        let unexplored: Vec<usize> = (0..candidates_norm.len())
            .filter(|&i| !sampled[i])
            .collect();
        if unexplored.is_empty() {
            early_stop = Some(iteration);
            break;
        }

        let xs: Vec<Vec<f64>> = archive.samples().iter().map(|s| s.norm.clone()).collect();
        let ys: Vec<f64> = archive.samples().iter().map(|s| s.internal).collect();
        model = Some(match model.take() {
            Some(m) if (iteration - 1) % cfg.refit_every != 0 => m.with_data(&xs, &ys, &cfg.fit)?,
            _ => fit_gp(&xs, &ys, cfg.kernel, &cfg.fit, seeds::fit(cfg.seed, iteration))?,
        });
        let gp = model.as_ref().expect("model fitted above");

        let y_best = archive.best().expect("archive is non-empty").internal;
        let ei: Vec<f64> = unexplored
            .iter()
            .map(|&idx| {
                let pred = gp.predict(&candidates_norm[idx])?;
                Ok(expected_improvement(&pred, y_best, cfg.acq.xi))
            })
            .collect::<Result<_, EngineError>>()?;
        let g = stability_ratio(&ei, cfg.acq.delta);
        let s_explore = cfg.mode == Mode::Sane && cfg.switch_schedule[iteration - 1];

        let c_bars: Option<Vec<f64>> = match &gate {
            Some(gm) => {
                let locs: Vec<Vec<f64>> = unexplored
                    .iter()
                    .map(|&idx| candidates_norm[idx].clone())
                    .collect();
                Some(gate_mean_map(gm, &locs)?)
            }
            None => None,
        };

        let focus = registry.current().clone();
        let mut strategic_scores = Vec::with_capacity(unexplored.len());
        let mut distance_inputs = Vec::with_capacity(unexplored.len());
        for (pos, &idx) in unexplored.iter().enumerate() {
            let loc = &candidates_norm[idx];
            match cfg.mode {
                Mode::Sane => {
                    let d1 = f1(loc, &focus.location);
                    let d3 = f3(loc, &registry);
                    let (score, branch) =
                        strategic_score(ei[pos], d1, d3, g, s_explore, &cfg.acq);
                    strategic_scores.push((score, Some(branch)));
                    distance_inputs.push((d1, d3));
                }
                Mode::VanillaBo => {
                    strategic_scores.push((ei[pos], None));
                    distance_inputs.push((0.0, 0.0));
                }
            }
        }

        let beta = match &c_bars {
            Some(_) => {
                let raw: Vec<f64> = strategic_scores.iter().map(|(s, _)| *s).collect();
                compute_beta(&raw)
            }
            None => 1.0,
        };

        let scored: Vec<ScoredCandidate> = unexplored
            .iter()
            .enumerate()
            .map(|(pos, &idx)| {
                let (strategic, branch) = strategic_scores[pos];
                let c_bar = c_bars.as_ref().map(|c| c[pos]);
                let final_score = match c_bar {
                    Some(c) => apply_gate(strategic, c, beta, &cfg.acq),
                    None => strategic,
                };
                ScoredCandidate {
                    index: idx,
                    location: candidates_norm[idx].clone(),
                    ei: ei[pos],
                    strategic,
                    branch,
                    c_bar,
                    final_score,
                }
            })
            .collect();

        let chosen_pos = select_next(&scored)?;
        let chosen = &scored[chosen_pos];
        let idx = chosen.index;
        let raw = bx.eval(&candidates_orig[idx])?;
        archive.push(
            candidates_norm[idx].clone(),
            candidates_orig[idx].clone(),
            raw,
            to_internal(raw, cfg.direction),
            false,
        );
        sampled[idx] = true;

        if let Some(gm) = &gate {
            if gm.mode() == GateMode::Hard {
                gate = Some(gate_update(gm, &candidates_norm[idx])?);
                gate_retrains.push(iteration);
            }
        }

        if cfg.record_details {
            details.push(IterationDetail {
                iteration,
                g,
                s_explore,
                beta,
                y_best,
                scores: scored
                    .iter()
                    .enumerate()
                    .map(|(pos, c)| CandidateScore {
                        candidate_index: c.index,
                        ei: c.ei,
                        f1: distance_inputs[pos].0,
                        f3: distance_inputs[pos].1,
                        strategic: c.strategic,
                        branch: c.branch,
                        c_bar: c.c_bar,
                        final_score: c.final_score,
                    })
                    .collect(),
            });
        }

        let mut record = IterationRecord {
            iteration,
            candidate_index: idx,
            norm: candidates_norm[idx].clone(),
            orig: candidates_orig[idx].clone(),
            raw_value: raw,
            ei: chosen.ei,
            g,
            s_explore,
            branch: chosen.branch,
            strategic: chosen.strategic,
            c_bar: chosen.c_bar,
            penalty_applied: chosen.c_bar.is_some_and(|c| c < 0.0),
            beta,
            y_best,
            final_score: chosen.final_score,
            focus_count: registry.len(),
        };

        if cfg.mode == Mode::Sane && iteration % cfg.check_interval == 0 {
            let event = roi_check(&archive, &mut registry, last_check_len, iteration, &mut roi_rng);
            last_check_len = archive.len();
            roi_events.push(event);
            record.focus_count = registry.len();
        }
        records.push(record);
    }

    let xs: Vec<Vec<f64>> = archive.samples().iter().map(|s| s.norm.clone()).collect();
    let ys: Vec<f64> = archive.samples().iter().map(|s| s.internal).collect();
    let final_model = fit_gp(
        &xs,
        &ys,
        cfg.kernel,
        &cfg.fit,
        seeds::fit(cfg.seed, cfg.iterations + 1),
    )?;
    let final_prediction = candidates_norm
        .iter()
        .map(|loc| Ok(from_internal(final_model.predict(loc)?.mean, cfg.direction)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    let final_gate_map = match &gate {
        Some(gm) => Some(gate_mean_map(gm, &candidates_norm)?),
        None => None,
    };

    Ok(Trace {
        config: cfg.clone(),
        candidates_norm,
        candidates_orig,
        archive,
        registry,
        records,
        roi_events,
        gate_retrains,
        details,
        early_stop,
        final_prediction,
        final_gate_map,
    })
}

/// Ground-truth context for scoring sweep runs; every field is optional so
/// benchmark problems without a truth grid still aggregate best-value stats.
#[derive(Debug, Clone, Default)]
pub struct SweepEval {
    /// True values aligned with the candidate grid, raw output units.
    pub truth: Option<Vec<f64>>,
    /// Feasibility mask (constraint-mean grid) shared across strategies; when
    /// absent, each run's own final gate map is used.
    pub feasible: Option<Vec<f64>>,
    /// Known optima in normalized coordinates, for coverage metrics.
    pub optima_norm: Option<Vec<Vec<f64>>>,
    pub coverage_radius: f64,
    pub coverage_min_count: usize,
    pub histogram_bins: usize,
}

impl SweepEval {
    /// Coverage radius 0.2, three samples per region, 20 histogram bins.
    pub fn with_defaults() -> Self {
        Self {
            truth: None,
            feasible: None,
            optima_norm: None,
            coverage_radius: 0.2,
            coverage_min_count: 3,
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Trace,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub runs: Vec<SeedRun>,
    /// Mean best raw value across seeds.
    pub mean_best: f64,
    pub mean_mae_feasible: Option<f64>,
    pub mean_histogram_similarity: Option<f64>,
    pub mean_roi_coverage: Option<f64>,
    /// Per-region mean sample counts across seeds.
    pub mean_region_counts: Option<Vec<f64>>,
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_option(values: Vec<Option<f64>>) -> Option<f64> {
    let collected: Option<Vec<f64>> = values.into_iter().collect();
    collected.map(|v| mean_of(&v))
}

/// Runs the same configuration under each seed and aggregates the reports.
/// Aggregates are order-independent means.
pub fn run_seed_sweep(
    cfg: &SaneConfig,
    space: &ParameterSpace,
    bx: &dyn BlackBox,
    seeds_list: &[u64],
    eval: &SweepEval,
    labels: LabelSource,
) -> Result<SweepSummary, EngineError> {
    if seeds_list.is_empty() {
        return Err(EngineError::InvalidConfig("seed list is empty".into()));
    }
    let mut runs = Vec::with_capacity(seeds_list.len());
    for &seed in seeds_list {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = seed;
        let trace = run(&run_cfg, space, bx, labels)?;
        let ctx = EvalContext {
            truth: eval.truth.as_deref(),
            feasible_override: eval.feasible.as_deref(),
            optima: eval.optima_norm.as_deref(),
            radius: eval.coverage_radius,
            min_count: eval.coverage_min_count,
            bins: eval.histogram_bins,
        };
        let report = evaluate_trace(&trace, &ctx)?;
        runs.push(SeedRun {
            seed,
            trace,
            report,
        });
    }

    let mean_best = mean_of(&runs.iter().map(|r| r.report.best_raw).collect::<Vec<_>>());
    let mean_mae_feasible = mean_option(runs.iter().map(|r| r.report.mae_feasible).collect());
    let mean_histogram_similarity =
        mean_option(runs.iter().map(|r| r.report.histogram_similarity).collect());
    let mean_roi_coverage = mean_option(runs.iter().map(|r| r.report.roi_coverage).collect());
    let mean_region_counts = runs
        .iter()
        .map(|r| r.report.region_counts.as_ref())
        .collect::<Option<Vec<_>>>()
        .map(|per_run| {
            let regions = per_run[0].len();
            (0..regions)
                .map(|i| mean_of(&per_run.iter().map(|c| c[i] as f64).collect::<Vec<_>>()))
                .collect()
        });

    Ok(SweepSummary {
        runs,
        mean_best,
        mean_mae_feasible,
        mean_histogram_similarity,
        mean_roi_coverage,
        mean_region_counts,
    })
}
