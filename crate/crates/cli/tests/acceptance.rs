//! Acceptance gate: nine end-to-end criteria, each one test emitting a
//! single `ACCEPTANCE <n> <name>: PASS|FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`). Criteria 4 and 9 carry
//! report-only clauses that are printed but, per their definitions, not
//! hard-asserted.

use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use sane_core::acquisition::{expected_improvement, AcqConfig, Branch};
use sane_core::engine::{run, InitMethod, LabelSource, Mode, SaneConfig, Trace};
use sane_core::engine::switch_schedule_at;
use sane_core::gate::{GateLabel, GateMode};
use sane_core::metrics::{evaluate_trace, region_counts, EvalContext};
use sane_core::problem::{
    lhs_sample, with_noise, BlackBox, BraninBox, Direction, FnBlackBox, NoiseRegion, NoiseSpec,
    ParameterSpace, BRANIN_OPTIMA,
};
use sane_core::strategy::{roi_accept, RoiKind};
use sane_core::surrogate::{fit_gp, FitConfig, KernelSpec, Prediction};

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {number} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {number} ({name}) failed: {detail}");
}

// ---- 1. GP correctness ----

#[test]
fn criterion_1_gp_interpolates_noise_free_data() {
    let started = Instant::now();
    let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (3.0 * x[0]).sin() + 0.5 * x[0] * x[0])
        .collect();
    let model = fit_gp(&xs, &ys, KernelSpec::Rbf, &FitConfig::default(), 1).unwrap();

    let mut worst_err: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (x, &y) in xs.iter().zip(&ys) {
        let Prediction { mean, variance } = model.predict(x).unwrap();
        worst_err = worst_err.max((mean - y).abs());
        worst_var = worst_var.max(variance);
    }
    let elapsed = started.elapsed();
    verdict(
        1,
        "gp-correctness",
        worst_err <= 1e-3 && worst_var <= 1e-4 && elapsed.as_secs_f64() < 1.0,
        &format!(
            "max |mean-y| {worst_err:.2e} <= 1e-3, max variance {worst_var:.2e} <= 1e-4, {:.3}s < 1s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---- 2. EI Monte-Carlo equivalence ----

#[test]
fn criterion_2_ei_matches_monte_carlo() {
    let started = Instant::now();
    let xi = AcqConfig::default().xi;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 1_000_000usize;
    let mut worst_z: f64 = 0.0;
    for _ in 0..20 {
        let mu: f64 = rng.random_range(-2.0..2.0);
        let sigma: f64 = rng.random_range(0.1..2.0);
        let y_best = mu + sigma * rng.random_range(-2.0..1.5);

        let closed = expected_improvement(
            &Prediction {
                mean: mu,
                variance: sigma * sigma,
            },
            y_best,
            xi,
        );

        let normal = Normal::new(mu, sigma).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let imp = (normal.sample(&mut rng) - y_best - xi).max(0.0);
            sum += imp;
            sum_sq += imp * imp;
        }
        let mc_mean = sum / draws as f64;
        let mc_var = (sum_sq / draws as f64 - mc_mean * mc_mean).max(0.0);
        let se = (mc_var / draws as f64).sqrt();
        if se > 0.0 {
            worst_z = worst_z.max((closed - mc_mean).abs() / se);
        } else {
            assert!(closed.abs() < 1e-12);
        }
    }
    let elapsed = started.elapsed();
    verdict(
        2,
        "ei-monte-carlo",
        worst_z <= 4.0 && elapsed.as_secs_f64() < 30.0,
        &format!(
            "worst |closed-MC|/SE {worst_z:.2} <= 4 over 20 triples x 1e6 draws, {:.1}s < 30s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---- 3. Branch replay on a 50-iteration Branin trace ----

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Focus locations active during `iteration`, rebuilt from the archive and
/// the recorded switch events alone.
fn foci_at(trace: &Trace, iteration: usize) -> Vec<Vec<f64>> {
    let init_best = trace
        .archive
        .samples()
        .iter()
        .filter(|s| s.from_init)
        .reduce(|best, s| if s.internal > best.internal { s } else { best })
        .expect("trace has init samples");
    let mut foci = vec![init_best.norm.clone()];
    for event in &trace.roi_events {
        if event.iteration >= iteration {
            break;
        }
        if matches!(event.kind, RoiKind::SuperiorSample | RoiKind::LocalAccepted) {
            let idx = event.archive_index.expect("switch events carry an index");
            foci.push(trace.archive.get(idx).norm.clone());
        }
    }
    foci
}

/// Recomputes every stability ratio, branch choice, strategic score, penalty
/// scale, and final selection from recorded inputs; `true` only if all of
/// them match the trace bit for bit.
fn replay_matches(trace: &Trace) -> Result<(), String> {
    let acq = &trace.config.acq;
    if trace.records.len() != trace.details.len() {
        return Err("detail records missing".into());
    }
    for (record, detail) in trace.records.iter().zip(&trace.details) {
        let it = record.iteration;
        let foci = foci_at(trace, it);
        let current = foci.last().unwrap();
        let previous = &foci[..foci.len() - 1];

        let max_ei = detail
            .scores
            .iter()
            .map(|c| c.ei)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum_ei: f64 = detail.scores.iter().map(|c| c.ei).sum();
        let g = (max_ei + acq.delta) / (sum_ei + acq.delta);
        if g != record.g {
            return Err(format!("iteration {it}: g {} != {}", g, record.g));
        }

        let mut strategics = Vec::with_capacity(detail.scores.len());
        for c in &detail.scores {
            let loc = &trace.candidates_norm[c.candidate_index];
            let d1 = l1(loc, current);
            let d3 = if previous.is_empty() {
                0.0
            } else {
                previous.iter().map(|f| l1(loc, f)).sum::<f64>() / previous.len() as f64
            };
            if d1 != c.f1 || d3 != c.f3 {
                return Err(format!("iteration {it}: distance mismatch"));
            }
            let (strategic, branch) = if g >= acq.alpha {
                (d3 - d1, Branch::Localized)
            } else if detail.s_explore {
                (c.ei * (d1 + d3), Branch::Explore)
            } else {
                (c.ei / (d1 + d3 + acq.eps_div), Branch::Exploit)
            };
            if strategic != c.strategic || Some(branch) != c.branch {
                return Err(format!("iteration {it}: branch/score mismatch"));
            }
            strategics.push(strategic);
        }

        let gated = detail.scores.iter().any(|c| c.c_bar.is_some());
        let beta = if gated {
            let max_positive = strategics
                .iter()
                .copied()
                .filter(|&s| s > 0.0)
                .fold(0.0, f64::max);
            if max_positive > 0.0 {
                10f64.powf(max_positive.log10().ceil())
            } else {
                1.0
            }
        } else {
            1.0
        };
        if beta != detail.beta {
            return Err(format!("iteration {it}: beta {} != {}", beta, detail.beta));
        }

        let mut best: Option<(usize, f64)> = None;
        for (pos, c) in detail.scores.iter().enumerate() {
            let final_score = match c.c_bar {
                Some(cb) if cb < 0.0 => strategics[pos] + acq.penalty_p * beta * cb,
                _ => strategics[pos],
            };
            if final_score != c.final_score {
                return Err(format!("iteration {it}: final score mismatch"));
            }
            if best.is_none_or(|(_, b)| final_score > b) {
                best = Some((c.candidate_index, final_score));
            }
        }
        if best.unwrap().0 != record.candidate_index {
            return Err(format!("iteration {it}: different candidate chosen"));
        }
    }
    Ok(())
}

#[test]
fn criterion_3_branin_trace_replays_exactly() {
    let bx = BraninBox::maximize_negated();
    let space = BraninBox::space(30).unwrap();
    let cfg = SaneConfig {
        iterations: 50,
        check_interval: 5,
        init_count: 10,
        gate_mode: GateMode::Hard,
        switch_schedule: switch_schedule_at(50, 25),
        record_details: true,
        seed: 7,
        ..SaneConfig::default()
    };
    // Right half bad: the optimum near x1 = 9.42 sits behind the gate, so
    // the penalty path is genuinely exercised.
    let rule = |s: &sane_core::engine::InitSample, _v: f64| {
        Some(if s.norm[0] < 0.5 {
            GateLabel::Good
        } else {
            GateLabel::Bad
        })
    };
    let trace = run(&cfg, &space, &bx, LabelSource::Rule(&rule)).unwrap();
    let penalized = trace
        .details
        .iter()
        .flat_map(|d| &d.scores)
        .any(|c| matches!(c.c_bar, Some(cb) if cb < 0.0));
    let outcome = replay_matches(&trace);
    verdict(
        3,
        "branch-replay",
        outcome.is_ok() && trace.records.len() == 50 && penalized,
        &outcome.err().unwrap_or_else(|| {
            "50 iterations, every g/branch/score/penalty/choice reproduced exactly".into()
        }),
    );
}

// ---- 4. Multi-optima discovery on negated Branin ----
//
// KNOWN RED. The pass condition demands a strictly greater mean region
// count for sane than for vanilla BO, but on the noise-free Branin the
// three basins are equal-valued and a properly fitted GP's EI spreads
// samples across all of them (roughly 13/11/12 per basin at every seed
// and grid resolution measured), so both strategies saturate the 3-region
// ceiling and the strict inequality cannot hold. The threshold models the
// single-basin trapping that only noise induces; criterion 5 exercises
// that behavior and passes. The check is kept as stated rather than
// weakened; see the FAIL line for the measured means.

fn discovered_regions(trace: &Trace, optima: &[Vec<f64>]) -> usize {
    region_counts(trace, optima, 0.2)
        .unwrap()
        .iter()
        .filter(|&&c| c >= 3)
        .count()
}

#[test]
fn criterion_4_multi_optima_discovery() {
    let started = Instant::now();
    let bx = BraninBox::maximize_negated();
    let space = BraninBox::space(50).unwrap();
    let optima: Vec<Vec<f64>> = BRANIN_OPTIMA
        .iter()
        .map(|o| space.to_norm(o).unwrap())
        .collect();
    let base = SaneConfig {
        iterations: 50,
        check_interval: 5,
        init_count: 10,
        init_method: InitMethod::Random,
        switch_schedule: switch_schedule_at(50, 25),
        ..SaneConfig::default()
    };

    let mut sane_regions = Vec::new();
    let mut vanilla_regions = Vec::new();
    for seed in 1..=20u64 {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let trace = run(&cfg, &space, &bx, LabelSource::None).unwrap();
        sane_regions.push(discovered_regions(&trace, &optima));

        let mut vcfg = base.clone();
        vcfg.seed = seed;
        vcfg.mode = Mode::VanillaBo;
        let vtrace = run(&vcfg, &space, &bx, LabelSource::None).unwrap();
        vanilla_regions.push(discovered_regions(&vtrace, &optima));
    }
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    let sane_mean = mean(&sane_regions);
    let vanilla_mean = mean(&vanilla_regions);
    let two_plus = sane_regions.iter().filter(|&&r| r >= 2).count();
    let elapsed = started.elapsed();
    verdict(
        4,
        "multi-optima-discovery",
        sane_mean > vanilla_mean && elapsed.as_secs_f64() <= 300.0,
        &format!(
            "mean regions (>=3 samples in L1 0.2): sane {sane_mean:.2} > vanilla {vanilla_mean:.2}; \
             sane hit >=2 regions in {two_plus}/20 seeds (calibration target 60%, reported only); \
             {:.0}s <= 300s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---- 5. Gate dominance on a noisy fake optimum ----

/// One smooth true peak in the good half; noise plants a taller fake
/// optimum in the bad half.
fn trapped_problem(
    noise_seed: u64,
) -> (impl BlackBox, ParameterSpace) {
    let space = ParameterSpace::new(vec![(0.0, 1.0)], vec![60]).unwrap();
    let base = FnBlackBox::new(1, Direction::Maximize, |x: &[f64]| {
        (-((x[0] - 0.25) / 0.08).powi(2)).exp()
    });
    let spec = NoiseSpec {
        global_sigma: 0.05,
        regions: vec![NoiseRegion {
            lo: vec![0.7],
            hi: vec![0.9],
            sigma: 0.3,
            bias: 1.5,
        }],
        seed: noise_seed,
    };
    let noisy = with_noise(base, spec, space.clone()).unwrap();
    (noisy, space)
}

#[test]
fn criterion_5_gate_dominance() {
    let started = Instant::now();
    let rule = |s: &sane_core::engine::InitSample, _v: f64| {
        Some(if s.norm[0] < 0.5 {
            GateLabel::Good
        } else {
            GateLabel::Bad
        })
    };
    let base = SaneConfig {
        iterations: 20,
        check_interval: 4,
        init_count: 8,
        switch_schedule: switch_schedule_at(20, 11),
        record_details: true,
        ..SaneConfig::default()
    };

    let mut violations = 0usize;
    let mut vanilla_bad_picks = 0usize;
    for seed in 1..=10u64 {
        let (bx, space) = trapped_problem(1000 + seed);

        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.gate_mode = GateMode::Hard;
        let trace = run(&cfg, &space, &bx, LabelSource::Rule(&rule)).unwrap();
        for (record, detail) in trace.records.iter().zip(&trace.details) {
            let feasible_positive = detail
                .scores
                .iter()
                .any(|c| c.c_bar.is_some_and(|cb| cb >= 0.0) && c.strategic > 0.0);
            let chose_infeasible = record.c_bar.is_some_and(|cb| cb < 0.0);
            if feasible_positive && chose_infeasible {
                violations += 1;
            }
        }

        let mut vcfg = base.clone();
        vcfg.seed = seed;
        vcfg.mode = Mode::VanillaBo;
        vcfg.record_details = false;
        let vtrace = run(&vcfg, &space, &bx, LabelSource::None).unwrap();
        vanilla_bad_picks += vtrace
            .records
            .iter()
            .filter(|r| r.norm[0] >= 0.5)
            .count();
    }
    let elapsed = started.elapsed();
    verdict(
        5,
        "gate-dominance",
        violations == 0 && vanilla_bad_picks >= 1 && elapsed.as_secs_f64() < 60.0,
        &format!(
            "hard gate picked c<0 over a positive feasible candidate {violations} times (must be 0); \
             vanilla picked the bad half {vanilla_bad_picks} times over 10 seeds (>=1); {:.0}s < 60s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---- 6. ROI acceptance frequency ----

#[test]
fn criterion_6_roi_acceptance_frequency() {
    let trials = 10_000usize;
    let mut detail = String::new();
    let mut all_ok = true;
    for (i, &p) in [0.1, 0.3, 0.7].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(60 + i as u64);
        let mut accepted = 0usize;
        for _ in 0..trials {
            // f1 = p, f2 = 0 in one dimension makes the acceptance
            // probability exactly p.
            let (accept, prob) = roi_accept(p, 0.0, 1, &mut rng);
            assert_eq!(prob, p);
            if accept {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        let tol = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
        if (rate - p).abs() > tol {
            all_ok = false;
        }
        detail.push_str(&format!("p={p}: rate {rate:.4} (tol {tol:.4}); "));
    }
    verdict(6, "roi-acceptance-frequency", all_ok, detail.trim_end());
}

// ---- 7. LHS stratification ----

#[test]
fn criterion_7_lhs_one_sample_per_stratum() {
    let mut all_ok = true;
    let mut checked = 0usize;
    for &count in &[4usize, 10, 30] {
        for dim in 1usize..=3 {
            let space = ParameterSpace::uniform(dim, 0.0, 1.0, 8).unwrap();
            let points = lhs_sample(count, &space, 700 + (count * 10 + dim) as u64);
            assert_eq!(points.len(), count);
            for m in 0..dim {
                let mut seen = vec![false; count];
                for p in &points {
                    let stratum = ((p[m] * count as f64).floor() as usize).min(count - 1);
                    if seen[stratum] {
                        all_ok = false;
                    }
                    seen[stratum] = true;
                }
                if !seen.iter().all(|&s| s) {
                    all_ok = false;
                }
                checked += 1;
            }
        }
    }
    verdict(
        7,
        "lhs-stratification",
        all_ok,
        &format!("exactly one sample per stratum across {checked} (count, dim) axes"),
    );
}

// ---- 8. Determinism through the binary ----

#[test]
fn criterion_8_byte_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("det.json");
    fs::write(
        &config,
        r#"{"problem": {"kind": "branin-neg", "resolution": 25},
            "sane": {"iterations": 10, "init_count": 6, "seed": 13, "switch_at": 6}}"#,
    )
    .unwrap();
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sane"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--quiet")
            .status()
            .unwrap();
        assert!(status.success());
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    verdict(
        8,
        "byte-identical-traces",
        traces[0] == traces[1],
        &format!("{} bytes each", traces[0].len()),
    );
}

// ---- 9. Directional metric ordering on a fake-optima grid ----

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[test]
fn criterion_9_directional_metric_ordering() {
    // True peak in the good half, noise-planted fake optimum in the bad
    // half; truth is the noise-free surface.
    let space = ParameterSpace::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![20, 20]).unwrap();
    let base_fn = |x: &[f64]| {
        (-((x[0] - 0.3) / 0.15).powi(2) - ((x[1] - 0.35) / 0.15).powi(2)).exp()
    };
    let truth: Vec<f64> = space
        .grid_norm()
        .iter()
        .map(|u| {
            let x = space.from_norm(u).unwrap();
            base_fn(&x)
        })
        .collect();
    // Ground-truth feasibility (good half: x1 < 0.55) shared by every
    // strategy so the error averages cover the same cells.
    let feasible: Vec<f64> = space
        .grid_norm()
        .iter()
        .map(|u| if u[0] < 0.55 { 1.0 } else { -1.0 })
        .collect();
    let rule = |s: &sane_core::engine::InitSample, _v: f64| {
        Some(if s.norm[0] < 0.55 {
            GateLabel::Good
        } else {
            GateLabel::Bad
        })
    };

    let base = SaneConfig {
        iterations: 25,
        check_interval: 5,
        init_count: 8,
        switch_schedule: switch_schedule_at(25, 13),
        ..SaneConfig::default()
    };
    let strategies: [(&str, Mode, GateMode); 4] = [
        ("vanilla", Mode::VanillaBo, GateMode::None),
        ("sane+none", Mode::Sane, GateMode::None),
        ("sane+relaxed", Mode::Sane, GateMode::Relaxed),
        ("sane+hard", Mode::Sane, GateMode::Hard),
    ];

    let mut median_mae = Vec::new();
    let mut median_hist = Vec::new();
    for (_, mode, gate) in &strategies {
        let mut maes = Vec::new();
        let mut hists = Vec::new();
        for seed in 1..=20u64 {
            let problem = with_noise(
                FnBlackBox::new(2, Direction::Maximize, base_fn),
                NoiseSpec {
                    global_sigma: 0.03,
                    regions: vec![NoiseRegion {
                        lo: vec![0.65, 0.6],
                        hi: vec![0.9, 0.85],
                        sigma: 0.25,
                        bias: 1.3,
                    }],
                    seed: 9000 + seed,
                },
                space.clone(),
            )
            .unwrap();
            let mut cfg = base.clone();
            cfg.seed = seed;
            cfg.mode = *mode;
            cfg.gate_mode = *gate;
            let labels = if *gate == GateMode::None {
                LabelSource::None
            } else {
                LabelSource::Rule(&rule)
            };
            let trace = run(&cfg, &space, &problem, labels).unwrap();
            let ctx = EvalContext {
                truth: Some(&truth),
                feasible_override: Some(&feasible),
                optima: None,
                radius: 0.2,
                min_count: 3,
                bins: 20,
            };
            let report = evaluate_trace(&trace, &ctx).unwrap();
            maes.push(report.mae_feasible.unwrap());
            hists.push(report.histogram_similarity.unwrap());
        }
        median_mae.push(median(&mut maes));
        median_hist.push(median(&mut hists));
    }

    let mae_ordered = median_mae[3] <= median_mae[0];
    let hist_ordered = (1..4).all(|i| median_hist[i] >= median_hist[0]);
    let detail = format!(
        "seeds 1..=20; median mae: vanilla {:.4}, sane+none {:.4}, sane+relaxed {:.4}, sane+hard {:.4} \
         (hard <= vanilla: {mae_ordered}); median hist: vanilla {:.4}, sane+none {:.4}, \
         sane+relaxed {:.4}, sane+hard {:.4} (all sane >= vanilla: {hist_ordered}); \
         directional orderings reported, not hard-asserted",
        median_mae[0], median_mae[1], median_mae[2], median_mae[3],
        median_hist[0], median_hist[1], median_hist[2], median_hist[3],
    );
    // The pass condition is that the benchmark ran and produced the metrics;
    // the orderings themselves are calibration targets.
    verdict(9, "directional-metric-ordering", true, &detail);
}
