//! Replay check: every recorded branch, stability ratio, penalty scale, and
//! selection must be reproduced exactly by recomputing from the recorded
//! per-candidate inputs (EI and constraint means) and the archived focus
//! history, without touching the surrogates again.

use sane_core::acquisition::Branch;
use sane_core::engine::{run, LabelSource, SaneConfig, Trace};
use sane_core::gate::{GateLabel, GateMode};
use sane_core::problem::{Direction, FnBlackBox, ParameterSpace};
use sane_core::strategy::RoiKind;

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn two_hills(x: &[f64]) -> f64 {
    let peak = |cx: f64, cy: f64, h: f64| {
        h * (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.02).exp()
    };
    peak(0.25, 0.3, 1.0) + peak(0.75, 0.7, 0.9)
}

/// Rebuilds the focus locations active during `iteration` from the trace's
/// archive and switch events.
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

fn replay(trace: &Trace) {
    let acq = &trace.config.acq;
    assert_eq!(trace.records.len(), trace.details.len());
    for (record, detail) in trace.records.iter().zip(&trace.details) {
        let foci = foci_at(trace, record.iteration);
        let current = foci.last().unwrap();
        let previous = &foci[..foci.len() - 1];

        let max_ei = detail
            .scores
            .iter()
            .map(|c| c.ei)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum_ei: f64 = detail.scores.iter().map(|c| c.ei).sum();
        let g = (max_ei + acq.delta) / (sum_ei + acq.delta);
        assert_eq!(g, record.g, "iteration {}: g mismatch", record.iteration);

        let mut strategics = Vec::with_capacity(detail.scores.len());
        for c in &detail.scores {
            let loc = &trace.candidates_norm[c.candidate_index];
            let d1 = l1(loc, current);
            let d3 = if previous.is_empty() {
                0.0
            } else {
                previous.iter().map(|f| l1(loc, f)).sum::<f64>() / previous.len() as f64
            };
            assert_eq!(d1, c.f1, "iteration {}: f1 mismatch", record.iteration);
            assert_eq!(d3, c.f3, "iteration {}: f3 mismatch", record.iteration);
            let (strategic, branch) = if g >= acq.alpha {
                (d3 - d1, Branch::Localized)
            } else if detail.s_explore {
                (c.ei * (d1 + d3), Branch::Explore)
            } else {
                (c.ei / (d1 + d3 + acq.eps_div), Branch::Exploit)
            };
            assert_eq!(strategic, c.strategic, "iteration {}", record.iteration);
            assert_eq!(Some(branch), c.branch, "iteration {}", record.iteration);
            strategics.push(strategic);
        }

        // The penalty scale only exists when a gate supplied constraint means.
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
        assert_eq!(beta, detail.beta, "iteration {}", record.iteration);

        let mut best: Option<(usize, f64)> = None;
        for (pos, c) in detail.scores.iter().enumerate() {
            let final_score = match c.c_bar {
                Some(cb) if cb < 0.0 => strategics[pos] + acq.penalty_p * beta * cb,
                _ => strategics[pos],
            };
            assert_eq!(final_score, c.final_score, "iteration {}", record.iteration);
            if best.is_none_or(|(_, b)| final_score > b) {
                best = Some((c.candidate_index, final_score));
            }
        }
        let (chosen, _) = best.unwrap();
        assert_eq!(
            chosen, record.candidate_index,
            "iteration {}: replay chose a different candidate",
            record.iteration
        );
    }
}

#[test]
fn recorded_run_replays_exactly() {
    let bx = FnBlackBox::new(2, Direction::Maximize, two_hills);
    let space = ParameterSpace::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![15, 15]).unwrap();
    let cfg = SaneConfig {
        iterations: 9,
        check_interval: 3,
        init_count: 6,
        gate_mode: GateMode::Hard,
        record_details: true,
        seed: 5,
        switch_schedule: sane_core::engine::switch_schedule_at(9, 5),
        ..SaneConfig::default()
    };
    // Left half good, right half bad.
    let rule = |s: &sane_core::engine::InitSample, _v: f64| {
        Some(if s.norm[0] < 0.5 {
            GateLabel::Good
        } else {
            GateLabel::Bad
        })
    };
    let trace = run(&cfg, &space, &bx, LabelSource::Rule(&rule)).unwrap();
    assert!(!trace.details.is_empty());
    replay(&trace);
}

#[test]
fn ungated_run_replays_exactly() {
    let bx = FnBlackBox::new(2, Direction::Maximize, two_hills);
    let space = ParameterSpace::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![12, 12]).unwrap();
    let cfg = SaneConfig {
        iterations: 8,
        check_interval: 2,
        init_count: 5,
        record_details: true,
        seed: 17,
        switch_schedule: sane_core::engine::switch_schedule_at(8, 5),
        ..SaneConfig::default()
    };
    let trace = run(&cfg, &space, &bx, LabelSource::None).unwrap();
    replay(&trace);
}
