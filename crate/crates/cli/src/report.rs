//! Summary JSON and the strategy-comparison table.

use serde::Serialize;

use sane_core::engine::{Mode, SaneConfig, SweepSummary, Trace};
use sane_core::gate::GateMode;
use sane_core::metrics::EvaluationReport;
use sane_core::strategy::RoiKind;

pub fn strategy_name(mode: Mode, gate: GateMode) -> &'static str {
    match (mode, gate) {
        (Mode::VanillaBo, _) => "vanilla-bo",
        (Mode::Sane, GateMode::None) => "sane+none",
        (Mode::Sane, GateMode::Relaxed) => "sane+relaxed",
        (Mode::Sane, GateMode::Hard) => "sane+hard",
    }
}

#[derive(Serialize)]
pub struct RunSummary<'a> {
    pub problem: &'a str,
    pub strategy: &'static str,
    pub seed: u64,
    pub iterations_run: usize,
    pub early_stop: Option<usize>,
    pub focus_switches: usize,
    pub gate_retrains: usize,
    pub report: &'a EvaluationReport,
    pub config: &'a SaneConfig,
}

impl<'a> RunSummary<'a> {
    pub fn new(problem: &'a str, trace: &'a Trace, report: &'a EvaluationReport) -> Self {
        let focus_switches = trace
            .roi_events
            .iter()
            .filter(|e| matches!(e.kind, RoiKind::SuperiorSample | RoiKind::LocalAccepted))
            .count();
        RunSummary {
            problem,
            strategy: strategy_name(trace.config.mode, trace.config.gate_mode),
            seed: trace.config.seed,
            iterations_run: trace.records.len(),
            early_stop: trace.early_stop,
            focus_switches,
            gate_retrains: trace.gate_retrains.len(),
            report,
            config: &trace.config,
        }
    }
}

pub fn render_summary(summary: &RunSummary) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

/// One comparison-table row; `None` cells print empty.
pub struct StrategyRow {
    pub strategy: &'static str,
    pub mean_roi_coverage: Option<f64>,
    pub mean_mae_feasible: Option<f64>,
    pub mean_best: f64,
    pub mean_histogram_similarity: Option<f64>,
}

impl StrategyRow {
    pub fn from_sweep(strategy: &'static str, sweep: &SweepSummary) -> Self {
        StrategyRow {
            strategy,
            mean_roi_coverage: sweep.mean_roi_coverage,
            mean_mae_feasible: sweep.mean_mae_feasible,
            mean_best: sweep.mean_best,
            mean_histogram_similarity: sweep.mean_histogram_similarity,
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.6}"))
}

pub fn render_comparison_csv(rows: &[StrategyRow]) -> String {
    let mut out =
        String::from("strategy,mean_roi_coverage,mean_mae_feasible,mean_best,mean_histogram_similarity\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            row.strategy,
            cell(row.mean_roi_coverage),
            cell(row.mean_mae_feasible),
            row.mean_best,
            cell(row.mean_histogram_similarity),
        ));
    }
    out
}

pub fn render_comparison_table(rows: &[StrategyRow]) -> String {
    let mut out = format!(
        "{:<14} {:>14} {:>16} {:>14} {:>16}\n",
        "strategy", "roi_coverage", "mae_feasible", "best", "hist_similarity"
    );
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:>14} {:>16} {:>14.6} {:>16}\n",
            row.strategy,
            cell(row.mean_roi_coverage),
            cell(row.mean_mae_feasible),
            row.mean_best,
            cell(row.mean_histogram_similarity),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_csv_shape() {
        let rows = vec![
            StrategyRow {
                strategy: "vanilla-bo",
                mean_roi_coverage: Some(1.0 / 3.0),
                mean_mae_feasible: None,
                mean_best: -0.4,
                mean_histogram_similarity: Some(0.5),
            },
            StrategyRow {
                strategy: "sane+none",
                mean_roi_coverage: None,
                mean_mae_feasible: Some(0.25),
                mean_best: 2.0,
                mean_histogram_similarity: None,
            },
        ];
        let csv = render_comparison_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "vanilla-bo,0.333333,,-0.400000,0.500000");
        assert_eq!(lines[2], "sane+none,,0.250000,2.000000,");
    }
}
