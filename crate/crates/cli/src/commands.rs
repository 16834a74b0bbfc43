//! The four subcommands. All file outputs land in the experiment's output
//! directory; console chatter respects `--quiet`.

use std::fs;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use sane_core::engine::{
    self, run, run_seed_sweep, seeds, InitSample, LabelSource, Mode, SaneConfig, SweepEval, Trace,
};
use sane_core::gate::{GateLabel, GateMode};
use sane_core::metrics::{evaluate_trace, EvalContext, EvaluationReport};

use crate::config::{build_experiment, load_config, Experiment};
use crate::error::CliError;
use crate::heatmap::render_heatmap;
use crate::labels::{match_labels_to_init, parse_labels_csv, render_labels_csv};
use crate::report::{
    render_comparison_csv, render_comparison_table, render_summary, strategy_name, RunSummary,
    StrategyRow,
};
use crate::trace_io::{render_trace_csv, rows_from_trace};
use crate::{CommonArgs, SweepArgs};

fn load_experiment(args: &CommonArgs) -> Result<Experiment, CliError> {
    let file = load_config(&args.config)?;
    let mut exp = build_experiment(&file, &args.config)?;
    if let Some(out) = &args.out {
        exp.out_dir = out.clone();
    }
    Ok(exp)
}

fn init_batch(cfg: &SaneConfig, exp: &Experiment) -> Result<Vec<InitSample>, CliError> {
    let (norm, orig) = engine::candidate_grid(&exp.space, exp.bx.as_ref())?;
    Ok(engine::generate_init(cfg, &exp.space, &norm, &orig)?)
}

fn read_labels_file(exp: &Experiment) -> Result<Vec<(Vec<f64>, GateLabel)>, CliError> {
    let Some(path) = &exp.labels_path else {
        return Err(CliError::Config(
            "config key `labels`: a labels file is required when the gate is enabled".into(),
        ));
    };
    let text = fs::read_to_string(path).map_err(|err| {
        CliError::Config(format!(
            "config key `labels`: cannot read {}: {err}",
            path.display()
        ))
    })?;
    parse_labels_csv(&text, exp.space.dim())
}

fn default_eval_context<'a>(exp: &'a Experiment, feasible: Option<&'a [f64]>) -> EvalContext<'a> {
    EvalContext {
        truth: exp.truth.as_deref(),
        feasible_override: feasible,
        optima: exp.optima_norm.as_deref(),
        radius: 0.2,
        min_count: 3,
        bins: 20,
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|err| CliError::Runtime(format!("cannot write {}: {err}", path.display())))
}

fn write_run_outputs(
    exp: &Experiment,
    trace: &Trace,
    report: &EvaluationReport,
    quiet: bool,
) -> Result<(), CliError> {
    fs::create_dir_all(&exp.out_dir)
        .map_err(|err| CliError::Runtime(format!("cannot create {}: {err}", exp.out_dir.display())))?;
    let mut written = Vec::new();

    let trace_path = exp.out_dir.join("trace.csv");
    write_file(
        &trace_path,
        &render_trace_csv(&rows_from_trace(trace), exp.space.dim()),
    )?;
    written.push(trace_path);

    let summary_path = exp.out_dir.join("summary.json");
    write_file(
        &summary_path,
        &render_summary(&RunSummary::new(exp.kind_name(), trace, report)),
    )?;
    written.push(summary_path);

    if exp.space.dim() == 2 {
        let res = (exp.space.resolution()[0], exp.space.resolution()[1]);
        let points: Vec<(f64, f64)> = trace
            .archive
            .samples()
            .iter()
            .map(|s| (s.norm[0], s.norm[1]))
            .collect();
        let pred_path = exp.out_dir.join("prediction.svg");
        write_file(
            &pred_path,
            &render_heatmap(&trace.final_prediction, res, &points, "posterior mean"),
        )?;
        written.push(pred_path);
        if let Some(truth) = &exp.truth {
            let truth_path = exp.out_dir.join("truth.svg");
            write_file(&truth_path, &render_heatmap(truth, res, &[], "ground truth"))?;
            written.push(truth_path);
        }
        if let Some(gate_map) = &trace.final_gate_map {
            let gate_path = exp.out_dir.join("gate.svg");
            write_file(
                &gate_path,
                &render_heatmap(gate_map, res, &points, "gate constraint mean"),
            )?;
            written.push(gate_path);
        }
    }

    if !quiet {
        println!(
            "best {:?} at {:?} after {} iterations{}",
            report.best_raw,
            report.best_orig,
            trace.records.len(),
            trace
                .early_stop
                .map_or(String::new(), |i| format!(" (pool exhausted at {i})")),
        );
        if let Some(mae) = report.mae_feasible {
            println!("feasible-region MAE {mae:.6}");
        }
        if let Some(cov) = report.roi_coverage {
            println!("optimum coverage {cov:.3}");
        }
        for path in &written {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn cmd_run(args: &CommonArgs) -> Result<(), CliError> {
    let exp = load_experiment(args)?;
    let cfg = exp.cfg.clone();
    let gate_active = cfg.mode == Mode::Sane && cfg.gate_mode != GateMode::None;
    let pairs = if gate_active {
        let rows = read_labels_file(&exp)?;
        let init = init_batch(&cfg, &exp)?;
        Some(match_labels_to_init(&rows, &init)?)
    } else {
        None
    };
    let labels = match &pairs {
        Some(p) => LabelSource::Fixed(p),
        None => LabelSource::None,
    };
    let trace = run(&cfg, &exp.space, exp.bx.as_ref(), labels)?;
    let ctx = default_eval_context(&exp, None);
    let report = evaluate_trace(&trace, &ctx).map_err(|err| CliError::Runtime(err.to_string()))?;
    write_run_outputs(&exp, &trace, &report, args.quiet)
}

pub fn cmd_label(args: &CommonArgs, input: &mut dyn BufRead) -> Result<(), CliError> {
    let exp = load_experiment(args)?;
    let init = init_batch(&exp.cfg, &exp)?;
    let mut rows: Vec<(Vec<f64>, GateLabel)> = Vec::new();
    let mut line = String::new();
    'samples: for (i, sample) in init.iter().enumerate() {
        let value = exp
            .bx
            .eval(&sample.orig)
            .map_err(|err| CliError::Runtime(err.to_string()))?;
        loop {
            println!(
                "sample {} of {}: x = {:?}, measured value = {value:?}",
                i + 1,
                init.len(),
                sample.orig
            );
            print!("label [good/bad/skip]: ");
            std::io::stdout().flush().ok();
            line.clear();
            let read = input
                .read_line(&mut line)
                .map_err(|err| CliError::Runtime(err.to_string()))?;
            if read == 0 {
                println!("\ninput ended; skipping the remaining samples");
                break 'samples;
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "good" | "g" => {
                    rows.push((sample.orig.clone(), GateLabel::Good));
                    break;
                }
                "bad" | "b" => {
                    rows.push((sample.orig.clone(), GateLabel::Bad));
                    break;
                }
                "skip" | "s" | "" => break,
                other => println!("unrecognized answer `{other}`; good, bad, or skip"),
            }
        }
    }

    let good = rows.iter().filter(|(_, l)| *l == GateLabel::Good).count();
    let bad = rows.len() - good;
    if rows.is_empty() {
        println!("warning: no labels recorded; the gate will stay inactive");
    } else if good == 0 || bad == 0 {
        println!("warning: only one class labeled; the gate needs both good and bad samples");
    }

    let dest = match &exp.labels_path {
        Some(path) => path.clone(),
        None => {
            fs::create_dir_all(&exp.out_dir).map_err(|err| {
                CliError::Runtime(format!("cannot create {}: {err}", exp.out_dir.display()))
            })?;
            exp.out_dir.join("labels.csv")
        }
    };
    write_file(&dest, &render_labels_csv(&rows, exp.space.dim()))?;
    if !args.quiet {
        println!("wrote {} labels to {}", rows.len(), dest.display());
    }
    Ok(())
}

struct TableJob {
    name: &'static str,
    mode: Mode,
    gate_mode: GateMode,
}

fn run_table(args: &SweepArgs, all_strategies: bool, out_name: &str) -> Result<(), CliError> {
    let exp = load_experiment(&args.common)?;
    let seeds_list = if args.seeds.is_empty() {
        vec![exp.cfg.seed]
    } else {
        args.seeds.clone()
    };

    let mut base = exp.cfg.clone();
    // Labels are matched against one concrete init batch, so when labels are
    // in play the batch must be identical across seeds: pin the init stream
    // to the master seed's.
    let mut pairs: Option<Vec<(usize, GateLabel)>> = None;
    if exp.labels_path.is_some() {
        base.init_seed = Some(seeds::init(base.seed));
        let rows = read_labels_file(&exp)?;
        let init = init_batch(&base, &exp)?;
        let matched = match_labels_to_init(&rows, &init)?;
        let good = matched.iter().filter(|(_, l)| *l == GateLabel::Good).count();
        if good > 0 && good < matched.len() {
            pairs = Some(matched);
        } else if !args.common.quiet {
            println!("warning: labels lack one class; gated strategies are skipped");
        }
    }

    let jobs: Vec<TableJob> = if all_strategies {
        let mut jobs = vec![
            TableJob {
                name: "vanilla-bo",
                mode: Mode::VanillaBo,
                gate_mode: GateMode::None,
            },
            TableJob {
                name: "sane+none",
                mode: Mode::Sane,
                gate_mode: GateMode::None,
            },
        ];
        if pairs.is_some() {
            jobs.push(TableJob {
                name: "sane+relaxed",
                mode: Mode::Sane,
                gate_mode: GateMode::Relaxed,
            });
            jobs.push(TableJob {
                name: "sane+hard",
                mode: Mode::Sane,
                gate_mode: GateMode::Hard,
            });
        }
        jobs
    } else {
        vec![TableJob {
            name: strategy_name(base.mode, base.gate_mode),
            mode: base.mode,
            gate_mode: base.gate_mode,
        }]
    };

    // Each run is scored under its own gate map so every table row matches
    // the single-run summary the same config would produce.
    let eval = SweepEval {
        truth: exp.truth.clone(),
        optima_norm: exp.optima_norm.clone(),
        ..SweepEval::with_defaults()
    };

    let mut rows = Vec::with_capacity(jobs.len());
    for job in &jobs {
        let mut cfg = base.clone();
        cfg.mode = job.mode;
        cfg.gate_mode = job.gate_mode;
        let labels = match (&pairs, job.gate_mode) {
            (Some(p), GateMode::Relaxed | GateMode::Hard) => LabelSource::Fixed(p),
            _ => LabelSource::None,
        };
        let sweep = run_seed_sweep(&cfg, &exp.space, exp.bx.as_ref(), &seeds_list, &eval, labels)?;
        rows.push(StrategyRow::from_sweep(job.name, &sweep));
    }

    fs::create_dir_all(&exp.out_dir)
        .map_err(|err| CliError::Runtime(format!("cannot create {}: {err}", exp.out_dir.display())))?;
    let csv_path = exp.out_dir.join(out_name);
    write_file(&csv_path, &render_comparison_csv(&rows))?;
    if !args.common.quiet {
        print!("{}", render_comparison_table(&rows));
        println!("wrote {}", csv_path.display());
    }
    Ok(())
}

pub fn cmd_compare(args: &SweepArgs) -> Result<(), CliError> {
    run_table(args, true, "compare.csv")
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    run_table(args, false, "sweep.csv")
}
