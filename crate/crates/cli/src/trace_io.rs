//! Trace CSV serialization. Floats are rendered in shortest-round-trip form,
//! so parsing a written trace and re-rendering it is byte-identical; the
//! determinism checks compare trace files directly.

use sane_core::engine::Trace;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Chosen location, original units.
    pub coords: Vec<f64>,
    pub raw: f64,
    pub ei: f64,
    pub g: f64,
    /// `exploit`/`explore`/`localized`, or `ei` for vanilla-BO rows.
    pub branch: String,
    /// Empty column when no gate ran.
    pub c_bar: Option<f64>,
    pub focus_count: usize,
}

pub fn rows_from_trace(trace: &Trace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            iteration: r.iteration,
            coords: r.orig.clone(),
            raw: r.raw_value,
            ei: r.ei,
            g: r.g,
            branch: r.branch.map_or("ei", |b| b.as_str()).to_string(),
            c_bar: r.c_bar,
            focus_count: r.focus_count,
        })
        .collect()
}

fn header(dim: usize) -> String {
    let mut cols = vec!["iteration".to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.extend(
        ["raw", "ei", "g", "branch", "c_bar", "focus_count"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn render_trace_csv(rows: &[TraceRow], dim: usize) -> String {
    let mut out = header(dim);
    out.push('\n');
    for row in rows {
        out.push_str(&row.iteration.to_string());
        for c in &row.coords {
            out.push_str(&format!(",{c:?}"));
        }
        out.push_str(&format!(",{:?},{:?},{:?}", row.raw, row.ei, row.g));
        out.push(',');
        out.push_str(&row.branch);
        out.push(',');
        if let Some(c) = row.c_bar {
            out.push_str(&format!("{c:?}"));
        }
        out.push_str(&format!(",{}", row.focus_count));
        out.push('\n');
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<(usize, Vec<TraceRow>), CliError> {
    let mut lines = text.lines().enumerate();
    let Some((_, head)) = lines.next() else {
        return Err(CliError::Runtime("trace file is empty".into()));
    };
    let cols: Vec<&str> = head.split(',').collect();
    if cols.len() < 7 || cols[0] != "iteration" || cols[cols.len() - 1] != "focus_count" {
        return Err(CliError::Runtime(format!("unrecognized trace header `{head}`")));
    }
    let dim = cols.len() - 7;
    if header(dim) != head {
        return Err(CliError::Runtime(format!("unrecognized trace header `{head}`")));
    }
    let parse_f = |field: &str, line_no: usize| -> Result<f64, CliError> {
        field
            .parse::<f64>()
            .map_err(|err| CliError::Runtime(format!("trace line {}: {err}", line_no + 1)))
    };
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 7 {
            return Err(CliError::Runtime(format!(
                "trace line {}: expected {} fields, found {}",
                line_no + 1,
                dim + 7,
                fields.len()
            )));
        }
        let iteration = fields[0]
            .parse::<usize>()
            .map_err(|err| CliError::Runtime(format!("trace line {}: {err}", line_no + 1)))?;
        let coords = fields[1..=dim]
            .iter()
            .map(|f| parse_f(f, line_no))
            .collect::<Result<Vec<f64>, _>>()?;
        let raw = parse_f(fields[dim + 1], line_no)?;
        let ei = parse_f(fields[dim + 2], line_no)?;
        let g = parse_f(fields[dim + 3], line_no)?;
        let branch = fields[dim + 4].to_string();
        let c_bar = if fields[dim + 5].is_empty() {
            None
        } else {
            Some(parse_f(fields[dim + 5], line_no)?)
        };
        let focus_count = fields[dim + 6]
            .parse::<usize>()
            .map_err(|err| CliError::Runtime(format!("trace line {}: {err}", line_no + 1)))?;
        rows.push(TraceRow {
            iteration,
            coords,
            raw,
            ei,
            g,
            branch,
            c_bar,
            focus_count,
        });
    }
    Ok((dim, rows))
}
