//! Labels CSV: original-unit coordinates plus `good`/`bad`, one row per
//! labeled initialization sample. Rows are matched back to the generated
//! init batch coordinate-wise within 1e-9.

use sane_core::engine::InitSample;
use sane_core::gate::GateLabel;

use crate::error::CliError;

pub const MATCH_TOLERANCE: f64 = 1e-9;

fn header(dim: usize) -> String {
    let mut cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    cols.push("label".into());
    cols.join(",")
}

pub fn render_labels_csv(rows: &[(Vec<f64>, GateLabel)], dim: usize) -> String {
    let mut out = header(dim);
    out.push('\n');
    for (coords, label) in rows {
        for c in coords {
            out.push_str(&format!("{c:?},"));
        }
        out.push_str(match label {
            GateLabel::Good => "good",
            GateLabel::Bad => "bad",
        });
        out.push('\n');
    }
    out
}

pub fn parse_labels_csv(text: &str, dim: usize) -> Result<Vec<(Vec<f64>, GateLabel)>, CliError> {
    let mut lines = text.lines().enumerate();
    let Some((_, head)) = lines.next() else {
        return Err(CliError::Config("labels file is empty".into()));
    };
    if head.trim() != header(dim) {
        return Err(CliError::Config(format!(
            "labels header must be `{}`, found `{}`",
            header(dim),
            head.trim()
        )));
    }
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(CliError::Config(format!(
                "labels line {}: expected {} fields, found {}",
                line_no + 1,
                dim + 1,
                fields.len()
            )));
        }
        let coords = fields[..dim]
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|err| {
                CliError::Config(format!("labels line {}: {err}", line_no + 1))
            })?;
        let label = match fields[dim].trim() {
            "good" => GateLabel::Good,
            "bad" => GateLabel::Bad,
            other => {
                return Err(CliError::Config(format!(
                    "labels line {}: label must be good or bad, found `{other}`",
                    line_no + 1
                )))
            }
        };
        rows.push((coords, label));
    }
    Ok(rows)
}

/// Maps each labels row to the position of its initialization sample.
/// Every row must match exactly one sample, and no sample may be labeled
/// twice.
pub fn match_labels_to_init(
    rows: &[(Vec<f64>, GateLabel)],
    init: &[InitSample],
) -> Result<Vec<(usize, GateLabel)>, CliError> {
    let mut pairs = Vec::with_capacity(rows.len());
    let mut taken = vec![false; init.len()];
    for (row_no, (coords, label)) in rows.iter().enumerate() {
        let found = init.iter().position(|s| {
            s.orig.len() == coords.len()
                && s.orig
                    .iter()
                    .zip(coords)
                    .all(|(a, b)| (a - b).abs() <= MATCH_TOLERANCE)
        });
        let Some(index) = found else {
            return Err(CliError::Config(format!(
                "labels row {} ({coords:?}) does not match any initialization sample; \
                 regenerate labels with `sane label` using the same config",
                row_no + 1
            )));
        };
        if taken[index] {
            return Err(CliError::Config(format!(
                "labels row {} labels initialization sample {} twice",
                row_no + 1,
                index
            )));
        }
        taken[index] = true;
        pairs.push((index, *label));
    }
    Ok(pairs)
}
