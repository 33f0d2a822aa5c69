//! Validation utilities: percentile ranks of fitted intensities at
//! observed events, side-by-side model comparison tables, and plot-ready
//! density exports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{FitResult, HppFit};
use crate::model::{EventLog, IntensityField};

/// Percentile of one event's segment among all segments at its step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRecord {
    pub event_index: usize,
    pub segment_id: usize,
    pub step: usize,
    /// Weak-rank percentile in [0, 100]: ties count as ≤.
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileReport {
    pub records: Vec<PercentileRecord>,
    /// (minimum, lower quartile, median, upper quartile, maximum) of the
    /// percentile column; empty reports carry None.
    pub summary: Option<[f64; 5]>,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// For each event: the share of segments whose fitted intensity at the
/// event's step does not exceed the event segment's, as a percentage.
/// Ranks are computed on the stored log-intensities; any strictly
/// increasing transform of the intensities yields the identical report.
pub fn percentile_rank(field: &IntensityField, events: &EventLog) -> Result<PercentileReport> {
    let n = field.n_segments();
    if n != events.n_segments() {
        return Err(Error::Events(format!(
            "event log covers {} segments, intensity field has {n}",
            events.n_segments()
        )));
    }
    let mut records = Vec::with_capacity(events.len());
    for (event_index, e) in events.events().iter().enumerate() {
        let step = events.step_of(e);
        let row = field.row_of(step as i64).ok_or_else(|| {
            Error::Events(format!(
                "event {event_index} at step {step} lies outside the intensity window"
            ))
        })?;
        let value = field.log_lambda[[row, e.segment]];
        let at_or_below = (0..n)
            .filter(|&i| field.log_lambda[[row, i]] <= value)
            .count();
        records.push(PercentileRecord {
            event_index,
            segment_id: e.segment,
            step,
            percentile: 100.0 * at_or_below as f64 / n as f64,
        });
    }
    let summary = if records.is_empty() {
        None
    } else {
        let mut sorted: Vec<f64> = records.iter().map(|r| r.percentile).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some([
            sorted[0],
            quantile_sorted(&sorted, 0.25),
            quantile_sorted(&sorted, 0.5),
            quantile_sorted(&sorted, 0.75),
            sorted[sorted.len() - 1],
        ])
    };
    Ok(PercentileReport { records, summary })
}

/// CSV export: `event_index,segment_id,t,percentile`.
pub fn write_percentile_csv(path: &Path, report: &PercentileReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["event_index", "segment_id", "t", "percentile"])?;
    for r in &report.records {
        writer.write_record(&[
            r.event_index.to_string(),
            r.segment_id.to_string(),
            r.step.to_string(),
            r.percentile.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Side-by-side parameter/likelihood table over fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    /// Row label plus one optional value per column; absent entries print
    /// as `-`.
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = vec![self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0)];
        for (c, name) in self.columns.iter().enumerate() {
            let mut w = name.len();
            for (_, vals) in &self.rows {
                let cell = format_cell(vals[c]);
                w = w.max(cell.len());
            }
            widths.push(w);
        }
        let mut out = String::new();
        out.push_str(&format!("{:<w$}", "", w = widths[0]));
        for (c, name) in self.columns.iter().enumerate() {
            out.push_str(&format!("  {:>w$}", name, w = widths[c + 1]));
        }
        out.push('\n');
        for (label, vals) in &self.rows {
            out.push_str(&format!("{:<w$}", label, w = widths[0]));
            for (c, v) in vals.iter().enumerate() {
                out.push_str(&format!("  {:>w$}", format_cell(*v), w = widths[c + 1]));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity");
        for name in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (label, vals) in &self.rows {
            out.push_str(label);
            for v in vals {
                out.push(',');
                if let Some(x) = v {
                    out.push_str(&x.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

fn format_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "-".to_string(),
    }
}

/// Assemble the comparison table: a rate row for the homogeneous baseline,
/// a decay row, the coefficient rows, and the log-likelihood row. Covariate
/// names must agree across the supplied fits.
pub fn model_comparison(
    hpp: Option<&HppFit>,
    fits: &[(&str, &FitResult)],
) -> Result<ComparisonTable> {
    if hpp.is_none() && fits.is_empty() {
        return Err(Error::Config("comparison needs at least one model".into()));
    }
    let mut names: Option<&[String]> = None;
    for (label, fit) in fits {
        match names {
            None => names = Some(&fit.covariate_names),
            Some(existing) => {
                if existing != fit.covariate_names.as_slice() {
                    return Err(Error::Config(format!(
                        "fit `{label}` has covariate names {:?}, expected {existing:?}",
                        fit.covariate_names
                    )));
                }
            }
        }
    }
    let names = names.map(|n| n.to_vec()).unwrap_or_default();

    let mut columns = Vec::new();
    if hpp.is_some() {
        columns.push("HPP".to_string());
    }
    columns.extend(fits.iter().map(|(l, _)| l.to_string()));

    let n_cols = columns.len();
    let hpp_offset = usize::from(hpp.is_some());
    let row = |label: &str, fill: &dyn Fn(usize) -> Option<f64>| -> (String, Vec<Option<f64>>) {
        (label.to_string(), (0..n_cols).map(fill).collect())
    };

    let mut rows = vec![
        row("rate", &|c| if c == 0 { hpp.map(|h| h.rate) } else { None }),
        row("decay", &|c| {
            if c >= hpp_offset {
                let (_, fit) = fits[c - hpp_offset];
                (fit.model == "cnhpp").then_some(fit.params_hat.xi)
            } else {
                None
            }
        }),
        row("intercept", &|c| {
            (c >= hpp_offset).then(|| fits[c - hpp_offset].1.params_hat.beta[0])
        }),
    ];
    for (j, name) in names.iter().enumerate() {
        let idx = j + 1;
        rows.push(row(name, &|c| {
            (c >= hpp_offset).then(|| fits[c - hpp_offset].1.params_hat.beta[idx])
        }));
    }
    rows.push(row("log-likelihood", &|c| {
        if c == 0 && hpp.is_some() {
            hpp.map(|h| h.loglik)
        } else {
            Some(fits[c - hpp_offset].1.loglik)
        }
    }));

    Ok(ComparisonTable { columns, rows })
}

/// λ values at one step, one row per segment, as CSV text
/// (`segment_id,lambda`) for external density plotting.
pub fn export_density(field: &IntensityField, step: i64) -> Result<String> {
    let row = field
        .row_of(step)
        .ok_or_else(|| Error::Model(format!("step {step} outside the intensity window")))?;
    let mut out = String::from("segment_id,lambda\n");
    for i in 0..field.n_segments() {
        out.push_str(&format!("{i},{}\n", field.log_lambda[[row, i]].exp()));
    }
    Ok(out)
}

pub fn write_density_csv(path: &Path, field: &IntensityField, step: i64) -> Result<()> {
    std::fs::write(path, export_density(field, step)?)?;
    Ok(())
}
