//! Data ingestion: network / panel / event files, covariate
//! standardization, NDVI from reflectance bands, and nearest-grid
//! assignment of gridded fields to segments.
//!
//! File formats (all CSV files are UTF-8 with a header row; numeric fields
//! are decimal):
//!
//! - network: `segment_id,x1,y1,x2,y2`, one row per segment, or a JSON
//!   array of objects with the same fields
//! - adjacency (optional): `segment_id,neighbor_id`, overriding geometric
//!   snapping
//! - covariate panel (long format): `t,segment_id,<covariate columns...>`
//! - events: `segment_id,t` with `t` a real time in step units
//! - grid field: `x,y,value`; reflectances: `x,y,rho_red,rho_nir`
//! - intensity export: `t,segment_id,log_lambda,lambda`

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::convolution::CovariatePanel;
use crate::error::{Error, Result};
use crate::model::{Event, EventLog, IntensityField};
use crate::network::{build_network, LinearNetwork, NeighborConfig, Segment};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentRow {
    segment_id: usize,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

fn segments_from_rows(mut rows: Vec<SegmentRow>) -> Result<Vec<Segment>> {
    rows.sort_by_key(|r| r.segment_id);
    for (k, r) in rows.iter().enumerate() {
        if r.segment_id != k {
            return Err(Error::Network(format!(
                "segment ids must be dense 0..N-1; found id {} at sorted position {k}",
                r.segment_id
            )));
        }
    }
    Ok(rows
        .into_iter()
        .map(|r| Segment::new(r.segment_id, [r.x1, r.y1], [r.x2, r.y2]))
        .collect())
}

fn read_segment_rows(path: &Path) -> Result<Vec<SegmentRow>> {
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        let file = File::open(path)
            .map_err(|e| Error::Network(format!("cannot open {}: {e}", path.display())))?;
        let rows: Vec<SegmentRow> = serde_json::from_reader(BufReader::new(file))?;
        Ok(rows)
    } else {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Network(format!("cannot open {}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            rows.push(record?);
        }
        Ok(rows)
    }
}

/// Load a network from geometry, with adjacency derived by endpoint
/// snapping.
pub fn load_network(path: &Path, cfg: &NeighborConfig) -> Result<LinearNetwork> {
    let segments = segments_from_rows(read_segment_rows(path)?)?;
    build_network(segments, cfg)
}

/// Load a network whose adjacency comes from an explicit pair file instead
/// of geometric snapping.
pub fn load_network_with_adjacency(
    path: &Path,
    adjacency_path: &Path,
    _cfg: &NeighborConfig,
) -> Result<LinearNetwork> {
    let segments = segments_from_rows(read_segment_rows(path)?)?;

    #[derive(Deserialize)]
    struct PairRow {
        segment_id: usize,
        neighbor_id: usize,
    }
    let mut reader = csv::Reader::from_path(adjacency_path)
        .map_err(|e| Error::Network(format!("cannot open {}: {e}", adjacency_path.display())))?;
    let mut pairs = Vec::new();
    for record in reader.deserialize() {
        let row: PairRow = record?;
        pairs.push((row.segment_id, row.neighbor_id));
    }
    LinearNetwork::with_explicit_adjacency(segments, &pairs)
}

pub fn write_network_csv(path: &Path, net: &LinearNetwork) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for s in net.segments() {
        writer.serialize(SegmentRow {
            segment_id: s.id,
            x1: s.a[0],
            y1: s.a[1],
            x2: s.b[0],
            y2: s.b[1],
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_adjacency_csv(path: &Path, net: &LinearNetwork) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["segment_id", "neighbor_id"])?;
    for i in 0..net.n_segments() {
        for &j in net.adjacency(i) {
            if j > i {
                writer.write_record(&[i.to_string(), j.to_string()])?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Load a long-format covariate panel. Steps must be uniform: every
/// (step, segment) pair present exactly once, segment ids dense, and the
/// step sequence gap-free. `burn_in` marks how many leading steps precede
/// the likelihood window.
pub fn load_panel(path: &Path, burn_in: usize) -> Result<CovariatePanel> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Panel(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "t" || &headers[1] != "segment_id" {
        return Err(Error::Panel(
            "panel header must start with `t,segment_id` followed by covariate columns".into(),
        ));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let q = names.len();

    let mut cells: BTreeMap<(i64, usize), Vec<f64>> = BTreeMap::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |field: &str, what: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Panel(format!("row {}: cannot parse {what} `{field}`", row_idx + 2))
            })
        };
        let t_raw = parse(&record[0], "step")?;
        if !t_raw.is_finite() || t_raw.fract() != 0.0 {
            return Err(Error::Panel(format!(
                "row {}: step `{}` is not an integer",
                row_idx + 2,
                &record[0]
            )));
        }
        let seg = parse(&record[1], "segment_id")? as usize;
        let mut covs = Vec::with_capacity(q);
        for (c, name) in names.iter().enumerate() {
            let v = parse(&record[2 + c], name)?;
            if !v.is_finite() {
                return Err(Error::Panel(format!("row {}: non-finite {name}", row_idx + 2)));
            }
            covs.push(v);
        }
        if cells.insert((t_raw as i64, seg), covs).is_some() {
            return Err(Error::Panel(format!(
                "row {}: duplicate cell (t={}, segment {seg})",
                row_idx + 2,
                t_raw as i64
            )));
        }
    }
    if cells.is_empty() {
        return Err(Error::Panel("panel file contains no data rows".into()));
    }

    let steps: Vec<i64> = {
        let mut s: Vec<i64> = cells.keys().map(|&(t, _)| t).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    for pair in steps.windows(2) {
        if pair[1] != pair[0] + 1 {
            return Err(Error::Panel(format!(
                "non-uniform steps: step {} is followed by {}",
                pair[0], pair[1]
            )));
        }
    }
    let segment_ids: Vec<usize> = {
        let mut s: Vec<usize> = cells.keys().map(|&(_, i)| i).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let n = segment_ids.len();
    if segment_ids.iter().enumerate().any(|(k, &id)| k != id) {
        return Err(Error::Panel("segment ids must be dense 0..N-1".into()));
    }
    if cells.len() != steps.len() * n {
        // Find one witness for the diagnostic.
        for &t in &steps {
            for seg in 0..n {
                if !cells.contains_key(&(t, seg)) {
                    return Err(Error::Panel(format!(
                        "non-uniform steps: cell (t={t}, segment {seg}) is missing"
                    )));
                }
            }
        }
    }

    let t0 = steps[0];
    let mut raw = Array3::zeros((steps.len(), n, q));
    for ((t, seg), covs) in cells {
        let p = (t - t0) as usize;
        for (c, v) in covs.into_iter().enumerate() {
            raw[[p, seg, c]] = v;
        }
    }
    CovariatePanel::from_covariates(raw, burn_in, names)
}

/// Write a panel in long format; the intercept column is not written.
pub fn write_panel_csv(path: &Path, panel: &CovariatePanel) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "segment_id".to_string()];
    header.extend(panel.covariate_names().iter().cloned());
    writer.write_record(&header)?;
    for p in 0..panel.total_steps() {
        let x = panel.design_at_panel_step(p);
        for i in 0..panel.n_segments() {
            let mut record = vec![p.to_string(), i.to_string()];
            for c in 1..panel.n_columns() {
                record.push(x[[i, c]].to_string());
            }
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Load events, cross-checking segment ids against the network size.
pub fn load_events(path: &Path, n_segments: usize, window_steps: usize) -> Result<EventLog> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Events(format!("cannot open {}: {e}", path.display())))?;
    #[derive(Deserialize)]
    struct EventRow {
        segment_id: usize,
        t: f64,
    }
    let mut events = Vec::new();
    for (row_idx, record) in reader.deserialize().enumerate() {
        let row: EventRow = record?;
        if row.segment_id >= n_segments {
            return Err(Error::Events(format!(
                "row {}: unknown segment id {} (network has {n_segments} segments)",
                row_idx + 2,
                row.segment_id
            )));
        }
        events.push(Event { segment: row.segment_id, time: row.t });
    }
    EventLog::new(events, n_segments, window_steps)
}

pub fn write_events_csv(path: &Path, events: &EventLog) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["segment_id", "t"])?;
    for e in events.events() {
        writer.write_record(&[e.segment.to_string(), e.time.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Intensity export: one row per (step, segment).
pub fn write_intensity_csv(path: &Path, field: &IntensityField) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["t", "segment_id", "log_lambda", "lambda"])?;
    for r in 0..field.n_steps() {
        let step = field.first_step + r as i64;
        for i in 0..field.n_segments() {
            let ll = field.log_lambda[[r, i]];
            writer.write_record(&[
                step.to_string(),
                i.to_string(),
                ll.to_string(),
                ll.exp().to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Per-covariate centering and scaling statistics from a training window.
///
/// Population standard deviations are used so that the two-point column
/// (0, 2) maps exactly to (-1, 1) and the inverse transform is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl StandardizationStats {
    /// Apply these statistics to a panel (training or future). Constant
    /// columns (sd = 0) map to zeros.
    pub fn apply(&self, panel: &CovariatePanel) -> Result<CovariatePanel> {
        let q = panel.n_covariates();
        if q != self.means.len() {
            return Err(Error::Panel(format!(
                "panel has {q} covariates, statistics cover {}",
                self.means.len()
            )));
        }
        let mut out = panel.clone();
        for c in 0..q {
            let (mean, sd) = (self.means[c], self.sds[c]);
            let mut col = out.values_mut().index_axis_mut(Axis(2), c + 1);
            if sd == 0.0 {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| (v - mean) / sd);
            }
        }
        Ok(out)
    }

    /// Invert the transform: recovers the original values to within
    /// floating-point rounding (constant columns recover their mean).
    pub fn invert(&self, panel: &CovariatePanel) -> Result<CovariatePanel> {
        let q = panel.n_covariates();
        if q != self.means.len() {
            return Err(Error::Panel(format!(
                "panel has {q} covariates, statistics cover {}",
                self.means.len()
            )));
        }
        let mut out = panel.clone();
        for c in 0..q {
            let (mean, sd) = (self.means[c], self.sds[c]);
            let mut col = out.values_mut().index_axis_mut(Axis(2), c + 1);
            col.mapv_inplace(|v| v * sd + mean);
        }
        Ok(out)
    }
}

/// Standardize each non-intercept column to mean zero and unit variance
/// over the likelihood window (burn-in steps receive the same transform
/// but do not inform the statistics).
pub fn standardize(panel: &CovariatePanel) -> Result<(CovariatePanel, StandardizationStats)> {
    let q = panel.n_covariates();
    let window_cells = (panel.window_steps() * panel.n_segments()) as f64;
    let mut means = Vec::with_capacity(q);
    let mut sds = Vec::with_capacity(q);
    for c in 0..q {
        let mut sum = 0.0;
        for t in 0..panel.window_steps() {
            let x = panel.design_at(t as i64)?;
            for i in 0..panel.n_segments() {
                sum += x[[i, c + 1]];
            }
        }
        let mean = sum / window_cells;
        let mut ss = 0.0;
        for t in 0..panel.window_steps() {
            let x = panel.design_at(t as i64)?;
            for i in 0..panel.n_segments() {
                let d = x[[i, c + 1]] - mean;
                ss += d * d;
            }
        }
        means.push(mean);
        sds.push((ss / window_cells).sqrt());
    }
    let stats = StandardizationStats {
        names: panel.covariate_names().to_vec(),
        means,
        sds,
    };
    Ok((stats.apply(panel)?, stats))
}

/// Normalized difference vegetation index from near-infrared and red
/// surface reflectances.
pub fn compute_ndvi(rho_nir: f64, rho_red: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho_nir) || !(0.0..=1.0).contains(&rho_red) {
        return Err(Error::Config(format!(
            "reflectances must lie in [0, 1]; got nir={rho_nir}, red={rho_red}"
        )));
    }
    if rho_nir + rho_red <= 0.0 {
        return Err(Error::Config("NDVI undefined: both reflectance bands are zero".into()));
    }
    Ok((rho_nir - rho_red) / (rho_nir + rho_red))
}

/// A gridded scalar field at one timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    /// (coordinate, value) points.
    pub points: Vec<([f64; 2], f64)>,
}

impl GridField {
    pub fn new(points: Vec<([f64; 2], f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("grid field must contain at least one point".into()));
        }
        for (p, v) in &points {
            if !p[0].is_finite() || !p[1].is_finite() || !v.is_finite() {
                return Err(Error::Config("grid field contains a non-finite entry".into()));
            }
        }
        for (a_idx, (a, _)) in points.iter().enumerate() {
            for (b, _) in points.iter().skip(a_idx + 1) {
                if a == b {
                    return Err(Error::Config(format!(
                        "duplicate grid coordinate ({}, {})",
                        a[0], a[1]
                    )));
                }
            }
        }
        Ok(GridField { points })
    }
}

/// Load a `x,y,value` field.
pub fn load_grid_field(path: &Path) -> Result<GridField> {
    #[derive(Deserialize)]
    struct FieldRow {
        x: f64,
        y: f64,
        value: f64,
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for record in reader.deserialize() {
        let row: FieldRow = record?;
        points.push(([row.x, row.y], row.value));
    }
    GridField::new(points)
}

/// Load an `x,y,rho_red,rho_nir` reflectance file and convert to an NDVI
/// field.
pub fn load_ndvi_from_reflectance(path: &Path) -> Result<GridField> {
    #[derive(Deserialize)]
    struct ReflRow {
        x: f64,
        y: f64,
        rho_red: f64,
        rho_nir: f64,
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (row_idx, record) in reader.deserialize().enumerate() {
        let row: ReflRow = record?;
        let ndvi = compute_ndvi(row.rho_nir, row.rho_red)
            .map_err(|e| Error::Config(format!("row {}: {e}", row_idx + 2)))?;
        points.push(([row.x, row.y], ndvi));
    }
    GridField::new(points)
}

/// Assign each segment the value of the grid point nearest its midpoint
/// (planar Euclidean distance; ties broken by the lowest point index).
pub fn assign_grid_to_segments(field: &GridField, net: &LinearNetwork) -> Vec<f64> {
    net.segments()
        .iter()
        .map(|s| {
            let m = s.midpoint();
            let mut best = 0usize;
            let mut best_d2 = f64::INFINITY;
            for (idx, (p, _)) in field.points.iter().enumerate() {
                let d2 = (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = idx;
                }
            }
            field.points[best].1
        })
        .collect()
}

/// Convenience writer: any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
