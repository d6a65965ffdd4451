//! CSV writers for simulator outputs. Column layouts are listed in
//! `docs/formats.md`.

use std::io::Write;

use csv::Writer;

use crate::error::{Error, Result};
use crate::functionals::AddOneCostRecord;
use crate::graph::Graph;
use crate::limits::LimitEstimate;
use crate::point_process::Configuration;
use crate::stats::{CltReport, CovarianceReport, SampleSet};

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_configuration<W: Write>(config: &Configuration, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend((0..config.dim()).map(|i| format!("x{i}")));
    header.extend(["birth_time".to_string(), "is_origin".to_string()]);
    w.write_record(&header)?;
    for p in config.points() {
        let mut row = vec![p.id.to_string()];
        row.extend(p.position.iter().map(f64::to_string));
        row.push(p.birth_time.to_string());
        row.push(p.is_origin.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges<W: Write>(graph: &Graph, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["id_a", "id_b"])?;
    for (a, b) in graph.edge_ids() {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples<W: Write>(sets: &[SampleSet], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["functional", "volume", "rep", "value"])?;
    for s in sets {
        for (rep, v) in s.values.iter().enumerate() {
            w.write_record([s.functional.clone(), s.volume.to_string(), rep.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports<W: Write>(rows: &[(String, f64, CltReport)], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record([
        "functional",
        "volume",
        "mean",
        "variance",
        "variance_stderr",
        "variance_over_volume",
        "skewness",
        "excess_kurtosis",
        "ks_statistic",
        "ks_p_value",
        "bootstrap_p_value",
        "reps",
        "degenerate",
    ])?;
    for (name, volume, r) in rows {
        w.write_record([
            name.clone(),
            volume.to_string(),
            r.mean.to_string(),
            r.variance.to_string(),
            r.variance_stderr.to_string(),
            r.variance_over_volume.to_string(),
            r.skewness.to_string(),
            r.excess_kurtosis.to_string(),
            opt(r.ks_statistic),
            opt(r.ks_p_value),
            opt(r.bootstrap_p_value),
            r.reps.to_string(),
            r.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_covariance<W: Write>(report: &CovarianceReport, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["row", "col", "value", "stderr", "polarization"])?;
    for (i, ri) in report.names.iter().enumerate() {
        for (j, cj) in report.names.iter().enumerate() {
            w.write_record([
                ri.clone(),
                cj.clone(),
                report.matrix[i][j].to_string(),
                report.stderr[i][j].to_string(),
                report.polarization[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows of `(trace index, record)`.
pub fn write_traces<W: Write>(traces: &[Vec<AddOneCostRecord>], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["trace", "functional", "volume", "value", "case_tag"])?;
    for (t, trace) in traces.iter().enumerate() {
        for r in trace {
            w.write_record([
                t.to_string(),
                r.functional.clone(),
                r.volume.to_string(),
                r.value.to_string(),
                opt(r.case_tag),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A named limit estimate, e.g. `("mean_density", "K3", "", estimate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub quantity: String,
    pub pattern_a: String,
    pub pattern_b: String,
    pub lambda: f64,
    pub estimate: LimitEstimate,
}

pub fn write_limits<W: Write>(rows: &[LimitRow], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["quantity", "pattern_a", "pattern_b", "lambda", "value", "stderr", "n_samples", "method"])?;
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            r.pattern_a.clone(),
            r.pattern_b.clone(),
            r.lambda.to_string(),
            r.estimate.value.to_string(),
            r.estimate.stderr.to_string(),
            r.estimate.n_samples.to_string(),
            r.estimate.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationRow {
    pub quantity: String,
    pub delta: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda: f64,
    pub estimate: LimitEstimate,
}

pub fn write_percolation<W: Write>(rows: &[PercolationRow], out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(["quantity", "delta", "s", "t", "alpha", "lambda", "estimate", "stderr", "reps"])?;
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            opt(r.delta),
            opt(r.s),
            opt(r.t),
            opt(r.alpha),
            r.lambda.to_string(),
            r.estimate.value.to_string(),
            r.estimate.stderr.to_string(),
            r.estimate.n_samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(functional, volume, betti_0, ..., betti_k)` per replication.
pub fn write_betti<W: Write>(rows: &[(usize, Vec<i64>)], volume: f64, out: W) -> Result<()> {
    let mut w = Writer::from_writer(out);
    let k = rows.first().map_or(0, |r| r.1.len());
    let mut header = vec!["rep".to_string(), "volume".to_string()];
    header.extend((0..k).map(|i| format!("betti_{i}")));
    w.write_record(&header)?;
    for (rep, b) in rows {
        let mut row = vec![rep.to_string(), volume.to_string()];
        row.extend(b.iter().map(i64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
