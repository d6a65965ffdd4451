//! Long-format CSV bundles for external plotting.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::CliError;

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    Ok(csv::Reader::from_path(path)?)
}

fn column(headers: &csv::StringRecord, name: &str, file: &Path) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Validation(format!("{}: missing column `{name}`", file.display())))
}

fn variance_curves(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut r = reader(input)?;
    let h = r.headers()?.clone();
    let (f, v, s) = (column(&h, "functional", input)?, column(&h, "volume", input)?, column(&h, "var_over_volume", input)?);
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["functional", "volume", "var_over_volume"])?;
    for row in r.records() {
        let row = row?;
        w.write_record([&row[f], &row[v], &row[s]])?;
    }
    w.flush()?;
    Ok(())
}

fn qq(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut r = reader(input)?;
    let h = r.headers()?.clone();
    let (f, v, x) = (column(&h, "functional", input)?, column(&h, "volume", input)?, column(&h, "value", input)?);
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in r.records() {
        let row = row?;
        let value: f64 = row[x]
            .parse()
            .map_err(|_| CliError::Validation(format!("{}: bad value `{}`", input.display(), &row[x])))?;
        groups.entry((row[f].to_string(), row[v].to_string())).or_default().push(value);
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["functional", "volume", "theoretical_quantile", "empirical_quantile"])?;
    for ((name, volume), mut values) in groups {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        values.sort_by(f64::total_cmp);
        for (i, x) in values.iter().enumerate() {
            let z = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
            let q = normal.inverse_cdf((i as f64 + 0.5) / n);
            w.write_record([name.clone(), volume.clone(), q.to_string(), z.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn trace_rows(input: &Path, out: &Path) -> Result<(), CliError> {
    let mut r = reader(input)?;
    let h = r.headers()?.clone();
    let cols: Vec<usize> = ["trace", "functional", "volume", "value", "case_tag"]
        .iter()
        .map(|c| column(&h, c, input))
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["trace", "functional", "volume", "d0f_value", "case_tag"])?;
    for row in r.records() {
        let row = row?;
        w.write_record(cols.iter().map(|&c| &row[c]))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every bundle whose input exists in `run_dir`; returns the files written.
pub fn emit_plot_data(run_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !run_dir.is_dir() {
        return Err(CliError::Validation(format!("run directory {} does not exist", run_dir.display())));
    }
    std::fs::create_dir_all(out_dir)?;
    type Emit = fn(&Path, &Path) -> Result<(), CliError>;
    let jobs: [(&str, &str, Emit); 4] = [
        ("variance_scaling.csv", "plot_variance_scaling.csv", variance_curves),
        ("samples.csv", "plot_qq.csv", qq),
        ("quenched_samples.csv", "plot_quenched_qq.csv", qq),
        ("traces.csv", "plot_traces.csv", trace_rows),
    ];
    let mut written = Vec::new();
    for (input, output, emit) in jobs {
        let src = run_dir.join(input);
        if src.is_file() {
            let dst = out_dir.join(output);
            emit(&src, &dst)?;
            written.push(dst);
        }
    }
    if written.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no variance_scaling.csv, samples.csv, quenched_samples.csv or traces.csv found",
            run_dir.display()
        )));
    }
    Ok(written)
}
