//! Mode execution, run directories and manifests.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use rcm_core::graph::{build_graph_with, Boundary};
use rcm_core::io::{self as csvio, LimitRow, PercolationRow};
use rcm_core::limits::{estimate_component_limit, estimate_h_a, estimate_mean_density, estimate_sigma_ab};
use rcm_core::percolation::{estimate_beta_nu, estimate_crossing_theta, estimate_full_capture, estimate_kappa};
use rcm_core::rng::derive_seed;
use rcm_core::stats::{
    clt_report, covariance_from_samples, quenched_run, replication_seeds, run_replications_multi, Model, SampleSet,
};
use rcm_core::topology::betti_of_graph;
use rcm_core::{sample_poisson, stabilization_trace, Functional, PatternGraph, Window};

use crate::config::{ExperimentConfig, Mode, Validated};
use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "RCM_OUT_DIR";
const DEFAULT_OUT_ROOT: &str = "rcm-runs";

/// Hex SHA-256 of the canonical (compact) JSON form of the config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output root: `--out`, then the config's `output_dir`, then `RCM_OUT_DIR`,
/// then `./rcm-runs`.
pub fn output_root(cli_out: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    master_seed: u64,
    mode: String,
    rcm_version: &'static str,
    started_unix: u64,
    wall_time_secs: f64,
    files: Vec<String>,
    config: &'a ExperimentConfig,
}

struct RunDir {
    path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.path.join(name))?))
    }
}

fn window(d: usize, volume: f64) -> Result<Window, CliError> {
    Ok(Window::centered(d, volume.powf(1.0 / d as f64))?)
}

/// Runs a validated experiment and returns the run directory.
pub fn execute(v: &Validated, root: &Path) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let hash = config_hash(&v.config);
    let path = root.join(&hash[..16]);
    fs::create_dir_all(&path)?;
    let mut dir = RunDir { path, files: Vec::new() };
    match v.config.mode {
        Mode::Sample => sample(v, &mut dir)?,
        Mode::Estimate | Mode::Clt => estimate(v, &mut dir)?,
        Mode::Limits => limits(v, &mut dir)?,
        Mode::Betti => betti(v, &mut dir)?,
        Mode::Stabilize => stabilize(v, &mut dir)?,
        Mode::Percolation => percolation(v, &mut dir)?,
        Mode::Quenched => quenched(v, &mut dir)?,
    }
    let manifest = Manifest {
        config_hash: &hash,
        master_seed: v.config.master_seed,
        mode: v.config.mode.to_string(),
        rcm_version: env!("CARGO_PKG_VERSION"),
        started_unix,
        wall_time_secs: started.elapsed().as_secs_f64(),
        files: dir.files.clone(),
        config: &v.config,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(dir.path.join("manifest.json"), text)?;
    Ok(dir.path)
}

fn model(v: &Validated) -> Model {
    let boundary = if v.config.periodic { Boundary::Periodic } else { Boundary::Free };
    Model::new(v.phi.clone(), v.config.lambda, boundary)
}

fn volume_seed(v: &Validated, i: usize) -> u64 {
    derive_seed(v.config.master_seed, 0x0056_4F4C, i as u64)
}

fn sample(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let m = model(v);
    for (i, &vol) in c.volumes.iter().enumerate() {
        let w = window(c.dimension, vol)?;
        for rep in 0..c.reps {
            let (ps, es) = replication_seeds(volume_seed(v, i), rep);
            let config = sample_poisson(&w, c.lambda, ps)?;
            let g = build_graph_with(&config, &m.phi, es, m.boundary)?;
            csvio::write_configuration(&config, dir.create(&format!("configuration_v{i}_r{rep}.csv"))?)?;
            csvio::write_edges(&g, dir.create(&format!("edges_v{i}_r{rep}.csv"))?)?;
        }
    }
    Ok(())
}

fn estimate(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let m = model(v);
    let mut all: Vec<SampleSet> = Vec::new();
    let mut reports = Vec::new();
    let mut last: Vec<SampleSet> = Vec::new();
    for (i, &vol) in c.volumes.iter().enumerate() {
        let w = window(c.dimension, vol)?;
        let sets = run_replications_multi(&v.functionals, &w, &m, c.reps, volume_seed(v, i))?;
        for (j, s) in sets.iter().enumerate() {
            let r = clt_report(s, derive_seed(volume_seed(v, i), 0x4253, j as u64));
            reports.push((s.functional.clone(), s.volume, r));
        }
        all.extend(sets.iter().cloned());
        last = sets;
    }
    csvio::write_samples(&all, dir.create("samples.csv")?)?;
    csvio::write_reports(&reports, dir.create("reports.csv")?)?;
    if c.mode == Mode::Clt {
        let mut w = csv::Writer::from_writer(dir.create("variance_scaling.csv")?);
        w.write_record(["functional", "volume", "var_over_volume", "stderr"])?;
        for (name, vol, r) in &reports {
            w.write_record([
                name.clone(),
                vol.to_string(),
                r.variance_over_volume.to_string(),
                (r.variance_stderr / vol).to_string(),
            ])?;
        }
        w.flush()?;
        if last.len() >= 2 {
            csvio::write_covariance(&covariance_from_samples(&last)?, dir.create("covariance.csv")?)?;
        }
    }
    Ok(())
}

fn limits(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let n = c.options.samples;
    let seed = |k: u64| derive_seed(c.master_seed, 0x4C494D, k);
    let mut rows = Vec::new();
    let row = |quantity: &str, a: &PatternGraph, b: Option<&PatternGraph>, estimate| LimitRow {
        quantity: quantity.into(),
        pattern_a: a.to_string(),
        pattern_b: b.map(ToString::to_string).unwrap_or_default(),
        lambda: c.lambda,
        estimate,
    };
    let mut subgraphs = Vec::new();
    for (i, f) in v.functionals.iter().enumerate() {
        let k = i as u64;
        match f {
            Functional::SubgraphCount(a) => {
                rows.push(row("h_a", a, None, estimate_h_a(&v.phi, c.lambda, a, n, seed(3 * k))?));
                rows.push(row("mean_density", a, None, estimate_mean_density(a, &v.phi, c.lambda, n, seed(3 * k))?));
                subgraphs.push(a.clone());
            }
            Functional::ComponentIsoCount(a) => {
                let cl = estimate_component_limit(a, &v.phi, c.lambda, n, seed(3 * k + 1))?;
                rows.push(row("component_limit_printed", a, None, cl.printed));
                rows.push(row("component_limit_lambda_scaled", a, None, cl.lambda_scaled));
            }
            _ => {}
        }
    }
    for i in 0..subgraphs.len() {
        for j in i..subgraphs.len() {
            let (a, b) = (&subgraphs[i], &subgraphs[j]);
            let s = estimate_sigma_ab(a, b, &v.phi, c.lambda, n, seed(1_000 + (i * 64 + j) as u64))?;
            rows.push(row("sigma_ab", a, Some(b), s));
        }
    }
    csvio::write_limits(&rows, dir.create("limits.csv")?)?;
    Ok(())
}

fn betti(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let m = model(v);
    let k_max = c.options.betti_max;
    for (i, &vol) in c.volumes.iter().enumerate() {
        let w = window(c.dimension, vol)?;
        let rows: Vec<(usize, Vec<i64>)> = (0..c.reps)
            .into_par_iter()
            .map(|rep| {
                let (ps, es) = replication_seeds(volume_seed(v, i), rep);
                let config = sample_poisson(&w, c.lambda, ps)?;
                let g = build_graph_with(&config, &m.phi, es, m.boundary)?;
                Ok((rep, betti_of_graph(&g, k_max)?))
            })
            .collect::<Result<_, rcm_core::Error>>()?;
        csvio::write_betti(&rows, w.volume(), dir.create(&format!("betti_v{i}.csv"))?)?;
        let reports: Vec<_> = (0..=k_max)
            .map(|k| {
                let s = SampleSet {
                    functional: format!("betti({k})"),
                    volume: w.volume(),
                    values: rows.iter().map(|r| r.1[k] as f64).collect(),
                    seeds: (0..c.reps).map(|r| replication_seeds(volume_seed(v, i), r)).collect(),
                };
                (s.functional.clone(), s.volume, clt_report(&s, derive_seed(volume_seed(v, i), 0x4254, k as u64)))
            })
            .collect();
        csvio::write_reports(&reports, dir.create(&format!("betti_reports_v{i}.csv"))?)?;
    }
    Ok(())
}

fn stabilize(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let largest = *c.volumes.last().expect("validated non-empty");
    let w = window(c.dimension, largest)?;
    let mut traces = Vec::new();
    for (j, f) in v.functionals.iter().enumerate() {
        let seed = derive_seed(c.master_seed, 0x5354, j as u64);
        let batch: Vec<_> = (0..c.reps)
            .into_par_iter()
            .map(|rep| {
                let (ps, es) = replication_seeds(seed, rep);
                let config = sample_poisson(&w, c.lambda, ps)?;
                stabilization_trace(f, &config, &c.volumes, &v.phi, es)
            })
            .collect::<Result<_, rcm_core::Error>>()?;
        traces.extend(batch);
    }
    csvio::write_traces(&traces, dir.create("traces.csv")?)?;
    Ok(())
}

fn percolation(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let o = &c.options;
    let seed = |k: u64| derive_seed(c.master_seed, 0x5045, k);
    let all = vec![true; c.dimension];
    let row = |quantity: &str, delta, s, t, alpha, estimate| PercolationRow {
        quantity: quantity.into(),
        delta,
        s,
        t,
        alpha,
        lambda: c.lambda,
        estimate,
    };
    let mut rows = vec![
        row("kappa", None, None, Some(o.t), Some(o.alpha), estimate_kappa(&v.phi, c.lambda, o.alpha, o.t, c.reps, seed(0))?),
        row(
            "theta",
            Some(o.delta),
            Some(o.s),
            Some(o.t),
            None,
            estimate_crossing_theta(&v.phi, c.lambda, &all, o.delta, o.s, o.t, c.reps, seed(1))?,
        ),
    ];
    let bn = estimate_beta_nu(&v.phi, c.lambda, o.delta, o.s, o.t, c.reps, seed(2), o.guard_factor, o.nu_grid)?;
    rows.push(row("beta", Some(o.delta), None, Some(o.t), None, bn.beta));
    rows.push(row("nu", Some(o.delta), Some(o.s), Some(o.t), None, bn.nu));
    for (i, &vol) in c.volumes.iter().enumerate() {
        let e = estimate_full_capture(&v.phi, c.lambda, o.delta, vol, c.reps, seed(10 + i as u64))?;
        rows.push(row(&format!("full_capture_volume_{vol}"), Some(o.delta), None, None, None, e));
    }
    csvio::write_percolation(&rows, dir.create("percolation.csv")?)?;
    Ok(())
}

fn quenched(v: &Validated, dir: &mut RunDir) -> Result<(), CliError> {
    let c = &v.config;
    let m = model(v);
    let w = window(c.dimension, c.volumes[0])?;
    let mut summary = csv::Writer::from_writer(dir.create("quenched.csv")?);
    summary.write_record([
        "functional",
        "draw",
        "conditional_mean",
        "conditional_variance",
        "sigma_q2",
        "sigma_q2_stderr",
        "w2",
        "degenerate",
    ])?;
    let mut samples = Vec::new();
    for (j, f) in v.functionals.iter().enumerate() {
        for draw in 0..c.reps {
            let seed = derive_seed(c.master_seed, 0x5155 + j as u64, draw as u64);
            let q = quenched_run(seed, c.options.edge_reps, f, &w, &m)?;
            summary.write_record([
                f.to_string(),
                draw.to_string(),
                q.conditional_mean.to_string(),
                q.conditional_variance.to_string(),
                q.sigma_q2.to_string(),
                q.sigma_q2_stderr.to_string(),
                q.w2.to_string(),
                q.degenerate.to_string(),
            ])?;
            samples.push(q.samples);
        }
    }
    summary.flush()?;
    csvio::write_samples(&samples, dir.create("quenched_samples.csv")?)?;
    Ok(())
}
