//! Replication harness: i.i.d. realizations, moments, normality checks,
//! covariance matrices and the quenched (frozen positions) experiment.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::graph::{build_graph_with, Boundary};
use crate::point_process::{sample_poisson, Window};
use crate::rng::{derive_seed, stream};

const POINT_STREAM: u64 = 1;
const EDGE_STREAM: u64 = 2;
const VOLUME_STREAM: u64 = 3;
const QUENCHED_EDGE_STREAM: u64 = 4;
const BOOTSTRAP_STREAM: u64 = 5;

pub const BOOTSTRAP_SIZE: usize = 1000;
/// Below this many replications the KS branch is skipped.
pub const MIN_KS_REPS: usize = 50;

/// The model a harness run simulates.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub phi: ConnectionFunction,
    pub lambda: f64,
    pub boundary: Boundary,
}

impl Model {
    pub fn new(phi: ConnectionFunction, lambda: f64, boundary: Boundary) -> Self {
        Self { phi, lambda, boundary }
    }
}

/// Realizations of one functional on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub functional: String,
    pub volume: f64,
    pub values: Vec<f64>,
    /// `(point_seed, edge_seed)` per replication.
    pub seeds: Vec<(u64, u64)>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(point_seed, edge_seed)` of replication `rep`.
pub fn replication_seeds(master_seed: u64, rep: usize) -> (u64, u64) {
    (
        derive_seed(master_seed, POINT_STREAM, rep as u64),
        derive_seed(master_seed, EDGE_STREAM, rep as u64),
    )
}

/// Evaluates every functional on the same `reps` independent realizations.
pub fn run_replications_multi(
    functionals: &[Functional],
    window: &Window,
    model: &Model,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<SampleSet>> {
    if reps < 2 {
        return Err(Error::invalid("reps", format!("need at least 2, got {reps}")));
    }
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let (ps, es) = replication_seeds(master_seed, rep);
            let config = sample_poisson(window, model.lambda, ps)?;
            let g = build_graph_with(&config, &model.phi, es, model.boundary)?;
            functionals.iter().map(|f| Ok(f.evaluate(&g)? as f64)).collect()
        })
        .collect::<Result<_>>()?;
    let seeds: Vec<(u64, u64)> = (0..reps).map(|r| replication_seeds(master_seed, r)).collect();
    Ok(functionals
        .iter()
        .enumerate()
        .map(|(i, f)| SampleSet {
            functional: f.to_string(),
            volume: window.volume(),
            values: rows.iter().map(|r| r[i]).collect(),
            seeds: seeds.clone(),
        })
        .collect())
}

pub fn run_replications(
    functional: &Functional,
    window: &Window,
    model: &Model,
    reps: usize,
    master_seed: u64,
) -> Result<SampleSet> {
    Ok(run_replications_multi(std::slice::from_ref(functional), window, model, reps, master_seed)?.remove(0))
}

/// Streaming central moments up to order four.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        for &x in xs {
            m.push(x);
        }
        m
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn skewness(&self) -> f64 {
        if self.m2 == 0.0 {
            return 0.0;
        }
        (self.n as f64).sqrt() * self.m3 / self.m2.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        if self.m2 == 0.0 {
            return 0.0;
        }
        self.n as f64 * self.m4 / (self.m2 * self.m2) - 3.0
    }

    /// Approximate standard error of [`Moments::variance`],
    /// `sqrt((μ_4 - σ^4) / n)`.
    pub fn variance_stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mu4 = self.m4 / n;
        let s2 = self.m2 / n;
        ((mu4 - s2 * s2).max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub mean: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    pub variance_over_volume: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub bootstrap_p_value: Option<f64>,
    pub reps: usize,
    /// Set when the sample variance is zero.
    pub degenerate: bool,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `sup |F_n - Φ|` of the sample standardized by its own mean and deviation.
pub fn ks_statistic(values: &[f64]) -> f64 {
    let m = Moments::from_slice(values);
    let sd = m.variance().sqrt();
    let mut z: Vec<f64> = values.iter().map(|v| (v - m.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let normal = std_normal();
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        // the alternating series converges slowly here and the tail is 1 to machine precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic on `n` points, with Stephens'
/// finite-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// Parametric bootstrap p-value of the estimated-parameter KS statistic.
///
/// Null samples are normal with the observed mean and deviation, rounded to
/// integers when every observation is an integer.
pub fn bootstrap_ks_p_value(values: &[f64], b: usize, seed: u64) -> f64 {
    let m = Moments::from_slice(values);
    let sd = m.variance().sqrt();
    let observed = ks_statistic(values);
    let integral = values.iter().all(|v| v.fract() == 0.0);
    let n = values.len();
    let exceed: usize = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(derive_seed(seed, BOOTSTRAP_STREAM, i as u64));
            let sample: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = m.mean + sd * z;
                    if integral {
                        x.round()
                    } else {
                        x
                    }
                })
                .collect();
            let sm = Moments::from_slice(&sample);
            usize::from(sm.variance() == 0.0 || ks_statistic(&sample) >= observed)
        })
        .sum();
    (exceed + 1) as f64 / (b + 1) as f64
}

/// Moments and normality checks for a sample set.
pub fn clt_report(samples: &SampleSet, bootstrap_seed: u64) -> CltReport {
    let m = Moments::from_slice(&samples.values);
    let variance = m.variance();
    let degenerate = variance == 0.0;
    let (ks, p, pb) = if degenerate || samples.len() < MIN_KS_REPS {
        (None, None, None)
    } else {
        let d = ks_statistic(&samples.values);
        (
            Some(d),
            Some(ks_p_value(d, samples.len())),
            Some(bootstrap_ks_p_value(&samples.values, BOOTSTRAP_SIZE, bootstrap_seed)),
        )
    };
    CltReport {
        mean: m.mean,
        variance,
        variance_stderr: m.variance_stderr(),
        variance_over_volume: variance / samples.volume,
        skewness: m.skewness(),
        excess_kurtosis: m.excess_kurtosis(),
        ks_statistic: ks,
        ks_p_value: p,
        bootstrap_p_value: pb,
        reps: samples.len(),
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub volume: f64,
    pub report: CltReport,
}

/// Per-volume reports on centred cubes; each volume gets its own seed.
pub fn variance_scaling(
    functional: &Functional,
    volumes: &[f64],
    model: &Model,
    reps: usize,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    if volumes.len() < 2 {
        return Err(Error::invalid("volumes", "need at least two volumes"));
    }
    let d = model.phi.dim();
    volumes
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let window = Window::centered(d, v.powf(1.0 / d as f64))?;
            let s = derive_seed(seed, VOLUME_STREAM, i as u64);
            let samples = run_replications(functional, &window, model, reps, s)?;
            Ok(ScalingRow {
                volume: window.volume(),
                report: clt_report(&samples, s),
            })
        })
        .collect()
}

/// Covariances of several functionals on shared realizations, divided by `|W|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub names: Vec<String>,
    pub volume: f64,
    pub matrix: Vec<Vec<f64>>,
    /// Standard errors of `matrix` entries.
    pub stderr: Vec<Vec<f64>>,
    /// `(Var[X+Y] - Var[X-Y]) / (4|W|)` for every pair.
    pub polarization: Vec<Vec<f64>>,
}

fn covariance(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let cov = prods.iter().sum::<f64>() / (n - 1.0);
    let pm = Moments::from_slice(&prods);
    (cov, (pm.variance() / n).sqrt())
}

pub fn covariance_from_samples(sets: &[SampleSet]) -> Result<CovarianceReport> {
    if sets.len() < 2 {
        return Err(Error::invalid("functionals", "need at least two functionals"));
    }
    let volume = sets[0].volume;
    let k = sets.len();
    let mut matrix = vec![vec![0.0; k]; k];
    let mut stderr = vec![vec![0.0; k]; k];
    let mut polarization = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let (c, se) = covariance(&sets[i].values, &sets[j].values);
            matrix[i][j] = c / volume;
            stderr[i][j] = se / volume;
            let sum: Vec<f64> = sets[i].values.iter().zip(&sets[j].values).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = sets[i].values.iter().zip(&sets[j].values).map(|(a, b)| a - b).collect();
            polarization[i][j] =
                (Moments::from_slice(&sum).variance() - Moments::from_slice(&diff).variance()) / (4.0 * volume);
        }
    }
    Ok(CovarianceReport {
        names: sets.iter().map(|s| s.functional.clone()).collect(),
        volume,
        matrix,
        stderr,
        polarization,
    })
}

pub fn covariance_report(
    functionals: &[Functional],
    window: &Window,
    model: &Model,
    reps: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if functionals.len() < 2 {
        return Err(Error::invalid("functionals", "need at least two functionals"));
    }
    covariance_from_samples(&run_replications_multi(functionals, window, model, reps, seed)?)
}

/// One frozen configuration with many edge realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedReport {
    /// `Z = (f - mean_2 f) / sqrt(|W|)` per edge realization.
    pub samples: SampleSet,
    pub conditional_mean: f64,
    pub conditional_variance: f64,
    /// `conditional_variance / |W|`.
    pub sigma_q2: f64,
    pub sigma_q2_stderr: f64,
    /// Empirical `W_2` between the `Z` sample and `N(0, sigma_q2)`.
    pub w2: f64,
    /// Set when the edge realizations never change the value.
    pub degenerate: bool,
}

/// `W_2` between an empirical sample and `N(0, s2)` by quantile coupling at
/// the midpoints `(i - 1/2) / n`.
pub fn wasserstein2_normal(values: &[f64], s2: f64) -> f64 {
    let mut z = values.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let normal = std_normal();
    let sd = s2.max(0.0).sqrt();
    let sq: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let q = sd * normal.inverse_cdf((i as f64 + 0.5) / n);
            (x - q) * (x - q)
        })
        .sum();
    (sq / n).sqrt()
}

pub fn quenched_run(
    positions_seed: u64,
    edge_reps: usize,
    functional: &Functional,
    window: &Window,
    model: &Model,
) -> Result<QuenchedReport> {
    if edge_reps < 2 {
        return Err(Error::invalid("edge_reps", format!("need at least 2, got {edge_reps}")));
    }
    let config = sample_poisson(window, model.lambda, positions_seed)?;
    let edge_seeds: Vec<u64> = (0..edge_reps)
        .map(|r| derive_seed(positions_seed, QUENCHED_EDGE_STREAM, r as u64))
        .collect();
    let values: Vec<f64> = edge_seeds
        .par_iter()
        .map(|&es| {
            let g = build_graph_with(&config, &model.phi, es, model.boundary)?;
            Ok(functional.evaluate(&g)? as f64)
        })
        .collect::<Result<_>>()?;
    let m = Moments::from_slice(&values);
    let volume = window.volume();
    let scale = volume.sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - m.mean) / scale).collect();
    let sigma_q2 = m.variance() / volume;
    Ok(QuenchedReport {
        w2: wasserstein2_normal(&z, sigma_q2),
        samples: SampleSet {
            functional: functional.to_string(),
            volume,
            values: z,
            seeds: edge_seeds.iter().map(|&e| (positions_seed, e)).collect(),
        },
        conditional_mean: m.mean,
        conditional_variance: m.variance(),
        sigma_q2,
        sigma_q2_stderr: m.variance_stderr() / volume,
        degenerate: m.variance() == 0.0,
    })
}

/// `Var = E[Var_2] + Var[E_2]`, each side divided by `|W|`.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalVarianceReport {
    /// Annealed `σ̂²` from independent replications.
    pub annealed: f64,
    pub annealed_stderr: f64,
    /// Mean of the conditional variances.
    pub within: f64,
    /// Variance of the conditional means, corrected for edge noise.
    pub between: f64,
    pub decomposition_stderr: f64,
    pub quenched: Vec<QuenchedReport>,
}

impl TotalVarianceReport {
    pub fn decomposition(&self) -> f64 {
        self.within + self.between
    }
}

pub fn total_variance_check(
    functional: &Functional,
    window: &Window,
    model: &Model,
    position_draws: usize,
    edge_reps: usize,
    annealed_reps: usize,
    seed: u64,
) -> Result<TotalVarianceReport> {
    if position_draws < 2 {
        return Err(Error::invalid("position_draws", "need at least 2"));
    }
    let volume = window.volume();
    let annealed = run_replications(functional, window, model, annealed_reps, derive_seed(seed, 6, 0))?;
    let am = Moments::from_slice(&annealed.values);
    let quenched: Vec<QuenchedReport> = (0..position_draws)
        .map(|p| quenched_run(derive_seed(seed, 7, p as u64), edge_reps, functional, window, model))
        .collect::<Result<_>>()?;
    let cond_vars: Vec<f64> = quenched.iter().map(|q| q.conditional_variance).collect();
    let cond_means: Vec<f64> = quenched.iter().map(|q| q.conditional_mean).collect();
    let vm = Moments::from_slice(&cond_vars);
    let mm = Moments::from_slice(&cond_means);
    let within = vm.mean / volume;
    let between = (mm.variance() - vm.mean / edge_reps as f64) / volume;
    let pd = position_draws as f64;
    let decomposition_stderr = ((vm.variance() / pd).sqrt() + mm.variance_stderr()) / volume;
    Ok(TotalVarianceReport {
        annealed: am.variance() / volume,
        annealed_stderr: am.variance_stderr() / volume,
        within,
        between,
        decomposition_stderr,
        quenched,
    })
}
