//! Experiment configuration: strict JSON parsing and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rcm_core::{ConnectionFunction, Functional, PatternGraph, Profile};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sample,
    Estimate,
    Clt,
    Limits,
    Betti,
    Stabilize,
    Percolation,
    Quenched,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Indicator { radius: f64 },
    Gaussian { scale: f64 },
    PolyTail { c0: f64, epsilon0: f64, cutoff: f64 },
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl PhiSpec {
    pub fn build(&self, dim: usize) -> Result<ConnectionFunction, CliError> {
        let profile = match self.clone() {
            PhiSpec::Indicator { radius } => Profile::Indicator { radius },
            PhiSpec::Gaussian { scale } => Profile::Gaussian { scale },
            PhiSpec::PolyTail { c0, epsilon0, cutoff } => Profile::PolyTail { c0, epsilon0, cutoff },
            PhiSpec::Tabulated { radii, values } => Profile::Tabulated { radii, values },
        };
        ConnectionFunction::new(profile, dim).map_err(|e| CliError::field("phi", e))
    }
}

/// A builtin name (`K3`, `P3`, `O_1`, `Vertex`, ...) or an edge list over `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternSpec {
    Builtin(String),
    Edges(Vec<[usize; 2]>),
}

impl PatternSpec {
    pub fn build(&self) -> Result<PatternGraph, rcm_core::Error> {
        match self {
            PatternSpec::Builtin(s) => s.parse(),
            PatternSpec::Edges(edges) => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                let order = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);
                PatternGraph::new(order, &pairs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl FunctionalSpec {
    pub fn build(&self) -> Result<Functional, CliError> {
        let field = || format!("functionals[{}]", self.name);
        let pattern = || -> Result<PatternGraph, CliError> {
            let spec = self
                .pattern
                .as_ref()
                .ok_or_else(|| CliError::Validation(format!("{}: `pattern` is required", field())))?;
            spec.build().map_err(|e| CliError::Validation(format!("{}.pattern: {e}", field())))
        };
        let f = match self.name.as_str() {
            "vertex_count" => Functional::VertexCount,
            "edge_count" => Functional::EdgeCount,
            "component_count" => Functional::ComponentCount,
            "biggest_component_size" => Functional::BiggestComponentSize,
            "subgraph_count" => Functional::SubgraphCount(pattern()?),
            "component_iso_count" => Functional::ComponentIsoCount(pattern()?),
            "betti" => Functional::Betti(
                self.k
                    .ok_or_else(|| CliError::Validation(format!("{}: `k` is required", field())))?,
            ),
            other => return Err(CliError::Validation(format!("functionals: unknown functional `{other}`"))),
        };
        if let Functional::SubgraphCount(a) | Functional::ComponentIsoCount(a) = &f {
            if !a.is_connected() {
                return Err(CliError::Validation(format!("{}.pattern: pattern must be connected", field())));
            }
        }
        Ok(f)
    }
}

/// Knobs used by individual modes; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Importance samples per limit estimate.
    pub samples: usize,
    /// Edge realizations per frozen configuration in quenched mode.
    pub edge_reps: usize,
    /// Largest Betti index reported in betti mode.
    pub betti_max: usize,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub alpha: f64,
    pub guard_factor: f64,
    pub nu_grid: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            samples: 100_000,
            edge_reps: 200,
            betti_max: 1,
            delta: 0.5,
            s: 1.0,
            t: 2.0,
            alpha: 0.5,
            guard_factor: rcm_core::percolation::DEFAULT_GUARD_FACTOR,
            nu_grid: rcm_core::percolation::DEFAULT_NU_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dimension: usize,
    pub lambda: f64,
    pub phi: PhiSpec,
    pub volumes: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec>,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: Options,
}

/// A config with every derived object built.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub phi: ConnectionFunction,
    pub functionals: Vec<Functional>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(self) -> Result<Validated, CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Validation(format!("{field}: {msg}")));
        if self.dimension == 0 {
            return bad("dimension", "must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", format!("must be positive and finite, got {}", self.lambda));
        }
        let phi = self.phi.build(self.dimension)?;
        if self.volumes.is_empty() {
            return bad("volumes", "at least one volume is required".into());
        }
        if let Some(v) = self.volumes.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return bad("volumes", format!("volumes must be positive, got {v}"));
        }
        let needs_increasing = matches!(self.mode, Mode::Stabilize);
        if needs_increasing && self.volumes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("volumes", "must be strictly increasing in stabilize mode".into());
        }
        let min_reps = match self.mode {
            Mode::Sample | Mode::Limits | Mode::Stabilize | Mode::Percolation => 1,
            Mode::Estimate | Mode::Clt | Mode::Betti | Mode::Quenched => 2,
        };
        if self.reps < min_reps {
            return bad("reps", format!("{} mode needs reps >= {min_reps}, got {}", self.mode, self.reps));
        }
        let functionals = self.functionals.iter().map(FunctionalSpec::build).collect::<Result<Vec<_>, _>>()?;
        let needs_functional = matches!(self.mode, Mode::Estimate | Mode::Clt | Mode::Stabilize | Mode::Quenched | Mode::Limits);
        if needs_functional && functionals.is_empty() {
            return bad("functionals", format!("{} mode needs at least one functional", self.mode));
        }
        if self.mode == Mode::Limits
            && !functionals
                .iter()
                .any(|f| matches!(f, Functional::SubgraphCount(_) | Functional::ComponentIsoCount(_)))
        {
            return bad("functionals", "limits mode needs subgraph_count or component_iso_count".into());
        }
        let o = &self.options;
        if self.mode == Mode::Limits && o.samples < 2 {
            return bad("options.samples", "need at least 2".into());
        }
        if self.mode == Mode::Quenched && o.edge_reps < 2 {
            return bad("options.edge_reps", "need at least 2".into());
        }
        if self.mode == Mode::Percolation {
            for (name, v) in [("options.delta", o.delta), ("options.s", o.s), ("options.alpha", o.alpha)] {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(name, format!("must be positive, got {v}"));
                }
            }
            if o.t < 2.0 * o.s {
                return bad("options.t", format!("need t >= 2s, got s = {}, t = {}", o.s, o.t));
            }
            if o.guard_factor < 1.0 {
                return bad("options.guard_factor", "must be at least 1".into());
            }
        }
        Ok(Validated {
            phi,
            functionals,
            config: self,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "mode": "clt",
        "dimension": 2,
        "lambda": 1.0,
        "phi": {"kind": "gaussian", "scale": 1.0},
        "volumes": [25.0],
        "functionals": [{"name": "subgraph_count", "pattern": "K3"}, {"name": "betti", "k": 1},
                        {"name": "component_iso_count", "pattern": [[0, 1], [1, 2]]}],
        "reps": 4,
        "master_seed": 7
    }"#;

    #[test]
    fn round_trip_is_identity() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let v = b.validate().unwrap();
        assert_eq!(v.functionals[2].to_string(), "component_iso_count(0-1;1-2)");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"reps\"", "\"repz\": 1, \"reps\"");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = MINIMAL.replace("\"scale\": 1.0", "\"scale\": 1.0, \"width\": 2");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.reps = 1;
        let e = c.clone().validate().unwrap_err().to_string();
        assert!(e.contains("reps"), "{e}");
        c.reps = 4;
        c.lambda = -1.0;
        assert!(c.clone().validate().unwrap_err().to_string().contains("lambda"));
        c.lambda = 1.0;
        c.phi = PhiSpec::Gaussian { scale: 0.0 };
        assert!(c.validate().unwrap_err().to_string().contains("phi"));
    }
}
