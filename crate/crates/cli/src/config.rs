//! JSON experiment configuration.
//!
//! Every optional field has a per-command default. Before a command runs the
//! defaults it uses are written back into the config, and that materialized
//! config is embedded in the output artifact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use snnss::{Configuration, Graph, NamedGraph, RateTable};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Cycle { n: usize },
    Torus { sides: Vec<usize> },
    Named { name: String },
    /// Whitespace-separated `u v` pairs, one edge per line. Relative paths are
    /// taken from the config file's directory.
    EdgeList { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSpec {
    Explicit {
        lambda: Vec<f64>,
        mu: Vec<f64>,
    },
    NoisyVoter {
        d: f64,
        h1: f64,
        h2: f64,
    },
    /// `h = 0` threshold model with jumps `a` (births) and `b` (deaths).
    Degenerate {
        a: f64,
        b: f64,
    },
    /// Symmetric threshold model; `q` defaults to the degree.
    Threshold {
        h: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<usize>,
    },
    GeneralizedThreshold {
        h: f64,
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// A `0`/`1` string, one character per vertex.
    Configuration { bits: String },
    /// `empty`, `full`, `eta1` or `eta2`.
    Fixture { name: String },
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Configurations drawn when the graph is too large to enumerate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// verify-identities: check the second-order counting identity instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<bool>,
    /// mcf-compare: solve the full chain when the graph is small enough.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    /// prop2: the second graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<f64>>,
    /// conjecture-probe: number of random tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// Reads a config and makes relative edge-list paths absolute.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in [Some(&mut config.graph), config.compare_graph.as_mut()]
            .into_iter()
            .flatten()
        {
            if let GraphSpec::EdgeList { path } = spec {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(config)
    }

    pub fn rates(&self) -> Result<&RateSpec, CliError> {
        self.rates
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `rates` section".into()))
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, CliError> {
        Ok(match self {
            GraphSpec::Cycle { n } => Graph::cycle(*n)?,
            GraphSpec::Torus { sides } => Graph::torus(sides)?,
            GraphSpec::Named { name } => Graph::named(name.parse::<NamedGraph>()?),
            GraphSpec::EdgeList { path } => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Graph::from_edge_list(&text)?
            }
        })
    }
}

impl RateSpec {
    pub fn build(&self, s: usize) -> Result<RateTable, CliError> {
        Ok(match self {
            RateSpec::Explicit { lambda, mu } => RateTable::new(lambda.clone(), mu.clone())?,
            RateSpec::NoisyVoter { d, h1, h2 } => RateTable::noisy_voter(s, *d, *h1, *h2)?,
            RateSpec::Degenerate { a, b } => RateTable::generalized_threshold(s, s, 0.0, *a, *b)?,
            RateSpec::Threshold { h, a, q } => RateTable::threshold_noisy(s, q.unwrap_or(s), *h, *a)?,
            RateSpec::GeneralizedThreshold { h, a, b, q } => {
                RateTable::generalized_threshold(s, q.unwrap_or(s), *h, *a, *b)?
            }
        })
    }
}

/// A resolved initial condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Point(Configuration),
    Bernoulli(f64),
}

impl InitConfig {
    pub fn resolve(&self, g: &Graph) -> Result<Start, CliError> {
        let n = g.vertex_count();
        match self {
            InitConfig::Configuration { bits } => {
                let c: Configuration = bits.parse()?;
                if c.len() != n {
                    return Err(CliError::Config(format!(
                        "configuration has {} sites, graph has {n}",
                        c.len()
                    )));
                }
                Ok(Start::Point(c))
            }
            InitConfig::Fixture { name } => {
                let c = match name.as_str() {
                    "empty" => Configuration::empty(n),
                    "full" => Configuration::full(n),
                    "eta1" | "eta2" => {
                        let (y, u1) = g
                            .edges()
                            .next()
                            .ok_or_else(|| CliError::Config("graph has no edges".into()))?;
                        let c = Configuration::eta1(g, y, u1)?;
                        if name == "eta1" {
                            c
                        } else {
                            // second neighbor of y, next to the empty pair
                            let u2 = g
                                .neighbors(y)
                                .iter()
                                .copied()
                                .find(|&v| v != u1)
                                .ok_or_else(|| CliError::Config("degree too small for eta2".into()))?;
                            c.flipped(u2)
                        }
                    }
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown fixture `{other}` (expected empty, full, eta1 or eta2)"
                        )))
                    }
                };
                Ok(Start::Point(c))
            }
            InitConfig::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(CliError::Config(format!("bernoulli p = {p} not in [0, 1]")));
                }
                Ok(Start::Bernoulli(*p))
            }
        }
    }
}
