//! Experiment configuration document (TOML) and its validation.
//!
//! ```toml
//! schema_version = 1
//! iterations = 1000
//! seed_count = 50          # or: seeds = [0, 1, 2]
//!
//! [graph]
//! type = "cycle"
//! n = 10
//!
//! [initial]
//! type = "uniform"
//! seed = 42
//!
//! [protocol]
//! type = "binary"
//! schedule = { type = "fixed_horizon_optimal" }
//! ```

use std::path::{Path, PathBuf};

use gossip_core::graph::{build_complete, build_cycle, build_random_geometric, default_rgg_radius};
use gossip_core::protocols::{default_stride, phi_from_gamma};
use gossip_core::{ConsensusProblem, Graph, NoiseParams, Protocol, StepsizeSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED_COUNT: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub iterations: u64,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub seed_count: Option<u64>,
    #[serde(default)]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub record_stride: Option<u64>,
    /// Tolerance for the `Delta_t` column. Defaults to the eps-gap tolerance.
    #[serde(default)]
    pub eps_metric: Option<f64>,
    #[serde(default)]
    pub track_dual: bool,
    #[serde(default)]
    pub dump_trajectory: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Iterations at which `bounds` evaluates; defaults to the record grid.
    #[serde(default)]
    pub bound_iterations: Option<Vec<u64>>,
    pub graph: GraphSpec,
    pub initial: InitialSpec,
    pub protocol: ProtocolSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Rgg {
        n: usize,
        #[serde(default)]
        r: Option<f64>,
        seed: u64,
    },
    Edges {
        n: usize,
        edges: Vec<[usize; 2]>,
    },
    /// `.json` files use the structured form, anything else the edge-list text form.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Uniform on `[0, 1]`, from its own seed so `c` is shared across protocols.
    Uniform {
        seed: u64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerNode {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerNode {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>, HarnessError> {
        match self {
            PerNode::Scalar(v) => Ok(vec![*v; n]),
            PerNode::Vector(v) if v.len() == n => Ok(v.clone()),
            PerNode::Vector(v) => Err(HarnessError::config(format!(
                "{what} has {} entries, graph has {n} nodes",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AdaptiveScale {
    /// `"default"` (1/2m) or `"half"` (1/4m).
    Named(String),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        lambda0: f64,
    },
    InverseT {
        a: f64,
    },
    InverseSqrtT {
        a: f64,
    },
    /// `r` defaults to the exact initial dual gap, `horizon` to `iterations`.
    FixedHorizonOptimal {
        #[serde(default)]
        r: Option<f64>,
        #[serde(default)]
        horizon: Option<u64>,
    },
    Adaptive {
        #[serde(default)]
        scale: Option<AdaptiveScale>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Standard,
    Binary {
        schedule: ScheduleSpec,
    },
    EpsGap {
        eps: f64,
    },
    /// Give either `phi` or `gamma` (`phi_i = sqrt(1 - gamma/d_i)`).
    Noise {
        sigma: PerNode,
        #[serde(default)]
        phi: Option<PerNode>,
        #[serde(default)]
        gamma: Option<f64>,
    },
}

/// A validated, fully-instantiated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub problem: ConsensusProblem,
    pub protocol: Protocol,
    pub iterations: u64,
    pub seeds: Vec<u64>,
    pub stride: u64,
    pub eps_metric: Option<f64>,
    pub track_dual: bool,
    pub dump_trajectory: bool,
    pub output_dir: Option<PathBuf>,
    pub bound_iterations: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Validates every field and builds the graph, problem and protocol.
    /// Relative graph file paths resolve against `base_dir`.
    pub fn instantiate(&self, base_dir: &Path) -> Result<Experiment, HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let seeds = self.seed_list()?;
        let stride = match self.record_stride {
            Some(0) => return Err(HarnessError::config("record_stride must be at least 1")),
            Some(s) => s,
            None => default_stride(self.iterations),
        };
        if let Some(eps) = self.eps_metric {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(HarnessError::config(format!(
                    "eps_metric must be positive, got {eps}"
                )));
            }
        }

        let graph = self.graph.build(base_dir)?;
        let c = self.initial.values(graph.n())?;
        let problem = ConsensusProblem::new(graph, c)?;
        let protocol = self.protocol.build(&problem, self.iterations)?;
        protocol.validate(problem.graph().n())?;
        if self.track_dual && !protocol.supports_dual() {
            return Err(HarnessError::config(
                "track_dual is not available for the noise protocol",
            ));
        }
        let eps_metric = self.eps_metric.or(match protocol {
            Protocol::EpsGap { eps } => Some(eps),
            _ => None,
        });

        let bound_iterations = match &self.bound_iterations {
            Some(its) => {
                if its.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(HarnessError::config(
                        "bound_iterations must be strictly increasing",
                    ));
                }
                its.clone()
            }
            None => record_iterations(self.iterations, stride),
        };

        Ok(Experiment {
            problem,
            protocol,
            iterations: self.iterations,
            seeds,
            stride,
            eps_metric,
            track_dual: self.track_dual,
            dump_trajectory: self.dump_trajectory,
            output_dir: self.output_dir.as_ref().map(|p| base_dir.join(p)),
            bound_iterations,
        })
    }

    fn seed_list(&self) -> Result<Vec<u64>, HarnessError> {
        let seeds = match (&self.seeds, self.seed_count) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::config(
                    "give either `seeds` or `seed_count`, not both",
                ))
            }
            (Some(_), None) if self.base_seed.is_some() => {
                return Err(HarnessError::config(
                    "`base_seed` only applies with `seed_count`",
                ))
            }
            (Some(list), None) => list.clone(),
            (None, count) => {
                let base = self.base_seed.unwrap_or(0);
                (0..count.unwrap_or(DEFAULT_SEED_COUNT))
                    .map(|i| base + i)
                    .collect()
            }
        };
        if seeds.is_empty() {
            return Err(HarnessError::config("at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("seeds must be distinct"));
        }
        Ok(sorted)
    }
}

/// `0, stride, 2 stride, ..., k` (always including `k`).
pub fn record_iterations(k: u64, stride: u64) -> Vec<u64> {
    let mut its: Vec<u64> = (0..=k).step_by(stride as usize).collect();
    if its.last() != Some(&k) {
        its.push(k);
    }
    its
}

impl GraphSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Graph, HarnessError> {
        let g = match self {
            GraphSpec::Cycle { n } => build_cycle(*n)?,
            GraphSpec::Complete { n } => build_complete(*n)?,
            GraphSpec::Rgg { n, r, seed } => {
                build_random_geometric(*n, r.unwrap_or_else(|| default_rgg_radius(*n)), *seed)?
            }
            GraphSpec::Edges { n, edges } => {
                Graph::from_edges(*n, edges.iter().map(|&[i, j]| (i, j)).collect())?
            }
            GraphSpec::File { path } => {
                let path = base_dir.join(path);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text)
                        .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?
                } else {
                    Graph::parse_edge_list(&text)?
                }
            }
        };
        Ok(g)
    }
}

impl InitialSpec {
    fn values(&self, n: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            InitialSpec::Uniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..n).map(|_| rng.random::<f64>()).collect())
            }
            InitialSpec::Explicit { values } if values.len() == n => Ok(values.clone()),
            InitialSpec::Explicit { values } => Err(HarnessError::config(format!(
                "initial values have {} entries, graph has {n} nodes",
                values.len()
            ))),
        }
    }
}

impl ProtocolSpec {
    fn build(&self, p: &ConsensusProblem, iterations: u64) -> Result<Protocol, HarnessError> {
        let g = p.graph();
        Ok(match self {
            ProtocolSpec::Standard => Protocol::Standard,
            ProtocolSpec::EpsGap { eps } => Protocol::EpsGap { eps: *eps },
            ProtocolSpec::Binary { schedule } => Protocol::Binary(match schedule {
                ScheduleSpec::Constant { lambda0 } => {
                    StepsizeSchedule::Constant { lambda0: *lambda0 }
                }
                ScheduleSpec::InverseT { a } => StepsizeSchedule::InverseT { a: *a },
                ScheduleSpec::InverseSqrtT { a } => StepsizeSchedule::InverseSqrtT { a: *a },
                ScheduleSpec::FixedHorizonOptimal { r, horizon } => {
                    StepsizeSchedule::FixedHorizonOptimal {
                        r: r.unwrap_or_else(|| p.initial_dual_gap()),
                        horizon: horizon.unwrap_or(iterations),
                    }
                }
                ScheduleSpec::Adaptive { scale } => match scale {
                    None => StepsizeSchedule::adaptive_default(g),
                    Some(AdaptiveScale::Named(name)) if name == "default" => {
                        StepsizeSchedule::adaptive_default(g)
                    }
                    Some(AdaptiveScale::Named(name)) if name == "half" => {
                        StepsizeSchedule::adaptive_experimental(g)
                    }
                    Some(AdaptiveScale::Named(name)) => return Err(HarnessError::config(format!(
                        "unknown adaptive scale `{name}` (use \"default\", \"half\" or a number)"
                    ))),
                    Some(AdaptiveScale::Value(v)) => StepsizeSchedule::Adaptive { scale: *v },
                },
            }),
            ProtocolSpec::Noise { sigma, phi, gamma } => {
                let sigma = sigma.expand(g.n(), "sigma")?;
                let phi = match (phi, gamma) {
                    (Some(phi), None) => phi.expand(g.n(), "phi")?,
                    (None, Some(gamma)) => phi_from_gamma(g, *gamma)?,
                    _ => {
                        return Err(HarnessError::config(
                            "noise protocol needs exactly one of `phi` or `gamma`",
                        ))
                    }
                };
                Protocol::Noise(NoiseParams::new(sigma, phi)?)
            }
        })
    }
}
