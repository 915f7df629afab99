//! Experiment configuration, read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::algorithms::MagentaStepsize;
use crate::graph::MixingRule;
use crate::problems::Activation;

fn one() -> u32 {
    1
}

fn one_u64() -> u64 {
    1
}

fn default_max_iters() -> u64 {
    10_000
}

fn default_max_stages() -> u32 {
    100
}

fn default_beta() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_lambda() -> f64 {
    1e-3
}

fn default_rho() -> f64 {
    1.0
}

fn default_flip() -> f64 {
    0.1
}

fn default_input_dim() -> usize {
    3
}

/// A complete experiment: one problem and graph, several algorithm variants,
/// `runs` seeded initial points per variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "one")]
    pub runs: u32,
    /// Stored every `trace_stride` iterations (run classification still sees
    /// every iterate).
    #[serde(default = "one_u64")]
    pub trace_stride: u64,
    /// Output directory for `trace.csv` and `summary.toml`. No files when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Repeat everything for each agent count (data-driven problems only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agent_sweep: Vec<usize>,
    #[serde(default)]
    pub budget: Budget,
    pub problem: ProblemSpec,
    pub graph: GraphSpec,
    #[serde(default)]
    pub init: InitSpec,
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    /// Iteration cap for single-stage algorithms.
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    /// Stage cap for the multi-stage algorithm.
    #[serde(default = "default_max_stages")]
    pub max_stages: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            max_stages: default_max_stages(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    CubicPair,
    QuarticPair,
    Polynomial {
        n_agents: usize,
        dim: usize,
        order: i64,
        terms: Vec<TermSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower_bound: Option<f64>,
    },
    MatrixFactorization {
        rank: usize,
        observations: Vec<f64>,
    },
    Logistic {
        agents: usize,
        /// Total points, split evenly over agents.
        samples: usize,
        dim: usize,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_flip")]
        flip_prob: f64,
        seed: u64,
    },
    Network {
        agents: usize,
        samples_per_agent: usize,
        hidden: usize,
        #[serde(default = "default_input_dim")]
        input_dim: usize,
        #[serde(default)]
        activation: Activation,
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::CubicPair => "cubic_pair",
            ProblemSpec::QuarticPair => "quartic_pair",
            ProblemSpec::Polynomial { .. } => "polynomial",
            ProblemSpec::MatrixFactorization { .. } => "matrix_factorization",
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Network { .. } => "network",
        }
    }

    /// A copy with the agent count replaced, for problems generated from data.
    pub fn with_agents(&self, n: usize) -> Result<ProblemSpec, HarnessError> {
        let mut spec = self.clone();
        match &mut spec {
            ProblemSpec::Logistic { agents, .. } | ProblemSpec::Network { agents, .. } => *agents = n,
            other => {
                return Err(HarnessError::Config(format!(
                    "agent_sweep is not supported for problem kind `{}`",
                    other.kind()
                )))
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub agent: usize,
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub topology: Topology,
    #[serde(default)]
    pub mixing: MixingRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Path,
    Complete,
    RandomGeometric {
        radius: f64,
        seed: u64,
    },
    /// Edge-list file: `n <N>` then one `u v` per line.
    EdgeList {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub distribution: InitDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            distribution: InitDistribution::StandardNormal,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitDistribution {
    #[default]
    StandardNormal,
    Normal {
        mean: f64,
        std: f64,
    },
    /// Row-major `N × K` values, identical for every run.
    Explicit {
        values: Vec<f64>,
    },
}

/// A stepsize that is either fixed or scaled by the initial point:
/// `c · scale / ‖x⁰‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Constant { alpha: f64 },
    Heuristic { c: f64, scale: f64 },
}

impl StepSpec {
    pub fn resolve(self, x0_norm: f64) -> Result<f64, HarnessError> {
        match self {
            StepSpec::Constant { alpha } => Ok(alpha),
            StepSpec::Heuristic { c, scale } => {
                if x0_norm > 0.0 {
                    Ok(c * scale / x0_norm)
                } else {
                    Err(HarnessError::Config(
                        "heuristic stepsize needs a nonzero initial point".into(),
                    ))
                }
            }
        }
    }

    fn validate(self, what: &str) -> Result<(), HarnessError> {
        let ok = match self {
            StepSpec::Constant { alpha } => alpha > 0.0,
            StepSpec::Heuristic { c, scale } => c > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!(
                "{what}: stepsize constants must be positive, got {self:?}"
            )))
        }
    }
}

/// Prox-PDA penalty: fixed, or `‖x⁰‖ / (c · scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    Constant { rho: f64 },
    Heuristic { c: f64, scale: f64 },
}

impl PenaltySpec {
    pub fn resolve(self, x0_norm: f64) -> Result<f64, HarnessError> {
        match self {
            PenaltySpec::Constant { rho } => Ok(rho),
            PenaltySpec::Heuristic { c, scale } => {
                if x0_norm > 0.0 {
                    Ok(x0_norm / (c * scale))
                } else {
                    Err(HarnessError::Config(
                        "heuristic penalty needs a nonzero initial point".into(),
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Dgd {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        step: StepSpec,
        #[serde(default)]
        diminishing: bool,
    },
    GradientTracking {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        step: StepSpec,
    },
    ProxPda {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        penalty: PenaltySpec,
        #[serde(default)]
        beta: f64,
    },
    Magenta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        epsilon: f64,
        d: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        xi: Option<f64>,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        stepsize: MagentaStepsize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_total_iters: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stop_gap_below: Option<f64>,
        #[serde(default = "default_true")]
        early_success: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower_bound: Option<f64>,
    },
}

impl AlgorithmSpec {
    pub fn label(&self) -> String {
        let (label, fallback) = match self {
            AlgorithmSpec::Dgd { label, diminishing, .. } => {
                (label, if *diminishing { "dgd_diminishing" } else { "dgd" }.to_string())
            }
            AlgorithmSpec::GradientTracking { label, .. } => (label, "gradient_tracking".to_string()),
            AlgorithmSpec::ProxPda { label, .. } => (label, "prox_pda".to_string()),
            AlgorithmSpec::Magenta { label, d, .. } => (label, format!("magenta_d{d}")),
        };
        label.clone().unwrap_or(fallback)
    }

    pub(crate) fn validate(&self) -> Result<(), HarnessError> {
        let label = self.label();
        match self {
            AlgorithmSpec::Dgd { step, .. } | AlgorithmSpec::GradientTracking { step, .. } => step.validate(&label),
            AlgorithmSpec::ProxPda { penalty, beta, .. } => {
                let ok = match *penalty {
                    PenaltySpec::Constant { rho } => rho > 0.0,
                    PenaltySpec::Heuristic { c, scale } => c > 0.0 && scale > 0.0,
                };
                if !ok || !(*beta >= 0.0) {
                    return Err(HarnessError::Config(format!(
                        "{label}: penalty must be positive and beta >= 0"
                    )));
                }
                Ok(())
            }
            AlgorithmSpec::Magenta { epsilon, d, beta, .. } => {
                if !(*epsilon > 0.0 && *d > 0.0 && *beta > 0.0 && *beta < 1.0) {
                    return Err(HarnessError::Config(format!(
                        "{label}: need epsilon > 0, d > 0 and beta in (0, 1)"
                    )));
                }
                Ok(())
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Applies `key=value` overrides. Keys are dotted paths, array elements are
    /// addressed by index (`algorithms.0.epsilon`). Values are parsed as TOML
    /// and fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, HarnessError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = toml::Value::try_from(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o.as_ref())?;
        }
        doc.try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<(), HarnessError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{assignment}` is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    let bad = |msg: String| HarnessError::Config(format!("override `{assignment}`: {msg}"));
    let mut cur = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(seg.to_string(), parse_value(raw.trim()));
                    return Ok(());
                }
                t.entry(seg.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = seg.parse().map_err(|_| bad(format!("`{seg}` is not an array index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| bad(format!("index {idx} out of range (len {len})")))?;
                if last {
                    *slot = parse_value(raw.trim());
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(format!("`{seg}` does not name a table or array"))),
        };
    }
    Err(bad("empty key".into()))
}
