//! Named experiment setups.

use std::fmt;
use std::str::FromStr;

use super::{ExperimentConfig, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    /// DGD, constant step, on the cubic pair.
    Claim1Const,
    /// DGD, diminishing step, on the cubic pair.
    Claim1Dim,
    /// Gradient tracking on the cubic pair.
    Claim2Gt,
    /// Prox-PDA on the cubic pair, penalty matched to gradient tracking.
    Claim3Pda,
    /// Logistic regression with a non-convex regularizer, 5/10/20 agents.
    ExpILogistic,
    /// The quartic pair: three radius schedules plus the benchmarks.
    ExpIIQuartic,
    /// One-hidden-layer ReLU network, 4 agents.
    ExpIIINetwork,
    /// Benchmark convergence rates on the quartic pair over four stepsize
    /// constants.
    QuarticFragility,
}

impl PresetName {
    pub const ALL: [PresetName; 8] = [
        PresetName::Claim1Const,
        PresetName::Claim1Dim,
        PresetName::Claim2Gt,
        PresetName::Claim3Pda,
        PresetName::ExpILogistic,
        PresetName::ExpIIQuartic,
        PresetName::ExpIIINetwork,
        PresetName::QuarticFragility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Claim1Const => "claim1_const",
            PresetName::Claim1Dim => "claim1_dim",
            PresetName::Claim2Gt => "claim2_gt",
            PresetName::Claim3Pda => "claim3_pda",
            PresetName::ExpILogistic => "expI_logistic",
            PresetName::ExpIIQuartic => "expII_quartic",
            PresetName::ExpIIINetwork => "expIII_network",
            PresetName::QuarticFragility => "quartic_fragility",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetName::Claim1Const => "DGD with constant step diverges on the cubic pair",
            PresetName::Claim1Dim => "DGD with diminishing step diverges on the cubic pair",
            PresetName::Claim2Gt => "gradient tracking diverges on the cubic pair",
            PresetName::Claim3Pda => "Prox-PDA reproduces gradient tracking and diverges",
            PresetName::ExpILogistic => "non-convex logistic regression on random geometric graphs",
            PresetName::ExpIIQuartic => "quartic pair: radius schedules 100t, 10t, t and benchmarks at c = 1/4",
            PresetName::ExpIIINetwork => "3x5x1 ReLU network regression on 4 agents",
            PresetName::QuarticFragility => "benchmark convergence rate vs stepsize constant on the quartic pair",
        }
    }

    fn toml(self) -> &'static str {
        match self {
            PresetName::Claim1Const => CLAIM1_CONST,
            PresetName::Claim1Dim => CLAIM1_DIM,
            PresetName::Claim2Gt => CLAIM2_GT,
            PresetName::Claim3Pda => CLAIM3_PDA,
            PresetName::ExpILogistic => EXP1_LOGISTIC,
            PresetName::ExpIIQuartic => EXP2_QUARTIC,
            PresetName::ExpIIINetwork => EXP3_NETWORK,
            PresetName::QuarticFragility => QUARTIC_FRAGILITY,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownPreset(s.to_string()))
    }
}

pub fn preset_names() -> impl Iterator<Item = PresetName> {
    PresetName::ALL.into_iter()
}

pub fn preset(name: PresetName) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(name.toml()).expect("built-in presets parse")
}

// Two agents on one edge with W = 11ᵀ/2.
const CLAIM1_CONST: &str = r#"
name = "claim1_const"
runs = 1
budget = { max_iters = 1000000 }
problem = { kind = "cubic_pair" }
graph = { topology = { kind = "path" }, mixing = { rule = "laplacian_shift", delta_factor = 0.0 } }
init = { distribution = { kind = "explicit", values = [-99.0, 101.0] } }

[[algorithms]]
kind = "dgd"
step = { rule = "constant", alpha = 0.01 }
"#;

const CLAIM1_DIM: &str = r#"
name = "claim1_dim"
runs = 1
budget = { max_iters = 1000000 }
problem = { kind = "cubic_pair" }
graph = { topology = { kind = "path" }, mixing = { rule = "laplacian_shift", delta_factor = 0.0 } }
init = { distribution = { kind = "explicit", values = [0.0, 200.0] } }

[[algorithms]]
kind = "dgd"
step = { rule = "constant", alpha = 0.01 }
diminishing = true
"#;

const CLAIM2_GT: &str = r#"
name = "claim2_gt"
runs = 1
budget = { max_iters = 100000 }
problem = { kind = "cubic_pair" }
graph = { topology = { kind = "path" }, mixing = { rule = "laplacian_shift", delta_factor = 0.0 } }
init = { distribution = { kind = "explicit", values = [10.0, 10.0] } }

[[algorithms]]
kind = "gradient_tracking"
step = { rule = "constant", alpha = 0.1 }
"#;

const CLAIM3_PDA: &str = r#"
name = "claim3_pda"
runs = 1
budget = { max_iters = 100000 }
problem = { kind = "cubic_pair" }
graph = { topology = { kind = "path" }, mixing = { rule = "laplacian_shift", delta_factor = 0.0 } }
init = { distribution = { kind = "explicit", values = [10.0, 10.0] } }

[[algorithms]]
kind = "prox_pda"
penalty = { rule = "constant", rho = 5.0 }
beta = 0.0
"#;

const EXP1_LOGISTIC: &str = r#"
name = "expI_logistic"
runs = 5
trace_stride = 10
agent_sweep = [5, 10, 20]
budget = { max_iters = 5000, max_stages = 100 }
problem = { kind = "logistic", agents = 5, samples = 2000, dim = 5, lambda = 0.001, rho = 1.0, flip_prob = 0.1, seed = 1 }
graph = { topology = { kind = "random_geometric", radius = 0.5, seed = 1 } }
init = { seed = 11 }

[[algorithms]]
kind = "magenta"
epsilon = 1e-4
d = 100.0
stepsize = { rule = "inverse_square", scale = 0.5 }
max_total_iters = 5000

[[algorithms]]
kind = "gradient_tracking"
step = { rule = "constant", alpha = 0.5 }

[[algorithms]]
kind = "prox_pda"
penalty = { rule = "constant", rho = 1.0 }

[[algorithms]]
kind = "dgd"
step = { rule = "constant", alpha = 0.5 }
"#;

const EXP2_QUARTIC: &str = r#"
name = "expII_quartic"
runs = 20
trace_stride = 1000
budget = { max_iters = 20000, max_stages = 1000 }
problem = { kind = "quartic_pair" }
graph = { topology = { kind = "path" } }
init = { seed = 2 }

[[algorithms]]
kind = "magenta"
epsilon = 1e-4
d = 100.0
stepsize = { rule = "inverse_square", scale = 2e7 }
max_total_iters = 500000

[[algorithms]]
kind = "magenta"
epsilon = 1e-4
d = 10.0
stepsize = { rule = "inverse_square", scale = 2e7 }
max_total_iters = 500000

[[algorithms]]
kind = "magenta"
epsilon = 1e-4
d = 1.0
stepsize = { rule = "inverse_square", scale = 2e7 }
max_total_iters = 500000

[[algorithms]]
kind = "dgd"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
penalty = { rule = "heuristic", c = 0.25, scale = 8e-3 }
"#;

const EXP3_NETWORK: &str = r#"
name = "expIII_network"
runs = 10
trace_stride = 10
budget = { max_iters = 5000, max_stages = 1000 }
problem = { kind = "network", agents = 4, samples_per_agent = 100, hidden = 5, input_dim = 3, activation = "relu", seed = 3 }
graph = { topology = { kind = "random_geometric", radius = 0.5, seed = 3 } }
init = { seed = 13 }

[[algorithms]]
kind = "magenta"
epsilon = 1e-2
d = 1.0
stepsize = { rule = "diminishing_sqrt", alpha0 = 0.05 }
max_total_iters = 5000

[[algorithms]]
kind = "dgd"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
penalty = { rule = "heuristic", c = 0.25, scale = 8e-3 }
"#;

const QUARTIC_FRAGILITY: &str = r#"
name = "quartic_fragility"
runs = 100
trace_stride = 1000
budget = { max_iters = 20000 }
problem = { kind = "quartic_pair" }
graph = { topology = { kind = "path" } }
init = { seed = 4 }

[[algorithms]]
kind = "dgd"
label = "dgd_c1"
step = { rule = "heuristic", c = 1.0, scale = 8e-3 }

[[algorithms]]
kind = "dgd"
label = "dgd_c1/2"
step = { rule = "heuristic", c = 0.5, scale = 8e-3 }

[[algorithms]]
kind = "dgd"
label = "dgd_c1/4"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "dgd"
label = "dgd_c1/8"
step = { rule = "heuristic", c = 0.125, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
label = "gt_c1"
step = { rule = "heuristic", c = 1.0, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
label = "gt_c1/2"
step = { rule = "heuristic", c = 0.5, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
label = "gt_c1/4"
step = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "gradient_tracking"
label = "gt_c1/8"
step = { rule = "heuristic", c = 0.125, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
label = "pda_c1"
penalty = { rule = "heuristic", c = 1.0, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
label = "pda_c1/2"
penalty = { rule = "heuristic", c = 0.5, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
label = "pda_c1/4"
penalty = { rule = "heuristic", c = 0.25, scale = 8e-3 }

[[algorithms]]
kind = "prox_pda"
label = "pda_c1/8"
penalty = { rule = "heuristic", c = 0.125, scale = 8e-3 }
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{AlgorithmSpec, InitDistribution};

    #[test]
    fn all_presets_parse_and_names_round_trip() {
        for name in preset_names() {
            let c = preset(name);
            assert_eq!(c.name, name.as_str());
            assert_eq!(name.as_str().parse::<PresetName>().unwrap(), name);
            for a in &c.algorithms {
                a.validate().unwrap();
            }
        }
        assert!("nope".parse::<PresetName>().is_err());
    }

    #[test]
    fn counter_example_starts() {
        let c = preset(PresetName::Claim2Gt);
        assert_eq!(
            c.init.distribution,
            InitDistribution::Explicit {
                values: vec![10.0, 10.0]
            }
        );
        let c = preset(PresetName::Claim1Const);
        let InitDistribution::Explicit { values } = &c.init.distribution else {
            panic!()
        };
        assert_eq!(values[1] - values[0], 2.0 / 0.01);
        assert_eq!((values[0] + values[1]) / 2.0, 1.0);
    }

    #[test]
    fn quartic_radius_schedules() {
        let c = preset(PresetName::ExpIIQuartic);
        let ds: Vec<f64> = c
            .algorithms
            .iter()
            .filter_map(|a| match a {
                AlgorithmSpec::Magenta { d, epsilon, .. } => {
                    assert_eq!(*epsilon, 1e-4);
                    Some(*d)
                }
                _ => None,
            })
            .collect();
        assert_eq!(ds, vec![100.0, 10.0, 1.0]);
    }
}
