use std::path::Path;

use rand::Rng;

use super::ProblemError;
use crate::rng::{rng_from_seed, standard_normal_vec};

/// Feature vector with a `±1` label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: f64,
}

/// Input vector with a scalar regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionPoint {
    pub input: Vec<f64>,
    pub target: f64,
}

/// Splits `total` items as evenly as possible, earlier agents taking the remainder.
fn split_counts(total: usize, agents: usize) -> impl Iterator<Item = usize> {
    (0..agents).map(move |i| total / agents + usize::from(i < total % agents))
}

/// Standard-normal features; labels are the sign of a hidden standard-normal
/// model's score, each flipped with probability `flip_prob`.
pub fn synthetic_logistic_data(
    agents: usize,
    total: usize,
    dim: usize,
    flip_prob: f64,
    seed: u64,
) -> Result<Vec<Vec<LabeledPoint>>, ProblemError> {
    if agents == 0 {
        return Err(ProblemError::NoAgents);
    }
    if total < agents {
        return Err(ProblemError::InvalidParameter(format!(
            "{total} points cannot cover {agents} agents"
        )));
    }
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(ProblemError::InvalidParameter(format!("flip probability {flip_prob}")));
    }
    let mut rng = rng_from_seed(seed);
    let truth = standard_normal_vec(&mut rng, dim);
    Ok(split_counts(total, agents)
        .map(|m| {
            (0..m)
                .map(|_| {
                    let features = standard_normal_vec(&mut rng, dim);
                    let score: f64 = features.iter().zip(&truth).map(|(a, b)| a * b).sum();
                    let mut label = if score >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < flip_prob {
                        label = -label;
                    }
                    LabeledPoint { features, label }
                })
                .collect()
        })
        .collect())
}

/// Standard-normal inputs and targets.
pub fn synthetic_network_data(
    agents: usize,
    per_agent: usize,
    input_dim: usize,
    seed: u64,
) -> Result<Vec<Vec<RegressionPoint>>, ProblemError> {
    if agents == 0 {
        return Err(ProblemError::NoAgents);
    }
    if per_agent == 0 {
        return Err(ProblemError::EmptyData(0));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..agents)
        .map(|_| {
            (0..per_agent)
                .map(|_| {
                    let input = standard_normal_vec(&mut rng, input_dim);
                    let target = standard_normal_vec(&mut rng, 1)[0];
                    RegressionPoint { input, target }
                })
                .collect()
        })
        .collect())
}

struct DataRow {
    agent: usize,
    target: f64,
    values: Vec<f64>,
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = DataRow>) -> Result<(), ProblemError> {
    let io = |e: csv::Error| ProblemError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io)?;
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![r.agent.to_string(), r.target.to_string()];
        rec.extend(r.values.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| ProblemError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// One row per point: `agent,label,a_0,…`.
pub fn write_logistic_csv(path: &Path, data: &[Vec<LabeledPoint>]) -> Result<(), ProblemError> {
    let dim = data.iter().flatten().next().map_or(0, |p| p.features.len());
    let mut header = vec!["agent".to_string(), "label".to_string()];
    header.extend((0..dim).map(|k| format!("a_{k}")));
    let rows = data.iter().enumerate().flat_map(|(agent, pts)| {
        pts.iter().map(move |p| DataRow {
            agent,
            target: p.label,
            values: p.features.clone(),
        })
    });
    write_rows(path, header, rows)
}

/// One row per point: `agent,target,z_0,…`.
pub fn write_network_csv(path: &Path, data: &[Vec<RegressionPoint>]) -> Result<(), ProblemError> {
    let dim = data.iter().flatten().next().map_or(0, |p| p.input.len());
    let mut header = vec!["agent".to_string(), "target".to_string()];
    header.extend((0..dim).map(|k| format!("z_{k}")));
    let rows = data.iter().enumerate().flat_map(|(agent, pts)| {
        pts.iter().map(move |p| DataRow {
            agent,
            target: p.target,
            values: p.input.clone(),
        })
    });
    write_rows(path, header, rows)
}
