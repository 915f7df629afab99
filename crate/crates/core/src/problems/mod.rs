//! Local objectives `f_i`, their gradients and ball-restricted curvature bounds.

mod data;
mod logistic;
mod network;
mod polynomial;
mod scalar;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::AgentMatrix;

pub use data::{
    synthetic_logistic_data, synthetic_network_data, write_logistic_csv, write_network_csv, LabeledPoint,
    RegressionPoint,
};
pub use logistic::{make_logistic_regression, LogisticObjective};
pub use network::{make_softplus_network, Activation, NetworkObjective};
pub use polynomial::{make_matrix_factorization, make_polynomial_family, Polynomial, PolynomialTerm};
pub use scalar::{make_cubic_pair, make_quartic_pair, CubicTerm, QuarticWell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("problem needs at least one agent")]
    NoAgents,
    #[error("agent {agent} has dimension {got}, expected {expected}")]
    DimMismatch { agent: usize, expected: usize, got: usize },
    #[error("agent {0} has no data")]
    EmptyData(usize),
    #[error("polynomial order must be at least 2, got {0}")]
    InvalidOrder(i64),
    #[error("term for agent {agent} has degree {degree} above order {order}")]
    DegreeTooHigh { agent: usize, degree: u32, order: i64 },
    #[error("term references agent {agent} but the family has {n_agents}")]
    AgentOutOfRange { agent: usize, n_agents: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("i/o error writing {path}: {msg}")]
    Io { path: String, msg: String },
}

/// One agent's private smooth objective.
pub trait LocalObjective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out` (length `dim`).
    fn grad_into(&self, x: &[f64], out: &mut [f64]);

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad_into(x, &mut g);
        g
    }

    /// Upper bound on the gradient's Lipschitz constant over the closed ball,
    /// before clamping. Must be non-decreasing in `radius`.
    fn raw_lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64;

    /// [`raw_lipschitz_on_ball`](Self::raw_lipschitz_on_ball) clamped below by 1.
    fn lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64 {
        self.raw_lipschitz_on_ball(center, radius).max(1.0)
    }
}

/// Unclamped curvature bound for the average function over a ball.
pub type AverageCurvature = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// `N` local objectives sharing one dimension.
#[derive(Clone)]
pub struct ProblemInstance {
    name: String,
    locals: Vec<Arc<dyn LocalObjective>>,
    average_curvature: Option<AverageCurvature>,
    lower_bound: Option<f64>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("n_agents", &self.locals.len())
            .field("dim", &self.dim())
            .field("lower_bound", &self.lower_bound)
            .finish_non_exhaustive()
    }
}

impl ProblemInstance {
    pub fn new(name: impl Into<String>, locals: Vec<Arc<dyn LocalObjective>>) -> Result<Self, ProblemError> {
        let expected = locals.first().ok_or(ProblemError::NoAgents)?.dim();
        if let Some((agent, f)) = locals.iter().enumerate().find(|(_, f)| f.dim() != expected) {
            return Err(ProblemError::DimMismatch {
                agent,
                expected,
                got: f.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            locals,
            average_curvature: None,
            lower_bound: None,
        })
    }

    /// Attaches an analytic curvature bound for the average function.
    pub fn with_average_curvature(mut self, bound: AverageCurvature) -> Self {
        self.average_curvature = Some(bound);
        self
    }

    /// Attaches a known lower bound `f̲` on the average function.
    pub fn with_lower_bound(mut self, lower: f64) -> Self {
        self.lower_bound = Some(lower);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_agents(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    pub fn locals(&self) -> &[Arc<dyn LocalObjective>] {
        &self.locals
    }

    pub fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }

    /// `f(u) = (1/N) Σ f_i(u)`.
    pub fn eval_mean(&self, u: &[f64]) -> f64 {
        self.locals.iter().map(|f| f.eval(u)).sum::<f64>() / self.n_agents() as f64
    }

    /// `∇f(u)`.
    pub fn grad_mean(&self, u: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        for f in &self.locals {
            f.grad_into(u, &mut g);
            acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        let n = self.n_agents() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Stacked local gradients `∇g(x) = [∇f_i(x_i)]_i`.
    pub fn grad_stack(&self, x: &AgentMatrix) -> AgentMatrix {
        let mut out = AgentMatrix::zeros(x.rows(), x.cols());
        self.grad_stack_into(x, &mut out);
        out
    }

    pub fn grad_stack_into(&self, x: &AgentMatrix, out: &mut AgentMatrix) {
        debug_assert_eq!(x.rows(), self.n_agents());
        for (i, f) in self.locals.iter().enumerate() {
            f.grad_into(x.row(i), out.row_mut(i));
        }
    }

    /// Raw bound on the average function's curvature, when one is known.
    pub fn average_curvature(&self, center: &[f64], radius: f64) -> Option<f64> {
        self.average_curvature.as_ref().map(|b| b(center, radius))
    }
}

/// Per-agent and network-wide curvature bounds over one ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    pub per_agent: Vec<f64>,
    pub l_hat: f64,
    pub l_global: f64,
}

pub fn lipschitz_estimates(
    p: &ProblemInstance,
    center: &[f64],
    radius: f64,
) -> Result<LipschitzEstimate, ProblemError> {
    if !(radius > 0.0) {
        return Err(ProblemError::InvalidRadius(radius));
    }
    if center.len() != p.dim() {
        return Err(ProblemError::DimMismatch {
            agent: 0,
            expected: p.dim(),
            got: center.len(),
        });
    }
    let per_agent: Vec<f64> = p.locals().iter().map(|f| f.lipschitz_on_ball(center, radius)).collect();
    Ok(estimate_from_per_agent(p, per_agent, center, radius))
}

pub(crate) fn estimate_from_per_agent(
    p: &ProblemInstance,
    per_agent: Vec<f64>,
    center: &[f64],
    radius: f64,
) -> LipschitzEstimate {
    let l_hat = per_agent.iter().copied().fold(1.0, f64::max);
    let l_global = p
        .average_curvature(center, radius)
        .map_or(l_hat, |b| l_hat.min(b.max(1.0)));
    LipschitzEstimate {
        per_agent,
        l_hat,
        l_global,
    }
}
