//! Stationarity gaps, the descent potential, boundary detection and run
//! classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::NetworkState;
use crate::linalg::{dist, norm_sq, AgentMatrix};
use crate::problems::ProblemInstance;

pub const CONVERGED_BELOW: f64 = 1.0;
pub const DIVERGED_ABOVE: f64 = 1e10;
/// Boundary tolerance relative to the ball radius.
pub const TOUCH_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("gap window is empty")]
    EmptyWindow,
    #[error("{mode:?} averaging needs `{field}`, which entry {index} lacks")]
    MissingField {
        mode: GapMode,
        field: &'static str,
        index: usize,
    },
    #[error("potential requires a tracking variable")]
    MissingTracking,
    #[error("(1 + gamma) * eta^2 = {0} must be below 1")]
    NoContraction(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// The summands of the stationarity gap at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapComponents {
    /// `‖y‖²`, present when a tracking variable exists.
    pub y_norm_sq: Option<f64>,
    /// `‖(1/N) Σ ∇f_i(x_i)‖²`.
    pub mean_grad_norm_sq: f64,
    /// `‖x − 1x̄‖²`.
    pub x_consensus_sq: f64,
    /// `‖y − 1ȳ‖²`.
    pub y_consensus_sq: Option<f64>,
    /// `‖v/α‖²` for the projected step.
    pub v_over_alpha_sq: Option<f64>,
}

impl GapComponents {
    /// Mean-gradient norm plus consensus error.
    pub fn mean_grad_gap(&self) -> f64 {
        self.mean_grad_norm_sq + self.x_consensus_sq
    }

    /// `‖y‖² + ‖x − 1x̄‖² + ‖y − 1ȳ‖²`, when `y` exists.
    pub fn tracking_gap(&self) -> Option<f64> {
        Some(self.y_norm_sq? + self.x_consensus_sq + self.y_consensus_sq?)
    }

    /// The tracking gap when available, otherwise the mean-gradient gap.
    pub fn stationarity_gap(&self) -> f64 {
        self.tracking_gap().unwrap_or_else(|| self.mean_grad_gap())
    }
}

/// Assembles gap components from already-computed local gradients.
pub fn gap_from_parts(x: &AgentMatrix, grads: &AgentMatrix, y: Option<&AgentMatrix>) -> GapComponents {
    GapComponents {
        y_norm_sq: y.map(AgentMatrix::norm_sq),
        mean_grad_norm_sq: norm_sq(&grads.mean_row()),
        x_consensus_sq: x.consensus_sq(),
        y_consensus_sq: y.map(AgentMatrix::consensus_sq),
        v_over_alpha_sq: None,
    }
}

pub fn gap_unconstrained(state: &NetworkState, p: &ProblemInstance) -> GapComponents {
    let grads = p.grad_stack(&state.x);
    gap_from_parts(&state.x, &grads, state.y.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    /// Averages `‖y‖² + ‖x − 1x̄‖² + ‖y − 1ȳ‖²`.
    Unconstrained,
    /// Averages `‖v/α‖² + ‖x − 1x̄‖² + ‖y − 1ȳ‖²`.
    Constrained,
}

pub fn avg_gap(window: &[GapComponents], mode: GapMode) -> Result<f64, MetricsError> {
    if window.is_empty() {
        return Err(MetricsError::EmptyWindow);
    }
    let mut total = 0.0;
    for (index, g) in window.iter().enumerate() {
        let missing = |field| MetricsError::MissingField { mode, field, index };
        let lead = match mode {
            GapMode::Unconstrained => g.y_norm_sq.ok_or_else(|| missing("y_norm_sq"))?,
            GapMode::Constrained => g.v_over_alpha_sq.ok_or_else(|| missing("v_over_alpha_sq"))?,
        };
        total += lead + g.x_consensus_sq + g.y_consensus_sq.ok_or_else(|| missing("y_consensus_sq"))?;
    }
    Ok(total / window.len() as f64)
}

/// `P(w; t)` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialValue {
    pub value: f64,
    pub f_mean: f64,
    pub x_term: f64,
    pub y_term: f64,
}

/// Weight on `‖y − 1ȳ‖²`: `(1 − (1+γ)η²) / (32 (1 + 1/ξ) L̂²)`.
pub fn potential_coefficient(l_hat: f64, gamma: f64, xi: f64, eta: f64) -> Result<f64, MetricsError> {
    let contraction = (1.0 + gamma) * eta * eta;
    if contraction >= 1.0 {
        return Err(MetricsError::NoContraction(contraction));
    }
    if !(l_hat > 0.0 && xi > 0.0 && gamma > 0.0) {
        return Err(MetricsError::InvalidParameter(format!(
            "need l_hat, gamma, xi > 0; got {l_hat}, {gamma}, {xi}"
        )));
    }
    Ok((1.0 - contraction) / (32.0 * (1.0 + 1.0 / xi) * l_hat * l_hat))
}

/// `f(x̄) + ‖x − 1x̄‖² + c‖y − 1ȳ‖²` with `c` from [`potential_coefficient`].
pub fn potential(
    state: &NetworkState,
    p: &ProblemInstance,
    l_hat: f64,
    gamma: f64,
    xi: f64,
    eta: f64,
) -> Result<PotentialValue, MetricsError> {
    let y = state.y.as_ref().ok_or(MetricsError::MissingTracking)?;
    let coeff = potential_coefficient(l_hat, gamma, xi, eta)?;
    Ok(potential_with_coefficient(&state.x, y, p, coeff))
}

pub(crate) fn potential_with_coefficient(
    x: &AgentMatrix,
    y: &AgentMatrix,
    p: &ProblemInstance,
    coeff: f64,
) -> PotentialValue {
    let f_mean = p.eval_mean(&x.mean_row());
    let x_term = x.consensus_sq();
    let y_term = coeff * y.consensus_sq();
    PotentialValue {
        value: f_mean + x_term + y_term,
        f_mean,
        x_term,
        y_term,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunClass {
    Converged,
    Diverged,
    Undecided,
}

/// Diverged if any gap is non-finite or above `1e10`; otherwise Converged if
/// some gap fell below 1.
pub fn classify_run(gap_history: &[f64]) -> RunClass {
    let mut min = f64::INFINITY;
    for &g in gap_history {
        if !g.is_finite() || g > DIVERGED_ABOVE {
            return RunClass::Diverged;
        }
        min = min.min(g);
    }
    if min < CONVERGED_BELOW {
        RunClass::Converged
    } else {
        RunClass::Undecided
    }
}

/// Streaming form of [`classify_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunClassifier {
    min: f64,
    diverged: bool,
}

impl Default for RunClassifier {
    fn default() -> Self {
        Self {
            min: f64::INFINITY,
            diverged: false,
        }
    }
}

impl RunClassifier {
    pub fn push(&mut self, gap: f64) -> RunClass {
        if !gap.is_finite() || gap > DIVERGED_ABOVE {
            self.diverged = true;
        } else {
            self.min = self.min.min(gap);
        }
        self.class()
    }

    pub fn class(&self) -> RunClass {
        if self.diverged {
            RunClass::Diverged
        } else if self.min < CONVERGED_BELOW {
            RunClass::Converged
        } else {
            RunClass::Undecided
        }
    }

    pub fn min_gap(&self) -> f64 {
        self.min
    }
}

/// Per-agent flags for the iterate and the projected trial point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundaryFlags {
    pub x: Vec<bool>,
    pub x_tilde: Vec<bool>,
}

impl BoundaryFlags {
    /// Number of agents with either flag set.
    pub fn count(&self) -> usize {
        (0..self.x.len().max(self.x_tilde.len()))
            .filter(|&i| self.x.get(i).copied().unwrap_or(false) || self.x_tilde.get(i).copied().unwrap_or(false))
            .count()
    }

    pub fn any(&self) -> bool {
        self.x.iter().chain(&self.x_tilde).any(|&b| b)
    }
}

pub fn touches(point: &[f64], center: &[f64], radius: f64, tol: f64) -> bool {
    radius - dist(point, center) <= tol
}

/// Flags agent `i` when `radius − ‖x_i − z‖ ≤ tol`.
pub fn boundary_touch(
    x: &AgentMatrix,
    x_tilde: Option<&AgentMatrix>,
    center: &[f64],
    radius: f64,
    tol: f64,
) -> BoundaryFlags {
    let flags = |m: &AgentMatrix| m.row_iter().map(|r| touches(r, center, radius, tol)).collect();
    BoundaryFlags {
        x: flags(x),
        x_tilde: x_tilde.map(flags).unwrap_or_default(),
    }
}

pub fn default_touch_tol(radius: f64) -> f64 {
    TOUCH_REL_TOL * radius
}
