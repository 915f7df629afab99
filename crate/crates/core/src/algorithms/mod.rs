//! Iterative schemes over a mixing matrix.
//!
//! Every scheme reports each iterate to a [`TraceSink`] together with its
//! [`GapComponents`]. Divergence is a classified outcome: once the gap is
//! non-finite or exceeds `1e10` the run stops with [`Termination::Diverged`],
//! unless [`RunOptions::stop_on_divergence`] is off.

mod dgd;
pub mod magenta;
mod prox_pda;
mod tracking;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, AgentMatrix};
use crate::metrics::{GapComponents, MetricsError, RunClass, RunClassifier};
use crate::problems::ProblemError;

pub use dgd::{run_dgd, DgdStep};
pub use magenta::{
    default_gamma, magenta_stage_bound, magenta_stepsize, run_magenta, theorem1_constants, DescentConstants,
    MagentaOutcome, MagentaParams, MagentaStepsize, StageReport, StageSchedule,
};
pub use prox_pda::run_prox_pda;
pub use tracking::run_gradient_tracking;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("initial point is {got_rows}x{got_cols}, problem expects {rows}x{cols}")]
    DimMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at stage {stage}, iteration {iteration}")]
    NonFinite { stage: u32, iteration: u64 },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// Stacked per-agent iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: AgentMatrix,
    /// Tracking variable, for schemes that keep one.
    pub y: Option<AgentMatrix>,
    pub iteration: u64,
    pub stage: Option<u32>,
}

impl NetworkState {
    pub fn new(x: AgentMatrix) -> Self {
        Self {
            x,
            y: None,
            iteration: 0,
            stage: None,
        }
    }

    pub fn with_tracking(x: AgentMatrix, y: AgentMatrix) -> Self {
        Self {
            x,
            y: Some(y),
            iteration: 0,
            stage: None,
        }
    }

    pub fn x_mean(&self) -> Vec<f64> {
        self.x.mean_row()
    }

    pub fn y_mean(&self) -> Option<Vec<f64>> {
        self.y.as_ref().map(AgentMatrix::mean_row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    Diverged,
    Converged,
    /// Stage or total-iteration budget spent without the success event.
    Budget,
}

/// One reported iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Stage index, `None` for single-stage schemes.
    pub stage: Option<u32>,
    /// Iteration within the stage (or the run).
    pub iteration: u64,
    /// Iterations since the start of the run.
    pub global_iteration: u64,
    pub alpha: f64,
    pub radius: Option<f64>,
    pub gaps: GapComponents,
    pub potential: Option<f64>,
    pub boundary_touch_count: usize,
}

impl IterationRecord {
    pub fn gap(&self) -> f64 {
        self.gaps.stationarity_gap()
    }
}

pub trait TraceSink {
    fn record(&mut self, rec: &IterationRecord, state: &NetworkState);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &IterationRecord, _: &NetworkState) {}
}

impl TraceSink for Vec<IterationRecord> {
    fn record(&mut self, rec: &IterationRecord, _: &NetworkState) {
        self.push(rec.clone());
    }
}

/// Adapts a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&IterationRecord, &NetworkState)> TraceSink for FnSink<F> {
    fn record(&mut self, rec: &IterationRecord, state: &NetworkState) {
        (self.0)(rec, state)
    }
}

impl<S: TraceSink + ?Sized> TraceSink for &mut S {
    fn record(&mut self, rec: &IterationRecord, state: &NetworkState) {
        (**self).record(rec, state)
    }
}

/// Stopping rules shared by the single-stage schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_iters: u64,
    /// Stop as Converged once the gap drops below this value.
    pub stop_gap_below: Option<f64>,
    /// Stop as Diverged once the gap leaves the finite range. When off the run
    /// continues to `max_iters`; the class is still reported.
    pub stop_on_divergence: bool,
}

impl RunOptions {
    pub fn new(max_iters: u64) -> Self {
        Self {
            max_iters,
            stop_gap_below: None,
            stop_on_divergence: true,
        }
    }

    /// Keep iterating past divergence.
    pub fn without_divergence_stop(mut self) -> Self {
        self.stop_on_divergence = false;
        self
    }
}

/// Result of a single-stage scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: NetworkState,
    pub termination: Termination,
    pub class: RunClass,
    pub min_gap: f64,
    pub final_gap: f64,
}

/// How a two-point recursion is started.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoPointStart {
    /// From one point; the second is a plain penalized gradient step.
    Bootstrap(AgentMatrix),
    /// From two consecutive iterates.
    Pair { prev: AgentMatrix, current: AgentMatrix },
}

impl TwoPointStart {
    fn first(&self) -> &AgentMatrix {
        match self {
            TwoPointStart::Bootstrap(x) => x,
            TwoPointStart::Pair { prev, .. } => prev,
        }
    }
}

/// Euclidean projection onto `B(center, radius)`.
pub fn project_ball(x: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    project_ball_in_place(&mut out, center, radius);
    out
}

pub fn project_ball_in_place(x: &mut [f64], center: &[f64], radius: f64) {
    let d = dist(x, center);
    if d > radius {
        let s = radius / d;
        for (xi, c) in x.iter_mut().zip(center) {
            *xi = c + s * (*xi - c);
        }
    }
}

pub(crate) fn check_dims(x: &AgentMatrix, rows: usize, cols: usize) -> Result<(), AlgorithmError> {
    if x.rows() != rows || x.cols() != cols {
        return Err(AlgorithmError::DimMismatch {
            rows,
            cols,
            got_rows: x.rows(),
            got_cols: x.cols(),
        });
    }
    Ok(())
}

/// Shared bookkeeping for single-stage runs.
pub(crate) struct Monitor<'a, S: TraceSink + ?Sized> {
    sink: &'a mut S,
    classifier: RunClassifier,
    stop_below: Option<f64>,
    stop_on_divergence: bool,
    last_gap: f64,
}

impl<'a, S: TraceSink + ?Sized> Monitor<'a, S> {
    pub(crate) fn new(sink: &'a mut S, opts: &RunOptions) -> Self {
        Self {
            sink,
            classifier: RunClassifier::default(),
            stop_below: opts.stop_gap_below,
            stop_on_divergence: opts.stop_on_divergence,
            last_gap: f64::NAN,
        }
    }

    /// Records `state` and returns the termination it triggers, if any.
    pub(crate) fn observe(
        &mut self,
        state: &NetworkState,
        grads: &AgentMatrix,
        iteration: u64,
        alpha: f64,
    ) -> Option<Termination> {
        let gaps = crate::metrics::gap_from_parts(&state.x, grads, None);
        let gap = gaps.mean_grad_gap();
        let rec = IterationRecord {
            stage: None,
            iteration,
            global_iteration: iteration,
            alpha,
            radius: None,
            gaps,
            potential: None,
            boundary_touch_count: 0,
        };
        self.sink.record(&rec, state);
        self.last_gap = gap;
        if self.classifier.push(gap) == RunClass::Diverged && self.stop_on_divergence {
            return Some(Termination::Diverged);
        }
        match self.stop_below {
            Some(t) if gap < t => Some(Termination::Converged),
            _ => None,
        }
    }

    pub(crate) fn finish(self, state: NetworkState, termination: Termination) -> RunOutcome {
        RunOutcome {
            state,
            termination,
            class: self.classifier.class(),
            min_gap: self.classifier.min_gap(),
            final_gap: self.last_gap,
        }
    }
}
