use serde::{Deserialize, Serialize};

use super::{check_dims, AlgorithmError, Monitor, NetworkState, RunOptions, RunOutcome, Termination, TraceSink};
use crate::graph::MixingMatrix;
use crate::linalg::AgentMatrix;
use crate::problems::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum DgdStep {
    /// `α^r = α`.
    Constant(f64),
    /// `α^r = α/(1 + r)`.
    Diminishing(f64),
}

impl DgdStep {
    pub fn at(self, r: u64) -> f64 {
        match self {
            DgdStep::Constant(a) => a,
            DgdStep::Diminishing(a) => a / (1.0 + r as f64),
        }
    }

    fn base(self) -> f64 {
        match self {
            DgdStep::Constant(a) | DgdStep::Diminishing(a) => a,
        }
    }
}

/// `x^{r+1} = W x^r − α^r ∇g(x^r)`.
///
/// Iterates `0..=max_iters` are reported; the run stops early on divergence or
/// when `opts.stop_gap_below` fires.
pub fn run_dgd<S: TraceSink + ?Sized>(
    p: &ProblemInstance,
    w: &MixingMatrix,
    x0: AgentMatrix,
    step: DgdStep,
    opts: RunOptions,
    sink: &mut S,
) -> Result<RunOutcome, AlgorithmError> {
    check_dims(&x0, p.n_agents(), p.dim())?;
    check_dims(&x0, w.n_agents(), p.dim())?;
    if !(step.base() >= 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "stepsize must be >= 0, got {}",
            step.base()
        )));
    }
    let mut monitor = Monitor::new(sink, &opts);
    let mut state = NetworkState::new(x0);
    let mut grads = p.grad_stack(&state.x);
    for r in 0..=opts.max_iters {
        state.iteration = r;
        let alpha = step.at(r);
        if let Some(t) = monitor.observe(&state, &grads, r, alpha) {
            return Ok(monitor.finish(state, t));
        }
        if r == opts.max_iters {
            break;
        }
        let mut next = w.mix(&state.x);
        next.axpy(-alpha, &grads);
        state.x = next;
        p.grad_stack_into(&state.x, &mut grads);
    }
    Ok(monitor.finish(state, Termination::MaxIters))
}
