use super::{
    check_dims, AlgorithmError, Monitor, NetworkState, RunOptions, RunOutcome, Termination, TraceSink, TwoPointStart,
};
use crate::graph::IncidenceMatrix;
use crate::linalg::AgentMatrix;
use crate::problems::ProblemInstance;

/// Linearized primal-dual recursion in primal-only form, with
/// `s = β + ρ λ_max(AᵀA)`:
/// `x^{r+1} = (I − ρAᵀA/s)(2x^r − x^{r−1}) − (∇g(x^r) − ∇g(x^{r−1}))/s`.
///
/// A bootstrap start takes the zero-multiplier step
/// `x¹ = (I − ρAᵀA/s) x⁰ − ∇g(x⁰)/s`.
pub fn run_prox_pda<S: TraceSink + ?Sized>(
    p: &ProblemInstance,
    incidence: &IncidenceMatrix,
    rho: f64,
    beta_reg: f64,
    start: TwoPointStart,
    opts: RunOptions,
    sink: &mut S,
) -> Result<RunOutcome, AlgorithmError> {
    if !(rho > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    if !(beta_reg >= 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "beta must be >= 0, got {beta_reg}"
        )));
    }
    let n = incidence.entries().ncols();
    check_dims(start.first(), p.n_agents(), p.dim())?;
    check_dims(start.first(), n, p.dim())?;

    let s = beta_reg + rho * incidence.lambda_max();
    let scale = rho / s;
    let gram = incidence.gram();
    let op: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            (0..n)
                .filter_map(|j| {
                    let v = if i == j { 1.0 } else { 0.0 } - scale * gram[(i, j)];
                    (v != 0.0).then_some((j, v))
                })
                .collect()
        })
        .collect();
    let step = 1.0 / s;

    let mut monitor = Monitor::new(sink, &opts);
    let first = start.first().clone();
    let mut prev_grads = p.grad_stack(&first);
    let mut state = NetworkState::new(first);
    if let Some(t) = monitor.observe(&state, &prev_grads, 0, step) {
        return Ok(monitor.finish(state, t));
    }
    if opts.max_iters == 0 {
        return Ok(monitor.finish(state, Termination::MaxIters));
    }
    let current = match start {
        TwoPointStart::Bootstrap(_) => {
            let mut x = state.x.left_mul_sparse(&op);
            x.axpy(-step, &prev_grads);
            x
        }
        TwoPointStart::Pair { current, .. } => {
            check_dims(&current, p.n_agents(), p.dim())?;
            current
        }
    };
    let mut prev: AgentMatrix = std::mem::replace(&mut state.x, current);
    let mut grads = p.grad_stack(&state.x);

    for r in 1..=opts.max_iters {
        state.iteration = r;
        if let Some(t) = monitor.observe(&state, &grads, r, step) {
            return Ok(monitor.finish(state, t));
        }
        if r == opts.max_iters {
            break;
        }
        let mut next = state.x.lin_comb(2.0, &prev, -1.0).left_mul_sparse(&op);
        next.axpy(-step, &grads);
        next.axpy(step, &prev_grads);
        prev = std::mem::replace(&mut state.x, next);
        std::mem::swap(&mut prev_grads, &mut grads);
        p.grad_stack_into(&state.x, &mut grads);
    }
    Ok(monitor.finish(state, Termination::MaxIters))
}
