use super::{
    check_dims, AlgorithmError, Monitor, NetworkState, RunOptions, RunOutcome, Termination, TraceSink, TwoPointStart,
};
use crate::graph::MixingMatrix;
use crate::problems::ProblemInstance;

/// Two-point gradient tracking:
/// `x^{r+1} = 2W x^r − W² x^{r−1} − α(∇g(x^r) − ∇g(x^{r−1}))`.
///
/// Reported iteration 0 is the first supplied point; with
/// [`TwoPointStart::Bootstrap`] iteration 1 is `W x⁰ − α∇g(x⁰)`.
pub fn run_gradient_tracking<S: TraceSink + ?Sized>(
    p: &ProblemInstance,
    w: &MixingMatrix,
    start: TwoPointStart,
    alpha: f64,
    opts: RunOptions,
    sink: &mut S,
) -> Result<RunOutcome, AlgorithmError> {
    if !(alpha > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "stepsize must be > 0, got {alpha}"
        )));
    }
    check_dims(start.first(), p.n_agents(), p.dim())?;
    check_dims(start.first(), w.n_agents(), p.dim())?;
    let mut monitor = Monitor::new(sink, &opts);

    let first = start.first().clone();
    let mut prev_grads = p.grad_stack(&first);
    let mut state = NetworkState::new(first);
    if let Some(t) = monitor.observe(&state, &prev_grads, 0, alpha) {
        return Ok(monitor.finish(state, t));
    }
    if opts.max_iters == 0 {
        return Ok(monitor.finish(state, Termination::MaxIters));
    }
    let current = match start {
        TwoPointStart::Bootstrap(_) => {
            let mut x = w.mix(&state.x);
            x.axpy(-alpha, &prev_grads);
            x
        }
        TwoPointStart::Pair { current, .. } => {
            check_dims(&current, p.n_agents(), p.dim())?;
            current
        }
    };
    let mut prev = std::mem::replace(&mut state.x, current);
    let mut grads = p.grad_stack(&state.x);

    for r in 1..=opts.max_iters {
        state.iteration = r;
        if let Some(t) = monitor.observe(&state, &grads, r, alpha) {
            return Ok(monitor.finish(state, t));
        }
        if r == opts.max_iters {
            break;
        }
        let w_prev = w.mix(&prev);
        let mut next = w.mix(&state.x).lin_comb(2.0, &w.mix(&w_prev), -1.0);
        next.axpy(-alpha, &grads);
        next.axpy(alpha, &prev_grads);
        prev = std::mem::replace(&mut state.x, next);
        std::mem::swap(&mut prev_grads, &mut grads);
        p.grad_stack_into(&state.x, &mut grads);
    }
    Ok(monitor.finish(state, Termination::MaxIters))
}
