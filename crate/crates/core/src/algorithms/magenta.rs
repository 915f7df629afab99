//! Multi-stage projected gradient tracking.
//!
//! Stage `t` confines every agent to the ball `X(t) = B(z, t·d)` around the
//! initial average `z = x̄⁰`. Inside a stage the per-agent curvature bounds on
//! `X(t)` are agreed by max-consensus, a stepsize `α(t)` is derived from the
//! largest one, and `R(t) = ⌈1/(ε α(t))⌉` projected tracking steps are taken:
//!
//! ```text
//! x̃ = Π_X(t)(x − α y)        v = x̃ − x
//! x ← W(x + β v)             y ← W y + ∇g(x_new) − ∇g(x_old)
//! ```
//!
//! A stage whose iterates never reach the sphere and whose average gap is at
//! most `ε` ends the run as Converged.

use serde::{Deserialize, Serialize};

use super::{check_dims, project_ball_in_place, AlgorithmError, IterationRecord, NetworkState, Termination, TraceSink};
use crate::graph::{max_consensus, MixingMatrix};
use crate::linalg::{dist, AgentMatrix};
use crate::metrics::{
    boundary_touch, gap_from_parts, potential_coefficient, potential_with_coefficient, RunClass, RunClassifier,
    TOUCH_REL_TOL,
};
use crate::problems::{lipschitz_estimates, ProblemInstance};

/// How `α(t)` is chosen from `L̂(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MagentaStepsize {
    /// The three-branch rule of [`magenta_stepsize`].
    #[default]
    Theory,
    /// `min(1, scale / L̂²)`.
    InverseSquare { scale: f64 },
    /// `alpha0 / √t`, independent of `L̂`.
    DiminishingSqrt { alpha0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagentaParams {
    pub epsilon: f64,
    /// Radius increment: `v^t = t·d`.
    pub d: f64,
    /// Defaults to [`default_gamma`] of the contraction factor.
    pub gamma: Option<f64>,
    pub xi: Option<f64>,
    pub beta: f64,
    pub max_stages: u32,
    pub stepsize: MagentaStepsize,
    /// Hard cap on inner iterations over all stages.
    pub max_total_iters: Option<u64>,
    /// Stop as Converged once the per-iterate gap drops below this value.
    pub stop_gap_below: Option<f64>,
    /// End the run at the first boundary-free stage with average gap `≤ ε`.
    pub early_success: bool,
    /// Lower bound `f̲`; falls back to the problem's own.
    pub lower_bound: Option<f64>,
}

impl MagentaParams {
    pub fn new(epsilon: f64, d: f64) -> Self {
        Self {
            epsilon,
            d,
            gamma: None,
            xi: None,
            beta: 0.5,
            max_stages: 100,
            stepsize: MagentaStepsize::Theory,
            max_total_iters: None,
            stop_gap_below: None,
            early_success: true,
            lower_bound: None,
        }
    }
}

/// `min(1, (1/η² − 1)/2)` for `η > 0`, else 1. Keeps `(1+γ)η² ≤ (1+η²)/2`.
pub fn default_gamma(eta: f64) -> f64 {
    if eta > 0.0 {
        (0.5 * (1.0 / (eta * eta) - 1.0)).min(1.0)
    } else {
        1.0
    }
}

fn check_contraction(gamma: f64, xi: f64, eta: f64) -> Result<(), AlgorithmError> {
    for (name, v) in [("gamma", gamma), ("xi", xi)] {
        if !(v > 0.0) {
            return Err(AlgorithmError::InvalidParameter(format!("{name} must be > 0, got {v}")));
        }
        if (1.0 + v) * eta * eta >= 1.0 {
            return Err(AlgorithmError::InvalidParameter(format!(
                "(1 + {name}) * eta^2 = {} must be below 1",
                (1.0 + v) * eta * eta
            )));
        }
    }
    Ok(())
}

/// `α = min{ (1/(8N)) / (L̂/(2N) + 1/γ + 5/4),
///           N(1−(1+γ)η²)(1−(1+ξ)η²) / (64(1+1/ξ)L̂²), 1 }`.
pub fn magenta_stepsize(l_hat: f64, n: usize, gamma: f64, xi: f64, eta: f64) -> Result<f64, AlgorithmError> {
    check_contraction(gamma, xi, eta)?;
    if !(l_hat > 0.0) || n == 0 {
        return Err(AlgorithmError::InvalidParameter(format!(
            "need l_hat > 0 and n >= 1, got {l_hat}, {n}"
        )));
    }
    let nf = n as f64;
    let linear = (1.0 / (8.0 * nf)) / (l_hat / (2.0 * nf) + 1.0 / gamma + 1.25);
    let quadratic = nf * (1.0 - (1.0 + gamma) * eta * eta) * (1.0 - (1.0 + xi) * eta * eta)
        / (64.0 * (1.0 + 1.0 / xi) * l_hat * l_hat);
    Ok(linear.min(quadratic).min(1.0))
}

/// Weights of the per-iteration descent guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn theorem1_constants(
    alpha: f64,
    l_hat: f64,
    l_global: f64,
    n: usize,
    gamma: f64,
    xi: f64,
    eta: f64,
    beta: f64,
) -> DescentConstants {
    let nf = n as f64;
    let ab = alpha * beta;
    let c1 = beta * (1.0 / (8.0 * nf) - l_global * ab / (2.0 * nf) - ab * (1.0 + 1.0 / gamma + 0.25));
    let c2 = (1.0 - (1.0 + gamma) * eta * eta) / 2.0 - l_hat * l_hat * ab / nf;
    let c3 = (1.0 - (1.0 + gamma) * eta * eta) * (1.0 - (1.0 + xi) * eta * eta) / (32.0 * (1.0 + 1.0 / xi))
        - 2.0 * ab * l_hat * l_hat / nf;
    DescentConstants { c1, c2, c3 }
}

/// Stages that may touch the boundary before a boundary-free one must occur,
/// for the linear schedule: `⌈128 (P⁰ − f̲) / (ε d²)⌉`.
///
/// A quotient within rounding of an integer is taken as that integer.
pub fn magenta_stage_bound(
    epsilon: f64,
    gamma: f64,
    eta: f64,
    d: f64,
    p0_minus_lower: f64,
) -> Result<u64, AlgorithmError> {
    let limit = 2.0 * (1.0 - (1.0 + gamma) * eta * eta);
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "epsilon must lie in (0, {limit}), got {epsilon}"
        )));
    }
    if !(p0_minus_lower > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "initial potential gap must be positive, got {p0_minus_lower}"
        )));
    }
    if !(d > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!("d must be > 0, got {d}")));
    }
    let raw = 128.0 * p0_minus_lower / (epsilon * d * d);
    let nearest = raw.round();
    let stages = if (raw - nearest).abs() <= 1e-12 * raw.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    Ok(stages.min(u64::MAX as f64) as u64)
}

/// Everything fixed for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub t: u32,
    pub radius: f64,
    pub center: Vec<f64>,
    pub alpha: f64,
    pub inner_iters: u64,
    pub l_hat: f64,
    pub l_global: f64,
}

/// Diagnostics collected over one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub schedule: StageSchedule,
    pub constants: DescentConstants,
    pub iterations_run: u64,
    /// Iterations where some `x_i` or `x̃_i` was on the sphere.
    pub touch_iterations: u64,
    /// No touch at any iterate of the stage, final one included.
    pub boundary_free: bool,
    pub avg_gap_unconstrained: f64,
    pub avg_gap_constrained: f64,
    pub potential_start: f64,
    pub potential_end: f64,
    /// Boundary-free steps where the potential strictly increased.
    pub potential_increases: u64,
    /// Largest `(P^{r+1} − P^r)/(1 + |P^r|)` over boundary-free steps.
    pub max_rel_potential_increase: f64,
    /// `(1/R) Σ (c₁‖v/α‖² + c₂‖x − 1x̄‖² + 2c₃/(N(1−(1+γ)η²)) ‖y − 1ȳ‖²)`.
    pub weighted_gap: f64,
    /// `(P⁰ − f̲) ε`, when `f̲` is known.
    pub weighted_gap_bound: Option<f64>,
    /// Largest `‖ȳ − (1/N)Σ∇f_i(x_i)‖` seen.
    pub max_tracking_error: f64,
    /// Largest `‖x_i − z‖ − radius` over iterates and trial points.
    pub max_feasibility_excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagentaOutcome {
    pub state: NetworkState,
    pub termination: Termination,
    pub stages: Vec<StageReport>,
    pub total_iters: u64,
    pub gamma: f64,
    pub xi: f64,
    pub eta_used: f64,
    /// Stage bound computed at the first stage, when `f̲` is known and the
    /// hypothesis on `ε` holds.
    pub stage_bound: Option<u64>,
    pub class: RunClass,
    pub min_gap: f64,
    pub final_gap: f64,
}

struct StageAccum {
    n: u64,
    touches: u64,
    unconstrained: f64,
    constrained: f64,
    weighted: f64,
    increases: u64,
    max_rel_increase: f64,
    tracking: f64,
    excess: f64,
}

impl StageAccum {
    fn new() -> Self {
        Self {
            n: 0,
            touches: 0,
            unconstrained: 0.0,
            constrained: 0.0,
            weighted: 0.0,
            increases: 0,
            max_rel_increase: f64::NEG_INFINITY,
            tracking: 0.0,
            excess: f64::NEG_INFINITY,
        }
    }
}

fn max_excess(m: &AgentMatrix, z: &[f64], radius: f64) -> f64 {
    m.row_iter()
        .map(|r| dist(r, z) - radius)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn tracking_error(y: &AgentMatrix, grads: &AgentMatrix) -> f64 {
    y.mean_row()
        .iter()
        .zip(grads.mean_row())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn run_magenta<S: TraceSink + ?Sized>(
    p: &ProblemInstance,
    w: &MixingMatrix,
    x0: AgentMatrix,
    params: &MagentaParams,
    sink: &mut S,
) -> Result<MagentaOutcome, AlgorithmError> {
    let n = p.n_agents();
    check_dims(&x0, n, p.dim())?;
    check_dims(&x0, w.n_agents(), p.dim())?;
    if !(params.epsilon > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "epsilon must be > 0, got {}",
            params.epsilon
        )));
    }
    if !(params.d > 0.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "d must be > 0, got {}",
            params.d
        )));
    }
    if !(params.beta > 0.0 && params.beta < 1.0) {
        return Err(AlgorithmError::InvalidParameter(format!(
            "beta must lie in (0, 1), got {}",
            params.beta
        )));
    }
    if params.max_stages == 0 {
        return Err(AlgorithmError::InvalidParameter("max_stages must be positive".into()));
    }
    match params.stepsize {
        MagentaStepsize::InverseSquare { scale: a } | MagentaStepsize::DiminishingSqrt { alpha0: a } if !(a > 0.0) => {
            return Err(AlgorithmError::InvalidParameter(format!(
                "stepsize constant must be > 0, got {a}"
            )));
        }
        _ => {}
    }
    if !x0.is_finite() {
        return Err(AlgorithmError::NonFinite { stage: 0, iteration: 0 });
    }

    let eta = w.deviation_norm();
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(eta));
    let xi = params.xi.unwrap_or_else(|| default_gamma(eta));
    check_contraction(gamma, xi, eta)?;
    if params.epsilon > 2.0 {
        log::warn!(
            "epsilon = {} exceeds 2; the stage-count guarantee does not apply",
            params.epsilon
        );
    }
    let contraction = 1.0 - (1.0 + gamma) * eta * eta;
    let lower = params.lower_bound.or(p.lower_bound());

    let z = x0.mean_row();
    let first_stage = {
        let spread = x0.row_iter().map(|r| dist(r, &z)).fold(0.0, f64::max);
        ((spread / params.d).ceil() as u32).max(1)
    };
    let mut grads = p.grad_stack(&x0);
    let mut state = NetworkState::with_tracking(x0, grads.clone());
    let mut stages = Vec::new();
    let mut classifier = RunClassifier::default();
    let mut last_gap = f64::NAN;
    let mut global: u64 = 0;
    let mut stage_bound = None;
    let mut warned_c2 = false;

    let finish =
        |state, termination, stages, global, stage_bound, classifier: RunClassifier, last_gap| MagentaOutcome {
            state,
            termination,
            stages,
            total_iters: global,
            gamma,
            xi,
            eta_used: eta,
            stage_bound,
            class: classifier.class(),
            min_gap: classifier.min_gap(),
            final_gap: last_gap,
        };

    for t in first_stage..first_stage.saturating_add(params.max_stages) {
        state.stage = Some(t);
        let radius = t as f64 * params.d;
        let tol = TOUCH_REL_TOL * radius;
        let est = lipschitz_estimates(p, &z, radius)?;
        let l_hat = max_consensus(&est.per_agent, w.graph())?[0];
        let alpha = match params.stepsize {
            MagentaStepsize::Theory => magenta_stepsize(l_hat, n, gamma, xi, eta)?,
            MagentaStepsize::InverseSquare { scale } => (scale / (l_hat * l_hat)).min(1.0),
            MagentaStepsize::DiminishingSqrt { alpha0 } => alpha0 / (t as f64).sqrt(),
        };
        let inner = (1.0 / (params.epsilon * alpha)).ceil();
        let inner_iters = if inner >= u64::MAX as f64 {
            u64::MAX
        } else {
            inner as u64
        };
        let coeff = potential_coefficient(l_hat, gamma, xi, eta)?;
        let constants = theorem1_constants(alpha, l_hat, est.l_global, n, gamma, xi, eta, params.beta);
        if !warned_c2 && params.epsilon / 8.0 > constants.c2 {
            log::warn!(
                "epsilon/8 = {} exceeds c2 = {} at stage {t}",
                params.epsilon / 8.0,
                constants.c2
            );
            warned_c2 = true;
        }
        let y_weight = 2.0 * constants.c3 / (n as f64 * contraction);
        let schedule = StageSchedule {
            t,
            radius,
            center: z.clone(),
            alpha,
            inner_iters,
            l_hat,
            l_global: est.l_global,
        };

        let y = state.y.as_ref().expect("tracking variable");
        let potential_start = potential_with_coefficient(&state.x, y, p, coeff).value;
        if stages.is_empty() {
            if let Some(f_low) = lower {
                if params.epsilon < 2.0 * contraction && potential_start > f_low {
                    stage_bound = Some(magenta_stage_bound(
                        params.epsilon,
                        gamma,
                        eta,
                        params.d,
                        potential_start - f_low,
                    )?);
                }
            }
        }

        let mut acc = StageAccum::new();
        // (P^r, whether x^r and x̃^{r+1} were interior)
        let mut pending: Option<(f64, bool)> = None;
        let mut stopped: Option<Termination> = None;
        let mut r: u64 = 0;
        while r < inner_iters {
            if params.max_total_iters.is_some_and(|cap| global >= cap) {
                stopped = Some(Termination::Budget);
                break;
            }
            let y = state.y.as_ref().expect("tracking variable");
            let mut x_trial = state.x.lin_comb(1.0, y, -alpha);
            for i in 0..n {
                project_ball_in_place(x_trial.row_mut(i), &z, radius);
            }
            let v = x_trial.sub(&state.x);
            let mut gaps = gap_from_parts(&state.x, &grads, Some(y));
            let v_sq = v.norm_sq();
            gaps.v_over_alpha_sq = Some(v_sq / (alpha * alpha));
            let pot = potential_with_coefficient(&state.x, y, p, coeff).value;
            let flags = boundary_touch(&state.x, Some(&x_trial), &z, radius, tol);
            let x_interior = !flags.x.iter().any(|&b| b);
            if let Some((prev, prev_free)) = pending {
                if prev_free && x_interior {
                    let rel = (pot - prev) / (1.0 + prev.abs());
                    acc.max_rel_increase = acc.max_rel_increase.max(rel);
                    if pot > prev {
                        acc.increases += 1;
                    }
                }
            }
            let touched = flags.any();
            pending = Some((pot, !touched));
            acc.touches += u64::from(touched);
            acc.excess = acc
                .excess
                .max(max_excess(&state.x, &z, radius))
                .max(max_excess(&x_trial, &z, radius));
            acc.tracking = acc.tracking.max(tracking_error(y, &grads));
            let gap = gaps.stationarity_gap();
            acc.unconstrained += gap;
            acc.constrained +=
                gaps.v_over_alpha_sq.unwrap_or(0.0) + gaps.x_consensus_sq + gaps.y_consensus_sq.unwrap_or(0.0);
            acc.weighted += constants.c1 * v_sq / (alpha * alpha)
                + constants.c2 * gaps.x_consensus_sq
                + y_weight * gaps.y_consensus_sq.unwrap_or(0.0);
            acc.n += 1;

            state.iteration = r;
            let rec = IterationRecord {
                stage: Some(t),
                iteration: r,
                global_iteration: global,
                alpha,
                radius: Some(radius),
                gaps,
                potential: Some(pot),
                boundary_touch_count: flags.count(),
            };
            sink.record(&rec, &state);
            last_gap = gap;
            classifier.push(gap);

            if params.stop_gap_below.is_some_and(|thr| gap < thr) || (gap == 0.0 && v_sq == 0.0) {
                stopped = Some(Termination::Converged);
                break;
            }

            let mut step_point = state.x.clone();
            step_point.axpy(params.beta, &v);
            let x_next = w.mix(&step_point);
            let grads_next = p.grad_stack(&x_next);
            let y_ref = state.y.as_ref().expect("tracking variable");
            let mut y_next = w.mix(y_ref);
            y_next.axpy(1.0, &grads_next);
            y_next.axpy(-1.0, &grads);
            if !x_next.is_finite() || !y_next.is_finite() {
                return Err(AlgorithmError::NonFinite { stage: t, iteration: r });
            }
            state.x = x_next;
            state.y = Some(y_next);
            grads = grads_next;
            r += 1;
            global += 1;
        }

        let y = state.y.as_ref().expect("tracking variable");
        let potential_end = potential_with_coefficient(&state.x, y, p, coeff).value;
        let final_flags = boundary_touch(&state.x, None, &z, radius, tol);
        if stopped.is_none() {
            if let Some((prev, prev_free)) = pending {
                if prev_free && !final_flags.any() {
                    acc.max_rel_increase = acc.max_rel_increase.max((potential_end - prev) / (1.0 + prev.abs()));
                    if potential_end > prev {
                        acc.increases += 1;
                    }
                }
            }
            acc.excess = acc.excess.max(max_excess(&state.x, &z, radius));
            acc.tracking = acc.tracking.max(tracking_error(y, &grads));
        }
        let count = acc.n.max(1) as f64;
        let boundary_free = acc.touches == 0 && !final_flags.any();
        let report = StageReport {
            schedule,
            constants,
            iterations_run: acc.n,
            touch_iterations: acc.touches,
            boundary_free,
            avg_gap_unconstrained: acc.unconstrained / count,
            avg_gap_constrained: acc.constrained / count,
            potential_start,
            potential_end,
            potential_increases: acc.increases,
            max_rel_potential_increase: acc.max_rel_increase,
            weighted_gap: acc.weighted / count,
            weighted_gap_bound: lower.map(|f| (potential_start - f) * params.epsilon),
            max_tracking_error: acc.tracking,
            max_feasibility_excess: acc.excess,
        };
        let success = params.early_success && boundary_free && report.avg_gap_unconstrained <= params.epsilon;
        log::debug!(
            "stage {t}: radius {radius}, L̂ {l_hat}, alpha {alpha}, R {inner_iters}, avg gap {}, boundary free {boundary_free}",
            report.avg_gap_unconstrained
        );
        stages.push(report);
        if let Some(term) = stopped {
            return Ok(finish(state, term, stages, global, stage_bound, classifier, last_gap));
        }
        if success {
            return Ok(finish(
                state,
                Termination::Converged,
                stages,
                global,
                stage_bound,
                classifier,
                last_gap,
            ));
        }
    }
    Ok(finish(
        state,
        Termination::Budget,
        stages,
        global,
        stage_bound,
        classifier,
        last_gap,
    ))
}

/// `‖ȳ − (1/N) Σ ∇f_i(x_i)‖` for a state carrying a tracking variable.
pub fn tracking_residual(state: &NetworkState, p: &ProblemInstance) -> Option<f64> {
    let y = state.y.as_ref()?;
    Some(tracking_error(y, &p.grad_stack(&state.x)))
}
