//! C interface to `magenta-core`.
//!
//! Every fallible function returns a [`MagentaStatus`]. On failure a message is
//! kept per thread and read with [`magenta_last_error`]. Objects are opaque
//! handles created through an out-pointer and released with their `_free`
//! function; passing a null handle to a `_free` function is a no-op.
//!
//! Agent matrices cross the boundary as row-major `double` arrays of length
//! `n_agents * dim`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use magenta_core::algorithms::magenta::{run_magenta, MagentaParams, MagentaStepsize};
use magenta_core::algorithms::{
    run_dgd, run_gradient_tracking, run_prox_pda, AlgorithmError, DgdStep, NullSink, RunOptions, TwoPointStart,
};
use magenta_core::graph::{
    build_complete_graph, build_mixing_matrix, build_path_graph, build_random_geometric_graph, incidence_matrix,
    GraphError,
};
use magenta_core::harness::{run_experiment, write_csv, ExperimentConfig, ExperimentReport, HarnessError};
use magenta_core::linalg::AgentMatrix;
use magenta_core::metrics::RunClass;
use magenta_core::problems::{
    make_cubic_pair, make_logistic_regression, make_quartic_pair, synthetic_logistic_data, ProblemError,
};
use magenta_core::{Graph, MixingMatrix, MixingRule, ProblemInstance, Termination};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagentaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Graph = 3,
    Problem = 4,
    Algorithm = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagentaMixingRule {
    MetropolisHastings = 0,
    /// `I − δL` with `δ = delta_factor / λ_max(L)`.
    LaplacianShift = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagentaRunClass {
    Converged = 0,
    Diverged = 1,
    Undecided = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagentaTermination {
    MaxIters = 0,
    Diverged = 1,
    Converged = 2,
    Budget = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagentaStepRule {
    Theory = 0,
    /// `min(1, step_param / L̂²)`.
    InverseSquare = 1,
    /// `step_param / √t`.
    DiminishingSqrt = 2,
}

/// Parameters of the multi-stage method. Fill with `magenta_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagentaOptions {
    pub epsilon: f64,
    pub d: f64,
    pub beta: f64,
    pub max_stages: u32,
    pub step_rule: MagentaStepRule,
    pub step_param: f64,
    /// Zero means no cap.
    pub max_total_iters: u64,
    pub early_success: bool,
}

/// Scalar results of a finished run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagentaRunInfo {
    pub termination: MagentaTermination,
    pub run_class: MagentaRunClass,
    pub min_gap: f64,
    pub final_gap: f64,
    pub iterations: u64,
    /// Stages entered; zero for single-stage algorithms.
    pub stages: u32,
    pub n_agents: usize,
    pub dim: usize,
}

pub struct MagentaGraph(Graph);
pub struct MagentaMixing(MixingMatrix);
pub struct MagentaProblem(ProblemInstance);

pub struct MagentaRun {
    info: MagentaRunInfo,
    x: AgentMatrix,
}

pub struct MagentaExperiment(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: MagentaStatus,
    msg: String,
}

impl Failure {
    fn new(status: MagentaStatus, msg: impl Into<String>) -> Self {
        Self {
            status,
            msg: msg.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(MagentaStatus::NullPointer, format!("`{what}` is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Self::new(MagentaStatus::InvalidArgument, msg)
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Self::new(MagentaStatus::Graph, e.to_string())
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        Self::new(MagentaStatus::Problem, e.to_string())
    }
}

impl From<AlgorithmError> for Failure {
    fn from(e: AlgorithmError) -> Self {
        Self::new(MagentaStatus::Algorithm, e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match &e {
            HarnessError::Io { .. } | HarnessError::InFile { .. } => MagentaStatus::Io,
            HarnessError::Graph(_) => MagentaStatus::Graph,
            HarnessError::Problem(_) => MagentaStatus::Problem,
            HarnessError::Run { .. } => MagentaStatus::Algorithm,
            _ => MagentaStatus::Config,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nulls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MagentaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MagentaStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.msg);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            MagentaStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(value)), "out")
}

unsafe fn doubles<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn doubles_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::invalid(format!("`{what}` is not UTF-8: {e}")))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn agent_matrix(p: &ProblemInstance, data: &[f64]) -> Result<AgentMatrix, Failure> {
    let (n, dim) = (p.n_agents(), p.dim());
    AgentMatrix::from_row_major(n, dim, data.to_vec())
        .ok_or_else(|| Failure::invalid(format!("x0 has {} values, expected {n}x{dim}", data.len())))
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> Result<(), Failure> {
    if dst.len() != src.len() {
        return Err(Failure::invalid(format!(
            "buffer holds {} values, need {}",
            dst.len(),
            src.len()
        )));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Message of the most recent failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn magenta_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn magenta_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// Graphs.

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_path(n: usize, out: *mut *mut MagentaGraph) -> MagentaStatus {
    guard(|| put_box(out, MagentaGraph(build_path_graph(n)?)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_complete(n: usize, out: *mut *mut MagentaGraph) -> MagentaStatus {
    guard(|| put_box(out, MagentaGraph(build_complete_graph(n)?)))
}

/// Connected random geometric graph in the unit square.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_random_geometric(
    n: usize,
    radius: f64,
    seed: u64,
    out: *mut *mut MagentaGraph,
) -> MagentaStatus {
    guard(|| put_box(out, MagentaGraph(build_random_geometric_graph(n, radius, seed)?)))
}

/// `edges` holds `n_edges` pairs `(u, v)` flattened.
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_from_edges(
    n: usize,
    edges: *const usize,
    n_edges: usize,
    out: *mut *mut MagentaGraph,
) -> MagentaStatus {
    guard(|| {
        if n_edges > 0 && edges.is_null() {
            return Err(Failure::null("edges"));
        }
        let flat = if n_edges == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(edges, 2 * n_edges)
        };
        let g = Graph::new(n, flat.chunks_exact(2).map(|e| (e[0], e[1])))?;
        put_box(out, MagentaGraph(g))
    })
}

/// # Safety
/// `g` must be a live graph handle; `n_agents` and `n_edges` must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_size(
    g: *const MagentaGraph,
    n_agents: *mut usize,
    n_edges: *mut usize,
) -> MagentaStatus {
    guard(|| {
        let g = &handle(g, "graph")?.0;
        if !n_agents.is_null() {
            n_agents.write(g.n_agents());
        }
        if !n_edges.is_null() {
            n_edges.write(g.edges().len());
        }
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a graph handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_graph_free(g: *mut MagentaGraph) {
    free(g)
}

// Mixing matrices.

/// `delta_factor` is ignored for Metropolis-Hastings weights.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_mixing_new(
    g: *const MagentaGraph,
    rule: MagentaMixingRule,
    delta_factor: f64,
    out: *mut *mut MagentaMixing,
) -> MagentaStatus {
    guard(|| {
        let g = &handle(g, "graph")?.0;
        let rule = match rule {
            MagentaMixingRule::MetropolisHastings => MixingRule::MetropolisHastings,
            MagentaMixingRule::LaplacianShift => MixingRule::LaplacianShift { delta_factor },
        };
        put_box(out, MagentaMixing(build_mixing_matrix(g, rule)?))
    })
}

/// Second-largest eigenvalue and `‖W − 11ᵀ/N‖`.
///
/// # Safety
/// `w` must be a live handle; `eta` and `deviation_norm` must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn magenta_mixing_spectrum(
    w: *const MagentaMixing,
    eta: *mut f64,
    deviation_norm: *mut f64,
) -> MagentaStatus {
    guard(|| {
        let w = &handle(w, "mixing")?.0;
        if !eta.is_null() {
            eta.write(w.eta());
        }
        if !deviation_norm.is_null() {
            deviation_norm.write(w.deviation_norm());
        }
        Ok(())
    })
}

/// Copies `W` row-major into `buf`, which must hold exactly `N²` values.
///
/// # Safety
/// `w` must be a live handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn magenta_mixing_entries(w: *const MagentaMixing, buf: *mut f64, len: usize) -> MagentaStatus {
    guard(|| {
        let m = handle(w, "mixing")?.0.entries();
        let row_major: Vec<f64> = m.transpose().iter().copied().collect();
        copy_into(doubles_mut(buf, len, "buf")?, &row_major)
    })
}

/// # Safety
/// `w` must be null or a mixing handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_mixing_free(w: *mut MagentaMixing) {
    free(w)
}

// Problems.

/// `f₁ = x³/3`, `f₂ = −x³/3`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_cubic_pair(out: *mut *mut MagentaProblem) -> MagentaStatus {
    guard(|| put_box(out, MagentaProblem(make_cubic_pair())))
}

/// `f₁ = f₂ = ½(x − 20)⁴`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_quartic_pair(out: *mut *mut MagentaProblem) -> MagentaStatus {
    guard(|| put_box(out, MagentaProblem(make_quartic_pair())))
}

/// Regularized logistic regression on synthetic data split across `agents`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_logistic(
    agents: usize,
    samples: usize,
    dim: usize,
    lambda: f64,
    rho: f64,
    flip_prob: f64,
    seed: u64,
    out: *mut *mut MagentaProblem,
) -> MagentaStatus {
    guard(|| {
        let data = synthetic_logistic_data(agents, samples, dim, flip_prob, seed)?;
        put_box(out, MagentaProblem(make_logistic_regression(&data, lambda, rho)?))
    })
}

/// # Safety
/// `p` must be a live handle; `n_agents` and `dim` must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_shape(
    p: *const MagentaProblem,
    n_agents: *mut usize,
    dim: *mut usize,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        if !n_agents.is_null() {
            n_agents.write(p.n_agents());
        }
        if !dim.is_null() {
            dim.write(p.dim());
        }
        Ok(())
    })
}

/// `f(u)` and `∇f(u)` of the average objective. `grad` may be null.
///
/// # Safety
/// `u` must point to `dim` values, `grad` to `dim` writable values or be null,
/// `value` must be valid for writes or null.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_eval(
    p: *const MagentaProblem,
    u: *const f64,
    dim: usize,
    value: *mut f64,
    grad: *mut f64,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        if dim != p.dim() {
            return Err(Failure::invalid(format!(
                "point has {dim} values, problem dimension is {}",
                p.dim()
            )));
        }
        let u = doubles(u, dim, "u")?;
        if !value.is_null() {
            value.write(p.eval_mean(u));
        }
        if !grad.is_null() {
            copy_into(doubles_mut(grad, dim, "grad")?, &p.grad_mean(u))?;
        }
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a problem handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_problem_free(p: *mut MagentaProblem) {
    free(p)
}

// Single runs.

fn run_class(c: RunClass) -> MagentaRunClass {
    match c {
        RunClass::Converged => MagentaRunClass::Converged,
        RunClass::Diverged => MagentaRunClass::Diverged,
        RunClass::Undecided => MagentaRunClass::Undecided,
    }
}

fn termination(t: Termination) -> MagentaTermination {
    match t {
        Termination::MaxIters => MagentaTermination::MaxIters,
        Termination::Diverged => MagentaTermination::Diverged,
        Termination::Converged => MagentaTermination::Converged,
        Termination::Budget => MagentaTermination::Budget,
    }
}

fn single_stage(out: magenta_core::algorithms::RunOutcome) -> MagentaRun {
    MagentaRun {
        info: MagentaRunInfo {
            termination: termination(out.termination),
            run_class: run_class(out.class),
            min_gap: out.min_gap,
            final_gap: out.final_gap,
            iterations: out.state.iteration,
            stages: 0,
            n_agents: out.state.x.rows(),
            dim: out.state.x.cols(),
        },
        x: out.state.x,
    }
}

/// Decentralized gradient descent, constant or `alpha/(1+r)` stepsize.
///
/// # Safety
/// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_dgd(
    p: *const MagentaProblem,
    w: *const MagentaMixing,
    x0: *const f64,
    len: usize,
    alpha: f64,
    diminishing: bool,
    max_iters: u64,
    out: *mut *mut MagentaRun,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        let w = &handle(w, "mixing")?.0;
        let x0 = agent_matrix(p, doubles(x0, len, "x0")?)?;
        let step = if diminishing {
            DgdStep::Diminishing(alpha)
        } else {
            DgdStep::Constant(alpha)
        };
        let res = run_dgd(p, w, x0, step, RunOptions::new(max_iters), &mut NullSink)?;
        put_box(out, single_stage(res))
    })
}

/// Gradient tracking started from a single point.
///
/// # Safety
/// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_gradient_tracking(
    p: *const MagentaProblem,
    w: *const MagentaMixing,
    x0: *const f64,
    len: usize,
    alpha: f64,
    max_iters: u64,
    out: *mut *mut MagentaRun,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        let w = &handle(w, "mixing")?.0;
        let x0 = agent_matrix(p, doubles(x0, len, "x0")?)?;
        let res = run_gradient_tracking(
            p,
            w,
            TwoPointStart::Bootstrap(x0),
            alpha,
            RunOptions::new(max_iters),
            &mut NullSink,
        )?;
        put_box(out, single_stage(res))
    })
}

/// Proximal primal-dual method with penalty `rho` on the graph's incidence matrix.
///
/// # Safety
/// Handles must be live; `x0` must point to `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_prox_pda(
    p: *const MagentaProblem,
    g: *const MagentaGraph,
    x0: *const f64,
    len: usize,
    rho: f64,
    beta: f64,
    max_iters: u64,
    out: *mut *mut MagentaRun,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        let g = &handle(g, "graph")?.0;
        if g.n_agents() != p.n_agents() {
            return Err(Failure::invalid(format!(
                "graph has {} agents, problem has {}",
                g.n_agents(),
                p.n_agents()
            )));
        }
        let x0 = agent_matrix(p, doubles(x0, len, "x0")?)?;
        let a = incidence_matrix(g);
        let res = run_prox_pda(
            p,
            &a,
            rho,
            beta,
            TwoPointStart::Bootstrap(x0),
            RunOptions::new(max_iters),
            &mut NullSink,
        )?;
        put_box(out, single_stage(res))
    })
}

/// Defaults for tolerance `epsilon` and radius increment `d`.
#[no_mangle]
pub extern "C" fn magenta_options_default(epsilon: f64, d: f64) -> MagentaOptions {
    let p = MagentaParams::new(epsilon, d);
    MagentaOptions {
        epsilon,
        d,
        beta: p.beta,
        max_stages: p.max_stages,
        step_rule: MagentaStepRule::Theory,
        step_param: 0.0,
        max_total_iters: 0,
        early_success: p.early_success,
    }
}

/// The multi-stage projected gradient-tracking method.
///
/// # Safety
/// Handles must be live; `x0` must point to `len` values; `opts` must be
/// readable; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_magenta(
    p: *const MagentaProblem,
    w: *const MagentaMixing,
    x0: *const f64,
    len: usize,
    opts: *const MagentaOptions,
    out: *mut *mut MagentaRun,
) -> MagentaStatus {
    guard(|| {
        let p = &handle(p, "problem")?.0;
        let w = &handle(w, "mixing")?.0;
        let o = *handle(opts, "opts")?;
        let x0 = agent_matrix(p, doubles(x0, len, "x0")?)?;
        let mut params = MagentaParams::new(o.epsilon, o.d);
        params.beta = o.beta;
        params.max_stages = o.max_stages;
        params.early_success = o.early_success;
        params.max_total_iters = (o.max_total_iters > 0).then_some(o.max_total_iters);
        params.stepsize = match o.step_rule {
            MagentaStepRule::Theory => MagentaStepsize::Theory,
            MagentaStepRule::InverseSquare => MagentaStepsize::InverseSquare { scale: o.step_param },
            MagentaStepRule::DiminishingSqrt => MagentaStepsize::DiminishingSqrt { alpha0: o.step_param },
        };
        let res = run_magenta(p, w, x0, &params, &mut NullSink)?;
        let run = MagentaRun {
            info: MagentaRunInfo {
                termination: termination(res.termination),
                run_class: run_class(res.class),
                min_gap: res.min_gap,
                final_gap: res.final_gap,
                iterations: res.total_iters,
                stages: res.stages.len() as u32,
                n_agents: res.state.x.rows(),
                dim: res.state.x.cols(),
            },
            x: res.state.x,
        };
        put_box(out, run)
    })
}

/// # Safety
/// `r` must be a live run handle; `info` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_info(r: *const MagentaRun, info: *mut MagentaRunInfo) -> MagentaStatus {
    guard(|| put(info, handle(r, "run")?.info, "info"))
}

/// Copies the final iterate row-major into `buf` (`n_agents * dim` values).
///
/// # Safety
/// `r` must be a live run handle; `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_final_iterate(r: *const MagentaRun, buf: *mut f64, len: usize) -> MagentaStatus {
    guard(|| copy_into(doubles_mut(buf, len, "buf")?, handle(r, "run")?.x.as_slice()))
}

/// # Safety
/// `r` must be null or a run handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_run_free(r: *mut MagentaRun) {
    free(r)
}

// Experiments.

/// Runs the experiment described by a TOML config. When the config sets
/// `output`, the trace and summary files are written as well.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_run(
    config_toml: *const c_char,
    out: *mut *mut MagentaExperiment,
) -> MagentaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let config = ExperimentConfig::from_toml_str(text(config_toml, "config_toml")?)?;
        put_box(out, MagentaExperiment(run_experiment(&config)?))
    })
}

/// The run summary as TOML. Free the string with `magenta_string_free`.
///
/// # Safety
/// `e` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_summary_toml(
    e: *const MagentaExperiment,
    out: *mut *mut c_char,
) -> MagentaStatus {
    guard(|| {
        let toml = handle(e, "experiment")?.0.summary.to_toml_string()?;
        let c = CString::new(toml).map_err(|e| Failure::invalid(e.to_string()))?;
        put(out, c.into_raw(), "out")
    })
}

/// Share of Converged runs, in percent, for the variant `label`.
///
/// # Safety
/// `e` must be a live handle; `label` a NUL-terminated string; `pct` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_convergence_pct(
    e: *const MagentaExperiment,
    label: *const c_char,
    pct: *mut f64,
) -> MagentaStatus {
    guard(|| {
        let label = text(label, "label")?;
        let v = handle(e, "experiment")?
            .0
            .summary
            .variant(label)
            .ok_or_else(|| Failure::invalid(format!("no variant `{label}`")))?;
        put(pct, v.convergence_pct, "pct")
    })
}

/// Number of trace rows recorded.
///
/// # Safety
/// `e` must be a live handle; `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_n_records(e: *const MagentaExperiment, n: *mut usize) -> MagentaStatus {
    guard(|| put(n, handle(e, "experiment")?.0.records.len(), "n"))
}

/// Writes the trace CSV to `path`.
///
/// # Safety
/// `e` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_write_csv(
    e: *const MagentaExperiment,
    path: *const c_char,
) -> MagentaStatus {
    guard(|| {
        let report = &handle(e, "experiment")?.0;
        let path = Path::new(text(path, "path")?);
        let file = std::fs::File::create(path)
            .map_err(|err| Failure::new(MagentaStatus::Io, format!("{}: {err}", path.display())))?;
        write_csv(&report.records, std::io::BufWriter::new(file))?
            .into_inner()
            .map_err(|err| Failure::new(MagentaStatus::Io, format!("{}: {}", path.display(), err.error())))?;
        Ok(())
    })
}

/// # Safety
/// `e` must be null or an experiment handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn magenta_experiment_free(e: *mut MagentaExperiment) {
    free(e)
}
