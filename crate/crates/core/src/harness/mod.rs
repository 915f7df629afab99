//! Experiment plumbing: TOML configs, named presets, seeded runs and CSV traces.
//!
//! Run `k` of an experiment draws its initial point from
//! `derive_seed(init.seed, Init, k)`; every algorithm variant sees the same
//! `k`-th point. Data sets use `derive_seed(problem.seed, Data, 0)` and random
//! geometric graphs `derive_seed(graph.seed, Graph, N)`.
//!
//! Runs execute in parallel; rows are buffered per run and concatenated in
//! variant-then-run order, so output does not depend on scheduling.

mod config;
mod presets;
mod trace;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{
    run_dgd, run_gradient_tracking, run_magenta, run_prox_pda, AlgorithmError, DgdStep, FnSink, IterationRecord,
    MagentaParams, NetworkState, RunOptions, Termination, TwoPointStart,
};
use crate::graph::{
    build_complete_graph, build_mixing_matrix, build_path_graph, build_random_geometric_graph, incidence_matrix, Graph,
    GraphError, IncidenceMatrix, MixingMatrix,
};
use crate::linalg::AgentMatrix;
use crate::metrics::RunClass;
use crate::problems::{
    make_cubic_pair, make_logistic_regression, make_matrix_factorization, make_polynomial_family, make_quartic_pair,
    make_softplus_network, synthetic_logistic_data, synthetic_network_data, PolynomialTerm, ProblemError,
    ProblemInstance,
};
use crate::rng::{derive_seed, rng_from_seed, standard_normal_vec, SeedPurpose};

pub use config::{
    AlgorithmSpec, Budget, ExperimentConfig, GraphSpec, InitDistribution, InitSpec, PenaltySpec, ProblemSpec, StepSpec,
    TermSpec, Topology,
};
pub use presets::{preset, preset_names, PresetName};
pub use trace::{emit_csv, parse_csv, read_csv, write_csv, TraceRecord, TraceWriter, CSV_HEADER, WALL_CLOCK_COLUMN};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("run {run} of `{algorithm}`: {source}")]
    Run {
        algorithm: String,
        run: u64,
        #[source]
        source: AlgorithmError,
    },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            msg: e.to_string(),
        }
    }

    pub(crate) fn with_path(self, path: &Path) -> Self {
        match self {
            e @ (HarnessError::Io { .. } | HarnessError::InFile { .. }) => e,
            e => HarnessError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: u64,
    pub algorithm: String,
    pub n_agents: usize,
    pub termination: Termination,
    pub class: RunClass,
    pub min_gap: f64,
    pub final_gap: f64,
    pub iterations: u64,
    /// Stages entered, for the multi-stage algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<u32>,
    /// The resolved stepsize (or penalty, for Prox-PDA).
    pub parameter: f64,
    pub x0_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub algorithm: String,
    pub runs: u64,
    pub converged: u64,
    pub diverged: u64,
    pub undecided: u64,
    /// Share of Converged runs, in percent. Zero when there are no runs.
    pub convergence_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub variants: Vec<VariantSummary>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    pub fn variant(&self, algorithm: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.algorithm == algorithm)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub records: Vec<TraceRecord>,
}

/// A fully built variant: problem, graph, and the algorithm to run on it.
struct Variant {
    label: String,
    problem: ProblemInstance,
    mixing: MixingMatrix,
    incidence: IncidenceMatrix,
    algorithm: AlgorithmSpec,
}

pub fn build_problem(spec: &ProblemSpec) -> Result<ProblemInstance, HarnessError> {
    Ok(match spec {
        ProblemSpec::CubicPair => make_cubic_pair(),
        ProblemSpec::QuarticPair => make_quartic_pair(),
        ProblemSpec::Polynomial {
            n_agents,
            dim,
            order,
            terms,
            lower_bound,
        } => {
            let terms: Vec<PolynomialTerm> = terms
                .iter()
                .map(|t| PolynomialTerm::new(t.agent, t.exponents.clone(), t.coeff))
                .collect();
            let p = make_polynomial_family(&terms, *n_agents, *dim, *order)?;
            match lower_bound {
                Some(f) => p.with_lower_bound(*f),
                None => p,
            }
        }
        ProblemSpec::MatrixFactorization { rank, observations } => make_matrix_factorization(*rank, observations)?,
        ProblemSpec::Logistic {
            agents,
            samples,
            dim,
            lambda,
            rho,
            flip_prob,
            seed,
        } => {
            let data = synthetic_logistic_data(
                *agents,
                *samples,
                *dim,
                *flip_prob,
                derive_seed(*seed, SeedPurpose::Data, 0),
            )?;
            make_logistic_regression(&data, *lambda, *rho)?
        }
        ProblemSpec::Network {
            agents,
            samples_per_agent,
            hidden,
            input_dim,
            activation,
            seed,
        } => {
            let data = synthetic_network_data(
                *agents,
                *samples_per_agent,
                *input_dim,
                derive_seed(*seed, SeedPurpose::Data, 0),
            )?;
            make_softplus_network(&data, *hidden, *activation)?
        }
    })
}

pub fn build_graph(spec: &GraphSpec, n: usize) -> Result<Graph, HarnessError> {
    let g = match &spec.topology {
        Topology::Path => build_path_graph(n)?,
        Topology::Complete => build_complete_graph(n)?,
        Topology::RandomGeometric { radius, seed } => {
            build_random_geometric_graph(n, *radius, derive_seed(*seed, SeedPurpose::Graph, n as u64))?
        }
        Topology::EdgeList { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Graph::from_edge_list(&text).map_err(|e| HarnessError::from(e).with_path(path))?
        }
    };
    if g.n_agents() != n {
        return Err(HarnessError::Config(format!(
            "graph has {} agents, problem has {n}",
            g.n_agents()
        )));
    }
    Ok(g)
}

/// The initial point of run `k`.
pub fn initial_point(spec: &InitSpec, n: usize, dim: usize, k: u64) -> Result<AgentMatrix, HarnessError> {
    match &spec.distribution {
        InitDistribution::Explicit { values } => AgentMatrix::from_row_major(n, dim, values.clone()).ok_or_else(|| {
            HarnessError::Config(format!("explicit init has {} values, expected {n}x{dim}", values.len()))
        }),
        dist => {
            let mut rng = rng_from_seed(derive_seed(spec.seed, SeedPurpose::Init, k));
            let mut values = standard_normal_vec(&mut rng, n * dim);
            if let InitDistribution::Normal { mean, std } = dist {
                values.iter_mut().for_each(|v| *v = mean + std * *v);
            }
            Ok(AgentMatrix::from_row_major(n, dim, values).expect("sized above"))
        }
    }
}

fn build_variants(config: &ExperimentConfig) -> Result<Vec<Variant>, HarnessError> {
    if config.algorithms.is_empty() {
        return Err(HarnessError::Config("no algorithms configured".into()));
    }
    if config.trace_stride == 0 {
        return Err(HarnessError::Config("trace_stride must be positive".into()));
    }
    if let InitDistribution::Normal { std, .. } = config.init.distribution {
        if !(std >= 0.0) {
            return Err(HarnessError::Config(format!("init std must be >= 0, got {std}")));
        }
    }
    for a in &config.algorithms {
        a.validate()?;
    }
    let problems: Vec<(Option<usize>, ProblemSpec)> = if config.agent_sweep.is_empty() {
        vec![(None, config.problem.clone())]
    } else {
        config
            .agent_sweep
            .iter()
            .map(|&n| Ok((Some(n), config.problem.with_agents(n)?)))
            .collect::<Result<_, HarnessError>>()?
    };
    let mut variants = Vec::new();
    for (sweep, spec) in problems {
        let problem = build_problem(&spec)?;
        let graph = build_graph(&config.graph, problem.n_agents())?;
        let mixing = build_mixing_matrix(&graph, config.graph.mixing)?;
        let incidence = incidence_matrix(&graph);
        initial_point(&config.init, problem.n_agents(), problem.dim(), 0)?;
        for algorithm in &config.algorithms {
            let label = match sweep {
                Some(n) => format!("{}_n{n}", algorithm.label()),
                None => algorithm.label(),
            };
            variants.push(Variant {
                label,
                problem: problem.clone(),
                mixing: mixing.clone(),
                incidence: incidence.clone(),
                algorithm: algorithm.clone(),
            });
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(v) = variants.iter().find(|v| !seen.insert(v.label.clone())) {
        return Err(HarnessError::Config(format!(
            "duplicate algorithm label `{}`; set `label`",
            v.label
        )));
    }
    Ok(variants)
}

/// Keeps every `stride`-th record plus the last one.
struct Recorder<'a> {
    run_id: u64,
    label: &'a str,
    stride: u64,
    start: Instant,
    rows: Vec<TraceRecord>,
    last: Option<(TraceRecord, bool)>,
}

impl<'a> Recorder<'a> {
    fn new(run_id: u64, label: &'a str, stride: u64) -> Self {
        Self {
            run_id,
            label,
            stride,
            start: Instant::now(),
            rows: Vec::new(),
            last: None,
        }
    }

    fn push(&mut self, rec: &IterationRecord) {
        let row = TraceRecord::from_iteration(self.run_id, self.label, rec, self.start.elapsed().as_micros() as u64);
        let keep = rec.global_iteration % self.stride == 0;
        if keep {
            self.rows.push(row.clone());
        }
        self.last = Some((row, keep));
    }

    fn finish(mut self) -> Vec<TraceRecord> {
        if let Some((row, false)) = self.last.take() {
            self.rows.push(row);
        }
        self.rows
    }
}

fn execute_run(
    variant: &Variant,
    config: &ExperimentConfig,
    k: u64,
) -> Result<(RunSummary, Vec<TraceRecord>), HarnessError> {
    let p = &variant.problem;
    let x0 = initial_point(&config.init, p.n_agents(), p.dim(), k)?;
    let x0_norm = x0.norm();
    let mut recorder = Recorder::new(k, &variant.label, config.trace_stride);
    let wrap = |source: AlgorithmError| HarnessError::Run {
        algorithm: variant.label.clone(),
        run: k,
        source,
    };
    let opts = RunOptions::new(config.budget.max_iters);
    let mut sink = FnSink(|rec: &IterationRecord, _: &NetworkState| recorder.push(rec));
    let summary = |termination, class, min_gap, final_gap, iterations, stages, parameter| RunSummary {
        run_id: k,
        algorithm: variant.label.clone(),
        n_agents: p.n_agents(),
        termination,
        class,
        min_gap,
        final_gap,
        iterations,
        stages,
        parameter,
        x0_norm,
    };
    let result = match &variant.algorithm {
        AlgorithmSpec::Dgd { step, diminishing, .. } => {
            let alpha = step.resolve(x0_norm)?;
            let rule = if *diminishing {
                DgdStep::Diminishing(alpha)
            } else {
                DgdStep::Constant(alpha)
            };
            let out = run_dgd(p, &variant.mixing, x0, rule, opts, &mut sink).map_err(wrap)?;
            let iters = out.state.iteration;
            summary(
                out.termination,
                out.class,
                out.min_gap,
                out.final_gap,
                iters,
                None,
                alpha,
            )
        }
        AlgorithmSpec::GradientTracking { step, .. } => {
            let alpha = step.resolve(x0_norm)?;
            let out = run_gradient_tracking(p, &variant.mixing, TwoPointStart::Bootstrap(x0), alpha, opts, &mut sink)
                .map_err(wrap)?;
            let iters = out.state.iteration;
            summary(
                out.termination,
                out.class,
                out.min_gap,
                out.final_gap,
                iters,
                None,
                alpha,
            )
        }
        AlgorithmSpec::ProxPda { penalty, beta, .. } => {
            let rho = penalty.resolve(x0_norm)?;
            let out = run_prox_pda(
                p,
                &variant.incidence,
                rho,
                *beta,
                TwoPointStart::Bootstrap(x0),
                opts,
                &mut sink,
            )
            .map_err(wrap)?;
            let iters = out.state.iteration;
            summary(out.termination, out.class, out.min_gap, out.final_gap, iters, None, rho)
        }
        AlgorithmSpec::Magenta {
            epsilon,
            d,
            gamma,
            xi,
            beta,
            stepsize,
            max_total_iters,
            stop_gap_below,
            early_success,
            lower_bound,
            ..
        } => {
            let params = MagentaParams {
                epsilon: *epsilon,
                d: *d,
                gamma: *gamma,
                xi: *xi,
                beta: *beta,
                max_stages: config.budget.max_stages,
                stepsize: *stepsize,
                max_total_iters: *max_total_iters,
                stop_gap_below: *stop_gap_below,
                early_success: *early_success,
                lower_bound: *lower_bound,
            };
            match run_magenta(p, &variant.mixing, x0, &params, &mut sink) {
                Ok(out) => {
                    let alpha = out.stages.last().map_or(f64::NAN, |s| s.schedule.alpha);
                    let stages = out.stages.last().map(|s| s.schedule.t);
                    summary(
                        out.termination,
                        out.class,
                        out.min_gap,
                        out.final_gap,
                        out.total_iters,
                        stages,
                        alpha,
                    )
                }
                Err(AlgorithmError::NonFinite { stage, iteration }) => {
                    log::warn!(
                        "{}: run {k} hit a non-finite iterate at stage {stage}, iteration {iteration}",
                        variant.label
                    );
                    summary(
                        Termination::Diverged,
                        RunClass::Diverged,
                        f64::NAN,
                        f64::NAN,
                        iteration,
                        Some(stage),
                        f64::NAN,
                    )
                }
                Err(e) => return Err(wrap(e)),
            }
        }
    };
    Ok((result, recorder.finish()))
}

fn tally(label: &str, runs: &[RunSummary]) -> VariantSummary {
    let count = |c: RunClass| runs.iter().filter(|r| r.class == c).count() as u64;
    let total = runs.len() as u64;
    let converged = count(RunClass::Converged);
    VariantSummary {
        algorithm: label.to_string(),
        runs: total,
        converged,
        diverged: count(RunClass::Diverged),
        undecided: count(RunClass::Undecided),
        convergence_pct: if total == 0 {
            0.0
        } else {
            100.0 * converged as f64 / total as f64
        },
    }
}

/// Runs every variant `config.runs` times. The config is fully checked, and
/// every problem and graph built, before the first run starts. When
/// `config.output` is set, `trace.csv` and `summary.toml` are written there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let variants = build_variants(config)?;
    let jobs: Vec<(usize, u64)> = (0..variants.len())
        .flat_map(|v| (0..u64::from(config.runs)).map(move |k| (v, k)))
        .collect();
    let results: Vec<(RunSummary, Vec<TraceRecord>)> = jobs
        .par_iter()
        .map(|&(v, k)| execute_run(&variants[v], config, k))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    let mut runs = Vec::with_capacity(results.len());
    for (summary, rows) in results {
        runs.push(summary);
        records.extend(rows);
    }
    let variants = variants
        .iter()
        .map(|v| {
            let own: Vec<RunSummary> = runs.iter().filter(|r| r.algorithm == v.label).cloned().collect();
            tally(&v.label, &own)
        })
        .collect();
    let summary = ExperimentSummary {
        name: config.name.clone(),
        variants,
        runs,
    };
    if let Some(dir) = &config.output {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        emit_csv(&records, &dir.join("trace.csv"))?;
        let path = dir.join("summary.toml");
        std::fs::write(&path, summary.to_toml_string()?).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(ExperimentReport { summary, records })
}
