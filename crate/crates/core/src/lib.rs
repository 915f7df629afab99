//! Simulation of decentralized first-order methods for smooth non-convex
//! objectives whose gradients are only locally Lipschitz.
//!
//! A network of `N` agents, each holding a private objective `f_i`, tries to
//! reach a stationary point of the average `f = (1/N) Σ f_i` while talking only
//! to graph neighbours. The crate provides:
//!
//! * [`graph`]: communication graphs, incidence matrices, mixing matrices and
//!   max-consensus.
//! * [`problems`]: local objectives with ball-restricted Lipschitz bounds.
//! * [`algorithms`]: DGD, gradient tracking, Prox-PDA and the multi-stage
//!   projected gradient-tracking method ([`algorithms::magenta`]).
//! * [`metrics`]: stationarity gaps, the descent potential and run
//!   classification.
//! * [`harness`]: experiment configuration, presets, seeding and CSV traces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod rng;

pub use algorithms::{NetworkState, Termination};
pub use graph::{Graph, MixingMatrix, MixingRule};
pub use problems::{LocalObjective, ProblemInstance};
