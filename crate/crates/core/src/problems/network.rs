use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{LocalObjective, ProblemError, ProblemInstance, RegressionPoint};
use crate::linalg::dist;
use crate::rng::{derive_seed, rng_from_seed, uniform_in_ball, SeedPurpose};

const SAMPLED_PAIRS: usize = 2000;
const SAFETY_FACTOR: f64 = 2.0;
/// Smallest dyadic radius level sampled.
const MIN_LEVEL: i32 = -2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    SoftPlus,
    Relu,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::SoftPlus => {
                if a > 0.0 {
                    a + (-a).exp().ln_1p()
                } else {
                    a.exp().ln_1p()
                }
            }
            Activation::Relu => a.max(0.0),
        }
    }

    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::SoftPlus => 1.0 / (1.0 + (-a).exp()),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Squared loss of a one-hidden-layer network `W₂ φ(W₁ z)`.
///
/// Parameters are stacked as `W₁` (hidden × input, row-major) followed by `W₂`.
/// The curvature bound is sampled: for a ball of radius `v` the estimate is the
/// largest gradient-difference ratio seen over 2000 random pairs in each dyadic
/// ball `B(c, 2^j)`, `j ≤ ⌈log₂ v⌉`, times 2. Per-level samples are cached so
/// the estimate is monotone in `v`.
#[derive(Debug)]
pub struct NetworkObjective {
    input_dim: usize,
    hidden: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    activation: Activation,
    level_cache: Mutex<HashMap<(Vec<u64>, i32), f64>>,
}

impl NetworkObjective {
    pub fn new(data: &[RegressionPoint], hidden: usize, activation: Activation) -> Result<Self, ProblemError> {
        if hidden == 0 {
            return Err(ProblemError::InvalidParameter("hidden width must be positive".into()));
        }
        let first = data.first().ok_or(ProblemError::EmptyData(0))?;
        let input_dim = first.input.len();
        if let Some(p) = data.iter().find(|p| p.input.len() != input_dim) {
            return Err(ProblemError::DimMismatch {
                agent: 0,
                expected: input_dim,
                got: p.input.len(),
            });
        }
        Ok(Self {
            input_dim,
            hidden,
            inputs: data.iter().flat_map(|p| p.input.iter().copied()).collect(),
            targets: data.iter().map(|p| p.target).collect(),
            activation,
            level_cache: Mutex::new(HashMap::new()),
        })
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.hidden * self.input_dim)
    }

    fn samples(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs
            .chunks_exact(self.input_dim)
            .zip(self.targets.iter().copied())
    }

    fn level_estimate(&self, center: &[f64], level: i32) -> f64 {
        let key = (center.iter().map(|c| c.to_bits()).collect::<Vec<_>>(), level);
        if let Some(&v) = self.level_cache.lock().expect("cache lock").get(&key) {
            return v;
        }
        let radius = 2f64.powi(level);
        let mut rng = rng_from_seed(derive_seed(level as u64, SeedPurpose::Lipschitz, 0));
        let k = self.dim();
        let (mut ga, mut gb) = (vec![0.0; k], vec![0.0; k]);
        let mut best = 0.0_f64;
        for _ in 0..SAMPLED_PAIRS {
            let a = uniform_in_ball(&mut rng, center, radius);
            let b = uniform_in_ball(&mut rng, center, radius);
            let d = dist(&a, &b);
            if d == 0.0 {
                continue;
            }
            self.grad_into(&a, &mut ga);
            self.grad_into(&b, &mut gb);
            best = best.max(dist(&ga, &gb) / d);
        }
        let est = SAFETY_FACTOR * best;
        self.level_cache.lock().expect("cache lock").insert(key, est);
        est
    }
}

impl LocalObjective for NetworkObjective {
    fn dim(&self) -> usize {
        self.hidden * (self.input_dim + 1)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let (w1, w2) = self.split(x);
        let total: f64 = self
            .samples()
            .map(|(z, v)| {
                let pred: f64 = w1
                    .chunks_exact(self.input_dim)
                    .zip(w2)
                    .map(|(row, w)| w * self.activation.apply(crate::linalg::dot(row, z)))
                    .sum();
                (pred - v).powi(2)
            })
            .sum();
        total / self.targets.len() as f64
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let (w1, w2) = self.split(x);
        let n = self.targets.len() as f64;
        out.iter_mut().for_each(|g| *g = 0.0);
        let (g1, g2) = out.split_at_mut(self.hidden * self.input_dim);
        let mut pre = vec![0.0; self.hidden];
        for (z, v) in self.samples() {
            for (p, row) in pre.iter_mut().zip(w1.chunks_exact(self.input_dim)) {
                *p = crate::linalg::dot(row, z);
            }
            let pred: f64 = pre.iter().zip(w2).map(|(a, w)| w * self.activation.apply(*a)).sum();
            let r = 2.0 * (pred - v) / n;
            for (h, &a) in pre.iter().enumerate() {
                g2[h] += r * self.activation.apply(a);
                let s = r * w2[h] * self.activation.derivative(a);
                if s != 0.0 {
                    for (g, zk) in g1[h * self.input_dim..(h + 1) * self.input_dim].iter_mut().zip(z) {
                        *g += s * zk;
                    }
                }
            }
        }
    }

    fn raw_lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64 {
        let top = radius.log2().ceil().max(MIN_LEVEL as f64) as i32;
        (MIN_LEVEL..=top)
            .map(|j| self.level_estimate(center, j))
            .fold(0.0, f64::max)
    }
}

/// One [`NetworkObjective`] per agent's shard.
pub fn make_softplus_network(
    data: &[Vec<RegressionPoint>],
    hidden: usize,
    activation: Activation,
) -> Result<ProblemInstance, ProblemError> {
    let locals = data
        .iter()
        .enumerate()
        .map(|(i, pts)| {
            NetworkObjective::new(pts, hidden, activation)
                .map(|o| Arc::new(o) as Arc<dyn LocalObjective>)
                .map_err(|e| match e {
                    ProblemError::EmptyData(_) => ProblemError::EmptyData(i),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProblemInstance::new("network", locals)?.with_lower_bound(0.0))
}
