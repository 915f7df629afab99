use std::sync::Arc;

use super::{LabeledPoint, LocalObjective, ProblemError, ProblemInstance};
use crate::linalg::{dot, norm_sq};

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss plus the bounded penalty `λ Σ_s ρθ_s²/(1 + ρθ_s²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticObjective {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    lambda: f64,
    rho: f64,
    curvature: f64,
}

impl LogisticObjective {
    pub fn new(points: &[LabeledPoint], lambda: f64, rho: f64) -> Result<Self, ProblemError> {
        let first = points.first().ok_or(ProblemError::EmptyData(0))?;
        let dim = first.features.len();
        if let Some(p) = points.iter().find(|p| p.features.len() != dim) {
            return Err(ProblemError::DimMismatch {
                agent: 0,
                expected: dim,
                got: p.features.len(),
            });
        }
        if !(lambda >= 0.0 && rho >= 0.0) {
            return Err(ProblemError::InvalidParameter(format!(
                "lambda and rho must be >= 0, got {lambda} and {rho}"
            )));
        }
        let m = points.len() as f64;
        let curvature = points.iter().map(|p| norm_sq(&p.features)).sum::<f64>() / (4.0 * m) + 2.0 * lambda * rho;
        Ok(Self {
            dim,
            features: points.iter().flat_map(|p| p.features.iter().copied()).collect(),
            labels: points.iter().map(|p| p.label).collect(),
            lambda,
            rho,
            curvature,
        })
    }

    fn samples(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// The radius-independent curvature bound, unclamped.
    pub fn curvature_bound(&self) -> f64 {
        self.curvature
    }
}

impl LocalObjective for LogisticObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        let m = self.labels.len() as f64;
        let loss: f64 = self.samples().map(|(a, b)| softplus(-b * dot(theta, a))).sum::<f64>() / m;
        let reg: f64 = theta.iter().map(|t| self.rho * t * t / (1.0 + self.rho * t * t)).sum();
        loss + self.lambda * reg
    }

    fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        let m = self.labels.len() as f64;
        out.iter_mut().for_each(|g| *g = 0.0);
        for (a, b) in self.samples() {
            let s = -b * sigmoid(-b * dot(theta, a)) / m;
            out.iter_mut().zip(a).for_each(|(g, ak)| *g += s * ak);
        }
        for (g, t) in out.iter_mut().zip(theta) {
            let den = 1.0 + self.rho * t * t;
            *g += self.lambda * 2.0 * self.rho * t / (den * den);
        }
    }

    fn raw_lipschitz_on_ball(&self, _center: &[f64], _radius: f64) -> f64 {
        self.curvature
    }
}

/// One [`LogisticObjective`] per agent's data shard.
pub fn make_logistic_regression(
    data: &[Vec<LabeledPoint>],
    lambda: f64,
    rho: f64,
) -> Result<ProblemInstance, ProblemError> {
    let objectives = data
        .iter()
        .enumerate()
        .map(|(i, pts)| {
            LogisticObjective::new(pts, lambda, rho).map_err(|e| match e {
                ProblemError::EmptyData(_) => ProblemError::EmptyData(i),
                ProblemError::DimMismatch { expected, got, .. } => ProblemError::DimMismatch {
                    agent: i,
                    expected,
                    got,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean_curvature =
        objectives.iter().map(LogisticObjective::curvature_bound).sum::<f64>() / objectives.len().max(1) as f64;
    let locals = objectives
        .into_iter()
        .map(|o| Arc::new(o) as Arc<dyn LocalObjective>)
        .collect();
    Ok(ProblemInstance::new("logistic", locals)?
        .with_average_curvature(Arc::new(move |_, _| mean_curvature))
        .with_lower_bound(0.0))
}
