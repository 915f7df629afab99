use std::sync::Arc;

use super::{LocalObjective, ProblemInstance};

/// `sign · x³/3` on one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicTerm {
    sign: f64,
}

impl CubicTerm {
    pub fn new(sign: f64) -> Self {
        Self { sign }
    }
}

impl LocalObjective for CubicTerm {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.sign * x[0].powi(3) / 3.0
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.sign * x[0] * x[0];
    }

    fn raw_lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64 {
        2.0 * (center[0].abs() + radius)
    }
}

/// `½(x − m)⁴` on one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticWell {
    minimizer: f64,
}

impl QuarticWell {
    pub fn new(minimizer: f64) -> Self {
        Self { minimizer }
    }
}

impl LocalObjective for QuarticWell {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        0.5 * (x[0] - self.minimizer).powi(4)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 2.0 * (x[0] - self.minimizer).powi(3);
    }

    fn raw_lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64 {
        6.0 * ((center[0] - self.minimizer).abs() + radius).powi(2)
    }
}

/// `f₁ = x³/3`, `f₂ = −x³/3`: the average is identically zero but neither
/// local gradient is globally Lipschitz.
pub fn make_cubic_pair() -> ProblemInstance {
    ProblemInstance::new(
        "cubic_pair",
        vec![Arc::new(CubicTerm::new(1.0)), Arc::new(CubicTerm::new(-1.0))],
    )
    .expect("two one-dimensional agents")
    .with_average_curvature(Arc::new(|_, _| 0.0))
    .with_lower_bound(0.0)
}

/// `f₁ = f₂ = ½(x − 20)⁴`, so `f(u) = ½(u − 20)⁴` with minimizer 20.
pub fn make_quartic_pair() -> ProblemInstance {
    let well = QuarticWell::new(20.0);
    ProblemInstance::new("quartic_pair", vec![Arc::new(well), Arc::new(well)])
        .expect("two one-dimensional agents")
        .with_average_curvature(Arc::new(move |c, v| well.raw_lipschitz_on_ball(c, v)))
        .with_lower_bound(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        let p = make_cubic_pair();
        assert_eq!(p.locals()[0].eval(&[2.0]), 8.0 / 3.0);
        assert_eq!(p.locals()[0].grad(&[2.0]), vec![4.0]);
        assert_eq!(p.locals()[0].lipschitz_on_ball(&[0.0], 10.0), 20.0);
        assert_eq!(p.eval_mean(&[3.7]), 0.0);
    }

    #[test]
    fn quartic_values() {
        let p = make_quartic_pair();
        assert_eq!(p.locals()[0].grad(&[21.0]), vec![2.0]);
        assert_eq!(p.eval_mean(&[20.0]), 0.0);
        assert_eq!(p.grad_mean(&[20.0]), vec![0.0]);
        assert_eq!(p.locals()[1].lipschitz_on_ball(&[0.0], 25.0), 12150.0);
        assert_eq!(p.locals()[0].lipschitz_on_ball(&[20.0], 0.1), 1.0);
    }
}
