use std::collections::BTreeMap;
use std::sync::Arc;

use super::{LocalObjective, ProblemError, ProblemInstance};

/// One coefficient `σ_{i,w}` of agent `i`'s polynomial, multiplying `Π_k x_k^{w_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTerm {
    pub agent: usize,
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl PolynomialTerm {
    pub fn new(agent: usize, exponents: Vec<u32>, coeff: f64) -> Self {
        Self {
            agent,
            exponents,
            coeff,
        }
    }
}

/// A multivariate polynomial with like terms merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

fn powu(x: f64, e: u32) -> f64 {
    x.powi(e as i32)
}

impl Polynomial {
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in terms {
            debug_assert_eq!(exps.len(), dim);
            *merged.entry(exps).or_insert(0.0) += c;
        }
        Polynomial {
            dim,
            terms: merged.into_iter().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    /// Entry-wise bound on `|∂²p/∂x_k∂x_l|` over the box `|x_m| ≤ |c_m| + v`,
    /// collapsed to a Frobenius norm.
    fn hessian_bound(&self, center: &[f64], radius: f64) -> f64 {
        let mags: Vec<f64> = center.iter().map(|c| c.abs() + radius).collect();
        let k = self.dim;
        let mut h = vec![0.0; k * k];
        for (exps, c) in &self.terms {
            for a in 0..k {
                for b in a..k {
                    let (ea, eb) = (exps[a], exps[b]);
                    let factor = if a == b {
                        if ea < 2 {
                            continue;
                        }
                        (ea * (ea - 1)) as f64
                    } else {
                        if ea == 0 || eb == 0 {
                            continue;
                        }
                        (ea * eb) as f64
                    };
                    let mono: f64 = (0..k)
                        .map(|m| {
                            let mut e = exps[m];
                            if m == a {
                                e -= 1;
                            }
                            if m == b {
                                e -= 1;
                            }
                            powu(mags[m], e)
                        })
                        .product();
                    let entry = c.abs() * factor * mono;
                    h[a * k + b] += entry;
                    if a != b {
                        h[b * k + a] += entry;
                    }
                }
            }
        }
        h.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl LocalObjective for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, c)| c * exps.iter().zip(x).map(|(&e, &xi)| powu(xi, e)).product::<f64>())
            .sum()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for (exps, c) in &self.terms {
            for (k, &ek) in exps.iter().enumerate() {
                if ek == 0 {
                    continue;
                }
                let rest: f64 = exps
                    .iter()
                    .enumerate()
                    .map(|(m, &e)| if m == k { powu(x[m], e - 1) } else { powu(x[m], e) })
                    .product();
                out[k] += c * ek as f64 * rest;
            }
        }
    }

    fn raw_lipschitz_on_ball(&self, center: &[f64], radius: f64) -> f64 {
        self.hessian_bound(center, radius)
    }
}

/// Builds `f_i(x) = Σ_w σ_{i,w} Π_k x_k^{w_k}` for every agent.
pub fn make_polynomial_family(
    terms: &[PolynomialTerm],
    n_agents: usize,
    dim: usize,
    order: i64,
) -> Result<ProblemInstance, ProblemError> {
    if n_agents == 0 {
        return Err(ProblemError::NoAgents);
    }
    if order < 2 {
        return Err(ProblemError::InvalidOrder(order));
    }
    let mut per_agent: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); n_agents];
    for t in terms {
        if t.agent >= n_agents {
            return Err(ProblemError::AgentOutOfRange {
                agent: t.agent,
                n_agents,
            });
        }
        if t.exponents.len() != dim {
            return Err(ProblemError::DimMismatch {
                agent: t.agent,
                expected: dim,
                got: t.exponents.len(),
            });
        }
        let degree: u32 = t.exponents.iter().sum();
        if i64::from(degree) > order {
            return Err(ProblemError::DegreeTooHigh {
                agent: t.agent,
                degree,
                order,
            });
        }
        per_agent[t.agent].push((t.exponents.clone(), t.coeff));
    }
    let n = n_agents as f64;
    let average = Polynomial::from_terms(dim, per_agent.iter().flatten().map(|(e, c)| (e.clone(), c / n)));
    let locals: Vec<Arc<dyn LocalObjective>> = per_agent
        .into_iter()
        .map(|ts| Arc::new(Polynomial::from_terms(dim, ts)) as Arc<dyn LocalObjective>)
        .collect();
    Ok(ProblemInstance::new(format!("polynomial_q{order}"), locals)?
        .with_average_curvature(Arc::new(move |c, v| average.raw_lipschitz_on_ball(c, v))))
}

/// `f_i(u, w_i) = (uᵀw_i − obs_i)²` over the stacked variable `[u; w_1; …; w_N]`,
/// each block of length `rank`.
pub fn make_matrix_factorization(rank: usize, observations: &[f64]) -> Result<ProblemInstance, ProblemError> {
    if rank == 0 {
        return Err(ProblemError::InvalidParameter("rank must be positive".into()));
    }
    let n = observations.len();
    let dim = rank * (n + 1);
    let mut terms = Vec::new();
    for (i, &obs) in observations.iter().enumerate() {
        let w_off = rank * (i + 1);
        for a in 0..rank {
            for b in 0..rank {
                let mut e = vec![0u32; dim];
                e[a] += 1;
                e[b] += 1;
                e[w_off + a] += 1;
                e[w_off + b] += 1;
                terms.push(PolynomialTerm::new(i, e, 1.0));
            }
            let mut e = vec![0u32; dim];
            e[a] = 1;
            e[w_off + a] = 1;
            terms.push(PolynomialTerm::new(i, e, -2.0 * obs));
        }
        terms.push(PolynomialTerm::new(i, vec![0; dim], obs * obs));
    }
    Ok(make_polynomial_family(&terms, n, dim, 4)?.with_lower_bound(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(
            make_polynomial_family(&[], 1, 1, -2).unwrap_err(),
            ProblemError::InvalidOrder(-2)
        );
        let t = PolynomialTerm::new(0, vec![3], 1.0);
        assert!(matches!(
            make_polynomial_family(std::slice::from_ref(&t), 1, 1, 2),
            Err(ProblemError::DegreeTooHigh { .. })
        ));
        assert!(matches!(
            make_polynomial_family(&[t], 1, 2, 3),
            Err(ProblemError::DimMismatch { .. })
        ));
    }

    #[test]
    fn lemma_example_average_curvature() {
        // u², u³, −u³
        let terms = [
            PolynomialTerm::new(0, vec![2], 1.0),
            PolynomialTerm::new(1, vec![3], 1.0),
            PolynomialTerm::new(2, vec![3], -1.0),
        ];
        let p = make_polynomial_family(&terms, 3, 1, 3).unwrap();
        for u in [-3.0, 0.5, 7.0] {
            assert!((p.eval_mean(&[u]) - u * u / 3.0).abs() < 1e-12);
        }
        assert!((p.average_curvature(&[0.0], 1e6).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(p.locals()[1].lipschitz_on_ball(&[0.0], 1e6) >= 6e6);
    }

    #[test]
    fn matrix_factorization_matches_direct_formula() {
        let obs = [1.5, -0.5, 2.0];
        let p = make_matrix_factorization(2, &obs).unwrap();
        assert_eq!(p.dim(), 8);
        let x = [0.3, -1.2, 0.7, 0.1, -0.4, 2.0, 1.1, 0.9];
        for (i, &o) in obs.iter().enumerate() {
            let w = &x[2 * (i + 1)..2 * (i + 2)];
            let direct = (x[0] * w[0] + x[1] * w[1] - o).powi(2);
            assert!((p.locals()[i].eval(&x) - direct).abs() < 1e-12);
        }
    }
}
