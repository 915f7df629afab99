use magenta_core::linalg::{dist, AgentMatrix};
use magenta_core::problems::{
    lipschitz_estimates, make_cubic_pair, make_logistic_regression, make_matrix_factorization, make_polynomial_family,
    make_quartic_pair, make_softplus_network, synthetic_logistic_data, synthetic_network_data, Activation,
    PolynomialTerm,
};
use magenta_core::rng::{rng_from_seed, uniform_in_ball};
use magenta_core::ProblemInstance;
use proptest::prelude::*;

fn zoo() -> Vec<ProblemInstance> {
    let logistic = make_logistic_regression(&synthetic_logistic_data(3, 60, 3, 0.1, 7).unwrap(), 1e-3, 1.0).unwrap();
    let net = |act| make_softplus_network(&synthetic_network_data(2, 20, 3, 7).unwrap(), 3, act).unwrap();
    let poly = make_polynomial_family(
        &[
            PolynomialTerm::new(0, vec![4, 0], 1.0),
            PolynomialTerm::new(0, vec![1, 2], -2.0),
            PolynomialTerm::new(1, vec![0, 4], 0.5),
            PolynomialTerm::new(1, vec![2, 1], 3.0),
        ],
        2,
        2,
        4,
    )
    .unwrap();
    vec![
        make_cubic_pair(),
        make_quartic_pair(),
        poly,
        make_matrix_factorization(2, &[1.0, -2.0, 0.5]).unwrap(),
        logistic,
        net(Activation::SoftPlus),
        net(Activation::Relu),
    ]
}

/// Largest ratio `‖∇f(a) − ∇f(b)‖ / ‖a − b‖` over sampled pairs, divided by the bound.
fn worst_ratio(p: &ProblemInstance, center: &[f64], radius: f64, seed: u64, pairs: usize) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for f in p.locals() {
        let bound = f.raw_lipschitz_on_ball(center, radius);
        for _ in 0..pairs {
            let a = uniform_in_ball(&mut rng, center, radius);
            let b = uniform_in_ball(&mut rng, center, radius);
            let ga = f.grad(&a);
            let gb = f.grad(&b);
            let r = dist(&ga, &gb) / dist(&a, &b).max(f64::MIN_POSITIVE);
            if r > 0.0 {
                worst = worst.max(r / bound);
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_lipschitz_never_exceeds_bound(which in 0usize..7, radius in 0.1f64..5.0, seed in any::<u64>(), shift in -3.0f64..3.0) {
        let problems = zoo();
        let p = &problems[which];
        let center = vec![shift; p.dim()];
        let worst = worst_ratio(p, &center, radius, seed, 1000 / p.n_agents());
        prop_assert!(worst <= 1.0 + 1e-9, "{}: ratio {worst}", p.name());
    }

    #[test]
    fn bounds_grow_with_radius(which in 0usize..7, r1 in 0.1f64..5.0, extra in 0.0f64..5.0, shift in -3.0f64..3.0) {
        let problems = zoo();
        let p = &problems[which];
        let center = vec![shift; p.dim()];
        let small = lipschitz_estimates(p, &center, r1).unwrap();
        let large = lipschitz_estimates(p, &center, r1 + extra).unwrap();
        prop_assert!(small.l_hat >= 1.0);
        prop_assert!(small.l_global <= small.l_hat);
        prop_assert!(large.l_hat >= small.l_hat);
        for (a, b) in small.per_agent.iter().zip(&large.per_agent) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn cubic_average_gradient_vanishes(x in -1e4f64..1e4) {
        let p = make_cubic_pair();
        let grads = p.grad_stack(&AgentMatrix::from_rows(&[[x], [x]]).unwrap());
        prop_assert!(grads.mean_row()[0].abs() <= 1e-14 * (1.0 + x * x));
        prop_assert!(p.grad_mean(&[x])[0].abs() <= 1e-14 * (1.0 + x * x));
        prop_assert_eq!(p.eval_mean(&[x]), 0.0);
    }
}

#[test]
fn cubic_local_bound_unbounded_but_average_flat() {
    let p = make_cubic_pair();
    let mut last = 0.0;
    for radius in [1.0, 10.0, 100.0, 1000.0] {
        let est = lipschitz_estimates(&p, &[0.0], radius).unwrap();
        assert!(est.l_hat > last);
        assert_eq!(est.l_global, 1.0);
        last = est.l_hat;
    }
    assert!(last >= 1000.0);
}

#[test]
fn quartic_curvature_matches_closed_form() {
    let p = make_quartic_pair();
    let est = lipschitz_estimates(&p, &[17.0], 2.0).unwrap();
    assert_eq!(est.l_hat, 6.0 * 25.0);
    assert_eq!(p.grad_mean(&[22.0]), vec![2.0 * 8.0]);
    assert_eq!(p.eval_mean(&[20.0]), 0.0);
}
