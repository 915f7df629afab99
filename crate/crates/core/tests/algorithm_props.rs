use magenta_core::algorithms::magenta::{run_magenta, tracking_residual, MagentaParams, MagentaStepsize};
use magenta_core::algorithms::{
    project_ball, run_gradient_tracking, run_prox_pda, FnSink, IterationRecord, RunOptions, TwoPointStart,
};
use magenta_core::graph::{build_mixing_matrix, build_path_graph, incidence_matrix, MixingMatrix};
use magenta_core::linalg::{dist, AgentMatrix};
use magenta_core::problems::{make_cubic_pair, make_logistic_regression, make_quartic_pair, synthetic_logistic_data};
use magenta_core::rng::{rng_from_seed, standard_normal_vec};
use magenta_core::{MixingRule, NetworkState};
use proptest::prelude::*;

fn trajectory<F>(run: F) -> Vec<Vec<f64>>
where
    F: FnOnce(&mut dyn FnMut(&NetworkState)),
{
    let mut out = Vec::new();
    run(&mut |s: &NetworkState| out.push(s.x.as_slice().to_vec()));
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prox_pda_tracks_gradient_tracking(alpha in 0.01f64..1.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let p = make_cubic_pair();
        let g = build_path_graph(2).unwrap();
        let w = build_mixing_matrix(&g, MixingRule::LaplacianShift { delta_factor: 0.0 }).unwrap();
        let inc = incidence_matrix(&g);
        let x0 = AgentMatrix::from_rows(&[[a], [b]]).unwrap();
        let opts = RunOptions::new(20).without_divergence_stop();
        let gt = trajectory(|f| {
            run_gradient_tracking(&p, &w, TwoPointStart::Bootstrap(x0.clone()), alpha, opts, &mut FnSink(|_: &IterationRecord, s: &NetworkState| f(s))).unwrap();
        });
        let pda = trajectory(|f| {
            run_prox_pda(&p, &inc, 1.0 / (2.0 * alpha), 0.0, TwoPointStart::Bootstrap(x0.clone()), opts, &mut FnSink(|_: &IterationRecord, s: &NetworkState| f(s))).unwrap();
        });
        prop_assert_eq!(gt.len(), pda.len());
        for (u, v) in gt.iter().zip(&pda) {
            if u.iter().chain(v).all(|x| x.is_finite()) {
                let diff: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
                // Both recursions amplify rounding along these unstable trajectories.
                let scale = norm(u).max(norm(v)).max(1.0);
                prop_assert!(norm(&diff) <= 1e-9 * scale, "{u:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn projection_properties(x in prop::collection::vec(-100.0f64..100.0, 3), c in prop::collection::vec(-10.0f64..10.0, 3), other in prop::collection::vec(-100.0f64..100.0, 3), r in 0.01f64..50.0) {
        let px = project_ball(&x, &c, r);
        prop_assert!(dist(&px, &c) <= r * (1.0 + 1e-12));
        let again = project_ball(&px, &c, r);
        for (a, b) in again.iter().zip(&px) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        if dist(&x, &c) <= r {
            prop_assert_eq!(&px, &x);
        }
        let po = project_ball(&other, &c, r);
        prop_assert!(dist(&px, &po) <= dist(&x, &other) * (1.0 + 1e-12) + 1e-12);
    }
}

fn logistic_setup(seed: u64) -> (magenta_core::ProblemInstance, MixingMatrix) {
    let p = make_logistic_regression(&synthetic_logistic_data(4, 80, 3, 0.1, seed).unwrap(), 1e-3, 1.0).unwrap();
    let w = build_mixing_matrix(&build_path_graph(4).unwrap(), MixingRule::MetropolisHastings).unwrap();
    (p, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn magenta_stays_feasible_and_tracks(seed in any::<u64>(), d in 0.05f64..3.0, quartic in any::<bool>()) {
        let (p, w, x0) = if quartic {
            let w = build_mixing_matrix(&build_path_graph(2).unwrap(), MixingRule::MetropolisHastings).unwrap();
            let mut rng = rng_from_seed(seed);
            let x0 = AgentMatrix::from_row_major(2, 1, standard_normal_vec(&mut rng, 2).iter().map(|v| 15.0 + 5.0 * v).collect()).unwrap();
            (make_quartic_pair(), w, x0)
        } else {
            let (p, w) = logistic_setup(seed);
            let mut rng = rng_from_seed(seed);
            let x0 = AgentMatrix::from_row_major(4, 3, standard_normal_vec(&mut rng, 12)).unwrap();
            (p, w, x0)
        };
        let center = x0.mean_row();
        let mut params = MagentaParams::new(1e-3, d);
        params.stepsize = MagentaStepsize::InverseSquare { scale: 1.0 };
        params.max_total_iters = Some(3000);
        params.max_stages = 50;
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_track = 0.0f64;
        let mut worst_potential = f64::INFINITY;
        let out = run_magenta(&p, &w, x0, &params, &mut FnSink(|rec: &IterationRecord, s: &NetworkState| {
            let radius = rec.radius.unwrap();
            for row in s.x.row_iter() {
                worst_excess = worst_excess.max(dist(row, &center) - radius);
            }
            let scale = 1.0 + norm(&p.grad_stack(&s.x).mean_row());
            worst_track = worst_track.max(tracking_residual(s, &p).unwrap() / scale);
            if let Some(v) = rec.potential {
                worst_potential = worst_potential.min(v);
            }
        })).unwrap();
        prop_assert!(worst_excess <= 1e-9, "iterate left the ball by {worst_excess}");
        for s in &out.stages {
            prop_assert!(s.max_feasibility_excess <= 1e-9);
        }
        prop_assert!(worst_track <= 1e-10, "tracking residual {worst_track}");
        // Potential is bounded below by the objective's lower bound.
        prop_assert!(worst_potential >= p.lower_bound().unwrap());
    }
}
