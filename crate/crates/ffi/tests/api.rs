use std::ffi::{CStr, CString};
use std::ptr;

use magenta_ffi::*;

fn last_error() -> String {
    let p = magenta_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn graph_and_mixing_round_trip() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(magenta_graph_path(3, &mut g), MagentaStatus::Ok);
        let (mut n, mut e) = (0usize, 0usize);
        assert_eq!(magenta_graph_size(g, &mut n, &mut e), MagentaStatus::Ok);
        assert_eq!((n, e), (3, 2));

        let mut w = ptr::null_mut();
        assert_eq!(
            magenta_mixing_new(g, MagentaMixingRule::MetropolisHastings, 0.0, &mut w),
            MagentaStatus::Ok
        );
        let mut buf = [0.0; 9];
        assert_eq!(magenta_mixing_entries(w, buf.as_mut_ptr(), 9), MagentaStatus::Ok);
        for i in 0..3 {
            assert!((buf[3 * i..3 * i + 3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..3 {
                assert_eq!(buf[3 * i + j], buf[3 * j + i]);
            }
        }
        assert_eq!(buf[2], 0.0);
        let (mut eta, mut dev) = (0.0, 0.0);
        assert_eq!(magenta_mixing_spectrum(w, &mut eta, &mut dev), MagentaStatus::Ok);
        assert!(eta < 1.0 && dev < 1.0);
        assert_eq!(
            magenta_mixing_entries(w, buf.as_mut_ptr(), 4),
            MagentaStatus::InvalidArgument
        );

        magenta_mixing_free(w);
        magenta_graph_free(g);
        magenta_graph_free(ptr::null_mut());
    }
}

#[test]
fn edge_list_errors_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        let edges = [0usize, 1, 2, 3];
        assert_eq!(
            magenta_graph_from_edges(4, edges.as_ptr(), 2, &mut g),
            MagentaStatus::Graph
        );
        assert!(g.is_null());
        assert!(last_error().contains("not connected"));
        let edges = [0usize, 1, 1, 2, 2, 3];
        assert_eq!(
            magenta_graph_from_edges(4, edges.as_ptr(), 3, &mut g),
            MagentaStatus::Ok
        );
        magenta_graph_free(g);

        assert_eq!(magenta_graph_random_geometric(5, 1.5, 0, &mut g), MagentaStatus::Graph);
        assert_eq!(magenta_graph_path(3, ptr::null_mut()), MagentaStatus::NullPointer);
        assert!(last_error().contains("out"));
    }
}

#[test]
fn counter_example_diverges_through_the_interface() {
    unsafe {
        let (mut g, mut w, mut p, mut run) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(magenta_graph_path(2, &mut g), MagentaStatus::Ok);
        assert_eq!(
            magenta_mixing_new(g, MagentaMixingRule::LaplacianShift, 0.0, &mut w),
            MagentaStatus::Ok
        );
        assert_eq!(magenta_problem_cubic_pair(&mut p), MagentaStatus::Ok);

        let x0 = [10.0, 10.0];
        assert_eq!(
            magenta_run_gradient_tracking(p, w, x0.as_ptr(), 2, 0.1, 1000, &mut run),
            MagentaStatus::Ok
        );
        let mut info = std::mem::zeroed::<MagentaRunInfo>();
        assert_eq!(magenta_run_info(run, &mut info), MagentaStatus::Ok);
        assert_eq!(info.run_class, MagentaRunClass::Diverged);
        assert_eq!(info.termination, MagentaTermination::Diverged);
        assert_eq!((info.n_agents, info.dim, info.stages), (2, 1, 0));
        magenta_run_free(run);

        assert_eq!(
            magenta_run_prox_pda(p, g, x0.as_ptr(), 2, 5.0, 0.0, 1000, &mut run),
            MagentaStatus::Ok
        );
        assert_eq!(magenta_run_info(run, &mut info), MagentaStatus::Ok);
        assert_eq!(info.run_class, MagentaRunClass::Diverged);
        magenta_run_free(run);

        assert_eq!(
            magenta_run_dgd(p, w, x0.as_ptr(), 1, 0.01, false, 10, &mut run),
            MagentaStatus::InvalidArgument
        );
        assert!(last_error().contains("expected 2x1"));

        magenta_problem_free(p);
        magenta_mixing_free(w);
        magenta_graph_free(g);
    }
}

#[test]
fn multi_stage_run_reaches_the_minimizer() {
    unsafe {
        let (mut g, mut w, mut p, mut run) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(magenta_graph_path(2, &mut g), MagentaStatus::Ok);
        assert_eq!(
            magenta_mixing_new(g, MagentaMixingRule::MetropolisHastings, 0.0, &mut w),
            MagentaStatus::Ok
        );
        assert_eq!(magenta_problem_quartic_pair(&mut p), MagentaStatus::Ok);
        let mut opts = magenta_options_default(1e-2, 1.0);
        opts.step_rule = MagentaStepRule::InverseSquare;
        opts.step_param = 100.0;
        opts.max_stages = 50;
        let x0 = [18.0, 18.5];
        assert_eq!(
            magenta_run_magenta(p, w, x0.as_ptr(), 2, &opts, &mut run),
            MagentaStatus::Ok
        );
        let mut info = std::mem::zeroed::<MagentaRunInfo>();
        assert_eq!(magenta_run_info(run, &mut info), MagentaStatus::Ok);
        assert_eq!(info.termination, MagentaTermination::Converged);
        assert!(info.stages >= 1 && info.iterations > 0);
        let mut x = [0.0; 2];
        assert_eq!(magenta_run_final_iterate(run, x.as_mut_ptr(), 2), MagentaStatus::Ok);
        assert!(x.iter().all(|v| (v - 20.0).abs() < 1.0), "{x:?}");

        let (mut value, mut grad) = (0.0, [0.0]);
        assert_eq!(
            magenta_problem_eval(p, [22.0].as_ptr(), 1, &mut value, grad.as_mut_ptr()),
            MagentaStatus::Ok
        );
        assert_eq!((value, grad[0]), (8.0, 16.0));

        opts.epsilon = -1.0;
        let mut bad = ptr::null_mut();
        assert_eq!(
            magenta_run_magenta(p, w, x0.as_ptr(), 2, &opts, &mut bad),
            MagentaStatus::Algorithm
        );
        assert!(bad.is_null());

        magenta_run_free(run);
        magenta_problem_free(p);
        magenta_mixing_free(w);
        magenta_graph_free(g);
    }
}

#[test]
fn logistic_problem_shape() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            magenta_problem_logistic(4, 100, 3, 1e-3, 1.0, 0.1, 7, &mut p),
            MagentaStatus::Ok
        );
        let (mut n, mut d) = (0, 0);
        assert_eq!(magenta_problem_shape(p, &mut n, &mut d), MagentaStatus::Ok);
        assert_eq!((n, d), (4, 3));
        magenta_problem_free(p);
        assert_eq!(
            magenta_problem_logistic(0, 100, 3, 1e-3, 1.0, 0.1, 7, &mut p),
            MagentaStatus::Problem
        );
    }
}

const CONFIG: &str = r#"
name = "ffi"
runs = 2
budget = { max_iters = 100 }
problem = { kind = "quartic_pair" }
graph = { topology = { kind = "path" } }
init = { distribution = { kind = "normal", mean = 20.0, std = 1.0 }, seed = 1 }

[[algorithms]]
kind = "dgd"
step = { rule = "constant", alpha = 0.001 }
"#;

#[test]
fn experiment_from_toml() {
    unsafe {
        let cfg = CString::new(CONFIG).unwrap();
        let mut e = ptr::null_mut();
        assert_eq!(magenta_experiment_run(cfg.as_ptr(), &mut e), MagentaStatus::Ok);
        let mut n = 0;
        assert_eq!(magenta_experiment_n_records(e, &mut n), MagentaStatus::Ok);
        assert_eq!(n, 2 * 101);
        let mut pct = -1.0;
        let label = CString::new("dgd").unwrap();
        assert_eq!(
            magenta_experiment_convergence_pct(e, label.as_ptr(), &mut pct),
            MagentaStatus::Ok
        );
        assert!((0.0..=100.0).contains(&pct));
        let missing = CString::new("gt").unwrap();
        assert_eq!(
            magenta_experiment_convergence_pct(e, missing.as_ptr(), &mut pct),
            MagentaStatus::InvalidArgument
        );

        let mut s = ptr::null_mut();
        assert_eq!(magenta_experiment_summary_toml(e, &mut s), MagentaStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("name = \"ffi\""));
        magenta_string_free(s);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
        assert_eq!(magenta_experiment_write_csv(e, path.as_ptr()), MagentaStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text.lines().count(), 2 * 101 + 1);
        let bad = CString::new("/nonexistent/dir/t.csv").unwrap();
        assert_eq!(magenta_experiment_write_csv(e, bad.as_ptr()), MagentaStatus::Io);
        magenta_experiment_free(e);

        let broken = CString::new("name = 3").unwrap();
        assert_eq!(magenta_experiment_run(broken.as_ptr(), &mut e), MagentaStatus::Config);
        assert_eq!(magenta_experiment_run(ptr::null(), &mut e), MagentaStatus::NullPointer);
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        assert_eq!(magenta_graph_path(0, &mut ptr::null_mut()), MagentaStatus::Graph);
    }
    let main_msg = last_error();
    std::thread::spawn(|| assert!(magenta_last_error().is_null()))
        .join()
        .unwrap();
    assert_eq!(last_error(), main_msg);
}

#[test]
fn version_is_static_text() {
    let v = unsafe { CStr::from_ptr(magenta_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
