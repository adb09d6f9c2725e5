mod common;

use std::sync::Arc;

use common::*;
use nalgebra::{DMatrix, DVector};
use tmest::dual::{
    default_interval, round_length, solve_dual_rca, solve_penalty, solve_projection_fgm, tune_lambda,
};
use tmest::primal::{solve_cg, SolverConfig};
use tmest::problem::{LipschitzSource, ProblemInstance, ProjectionInstance, Regularizer};
use tmest::{linalg, Error, RouteMatrix};

fn cfg(max_iters: usize) -> SolverConfig {
    SolverConfig { max_iters, ..SolverConfig::default() }
}

#[test]
fn projection_identity_recovers_b() {
    let a = Arc::new(RouteMatrix::identity(4).unwrap());
    let b = vec![1.0, 2.0, 3.0, 4.0];
    let proj = ProjectionInstance::ridge(a, b.clone(), vec![2.0, 2.0, 2.0, 2.0]).unwrap();
    let c = SolverConfig { r_tilde_init: 10.0, ..cfg(100_000) };
    let rep = solve_projection_fgm(&proj, 1e-3, 1e-3, &c).unwrap();
    assert_eq!(rep.restarts.len(), 1);
    assert!(*rep.cert_trace.last().unwrap() <= 1e-3);
    assert!(linalg::dist2(&rep.x_final, &b) <= 1e-3);
}

#[test]
fn round_length_formula() {
    assert_eq!(round_length(1.0, 1.0, 0.01, 0.01), 29);
    // the residual term dominates when eps_tilde is small
    assert_eq!(round_length(1.0, 1.0, 1.0, 1e-4), 283);
}

#[test]
fn projection_entropy_matches_newton_oracle() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let a = random_pattern(&mut r, 3, 5, 2);
        let x_true = uniform_vec(&mut r, 5, 0.5, 2.0);
        let b = a.matvec(&x_true).unwrap();
        let prior = uniform_vec(&mut r, 5, 0.5, 2.0);
        let mass: f64 = x_true.iter().sum();
        let oracle = entropy_projection_oracle(&a, &b, &prior, mass);
        let proj = ProjectionInstance::entropy(Arc::new(a), b, prior, mass).unwrap();
        let eps_t = 1e-6;
        let rep = solve_projection_fgm(&proj, 1e-7, eps_t, &cfg(5_000_000)).unwrap();
        let res = rep.residual_trace.last().unwrap();
        assert!(*res <= eps_t);
        for (x, o) in rep.x_final.iter().zip(&oracle) {
            assert!((x - o).abs() <= 1e-4 * o.abs().max(1.0), "seed {seed}: {x} vs {o}");
        }
        // averaged primal stays on the simplex
        let s: f64 = rep.x_final.iter().sum();
        assert!((s - mass).abs() <= 1e-12 * mass);
    }
}

#[test]
fn projection_budget_error_carries_state() {
    let case = ridge_projection(1, 4, 8);
    let c = SolverConfig { max_iters: 10, ..SolverConfig::default() };
    match solve_projection_fgm(&case.proj, 1e-9, 1e-9, &c) {
        Err(Error::ProjectionBudget { iters, best }) => {
            assert_eq!(iters, 10);
            assert_eq!(best.x_final.len(), 8);
        }
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn projection_certificate_decays_quadratically() {
    let case = ridge_projection(2, 10, 25);
    // a fixed large radius keeps everything inside one round of >= 200 iterations
    let c = SolverConfig { r_tilde_init: 1e3, trace_dense_until: 100_000, ..cfg(1_000) };
    let rep = match solve_projection_fgm(&case.proj, 1e-30, 1e-30, &c) {
        Err(Error::ProjectionBudget { best, .. }) => *best,
        other => panic!("unexpected {other:?}"),
    };
    let pts: Vec<(f64, f64)> = rep
        .trace_iters
        .iter()
        .zip(&rep.bound_trace)
        .filter(|(k, _)| (10..=200).contains(*k))
        .map(|(&k, &v)| (k as f64, v))
        .collect();
    assert!(pts.len() >= 150);
    let slope = loglog_slope(&pts);
    assert!(slope <= -1.8, "slope {slope}");
}

#[test]
fn dual_rca_scalar_dual() {
    let a = Arc::new(RouteMatrix::identity(1).unwrap());
    let inst = ProblemInstance::new(a, vec![3.0], Regularizer::ridge(0.5, vec![1.0]).unwrap()).unwrap();
    let rep = solve_dual_rca(&inst, &SolverConfig { epsilon: 1e-9, ..cfg(1) }).unwrap();
    // minimizer of 1/2 (x - 3)^2 + 0.5 (x - 1)^2 is 2
    assert_eq!(rep.iters, 1);
    assert!((rep.x_final[0] - 2.0).abs() < 1e-12);
}

#[test]
fn dual_rca_matches_cg_oracle() {
    for seed in 0..5 {
        let case = interior_ridge(100 + seed, 20, 30, 0.5);
        let cg = solve_cg(&case.inst, &SolverConfig { epsilon: 1e-9, ..cfg(1000) }).unwrap();
        let f_cg = case.inst.objective(&cg.x_final).unwrap();
        let rep = solve_dual_rca(&case.inst, &SolverConfig { epsilon: 1e-6, ..cfg(2_000_000) }).unwrap();
        let f = case.inst.objective(&rep.x_final).unwrap();
        assert!(rel_err(f, f_cg) <= 1e-6, "seed {seed}: {f} vs {f_cg}");
    }
}

#[test]
fn dual_rca_handles_clamped_solutions() {
    let case = clamped_ridge(7, 12, 20, 0.3);
    let rep = solve_dual_rca(&case.inst, &SolverConfig { epsilon: 1e-7, ..cfg(2_000_000) }).unwrap();
    let f = case.inst.objective(&rep.x_final).unwrap();
    assert!(rel_err(f, case.f_star) <= 1e-8, "{f} vs {}", case.f_star);
    assert!(rep.certificate_trace.iter().all(|&g| g >= -1e-9));
}

#[test]
fn dual_rca_rejects_non_ridge() {
    let a = Arc::new(RouteMatrix::identity(2).unwrap());
    let inst = ProblemInstance::new(a.clone(), vec![1.0, 1.0], Regularizer::lasso(0.1).unwrap()).unwrap();
    assert!(matches!(solve_dual_rca(&inst, &cfg(10)), Err(Error::Unsupported { .. })));
    let inst = ProblemInstance::new(a, vec![1.0, 1.0], Regularizer::ridge(0.0, vec![1.0, 1.0]).unwrap()).unwrap();
    assert!(solve_dual_rca(&inst, &cfg(10)).is_err());
}

#[test]
fn penalty_feasible_prior_is_fixed_point() {
    let mut r = rng(9);
    let a = random_pattern(&mut r, 5, 9, 3);
    let prior = uniform_vec(&mut r, 9, 1.0, 2.0);
    let b = a.matvec(&prior).unwrap();
    let proj = ProjectionInstance::ridge(Arc::new(a), b, prior.clone()).unwrap();
    let pts = solve_penalty(&proj, &[10.0, 100.0], &cfg(1000)).unwrap();
    for p in pts {
        assert!(linalg::dist2(&p.x, &prior) <= 1e-12);
        assert!(linalg::norm2(&p.y_est) <= 1e-9);
    }
}

#[test]
fn penalty_rejects_bad_schedules() {
    let case = ridge_projection(3, 3, 6);
    assert!(solve_penalty(&case.proj, &[], &cfg(10)).is_err());
    assert!(solve_penalty(&case.proj, &[10.0, 5.0], &cfg(10)).is_err());
    assert!(solve_penalty(&case.proj, &[0.0, 5.0], &cfg(10)).is_err());
}

#[test]
fn penalty_error_scales_like_one_over_k() {
    let case = ridge_projection(4, 4, 10);
    let ks = [10.0, 20.0, 40.0, 80.0, 160.0];
    let c = SolverConfig { epsilon: 1e-8, ..cfg(2_000_000) };
    let pts = solve_penalty(&case.proj, &ks, &c).unwrap();
    let errs: Vec<f64> = pts.iter().map(|p| linalg::dist2(&p.x, &case.x_star)).collect();
    let inv: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
    let slope = linalg::dot(&inv, &errs) / linalg::dot(&inv, &inv);
    let ss_res: f64 = inv.iter().zip(&errs).map(|(t, e)| (e - slope * t).powi(2)).sum();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let ss_tot: f64 = errs.iter().map(|e| (e - mean).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    assert!(r2 >= 0.95, "R^2 = {r2}, errs {errs:?}");
    let y_est = &pts.last().unwrap().y_est;
    let rel = linalg::dist2(y_est, &case.y_star) / linalg::norm2(&case.y_star);
    assert!(rel <= 0.1, "{rel}");
}

#[test]
fn tune_lambda_inactive_constraint_goes_to_lower_end() {
    let case = ridge_projection(5, 4, 10);
    let gap = linalg::dist2(&case.proj.a.matvec(case.proj.prior()).unwrap(), &case.proj.b);
    let eps = 2.0 * gap + 1.0;
    let (lo, hi) = (1e-2, 1e2);
    let res = tune_lambda(&case.proj, eps, (lo, hi), &SolverConfig { epsilon: 1e-5, ..cfg(100_000) }).unwrap();
    assert!(res.at_boundary);
    assert!(res.lambda_bar <= lo * (1.0 + 1e-2), "{}", res.lambda_bar);
}

#[test]
fn tune_lambda_bracket_shrinks_by_golden_ratio() {
    let case = ridge_projection(6, 4, 10);
    let res = tune_lambda(&case.proj, 0.05, (1e-2, 1e4), &SolverConfig { epsilon: 1e-5, ..cfg(100_000) }).unwrap();
    for w in res.brackets.windows(2) {
        let before = (w[0].1 / w[0].0).ln();
        let after = (w[1].1 / w[1].0).ln();
        assert!((after / before - 0.618).abs() < 1e-3, "{}", after / before);
    }
}

#[test]
fn tune_lambda_complementarity() {
    let case = ridge_projection(7, 4, 10);
    let r0 = linalg::dist2(&case.proj.a.matvec(case.proj.prior()).unwrap(), &case.proj.b);
    let eps = 0.3 * r0;
    let c = SolverConfig { epsilon: 1e-6, ..cfg(1_000_000) };
    let res = tune_lambda(&case.proj, eps, default_interval(eps), &c).unwrap();
    assert!(!res.at_boundary);
    let r = linalg::dist2(&case.proj.a.matvec(&res.x).unwrap(), &case.proj.b);
    let slack = (r * r - eps * eps) / (eps * eps);
    assert!(slack.abs() <= 0.05, "slack {slack}");
    // grid check: psi at the returned point is at least psi on a grid around it
    let psi = |lb: f64| {
        let reg = Regularizer::ridge(1.0 / lb, case.proj.prior().to_vec()).unwrap();
        let inst = ProblemInstance::new(case.proj.a.clone(), case.proj.b.clone(), reg).unwrap();
        let x = ridge_nonneg_oracle(&inst.a, &inst.b, 1.0 / lb, case.proj.prior());
        lb * (inst.objective(&x).unwrap() - 0.5 * eps * eps)
    };
    let best = psi(res.lambda_bar);
    for f in [0.5, 0.8, 0.95, 1.05, 1.25, 2.0] {
        assert!(psi(res.lambda_bar * f) <= best + 1e-6 * best.abs());
    }
}

#[test]
fn dual_lipschitz_bounds_gradient_differences() {
    let mut r = rng(17);
    for trial in 0..20 {
        let a = random_pattern(&mut r, 6, 10, 3);
        let prior = uniform_vec(&mut r, 10, 0.5, 2.0);
        let b = uniform_vec(&mut r, 6, 1.0, 4.0);
        let mass: f64 = prior.iter().sum();
        let a = Arc::new(a);
        let projs = [
            ProjectionInstance::ridge(a.clone(), b.clone(), prior.clone()).unwrap(),
            ProjectionInstance::entropy(a.clone(), b.clone(), prior.clone(), mass).unwrap(),
        ];
        for proj in &projs {
            let l = proj.dual_lipschitz(LipschitzSource::PowerEstimate);
            let y1 = uniform_vec(&mut r, 6, -2.0, 2.0);
            let y2 = uniform_vec(&mut r, 6, -2.0, 2.0);
            let g1 = proj.dual_oracle(&y1).unwrap().grad;
            let g2 = proj.dual_oracle(&y2).unwrap().grad;
            let ratio = linalg::dist2(&g1, &g2) / linalg::dist2(&y1, &y2);
            assert!(ratio <= l * (1.0 + 1e-9), "trial {trial}: {ratio} > {l}");
        }
    }
}

#[test]
fn dense_oracle_consistency() {
    // the helper itself: x* satisfies A x* = b
    let case = ridge_projection(8, 5, 12);
    let d = dense(&case.proj.a);
    let ax = &d * DVector::from_column_slice(&case.x_star);
    for (u, v) in ax.iter().zip(&case.proj.b) {
        assert!((u - v).abs() < 1e-9);
    }
    let _ = DMatrix::<f64>::identity(1, 1);
}
