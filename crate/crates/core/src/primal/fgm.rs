//! Composite fast gradient method in the similar-triangles form.
//!
//! Three sequences are kept: the prox sequence `u`, the output sequence `x~`
//! and the gradient points `y = (A_k x~ + a u) / A_{k+1}`. Products `A u` and
//! `A x~` are carried along, so an iteration costs one `matvec` and one
//! `rmatvec`. Ridge and lasso use the Euclidean prox; entropy uses the KL prox
//! (scaled by the simplex mass, which makes it 1-strongly convex in l1) and
//! keeps `u` in log space.

use std::time::Instant;

use super::{SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{conjugate_g, LipschitzSource, ProblemInstance, RegKind, Regularizer};

/// How a run certifies `f(x) - f*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Certificate {
    /// Strong-convexity gap with the given Euclidean modulus.
    StrongConvexity(f64),
    /// Fenchel duality gap `g(x) + <grad phi, x> + g*(-grad phi)`.
    Fenchel,
    None,
}

#[derive(Debug, Clone)]
pub(crate) struct FgmOptions {
    pub x0: Vec<f64>,
    pub max_iters: usize,
    pub target: f64,
    pub certificate: Certificate,
    /// Restart the momentum from the best point every this many iterations.
    pub restart_period: Option<usize>,
}

impl FgmOptions {
    pub fn for_instance(inst: &ProblemInstance, cfg: &SolverConfig, x0: Vec<f64>) -> Self {
        let target = cfg.target_gap(inst, &x0);
        let mu = inst.strong_convexity_l2();
        let (certificate, restart_period) = match inst.reg.kind() {
            RegKind::Entropy if inst.anchor.is_none() && inst.reg.lambda() > 0.0 => (Certificate::Fenchel, None),
            RegKind::Entropy if mu > 0.0 => (Certificate::StrongConvexity(mu), None),
            RegKind::Entropy => (Certificate::None, None),
            _ if mu > 0.0 => {
                let l = inst.smooth_lipschitz(cfg.lipschitz).max(mu);
                let period = (4.0 * (l / mu).sqrt()).ceil() as usize;
                (Certificate::StrongConvexity(mu), Some(period.max(1)))
            }
            _ => (Certificate::None, None),
        };
        FgmOptions { x0, max_iters: cfg.max_iters, target, certificate, restart_period }
    }
}

pub(crate) fn evaluate_certificate(inst: &ProblemInstance, x: &[f64], cert: Certificate) -> Result<f64> {
    match cert {
        Certificate::StrongConvexity(mu) => inst.gap_certificate(x, mu),
        Certificate::Fenchel => {
            let grad = inst.smooth_grad(x)?;
            let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
            let (conj, _) = conjugate_g(&inst.reg, &neg)?;
            Ok(inst.reg.value(x)? + linalg::dot(&grad, x) + conj)
        }
        Certificate::None => Ok(f64::INFINITY),
    }
}

/// Composite FGM from the canonical start.
pub fn solve_fgm(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let opts = FgmOptions::for_instance(inst, cfg, inst.canonical_start());
    fgm_run(inst, cfg, opts)
}

pub(crate) fn fgm_run(inst: &ProblemInstance, cfg: &SolverConfig, opts: FgmOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let (n, m) = (inst.n(), inst.m());
    let a_mat = &inst.a;
    let entropy = inst.reg.kind() == RegKind::Entropy;
    let mass = match inst.reg {
        Regularizer::Entropy { mass, .. } => mass,
        _ => 1.0,
    };
    if opts.x0.len() != n {
        return Err(Error::dim("x0", n, opts.x0.len()));
    }
    let backtracking = cfg.lipschitz == LipschitzSource::Backtracking;
    let anchor_mu = inst.anchor.as_ref().map_or(0.0, |a| a.mu);
    let mut lip = if backtracking {
        inst.stats.max_col_sq as f64 + anchor_mu
    } else {
        inst.smooth_lipschitz(cfg.lipschitz)
    }
    .max(1e-12);

    let x0 = opts.x0.clone();
    let ax0 = a_mat.matvec(&x0)?;
    let mut xt = x0.clone();
    let mut axt = ax0.clone();
    let mut u = x0.clone();
    let mut au = ax0.clone();
    let mut ln_u: Vec<f64> = if entropy { u.iter().map(|v| v.ln()).collect() } else { Vec::new() };

    let mut y = vec![0.0; n];
    let mut ay = vec![0.0; m];
    let mut r = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut u_new = vec![0.0; n];
    let mut ln_u_new = vec![0.0; if entropy { n } else { 0 }];
    let mut au_new = vec![0.0; m];
    let mut xt_new = vec![0.0; n];
    let mut axt_new = vec![0.0; m];

    let objective_at = |x: &[f64], ax: &[f64]| -> f64 {
        let res: Vec<f64> = ax.iter().zip(&inst.b).map(|(p, q)| p - q).collect();
        inst.objective_with_residual(x, &res)
    };
    let smooth_at = |x: &[f64], ax: &[f64]| -> f64 {
        let res: Vec<f64> = ax.iter().zip(&inst.b).map(|(p, q)| p - q).collect();
        inst.smooth_value_with_residual(x, &res)
    };

    let mut best_f = objective_at(&x0, &ax0);
    if !best_f.is_finite() {
        return Err(Error::NonFinite { iter: 0, max_abs_x: linalg::max_abs(&x0) });
    }
    let mut best_x = x0.clone();
    let mut best_ax = ax0;

    let mut report = SolveReport::default();
    report.objective_trace.push(best_f);
    report.trace_iters.push(0);

    let nnz = a_mat.nnz() as u64;
    let mut flops: u64 = nnz;
    let mut a_sum = 0.0;
    let mut since_restart = 0usize;
    let mut accepted = 0usize;
    let mut iters = 0usize;

    let check_every = cfg.check_every.max(1);
    let mut last_cert = f64::INFINITY;
    if opts.certificate != Certificate::None {
        last_cert = evaluate_certificate(inst, &best_x, opts.certificate)?;
        report.certificate_trace.push(last_cert);
        if last_cert <= opts.target {
            report.converged = true;
        }
    }

    while iters < opts.max_iters && !report.converged {
        loop {
            let a = (1.0 + (1.0 + 4.0 * lip * a_sum).sqrt()) / (2.0 * lip);
            let an = a_sum + a;
            let (wo, wn) = (a_sum / an, a / an);
            for k in 0..n {
                y[k] = wo * xt[k] + wn * u[k];
            }
            for i in 0..m {
                ay[i] = wo * axt[i] + wn * au[i];
                r[i] = ay[i] - inst.b[i];
            }
            a_mat.rmatvec_into(&r, &mut grad)?;
            inst.add_anchor_grad(&y, &mut grad);
            if entropy {
                inst.entropy_prox_log(&ln_u, &grad, mass / a, &mut ln_u_new, &mut u_new);
            } else {
                inst.prox_into(&u, &grad, 1.0 / a, &mut u_new);
            }
            a_mat.matvec_into(&u_new, &mut au_new)?;
            for k in 0..n {
                xt_new[k] = wo * xt[k] + wn * u_new[k];
            }
            for i in 0..m {
                axt_new[i] = wo * axt[i] + wn * au_new[i];
            }
            flops += 2 * nnz + 6 * n as u64 + 5 * m as u64;

            if backtracking {
                let phi_y = inst.smooth_value_with_residual(&y, &r);
                let phi_new = smooth_at(&xt_new, &axt_new);
                let mut lin = 0.0;
                let mut sq = 0.0;
                let mut l1 = 0.0;
                for k in 0..n {
                    let d = xt_new[k] - y[k];
                    lin += grad[k] * d;
                    sq += d * d;
                    l1 += d.abs();
                }
                let dist = if entropy { l1 * l1 } else { sq };
                flops += 3 * n as u64 + 2 * m as u64;
                if phi_new > phi_y + lin + 0.5 * lip * dist + 1e-12 * phi_y.abs() {
                    lip *= 2.0;
                    continue;
                }
            }
            a_sum = an;
            break;
        }
        std::mem::swap(&mut u, &mut u_new);
        std::mem::swap(&mut ln_u, &mut ln_u_new);
        std::mem::swap(&mut au, &mut au_new);
        std::mem::swap(&mut xt, &mut xt_new);
        std::mem::swap(&mut axt, &mut axt_new);
        iters += 1;
        since_restart += 1;
        accepted += 1;
        if backtracking && accepted % 10 == 0 {
            lip = (lip / 2.0).max(1e-12);
        }

        let f = objective_at(&xt, &axt);
        if !f.is_finite() {
            return Err(Error::NonFinite { iter: iters, max_abs_x: linalg::max_abs(&xt) });
        }
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(&xt);
            best_ax.copy_from_slice(&axt);
        }
        if cfg.keep_trace(iters) {
            report.objective_trace.push(best_f);
            report.trace_iters.push(iters);
        }

        if opts.certificate != Certificate::None && (iters % check_every == 0 || iters == opts.max_iters) {
            last_cert = evaluate_certificate(inst, &best_x, opts.certificate)?;
            report.certificate_trace.push(last_cert);
            if last_cert <= opts.target {
                report.converged = true;
            }
        }

        if opts.restart_period.is_some_and(|p| since_restart >= p) {
            xt.copy_from_slice(&best_x);
            axt.copy_from_slice(&best_ax);
            u.copy_from_slice(&best_x);
            au.copy_from_slice(&best_ax);
            a_sum = 0.0;
            since_restart = 0;
        }
    }

    if report.trace_iters.last() != Some(&iters) {
        report.objective_trace.push(best_f);
        report.trace_iters.push(iters);
    }
    log::debug!("fgm: {iters} iterations, f = {best_f:.6e}, certificate = {last_cert:.3e}");
    report.x_final = best_x;
    report.iters = iters;
    report.flops = flops;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}
