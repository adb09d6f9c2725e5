//! Accelerated proximal coordinate descent (serial APPROX) with sparse state.
//!
//! The iterate is never formed explicitly. With `theta_k` the momentum
//! parameter, the gradient point is `y_k = theta_k^2 u_k + z_k` and the output
//! is `x_{k+1} = theta_k^2 u_{k+1} + z_{k+1}`; residuals `A u` and `A z - b`
//! are updated through single columns, so a step costs `O(||A^(i)||_0)`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ProblemInstance, RegKind};

/// Minimizer of `1/2 p t^2 + q t` over `t >= 0`, or `fallback` when flat.
pub(crate) fn separable_minimizer(p: f64, q: f64, fallback: f64) -> f64 {
    if p > 0.0 {
        (-q / p).max(0.0)
    } else if q > 0.0 {
        0.0
    } else {
        fallback
    }
}

/// Coordinates with a nonzero column plus the starting point with every
/// zero-norm coordinate already at its own minimizer.
pub(crate) fn split_coordinates(inst: &ProblemInstance, x0: &[f64], p: f64, q: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut x = x0.to_vec();
    let mut active = Vec::new();
    for k in 0..inst.n() {
        if inst.a.col_nnz(k) > 0 {
            active.push(k);
        } else {
            x[k] = separable_minimizer(p, q[k], x0[k]);
        }
    }
    (active, x)
}

pub fn solve_rcd(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    rcd_run(inst, cfg, inst.canonical_start(), cfg.max_iters, None)
}

pub(crate) fn rcd_run(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    x0: Vec<f64>,
    max_steps: usize,
    target_override: Option<f64>,
) -> Result<SolveReport> {
    if inst.reg.kind() == RegKind::Entropy {
        return Err(Error::Unsupported {
            solver: "rcd",
            regularizer: "entropy",
            reason: "not applicable: the simplex constraint is not coordinate-separable",
        });
    }
    let started = Instant::now();
    let a_mat = &inst.a;
    let (p, q) = inst.separable_terms()?;
    let (active, x_start) = split_coordinates(inst, &x0, p, &q);
    let target = target_override.unwrap_or_else(|| cfg.target_gap(inst, &x_start));
    let mu = inst.strong_convexity_l2();
    let mut report = SolveReport::default();

    let n_act = active.len();
    if n_act == 0 {
        report.objective_trace.push(inst.objective(&x_start)?);
        report.trace_iters.push(0);
        report.x_final = x_start;
        report.converged = true;
        report.wall_time_s = started.elapsed().as_secs_f64();
        return Ok(report);
    }
    let lips: Vec<f64> = inst.coordinate_lipschitz();
    let l_max = active.iter().map(|&k| lips[k]).fold(0.0, f64::max);
    let nf = n_act as f64;
    // restart period that cuts the expected gap by 4 for a mu-strongly convex objective
    let restart_period = (mu > 0.0).then(|| (4.0 * nf * (1.0 + l_max / mu).sqrt()).ceil() as usize);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = x_start;
    let mut u = vec![0.0; inst.n()];
    let mut rz = inst.residual(&z)?;
    let mut ru = vec![0.0; inst.m()];
    let mut theta = 1.0 / nf;
    // theta used by the last step; the output point is theta_prev^2 u + z
    let mut theta_out = 0.0;
    let mut flops: u64 = a_mat.nnz() as u64 + inst.m() as u64;

    let form_x = |z: &[f64], u: &[f64], th: f64| -> Vec<f64> {
        let mut x = z.to_vec();
        if th > 0.0 {
            let t2 = th * th;
            for &k in &active {
                x[k] += t2 * u[k];
            }
        }
        x
    };

    let certify = |x: &[f64]| -> Result<f64> {
        if mu > 0.0 {
            inst.gap_certificate(x, mu)
        } else {
            Ok(f64::INFINITY)
        }
    };

    let x_init = form_x(&z, &u, 0.0);
    report.objective_trace.push(inst.objective(&x_init)?);
    report.trace_iters.push(0);
    if mu > 0.0 {
        let c = certify(&x_init)?;
        report.certificate_trace.push(c);
        report.converged = c <= target;
    }

    let epoch = n_act * cfg.check_every.max(1);
    let mut steps = 0usize;
    let mut since_restart = 0usize;
    while steps < max_steps && !report.converged {
        let i = active[rng.gen_range(0..n_act)];
        let col = a_mat.col(i);
        let t2 = theta * theta;
        let gi: f64 = col.iter().map(|&j| t2 * ru[j] + rz[j]).sum();
        let curv = nf * theta * lips[i];
        let z_new = ((curv * z[i] - gi - q[i]) / (curv + p)).max(0.0);
        let dz = z_new - z[i];
        flops += col.len() as u64 + 8;
        if dz != 0.0 {
            z[i] = z_new;
            let coef = -(1.0 - nf * theta) / t2 * dz;
            u[i] += coef;
            for &j in col {
                rz[j] += dz;
                ru[j] += coef;
            }
            flops += 2 * col.len() as u64;
        }
        theta_out = theta;
        theta = ((t2 * t2 + 4.0 * t2).sqrt() - t2) / 2.0;
        steps += 1;
        since_restart += 1;

        let at_epoch = steps % epoch == 0 || steps == max_steps;
        if at_epoch {
            let x = form_x(&z, &u, theta_out);
            let f = inst.objective(&x)?;
            if !f.is_finite() {
                return Err(Error::NonFinite { iter: steps, max_abs_x: linalg::max_abs(&x) });
            }
            if cfg.keep_trace(report.objective_trace.len()) {
                report.objective_trace.push(f);
                report.trace_iters.push(steps);
            }
            if mu > 0.0 {
                let c = certify(&x)?;
                report.certificate_trace.push(c);
                report.converged = c <= target;
            }
        }

        if restart_period.is_some_and(|per| since_restart >= per) {
            // collapse the two-sequence state into z; cost O(n_act + m)
            let t2 = theta_out * theta_out;
            for &k in &active {
                z[k] += t2 * u[k];
                u[k] = 0.0;
            }
            for j in 0..rz.len() {
                rz[j] += t2 * ru[j];
                ru[j] = 0.0;
            }
            flops += 2 * (n_act + rz.len()) as u64;
            theta = 1.0 / nf;
            theta_out = 0.0;
            since_restart = 0;
        }
    }

    let x = form_x(&z, &u, theta_out);
    let f = inst.objective(&x)?;
    if report.trace_iters.last() != Some(&steps) {
        report.objective_trace.push(f);
        report.trace_iters.push(steps);
    }
    report.x_final = x;
    report.iters = steps;
    report.flops = flops;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}
