//! Three-point derivative-free coordinate method.
//!
//! Each step samples a coordinate `i` and evaluates the smooth term at
//! `x`, `x + h e_i` and `x - h e_i`. The smooth term is a quadratic along the
//! line, so those three values pin the parabola down exactly; the step then
//! jumps to the minimizer of parabola plus the 1-D regularizer over `x_i >= 0`.
//! Only the rows of column `i` change between the three points, so the
//! values are differenced over those rows using the cached residual.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rcd::split_coordinates;
use super::{PowellStep, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ProblemInstance, RegKind};

pub fn solve_powell3(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    powell_run(inst, cfg, inst.canonical_start(), cfg.max_iters, None)
}

pub(crate) fn powell_run(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    x0: Vec<f64>,
    max_steps: usize,
    target_override: Option<f64>,
) -> Result<SolveReport> {
    if inst.reg.kind() == RegKind::Entropy {
        return Err(Error::Unsupported {
            solver: "powell3",
            regularizer: "entropy",
            reason: "not applicable: the simplex constraint is not coordinate-separable",
        });
    }
    let started = Instant::now();
    let a_mat = &inst.a;
    let (p, q) = inst.separable_terms()?;
    let (active, mut x) = split_coordinates(inst, &x0, p, &q);
    let target = target_override.unwrap_or_else(|| cfg.target_gap(inst, &x));
    let mu = inst.strong_convexity_l2();
    let steps_h: Vec<f64> = match (cfg.powell_step, inst.reg.prior()) {
        (PowellStep::PriorScaled, Some(prior)) => prior.iter().map(|g| (0.01 * g).max(1.0)).collect(),
        _ => vec![1.0; inst.n()],
    };

    let mut report = SolveReport::default();
    let mut r = inst.residual(&x)?;
    let mut flops: u64 = a_mat.nnz() as u64 + inst.m() as u64;
    report.objective_trace.push(inst.objective(&x)?);
    report.trace_iters.push(0);
    if mu > 0.0 {
        let c = inst.gap_certificate(&x, mu)?;
        report.certificate_trace.push(c);
        report.converged = c <= target;
    }
    let n_act = active.len();
    if n_act == 0 {
        report.converged = true;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let epoch = n_act.max(1) * cfg.check_every.max(1);
    let mut steps = 0usize;
    while steps < max_steps && !report.converged {
        let i = active[rng.gen_range(0..n_act)];
        let col = a_mat.col(i);
        let h = steps_h[i];
        // smooth values at x - h e_i, x, x + h e_i restricted to the touched rows;
        // the untouched rows contribute the same constant to all three
        let (mut f_minus, mut f_zero, mut f_plus) = (0.0, 0.0, 0.0);
        for &j in col {
            let rj = r[j];
            f_zero += 0.5 * rj * rj;
            f_plus += 0.5 * (rj + h) * (rj + h);
            f_minus += 0.5 * (rj - h) * (rj - h);
        }
        let slope = (f_plus - f_minus) / (2.0 * h);
        let curv = (f_plus - 2.0 * f_zero + f_minus) / (h * h);
        flops += 3 * col.len() as u64 + 10;
        steps += 1;
        if curv + p > 0.0 {
            let xi_new = ((curv * x[i] - slope - q[i]) / (curv + p)).max(0.0);
            let t = xi_new - x[i];
            if t != 0.0 {
                x[i] = xi_new;
                for &j in col {
                    r[j] += t;
                }
                flops += col.len() as u64;
            }
        }

        if steps % epoch == 0 || steps == max_steps {
            let f = inst.objective_with_residual(&x, &r);
            if !f.is_finite() {
                return Err(Error::NonFinite { iter: steps, max_abs_x: linalg::max_abs(&x) });
            }
            if cfg.keep_trace(report.objective_trace.len()) {
                report.objective_trace.push(f);
                report.trace_iters.push(steps);
            }
            if mu > 0.0 {
                let c = inst.gap_certificate(&x, mu)?;
                report.certificate_trace.push(c);
                report.converged = c <= target;
            }
        }
    }

    if report.trace_iters.last() != Some(&steps) {
        report.objective_trace.push(inst.objective(&x)?);
        report.trace_iters.push(steps);
    }
    report.x_final = x;
    report.iters = steps;
    report.flops = flops;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}
