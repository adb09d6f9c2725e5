//! Conjugate gradients on the unconstrained ridge normal equations
//! `(A^T A + 2 lambda I) x = A^T b + 2 lambda x_g`.

use std::time::Instant;

use super::{SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ProblemInstance, Regularizer};

/// CG from `x_g`. The nonnegativity constraint is ignored, so the result is
/// the ridge minimizer only when that minimizer happens to be nonnegative.
pub fn solve_cg(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let Regularizer::Ridge { lambda, prior } = &inst.reg else {
        return Err(Error::Unsupported {
            solver: "cg",
            regularizer: inst.reg.kind().name(),
            reason: "not applicable: conjugate gradients needs the unconstrained quadratic (ridge) case",
        });
    };
    let started = Instant::now();
    let a_mat = &inst.a;
    let (n, m) = (inst.n(), inst.m());
    let shift = 2.0 * lambda + inst.anchor.as_ref().map_or(0.0, |a| a.mu);

    let apply = |v: &[f64], ax: &mut Vec<f64>, out: &mut Vec<f64>| -> Result<()> {
        a_mat.matvec_into(v, ax)?;
        a_mat.rmatvec_into(ax, out)?;
        for k in 0..n {
            out[k] += shift * v[k];
        }
        Ok(())
    };

    let mut rhs = a_mat.rmatvec(&inst.b)?;
    for k in 0..n {
        rhs[k] += 2.0 * lambda * prior[k];
    }
    if let Some(anchor) = &inst.anchor {
        linalg::axpy(anchor.mu, &anchor.center, &mut rhs);
    }

    let mut x = prior.clone();
    let mut ax = vec![0.0; m];
    let mut hx = vec![0.0; n];
    apply(&x, &mut ax, &mut hx)?;
    let mut res: Vec<f64> = rhs.iter().zip(&hx).map(|(r, h)| r - h).collect();
    let mut dir = res.clone();
    let mut rr = linalg::norm2_sq(&res);
    let rhs_norm = linalg::norm2(&rhs).max(f64::MIN_POSITIVE);
    let eps2 = cfg.epsilon * cfg.epsilon;
    // unconstrained suboptimality is at most ||res||^2 / (2 * shift)
    let done = |rr: f64| if shift > 0.0 { rr / (2.0 * shift) <= eps2 } else { rr.sqrt() <= 1e-14 * rhs_norm };

    let objective = |x: &[f64], ax: &[f64]| -> f64 {
        let r: Vec<f64> = ax.iter().zip(&inst.b).map(|(p, q)| p - q).collect();
        inst.objective_with_residual(x, &r)
    };

    let mut report = SolveReport::default();
    let mut flops: u64 = 2 * a_mat.nnz() as u64 + 3 * n as u64;
    report.objective_trace.push(objective(&x, &ax));
    report.trace_iters.push(0);
    report.certificate_trace.push(rr);

    let mut hd = vec![0.0; n];
    let mut ad = vec![0.0; m];
    let mut iters = 0;
    while iters < cfg.max_iters && !done(rr) && rr > 0.0 {
        apply(&dir, &mut ad, &mut hd)?;
        let curv = linalg::dot(&dir, &hd);
        if !(curv > 0.0) {
            break;
        }
        let alpha = rr / curv;
        for k in 0..n {
            x[k] += alpha * dir[k];
            res[k] -= alpha * hd[k];
        }
        let rr_new = linalg::norm2_sq(&res);
        let beta = rr_new / rr;
        for k in 0..n {
            dir[k] = res[k] + beta * dir[k];
        }
        rr = rr_new;
        iters += 1;
        flops += 2 * a_mat.nnz() as u64 + 10 * n as u64;
        if cfg.keep_trace(iters) {
            a_mat.matvec_into(&x, &mut ax)?;
            report.objective_trace.push(objective(&x, &ax));
            report.trace_iters.push(iters);
            report.certificate_trace.push(rr);
        }
    }
    a_mat.matvec_into(&x, &mut ax)?;
    let f = objective(&x, &ax);
    if !f.is_finite() {
        return Err(Error::NonFinite { iter: iters, max_abs_x: linalg::max_abs(&x) });
    }
    if report.trace_iters.last() != Some(&iters) {
        report.objective_trace.push(f);
        report.trace_iters.push(iters);
        report.certificate_trace.push(rr);
    }
    report.converged = done(rr) || rr == 0.0;
    report.x_final = x;
    report.iters = iters;
    report.flops = flops;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}
