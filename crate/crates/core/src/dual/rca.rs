//! Randomized coordinate ascent on the Fenchel dual of the ridge problem,
//! `min_y g*(-A^T y) + sum_k sigma_k*(y_k)`, one coordinate per link.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::primal::{SolveReport, SolverConfig};
use crate::problem::{conjugate_sigma, ProblemInstance, Regularizer};

/// Exact minimizer over `t` of
/// `sum_j 1/(2p) max(0, bp_j - t)^2 + 1/2 (y + t)^2 + b (y + t)`.
/// `bp` is sorted in place (descending).
fn coordinate_step(bp: &mut [f64], p: f64, y: f64, b: f64) -> f64 {
    bp.sort_unstable_by(|u, v| v.total_cmp(u));
    let mut sum = 0.0;
    for c in 0..=bp.len() {
        let t = (sum / p - y - b) / (1.0 + c as f64 / p);
        let below = if c < bp.len() { bp[c] <= t } else { true };
        if below {
            return t;
        }
        sum += bp[c];
    }
    unreachable!("the derivative is increasing and unbounded")
}

pub fn solve_dual_rca(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let lambda = match &inst.reg {
        Regularizer::Ridge { lambda, .. } => *lambda,
        other => {
            return Err(Error::Unsupported {
                solver: "dual_rca",
                regularizer: other.kind().name(),
                reason: "not applicable: the dual needs a strongly convex separable regularizer (ridge)",
            })
        }
    };
    if !(lambda > 0.0) {
        return Err(Error::invalid("dual_rca needs lambda > 0"));
    }
    let started = Instant::now();
    let a_mat = &inst.a;
    let (m, n) = (inst.m(), inst.n());
    let (p, q) = inst.separable_terms()?;
    // sum of the per-coordinate constants of g, i.e. g(0) (plus the anchor at 0)
    let c0 = inst.objective_with_residual(&vec![0.0; n], &vec![0.0; m]);
    let target = cfg.target_gap(inst, &inst.canonical_start());

    let mut y = vec![0.0; m];
    let mut u = vec![0.0; n]; // -A^T y
    let mut active = Vec::new();
    for i in 0..m {
        if a_mat.row_nnz(i) > 0 {
            active.push(i);
        } else {
            y[i] = -inst.b[i];
        }
    }
    let mut flops: u64 = m as u64;

    let primal = |u: &[f64]| -> Vec<f64> { (0..n).map(|j| ((u[j] - q[j]) / p).max(0.0)).collect() };
    let dual_value = |u: &[f64], y: &[f64]| -> f64 {
        let mut v = -c0;
        for j in 0..n {
            let d = (u[j] - q[j]).max(0.0);
            v += d * d / (2.0 * p);
        }
        for (yk, bk) in y.iter().zip(&inst.b) {
            v += conjugate_sigma(*bk, *yk).0;
        }
        v
    };

    let mut report = SolveReport::default();
    let evaluate = |u: &[f64], y: &[f64], report: &mut SolveReport, steps: usize| -> Result<f64> {
        let x = primal(u);
        let f = inst.objective(&x)?;
        if !f.is_finite() {
            return Err(Error::NonFinite { iter: steps, max_abs_x: linalg::max_abs(&x) });
        }
        let gap = f + dual_value(u, y);
        if cfg.keep_trace(report.objective_trace.len()) {
            report.objective_trace.push(f);
            report.trace_iters.push(steps);
        }
        report.certificate_trace.push(gap);
        Ok(gap)
    };

    let gap0 = evaluate(&u, &y, &mut report, 0)?;
    report.converged = gap0 <= target || active.is_empty();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let epoch = active.len().max(1) * cfg.check_every.max(1);
    let mut bp = Vec::new();
    let mut steps = 0usize;
    while steps < cfg.max_iters && !report.converged {
        let k = active[rng.gen_range(0..active.len())];
        let row = a_mat.row(k);
        bp.clear();
        bp.extend(row.iter().map(|&j| u[j] - q[j]));
        let t = coordinate_step(&mut bp, p, y[k], inst.b[k]);
        y[k] += t;
        for &j in row {
            u[j] -= t;
        }
        let len = row.len() as u64;
        flops += 4 * len + len * (64 - len.leading_zeros() as u64) + 10;
        steps += 1;
        if steps % epoch == 0 || steps == cfg.max_iters {
            let gap = evaluate(&u, &y, &mut report, steps)?;
            report.converged = gap <= target;
        }
    }

    let x = primal(&u);
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
