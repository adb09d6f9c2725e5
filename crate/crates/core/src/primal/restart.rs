//! Regularize-and-restart driver for problems without usable strong convexity.
//!
//! A round adds `mu/2 ||x - x0||^2` with `mu = eps^2 / (2 R^2)`, runs the inner
//! method for its strongly convex iteration count and checks the gap
//! certificate. A failed round means the radius guess `R` was too small; it is
//! doubled and the next round starts again from `x0`.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::fgm::{fgm_run, Certificate, FgmOptions};
use super::powell::powell_run;
use super::rcd::rcd_run;
use super::{RestartRecord, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    Fgm,
    Rcd,
    Powell3,
}

impl FromStr for InnerSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fgm" => Ok(InnerSolver::Fgm),
            "rcd" => Ok(InnerSolver::Rcd),
            "powell3" => Ok(InnerSolver::Powell3),
            other => Err(Error::invalid(format!("unknown inner solver `{other}` (expected fgm, rcd or powell3)"))),
        }
    }
}

/// Worst-case number of rounds: `ceil(log2(2 lambda1 R^2 / eps^2)) + 1`,
/// never less than one.
pub fn restart_bound(lambda1: f64, r_init: f64, epsilon: f64) -> usize {
    let ratio = 2.0 * lambda1 * r_init * r_init / (epsilon * epsilon);
    if !(ratio > 1.0) {
        return 1;
    }
    ratio.log2().ceil() as usize + 1
}

/// Iterations prescribed for a `mu`-strongly convex round with radius `r2`.
pub fn strongly_convex_iterations(
    inner: InnerSolver,
    inst: &ProblemInstance,
    mu: f64,
    r2: f64,
    epsilon: f64,
    cfg: &SolverConfig,
) -> usize {
    let eps2 = epsilon * epsilon;
    let sum_l: f64 = inst.coordinate_lipschitz().iter().sum();
    let active = inst.coordinate_lipschitz().iter().filter(|&&l| l > 0.0).count().max(1) as f64;
    let (rate, l_log) = match inner {
        InnerSolver::Fgm => {
            let l = inst.smooth_lipschitz(cfg.lipschitz);
            ((l / mu).sqrt(), l)
        }
        InnerSolver::Rcd => ((active * sum_l / mu).sqrt(), sum_l),
        InnerSolver::Powell3 => (sum_l / mu, sum_l),
    };
    let log_term = (l_log * r2 * r2 / eps2).max(std::f64::consts::E).ln();
    let n = (cfg.complexity_scale * rate * log_term).ceil();
    if n.is_finite() {
        (n as usize).max(1)
    } else {
        usize::MAX
    }
}

/// Runs `inner` inside the radius-doubling loop until the certificate of a
/// round is at most `epsilon^2`.
pub fn solve_with_restarts(
    inst: &ProblemInstance,
    epsilon: f64,
    inner: InnerSolver,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(cfg.r2_init > 0.0) {
        return Err(Error::invalid(format!("r2_init must be > 0, got {}", cfg.r2_init)));
    }
    let started = Instant::now();
    let eps2 = epsilon * epsilon;
    let x0 = inst.canonical_start();
    let mut radius = cfg.r2_init;
    let mut total = SolveReport::default();

    for _round in 0..cfg.max_restarts.max(1) {
        let mu = eps2 / (2.0 * radius * radius);
        let round_inst = inst.with_anchor(mu, x0.clone())?;
        let mu_tot = round_inst.strong_convexity_l2();
        let budget = strongly_convex_iterations(inner, &round_inst, mu_tot, radius, epsilon, cfg).min(cfg.max_iters);
        let rep = match inner {
            InnerSolver::Fgm => {
                let mut opts = FgmOptions::for_instance(&round_inst, cfg, x0.clone());
                opts.max_iters = budget;
                opts.target = eps2;
                opts.certificate = Certificate::StrongConvexity(mu_tot);
                fgm_run(&round_inst, cfg, opts)?
            }
            InnerSolver::Rcd => rcd_run(&round_inst, cfg, x0.clone(), budget, Some(eps2))?,
            InnerSolver::Powell3 => powell_run(&round_inst, cfg, x0.clone(), budget, Some(eps2))?,
        };
        let certificate = round_inst.gap_certificate(&rep.x_final, mu_tot)?;
        log::debug!("restart round: R = {radius:.3e}, {} iterations, certificate {certificate:.3e}", rep.iters);

        let offset = total.iters;
        total.objective_trace.extend(&rep.objective_trace);
        total.trace_iters.extend(rep.trace_iters.iter().map(|k| k + offset));
        total.certificate_trace.push(certificate);
        total.iters += rep.iters;
        total.flops += rep.flops;
        total.restarts.push(RestartRecord { radius, iters: rep.iters, certificate });
        total.x_final = rep.x_final;

        if certificate <= eps2 {
            total.converged = true;
            total.wall_time_s = started.elapsed().as_secs_f64();
            return Ok(total);
        }
        radius *= 2.0;
    }
    total.wall_time_s = started.elapsed().as_secs_f64();
    Err(Error::RestartBudget { log: total.restarts.clone(), best: Box::new(total) })
}
