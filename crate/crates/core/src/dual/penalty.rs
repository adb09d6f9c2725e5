use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primal::{solve_fgm, SolverConfig};
use crate::problem::{ProblemInstance, ProjectionInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyPoint {
    pub k: f64,
    pub x: Vec<f64>,
    /// `K (A x_K - b)`, the dual estimate.
    pub y_est: Vec<f64>,
    pub iters: usize,
    pub flops: u64,
}

/// Solves `g(x) + K/2 ||Ax - b||^2` over `Q` for each `K`, as the regression
/// problem `1/2 ||Ax - b||^2 + (1/K) g(x)`.
pub fn solve_penalty(proj: &ProjectionInstance, k_schedule: &[f64], cfg: &SolverConfig) -> Result<Vec<PenaltyPoint>> {
    if k_schedule.is_empty() {
        return Err(Error::invalid("empty penalty schedule"));
    }
    for w in k_schedule.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("penalty schedule must be strictly increasing"));
        }
    }
    if !(k_schedule[0] > 0.0) {
        return Err(Error::invalid("penalty weights must be positive"));
    }
    let mut out = Vec::with_capacity(k_schedule.len());
    for &k in k_schedule {
        let reg = proj.reg.with_lambda(1.0 / k);
        let inst = ProblemInstance::with_stats(proj.a.clone(), proj.b.clone(), reg, proj.stats)?;
        let rep = solve_fgm(&inst, cfg)?;
        let y_est = inst.residual(&rep.x_final)?.into_iter().map(|r| k * r).collect();
        out.push(PenaltyPoint { k, x: rep.x_final, y_est, iters: rep.iters, flops: rep.flops });
    }
    Ok(out)
}
