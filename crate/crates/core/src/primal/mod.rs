//! Primal solvers for the regularized regression problem.

mod cg;
mod fgm;
mod powell;
mod rcd;
mod restart;

use serde::{Deserialize, Serialize};

use crate::problem::{LipschitzSource, ProblemInstance, Regularizer};

pub use cg::solve_cg;
pub use fgm::solve_fgm;
pub use powell::solve_powell3;
pub use rcd::solve_rcd;
pub use restart::{restart_bound, solve_with_restarts, strongly_convex_iterations, InnerSolver};

pub(crate) use fgm::{fgm_run, FgmOptions};

/// Step offset used by the three-point method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PowellStep {
    /// Unit offsets `x +- e_i`.
    #[default]
    Unit,
    /// `h_i = max(1, 0.01 * x_g,i)`.
    PriorScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Target accuracy: a solve succeeds once `f(x) - f* <= epsilon^2` is certified.
    pub epsilon: f64,
    /// Iteration cap; coordinate methods count single-coordinate steps.
    pub max_iters: usize,
    pub seed: u64,
    pub lipschitz: LipschitzSource,
    /// Initial guess for the radius `R_2` with `R_2^2 = 1/2 ||x0 - x*||^2`.
    pub r2_init: f64,
    /// Initial guess for the dual radius used by the projection solver.
    pub r_tilde_init: f64,
    /// Scale the target by the initial objective gap.
    pub relative_mode: bool,
    pub powell_step: PowellStep,
    /// Multiplier on the closed-form iteration counts of the restart drivers.
    pub complexity_scale: f64,
    pub max_restarts: usize,
    /// Record every iteration up to this count, then every `trace_stride`-th.
    pub trace_dense_until: usize,
    pub trace_stride: usize,
    /// Certificate evaluation period (iterations for full-gradient methods,
    /// epochs for coordinate methods).
    pub check_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-3,
            max_iters: 100_000,
            seed: 0,
            lipschitz: LipschitzSource::PowerEstimate,
            r2_init: 1.0,
            r_tilde_init: 1.0,
            relative_mode: false,
            powell_step: PowellStep::Unit,
            complexity_scale: 3.0,
            max_restarts: 40,
            trace_dense_until: 10_000,
            trace_stride: 100,
            check_every: 10,
        }
    }
}

impl SolverConfig {
    pub(crate) fn keep_trace(&self, k: usize) -> bool {
        k < self.trace_dense_until || k % self.trace_stride.max(1) == 0
    }

    /// Absolute target on `f - f*` for a solve starting at `x0`.
    pub(crate) fn target_gap(&self, inst: &ProblemInstance, x0: &[f64]) -> f64 {
        let eps2 = self.epsilon * self.epsilon;
        if !self.relative_mode {
            return eps2;
        }
        let f0 = inst.objective(x0).unwrap_or(f64::INFINITY);
        eps2 * (f0 - objective_lower_bound(&inst.reg)).max(f64::MIN_POSITIVE)
    }
}

/// A lower bound on the objective: the minimum of `g` over its feasible set.
pub(crate) fn objective_lower_bound(reg: &Regularizer) -> f64 {
    match reg {
        Regularizer::Entropy { lambda, prior, mass } => {
            let total: f64 = prior.iter().sum();
            lambda * mass * (mass / total).ln()
        }
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    /// Radius guess used in this round.
    pub radius: f64,
    pub iters: usize,
    pub certificate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub certificate_trace: Vec<f64>,
    pub iters: usize,
    pub flops: u64,
    pub restarts: Vec<RestartRecord>,
    pub wall_time_s: f64,
    /// Whether the accuracy target was certified.
    #[serde(skip)]
    pub converged: bool,
    /// Iteration index of each `objective_trace` entry.
    #[serde(skip)]
    pub trace_iters: Vec<usize>,
}

impl SolveReport {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
