//! Dual methods: FGM on the dual of the projection problem, randomized dual
//! coordinate ascent for the regularized problem, penalty continuation and
//! tuning of the Slater multiplier.

mod penalty;
mod projection;
mod rca;
mod tune;

use serde::{Deserialize, Serialize};

pub use penalty::{solve_penalty, PenaltyPoint};
pub use projection::{solve_projection_fgm, DualState};
pub use rca::solve_dual_rca;
pub use tune::{default_interval, tune_lambda, TuneResult};

/// Iterations of one dual FGM round for radius guess `r_tilde`:
/// `ceil(max(sqrt(8 L R^2 / eps), sqrt(8 L R / eps_tilde)))`.
pub fn round_length(lipschitz: f64, r_tilde: f64, epsilon: f64, epsilon_tilde: f64) -> usize {
    let a = (8.0 * lipschitz * r_tilde * r_tilde / epsilon).sqrt();
    let b = (8.0 * lipschitz * r_tilde / epsilon_tilde).sqrt();
    let k = a.max(b).ceil();
    if k.is_finite() {
        (k as usize).max(1)
    } else {
        usize::MAX
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRestart {
    pub radius: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProjectionReport {
    pub x_final: Vec<f64>,
    pub y_final: Vec<f64>,
    /// Duality gap `F(y~_k) + g(x_k)` of the averaged primal point.
    pub cert_trace: Vec<f64>,
    /// `||A x_k - b||_2`.
    pub residual_trace: Vec<f64>,
    pub restarts: Vec<ProjectionRestart>,
    pub iters: usize,
    pub wall_time_s: f64,
    /// `gap + 2 R~ ||A x_k - b||`, the quantity bounded by `2 R~^2 / A_k`.
    #[serde(skip)]
    pub bound_trace: Vec<f64>,
    /// Iteration index (within its round) of each trace entry.
    #[serde(skip)]
    pub trace_iters: Vec<usize>,
    /// Index into the traces where each round starts.
    #[serde(skip)]
    pub round_starts: Vec<usize>,
    #[serde(skip)]
    pub flops: u64,
    #[serde(skip)]
    pub success: bool,
}

impl ProjectionReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
