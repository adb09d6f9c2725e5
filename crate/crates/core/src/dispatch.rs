//! Solver identifiers, the solver/regularizer support table, and a single
//! entry point that runs any solver on a route matrix and load vector.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dual::{solve_dual_rca, solve_penalty, solve_projection_fgm, PenaltyPoint, ProjectionReport};
use crate::error::{Error, Result};
use crate::matrix::{MatrixStats, RouteMatrix};
use crate::primal::{
    solve_cg, solve_fgm, solve_powell3, solve_rcd, solve_with_restarts, InnerSolver, SolveReport, SolverConfig,
};
use crate::problem::{ProblemInstance, ProjectionInstance, RegKind, Regularizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverId {
    Fgm,
    Rcd,
    Powell3,
    Cg,
    DualFgm,
    DualRca,
    Penalty,
}

impl SolverId {
    pub const ALL: [SolverId; 7] = [
        SolverId::Fgm,
        SolverId::Rcd,
        SolverId::Powell3,
        SolverId::Cg,
        SolverId::DualFgm,
        SolverId::DualRca,
        SolverId::Penalty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverId::Fgm => "fgm",
            SolverId::Rcd => "rcd",
            SolverId::Powell3 => "powell3",
            SolverId::Cg => "cg",
            SolverId::DualFgm => "dual_fgm",
            SolverId::DualRca => "dual_rca",
            SolverId::Penalty => "penalty",
        }
    }

    /// Whether the solver handles the regularizer; the error explains why not.
    pub fn check_supports(self, reg: RegKind) -> Result<()> {
        use RegKind::*;
        let reason = match (self, reg) {
            (SolverId::Fgm, _) => return Ok(()),
            (SolverId::Rcd | SolverId::Powell3, Ridge | Lasso) => return Ok(()),
            (SolverId::Cg, Ridge) => return Ok(()),
            (SolverId::DualFgm | SolverId::Penalty, Ridge | Entropy) => return Ok(()),
            (SolverId::DualRca, Ridge) => return Ok(()),
            (SolverId::Rcd | SolverId::Powell3, Entropy) => {
                "not applicable: coordinate methods need a separable feasible set and the simplex is not"
            }
            (SolverId::Cg, _) => "not applicable: conjugate gradients only covers the unconstrained ridge case",
            (SolverId::DualFgm | SolverId::Penalty, Lasso) => {
                "not applicable: the projection problem is defined for ridge and entropy only"
            }
            (SolverId::DualRca, Entropy) => {
                "not applicable: dual coordinate steps for entropy cost O(m) and are not provided"
            }
            (SolverId::DualRca, Lasso) => "not applicable: lasso is not strongly convex, so its dual is not smooth",
        };
        Err(Error::Unsupported { solver: self.name(), regularizer: reg.name(), reason })
    }

    pub fn applicable(reg: RegKind) -> Vec<SolverId> {
        Self::ALL.into_iter().filter(|s| s.check_supports(reg).is_ok()).collect()
    }

    /// Solvers that work on the projection problem (regularizer weight fixed to 1).
    pub fn is_projection(self) -> bool {
        matches!(self, SolverId::DualFgm | SolverId::Penalty)
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, SolverId::Rcd | SolverId::Powell3 | SolverId::DualRca)
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown solver `{s}`")))
    }
}

/// Everything needed to build and solve one problem.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub a: Arc<RouteMatrix>,
    pub b: Vec<f64>,
    pub stats: Option<MatrixStats>,
    pub reg: RegKind,
    /// Regularizer weight; ignored by the projection solvers, which use 1.
    pub lambda: f64,
    /// Prior for ridge and entropy.
    pub prior: Vec<f64>,
    /// Simplex mass for entropy; defaults to the prior's total.
    pub mass: Option<f64>,
    /// Projection accuracies (gap and residual).
    pub epsilon: f64,
    pub epsilon_tilde: f64,
    pub k_schedule: Vec<f64>,
    /// Wrap fgm/rcd/powell3 in the radius-doubling restart driver.
    pub restarts: bool,
    pub config: SolverConfig,
}

#[derive(Debug, Clone)]
pub enum SolverOutput {
    Primal(SolveReport),
    Projection(ProjectionReport),
    Penalty(Vec<PenaltyPoint>),
}

impl SolverOutput {
    pub fn x(&self) -> &[f64] {
        match self {
            SolverOutput::Primal(r) => &r.x_final,
            SolverOutput::Projection(r) => &r.x_final,
            SolverOutput::Penalty(p) => &p.last().expect("nonempty schedule").x,
        }
    }

    pub fn iters(&self) -> usize {
        match self {
            SolverOutput::Primal(r) => r.iters,
            SolverOutput::Projection(r) => r.iters,
            SolverOutput::Penalty(p) => p.iter().map(|q| q.iters).sum(),
        }
    }

    pub fn flops(&self) -> u64 {
        match self {
            SolverOutput::Primal(r) => r.flops,
            SolverOutput::Projection(r) => r.flops,
            SolverOutput::Penalty(p) => p.iter().map(|q| q.flops).sum(),
        }
    }

    /// False only for a primal run that stopped at `max_iters`; the
    /// projection solvers report that case as an error instead.
    pub fn converged(&self) -> bool {
        match self {
            SolverOutput::Primal(r) => r.converged,
            _ => true,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        match self {
            SolverOutput::Primal(r) => r.to_json(),
            SolverOutput::Projection(r) => r.to_json(),
            SolverOutput::Penalty(p) => serde_json::to_string_pretty(p),
        }
    }
}

impl SolveRequest {
    pub fn regularizer(&self, lambda: f64) -> Result<Regularizer> {
        match self.reg {
            RegKind::Ridge => Regularizer::ridge(lambda, self.prior.clone()),
            RegKind::Entropy => {
                let mass = self.mass.unwrap_or_else(|| self.prior.iter().sum());
                Regularizer::entropy(lambda, self.prior.clone(), mass)
            }
            RegKind::Lasso => Regularizer::lasso(lambda),
        }
    }

    fn stats(&self) -> MatrixStats {
        self.stats.unwrap_or_else(|| self.a.stats(crate::matrix::DEFAULT_POWER_ITERS))
    }

    pub fn problem(&self) -> Result<ProblemInstance> {
        ProblemInstance::with_stats(self.a.clone(), self.b.clone(), self.regularizer(self.lambda)?, self.stats())
    }

    pub fn projection(&self) -> Result<ProjectionInstance> {
        ProjectionInstance::with_stats(self.a.clone(), self.b.clone(), self.regularizer(1.0)?, self.stats())
    }

    pub fn run(&self, solver: SolverId) -> Result<SolverOutput> {
        solver.check_supports(self.reg)?;
        let cfg = &self.config;
        if self.restarts {
            let inner = match solver {
                SolverId::Fgm => Some(InnerSolver::Fgm),
                SolverId::Rcd => Some(InnerSolver::Rcd),
                SolverId::Powell3 => Some(InnerSolver::Powell3),
                _ => None,
            };
            if let Some(inner) = inner {
                let rep = solve_with_restarts(&self.problem()?, cfg.epsilon, inner, cfg)?;
                return Ok(SolverOutput::Primal(rep));
            }
        }
        Ok(match solver {
            SolverId::Fgm => SolverOutput::Primal(solve_fgm(&self.problem()?, cfg)?),
            SolverId::Rcd => SolverOutput::Primal(solve_rcd(&self.problem()?, cfg)?),
            SolverId::Powell3 => SolverOutput::Primal(solve_powell3(&self.problem()?, cfg)?),
            SolverId::Cg => SolverOutput::Primal(solve_cg(&self.problem()?, cfg)?),
            SolverId::DualRca => SolverOutput::Primal(solve_dual_rca(&self.problem()?, cfg)?),
            SolverId::DualFgm => {
                SolverOutput::Projection(solve_projection_fgm(&self.projection()?, self.epsilon, self.epsilon_tilde, cfg)?)
            }
            SolverId::Penalty => SolverOutput::Penalty(solve_penalty(&self.projection()?, &self.k_schedule, cfg)?),
        })
    }
}
