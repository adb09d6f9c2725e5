use std::sync::Arc;

use super::{LipschitzSource, Regularizer};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{MatrixStats, RouteMatrix, DEFAULT_POWER_ITERS};

/// `min g(x)` subject to `Ax = b`, `x in Q`, with a unit-weight ridge or
/// entropy regularizer.
#[derive(Debug, Clone)]
pub struct ProjectionInstance {
    pub a: Arc<RouteMatrix>,
    pub b: Vec<f64>,
    pub reg: Regularizer,
    pub stats: MatrixStats,
}

/// Value, gradient and inner minimizer of the Lagrange dual function
/// `phi(y) = min_{x in Q} g(x) + <y, Ax - b>`.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub phi: f64,
    pub grad: Vec<f64>,
    pub x: Vec<f64>,
}

impl ProjectionInstance {
    pub fn new(a: Arc<RouteMatrix>, b: Vec<f64>, reg: Regularizer) -> Result<Self> {
        let stats = a.stats(DEFAULT_POWER_ITERS);
        Self::with_stats(a, b, reg, stats)
    }

    pub fn with_stats(a: Arc<RouteMatrix>, b: Vec<f64>, reg: Regularizer, stats: MatrixStats) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::dim("link loads b", a.rows(), b.len()));
        }
        if let Regularizer::Lasso { .. } = reg {
            return Err(Error::Unsupported {
                solver: "projection",
                regularizer: "lasso",
                reason: "the projection problem is defined for ridge and entropy only",
            });
        }
        if reg.lambda() != 1.0 {
            return Err(Error::invalid(format!("projection needs lambda = 1, got {}", reg.lambda())));
        }
        reg.check()?;
        reg.check_len(a.cols())?;
        Ok(ProjectionInstance { a, b, reg, stats })
    }

    pub fn ridge(a: Arc<RouteMatrix>, b: Vec<f64>, prior: Vec<f64>) -> Result<Self> {
        Self::new(a, b, Regularizer::ridge(1.0, prior)?)
    }

    pub fn entropy(a: Arc<RouteMatrix>, b: Vec<f64>, prior: Vec<f64>, mass: f64) -> Result<Self> {
        Self::new(a, b, Regularizer::entropy(1.0, prior, mass)?)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn prior(&self) -> &[f64] {
        self.reg.prior().expect("ridge or entropy")
    }

    /// `g(x)`.
    pub fn g(&self, x: &[f64]) -> f64 {
        self.reg.value_unchecked(x)
    }

    /// Lipschitz constant of the dual gradient: the sigma bound divided by the
    /// strong-convexity modulus of `g` (2 for ridge in the Euclidean norm,
    /// `1/R` for entropy in the l1 norm).
    pub fn dual_lipschitz(&self, source: LipschitzSource) -> f64 {
        match &self.reg {
            Regularizer::Ridge { .. } => {
                let sigma = match source {
                    LipschitzSource::TraceBound => self.stats.trace_bound,
                    _ => (self.stats.sigma_max_est * 1.02).min(self.stats.trace_bound),
                };
                sigma / 2.0
            }
            Regularizer::Entropy { mass, .. } => mass * self.stats.max_col_sq as f64,
            Regularizer::Lasso { .. } => unreachable!("rejected at construction"),
        }
    }

    /// Inner minimizer `x(y)` given `A^T y`; returns the inner minimum of
    /// `g(x) + <A^T y, x>`.
    pub(crate) fn inner_from_aty(&self, aty: &[f64], x: &mut [f64]) -> f64 {
        match &self.reg {
            Regularizer::Ridge { prior, .. } => {
                let mut val = 0.0;
                for k in 0..x.len() {
                    let xk = (prior[k] - 0.5 * aty[k]).max(0.0);
                    x[k] = xk;
                    val += (xk - prior[k]) * (xk - prior[k]) + aty[k] * xk;
                }
                val
            }
            Regularizer::Entropy { prior, mass, .. } => {
                let logits: Vec<f64> = prior.iter().zip(aty).map(|(g, s)| g.ln() - s).collect();
                let lse = linalg::scaled_softmax(&logits, *mass, x);
                mass * mass.ln() - mass * lse
            }
            Regularizer::Lasso { .. } => unreachable!("rejected at construction"),
        }
    }

    pub fn dual_oracle(&self, y: &[f64]) -> Result<DualEval> {
        if y.len() != self.m() {
            return Err(Error::dim("dual point y", self.m(), y.len()));
        }
        let aty = self.a.rmatvec(y)?;
        let mut x = vec![0.0; self.n()];
        let inner = self.inner_from_aty(&aty, &mut x);
        let phi = inner - linalg::dot(y, &self.b);
        let mut grad = self.a.matvec(&x)?;
        for (gi, bi) in grad.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        Ok(DualEval { phi, grad, x })
    }
}
