//! Regularized regression and projection problems over a route matrix.
//!
//! The regression objective is `f(x) = 1/2 ||Ax - b||^2 + g(x)` with one of
//! three regularizers:
//!
//! * ridge: `g(x) = lambda ||x - x_g||^2` over `x >= 0`,
//! * entropy: `g(x) = lambda sum_k x_k ln(x_k / x_g,k)` over `{x >= 0, sum x = R}`,
//! * lasso: `g(x) = lambda ||x||_1` over `x >= 0`.
//!
//! An instance can additionally carry an [`Anchor`], a proximal term
//! `mu/2 ||x - c||^2` that the restart driver uses to make the problem strongly
//! convex. The anchor is treated as part of the smooth term.

mod certificate;
mod conjugate;
mod dual;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{MatrixStats, RouteMatrix, DEFAULT_POWER_ITERS};

pub use conjugate::{conjugate_g, conjugate_sigma};
pub use dual::{DualEval, ProjectionInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    Ridge,
    Entropy,
    Lasso,
}

impl RegKind {
    pub fn name(self) -> &'static str {
        match self {
            RegKind::Ridge => "ridge",
            RegKind::Entropy => "entropy",
            RegKind::Lasso => "lasso",
        }
    }
}

impl std::str::FromStr for RegKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ridge" | "tomogravity" => Ok(RegKind::Ridge),
            "entropy" | "mmi" | "kl" => Ok(RegKind::Entropy),
            "lasso" | "l1" => Ok(RegKind::Lasso),
            other => Err(Error::invalid(format!("unknown regularizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regularizer {
    Ridge { lambda: f64, prior: Vec<f64> },
    Entropy { lambda: f64, prior: Vec<f64>, mass: f64 },
    Lasso { lambda: f64 },
}

/// Feasible set of the regression problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSet {
    Orthant,
    /// `{x >= 0 : sum x = mass}`
    Simplex(f64),
}

impl Regularizer {
    pub fn ridge(lambda: f64, prior: Vec<f64>) -> Result<Self> {
        let r = Regularizer::Ridge { lambda, prior };
        r.check()?;
        Ok(r)
    }

    pub fn entropy(lambda: f64, prior: Vec<f64>, mass: f64) -> Result<Self> {
        let r = Regularizer::Entropy { lambda, prior, mass };
        r.check()?;
        Ok(r)
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        let r = Regularizer::Lasso { lambda };
        r.check()?;
        Ok(r)
    }

    /// Entropy regularizer whose mass is the prior's total.
    pub fn entropy_with_prior_mass(lambda: f64, prior: Vec<f64>) -> Result<Self> {
        let mass = prior.iter().sum();
        Self::entropy(lambda, prior, mass)
    }

    pub fn kind(&self) -> RegKind {
        match self {
            Regularizer::Ridge { .. } => RegKind::Ridge,
            Regularizer::Entropy { .. } => RegKind::Entropy,
            Regularizer::Lasso { .. } => RegKind::Lasso,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Regularizer::Ridge { lambda, .. }
            | Regularizer::Entropy { lambda, .. }
            | Regularizer::Lasso { lambda } => lambda,
        }
    }

    pub fn prior(&self) -> Option<&[f64]> {
        match self {
            Regularizer::Ridge { prior, .. } | Regularizer::Entropy { prior, .. } => Some(prior),
            Regularizer::Lasso { .. } => None,
        }
    }

    /// Same regularizer with a different weight.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut r = self.clone();
        match &mut r {
            Regularizer::Ridge { lambda: l, .. }
            | Regularizer::Entropy { lambda: l, .. }
            | Regularizer::Lasso { lambda: l } => *l = lambda,
        }
        r
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        match *self {
            Regularizer::Entropy { mass, .. } => FeasibleSet::Simplex(mass),
            _ => FeasibleSet::Orthant,
        }
    }

    fn check(&self) -> Result<()> {
        let lambda = self.lambda();
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        match self {
            Regularizer::Ridge { prior, .. } => {
                if let Some((k, v)) = prior.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                    return Err(Error::invalid(format!("ridge prior must be >= 0, x_g[{k}] = {v}")));
                }
            }
            Regularizer::Entropy { prior, mass, .. } => {
                if !(*mass > 0.0 && mass.is_finite()) {
                    return Err(Error::invalid(format!("entropy mass must be > 0, got {mass}")));
                }
                if let Some((k, v)) = prior.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                    return Err(Error::invalid(format!("entropy prior must be > 0, x_g[{k}] = {v}")));
                }
            }
            Regularizer::Lasso { .. } => {}
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self.prior() {
            Some(p) if p.len() != n => Err(Error::dim("prior", n, p.len())),
            _ => Ok(()),
        }
    }

    /// `g(x)`, with the `0 ln 0 = 0` convention.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Domain { index, value });
        }
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Ridge { lambda, prior } => {
                lambda * x.iter().zip(prior).map(|(a, g)| (a - g) * (a - g)).sum::<f64>()
            }
            Regularizer::Entropy { lambda, prior, .. } => {
                lambda * x.iter().zip(prior).map(|(&a, &g)| xlogx_over(a, g)).sum::<f64>()
            }
            Regularizer::Lasso { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// Gradient of `g` on the interior of the feasible set.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Regularizer::Ridge { lambda, prior } => {
                x.iter().zip(prior).map(|(a, g)| 2.0 * lambda * (a - g)).collect()
            }
            Regularizer::Entropy { lambda, prior, .. } => x
                .iter()
                .zip(prior)
                .map(|(&a, &g)| {
                    if a > 0.0 {
                        lambda * ((a / g).ln() + 1.0)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect(),
            Regularizer::Lasso { lambda } => vec![*lambda; x.len()],
        }
    }

    /// Strong-convexity modulus of `g` in the Euclidean norm on the feasible set.
    pub fn strong_convexity_l2(&self) -> f64 {
        match *self {
            Regularizer::Ridge { lambda, .. } => 2.0 * lambda,
            // Hessian lambda / x_k with x_k <= mass
            Regularizer::Entropy { lambda, mass, .. } => lambda / mass,
            Regularizer::Lasso { .. } => 0.0,
        }
    }

    /// Strong-convexity modulus in the norm the matching prox setup uses
    /// (Euclidean for ridge/lasso, l1 for entropy).
    pub fn strong_convexity(&self) -> f64 {
        match *self {
            Regularizer::Entropy { lambda, mass, .. } => lambda / mass,
            _ => self.strong_convexity_l2(),
        }
    }

    /// Canonical feasible starting point.
    pub fn canonical_start(&self, n: usize) -> Vec<f64> {
        match self {
            Regularizer::Ridge { prior, .. } => prior.clone(),
            Regularizer::Entropy { prior, mass, .. } => {
                let total: f64 = prior.iter().sum();
                prior.iter().map(|g| mass * g / total).collect()
            }
            Regularizer::Lasso { .. } => vec![0.0; n],
        }
    }
}

/// `a ln(a / g)` with `0 ln 0 = 0`.
pub(crate) fn xlogx_over(a: f64, g: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / g).ln()
    }
}

/// Proximal anchor `mu/2 ||x - center||^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub mu: f64,
    pub center: Vec<f64>,
}

/// How the solvers pick the Lipschitz constant of the smooth gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzSource {
    TraceBound,
    #[default]
    PowerEstimate,
    Backtracking,
}

/// Safety factor applied on top of the power-iteration estimate, which
/// approaches the top eigenvalue from below.
const POWER_SAFETY: f64 = 1.02;

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: Arc<RouteMatrix>,
    pub b: Vec<f64>,
    pub reg: Regularizer,
    pub stats: MatrixStats,
    pub anchor: Option<Anchor>,
}

impl ProblemInstance {
    pub fn new(a: Arc<RouteMatrix>, b: Vec<f64>, reg: Regularizer) -> Result<Self> {
        let stats = a.stats(DEFAULT_POWER_ITERS);
        Self::with_stats(a, b, reg, stats)
    }

    pub fn with_stats(a: Arc<RouteMatrix>, b: Vec<f64>, reg: Regularizer, stats: MatrixStats) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::dim("link loads b", a.rows(), b.len()));
        }
        reg.check()?;
        reg.check_len(a.cols())?;
        let inst = ProblemInstance { a, b, reg, stats, anchor: None };
        let x0 = inst.canonical_start();
        if !inst.objective(&x0)?.is_finite() {
            return Err(Error::invalid("objective is not finite at the canonical start"));
        }
        Ok(inst)
    }

    /// Copy of this instance with the proximal anchor `mu/2 ||x - center||^2` added.
    pub fn with_anchor(&self, mu: f64, center: Vec<f64>) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::invalid(format!("anchor weight must be > 0, got {mu}")));
        }
        if center.len() != self.n() {
            return Err(Error::dim("anchor center", self.n(), center.len()));
        }
        let mut inst = self.clone();
        inst.anchor = Some(Anchor { mu, center });
        Ok(inst)
    }

    /// Copy with a different regularizer weight (and no anchor).
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut inst = self.clone();
        inst.reg = self.reg.with_lambda(lambda);
        inst.reg.check()?;
        inst.anchor = None;
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn canonical_start(&self) -> Vec<f64> {
        self.reg.canonical_start(self.n())
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        self.reg.feasible_set()
    }

    /// `Ax - b`.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.a.matvec(x)?;
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        Ok(r)
    }

    fn anchor_value(&self, x: &[f64]) -> f64 {
        match &self.anchor {
            Some(Anchor { mu, center }) => 0.5 * mu * linalg::dist2(x, center).powi(2),
            None => 0.0,
        }
    }

    /// Smooth part `1/2 ||r||^2 (+ anchor)` given the residual `r = Ax - b`.
    pub(crate) fn smooth_value_with_residual(&self, x: &[f64], r: &[f64]) -> f64 {
        0.5 * linalg::norm2_sq(r) + self.anchor_value(x)
    }

    /// Objective given a precomputed residual; the domain is not checked.
    pub(crate) fn objective_with_residual(&self, x: &[f64], r: &[f64]) -> f64 {
        self.smooth_value_with_residual(x, r) + self.reg.value_unchecked(x)
    }

    /// `1/2 ||Ax - b||^2 + g(x)` (plus the anchor term when present).
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::dim("x", self.n(), x.len()));
        }
        let g = self.reg.value(x)?;
        let r = self.residual(x)?;
        Ok(self.smooth_value_with_residual(x, &r) + g)
    }

    /// Objective without the anchor, i.e. the problem the caller asked about.
    pub fn base_objective(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::dim("x", self.n(), x.len()));
        }
        let g = self.reg.value(x)?;
        let r = self.residual(x)?;
        Ok(0.5 * linalg::norm2_sq(&r) + g)
    }

    /// Gradient of the smooth part: `A^T (Ax - b)` (plus `mu (x - c)` for an anchor).
    pub fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.residual(x)?;
        let mut g = self.a.rmatvec(&r)?;
        self.add_anchor_grad(x, &mut g);
        Ok(g)
    }

    pub(crate) fn add_anchor_grad(&self, x: &[f64], g: &mut [f64]) {
        if let Some(Anchor { mu, center }) = &self.anchor {
            for ((gi, xi), ci) in g.iter_mut().zip(x).zip(center) {
                *gi += mu * (xi - ci);
            }
        }
    }

    /// Gradient of the whole objective on the interior of the feasible set.
    pub fn full_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.smooth_grad(x)?;
        for (gi, ri) in g.iter_mut().zip(self.reg.gradient(x)) {
            *gi += ri;
        }
        Ok(g)
    }

    fn anchor_mu(&self) -> f64 {
        self.anchor.as_ref().map_or(0.0, |a| a.mu)
    }

    /// Euclidean strong-convexity modulus of the full objective guaranteed by
    /// the regularizer and anchor alone.
    pub fn strong_convexity_l2(&self) -> f64 {
        self.reg.strong_convexity_l2() + self.anchor_mu()
    }

    /// Lipschitz constant of the smooth gradient in the norm matching the prox
    /// setup: `sigma_max(A)` (Euclidean) or `max_k ||A^(k)||^2` (l1, entropy).
    pub fn smooth_lipschitz(&self, source: LipschitzSource) -> f64 {
        let base = match self.reg.kind() {
            RegKind::Entropy => self.stats.max_col_sq as f64,
            _ => match source {
                LipschitzSource::TraceBound => self.stats.trace_bound,
                LipschitzSource::PowerEstimate | LipschitzSource::Backtracking => {
                    (self.stats.sigma_max_est * POWER_SAFETY).min(self.stats.trace_bound)
                }
            },
        };
        base + self.anchor_mu()
    }

    /// Per-coordinate Lipschitz constants `||A^(k)||^2` of the quadratic term.
    pub fn coordinate_lipschitz(&self) -> Vec<f64> {
        (0..self.n()).map(|k| self.a.col_nnz(k) as f64).collect()
    }

    /// Separable quadratic `1/2 p t^2 + q_k t` over `t >= 0` that collects the
    /// ridge/lasso term and the anchor, up to constants.
    pub(crate) fn separable_terms(&self) -> Result<(f64, Vec<f64>)> {
        let n = self.n();
        let (mut p, mut q) = match &self.reg {
            Regularizer::Ridge { lambda, prior } => {
                (2.0 * lambda, prior.iter().map(|g| -2.0 * lambda * g).collect::<Vec<_>>())
            }
            Regularizer::Lasso { lambda } => (0.0, vec![*lambda; n]),
            Regularizer::Entropy { .. } => {
                return Err(Error::Unsupported {
                    solver: "coordinate methods",
                    regularizer: "entropy",
                    reason: "the simplex constraint is not separable",
                })
            }
        };
        if let Some(Anchor { mu, center }) = &self.anchor {
            p += mu;
            for (qk, ck) in q.iter_mut().zip(center) {
                *qk -= mu * ck;
            }
        }
        Ok((p, q))
    }

    /// `argmin_z <grad, z> + L D(z, x) + g(z)` over the feasible set, where `D`
    /// is `1/2 ||z - x||^2` for ridge/lasso and `KL(z || x)` for entropy.
    pub fn composite_prox(&self, x: &[f64], grad: &[f64], l: f64) -> Result<Vec<f64>> {
        if !(l > 0.0) {
            return Err(Error::invalid(format!("prox parameter L must be > 0, got {l}")));
        }
        if x.len() != self.n() {
            return Err(Error::dim("x", self.n(), x.len()));
        }
        if grad.len() != self.n() {
            return Err(Error::dim("grad", self.n(), grad.len()));
        }
        let mut out = vec![0.0; self.n()];
        self.prox_into(x, grad, l, &mut out);
        Ok(out)
    }

    pub(crate) fn prox_into(&self, x: &[f64], grad: &[f64], l: f64, out: &mut [f64]) {
        match &self.reg {
            Regularizer::Ridge { lambda, prior } => {
                let den = l + 2.0 * lambda;
                for k in 0..out.len() {
                    out[k] = ((l * x[k] - grad[k] + 2.0 * lambda * prior[k]) / den).max(0.0);
                }
            }
            Regularizer::Lasso { lambda } => {
                for k in 0..out.len() {
                    out[k] = (x[k] - (grad[k] + lambda) / l).max(0.0);
                }
            }
            Regularizer::Entropy { lambda, prior, mass } => {
                let den = l + lambda;
                let (wx, wg) = (l / den, lambda / den);
                // l > 0, so a zero coordinate of x stays zero
                for k in 0..out.len() {
                    out[k] = if x[k] > 0.0 {
                        wx * x[k].ln() + wg * prior[k].ln() - grad[k] / den
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                let logits = out.to_vec();
                linalg::scaled_softmax(&logits, *mass, out);
            }
        }
    }

    /// Entropic prox step carried out on logarithms, so coordinates never
    /// underflow to an absorbing zero. Writes `ln z` and `z`.
    pub(crate) fn entropy_prox_log(&self, ln_x: &[f64], grad: &[f64], l: f64, ln_out: &mut [f64], out: &mut [f64]) {
        let Regularizer::Entropy { lambda, prior, mass } = &self.reg else {
            unreachable!("entropy prox on a non-entropy instance");
        };
        let den = l + lambda;
        let (wx, wg) = (l / den, lambda / den);
        for k in 0..ln_out.len() {
            ln_out[k] = wx * ln_x[k] + wg * prior[k].ln() - grad[k] / den;
        }
        let shift = mass.ln() - linalg::log_sum_exp(ln_out);
        for (lo, o) in ln_out.iter_mut().zip(out.iter_mut()) {
            *lo += shift;
            *o = lo.exp();
        }
    }

    /// Upper bound on `f(x) - f*` for a `mu`-strongly convex objective:
    /// `max_{z in Q} <grad f(x), x - z> - mu/2 ||z - x||^2`.
    pub fn gap_certificate(&self, x: &[f64], mu: f64) -> Result<f64> {
        if !(mu > 0.0) {
            return Err(Error::invalid(format!("certificate needs mu > 0, got {mu}")));
        }
        let g = self.full_grad(x)?;
        Ok(certificate::strong_convexity_gap(x, &g, mu, self.feasible_set()))
    }
}
