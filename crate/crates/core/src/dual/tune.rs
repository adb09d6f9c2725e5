//! Golden-section search over the multiplier `lb` of the relaxed constraint
//! `||Ax - b||^2 <= eps^2`:
//! `psi(lb) = min_{x in Q} g(x) + lb/2 (||Ax - b||^2 - eps^2)`.
//!
//! `psi(lb) = lb (f*_{1/lb} - eps^2/2)` where `f*_lambda` is the optimum of the
//! regression problem with weight `lambda`, so each evaluation is one FGM solve.
//! `psi` is concave, hence unimodal; the search runs on `ln lb`, which keeps
//! it unimodal and gives relative precision across wide intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primal::{fgm_run, FgmOptions, SolverConfig};
use crate::problem::{ProblemInstance, ProjectionInstance};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const LOG_WIDTH_TOL: f64 = 1e-3;
const MAX_EVALS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lambda_bar: f64,
    pub x: Vec<f64>,
    /// Set when the maximizer sits at an end of the search interval.
    pub at_boundary: bool,
    /// `psi` at the returned multiplier.
    pub psi: f64,
    pub evaluations: usize,
    /// Bracket after each evaluation.
    pub brackets: Vec<(f64, f64)>,
}

/// `[1 / (100 eps), 100 / eps^2]`.
pub fn default_interval(epsilon_slater: f64) -> (f64, f64) {
    (1.0 / (100.0 * epsilon_slater), 100.0 / (epsilon_slater * epsilon_slater))
}

struct Eval {
    psi: f64,
    x: Vec<f64>,
}

pub fn tune_lambda(
    proj: &ProjectionInstance,
    epsilon_slater: f64,
    interval: (f64, f64),
    cfg: &SolverConfig,
) -> Result<TuneResult> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if !(epsilon_slater > 0.0) {
        return Err(Error::invalid(format!("epsilon_slater must be > 0, got {epsilon_slater}")));
    }
    let eps2 = epsilon_slater * epsilon_slater;
    let base = ProblemInstance::with_stats(proj.a.clone(), proj.b.clone(), proj.reg.clone(), proj.stats)?;

    let evaluations = std::cell::Cell::new(0usize);
    let evaluate = |lb: f64, width: f64| -> Result<Eval> {
        evaluations.set(evaluations.get() + 1);
        let inst = base.with_lambda(1.0 / lb)?;
        // an error of d in f* moves psi by lb * d
        let target = (width * eps2 / (10.0 * lb)).min(cfg.epsilon * cfg.epsilon);
        let mut opts = FgmOptions::for_instance(&inst, cfg, inst.canonical_start());
        opts.target = target;
        let rep = fgm_run(&inst, cfg, opts)?;
        let f = inst.objective(&rep.x_final)?;
        Ok(Eval { psi: lb * (f - 0.5 * eps2), x: rep.x_final })
    };

    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let width = |a: f64, b: f64| b.exp() - a.exp();
    let mut ec = evaluate(c.exp(), width(a, b))?;
    let mut ed = evaluate(d.exp(), width(a, b))?;
    let mut brackets = vec![(a.exp(), b.exp())];
    while b - a > LOG_WIDTH_TOL && evaluations.get() < MAX_EVALS {
        if ec.psi >= ed.psi {
            b = d;
            d = c;
            ed = ec;
            c = b - INV_PHI * (b - a);
            ec = evaluate(c.exp(), width(a, b))?;
        } else {
            a = c;
            c = d;
            ec = ed;
            d = a + INV_PHI * (b - a);
            ed = evaluate(d.exp(), width(a, b))?;
        }
        brackets.push((a.exp(), b.exp()));
    }
    let mid = 0.5 * (a + b);
    let last = evaluate(mid.exp(), width(a, b))?;
    let edge = 2.0 * LOG_WIDTH_TOL;
    let at_boundary = a - lo.ln() <= edge || hi.ln() - b <= edge;
    if at_boundary {
        log::warn!("tune_lambda: maximizer at the end of [{lo:e}, {hi:e}]; widen the interval");
    }
    Ok(TuneResult {
        lambda_bar: mid.exp(),
        x: last.x,
        at_boundary,
        psi: last.psi,
        evaluations: evaluations.get(),
        brackets,
    })
}
