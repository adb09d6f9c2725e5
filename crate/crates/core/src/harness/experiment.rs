use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{generate_network, Metrics, SyntheticInstance, TopologySpec};
use crate::dispatch::{SolveRequest, SolverId, SolverOutput};
use crate::error::Result;
use crate::linalg;
use crate::matrix::{RouteMatrix, DEFAULT_POWER_ITERS};
use crate::primal::SolverConfig;
use crate::problem::RegKind;

/// Solver settings for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub reg: RegKind,
    /// Regularizer weight for the regression solvers.
    pub lambda: f64,
    /// Gap accuracy of the projection solvers.
    pub epsilon: f64,
    /// Residual accuracy of the projection solvers.
    pub epsilon_tilde: f64,
    /// Interpret `epsilon` and `epsilon_tilde` as fractions of `||b||`.
    pub relative_to_b: bool,
    pub k_schedule: Vec<f64>,
    pub restarts: bool,
    pub solver: SolverConfig,
    /// Where to write a CSV trace, if anywhere.
    pub trace_path: Option<PathBuf>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            reg: RegKind::Entropy,
            lambda: 1.0,
            epsilon: 0.01,
            epsilon_tilde: 0.01,
            relative_to_b: true,
            k_schedule: vec![1e2, 1e3, 1e4],
            restarts: false,
            solver: SolverConfig::default(),
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: TopologySpec,
    pub seed: u64,
    pub solver: SolverId,
    pub lla: f64,
    pub da: f64,
    pub iters: usize,
    pub flops: u64,
    pub wall_time_s: f64,
    pub trace_path: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    /// Metrics of the uniform prior.
    pub prior: Metrics,
    pub output: SolverOutput,
    pub instance: SyntheticInstance,
}

/// Uniform prior `c * 1` with `c` the least-squares fit of `c * A1` to `b`.
/// `None` when no positive scale fits (empty pattern or nonpositive loads).
pub fn fitted_uniform_prior(a: &RouteMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.cols();
    let a1 = a.matvec(&vec![1.0; n]).ok()?;
    let den = linalg::norm2_sq(&a1);
    let c = linalg::dot(&a1, b) / den;
    (den > 0.0 && c > 0.0).then(|| vec![c; n])
}

/// [`fitted_uniform_prior`] on a synthetic instance, falling back to the
/// mean of the demand range.
pub fn uniform_prior(inst: &SyntheticInstance) -> Vec<f64> {
    fitted_uniform_prior(&inst.a, &inst.b)
        .unwrap_or_else(|| vec![0.5 * (inst.spec.uniform_lo + inst.spec.uniform_hi); inst.a.cols()])
}

impl ExperimentSettings {
    pub fn request(&self, inst: &SyntheticInstance, prior: Vec<f64>) -> SolveRequest {
        let scale = if self.relative_to_b { linalg::norm2(&inst.b) } else { 1.0 };
        SolveRequest {
            a: inst.a.clone(),
            b: inst.b.clone(),
            stats: Some(inst.a.stats(DEFAULT_POWER_ITERS)),
            reg: self.reg,
            lambda: self.lambda,
            prior,
            mass: None,
            epsilon: self.epsilon * scale,
            epsilon_tilde: self.epsilon_tilde * scale,
            k_schedule: self.k_schedule.clone(),
            restarts: self.restarts,
            config: self.solver.clone(),
        }
    }
}

pub fn write_trace(path: &std::path::Path, output: &SolverOutput) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match output {
        SolverOutput::Primal(r) => {
            writeln!(w, "iter,objective")?;
            for (k, f) in r.trace_iters.iter().zip(&r.objective_trace) {
                writeln!(w, "{k},{f}")?;
            }
        }
        SolverOutput::Projection(r) => {
            writeln!(w, "iter,certificate,residual")?;
            for ((k, c), res) in r.trace_iters.iter().zip(&r.cert_trace).zip(&r.residual_trace) {
                writeln!(w, "{k},{c},{res}")?;
            }
        }
        SolverOutput::Penalty(points) => {
            writeln!(w, "k,residual_norm")?;
            for p in points {
                writeln!(w, "{},{}", p.k, linalg::norm2(&p.y_est) / p.k)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Generates the instance, solves it from the uniform prior and scores the result.
pub fn run_experiment(spec: &TopologySpec, solver: SolverId, settings: &ExperimentSettings) -> Result<ExperimentOutcome> {
    solver.check_supports(settings.reg)?;
    let inst = generate_network(spec)?;
    let prior = uniform_prior(&inst);
    let prior_metrics = inst.metrics(&prior)?;
    let started = std::time::Instant::now();
    let output = settings.request(&inst, prior).run(solver).map_err(|e| {
        log::error!("solver {solver} failed on seed {}: {e}", spec.seed);
        e
    })?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let m = inst.metrics(output.x())?;
    let trace_path = match &settings.trace_path {
        Some(p) => {
            write_trace(p, &output)?;
            Some(p.display().to_string())
        }
        None => None,
    };
    let report = ExperimentReport {
        spec: spec.clone(),
        seed: spec.seed,
        solver,
        lla: m.lla,
        da: m.da,
        iters: output.iters(),
        flops: output.flops(),
        wall_time_s,
        trace_path,
    };
    Ok(ExperimentOutcome { report, prior: prior_metrics, output, instance: inst })
}
