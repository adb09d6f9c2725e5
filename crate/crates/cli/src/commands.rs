use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use tmest::dual::{default_interval, tune_lambda};
use tmest::harness::{generate_network, metrics, write_trace, Metrics, Topology, TopologySpec};
use tmest::{io, linalg, Error, SolveRequest, SolverId, SolverOutput};

use crate::manifest::{Inputs, RunManifest};
use crate::Rejected;

fn prepare_out_dir(m: &RunManifest) -> Result<std::path::PathBuf> {
    let dir = m.out_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating output dir {}", dir.display()))?;
    Ok(dir)
}

pub fn generate(m: &RunManifest) -> Result<()> {
    let nodes = m.nodes.ok_or_else(|| Rejected("--nodes is required".into()))?;
    let seed = m.seed.unwrap_or(0);
    let mut spec = if m.star.unwrap_or(false) {
        TopologySpec::star(nodes, seed)
    } else {
        let links = m.links.ok_or_else(|| Rejected("--links is required".into()))?;
        TopologySpec::new(nodes, links, seed)
    };
    if let Some(lo) = m.demand_lo {
        spec.uniform_lo = lo;
    }
    if let Some(hi) = m.demand_hi {
        spec.uniform_hi = hi;
    }
    if let Some(s) = m.noise_sigma {
        spec.noise_sigma = s;
    }
    spec.validate().map_err(|e| Rejected(e.to_string()))?;
    let inst = generate_network(&spec)?;
    let dir = prepare_out_dir(m)?;
    inst.export(&dir)?;
    let echo = RunManifest { seed: Some(seed), star: Some(spec.topology == Topology::Star), ..m.clone() };
    echo.write_echo(&dir)?;
    println!(
        "wrote {} links x {} demands to {} (nnz {})",
        inst.a.rows(),
        inst.a.cols(),
        dir.display(),
        inst.a.nnz()
    );
    Ok(())
}

fn request(m: &RunManifest, inputs: &Inputs) -> SolveRequest {
    let scale = if m.relative() { linalg::norm2(&inputs.b) } else { 1.0 };
    SolveRequest {
        a: Arc::new(inputs.a.clone()),
        b: inputs.b.clone(),
        stats: None,
        reg: m.reg(),
        lambda: m.lambda(),
        prior: inputs.prior.clone(),
        mass: m.mass,
        epsilon: m.eps() * scale,
        epsilon_tilde: m.eps_tilde() * scale,
        k_schedule: m.k_schedule(),
        restarts: m.restarts.unwrap_or(false),
        config: m.solver_config(),
    }
}

fn score(inputs: &Inputs, x: &[f64]) -> Result<Option<Metrics>> {
    inputs.x_true.as_ref().map(|t| metrics(x, &inputs.a, &inputs.b, t)).transpose().map_err(Into::into)
}

/// Regression objective of the request at `x`, when `x` is in its domain.
fn final_objective(req: &SolveRequest, x: &[f64]) -> Option<f64> {
    req.problem().ok()?.objective(x).ok()
}

#[derive(Serialize)]
struct Summary {
    solver: SolverId,
    converged: bool,
    iters: usize,
    flops: u64,
    wall_time_s: f64,
    objective: Option<f64>,
    lla: Option<f64>,
    da: Option<f64>,
}

/// Outputs of a failed run that still produced a best point.
fn partial_output(err: &Error) -> Option<SolverOutput> {
    match err {
        Error::RestartBudget { best, .. } => Some(SolverOutput::Primal((**best).clone())),
        Error::ProjectionBudget { best, .. } => Some(SolverOutput::Projection((**best).clone())),
        _ => None,
    }
}

fn write_outputs(m: &RunManifest, dir: &Path, out: &SolverOutput) -> Result<()> {
    std::fs::write(dir.join("report.json"), out.to_json()?)?;
    io::store_vector(dir.join("x.txt"), out.x())?;
    if m.trace.unwrap_or(false) {
        write_trace(&dir.join("trace.csv"), out)?;
    }
    Ok(())
}

pub fn solve(m: &RunManifest) -> Result<()> {
    let solver = m.solver()?;
    solver.check_supports(m.reg())?;
    m.require_seed(&[solver])?;
    let inputs = m.load_inputs()?;
    let req = request(m, &inputs);
    let dir = prepare_out_dir(m)?;
    m.write_echo(&dir)?;

    let started = Instant::now();
    let out = match req.run(solver) {
        Ok(out) => out,
        Err(e) => {
            if let Some(best) = partial_output(&e) {
                write_outputs(m, &dir, &best)?;
                log::error!("best point so far written to {}", dir.display());
            }
            return Err(e.into());
        }
    };
    let wall_time_s = started.elapsed().as_secs_f64();
    write_outputs(m, &dir, &out)?;
    let quality = score(&inputs, out.x())?;
    let summary = Summary {
        solver,
        converged: out.converged(),
        iters: out.iters(),
        flops: out.flops(),
        wall_time_s,
        objective: final_objective(&req, out.x()),
        lla: quality.map(|q| q.lla),
        da: quality.map(|q| q.da),
    };
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(dir.join("summary.json"), &text)?;
    println!("{text}");
    if !summary.converged {
        anyhow::bail!("{solver} stopped at {} iterations without reaching the target accuracy", summary.iters);
    }
    Ok(())
}

const MAX_WIDENINGS: usize = 6;

pub fn tune(m: &RunManifest) -> Result<()> {
    let eps_slater = m.eps_slater.ok_or_else(|| Rejected("--eps-slater is required".into()))?;
    let inputs = m.load_inputs()?;
    let scale = if m.relative() { linalg::norm2(&inputs.b) } else { 1.0 };
    let eps_slater = eps_slater * scale;
    let (lo, hi) = default_interval(eps_slater);
    let mut interval = (m.lambda_lo.unwrap_or(lo), m.lambda_hi.unwrap_or(hi));
    let proj = request(m, &inputs).projection()?;
    let dir = prepare_out_dir(m)?;
    m.write_echo(&dir)?;
    let cfg = m.solver_config();
    let mut res = tune_lambda(&proj, eps_slater, interval, &cfg)?;
    // the default interval ignores the scale of g; slide an unpinned end outwards
    for _ in 0..MAX_WIDENINGS {
        if !res.at_boundary {
            break;
        }
        let width = interval.1 / interval.0;
        let at_top = res.lambda_bar.ln() > (interval.0.ln() + interval.1.ln()) / 2.0;
        interval = match (at_top, m.lambda_lo, m.lambda_hi) {
            (true, _, None) => (interval.1, interval.1 * width),
            (false, None, _) => (interval.0 / width, interval.0),
            _ => break,
        };
        log::info!("retrying on [{:e}, {:e}]", interval.0, interval.1);
        res = tune_lambda(&proj, eps_slater, interval, &cfg)?;
    }
    std::fs::write(dir.join("tune.json"), serde_json::to_string_pretty(&res)?)?;
    io::store_vector(dir.join("x.txt"), &res.x)?;
    println!(
        "lambda_bar = {:.6e} after {} evaluations{}",
        res.lambda_bar,
        res.evaluations,
        if res.at_boundary { " (at the interval boundary)" } else { "" }
    );
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    solver: SolverId,
    status: String,
    iters: Option<usize>,
    flops: Option<u64>,
    wall_time_s: Option<f64>,
    final_f: Option<f64>,
    lla: Option<f64>,
    da: Option<f64>,
}

pub fn bench(m: &RunManifest) -> Result<()> {
    let solvers = m.bench_solvers();
    if solvers.is_empty() {
        return Err(Rejected(format!("no listed solver supports the {} regularizer", m.reg().name())).into());
    }
    m.require_seed(&solvers)?;
    let inputs = m.load_inputs()?;
    let req = request(m, &inputs);
    let dir = prepare_out_dir(m)?;
    let echo = RunManifest { solvers: Some(solvers.clone()), ..m.clone() };
    echo.write_echo(&dir)?;

    let path = dir.join("bench.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for solver in solvers {
        let started = Instant::now();
        let row = match req.run(solver) {
            Ok(out) => {
                let q = score(&inputs, out.x())?;
                BenchRow {
                    solver,
                    status: if out.converged() { "ok" } else { "max_iters" }.into(),
                    iters: Some(out.iters()),
                    flops: Some(out.flops()),
                    wall_time_s: Some(started.elapsed().as_secs_f64()),
                    final_f: final_objective(&req, out.x()),
                    lla: q.map(|q| q.lla),
                    da: q.map(|q| q.da),
                }
            }
            Err(e) => {
                log::warn!("{solver} failed: {e}");
                BenchRow {
                    solver,
                    status: e.to_string(),
                    iters: None,
                    flops: None,
                    wall_time_s: Some(started.elapsed().as_secs_f64()),
                    final_f: None,
                    lla: None,
                    da: None,
                }
            }
        };
        w.serialize(&row)?;
    }
    w.flush()?;
    print!("{}", std::fs::read_to_string(&path)?);
    Ok(())
}

pub fn eval(m: &RunManifest) -> Result<()> {
    let x_path = m.x.clone().ok_or_else(|| Rejected("--x is required".into()))?;
    let inputs = m.load_inputs()?;
    let truth = inputs.x_true.as_ref().ok_or_else(|| Rejected("no ground truth: pass --truth".into()))?;
    let x = io::load_vector(&x_path).with_context(|| format!("reading {}", x_path.display()))?;
    let q = metrics(&x, &inputs.a, &inputs.b, truth).map_err(|e| Rejected(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&q)?);
    Ok(())
}
