//! Run manifests: every setting a command needs, merged from flags, an
//! optional JSON config file and defaults, and echoed next to the outputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tmest::harness::fitted_uniform_prior;
use tmest::primal::SolverConfig;
use tmest::{io, RegKind, RouteMatrix, SolverId};

use crate::Rejected;

pub const OUT_DIR_ENV: &str = "TMEST_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "tmest-out";

/// One invocation's settings. Every field is optional so a config file can
/// carry any subset; `resolve` fills in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub command: Option<String>,

    // topology
    pub nodes: Option<usize>,
    pub links: Option<usize>,
    pub demand_lo: Option<f64>,
    pub demand_hi: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub star: Option<bool>,

    // inputs
    pub instance: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub loads: Option<PathBuf>,
    pub prior: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub x: Option<PathBuf>,

    // solver
    pub solver: Option<SolverId>,
    pub solvers: Option<Vec<SolverId>>,
    pub reg: Option<RegKind>,
    pub lambda: Option<f64>,
    pub mass: Option<f64>,
    pub eps: Option<f64>,
    pub eps_tilde: Option<f64>,
    pub relative: Option<bool>,
    pub k_schedule: Option<Vec<f64>>,
    pub restarts: Option<bool>,
    pub max_iters: Option<usize>,
    pub r2_init: Option<f64>,
    pub r_tilde_init: Option<f64>,
    pub eps_slater: Option<f64>,
    pub lambda_lo: Option<f64>,
    pub lambda_hi: Option<f64>,
    pub trace: Option<bool>,

    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident: $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| Rejected(format!("config {}: {e}", path.display())).into())
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: RunManifest) -> Self {
        overlay!(self, top: command, nodes, links, demand_lo, demand_hi, noise_sigma, star, instance, matrix,
            loads, prior, truth, x, solver, solvers, reg, lambda, mass, eps, eps_tilde, relative, k_schedule,
            restarts, max_iters, r2_init, r_tilde_init, eps_slater, lambda_lo, lambda_hi, trace, seed, out_dir);
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
        })
    }

    pub fn reg(&self) -> RegKind {
        self.reg.unwrap_or(RegKind::Entropy)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(1.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(0.01)
    }

    /// Defaults to `eps`.
    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde.unwrap_or_else(|| self.eps())
    }

    pub fn relative(&self) -> bool {
        self.relative.unwrap_or(false)
    }

    pub fn k_schedule(&self) -> Vec<f64> {
        self.k_schedule.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4])
    }

    pub fn solver(&self) -> Result<SolverId> {
        self.solver.ok_or_else(|| Rejected("no solver given (use --solver)".into()).into())
    }

    /// Solver ids for bench: the given list restricted to what the
    /// regularizer supports, or every applicable solver.
    pub fn bench_solvers(&self) -> Vec<SolverId> {
        let reg = self.reg();
        match &self.solvers {
            Some(list) => list
                .iter()
                .copied()
                .filter(|s| match s.check_supports(reg) {
                    Ok(()) => true,
                    Err(e) => {
                        log::warn!("skipping {s}: {e}");
                        false
                    }
                })
                .collect(),
            None => SolverId::applicable(reg),
        }
    }

    /// Randomized solvers need an explicit seed.
    pub fn require_seed(&self, solvers: &[SolverId]) -> Result<()> {
        if self.seed.is_none() {
            if let Some(s) = solvers.iter().find(|s| s.is_randomized()) {
                return Err(Rejected(format!("{s} is randomized: pass --seed or set `seed` in the config")).into());
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(e) = self.eps {
            cfg.epsilon = e;
        }
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.r2_init {
            cfg.r2_init = r;
        }
        if let Some(r) = self.r_tilde_init {
            cfg.r_tilde_init = r;
        }
        cfg
    }

    fn input_paths(&self) -> Result<(PathBuf, PathBuf, Option<PathBuf>)> {
        let (matrix, loads, truth) = match (&self.instance, &self.matrix, &self.loads) {
            (Some(dir), None, None) => {
                let truth = dir.join("x_true.txt");
                (dir.join("route.mtx"), dir.join("b.txt"), truth.exists().then_some(truth))
            }
            (None, Some(m), Some(b)) => (m.clone(), b.clone(), None),
            _ => {
                return Err(Rejected("give either --instance DIR or both --matrix and --loads".into()).into());
            }
        };
        let truth = self.truth.clone().or(truth);
        for p in [Some(&matrix), Some(&loads), truth.as_ref(), self.prior.as_ref(), self.x.as_ref()]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Rejected(format!("input file {} does not exist", p.display())).into());
            }
        }
        Ok((matrix, loads, truth))
    }

    /// Reads the instance files named by the manifest.
    pub fn load_inputs(&self) -> Result<Inputs> {
        let (matrix, loads, truth) = self.input_paths()?;
        let a = RouteMatrix::load_pattern(&matrix).with_context(|| format!("reading {}", matrix.display()))?;
        let b = io::load_vector(&loads).with_context(|| format!("reading {}", loads.display()))?;
        let x_true = truth
            .map(|p| io::load_vector(&p).with_context(|| format!("reading {}", p.display())))
            .transpose()?;
        let prior = match &self.prior {
            Some(p) => io::load_vector(p).with_context(|| format!("reading {}", p.display()))?,
            None => fitted_uniform_prior(&a, &b)
                .ok_or_else(|| Rejected("cannot fit a uniform prior to these loads; pass --prior".into()))?,
        };
        Ok(Inputs { a, b, prior, x_true })
    }

    /// Copy with defaults written out, so the echo reproduces the run on its own.
    pub fn resolved(&self) -> RunManifest {
        let mut m = self.clone();
        m.out_dir = Some(self.out_dir());
        m.reg = Some(self.reg());
        m.lambda = Some(self.lambda());
        m.eps = Some(self.eps());
        m.eps_tilde = Some(self.eps_tilde());
        m.relative = Some(self.relative());
        m.k_schedule = Some(self.k_schedule());
        let cfg = self.solver_config();
        m.max_iters = Some(cfg.max_iters);
        m.r2_init = Some(cfg.r2_init);
        m.r_tilde_init = Some(cfg.r_tilde_init);
        m.restarts = Some(self.restarts.unwrap_or(false));
        m.trace = Some(self.trace.unwrap_or(false));
        m
    }

    pub fn write_echo(&self, dir: &Path) -> Result<()> {
        let mut value = serde_json::to_value(self.resolved())?;
        if let serde_json::Value::Object(map) = &mut value {
            map.retain(|_, v| !v.is_null());
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&value)?)?;
        Ok(())
    }
}

pub struct Inputs {
    pub a: RouteMatrix,
    pub b: Vec<f64>,
    pub prior: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
}
