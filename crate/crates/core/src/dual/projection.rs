use std::time::Instant;

use super::{round_length, ProjectionReport, ProjectionRestart};
use crate::error::{Error, Result};
use crate::linalg;
use crate::primal::SolverConfig;
use crate::problem::ProjectionInstance;

/// State of one dual FGM round on `F(y) = -phi(y)`.
#[derive(Debug, Clone)]
pub struct DualState {
    /// Output sequence `y~_k`.
    pub y: Vec<f64>,
    /// Prox sequence.
    pub y_momentum: Vec<f64>,
    /// `x_k = (1/A_k) sum a_i x(y_i)`.
    pub x_avg: Vec<f64>,
    pub a: f64,
    pub a_sum: f64,
    /// `F(y~_k) + g(x_k)`.
    pub cert: f64,
    pub residual_norm: f64,
    pub r_tilde: f64,
    aty: Vec<f64>,
    aty_momentum: Vec<f64>,
    ax_avg: Vec<f64>,
}

impl DualState {
    fn new(m: usize, n: usize, r_tilde: f64) -> Self {
        DualState {
            y: vec![0.0; m],
            y_momentum: vec![0.0; m],
            x_avg: vec![0.0; n],
            a: 0.0,
            a_sum: 0.0,
            cert: f64::INFINITY,
            residual_norm: f64::INFINITY,
            r_tilde,
            aty: vec![0.0; n],
            aty_momentum: vec![0.0; n],
            ax_avg: vec![0.0; m],
        }
    }

    /// One iteration with weight `a = (k+1) / (2L)`. Returns the flop count.
    fn step(&mut self, proj: &ProjectionInstance, lip: f64, k: usize, scratch: &mut Scratch) -> Result<u64> {
        let (m, n) = (proj.m(), proj.n());
        let a = (k as f64 + 1.0) / (2.0 * lip);
        let an = self.a_sum + a;
        let (wo, wn) = (self.a_sum / an, a / an);

        for j in 0..n {
            scratch.aty_hat[j] = wo * self.aty[j] + wn * self.aty_momentum[j];
        }
        proj.inner_from_aty(&scratch.aty_hat, &mut scratch.x_hat);
        proj.a.matvec_into(&scratch.x_hat, &mut scratch.ax_hat)?;
        // grad F(y^) = b - A x(y^)
        for i in 0..m {
            self.y_momentum[i] += a * (scratch.ax_hat[i] - proj.b[i]);
        }
        proj.a.rmatvec_into(&self.y_momentum, &mut self.aty_momentum)?;
        for i in 0..m {
            self.y[i] = wo * self.y[i] + wn * self.y_momentum[i];
            self.ax_avg[i] = wo * self.ax_avg[i] + wn * scratch.ax_hat[i];
        }
        for j in 0..n {
            self.aty[j] = wo * self.aty[j] + wn * self.aty_momentum[j];
            self.x_avg[j] = wo * self.x_avg[j] + wn * scratch.x_hat[j];
        }
        self.a = a;
        self.a_sum = an;

        let inner = proj.inner_from_aty(&self.aty, &mut scratch.x_tilde);
        let f_dual = -(inner - linalg::dot(&self.y, &proj.b));
        self.cert = f_dual + proj.g(&self.x_avg);
        let mut rr = 0.0;
        for i in 0..m {
            let d = self.ax_avg[i] - proj.b[i];
            rr += d * d;
        }
        self.residual_norm = rr.sqrt();
        Ok(2 * proj.a.nnz() as u64 + 12 * n as u64 + 10 * m as u64)
    }
}

struct Scratch {
    aty_hat: Vec<f64>,
    x_hat: Vec<f64>,
    ax_hat: Vec<f64>,
    x_tilde: Vec<f64>,
}

/// FGM on the dual of `min g(x) s.t. Ax = b, x in Q`, with primal averaging
/// and radius-doubling restarts. Succeeds once `F(y~) + g(x) <= epsilon`,
/// `||Ax - b|| <= epsilon_tilde` and `||y~|| <= R~` hold together.
pub fn solve_projection_fgm(
    proj: &ProjectionInstance,
    epsilon: f64,
    epsilon_tilde: f64,
    cfg: &SolverConfig,
) -> Result<ProjectionReport> {
    if !(epsilon > 0.0) || !(epsilon_tilde > 0.0) {
        return Err(Error::invalid(format!(
            "accuracies must be > 0, got epsilon = {epsilon}, epsilon_tilde = {epsilon_tilde}"
        )));
    }
    if !(cfg.r_tilde_init > 0.0) {
        return Err(Error::invalid(format!("r_tilde_init must be > 0, got {}", cfg.r_tilde_init)));
    }
    let started = Instant::now();
    let (m, n) = (proj.m(), proj.n());
    let lip = proj.dual_lipschitz(cfg.lipschitz).max(1e-12);
    let mut report = ProjectionReport::default();
    let mut scratch = Scratch {
        aty_hat: vec![0.0; n],
        x_hat: vec![0.0; n],
        ax_hat: vec![0.0; m],
        x_tilde: vec![0.0; n],
    };
    let mut r_tilde = cfg.r_tilde_init;

    for _round in 0..cfg.max_restarts.max(1) {
        let budget = round_length(lip, r_tilde, epsilon, epsilon_tilde);
        let mut state = DualState::new(m, n, r_tilde);
        report.round_starts.push(report.cert_trace.len());
        let mut k = 0;
        let mut ok = false;
        while k < budget && report.iters < cfg.max_iters {
            report.flops += state.step(proj, lip, k, &mut scratch)?;
            k += 1;
            report.iters += 1;
            if !state.cert.is_finite() {
                return Err(Error::NonFinite { iter: report.iters, max_abs_x: linalg::max_abs(&state.x_avg) });
            }
            let y_norm = linalg::norm2(&state.y);
            ok = state.cert <= epsilon && state.residual_norm <= epsilon_tilde && y_norm <= r_tilde;
            if cfg.keep_trace(k) || ok || k == budget {
                report.cert_trace.push(state.cert);
                report.residual_trace.push(state.residual_norm);
                report.bound_trace.push(state.cert + 2.0 * r_tilde * state.residual_norm);
                report.trace_iters.push(k);
            }
            if ok {
                break;
            }
        }
        log::debug!(
            "dual fgm round: R~ = {r_tilde:.3e}, {k} iterations, gap {:.3e}, residual {:.3e}",
            state.cert,
            state.residual_norm
        );
        report.restarts.push(ProjectionRestart { radius: r_tilde, iters: k });
        report.x_final = state.x_avg;
        report.y_final = state.y;
        if ok {
            report.success = true;
            report.wall_time_s = started.elapsed().as_secs_f64();
            return Ok(report);
        }
        if report.iters >= cfg.max_iters {
            break;
        }
        r_tilde *= 2.0;
    }
    report.wall_time_s = started.elapsed().as_secs_f64();
    Err(Error::ProjectionBudget { iters: report.iters, best: Box::new(report) })
}
