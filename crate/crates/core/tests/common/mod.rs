#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmest::problem::{ProblemInstance, ProjectionInstance, Regularizer};
use tmest::RouteMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pattern where every column has between 1 and `max_col` entries.
pub fn random_pattern(rng: &mut ChaCha8Rng, m: usize, n: usize, max_col: usize) -> RouteMatrix {
    let cols = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_col.min(m));
            let mut rows: Vec<usize> = rand::seq::index::sample(rng, m, k).into_vec();
            rows.sort_unstable();
            rows
        })
        .collect();
    RouteMatrix::from_columns(m, cols).unwrap()
}

/// Random pattern with independent entries of probability `p` (empty rows and columns allowed).
pub fn bernoulli_pattern(rng: &mut ChaCha8Rng, m: usize, n: usize, p: f64) -> RouteMatrix {
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if rng.gen_bool(p) {
                entries.push((i, j));
            }
        }
    }
    RouteMatrix::from_entries(m, n, &entries).unwrap()
}

pub fn dense(a: &RouteMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for j in 0..a.cols() {
        for &i in a.col(j) {
            d[(i, j)] = 1.0;
        }
    }
    d
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Dense solve of the unconstrained ridge normal equations.
pub fn ridge_dense_solution(a: &RouteMatrix, b: &[f64], lambda: f64, prior: &[f64]) -> Vec<f64> {
    let d = dense(a);
    let n = a.cols();
    let h = d.transpose() * &d + DMatrix::identity(n, n) * (2.0 * lambda);
    let rhs = d.transpose() * DVector::from_column_slice(b) + DVector::from_column_slice(prior) * (2.0 * lambda);
    h.lu().solve(&rhs).expect("nonsingular").as_slice().to_vec()
}

/// Projected Gauss-Seidel on the dense ridge quadratic over `x >= 0`, run to
/// stationarity. Independent of every library solver.
pub fn ridge_nonneg_oracle(a: &RouteMatrix, b: &[f64], lambda: f64, prior: &[f64]) -> Vec<f64> {
    let d = dense(a);
    let n = a.cols();
    let h = d.transpose() * &d + DMatrix::identity(n, n) * (2.0 * lambda);
    let c = d.transpose() * DVector::from_column_slice(b) + DVector::from_column_slice(prior) * (2.0 * lambda);
    let mut x = DVector::from_column_slice(prior);
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for k in 0..n {
            let hk = h[(k, k)];
            if hk <= 0.0 {
                continue;
            }
            let g = (h.row(k) * &x)[0] - c[k];
            let new = (x[k] - g / hk).max(0.0);
            change = change.max((new - x[k]).abs());
            x[k] = new;
        }
        if change < 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    x.as_slice().to_vec()
}

/// Ridge instance whose unconstrained minimizer is strictly positive.
pub struct RidgeCase {
    pub inst: ProblemInstance,
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

pub fn interior_ridge(seed: u64, m: usize, n: usize, lambda: f64) -> RidgeCase {
    let mut r = rng(seed);
    loop {
        let a = random_pattern(&mut r, m, n, 4);
        let x_true = uniform_vec(&mut r, n, 1.0, 3.0);
        let mut b = a.matvec(&x_true).unwrap();
        for bi in &mut b {
            *bi += r.gen_range(-0.3..0.3);
        }
        let prior = uniform_vec(&mut r, n, 1.0, 3.0);
        let x_star = ridge_dense_solution(&a, &b, lambda, &prior);
        if x_star.iter().all(|&v| v > 1e-3) {
            let inst = ProblemInstance::new(Arc::new(a), b, Regularizer::ridge(lambda, prior).unwrap()).unwrap();
            let f_star = inst.objective(&x_star).unwrap();
            return RidgeCase { inst, x_star, f_star };
        }
    }
}

/// Ridge instance with active nonnegativity constraints at the optimum.
pub fn clamped_ridge(seed: u64, m: usize, n: usize, lambda: f64) -> RidgeCase {
    let mut r = rng(seed);
    let a = random_pattern(&mut r, m, n, 3);
    let b = uniform_vec(&mut r, m, -1.0, 3.0);
    let prior = uniform_vec(&mut r, n, 0.0, 1.0);
    let x_star = ridge_nonneg_oracle(&a, &b, lambda, &prior);
    let inst = ProblemInstance::new(Arc::new(a), b, Regularizer::ridge(lambda, prior).unwrap()).unwrap();
    let f_star = inst.objective(&x_star).unwrap();
    RidgeCase { inst, x_star, f_star }
}

/// Least-squares slope of `ln y` against `ln k` over the given pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(k, y)| (k.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// KL projection oracle: Newton's method on the dense dual of
/// `min sum x ln(x / xg)` over `sum x = R`, `Ax = b`, run to machine precision.
pub fn entropy_projection_oracle(a: &RouteMatrix, b: &[f64], prior: &[f64], mass: f64) -> Vec<f64> {
    // constraints stacked as [A; 1^T] z = [b; R]; x(y) = xg * exp(-(C^T y) - 1)
    let d = dense(a);
    let (m, n) = (a.rows(), a.cols());
    let mut c = DMatrix::zeros(m + 1, n);
    c.view_mut((0, 0), (m, n)).copy_from(&d);
    for j in 0..n {
        c[(m, j)] = 1.0;
    }
    let rhs = DVector::from_column_slice(b).push(mass);
    let mut y = DVector::zeros(m + 1);
    let x_of = |y: &DVector<f64>| -> DVector<f64> {
        let s = c.transpose() * y;
        DVector::from_iterator(n, (0..n).map(|j| prior[j] * (-s[j] - 1.0).exp()))
    };
    for _ in 0..200 {
        let x = x_of(&y);
        // dual (concave) gradient: C x - rhs with sign flipped; Hessian -C diag(x) C^T
        let g = &c * &x - &rhs;
        if g.amax() < 1e-13 * (1.0 + rhs.amax()) {
            break;
        }
        let mut h = DMatrix::zeros(m + 1, m + 1);
        for j in 0..n {
            let col = c.column(j);
            h += col * col.transpose() * x[j];
        }
        h += DMatrix::identity(m + 1, m + 1) * 1e-14;
        let step = h.clone().svd(true, true).solve(&g, 1e-12).unwrap();
        // damped Newton on the convex function psi(y) = sum x(y) + <y, rhs>
        let psi = |y: &DVector<f64>| x_of(y).sum() + y.dot(&rhs);
        let mut t = 1.0;
        let p0 = psi(&y);
        loop {
            let cand = &y + &step * t;
            if psi(&cand) <= p0 - 1e-4 * t * g.dot(&step) || t < 1e-12 {
                y = cand;
                break;
            }
            t *= 0.5;
        }
    }
    x_of(&y).as_slice().to_vec()
}

/// Ridge projection instance with full row rank and an interior solution,
/// together with its exact primal and dual solutions.
pub struct RidgeProjection {
    pub proj: ProjectionInstance,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
}

/// Equality-constrained least distance: x* = xg - A^T y*/2 with
/// A A^T y* = 2 (A xg - b). Valid when x* > 0.
pub fn ridge_projection(seed: u64, m: usize, n: usize) -> RidgeProjection {
    let mut r = rng(seed);
    loop {
        let a = random_pattern(&mut r, m, n, 3);
        let d = dense(&a);
        let aat = &d * d.transpose();
        if aat.clone().lu().determinant().abs() < 1e-6 {
            continue;
        }
        let x_true = uniform_vec(&mut r, n, 1.0, 2.0);
        let b = a.matvec(&x_true).unwrap();
        let prior = uniform_vec(&mut r, n, 1.0, 2.0);
        let rhs = (&d * DVector::from_column_slice(&prior) - DVector::from_column_slice(&b)) * 2.0;
        let y = aat.lu().solve(&rhs).unwrap();
        let x = DVector::from_column_slice(&prior) - d.transpose() * &y * 0.5;
        if x.iter().all(|&v| v > 1e-2) {
            let proj = ProjectionInstance::ridge(Arc::new(a), b, prior).unwrap();
            return RidgeProjection { proj, x_star: x.as_slice().to_vec(), y_star: y.as_slice().to_vec() };
        }
    }
}
