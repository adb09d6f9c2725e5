use serde::{Deserialize, Serialize};

use super::SyntheticInstance;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::RouteMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `||Ax - b|| / ||b||`.
    pub lla: f64,
    /// `||x - x_true|| / ||x_true||`.
    pub da: f64,
}

pub fn metrics(x: &[f64], a: &RouteMatrix, b: &[f64], x_true: &[f64]) -> Result<Metrics> {
    if x.len() != x_true.len() {
        return Err(Error::dim("x", x_true.len(), x.len()));
    }
    if b.len() != a.rows() {
        return Err(Error::dim("b", a.rows(), b.len()));
    }
    let nb = linalg::norm2(b);
    let nx = linalg::norm2(x_true);
    if nb == 0.0 || nx == 0.0 {
        return Err(Error::invalid("metrics need nonzero ||b|| and ||x_true||"));
    }
    let ax = a.matvec(x)?;
    Ok(Metrics { lla: linalg::dist2(&ax, b) / nb, da: linalg::dist2(x, x_true) / nx })
}

impl SyntheticInstance {
    pub fn metrics(&self, x: &[f64]) -> Result<Metrics> {
        metrics(x, &self.a, &self.b, &self.x_true)
    }
}
