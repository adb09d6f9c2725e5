use super::Regularizer;
use crate::error::{Error, Result};
use crate::linalg;

/// Conjugate of `sigma_k(z) = 1/2 (z - b_k)^2`: returns `(1/2 y^2 + b_k y, y + b_k)`,
/// the value and the maximizing `z`.
pub fn conjugate_sigma(b_k: f64, y: f64) -> (f64, f64) {
    (0.5 * y * y + b_k * y, y + b_k)
}

/// `g*(u) = max_{x in Q} <u, x> - g(x)` together with its maximizer.
pub fn conjugate_g(reg: &Regularizer, u: &[f64]) -> Result<(f64, Vec<f64>)> {
    match reg {
        Regularizer::Ridge { lambda, prior } => {
            if !(*lambda > 0.0) {
                return Err(Error::invalid("ridge conjugate needs lambda > 0"));
            }
            if u.len() != prior.len() {
                return Err(Error::dim("u", prior.len(), u.len()));
            }
            let mut value = 0.0;
            let x: Vec<f64> = u
                .iter()
                .zip(prior)
                .map(|(&uk, &gk)| {
                    let xk = (gk + uk / (2.0 * lambda)).max(0.0);
                    value += uk * xk - lambda * (xk - gk) * (xk - gk);
                    xk
                })
                .collect();
            Ok((value, x))
        }
        Regularizer::Entropy { lambda, prior, mass } => {
            if !(*lambda > 0.0) {
                return Err(Error::invalid("entropy conjugate needs lambda > 0"));
            }
            if u.len() != prior.len() {
                return Err(Error::dim("u", prior.len(), u.len()));
            }
            let logits: Vec<f64> = u.iter().zip(prior).map(|(uk, gk)| gk.ln() + uk / lambda).collect();
            let mut x = vec![0.0; u.len()];
            let lse = linalg::scaled_softmax(&logits, *mass, &mut x);
            Ok((lambda * mass * (lse - mass.ln()), x))
        }
        Regularizer::Lasso { .. } => Err(Error::Unsupported {
            solver: "conjugate_g",
            regularizer: "lasso",
            reason: "not applicable: the conjugate is an indicator, no explicit dual",
        }),
    }
}
