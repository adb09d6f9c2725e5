use super::FeasibleSet;
use crate::linalg;

/// `max_{z in Q} <g, x - z> - mu/2 ||z - x||^2` in closed form.
///
/// On the orthant the maximization separates into one concave quadratic per
/// coordinate. On the simplex the maximizer is the Euclidean projection of
/// `x - g / mu`.
pub(crate) fn strong_convexity_gap(x: &[f64], g: &[f64], mu: f64, set: FeasibleSet) -> f64 {
    if g.iter().any(|v| v.is_nan() || v.is_infinite()) {
        return f64::INFINITY;
    }
    match set {
        FeasibleSet::Orthant => x
            .iter()
            .zip(g)
            .map(|(&xk, &gk)| {
                let z = xk - gk / mu;
                if z >= 0.0 {
                    gk * gk / (2.0 * mu)
                } else {
                    // boundary maximizer z = 0
                    gk * xk - 0.5 * mu * xk * xk
                }
            })
            .sum(),
        FeasibleSet::Simplex(mass) => {
            let shifted: Vec<f64> = x.iter().zip(g).map(|(xk, gk)| xk - gk / mu).collect();
            let z = linalg::project_simplex(&shifted, mass);
            let lin: f64 = g.iter().zip(x.iter().zip(&z)).map(|(gk, (xk, zk))| gk * (xk - zk)).sum();
            let quad = linalg::dist2(&z, x).powi(2);
            (lin - 0.5 * mu * quad).max(0.0)
        }
    }
}
