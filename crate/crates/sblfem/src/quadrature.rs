//! Gauss-Legendre quadrature on [-1, 1].

use crate::basis::legendre_eval;
use crate::error::{Error, Result};

/// An n-point Gauss-Legendre rule; exact for polynomials of degree 2n-1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

/// Construct the n-point rule. Nodes are the roots of P_n found by Newton
/// iteration from the Chebyshev initial guesses cos(pi(i + 3/4)/(n + 1/2));
/// weights are 2 / ((1 - x^2) P_n'(x)^2). Roots come out ascending, and the
/// rule is exactly symmetric because only the positive half is iterated.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=200).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "gauss rule size {n} outside 1..=200"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        // i-th root counting from the right end (largest root at i = 0).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        let mut dp_at_root = 0.0;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre_eval(n, x);
            let step = p[n] / dp[n];
            x -= step;
            if step.abs() <= NEWTON_TOL {
                dp_at_root = legendre_eval(n, x).1[n];
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidParameter(format!(
                "gauss rule size {n}: Newton iteration for node {i} did not converge"
            )));
        }
        let w = 2.0 / ((1.0 - x * x) * dp_at_root * dp_at_root);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let mid = n / 2;
        let dp = legendre_eval(n, 0.0).1[n];
        nodes[mid] = 0.0;
        weights[mid] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}
