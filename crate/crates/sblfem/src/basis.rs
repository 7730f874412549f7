//! Hierarchical shape functions on the reference element [-1, 1].
//!
//! The basis is the two linear nodal modes N0 = (1-xi)/2, N1 = (1+xi)/2
//! plus the integrated Legendre internal modes
//!
//!   psi_i(xi) = sqrt((2i-1)/2) * integral_{-1}^{xi} P_{i-1}(t) dt
//!             = (P_i(xi) - P_{i-2}(xi)) / sqrt(2(2i-1)),   i = 2..p,
//!
//! which vanish at both endpoints and have orthonormal derivatives,
//! int psi_i' psi_j' = delta_ij. Raising p extends the basis without
//! changing existing modes.

/// Values and derivatives of P_0..P_n at `xi` by the three-term recurrence
/// (k+1) P_{k+1} = (2k+1) xi P_k - k P_{k-1} and the companion derivative
/// recurrence P'_{k+1} = P'_{k-1} + (2k+1) P_k.
pub fn legendre_eval(n: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = xi;
        dp[1] = 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * xi * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
    }
    (p, dp)
}

/// Basis evaluation at a single reference point: `values[m]` and
/// `derivatives[m]` for m = 0..=p in the order N0, N1, psi_2, .., psi_p.
#[derive(Debug, Clone)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

/// The degree-p shape set. Evaluation is reentrant; the set carries no state
/// beyond the degree.
#[derive(Debug, Clone, Copy)]
pub struct ShapeSet {
    p: usize,
}

impl ShapeSet {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1, "shape set needs degree >= 1");
        ShapeSet { p }
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    /// All p+1 values and xi-derivatives at `xi`.
    pub fn eval(&self, xi: f64) -> ShapeValues {
        shape_functions(self.p, xi)
    }
}

/// Free-function form of [`ShapeSet::eval`].
pub fn shape_functions(p: usize, xi: f64) -> ShapeValues {
    assert!(p >= 1, "shape functions need degree >= 1");
    let (leg, _) = legendre_eval(p, xi);
    let mut values = vec![0.0; p + 1];
    let mut derivatives = vec![0.0; p + 1];
    values[0] = (1.0 - xi) / 2.0;
    values[1] = (1.0 + xi) / 2.0;
    derivatives[0] = -0.5;
    derivatives[1] = 0.5;
    for i in 2..=p {
        let two_i_minus_1 = (2 * i - 1) as f64;
        values[i] = (leg[i] - leg[i - 2]) / (2.0 * two_i_minus_1).sqrt();
        derivatives[i] = (two_i_minus_1 / 2.0).sqrt() * leg[i - 1];
    }
    ShapeValues {
        values,
        derivatives,
    }
}
