//! Problem definitions: the two-parameter boundary value problem
//!
//!   -eps1 u'' + eps2 b(x) u' + c(x) u = f(x)  on (0,1),  u(0) = u(1) = 0,
//!
//! its data assumptions, the layer parameters mu0 and mu1 that drive the mesh,
//! regime classification by eps1/eps2^2, and the closed-form solution for
//! constant coefficients.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default number of sampling points for infima over [0,1].
pub const DEFAULT_SAMPLE_COUNT: usize = 1024;

type CoeffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coefficient function on [0,1] with first-derivative access. Constant
/// coefficients remember their value so the closed-form solution can detect
/// applicability.
#[derive(Clone)]
pub struct Coefficient {
    value: CoeffFn,
    derivative: CoeffFn,
    constant: Option<f64>,
}

impl Coefficient {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Coefficient {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            constant: None,
        }
    }

    pub fn constant(v: f64) -> Self {
        Coefficient {
            value: Arc::new(move |_| v),
            derivative: Arc::new(|_| 0.0),
            constant: Some(v),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// The constant value if this coefficient was built with [`Coefficient::constant`].
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(v) => write!(f, "Coefficient::constant({v})"),
            None => write!(f, "Coefficient(fn)"),
        }
    }
}

/// One BVP instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub eps1: f64,
    pub eps2: f64,
    pub b: Coefficient,
    pub c: Coefficient,
    pub f: Coefficient,
    pub name: String,
}

impl ProblemSpec {
    /// Validated construction: requires 0 < eps1 <= eps2 <= 1.
    pub fn new(
        eps1: f64,
        eps2: f64,
        b: Coefficient,
        c: Coefficient,
        f: Coefficient,
        name: impl Into<String>,
    ) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 <= 1.0) || !eps1.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "eps1 = {eps1} outside (0, 1]"
            )));
        }
        if !(eps2 > 0.0 && eps2 <= 1.0) || !eps2.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "eps2 = {eps2} outside (0, 1]"
            )));
        }
        if eps1 > eps2 {
            return Err(Error::InvalidProblem(format!(
                "eps1 = {eps1} exceeds eps2 = {eps2}"
            )));
        }
        Ok(Self::unchecked(eps1, eps2, b, c, f, name))
    }

    /// Construction without parameter validation. Intended for diagnostics and
    /// tests that exercise degenerate settings (eps2 = 0, pure diffusion, ...).
    pub fn unchecked(
        eps1: f64,
        eps2: f64,
        b: Coefficient,
        c: Coefficient,
        f: Coefficient,
        name: impl Into<String>,
    ) -> Self {
        ProblemSpec {
            eps1,
            eps2,
            b,
            c,
            f,
            name: name.into(),
        }
    }

    /// Registry problem "example1": b = c = f = 1.
    pub fn example1(eps1: f64, eps2: f64) -> Result<Self> {
        ProblemSpec::new(
            eps1,
            eps2,
            Coefficient::constant(1.0),
            Coefficient::constant(1.0),
            Coefficient::constant(1.0),
            "example1",
        )
    }

    /// Registry problem "example2": b = e^x, c = x, f = 1. Note c(0) = 0, so
    /// the data assumptions fail at the left endpoint; validation reports this
    /// and the solver still runs (advisory handling for registry problems).
    pub fn example2(eps1: f64, eps2: f64) -> Result<Self> {
        ProblemSpec::new(
            eps1,
            eps2,
            Coefficient::new(f64::exp, f64::exp),
            Coefficient::new(|x| x, |_| 1.0),
            Coefficient::constant(1.0),
            "example2",
        )
    }

    /// Look up a registry problem by name.
    pub fn registry(name: &str, eps1: f64, eps2: f64) -> Result<Self> {
        match name {
            "example1" => ProblemSpec::example1(eps1, eps2),
            "example2" => ProblemSpec::example2(eps1, eps2),
            other => Err(Error::InvalidParameter(format!(
                "unknown registry problem {other:?} (have: example1, example2)"
            ))),
        }
    }
}

/// Infima of the data-assumption quantities, estimated on a uniform grid.
#[derive(Debug, Clone, Copy)]
pub struct DataConstants {
    /// inf b
    pub beta: f64,
    /// inf c
    pub gamma: f64,
    /// inf of c - (eps2/2) b'
    pub rho: f64,
    pub sample_count: usize,
}

/// Samples b, c and c - (eps2/2) b' on a uniform grid of `sample_count`
/// points including both endpoints, and accepts the problem iff all three
/// infima are strictly positive.
pub fn validate_assumptions(problem: &ProblemSpec, sample_count: usize) -> Result<DataConstants> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample_count = {sample_count} below 2"
        )));
    }
    let mut beta = f64::INFINITY;
    let mut gamma = f64::INFINITY;
    let mut rho = f64::INFINITY;
    let mut beta_arg = 0.0;
    let mut gamma_arg = 0.0;
    let mut rho_arg = 0.0;
    let n = sample_count;
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let bx = problem.b.eval(x);
        let cx = problem.c.eval(x);
        let dbx = problem.b.deriv(x);
        if !bx.is_finite() || !cx.is_finite() || !dbx.is_finite() {
            return Err(Error::NonFiniteSample(format!(
                "b, c or b' at x = {x} in problem {:?}",
                problem.name
            )));
        }
        let rx = cx - (problem.eps2 / 2.0) * dbx;
        if bx < beta {
            beta = bx;
            beta_arg = x;
        }
        if cx < gamma {
            gamma = cx;
            gamma_arg = x;
        }
        if rx < rho {
            rho = rx;
            rho_arg = x;
        }
    }
    if beta <= 0.0 {
        return Err(Error::AssumptionViolated {
            inequality: "inf b > 0",
            x: beta_arg,
            value: beta,
        });
    }
    if gamma <= 0.0 {
        return Err(Error::AssumptionViolated {
            inequality: "inf c > 0",
            x: gamma_arg,
            value: gamma,
        });
    }
    if rho <= 0.0 {
        return Err(Error::AssumptionViolated {
            inequality: "inf c - (eps2/2) b' > 0",
            x: rho_arg,
            value: rho,
        });
    }
    Ok(DataConstants {
        beta,
        gamma,
        rho,
        sample_count,
    })
}

/// Classification of (eps1, eps2) by r = eps1/eps2^2. Reporting only; mesh
/// construction never consults it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// r < 0.1 (covers the convection-diffusion limit eps2 = 1 as well).
    ConvectionReactionDiffusion,
    /// 0.1 <= r <= 10, the eps1 ~ eps2^2 band.
    TransitionBand,
    /// r > 10.
    ReactionDiffusion,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::ConvectionReactionDiffusion => "convection-reaction-diffusion",
            Regime::TransitionBand => "transition",
            Regime::ReactionDiffusion => "reaction-diffusion",
        };
        f.write_str(s)
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convection-reaction-diffusion" => Ok(Regime::ConvectionReactionDiffusion),
            "transition" => Ok(Regime::TransitionBand),
            "reaction-diffusion" => Ok(Regime::ReactionDiffusion),
            other => Err(Error::InvalidParameter(format!(
                "unknown regime tag {other:?}"
            ))),
        }
    }
}

/// Returns the regime tag and the ratio r = eps1/eps2^2.
pub fn classify_regime(eps1: f64, eps2: f64) -> (Regime, f64) {
    let r = eps1 / (eps2 * eps2);
    let regime = if r < 0.1 {
        Regime::ConvectionReactionDiffusion
    } else if r > 10.0 {
        Regime::ReactionDiffusion
    } else {
        Regime::TransitionBand
    };
    (regime, r)
}

/// Layer parameters: mu0 and mu1 are the minima over [0,1] of the negative
/// and positive characteristic roots
///
///   mu0 = min_x 2c / (eps2 b + sqrt(eps2^2 b^2 + 4 eps1 c)),
///   mu1 = min_x (eps2 b + sqrt(eps2^2 b^2 + 4 eps1 c)) / (2 eps1).
///
/// The mu0 form is the rationalized one; the textbook numerator
/// -eps2 b + sqrt(...) cancels catastrophically when eps1 << eps2^2.
#[derive(Debug, Clone, Copy)]
pub struct LayerParameters {
    pub mu0: f64,
    pub mu1: f64,
    /// x at which the mu0 minimum is attained.
    pub argmin_mu0: f64,
    /// x at which the mu1 minimum is attained.
    pub argmin_mu1: f64,
    pub regime: Regime,
    /// eps1 / eps2^2
    pub ratio: f64,
}

impl LayerParameters {
    /// True when the computed mu0 is zero, which happens exactly for data
    /// violating inf c > 0 (e.g. the registry problem "example2" with
    /// c(0) = 0). Downstream mesh construction still works: the left layer
    /// width kappa*p/mu0 becomes infinite and the mesh falls back to the
    /// branches that do not resolve a left layer.
    pub fn is_degenerate(&self) -> bool {
        self.mu0 <= 0.0
    }

    #[cfg(test)]
    pub(crate) fn synthetic(mu0: f64, mu1: f64) -> Self {
        LayerParameters {
            mu0,
            mu1,
            argmin_mu0: 0.0,
            argmin_mu1: 0.0,
            regime: Regime::TransitionBand,
            ratio: 1.0,
        }
    }
}

/// Golden-section minimization of `g` on [lo, hi] down to interval width
/// 1e-10 (the domain is [0,1], so absolute and relative agree here).
fn golden_min(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.6180339887498949;
    let tol = 1e-10;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, g(xm))
}

/// Minimum of `g` over [0,1]: dense sampling on `samples` uniform points
/// (endpoints included) followed by golden-section refinement on the
/// bracketing interval. Returns (argmin, min).
fn minimize_on_unit_interval(g: impl Fn(f64) -> f64, samples: usize) -> Result<(f64, f64)> {
    let n = samples.max(2);
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    let grid = |i: usize| i as f64 / (n - 1) as f64;
    for i in 0..n {
        let v = g(grid(i));
        if !v.is_finite() {
            return Err(Error::NonFiniteSample(format!(
                "characteristic root at x = {}",
                grid(i)
            )));
        }
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { 0.0 } else { grid(best_i - 1) };
    let hi = if best_i == n - 1 {
        1.0
    } else {
        grid(best_i + 1)
    };
    let (xr, vr) = golden_min(&g, lo, hi);
    if vr < best {
        Ok((xr, vr))
    } else {
        Ok((grid(best_i), best))
    }
}

/// Computes [`LayerParameters`] for a problem. The problem should have been
/// run through [`validate_assumptions`] first; for registry problems a
/// violation is advisory and this function still returns the literal result
/// (mu0 = 0 when inf c = 0, see [`LayerParameters::is_degenerate`]).
pub fn compute_layer_parameters(
    problem: &ProblemSpec,
    sample_count: usize,
) -> Result<LayerParameters> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample_count = {sample_count} below 2"
        )));
    }
    let eps1 = problem.eps1;
    let eps2 = problem.eps2;
    let disc = |x: f64| -> Result<f64> {
        let bx = problem.b.eval(x);
        let cx = problem.c.eval(x);
        if !bx.is_finite() || !cx.is_finite() {
            return Err(Error::NonFiniteSample(format!("b or c at x = {x}")));
        }
        let d = eps2 * eps2 * bx * bx + 4.0 * eps1 * cx;
        if d < 0.0 {
            return Err(Error::InvalidProblem(format!(
                "negative discriminant eps2^2 b^2 + 4 eps1 c = {d} at x = {x}"
            )));
        }
        Ok(d)
    };
    // Probe the grid once so data errors surface as errors rather than as
    // infinities inside the minimizer.
    for i in 0..sample_count {
        let x = i as f64 / (sample_count - 1) as f64;
        disc(x)?;
    }
    let g0 = |x: f64| {
        let bx = problem.b.eval(x);
        let cx = problem.c.eval(x);
        let s = (eps2 * eps2 * bx * bx + 4.0 * eps1 * cx).sqrt();
        2.0 * cx / (eps2 * bx + s)
    };
    let g1 = |x: f64| {
        let bx = problem.b.eval(x);
        let cx = problem.c.eval(x);
        let s = (eps2 * eps2 * bx * bx + 4.0 * eps1 * cx).sqrt();
        (eps2 * bx + s) / (2.0 * eps1)
    };
    let (argmin_mu0, mu0) = minimize_on_unit_interval(g0, sample_count)?;
    let (argmin_mu1, mu1) = minimize_on_unit_interval(g1, sample_count)?;
    if !mu0.is_finite() || !mu1.is_finite() || mu1 <= 0.0 || mu0 < 0.0 {
        return Err(Error::InvalidProblem(format!(
            "layer parameters out of range: mu0 = {mu0}, mu1 = {mu1}"
        )));
    }
    if mu0 > mu1 {
        return Err(Error::InvalidProblem(format!(
            "mu0 = {mu0} exceeds mu1 = {mu1}; data violates the root ordering"
        )));
    }
    let (regime, ratio) = classify_regime(eps1, eps2);
    Ok(LayerParameters {
        mu0,
        mu1,
        argmin_mu0,
        argmin_mu1,
        regime,
        ratio,
    })
}

/// Closed-form solution for constant b, c, f:
///
///   u(x) = f/c + A e^{lambda0 x} + B' e^{lambda1 (x-1)}
///
/// in the shifted parameterization whose exponential arguments are <= 0 for
/// all x in [0,1], so nothing overflows even for lambda1 ~ 1e12.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormSolution {
    pub lambda0: f64,
    pub lambda1: f64,
    pub coef_a: f64,
    pub coef_b_shift: f64,
    pub particular: f64,
}

impl ClosedFormSolution {
    pub fn value(&self, x: f64) -> f64 {
        self.particular
            + self.coef_a * (self.lambda0 * x).exp()
            + self.coef_b_shift * (self.lambda1 * (x - 1.0)).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coef_a * self.lambda0 * (self.lambda0 * x).exp()
            + self.coef_b_shift * self.lambda1 * (self.lambda1 * (x - 1.0)).exp()
    }

    pub fn eval(&self, x: f64) -> (f64, f64) {
        (self.value(x), self.derivative(x))
    }
}

/// Builds the closed form for a constant-coefficient problem. Roots of
/// -eps1 L^2 + eps2 b L + c = 0; lambda0 uses the rationalized expression for
/// the same reason as mu0.
pub fn constant_coefficient_exact(problem: &ProblemSpec) -> Result<ClosedFormSolution> {
    let (b, c, f) = match (
        problem.b.as_constant(),
        problem.c.as_constant(),
        problem.f.as_constant(),
    ) {
        (Some(b), Some(c), Some(f)) => (b, c, f),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "problem {:?} does not have constant coefficients",
                problem.name
            )))
        }
    };
    if c == 0.0 {
        return Err(Error::InvalidParameter(
            "constant-coefficient closed form needs c != 0".into(),
        ));
    }
    let eps1 = problem.eps1;
    let eps2 = problem.eps2;
    let s = (eps2 * eps2 * b * b + 4.0 * eps1 * c).sqrt();
    let lambda0 = -2.0 * c / (eps2 * b + s);
    let lambda1 = (eps2 * b + s) / (2.0 * eps1);
    let particular = f / c;
    // Boundary system in the shifted unknowns A, B':
    //   A + B' e^{-lambda1}  = -f/c
    //   A e^{lambda0} + B'   = -f/c
    let d = 1.0 - (lambda0 - lambda1).exp();
    let coef_a = -particular * (1.0 - (-lambda1).exp()) / d;
    let coef_b_shift = -particular * (1.0 - lambda0.exp()) / d;
    Ok(ClosedFormSolution {
        lambda0,
        lambda1,
        coef_a,
        coef_b_shift,
        particular,
    })
}
