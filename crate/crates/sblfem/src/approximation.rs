//! Energy-norm evaluation on a layer-resolving composite quadrature, the
//! piecewise interpolation operator, and degree-doubled reference solutions
//! for problems without a closed form.
//!
//! The error integrand e^2 + eps1 (e')^2 can vary on scales down to 1/mu1
//! ~ 1e-12 inside elements of width O(1) (the one-element mesh in the
//! asymptotic range), so a fixed Gauss rule per element is useless. Each
//! element instead gets panels geometrically halved toward both endpoints,
//! with node positions computed as offsets from the nearest endpoint so the
//! deepest panels are placed to full precision.

use crate::assembly::{solve_on_mesh, DiscreteSolution};
use crate::basis::{legendre_eval, shape_functions};
use crate::error::{Error, Result};
use crate::mesh::{build_sbl_mesh, Mesh};
use crate::problem::{
    compute_layer_parameters, ClosedFormSolution, ProblemSpec, DEFAULT_SAMPLE_COUNT,
};
use crate::quadrature::{gauss_rule, QuadratureRule};

/// Anything that can report (value, derivative) at a point in [0, 1].
pub trait PointEval {
    fn eval_point(&self, x: f64) -> Result<(f64, f64)>;
}

impl<F> PointEval for F
where
    F: Fn(f64) -> (f64, f64),
{
    fn eval_point(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self(x))
    }
}

impl PointEval for DiscreteSolution {
    fn eval_point(&self, x: f64) -> Result<(f64, f64)> {
        self.evaluate(x)
    }
}

impl PointEval for ClosedFormSolution {
    fn eval_point(&self, x: f64) -> Result<(f64, f64)> {
        Ok(self.eval(x))
    }
}

/// Composite per-element rule: `levels + 1` panels per side, geometrically
/// halved toward each element endpoint (deepest panel width 2^-levels of the
/// half element), an n-point Gauss rule on every panel.
#[derive(Debug, Clone)]
pub struct EnergyQuadrature {
    levels: u32,
    panel: QuadratureRule,
}

/// Default geometric depth; 2^-40 ~ 9e-13 resolves layers for mu up to 1e12.
pub const DEFAULT_QUAD_LEVELS: u32 = 40;

/// Default panel Gauss size for measuring a degree-p approximation.
pub fn quad_points_for_degree(p: u32) -> usize {
    (p as usize + 2).max(10)
}

impl EnergyQuadrature {
    pub fn new(levels: u32, points: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter(
                "energy quadrature needs at least one geometric level".into(),
            ));
        }
        Ok(EnergyQuadrature {
            levels,
            panel: gauss_rule(points)?,
        })
    }

    pub fn for_degree(p: u32) -> Result<Self> {
        EnergyQuadrature::new(DEFAULT_QUAD_LEVELS, quad_points_for_degree(p))
    }

    /// Doubled depth and panel size, for self-convergence checks.
    pub fn refined(&self) -> Result<Self> {
        EnergyQuadrature::new(self.levels * 2, self.panel.len() * 2)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn panel_points(&self) -> usize {
        self.panel.len()
    }

    /// Physical nodes and weights covering [x_left, x_right]. Total weight
    /// equals the element width up to summation roundoff (the panel widths
    /// are exact binary fractions of the half width, so their sum telescopes
    /// exactly; only the Gauss weights contribute roundoff).
    pub fn element_rule(&self, x_left: f64, x_right: f64) -> (Vec<f64>, Vec<f64>) {
        let half = (x_right - x_left) / 2.0;
        let panels = self.levels as usize + 1;
        let mut nodes = Vec::with_capacity(2 * panels * self.panel.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        // Panel boundaries in offset-from-endpoint space: 0, half*2^-levels,
        // half*2^-(levels-1), ..., half.
        let mut bounds = Vec::with_capacity(panels + 1);
        bounds.push(0.0);
        for k in (0..=self.levels as i32 - 1).rev() {
            bounds.push(half * (-1.0 - k as f64).exp2());
        }
        bounds.push(half);
        for side in 0..2 {
            for pair in bounds.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let mid = (a + b) / 2.0;
                let scale = (b - a) / 2.0;
                for (&xi, &w) in self.panel.nodes.iter().zip(&self.panel.weights) {
                    let offset = mid + scale * xi;
                    let x = if side == 0 {
                        x_left + offset
                    } else {
                        x_right - offset
                    };
                    nodes.push(x);
                    weights.push(scale * w);
                }
            }
        }
        (nodes, weights)
    }
}

/// Deterministic pairwise reduction; the result depends only on the order of
/// `xs`, never on thread count.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

fn accumulate_element<T: PointEval, A: PointEval>(
    truth: &T,
    approx: Option<&A>,
    eps1: f64,
    nodes: &[f64],
    weights: &[f64],
) -> Result<(f64, f64)> {
    let mut err_terms = Vec::with_capacity(nodes.len());
    let mut truth_terms = Vec::with_capacity(nodes.len());
    for (&x, &w) in nodes.iter().zip(weights) {
        let (tv, td) = truth.eval_point(x)?;
        if !tv.is_finite() || !td.is_finite() {
            return Err(Error::NonFiniteSample(format!("truth at x = {x}")));
        }
        truth_terms.push(w * (tv * tv + eps1 * td * td));
        if let Some(a) = approx {
            let (av, ad) = a.eval_point(x)?;
            if !av.is_finite() || !ad.is_finite() {
                return Err(Error::NonFiniteSample(format!("approximation at x = {x}")));
            }
            let e = tv - av;
            let de = td - ad;
            err_terms.push(w * (e * e + eps1 * de * de));
        }
    }
    Ok((pairwise_sum(&err_terms), pairwise_sum(&truth_terms)))
}

fn energy_pass<T: PointEval, A: PointEval>(
    truth: &T,
    approx: Option<&A>,
    eps1: f64,
    mesh: &Mesh,
    quad: &EnergyQuadrature,
) -> Result<(f64, f64)> {
    let mut err_sq = Vec::with_capacity(mesh.element_count());
    let mut truth_sq = Vec::with_capacity(mesh.element_count());
    for j in 1..=mesh.element_count() {
        let emap = mesh.element_map(j)?;
        let (nodes, weights) = quad.element_rule(emap.x_left, emap.x_right);
        let (e, t) = accumulate_element(truth, approx, eps1, &nodes, &weights)?;
        err_sq.push(e);
        truth_sq.push(t);
    }
    Ok((pairwise_sum(&err_sq), pairwise_sum(&truth_sq)))
}

/// ||v||_E = (eps1 |v|_1^2 + ||v||_0^2)^(1/2) over the mesh.
pub fn energy_norm<T: PointEval>(
    v: &T,
    eps1: f64,
    mesh: &Mesh,
    quad: &EnergyQuadrature,
) -> Result<f64> {
    let (_, sq) = energy_pass::<T, T>(v, None, eps1, mesh, quad)?;
    Ok(sq.max(0.0).sqrt())
}

/// Absolute and percentage-relative energy error of `approx` against
/// `truth`, both integrated by the same rule on the same nodes.
pub fn energy_norm_error<T: PointEval, A: PointEval>(
    truth: &T,
    approx: &A,
    eps1: f64,
    mesh: &Mesh,
    quad: &EnergyQuadrature,
) -> Result<(f64, f64)> {
    let (err_sq, truth_sq) = energy_pass(truth, Some(approx), eps1, mesh, quad)?;
    let abs = err_sq.max(0.0).sqrt();
    let denom = truth_sq.max(0.0).sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroTruthNorm);
    }
    Ok((abs, 100.0 * abs / denom))
}

/// Piecewise polynomial in the shape basis, continuous across breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseInterpolant {
    mesh: Mesh,
    p: u32,
    /// Per element: [left nodal, right nodal, internal 2..=p].
    coefficients: Vec<Vec<f64>>,
}

impl PiecewiseInterpolant {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> u32 {
        self.p
    }

    pub fn element_coefficients(&self, j: usize) -> &[f64] {
        &self.coefficients[j - 1]
    }

    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        let j = self.mesh.locate(x)?;
        let emap = self.mesh.element_map(j)?;
        let xi = emap.to_reference(x);
        let s = shape_functions(self.p as usize, xi);
        let cs = &self.coefficients[j - 1];
        let mut value = 0.0;
        let mut dref = 0.0;
        for (c, (v, d)) in cs.iter().zip(s.values.iter().zip(&s.derivatives)) {
            value += c * v;
            dref += c * d;
        }
        Ok((value, dref * emap.derivative_scale()))
    }
}

impl PointEval for PiecewiseInterpolant {
    fn eval_point(&self, x: f64) -> Result<(f64, f64)> {
        self.evaluate(x)
    }
}

/// Interpolation operator: on each element the result is the polynomial
/// whose derivative is the degree-(p-1) Legendre truncation of u', anchored
/// at the endpoint values.
///
/// The nodal coefficients are the sampled endpoint values themselves and the
/// internal shape functions vanish at the endpoints, so breakpoint matching
/// is exact, not merely within tolerance. The degree-0 derivative
/// coefficient (u(b) - u(a))/2 lives implicitly in the nodal pair; only the
/// degree >= 1 coefficients need quadrature, a_k = (2k+1)/2 int u'(Q(xi))
/// (h/2) P_k(xi) dxi by a 2p-point Gauss rule, mapped to internal shape
/// coefficients via psi_i' = sqrt((2i-1)/2) P_{i-1}.
pub fn build_interpolant<T: PointEval>(u: &T, mesh: &Mesh, p: u32) -> Result<PiecewiseInterpolant> {
    if p < 1 {
        return Err(Error::InvalidParameter(
            "interpolant degree must be >= 1".into(),
        ));
    }
    let quad = gauss_rule(2 * p as usize)?;
    let mut coefficients = Vec::with_capacity(mesh.element_count());
    for j in 1..=mesh.element_count() {
        let emap = mesh.element_map(j)?;
        let (ul, _) = u.eval_point(emap.x_left)?;
        let (ur, _) = u.eval_point(emap.x_right)?;
        if !ul.is_finite() || !ur.is_finite() {
            return Err(Error::NonFiniteSample(format!(
                "endpoint values of element {j}"
            )));
        }
        let mut cs = vec![0.0; p as usize + 1];
        cs[0] = ul;
        cs[1] = ur;
        if p >= 2 {
            // Legendre coefficients a_1..a_{p-1} of du/dxi.
            let mut a = vec![0.0; p as usize];
            for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
                let x = emap.position(xi);
                let (_, du) = u.eval_point(x)?;
                if !du.is_finite() {
                    return Err(Error::NonFiniteSample(format!(
                        "derivative at x = {x} (element {j})"
                    )));
                }
                let dref = du * emap.jacobian();
                let (leg, _) = legendre_eval(p as usize - 1, xi);
                for (k, ak) in a.iter_mut().enumerate().skip(1) {
                    *ak += w * dref * leg[k] * (2 * k + 1) as f64 / 2.0;
                }
            }
            for i in 2..=p as usize {
                cs[i] = a[i - 1] * (2.0 / (2 * i - 1) as f64).sqrt();
            }
        }
        coefficients.push(cs);
    }
    Ok(PiecewiseInterpolant {
        mesh: mesh.clone(),
        p,
        coefficients,
    })
}

/// Smallest degree q > p whose DOF count on an E-element mesh is at least
/// max(1, 2 DOF(p)). On the 3-element mesh this is q = 2p.
pub fn reference_degree(elements: usize, p: u32) -> u32 {
    let dof = |q: u32| elements - 1 + elements * (q as usize - 1);
    let target = (2 * dof(p)).max(1);
    let mut q = p + 1;
    while dof(q) < target {
        q += 1;
    }
    q
}

/// Higher-degree solve on the same mesh, for use as truth.
pub fn reference_on_mesh(problem: &ProblemSpec, mesh: &Mesh, p: u32) -> Result<DiscreteSolution> {
    let q = reference_degree(mesh.element_count(), p);
    solve_on_mesh(problem, mesh, q)
}

/// Reference solution on the layer-adapted mesh built for degree p: same
/// breakpoints, degree raised until the DOF count at least doubles.
pub fn reference_solution(problem: &ProblemSpec, kappa: f64, p: u32) -> Result<DiscreteSolution> {
    let layer = compute_layer_parameters(problem, DEFAULT_SAMPLE_COUNT)?;
    let mesh = build_sbl_mesh(&layer, kappa, p)?;
    reference_on_mesh(problem, &mesh, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;
    use crate::problem::constant_coefficient_exact;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn panel_weights_sum_to_element_width() {
        let quad = EnergyQuadrature::new(40, 10).unwrap();
        for (xl, xr) in [
            (0.0, 1.0),
            (0.3, 0.7),
            (0.0, 3.274823934929885e-4),
            (1.0 - 1e-11, 1.0),
        ] {
            let (nodes, weights) = quad.element_rule(xl, xr);
            assert_eq!(nodes.len(), 2 * 41 * 10);
            let total: f64 = pairwise_sum(&weights);
            assert_relative_eq!(total, xr - xl, max_relative = 1e-13);
            // Offsets near a nonzero endpoint can be absorbed by rounding,
            // so nodes may coincide with a breakpoint but never leave it.
            assert!(nodes.iter().all(|&x| x >= xl && x <= xr));
        }
    }

    #[test]
    fn deepest_panels_reach_the_geometric_floor() {
        let quad = EnergyQuadrature::new(40, 3).unwrap();
        let (nodes, _) = quad.element_rule(0.0, 1.0);
        let closest = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(closest < 0.5 * (-40.0f64).exp2());
        assert!(closest > 0.0);
        let closest_right = nodes.iter().map(|&x| 1.0 - x).fold(f64::INFINITY, f64::min);
        assert!(closest_right < 0.5 * (-40.0f64).exp2());
        assert!(closest_right > 0.0);
    }

    #[test]
    fn quadratic_energy_norm_matches_analytic_value() {
        // v = x(1-x), eps1 = 1: integral of (1-2x)^2 is 1/3, of v^2 is 1/30.
        let mesh = build_uniform_mesh(1).unwrap();
        let quad = EnergyQuadrature::new(40, 10).unwrap();
        let v = |x: f64| (x * (1.0 - x), 1.0 - 2.0 * x);
        let norm = energy_norm(&v, 1.0, &mesh, &quad).unwrap();
        assert_relative_eq!(norm, 0.6055300708194983, max_relative = 1e-14);
        assert_relative_eq!(norm * norm, 11.0 / 30.0, max_relative = 1e-13);
    }

    #[test]
    fn polynomials_are_reproduced_exactly() {
        let mesh = build_uniform_mesh(1).unwrap();
        let u = |x: f64| (2.0 * x * x * x - x + 0.5, 6.0 * x * x - 1.0);
        let interp = build_interpolant(&u, &mesh, 3).unwrap();
        for i in 0..20 {
            let x = i as f64 / 19.0;
            let (v, d) = interp.evaluate(x).unwrap();
            let (tv, td) = u(x);
            assert_relative_eq!(v, tv, max_relative = 1e-11, epsilon = 1e-11);
            assert_relative_eq!(d, td, max_relative = 1e-11, epsilon = 1e-11);
        }
    }

    #[test]
    fn breakpoint_values_match_bitwise() {
        let prob = ProblemSpec::example1(1e-9, 1e-4).unwrap();
        let layer = compute_layer_parameters(&prob, DEFAULT_SAMPLE_COUNT).unwrap();
        let mesh = build_sbl_mesh(&layer, 1.0, 4).unwrap();
        assert_eq!(mesh.element_count(), 3);
        let u = |x: f64| ((PI * x).sin(), PI * (PI * x).cos());
        let interp = build_interpolant(&u, &mesh, 4).unwrap();
        for &x in mesh.breakpoints() {
            let (v, _) = interp.evaluate(x).unwrap();
            assert_eq!(v.to_bits(), u(x).0.to_bits());
        }
    }

    #[test]
    fn sine_interpolation_decays_superexponentially_in_l2() {
        // sin(pi x) is even about the element midpoint, so its derivative's
        // Legendre expansion has only odd-degree terms and the truncation
        // gains nothing at every other increment of p (the error stalls in
        // pairs). The factor-5-per-unit-p decay therefore shows up across
        // two-step windows: err(p+2) <= err(p)/25.
        let mesh = build_uniform_mesh(1).unwrap();
        let u = |x: f64| ((PI * x).sin(), PI * (PI * x).cos());
        let errs: Vec<f64> = (4..=10u32)
            .map(|p| {
                let interp = build_interpolant(&u, &mesh, p).unwrap();
                let quad = EnergyQuadrature::new(20, quad_points_for_degree(p)).unwrap();
                // eps1 = 0 reduces the energy norm to the L2 norm.
                energy_norm_error(&u, &interp, 0.0, &mesh, &quad).unwrap().0
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-8), "{errs:?}");
        }
        for w in errs.windows(3) {
            assert!(w[2] * 25.0 <= w[0], "{errs:?}");
        }
    }

    #[test]
    fn truth_against_its_own_interpolant_is_numerically_zero() {
        let mesh = build_uniform_mesh(2).unwrap();
        let u = |x: f64| ((2.0 * x).exp(), 2.0 * (2.0 * x).exp());
        let interp = build_interpolant(&u, &mesh, 20).unwrap();
        let quad = EnergyQuadrature::new(20, 24).unwrap();
        let (_, rel) = energy_norm_error(&u, &interp, 1.0, &mesh, &quad).unwrap();
        assert!(rel <= 1e-9, "relative error {rel}%");
    }

    #[test]
    fn zero_approximant_reports_exactly_one_hundred_percent() {
        // (1, 1) puts the mesh in the asymptotic branch {0, 1}; p = 1 there
        // has no interior unknowns, so the solution is identically zero.
        let prob = ProblemSpec::example1(1.0, 1.0).unwrap();
        let layer = compute_layer_parameters(&prob, DEFAULT_SAMPLE_COUNT).unwrap();
        let mesh = build_sbl_mesh(&layer, 1.0, 1).unwrap();
        assert_eq!(mesh.element_count(), 1);
        let sol = solve_on_mesh(&prob, &mesh, 1).unwrap();
        assert_eq!(sol.dof(), 0);
        let truth = constant_coefficient_exact(&prob).unwrap();
        let quad = EnergyQuadrature::for_degree(1).unwrap();
        let (_, rel) = energy_norm_error(&truth, &sol, prob.eps1, &mesh, &quad).unwrap();
        assert_eq!(rel, 100.0);
    }

    #[test]
    fn zero_truth_norm_is_an_error() {
        let mesh = build_uniform_mesh(1).unwrap();
        let z = |_: f64| (0.0, 0.0);
        let one = |_: f64| (1.0, 0.0);
        let quad = EnergyQuadrature::new(4, 4).unwrap();
        assert!(matches!(
            energy_norm_error(&z, &one, 1.0, &mesh, &quad),
            Err(Error::ZeroTruthNorm)
        ));
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let mesh = build_uniform_mesh(1).unwrap();
        let nan = |_: f64| (f64::NAN, 0.0);
        assert!(matches!(
            build_interpolant(&nan, &mesh, 3),
            Err(Error::NonFiniteSample(_))
        ));
        let quad = EnergyQuadrature::new(4, 4).unwrap();
        assert!(energy_norm(&nan, 1.0, &mesh, &quad).is_err());
    }

    #[test]
    fn reference_degree_doubles_dof() {
        assert_eq!(reference_degree(3, 3), 6); // 8 dof -> 17
        assert_eq!(reference_degree(3, 1), 2); // 2 dof -> 5
        assert_eq!(reference_degree(1, 1), 2); // 0 dof -> 1
        assert_eq!(reference_degree(2, 4), 8); // 7 dof -> 15
        for e in 1..=3usize {
            for p in 1..=11u32 {
                let dof = |q: u32| e - 1 + e * (q as usize - 1);
                let q = reference_degree(e, p);
                assert!(q > p);
                assert!(dof(q) >= (2 * dof(p)).max(1));
                assert!(q == p + 1 || dof(q - 1) < (2 * dof(p)).max(1));
            }
        }
    }

    #[test]
    fn reference_solution_runs_on_the_degree_p_mesh() {
        let prob = ProblemSpec::example1(1e-9, 1e-4).unwrap();
        let layer = compute_layer_parameters(&prob, DEFAULT_SAMPLE_COUNT).unwrap();
        let mesh = build_sbl_mesh(&layer, 1.0, 3).unwrap();
        let reference = reference_solution(&prob, 1.0, 3).unwrap();
        assert_eq!(reference.degree(), 6);
        assert_eq!(reference.dof(), 17);
        assert_eq!(reference.mesh().breakpoints(), mesh.breakpoints());
    }

    #[test]
    fn interpolation_error_decays_on_the_layer_mesh() {
        let prob = ProblemSpec::example1(1e-9, 1e-4).unwrap();
        let truth = constant_coefficient_exact(&prob).unwrap();
        let layer = compute_layer_parameters(&prob, DEFAULT_SAMPLE_COUNT).unwrap();
        let mut errors = Vec::new();
        for p in [2u32, 4, 6] {
            let mesh = build_sbl_mesh(&layer, 1.0, p).unwrap();
            let interp = build_interpolant(&truth, &mesh, p).unwrap();
            let quad = EnergyQuadrature::for_degree(p).unwrap();
            let (_, rel) = energy_norm_error(&truth, &interp, prob.eps1, &mesh, &quad).unwrap();
            errors.push(rel);
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        assert!(errors[2] < 1.0, "p = 6 interpolation error {}%", errors[2]);
    }

    #[test]
    fn refined_quadrature_reports_the_same_error() {
        let prob = ProblemSpec::example1(1e-2, 1e-1).unwrap();
        let truth = constant_coefficient_exact(&prob).unwrap();
        let layer = compute_layer_parameters(&prob, DEFAULT_SAMPLE_COUNT).unwrap();
        let mesh = build_sbl_mesh(&layer, 1.0, 2).unwrap();
        let sol = solve_on_mesh(&prob, &mesh, 2).unwrap();
        let quad = EnergyQuadrature::for_degree(2).unwrap();
        let (_, rel) = energy_norm_error(&truth, &sol, prob.eps1, &mesh, &quad).unwrap();
        let (_, rel_fine) =
            energy_norm_error(&truth, &sol, prob.eps1, &mesh, &quad.refined().unwrap()).unwrap();
        assert!(
            (rel - rel_fine).abs() / rel_fine < 1e-3,
            "{rel} vs {rel_fine}"
        );
        // Pinned against an independent multiprecision run of the same
        // discretization.
        assert_relative_eq!(rel, 5.447265361439720784, max_relative = 1e-9);
    }
}
