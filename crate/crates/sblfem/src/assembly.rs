//! Element matrices, global assembly over the H1_0-conforming space, the
//! dense linear solve, and evaluation of the discrete solution.
//!
//! On an element of width h the bilinear form contributes
//!
//!   B_kl = eps1 (2/h) int N_k' N_l' dxi
//!        + eps2 int b(Q(xi)) N_l' N_k dxi
//!        + (h/2) int c(Q(xi)) N_k N_l dxi,
//!
//! with the load F_k = (h/2) int f(Q(xi)) N_k dxi. The convection term's
//! single derivative cancels the jacobian, so it carries no width factor.
//! Widths enter through the analytic element width, never through breakpoint
//! subtraction (layer widths go down to ~1e-11).

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::basis::shape_functions;
use crate::error::{Error, Result};
use crate::mesh::{ElementMap, Mesh};
use crate::problem::ProblemSpec;
use crate::quadrature::{gauss_rule, QuadratureRule};

/// Assembly quadrature size for degree p.
pub fn assembly_quadrature_size(p: u32) -> usize {
    p as usize + 4
}

/// Global DOF numbering: nodal modes at the interior breakpoints first (by
/// breakpoint order), then internal modes element by element. The two
/// boundary modes are eliminated.
#[derive(Debug, Clone, Copy)]
pub struct DofMap {
    elements: usize,
    p: u32,
}

impl DofMap {
    pub fn new(elements: usize, p: u32) -> Self {
        DofMap { elements, p }
    }

    pub fn len(&self) -> usize {
        self.elements - 1 + self.elements * (self.p as usize - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index of local mode m on element j (1-based). Mode 0 is the
    /// left nodal function, mode 1 the right, and modes from 2 up are the
    /// internal bubbles; None for the two boundary modes.
    pub fn global_index(&self, j: usize, m: usize) -> Option<usize> {
        match m {
            0 => {
                if j == 1 {
                    None
                } else {
                    Some(j - 2)
                }
            }
            1 => {
                if j == self.elements {
                    None
                } else {
                    Some(j - 1)
                }
            }
            _ => Some(self.elements - 1 + (j - 1) * (self.p as usize - 1) + (m - 2)),
        }
    }
}

/// Assembled stiffness-plus-reaction system.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub dof_map: DofMap,
}

impl GlobalSystem {
    pub fn dof(&self) -> usize {
        self.dof_map.len()
    }
}

/// Local (p+1)x(p+1) matrix and (p+1) load for one element.
pub fn element_matrices(
    problem: &ProblemSpec,
    emap: &ElementMap,
    p: u32,
    quad: &QuadratureRule,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if quad.len() < p as usize + 2 {
        return Err(Error::InvalidParameter(format!(
            "assembly quadrature with {} points is not exact to degree 2p+3 for p = {p}",
            quad.len()
        )));
    }
    let n = p as usize + 1;
    let h = emap.h;
    let mut a = DMatrix::zeros(n, n);
    let mut load = DVector::zeros(n);
    for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
        let s = shape_functions(p as usize, xi);
        let x = emap.position(xi);
        let bx = problem.b.eval(x);
        let cx = problem.c.eval(x);
        let fx = problem.f.eval(x);
        if !bx.is_finite() || !cx.is_finite() || !fx.is_finite() {
            return Err(Error::NonFiniteSample(format!(
                "coefficient at quadrature point x = {x} (element {})",
                emap.index
            )));
        }
        let diff = problem.eps1 * (2.0 / h);
        let mass = cx * (h / 2.0);
        let conv = problem.eps2 * bx;
        for k in 0..n {
            for l in 0..n {
                a[(k, l)] += w
                    * (diff * s.derivatives[k] * s.derivatives[l]
                        + conv * s.derivatives[l] * s.values[k]
                        + mass * s.values[k] * s.values[l]);
            }
            load[k] += w * (h / 2.0) * fx * s.values[k];
        }
    }
    Ok((a, load))
}

/// Scatter-add of all element contributions.
pub fn assemble_global(
    problem: &ProblemSpec,
    mesh: &Mesh,
    p: u32,
    quad: &QuadratureRule,
) -> Result<GlobalSystem> {
    if p < 1 {
        return Err(Error::InvalidParameter("degree p must be >= 1".into()));
    }
    let dof_map = DofMap::new(mesh.element_count(), p);
    let ndof = dof_map.len();
    let mut matrix = DMatrix::zeros(ndof, ndof);
    let mut rhs = DVector::zeros(ndof);
    for j in 1..=mesh.element_count() {
        let emap = mesh.element_map(j)?;
        let (a, load) = element_matrices(problem, &emap, p, quad)?;
        for k in 0..=p as usize {
            let Some(gk) = dof_map.global_index(j, k) else {
                continue;
            };
            rhs[gk] += load[k];
            for l in 0..=p as usize {
                if let Some(gl) = dof_map.global_index(j, l) {
                    matrix[(gk, gl)] += a[(k, l)];
                }
            }
        }
    }
    Ok(GlobalSystem {
        matrix,
        rhs,
        dof_map,
    })
}

fn matrix_inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense LU solve with a scaled residual post-check
/// ||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf) <= 1e-10.
/// A zero-dimensional system returns the empty vector.
pub fn solve_linear(system: &GlobalSystem) -> Result<DVector<f64>> {
    let n = system.dof();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let lu = system.matrix.clone().lu();
    let x = lu.solve(&system.rhs).ok_or(Error::SingularSystem(n))?;
    let residual = &system.matrix * &x - &system.rhs;
    let num = residual.amax();
    let den = matrix_inf_norm(&system.matrix) * x.amax() + system.rhs.amax();
    if den == 0.0 {
        if num != 0.0 {
            return Err(Error::ResidualCheck(f64::INFINITY));
        }
    } else if num / den > 1e-10 {
        return Err(Error::ResidualCheck(num / den));
    }
    Ok(x)
}

/// A solved Galerkin approximation: mesh, degree, and the global coefficient
/// vector. Boundary modes are absent, so the value at 0 and 1 is exactly 0.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    mesh: Mesh,
    p: u32,
    coefficients: DVector<f64>,
    dof_map: DofMap,
}

impl DiscreteSolution {
    pub fn new(mesh: Mesh, p: u32, coefficients: DVector<f64>) -> Result<Self> {
        let dof_map = DofMap::new(mesh.element_count(), p);
        if coefficients.len() != dof_map.len() {
            return Err(Error::InvalidParameter(format!(
                "coefficient vector length {} does not match dof count {}",
                coefficients.len(),
                dof_map.len()
            )));
        }
        Ok(DiscreteSolution {
            mesh,
            p,
            coefficients,
            dof_map,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> u32 {
        self.p
    }

    pub fn dof(&self) -> usize {
        self.dof_map.len()
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Local coefficients [left nodal, right nodal, internal...] of element j
    /// (1-based); boundary modes read as 0.
    pub fn element_coefficients(&self, j: usize) -> Vec<f64> {
        let n = self.p as usize + 1;
        let mut cs = vec![0.0; n];
        for (m, c) in cs.iter_mut().enumerate() {
            if let Some(g) = self.dof_map.global_index(j, m) {
                *c = self.coefficients[g];
            }
        }
        cs
    }

    /// Value and derivative at x in [0, 1]. Breakpoint ties resolve to the
    /// left element (x = 0 to the first).
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        let j = self.mesh.locate(x)?;
        let emap = self.mesh.element_map(j)?;
        let xi = emap.to_reference(x);
        let s = shape_functions(self.p as usize, xi);
        let cs = self.element_coefficients(j);
        let mut value = 0.0;
        let mut dref = 0.0;
        for (c, (v, d)) in cs.iter().zip(s.values.iter().zip(&s.derivatives)) {
            value += c * v;
            dref += c * d;
        }
        Ok((value, dref * emap.derivative_scale()))
    }
}

/// Assemble with the default p+4 point rule and solve.
pub fn solve_on_mesh(problem: &ProblemSpec, mesh: &Mesh, p: u32) -> Result<DiscreteSolution> {
    let quad = gauss_rule(assembly_quadrature_size(p))?;
    let system = assemble_global(problem, mesh, p, &quad)?;
    let x = solve_linear(&system)?;
    DiscreteSolution::new(mesh.clone(), p, x)
}

/// Plain-text CSV dump of the assembled matrix, row-major, 17 significant
/// digits per entry.
pub fn dump_matrix_csv(system: &GlobalSystem, mut out: impl Write) -> std::io::Result<()> {
    let a = &system.matrix;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols())
            .map(|j| format!("{:.16e}", a[(i, j)]))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
