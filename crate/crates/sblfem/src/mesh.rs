//! The Spectral Boundary Layer mesh and affine element maps.
//!
//! For layer parameters mu0 <= mu1, degree p and a user constant kappa, the
//! mesh is
//!
//!   {0, 1}                                  if kappa p / mu1 >= 1/2,
//!   {0, kappa p/mu0, 1 - kappa p/mu1, 1}    if kappa p / mu0 <  1/2,
//!   {0, 1 - kappa p/mu1, 1}                 otherwise (gap case),
//!
//! a mesh of at most three elements on which a single degree p is used
//! everywhere. The gap case (left layer already resolvable on a unit-scale
//! element, right layer not) is not covered by the two defining conditions;
//! resolving only the right layer mirrors the first branch's logic.
//!
//! Element widths are stored at construction (kappa p / mu for the layer
//! elements) and reused whenever a width enters a formula. Recovering widths
//! by subtracting breakpoints would lose every digit once 1 - w rounds, e.g.
//! for w ~ 1e-11 in deep convection-diffusion settings.

use crate::error::{Error, Result};
use crate::problem::LayerParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    SpectralBoundaryLayer,
    Uniform,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    breakpoints: Vec<f64>,
    /// Analytic element widths, same length as element count.
    widths: Vec<f64>,
    kind: MeshKind,
    /// kappa used at construction (SBL meshes only).
    kappa: Option<f64>,
    /// Degree used at construction (SBL meshes only).
    build_degree: Option<u32>,
}

/// Affine map Q_j from the reference element onto element j. Carries both the
/// breakpoint coordinates (for exact endpoint mapping) and the analytic width
/// (for jacobians and derivative scaling).
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    /// 1-based element index.
    pub index: usize,
    pub x_left: f64,
    pub x_right: f64,
    /// Analytic width, e.g. kappa p / mu1 for the last layer element.
    pub h: f64,
    /// Geometric width x_right - x_left, consistent with the stored
    /// breakpoints; used only for the inverse map.
    h_geo: f64,
}

impl ElementMap {
    /// Q_j(xi); maps -1 and +1 to the breakpoints exactly.
    pub fn position(&self, xi: f64) -> f64 {
        self.x_left * (1.0 - xi) / 2.0 + self.x_right * (1.0 + xi) / 2.0
    }

    /// Inverse map; returns exactly -1 and +1 at the breakpoints.
    pub fn to_reference(&self, x: f64) -> f64 {
        ((x - self.x_left) + (x - self.x_right)) / self.h_geo
    }

    pub fn jacobian(&self) -> f64 {
        self.h / 2.0
    }

    /// d(xi)/dx factor for chain-ruling reference derivatives.
    pub fn derivative_scale(&self) -> f64 {
        2.0 / self.h
    }

    #[cfg(test)]
    pub(crate) fn synthetic(x_left: f64, x_right: f64) -> Self {
        ElementMap {
            index: 1,
            x_left,
            x_right,
            h: x_right - x_left,
            h_geo: x_right - x_left,
        }
    }
}

impl Mesh {
    fn from_parts(
        breakpoints: Vec<f64>,
        widths: Vec<f64>,
        kind: MeshKind,
        kappa: Option<f64>,
        build_degree: Option<u32>,
    ) -> Result<Self> {
        debug_assert_eq!(breakpoints.len(), widths.len() + 1);
        for pair in breakpoints.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::MeshCollision(format!(
                    "breakpoints not strictly increasing: {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if widths.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::MeshCollision(format!(
                "nonpositive element width in {widths:?}"
            )));
        }
        Ok(Mesh {
            breakpoints,
            widths,
            kind,
            kappa,
            build_degree,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn element_count(&self) -> usize {
        self.widths.len()
    }

    /// Analytic width of element j (1-based).
    pub fn width(&self, j: usize) -> f64 {
        self.widths[j - 1]
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn build_degree(&self) -> Option<u32> {
        self.build_degree
    }

    /// Element map for element j (1-based).
    pub fn element_map(&self, j: usize) -> Result<ElementMap> {
        if j < 1 || j > self.element_count() {
            return Err(Error::InvalidParameter(format!(
                "element index {j} outside 1..={}",
                self.element_count()
            )));
        }
        let x_left = self.breakpoints[j - 1];
        let x_right = self.breakpoints[j];
        Ok(ElementMap {
            index: j,
            x_left,
            x_right,
            h: self.widths[j - 1],
            h_geo: x_right - x_left,
        })
    }

    /// Element (1-based) containing x. Ties at a breakpoint resolve to the
    /// left element, except x = 0 which belongs to element 1.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
        }
        let j = self.breakpoints.partition_point(|&b| b < x);
        Ok(j.max(1))
    }
}

/// Builds the Spectral Boundary Layer mesh for the given layer parameters,
/// kappa and degree.
pub fn build_sbl_mesh(layer: &LayerParameters, kappa: f64, p: u32) -> Result<Mesh> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa = {kappa} not positive"
        )));
    }
    if p < 1 {
        return Err(Error::InvalidParameter("degree p must be >= 1".into()));
    }
    let kp = kappa * p as f64;
    let w1 = kp / layer.mu1;
    let kind = MeshKind::SpectralBoundaryLayer;
    if w1 >= 0.5 {
        return Mesh::from_parts(vec![0.0, 1.0], vec![1.0], kind, Some(kappa), Some(p));
    }
    // mu0 = 0 (degenerate data) gives w0 = +inf and falls through to the
    // gap branch below.
    let w0 = kp / layer.mu0;
    if w0 < 0.5 {
        if w0 >= 1.0 - w1 {
            return Err(Error::MeshCollision(format!(
                "left layer breakpoint {w0} reaches the right one {}",
                1.0 - w1
            )));
        }
        let right = 1.0 - w1;
        let middle = 1.0 - w0 - w1;
        return Mesh::from_parts(
            vec![0.0, w0, right, 1.0],
            vec![w0, middle, w1],
            kind,
            Some(kappa),
            Some(p),
        );
    }
    let right = 1.0 - w1;
    Mesh::from_parts(
        vec![0.0, right, 1.0],
        vec![right, w1],
        kind,
        Some(kappa),
        Some(p),
    )
}

/// Equispaced baseline mesh with n elements.
pub fn build_uniform_mesh(n_elements: usize) -> Result<Mesh> {
    if n_elements < 1 {
        return Err(Error::InvalidParameter(
            "uniform mesh needs at least one element".into(),
        ));
    }
    let n = n_elements;
    let breakpoints: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let widths = vec![1.0 / n as f64; n];
    Mesh::from_parts(breakpoints, widths, MeshKind::Uniform, None, None)
}
