//! Grid functions (piecewise-linear, zero outside Omega) and the profile
//! abstraction shared by grid and closed-form operator inputs.

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use std::sync::Arc;

/// A function of the mesh coordinate that vanishes outside its support.
///
/// Interval profiles are functions of x on (a, b); radial profiles are
/// functions of r on [0, R). `value` must return 0 outside the support, and
/// `breakpoints` lists the coordinates where the profile is not smooth so
/// quadrature panels can split there.
pub trait Profile {
    fn value(&self, c: f64) -> f64;
    fn support(&self) -> (f64, f64);
    fn breakpoints(&self) -> Vec<f64>;
}

/// Closed-form profile with declared non-smooth points.
pub struct ClosedForm<F: Fn(f64) -> f64> {
    f: F,
    support: (f64, f64),
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> ClosedForm<F> {
    /// `f` is only consulted inside `support`; outside the profile is zero.
    pub fn new(f: F, support: (f64, f64), breaks: Vec<f64>) -> Self {
        ClosedForm { f, support, breaks }
    }
}

impl<F: Fn(f64) -> f64> Profile for ClosedForm<F> {
    fn value(&self, c: f64) -> f64 {
        if c < self.support.0 || c >= self.support.1 {
            0.0
        } else {
            (self.f)(c)
        }
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Piecewise-linear function on mesh nodes, implicitly zero on the exterior.
/// Dirichlet nodes are clamped to zero at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.len();
        GridFunction { mesh, values: vec![0.0; n] }
    }

    /// Wrap nodal values; boundary (Dirichlet) entries are clamped to zero.
    pub fn from_values(mesh: Arc<Mesh>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function values must be finite".into()));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if mesh.is_dirichlet(i) {
                *v = 0.0;
            }
        }
        Ok(GridFunction { mesh, values })
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = mesh.nodes.iter().map(|&x| f(x)).collect();
        Self::from_values(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_mesh(&self, other: &GridFunction) -> Result<()> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) && *self.mesh != *other.mesh {
            return Err(Error::MeshMismatch("grid functions live on different meshes".into()));
        }
        Ok(())
    }

    pub fn scale(&self, t: f64) -> GridFunction {
        GridFunction {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn axpy(&self, t: f64, other: &GridFunction) -> GridFunction {
        GridFunction {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    /// Apply f nodewise (boundary stays clamped).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = self.values.iter().map(|&v| f(v)).collect();
        GridFunction::from_values(self.mesh.clone(), values).expect("same mesh")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Piecewise-linear interpolation; zero outside the mesh range.
    pub fn eval(&self, c: f64) -> f64 {
        let nodes = &self.mesh.nodes;
        let n = nodes.len();
        if c <= nodes[0] || c >= nodes[n - 1] {
            // radial meshes start at r = 0 which is an interior point
            if c <= nodes[0] && !self.mesh.is_dirichlet(0) && c >= 0.0 {
                return self.values[0];
            }
            if c == nodes[0] {
                return self.values[0];
            }
            if c == nodes[n - 1] {
                return self.values[n - 1];
            }
            return 0.0;
        }
        let e = match nodes.binary_search_by(|v| v.partial_cmp(&c).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let t = (c - nodes[e]) / (nodes[e + 1] - nodes[e]);
        self.values[e] * (1.0 - t) + self.values[e + 1] * t
    }
}

impl Profile for GridFunction {
    fn value(&self, c: f64) -> f64 {
        self.eval(c)
    }

    fn support(&self) -> (f64, f64) {
        self.mesh.coord_range()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mesh.nodes.clone()
    }
}

impl Profile for &GridFunction {
    fn value(&self, c: f64) -> f64 {
        (*self).eval(c)
    }

    fn support(&self) -> (f64, f64) {
        self.mesh.coord_range()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.mesh.nodes.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec, Grading};

    #[test]
    fn boundary_values_clamped() {
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 9, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(mesh, |_| 1.0).unwrap();
        assert_eq!(u.values()[0], 0.0);
        assert_eq!(*u.values().last().unwrap(), 0.0);
        assert_eq!(u.values()[4], 1.0);
    }

    #[test]
    fn interpolation_and_exterior_zero() {
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 9, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(mesh, |x| 1.0 - x.abs()).unwrap();
        assert!((u.eval(0.125) - 0.875).abs() < 1e-15);
        assert_eq!(u.eval(3.0), 0.0);
        assert_eq!(u.eval(-1.5), 0.0);
    }
}
