//! Domains with closed-form distance functions, their meshes, and the
//! boundary-anchored rescaled domains used by the boundary estimates.
//!
//! Two shapes are supported: an interval in 1D and a ball in N >= 1
//! dimensions (radial functions only). Both have exact distance-to-boundary,
//! which the barrier constructions sample directly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64, dim: usize },
}

/// The geometry Omega together with its boundary-layer width delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Boundary-layer width: Omega_delta = { x : d(x) < delta }.
    pub delta: f64,
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, delta: f64) -> Result<Self> {
        let spec = DomainSpec {
            kind: DomainKind::Interval { a, b },
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ball(center: Vec<f64>, radius: f64, dim: usize, delta: f64) -> Result<Self> {
        let spec = DomainSpec {
            kind: DomainKind::Ball { center, radius, dim },
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit-centered ball shorthand.
    pub fn origin_ball(radius: f64, dim: usize, delta: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius, dim, delta)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DomainKind::Interval { a, b } => {
                if !(a < b) {
                    return Err(Error::Config(format!("interval needs a < b, got [{a}, {b}]")));
                }
            }
            DomainKind::Ball { center, radius, dim } => {
                if *radius <= 0.0 {
                    return Err(Error::Config("ball radius must be positive".into()));
                }
                if *dim < 1 {
                    return Err(Error::Config("ball dimension must be >= 1".into()));
                }
                if center.len() != *dim {
                    return Err(Error::Config(format!(
                        "ball center has {} coordinates but dim = {dim}",
                        center.len()
                    )));
                }
            }
        }
        if !(self.delta > 0.0 && self.delta < self.inradius()) {
            return Err(Error::Config(format!(
                "delta must lie in (0, inradius): delta = {}, inradius = {}",
                self.delta,
                self.inradius()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Ball { dim, .. } => *dim,
        }
    }

    pub fn inradius(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => 0.5 * (b - a),
            DomainKind::Ball { radius, .. } => *radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Lebesgue measure |Omega|.
    pub fn volume(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Ball { radius, dim, .. } => {
                let n = *dim as f64;
                std::f64::consts::PI.powf(n / 2.0) / crate::quad::gamma(n / 2.0 + 1.0)
                    * radius.powf(n)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::Interval { a, b } => x.len() == 1 && x[0] > *a && x[0] < *b,
            DomainKind::Ball { center, radius, .. } => {
                x.len() == center.len() && dist(x, center) < *radius
            }
        }
    }

    fn in_closure(&self, x: &[f64]) -> bool {
        let eps = 1e-12 * self.diameter();
        match &self.kind {
            DomainKind::Interval { a, b } => x.len() == 1 && x[0] >= *a - eps && x[0] <= *b + eps,
            DomainKind::Ball { center, radius, .. } => {
                x.len() == center.len() && dist(x, center) <= *radius + eps
            }
        }
    }

    /// Exact distance to the boundary for x in the closure of Omega.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        if !self.in_closure(x) {
            return Err(Error::Domain(format!("point {x:?} lies outside the closure of Omega")));
        }
        Ok(match &self.kind {
            DomainKind::Interval { a, b } => (x[0] - a).min(b - x[0]).max(0.0),
            DomainKind::Ball { center, radius, .. } => (radius - dist(x, center)).max(0.0),
        })
    }

    /// Distance to boundary as a function of the mesh coordinate
    /// (x for intervals, radius r for balls).
    pub fn coord_distance(&self, c: f64) -> f64 {
        match &self.kind {
            DomainKind::Interval { a, b } => (c - a).min(b - c),
            DomainKind::Ball { radius, .. } => radius - c,
        }
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| (xi - yi) * (xi - yi))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    Uniform,
    /// Power-map clustering of nodes toward the boundary.
    BoundaryGraded { exponent: f64 },
}

/// Nodes covering the closure of Omega in its mesh coordinate: x in [a, b]
/// for intervals, r in [0, R] for balls. Grid functions vanish at Dirichlet
/// nodes and identically outside Omega.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dom: DomainSpec,
    pub nodes: Vec<f64>,
    pub grading: Grading,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mesh coordinate range: (a, b) for intervals, (0, R) for balls.
    pub fn coord_range(&self) -> (f64, f64) {
        match &self.dom.kind {
            DomainKind::Interval { a, b } => (*a, *b),
            DomainKind::Ball { radius, .. } => (0.0, *radius),
        }
    }

    /// Whether a grid function is constrained to zero at node i.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        match &self.dom.kind {
            DomainKind::Interval { .. } => i == 0 || i + 1 == self.nodes.len(),
            DomainKind::Ball { .. } => i + 1 == self.nodes.len(),
        }
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.is_dirichlet(i)).collect()
    }

    pub fn node_boundary_distance(&self, i: usize) -> f64 {
        self.dom.coord_distance(self.nodes[i])
    }

    /// Width of the element containing coordinate c (nearest if outside).
    pub fn local_spacing(&self, c: f64) -> f64 {
        let n = self.nodes.len();
        let e = match self.nodes.binary_search_by(|v| v.partial_cmp(&c).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Mesh CSV: one node per row (coordinate), with a JSON sidecar carrying
    /// the DomainSpec fields.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "coord")?;
        for x in &self.nodes {
            writeln!(f, "{x:.16e}")?;
        }
        let sidecar = path.with_extension("domain.json");
        let json = serde_json::to_string_pretty(&self.dom)
            .map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(sidecar, json)?;
        Ok(())
    }
}

/// Build a mesh of n nodes on the closure of Omega.
///
/// The boundary-graded option maps uniform reference nodes through a power of
/// the reference distance to the nearest boundary, which clusters nodes near
/// the boundary where solutions behave like d^s.
pub fn build_mesh(dom: &DomainSpec, n: usize, grading: Grading) -> Result<Mesh> {
    dom.validate()?;
    if n < 8 {
        return Err(Error::Config(format!("mesh needs n >= 8 nodes, got {n}")));
    }
    let nodes = match (&dom.kind, grading) {
        (DomainKind::Interval { a, b }, Grading::Uniform) => {
            linspace(*a, *b, n)
        }
        (DomainKind::Interval { a, b }, Grading::BoundaryGraded { exponent }) => {
            check_exponent(exponent)?;
            let half = 0.5 * (b - a);
            (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    if t <= 0.5 {
                        a + half * (2.0 * t).powf(exponent)
                    } else {
                        b - half * (2.0 * (1.0 - t)).powf(exponent)
                    }
                })
                .collect()
        }
        (DomainKind::Ball { radius, .. }, Grading::Uniform) => linspace(0.0, *radius, n),
        (DomainKind::Ball { radius, .. }, Grading::BoundaryGraded { exponent }) => {
            check_exponent(exponent)?;
            (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    radius * (1.0 - (1.0 - t).powf(exponent))
                })
                .collect()
        }
    };
    let mut nodes = nodes;
    // pin endpoints exactly
    let (lo, hi) = match &dom.kind {
        DomainKind::Interval { a, b } => (*a, *b),
        DomainKind::Ball { radius, .. } => (0.0, *radius),
    };
    *nodes.first_mut().unwrap() = lo;
    *nodes.last_mut().unwrap() = hi;
    for w in nodes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config("mesh nodes must be strictly increasing".into()));
        }
    }
    Ok(Mesh { dom: dom.clone(), nodes, grading })
}

fn check_exponent(g: f64) -> Result<()> {
    if g < 1.0 || !g.is_finite() {
        return Err(Error::Config(format!("grading exponent must be >= 1, got {g}")));
    }
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// The rescaled domain Omega^tau_{x0} = { y : x0 + tau y in Omega } anchored
/// at a boundary point x0, with its exact rescaled distance d_tau.
#[derive(Debug, Clone)]
pub struct ScaledDomain {
    pub base: DomainSpec,
    pub x0: Vec<f64>,
    pub tau: f64,
}

impl ScaledDomain {
    pub fn new(base: DomainSpec, x0: Vec<f64>, tau: f64) -> Result<Self> {
        base.validate()?;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0,1), got {tau}")));
        }
        let d = base.distance_to_boundary(&x0)?;
        if d.abs() > 1e-10 * base.diameter() {
            return Err(Error::Config(format!("x0 must lie on the boundary, got d(x0) = {d}")));
        }
        Ok(ScaledDomain { base, x0, tau })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let x: Vec<f64> = self.x0.iter().zip(y).map(|(x0, yi)| x0 + self.tau * yi).collect();
        self.base.contains(&x)
    }

    /// d_tau(y) = tau^{-1} d(x0 + tau y), the exact distance to the boundary
    /// of the rescaled domain.
    pub fn scaled_distance(&self, y: &[f64]) -> Result<f64> {
        if !self.contains(y) {
            return Err(Error::Domain(format!("point {y:?} outside the scaled domain")));
        }
        let x: Vec<f64> = self.x0.iter().zip(y).map(|(x0, yi)| x0 + self.tau * yi).collect();
        Ok(self.base.distance_to_boundary(&x)? / self.tau)
    }

    /// The image domain as a DomainSpec in its own right (an interval maps to
    /// an interval, a ball to a ball).
    pub fn image_spec(&self, delta: f64) -> Result<DomainSpec> {
        match &self.base.kind {
            DomainKind::Interval { a, b } => {
                DomainSpec::interval((a - self.x0[0]) / self.tau, (b - self.x0[0]) / self.tau, delta)
            }
            DomainKind::Ball { center, radius, dim } => {
                let c: Vec<f64> = center
                    .iter()
                    .zip(&self.x0)
                    .map(|(c, x0)| (c - x0) / self.tau)
                    .collect();
                DomainSpec::ball(c, radius / self.tau, *dim, delta)
            }
        }
    }
}
