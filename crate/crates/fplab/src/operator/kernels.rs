//! Pair kernels in mesh coordinates.
//!
//! Every double integral over R^N x R^N of a quantity built from coordinate
//! profiles reduces to a 1D pair integral with kernel
//!
//! ```text
//! W(x, y) = wreg(x, y) * |x - y|^{-(1+sp)}
//! ```
//!
//! where `wreg` is smooth and positive near the diagonal. For intervals
//! wreg = 1. For balls the angular part of the kernel is integrated out:
//! W(r, rho) = omega_{N-1} r^{N-1} rho^{N-1} k_ang(r, rho), with k_ang the
//! sphere average of |r e1 - rho w|^{-(N+sp)}. The exterior tail
//! `tail(x) = int_{Omega^c} |x - y|^{-(N+sp)} dy` is exact for intervals and
//! 1D balls and boundary-graded quadrature otherwise.

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec};
use crate::operator::{Params, QuadratureConfig};
use crate::quad::{gamma, gl_rule, integrate_gl};

/// Surface measure of the unit sphere S^m in R^{m+1}.
pub fn sphere_area(m: usize) -> f64 {
    let mf = m as f64;
    2.0 * std::f64::consts::PI.powf((mf + 1.0) / 2.0) / gamma((mf + 1.0) / 2.0)
}

#[derive(Debug, Clone)]
pub enum MeshKernel {
    Interval {
        a: f64,
        b: f64,
        sp: f64,
    },
    Radial {
        dim: usize,
        sp: f64,
        radius: f64,
        far_radius: f64,
        gl_order: usize,
    },
}

impl MeshKernel {
    pub fn new(dom: &DomainSpec, prm: &Params, qc: &QuadratureConfig) -> Result<Self> {
        qc.validate()?;
        prm.validate_base()?;
        if prm.dim != dom.dim() {
            return Err(Error::Config(format!(
                "Params dimension {} does not match domain dimension {}",
                prm.dim,
                dom.dim()
            )));
        }
        match &dom.kind {
            DomainKind::Interval { a, b } => Ok(MeshKernel::Interval { a: *a, b: *b, sp: prm.sp() }),
            DomainKind::Ball { radius, dim, .. } => Ok(MeshKernel::Radial {
                dim: *dim,
                sp: prm.sp(),
                radius: *radius,
                far_radius: qc.far_field_factor.max(5.0) * 2.0 * radius,
                gl_order: qc.gl_order.max(8),
            }),
        }
    }

    pub fn sp(&self) -> f64 {
        match self {
            MeshKernel::Interval { sp, .. } | MeshKernel::Radial { sp, .. } => *sp,
        }
    }

    /// Volume weight of the mesh coordinate: dx = vol_weight(c) dc.
    pub fn vol_weight(&self, c: f64) -> f64 {
        match self {
            MeshKernel::Interval { .. } => 1.0,
            MeshKernel::Radial { dim, .. } => {
                sphere_area(dim - 1) * c.powi(*dim as i32 - 1)
            }
        }
    }

    /// Smooth factor of the pair kernel: W(x,y) = wreg(x,y) |x-y|^{-(1+sp)}.
    pub fn wreg(&self, x: f64, y: f64) -> f64 {
        match self {
            MeshKernel::Interval { .. } => 1.0,
            MeshKernel::Radial { dim, sp, .. } => {
                let a = (x - y).abs();
                let w = sphere_area(dim - 1)
                    * x.powi(*dim as i32 - 1)
                    * y.powi(*dim as i32 - 1)
                    * self.k_angular(x, y);
                w * a.powf(1.0 + sp)
            }
        }
    }

    /// Full pair kernel W(x,y); prefer `wreg` near the diagonal.
    pub fn pair_weight(&self, x: f64, y: f64) -> f64 {
        match self {
            MeshKernel::Interval { sp, .. } => (x - y).abs().powf(-(1.0 + sp)),
            MeshKernel::Radial { dim, .. } => {
                sphere_area(dim - 1)
                    * x.powi(*dim as i32 - 1)
                    * y.powi(*dim as i32 - 1)
                    * self.k_angular(x, y)
            }
        }
    }

    /// Sphere average k_ang(r, rho) = int_{S^{N-1}} |r e1 - rho w|^{-(N+sp)} dsigma(w).
    pub fn k_angular(&self, r: f64, rho: f64) -> f64 {
        match self {
            MeshKernel::Interval { .. } => unreachable!("angular kernel is radial-only"),
            MeshKernel::Radial { dim, sp, gl_order, .. } => {
                let nsp = *dim as f64 + sp;
                match dim {
                    1 => (r - rho).abs().powf(-nsp) + (r + rho).powf(-nsp),
                    _ => {
                        let b2 = r * rho;
                        if b2 <= 0.0 {
                            return sphere_area(dim - 1) * r.max(rho).powf(-nsp);
                        }
                        let a2 = (r - rho) * (r - rho);
                        let a = a2.sqrt().max(1e-300);
                        let b = b2.sqrt();
                        let wm2 = *dim as i32 - 2;
                        let integrand = |phi: f64| {
                            let d2 = a2 + 4.0 * b2 * (0.5 * phi).sin().powi(2);
                            d2.powf(-0.5 * nsp) * phi.sin().abs().powi(wm2)
                        };
                        // geometric panels toward phi = 0 where the kernel peaks
                        let w0 = (a / b).min(std::f64::consts::PI);
                        let mut edges = vec![std::f64::consts::PI];
                        while *edges.last().unwrap() > 0.25 * w0 && edges.len() < 80 {
                            edges.push(edges.last().unwrap() / 2.0);
                        }
                        edges.reverse();
                        let mut total = integrate_gl(integrand, 0.0, edges[0], *gl_order);
                        for w in edges.windows(2) {
                            total += integrate_gl(integrand, w[0], w[1], *gl_order);
                        }
                        sphere_area(dim - 2) * total
                    }
                }
            }
        }
    }

    /// Exterior tail at coordinate c: int_{Omega^c} |x - y|^{-(N+sp)} dy.
    pub fn tail(&self, c: f64) -> f64 {
        match self {
            MeshKernel::Interval { a, b, sp } => {
                let da = (c - a).max(1e-300);
                let db = (b - c).max(1e-300);
                (da.powf(-sp) + db.powf(-sp)) / sp
            }
            MeshKernel::Radial { dim, sp, radius, far_radius, gl_order } => {
                if *dim == 1 {
                    let da = (radius - c).max(1e-300);
                    return (da.powf(-sp) + (radius + c).powf(-sp)) / sp;
                }
                let nm1 = *dim as i32 - 1;
                let d = (radius - c).max(1e-13 * radius);
                // graded panels in u = rho - R with scale d, then far field by 1/t
                let mut edges = vec![d.min(*radius)];
                while *edges.last().unwrap() < far_radius - radius && edges.len() < 90 {
                    edges.push((edges.last().unwrap() * 2.0).min(far_radius - radius));
                }
                let mut total = 0.0;
                let mut lo = 0.0;
                for &hi in &edges {
                    total += integrate_gl(
                        |u| {
                            let rho = radius + u;
                            rho.powi(nm1) * self.k_angular(c, rho)
                        },
                        lo,
                        hi,
                        *gl_order,
                    );
                    lo = hi;
                }
                // rho in [far_radius, inf): substitute rho = far_radius / t
                total += integrate_gl(
                    |t| {
                        let rho = far_radius / t;
                        rho.powi(nm1) * self.k_angular(c, rho) * far_radius / (t * t)
                    },
                    0.0,
                    1.0,
                    (2 * *gl_order).min(24),
                );
                total
            }
        }
    }

    /// Mesh coordinate range covered by Omega.
    pub fn coord_range(&self) -> (f64, f64) {
        match self {
            MeshKernel::Interval { a, b, .. } => (*a, *b),
            MeshKernel::Radial { radius, .. } => (0.0, *radius),
        }
    }
}

/// Element quadrature points with volume weights, graded toward the outer
/// boundary on the last element (and toward both ends for intervals).
pub(crate) fn element_points(
    kernel: &MeshKernel,
    nodes: &[f64],
    e: usize,
    boundary_levels: usize,
    gl_order: usize,
) -> Vec<(f64, f64)> {
    let (lo, hi) = (nodes[e], nodes[e + 1]);
    let nel = nodes.len() - 1;
    let near_lo = matches!(kernel, MeshKernel::Interval { .. }) && e == 0;
    let near_hi = e + 1 == nel;
    let mut pts = Vec::new();
    let panels: Vec<(f64, f64)> = match (near_lo, near_hi) {
        (false, false) => vec![(lo, hi)],
        (true, false) => crate::quad::graded_toward_lo(lo, hi, boundary_levels),
        (false, true) => crate::quad::graded_toward_hi(lo, hi, boundary_levels),
        (true, true) => {
            let mid = 0.5 * (lo + hi);
            let mut p = crate::quad::graded_toward_lo(lo, mid, boundary_levels);
            p.extend(crate::quad::graded_toward_hi(mid, hi, boundary_levels));
            p
        }
    };
    let (xs, ws) = gl_rule(gl_order);
    for (plo, phi) in panels {
        let mid = 0.5 * (plo + phi);
        let hl = 0.5 * (phi - plo);
        for (x, w) in xs.iter().zip(ws) {
            let c = mid + hl * x;
            pts.push((c, w * hl * kernel.vol_weight(c)));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    fn radial_kernel() -> MeshKernel {
        let dom = DomainSpec::origin_ball(1.0, 2, 0.2).unwrap();
        let prm = Params::new(0.5, 2.0, 2).unwrap();
        MeshKernel::new(&dom, &prm, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn interval_tail_closed_form() {
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let prm = Params::new(0.5, 2.0, 1).unwrap();
        let k = MeshKernel::new(&dom, &prm, &QuadratureConfig::default()).unwrap();
        // sp = 1: tail(0) = (1 + 1)/1 = 2
        assert!((k.tail(0.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn angular_kernel_against_frozen_oracle() {
        // reference values from independent adaptive quadrature of
        // 2 int_0^pi (r^2 + rho^2 - 2 r rho cos(phi))^{-3/2} dphi  (sp = 1, N = 2)
        let k = radial_kernel();
        let cases = [
            (0.5, 0.7, 8.645_860_968_8e1, 1e-9),
            (0.5, 0.501, 3.996_019_539_4e6, 1e-9),
            (0.9, 0.9001, 2.222_098_80e8, 1e-6),
            (0.2, 1.5, 1.938_271_659_7, 1e-9),
            (0.5, 3.0, 2.479_109_808_0e-1, 1e-9),
            (0.99, 1.0001, 1.970_501_865_3e4, 1e-9),
        ];
        for &(r, rho, want, tol) in &cases {
            let got = k.k_angular(r, rho);
            assert!(
                (got - want).abs() <= tol * want,
                "k_angular({r},{rho}) = {got} vs {want}"
            );
        }
        // and a resolution-driven self-consistency check near the diagonal
        let coarse = {
            let mut total = 0.0;
            for i in 0..20000 {
                let p0 = std::f64::consts::PI * i as f64 / 20000.0;
                let p1 = std::f64::consts::PI * (i + 1) as f64 / 20000.0;
                total += integrate_gl(
                    |phi| {
                        let (r, rho) = (0.8, 0.81);
                        let d2 = (r - rho) * (r - rho)
                            + 4.0 * r * rho * (0.5 * phi).sin().powi(2);
                        d2.powf(-1.5)
                    },
                    p0,
                    p1,
                    8,
                );
            }
            2.0 * total
        };
        let got = k.k_angular(0.8, 0.81);
        assert!((got - coarse).abs() <= 1e-8 * coarse, "{got} vs {coarse}");
    }

    #[test]
    fn radial_tail_center_value() {
        // at the center of the unit disk, sp=1: int_{|y|>1} |y|^{-3} dy = 2 pi
        let k = radial_kernel();
        let got = k.tail(0.0);
        let want = 2.0 * std::f64::consts::PI;
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn radial_tail_boundary_blowup_rate() {
        // tail(r) ~ C (R - r)^{-sp} near the boundary
        let k = radial_kernel();
        let t1 = k.tail(1.0 - 1e-3);
        let t2 = k.tail(1.0 - 2e-3);
        let rate = (t1 / t2).ln() / 2.0f64.ln();
        assert!((rate - 1.0).abs() < 0.05, "blowup rate {rate}");
    }
}
