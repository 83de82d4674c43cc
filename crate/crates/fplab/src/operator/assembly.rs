//! Assembled discrete operators on a fixed mesh.
//!
//! `Discretization` holds the p = 2 pair matrix for the kernel exponent
//! N + sp (which is simultaneously the linear operator for p = 2 and the
//! preconditioner for p != 2), the mass matrix, a reusable element
//! quadrature with exterior-tail values, and Cholesky factors of the
//! interior block. General-p weak gradients route through the pair loops in
//! `energy`; Newton tangents reuse the same pair decomposition with
//! |u(x)-u(y)|^{p-2} weights.

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::operator::energy::pair_sums;
use crate::operator::kernels::{element_points, MeshKernel};
use crate::operator::{GridFunction, Params, QuadratureConfig};
use crate::quad::gl_rule;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::sync::Arc;

pub struct Discretization {
    mesh: Arc<Mesh>,
    prm: Params,
    qc: QuadratureConfig,
    kernel: MeshKernel,
    /// Unnormalized p=2 pair+tail bilinear form: u^T B u = iint (u(x)-u(y))^2 K + 2 int u^2 tail.
    b_full: DMatrix<f64>,
    mass: DMatrix<f64>,
    free: Vec<usize>,
    chol_b: Cholesky<f64, Dyn>,
    /// Per element: (coordinate, weight including volume factor, tail value).
    elem_pts: Vec<Vec<(f64, f64, f64)>>,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, prm: Params, qc: QuadratureConfig) -> Result<Self> {
        prm.validate_base()?;
        qc.validate()?;
        if prm.sp() >= 2.0 {
            return Err(Error::Config(format!(
                "piecewise-linear pair quadrature needs sp < 2, got sp = {}",
                prm.sp()
            )));
        }
        let kernel = MeshKernel::new(&mesh.dom, &prm, &qc)?;
        let nodes = &mesh.nodes;
        let nel = nodes.len() - 1;
        let mut elem_pts = Vec::with_capacity(nel);
        for e in 0..nel {
            let pts = element_points(&kernel, nodes, e, qc.graded_levels.min(24), qc.gl_order);
            elem_pts.push(
                pts.into_iter()
                    .map(|(c, w)| (c, w, kernel.tail(c)))
                    .collect::<Vec<_>>(),
            );
        }
        let b_full = assemble_weighted(&kernel, nodes, &elem_pts, &qc, 2.0, None);
        let mass = assemble_mass(nodes, &elem_pts);
        let free = mesh.free_nodes();
        let b_int = restrict(&b_full, &free);
        let chol_b = Cholesky::new(b_int).ok_or_else(|| {
            Error::Numerical("pair matrix interior block is not positive definite".into())
        })?;
        Ok(Discretization { mesh, prm, qc, kernel, b_full, mass, free, chol_b, elem_pts })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn prm(&self) -> &Params {
        &self.prm
    }

    pub fn qc(&self) -> &QuadratureConfig {
        &self.qc
    }

    pub fn kernel(&self) -> &MeshKernel {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.mesh.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction::zeros(self.mesh.clone())
    }

    pub fn grid_fn(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(self.mesh.clone(), f).expect("mesh matches")
    }

    /// |Omega|.
    pub fn volume(&self) -> f64 {
        self.mesh.dom.volume()
    }

    /// Nonlocal energy k(N,s) [u]^p. For p = 2 this is the matrix quadratic
    /// form, the exact counterpart of `weak_gradient`.
    pub fn energy(&self, u: &GridFunction) -> f64 {
        if self.prm.p == 2.0 {
            let v = DVector::from_column_slice(u.values());
            self.prm.norm_const() * (&self.b_full * &v).dot(&v)
        } else {
            let (e, _) = pair_sums(u, &self.kernel, &self.prm, &self.qc, false);
            self.prm.norm_const() * e
        }
    }

    /// A(u)[phi_i] at every node.
    pub fn weak_gradient(&self, u: &GridFunction) -> Vec<f64> {
        if self.prm.p == 2.0 {
            let v = DVector::from_column_slice(u.values());
            let av = &self.b_full * v * self.prm.norm_const();
            av.iter().copied().collect()
        } else {
            let (_, r) = pair_sums(u, &self.kernel, &self.prm, &self.qc, true);
            let k = self.prm.norm_const();
            r.unwrap().into_iter().map(|x| k * x).collect()
        }
    }

    /// Newton tangent of the weak form at u (coincides with the p=2 operator
    /// matrix when p = 2), scaled by the normalization constant.
    pub fn tangent(&self, u: &GridFunction) -> DMatrix<f64> {
        if self.prm.p == 2.0 {
            return self.b_full.clone() * self.prm.norm_const();
        }
        let m = assemble_weighted(
            &self.kernel,
            &self.mesh.nodes,
            &self.elem_pts,
            &self.qc,
            self.prm.p,
            Some(u.values()),
        );
        m * self.prm.norm_const()
    }

    /// Solve the preconditioner system B z = r on free nodes (zero elsewhere).
    pub fn precond_solve(&self, r: &[f64]) -> Vec<f64> {
        let rf = DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| r[i]));
        let zf = self.chol_b.solve(&rf);
        let mut z = vec![0.0; self.n()];
        for (k, &i) in self.free.iter().enumerate() {
            z[i] = zf[k];
        }
        z
    }

    /// Solve the p = 2 operator system A u = b (free nodes), b given at all nodes.
    pub fn solve_linear(&self, b: &[f64]) -> Result<GridFunction> {
        if self.prm.p != 2.0 {
            return Err(Error::Config("solve_linear requires p = 2".into()));
        }
        let k = self.prm.norm_const();
        let mut z = self.precond_solve(b);
        for v in z.iter_mut() {
            *v /= k;
        }
        GridFunction::from_values(self.mesh.clone(), z)
    }

    pub fn mass_matrix(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// M v for nodal values v: the load of the piecewise-linear interpolant.
    pub fn mass_apply(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        (&self.mass * x).iter().copied().collect()
    }

    /// Load vector int f(x) phi_i dx for a coordinate function f.
    pub fn load_from_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let nodes = &self.mesh.nodes;
        let mut out = vec![0.0; nodes.len()];
        for (e, pts) in self.elem_pts.iter().enumerate() {
            let (lo, hi) = (nodes[e], nodes[e + 1]);
            let h = hi - lo;
            for &(c, w, _) in pts {
                let lb = (c - lo) / h;
                let v = f(c);
                out[e] += w * v * (1.0 - lb);
                out[e + 1] += w * v * lb;
            }
        }
        out
    }

    /// Load vector int g(u(x)) phi_i dx evaluated with the element rule, the
    /// exact gradient of `local_integral` of G with G' = g.
    pub fn nonlinear_load(&self, u: &GridFunction, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let nodes = &self.mesh.nodes;
        let mut out = vec![0.0; nodes.len()];
        for (e, pts) in self.elem_pts.iter().enumerate() {
            let (lo, hi) = (nodes[e], nodes[e + 1]);
            let h = hi - lo;
            for &(c, w, _) in pts {
                let lb = (c - lo) / h;
                let uv = u.values()[e] * (1.0 - lb) + u.values()[e + 1] * lb;
                let gv = g(uv);
                out[e] += w * gv * (1.0 - lb);
                out[e + 1] += w * gv * lb;
            }
        }
        out
    }

    /// int g(u(x)) dx with the element rule.
    pub fn local_integral(&self, u: &GridFunction, g: impl Fn(f64) -> f64) -> f64 {
        let nodes = &self.mesh.nodes;
        let mut acc = 0.0;
        for (e, pts) in self.elem_pts.iter().enumerate() {
            let (lo, hi) = (nodes[e], nodes[e + 1]);
            let h = hi - lo;
            for &(c, w, _) in pts {
                let lb = (c - lo) / h;
                let uv = u.values()[e] * (1.0 - lb) + u.values()[e + 1] * lb;
                acc += w * g(uv);
            }
        }
        acc
    }

    /// Weighted mass matrix int w(u(x)) phi_a phi_b dx (Newton blocks for
    /// local nonlinearities).
    pub fn weighted_mass(&self, u: &GridFunction, wfn: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let nodes = &self.mesh.nodes;
        let n = nodes.len();
        let mut m = DMatrix::zeros(n, n);
        for (e, pts) in self.elem_pts.iter().enumerate() {
            let (lo, hi) = (nodes[e], nodes[e + 1]);
            let h = hi - lo;
            for &(c, w, _) in pts {
                let lb = (c - lo) / h;
                let la = 1.0 - lb;
                let uv = u.values()[e] * la + u.values()[e + 1] * lb;
                let wv = w * wfn(uv);
                m[(e, e)] += wv * la * la;
                m[(e, e + 1)] += wv * la * lb;
                m[(e + 1, e)] += wv * la * lb;
                m[(e + 1, e + 1)] += wv * lb * lb;
            }
        }
        m
    }

    /// L^q norm with the element rule.
    pub fn lp_norm(&self, u: &GridFunction, q: f64) -> f64 {
        self.local_integral(u, |v| v.abs().powf(q)).powf(1.0 / q)
    }

    /// Restrict a full matrix to the free-node block.
    pub fn restrict(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        restrict(m, &self.free)
    }

    pub fn gather_free(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| v[i]))
    }

    pub fn scatter_free(&self, vf: &DVector<f64>) -> Vec<f64> {
        let mut v = vec![0.0; self.n()];
        for (k, &i) in self.free.iter().enumerate() {
            v[i] = vf[k];
        }
        v
    }
}

fn restrict(m: &DMatrix<f64>, free: &[usize]) -> DMatrix<f64> {
    let k = free.len();
    DMatrix::from_fn(k, k, |a, b| m[(free[a], free[b])])
}

fn assemble_mass(nodes: &[f64], elem_pts: &[Vec<(f64, f64, f64)>]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut m = DMatrix::zeros(n, n);
    for (e, pts) in elem_pts.iter().enumerate() {
        let (lo, hi) = (nodes[e], nodes[e + 1]);
        let h = hi - lo;
        for &(c, w, _) in pts {
            let lb = (c - lo) / h;
            let la = 1.0 - lb;
            m[(e, e)] += w * la * la;
            m[(e, e + 1)] += w * la * lb;
            m[(e + 1, e)] += w * la * lb;
            m[(e + 1, e + 1)] += w * lb * lb;
        }
    }
    m
}

/// Pair+tail matrix with weight (p-1)|u(x)-u(y)|^{p-2} when `u_vals` is
/// given (Newton tangent), or the plain p = 2 form when it is not.
fn assemble_weighted(
    kernel: &MeshKernel,
    nodes: &[f64],
    elem_pts: &[Vec<(f64, f64, f64)>],
    qc: &QuadratureConfig,
    p: f64,
    u_vals: Option<&[f64]>,
) -> DMatrix<f64> {
    let n = nodes.len();
    let nel = n - 1;
    let sp = kernel.sp();
    let is_interval = matches!(kernel, MeshKernel::Interval { .. });
    let pm1 = p - 1.0;
    let mut mat = DMatrix::zeros(n, n);
    let wfac = |diff: f64| -> f64 {
        match u_vals {
            None => 1.0,
            Some(_) => pm1 * diff.abs().powf(p - 2.0),
        }
    };

    // identical pairs: difference factors are slopes times (x - y)
    let t_levels = if p - 1.0 - sp > -0.2 { 6 } else { 22 };
    for e in 0..nel {
        let h = nodes[e + 1] - nodes[e];
        // |u(x)-u(y)|^{p-2} = |m_u|^{p-2} |x-y|^{p-2}: fold into the t power
        let mu_fac = match u_vals {
            None => 1.0,
            Some(u) => {
                let m_u = (u[e + 1] - u[e]) / h;
                pm1 * m_u.abs().powf(p - 2.0)
            }
        };
        let tpow = p - 1.0 - sp; // (x-y)^{p-2} * |x-y|^{1} from phi pair, minus kernel
        let ip = if is_interval {
            2.0 * h.powf(p + 1.0 - sp) / ((p - sp) * (p + 1.0 - sp))
        } else {
            let gl = gl_rule(qc.gl_order);
            let mut acc = 0.0;
            for (r, wr) in gl_points(gl, nodes[e], nodes[e + 1]) {
                for (tmax, sgn) in [(nodes[e + 1] - r, 1.0), (r - nodes[e], -1.0)] {
                    if tmax <= 0.0 {
                        continue;
                    }
                    for (plo, phi) in crate::quad::graded_toward_lo(0.0, tmax, t_levels) {
                        for (t, wt) in gl_points(gl, plo, phi) {
                            acc += wr * wt * t.powf(tpow) * kernel.wreg(r, r + sgn * t);
                        }
                    }
                }
            }
            acc
        };
        let slopes = [(e, -1.0 / h), (e + 1, 1.0 / h)];
        for &(a, ma) in &slopes {
            for &(b, mb) in &slopes {
                mat[(a, b)] += mu_fac * ma * mb * ip;
            }
        }
    }

    // adjacent pairs
    for e in 0..nel.saturating_sub(1) {
        let h_l = nodes[e + 1] - nodes[e];
        let h_r = nodes[e + 2] - nodes[e + 1];
        let c = nodes[e + 1];
        let basis = [
            (e, -1.0 / h_l, 0.0),
            (e + 1, 1.0 / h_l, -1.0 / h_r),
            (e + 2, 0.0, 1.0 / h_r),
        ];
        let (m_l, m_r) = match u_vals {
            None => (0.0, 0.0),
            Some(u) => ((u[e + 1] - u[e]) / h_l, (u[e + 2] - u[e + 1]) / h_r),
        };
        let mut seg = vec![0.0, h_r / (h_l + h_r), 1.0];
        if u_vals.is_some() && m_l != m_r {
            let s0 = m_l / (m_l - m_r);
            if s0 > 0.0 && s0 < 1.0 {
                seg.push(s0);
            }
        }
        seg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gl = gl_rule(qc.gl_order);
        for wdw in seg.windows(2) {
            for (sig, ws) in gl_points(gl, wdw[0], wdw[1]) {
                let tt = (h_r / sig.max(1e-300)).min(h_l / (1.0 - sig).max(1e-300));
                // |u(x)-u(y)|^{p-2} = t^{p-2} |g_u|^{p-2}
                let gu = m_l * (1.0 - sig) + m_r * sig;
                let ufac = match u_vals {
                    None => 1.0,
                    Some(_) => pm1 * gu.abs().powf(p - 2.0),
                };
                let it = if is_interval {
                    tt.powf(p + 1.0 - sp) / (p + 1.0 - sp)
                } else {
                    let mut acc = 0.0;
                    for (t, wt) in gl_points(gl, 0.0, tt) {
                        let r0 = c - t * (1.0 - sig);
                        let rho0 = c + t * sig;
                        acc += wt * t.powf(p - sp) * kernel.wreg(r0, rho0);
                    }
                    acc
                };
                for &(ka, mla, mra) in &basis {
                    let ga = mla * (1.0 - sig) + mra * sig;
                    for &(kb, mlb, mrb) in &basis {
                        let gb = mlb * (1.0 - sig) + mrb * sig;
                        mat[(ka, kb)] += 2.0 * ws * ufac * ga * gb * it;
                    }
                }
            }
        }
    }

    // distant pairs
    for e1 in 0..nel {
        let (lo1, hi1) = (nodes[e1], nodes[e1 + 1]);
        let h1 = hi1 - lo1;
        for e2 in (e1 + 2)..nel {
            let (lo2, hi2) = (nodes[e2], nodes[e2 + 1]);
            let h2 = hi2 - lo2;
            let gap = lo2 - hi1;
            let hmax = h1.max(h2);
            let order = if gap < 2.0 * hmax {
                16
            } else if gap < 8.0 * hmax {
                8
            } else {
                4
            };
            let gl = gl_rule(order);
            for (x, wx) in gl_points(gl, lo1, hi1) {
                let lb1 = (x - lo1) / h1;
                for (y, wy) in gl_points(gl, lo2, hi2) {
                    let lb2 = (y - lo2) / h2;
                    let kw = if is_interval {
                        (y - x).powf(-(1.0 + sp))
                    } else {
                        kernel.pair_weight(x, y)
                    };
                    let ufac = match u_vals {
                        None => 1.0,
                        Some(u) => {
                            let ux = u[e1] * (1.0 - lb1) + u[e1 + 1] * lb1;
                            let uy = u[e2] * (1.0 - lb2) + u[e2 + 1] * lb2;
                            wfac(ux - uy)
                        }
                    };
                    let w2 = 2.0 * wx * wy * kw * ufac;
                    let parts = [
                        (e1, 1.0 - lb1),
                        (e1 + 1, lb1),
                        (e2, -(1.0 - lb2)),
                        (e2 + 1, -lb2),
                    ];
                    for &(ka, va) in &parts {
                        for &(kb, vb) in &parts {
                            mat[(ka, kb)] += w2 * va * vb;
                        }
                    }
                }
            }
        }
    }

    // interior x exterior tail
    for (e, pts) in elem_pts.iter().enumerate() {
        let (lo, hi) = (nodes[e], nodes[e + 1]);
        let h = hi - lo;
        for &(cx, w, tl) in pts {
            let lb = (cx - lo) / h;
            let la = 1.0 - lb;
            let ufac = match u_vals {
                None => 1.0,
                Some(u) => {
                    let uv = u[e] * la + u[e + 1] * lb;
                    pm1 * uv.abs().powf(p - 2.0)
                }
            };
            let wv = 2.0 * w * tl * ufac;
            mat[(e, e)] += wv * la * la;
            mat[(e, e + 1)] += wv * la * lb;
            mat[(e + 1, e)] += wv * la * lb;
            mat[(e + 1, e + 1)] += wv * lb * lb;
        }
    }

    mat
}

fn gl_points(rule: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let mid = 0.5 * (lo + hi);
    let hl = 0.5 * (hi - lo);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(move |(x, w)| (mid + hl * x, w * hl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec, Grading};
    use crate::operator::energy::gagliardo_energy;

    fn disc_1d(n: usize, s: f64, p: f64) -> Discretization {
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, n, Grading::BoundaryGraded { exponent: 2.0 }).unwrap());
        Discretization::new(mesh, Params::new(s, p, 1).unwrap(), QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn matrix_energy_matches_pair_loop_energy_at_p2() {
        let d = disc_1d(33, 0.4, 2.0);
        let u = d.grid_fn(|x| (1.0 - x * x).powi(2));
        let e_mat = d.energy(&u);
        let e_loop = gagliardo_energy(&u, d.prm(), d.qc()).unwrap();
        assert!((e_mat - e_loop).abs() < 1e-10 * e_loop, "{e_mat} vs {e_loop}");
    }

    #[test]
    fn tangent_matches_gradient_difference_quotient() {
        let d = disc_1d(17, 0.4, 3.0);
        let u = d.grid_fn(|x| 1.2 * (1.0 - x * x));
        let v = d.grid_fn(|x| (std::f64::consts::PI * x).sin());
        let h = 1e-6;
        let gp = d.weak_gradient(&u.axpy(h, &v));
        let gm = d.weak_gradient(&u.axpy(-h, &v));
        let hv = d.tangent(&u) * DVector::from_column_slice(v.values());
        for i in d.free().iter().copied() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!(
                (hv[i] - fd).abs() <= 2e-5 * fd.abs().max(1.0),
                "node {i}: tangent {} vs fd {fd}",
                hv[i]
            );
        }
    }

    #[test]
    fn linear_solve_recovers_torsion_function() {
        // K(1) = sqrt(1-x^2) for s = 1/2, p = 2 on (-1,1)
        let d = disc_1d(257, 0.5, 2.0);
        let b = d.load_from_fn(|_| 1.0);
        let u = d.solve_linear(&b).unwrap();
        for (i, &x) in d.mesh().nodes.iter().enumerate() {
            if d.mesh().node_boundary_distance(i) >= 0.05 {
                let want = (1.0 - x * x).sqrt();
                let rel = (u.values()[i] - want).abs() / want;
                assert!(rel < 0.02, "x = {x}: {} vs {want}", u.values()[i]);
            }
        }
    }
}
