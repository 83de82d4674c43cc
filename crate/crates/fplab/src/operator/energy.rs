//! Gagliardo energy and weak residual for piecewise-linear grid functions.
//!
//! Both are computed by the same element-pair decomposition of the double
//! integral over R^N x R^N: identical pairs have the diagonal singularity
//! integrated exactly (interval) or by Duffy-type substitution with the
//! smooth kernel factor evaluated pointwise (radial); adjacent pairs use the
//! corner substitution t = |x - y|; distant pairs use tensor Gauss panels
//! with order chosen from the gap; the interior-exterior contribution is
//! integrated against the kernel tail, exactly where a closed form exists.
//! Energy and residual share panels, so the residual is the exact gradient
//! of energy/p on the discrete space.

use crate::error::Result;
use crate::operator::kernels::{element_points, MeshKernel};
use crate::operator::{sgn_pow, GridFunction, Params, QuadratureConfig};
use crate::quad::{gl_rule, graded_toward_lo};

/// The p-th power Gagliardo energy k(N,s) [u]^p over R^N x R^N
/// (interior-exterior tail included, normalization constant included).
pub fn gagliardo_energy(u: &GridFunction, prm: &Params, qc: &QuadratureConfig) -> Result<f64> {
    let kernel = MeshKernel::new(&u.mesh().dom, prm, qc)?;
    let (energy, _) = pair_sums(u, &kernel, prm, qc, false);
    Ok(prm.norm_const() * energy)
}

/// Per-node residual of the weak form against nodal basis functions:
/// A(u)[phi_i] - int rhs phi_i. Dirichlet nodes carry residual 0.
pub fn weak_residual(
    u: &GridFunction,
    rhs: &GridFunction,
    prm: &Params,
    qc: &QuadratureConfig,
) -> Result<GridFunction> {
    u.same_mesh(rhs)?;
    let a = weak_gradient(u, prm, qc)?;
    let b = mass_apply(rhs, prm, qc)?;
    let mesh = u.mesh().clone();
    let mut vals: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| ai - bi).collect();
    for (i, v) in vals.iter_mut().enumerate() {
        if mesh.is_dirichlet(i) {
            *v = 0.0;
        }
    }
    GridFunction::from_values(mesh, vals)
}

/// A(u)[phi_i] for every node i (no Dirichlet masking).
pub fn weak_gradient(u: &GridFunction, prm: &Params, qc: &QuadratureConfig) -> Result<Vec<f64>> {
    let kernel = MeshKernel::new(&u.mesh().dom, prm, qc)?;
    let (_, resid) = pair_sums(u, &kernel, prm, qc, true);
    let k = prm.norm_const();
    Ok(resid.unwrap().into_iter().map(|v| k * v).collect())
}

/// int rhs phi_i dx with the mesh volume weight (the consistent load vector
/// for a nodally sampled right-hand side).
pub fn mass_apply(rhs: &GridFunction, prm: &Params, qc: &QuadratureConfig) -> Result<Vec<f64>> {
    let mesh = rhs.mesh();
    let kernel = MeshKernel::new(&mesh.dom, prm, qc)?;
    let nodes = &mesh.nodes;
    let mut out = vec![0.0; nodes.len()];
    for e in 0..nodes.len() - 1 {
        let (lo, hi) = (nodes[e], nodes[e + 1]);
        let h = hi - lo;
        for (c, w) in element_points(&kernel, nodes, e, 2, qc.gl_order) {
            let lb = (c - lo) / h;
            let la = 1.0 - lb;
            let v = rhs.values()[e] * la + rhs.values()[e + 1] * lb;
            out[e] += w * v * la;
            out[e + 1] += w * v * lb;
        }
    }
    Ok(out)
}

/// L^q(Omega) norm of the piecewise-linear function (element quadrature).
pub fn lp_norm(u: &GridFunction, q: f64, prm: &Params, qc: &QuadratureConfig) -> Result<f64> {
    let mesh = u.mesh();
    let kernel = MeshKernel::new(&mesh.dom, prm, qc)?;
    let nodes = &mesh.nodes;
    let mut acc = 0.0;
    for e in 0..nodes.len() - 1 {
        let (lo, hi) = (nodes[e], nodes[e + 1]);
        let h = hi - lo;
        for (c, w) in element_points(&kernel, nodes, e, 2, qc.gl_order) {
            let lb = (c - lo) / h;
            let v = u.values()[e] * (1.0 - lb) + u.values()[e + 1] * lb;
            acc += w * v.abs().powf(q);
        }
    }
    Ok(acc.powf(1.0 / q))
}

/// Core pair-sum engine. Returns the unnormalized energy and optionally the
/// unnormalized weak-gradient vector, computed with the same panels.
pub(crate) fn pair_sums(
    u: &GridFunction,
    kernel: &MeshKernel,
    prm: &Params,
    qc: &QuadratureConfig,
    want_resid: bool,
) -> (f64, Option<Vec<f64>>) {
    let mesh = u.mesh();
    let nodes = &mesh.nodes;
    let vals = u.values();
    let n = nodes.len();
    let nel = n - 1;
    let p = prm.p;
    let sp = prm.sp();
    let pm1 = p - 1.0;
    let is_interval = matches!(kernel, MeshKernel::Interval { .. });

    let mut energy = 0.0;
    let mut resid = if want_resid { Some(vec![0.0; n]) } else { None };

    // --- identical pairs ---
    let t_levels = if p - 1.0 - sp > -0.2 { 6 } else { 22 };
    for e in 0..nel {
        let h = nodes[e + 1] - nodes[e];
        let m = (vals[e + 1] - vals[e]) / h;
        if m == 0.0 && !want_resid {
            continue;
        }
        let ip = if is_interval {
            // iint_{E^2} |x-y|^{p-1-sp} dx dy, exact
            2.0 * h.powf(p + 1.0 - sp) / ((p - sp) * (p + 1.0 - sp))
        } else {
            // two triangles rho = r +- t, graded in t toward the diagonal
            let mut acc = 0.0;
            let gl = gl_rule(qc.gl_order);
            for (r, wr) in gl_points(gl, nodes[e], nodes[e + 1]) {
                for (tmax, sgn) in [(nodes[e + 1] - r, 1.0), (r - nodes[e], -1.0)] {
                    if tmax <= 0.0 {
                        continue;
                    }
                    for (plo, phi) in graded_toward_lo(0.0, tmax, t_levels) {
                        for (t, wt) in gl_points(gl, plo, phi) {
                            acc += wr * wt * t.powf(p - 1.0 - sp) * kernel.wreg(r, r + sgn * t);
                        }
                    }
                }
            }
            acc
        };
        energy += m.abs().powf(p) * ip;
        if let Some(r) = resid.as_mut() {
            let g = sgn_pow(m, pm1) * ip / h;
            r[e + 1] += g;
            r[e] -= g;
        }
    }

    // --- adjacent pairs ---
    for e in 0..nel.saturating_sub(1) {
        let h_l = nodes[e + 1] - nodes[e];
        let h_r = nodes[e + 2] - nodes[e + 1];
        let c = nodes[e + 1];
        let m_l = (vals[e + 1] - vals[e]) / h_l;
        let m_r = (vals[e + 2] - vals[e + 1]) / h_r;
        // basis slopes (left element, right element) for the three nodes
        let basis = [
            (e, -1.0 / h_l, 0.0),
            (e + 1, 1.0 / h_l, -1.0 / h_r),
            (e + 2, 0.0, 1.0 / h_r),
        ];
        let g_u = |sig: f64| m_l * (1.0 - sig) + m_r * sig;
        let t_of = |sig: f64| (h_r / sig.max(1e-300)).min(h_l / (1.0 - sig).max(1e-300));
        // sigma segments split at the T kink and at a sign change of g_u
        let mut seg = vec![0.0, h_r / (h_l + h_r), 1.0];
        if m_l != m_r {
            let s0 = m_l / (m_l - m_r);
            if s0 > 0.0 && s0 < 1.0 {
                seg.push(s0);
            }
        }
        seg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gl = gl_rule(qc.gl_order);
        for w in seg.windows(2) {
            for (sig, ws) in gl_points(gl, w[0], w[1]) {
                let gu = g_u(sig);
                let tt = t_of(sig);
                let (e_term, r_base) = if is_interval {
                    let it = tt.powf(p + 1.0 - sp) / (p + 1.0 - sp);
                    (gu.abs().powf(p) * it, sgn_pow(gu, pm1) * it)
                } else {
                    let mut acc = 0.0;
                    for (t, wt) in gl_points(gl, 0.0, tt) {
                        let r0 = c - t * (1.0 - sig);
                        let rho0 = c + t * sig;
                        acc += wt * t.powf(p - sp) * kernel.wreg(r0, rho0);
                    }
                    (gu.abs().powf(p) * acc, sgn_pow(gu, pm1) * acc)
                };
                energy += 2.0 * ws * e_term;
                if let Some(r) = resid.as_mut() {
                    for &(k, ml, mr) in &basis {
                        let gk = ml * (1.0 - sig) + mr * sig;
                        r[k] += 2.0 * ws * r_base * gk;
                    }
                }
            }
        }
    }

    // --- distant pairs ---
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
                let ux = vals[e1] * (1.0 - lb1) + vals[e1 + 1] * lb1;
                for (y, wy) in gl_points(gl, lo2, hi2) {
                    let lb2 = (y - lo2) / h2;
                    let uy = vals[e2] * (1.0 - lb2) + vals[e2 + 1] * lb2;
                    let kw = if is_interval {
                        (y - x).powf(-(1.0 + sp))
                    } else {
                        kernel.pair_weight(x, y)
                    };
                    let e_val = ux - uy;
                    let w2 = 2.0 * wx * wy * kw;
                    energy += w2 * e_val.abs().powf(p);
                    if let Some(r) = resid.as_mut() {
                        let g = w2 * sgn_pow(e_val, pm1);
                        r[e1] += g * (1.0 - lb1);
                        r[e1 + 1] += g * lb1;
                        r[e2] -= g * (1.0 - lb2);
                        r[e2 + 1] -= g * lb2;
                    }
                }
            }
        }
    }

    // --- interior x exterior tail ---
    for e in 0..nel {
        let (lo, hi) = (nodes[e], nodes[e + 1]);
        let h = hi - lo;
        for (cx, w) in element_points(kernel, nodes, e, qc.graded_levels.min(24), qc.gl_order) {
            let lb = (cx - lo) / h;
            let v = vals[e] * (1.0 - lb) + vals[e + 1] * lb;
            let t = kernel.tail(cx);
            energy += 2.0 * w * t * v.abs().powf(p);
            if let Some(r) = resid.as_mut() {
                let g = 2.0 * w * t * sgn_pow(v, pm1);
                r[e] += g * (1.0 - lb);
                r[e + 1] += g * lb;
            }
        }
    }

    (energy, resid)
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
    use std::sync::Arc;

    fn hat(n: usize) -> GridFunction {
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, n, Grading::Uniform).unwrap());
        GridFunction::from_fn(mesh, |x| 1.0 - x.abs()).unwrap()
    }

    #[test]
    fn zero_energy() {
        let prm = Params::new(0.4, 2.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 17, Grading::Uniform).unwrap());
        let z = GridFunction::zeros(mesh);
        assert_eq!(gagliardo_energy(&z, &prm, &qc).unwrap(), 0.0);
    }

    #[test]
    fn p_homogeneity_of_energy() {
        let prm = Params::new(0.4, 2.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let u = hat(33);
        let e1 = gagliardo_energy(&u, &prm, &qc).unwrap();
        let e2 = gagliardo_energy(&u.scale(2.0), &prm, &qc).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-12 * e1);
    }

    #[test]
    fn residual_is_gradient_of_energy_over_p() {
        // directional finite differences against the weak gradient
        let prm = Params::new(0.4, 3.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 17, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(mesh.clone(), |x| (1.0 - x * x).powi(2)).unwrap();
        let v = GridFunction::from_fn(mesh, |x| (std::f64::consts::PI * x).sin()).unwrap();
        let g = weak_gradient(&u, &prm, &qc).unwrap();
        let gv: f64 = g.iter().zip(v.values()).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let ep = gagliardo_energy(&u.axpy(h, &v), &prm, &qc).unwrap();
        let em = gagliardo_energy(&u.axpy(-h, &v), &prm, &qc).unwrap();
        let fd = (ep - em) / (2.0 * h) / prm.p;
        assert!(
            (gv - fd).abs() <= 1e-7 * fd.abs().max(1.0),
            "gradient {gv} vs finite difference {fd}"
        );
    }

    #[test]
    fn lp_norm_of_known_profile() {
        let prm = Params::new(0.5, 2.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 513, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(mesh, |x| 1.0 - x.abs()).unwrap();
        // int |1-|x||^2 over (-1,1) = 2/3
        let n2 = lp_norm(&u, 2.0, &prm, &qc).unwrap();
        assert!((n2 - (2.0f64 / 3.0).sqrt()).abs() < 1e-10, "{n2}");
    }

    #[test]
    fn one_dimensional_ball_matches_interval_energy() {
        // a radial function on the 1D ball is the even extension on the
        // interval; the energies agree
        let prm = Params::new(0.4, 2.5, 1).unwrap();
        let qc = QuadratureConfig::default();
        let ball = DomainSpec::origin_ball(1.0, 1, 0.2).unwrap();
        let bmesh = Arc::new(build_mesh(&ball, 65, Grading::Uniform).unwrap());
        let ub = GridFunction::from_fn(bmesh, |r| (1.0 - r * r).powi(2)).unwrap();
        let eb = gagliardo_energy(&ub, &prm, &qc).unwrap();
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let imesh = Arc::new(build_mesh(&dom, 129, Grading::Uniform).unwrap());
        let ui = GridFunction::from_fn(imesh, |x| (1.0 - x * x).powi(2)).unwrap();
        let ei = gagliardo_energy(&ui, &prm, &qc).unwrap();
        assert!((eb - ei).abs() < 1e-6 * ei, "ball {eb} vs interval {ei}");
    }

    #[test]
    fn weak_residual_zero_and_homogeneity() {
        let prm = Params::new(0.4, 3.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let dom = DomainSpec::interval(-1.0, 1.0, 0.2).unwrap();
        let mesh = Arc::new(build_mesh(&dom, 17, Grading::Uniform).unwrap());
        let zero = GridFunction::zeros(mesh.clone());
        let r0 = weak_residual(&zero, &zero, &prm, &qc).unwrap();
        assert_eq!(r0.sup_norm(), 0.0);
        // with rhs = 0 the residual is (p-1)-homogeneous: factor 4 at p = 3
        let u = GridFunction::from_fn(mesh, |x| (1.0 - x * x) * (1.0 + 0.2 * x)).unwrap();
        let r1 = weak_residual(&u, &zero, &prm, &qc).unwrap();
        let r2 = weak_residual(&u.scale(2.0), &zero, &prm, &qc).unwrap();
        for i in 0..r1.len() {
            assert!(
                (r2.values()[i] - 4.0 * r1.values()[i]).abs()
                    <= 1e-12 * r1.values()[i].abs().max(1e-12),
                "node {i}"
            );
        }
    }

    #[test]
    fn energy_identity_sum_u_times_gradient() {
        // sum_i u_i A(u)[phi_i] = energy(u) exactly on the discrete space
        let prm = Params::new(0.3, 2.5, 1).unwrap();
        let qc = QuadratureConfig::default();
        let u = hat(25);
        let e = gagliardo_energy(&u, &prm, &qc).unwrap();
        let g = weak_gradient(&u, &prm, &qc).unwrap();
        let dot: f64 = g.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((dot - e).abs() < 1e-11 * e, "{dot} vs {e}");
    }

    #[test]
    fn hat_energy_against_brute_force() {
        // independent oracle: triangle decomposition of the full double
        // integral, [u]^2 = 2 int_x [ int_0^{1-x} (u(x)-u(x+t))^2 t^{-1-sp} dt
        //                            + u(x)^2 ((1-x)^{-sp} + (1+x)^{-sp}) / sp ] dx,
        // with x at 10x the mesh resolution and t graded toward 0.
        let prm = Params::new(0.4, 2.0, 1).unwrap();
        let qc = QuadratureConfig::default();
        let u = hat(129);
        let e = gagliardo_energy(&u, &prm, &qc).unwrap();
        let sp = prm.sp();
        let uf = |x: f64| if x.abs() >= 1.0 { 0.0 } else { 1.0 - x.abs() };
        let m = 1280usize;
        let hh = 2.0 / m as f64;
        let mut brute = 0.0;
        for i in 0..m {
            let x0 = -1.0 + i as f64 * hh;
            brute += crate::quad::integrate_gl(
                |x| {
                    let inner = crate::quad::integrate_graded(
                        |t| (uf(x) - uf(x + t)).powi(2) * t.powf(-(1.0 + sp)),
                        0.0,
                        1.0 - x,
                        true,
                        false,
                        40,
                        8,
                    );
                    let ext = uf(x) * uf(x) * ((1.0 - x).powf(-sp) + (1.0 + x).powf(-sp)) / sp;
                    inner + ext
                },
                x0,
                x0 + hh,
                2,
            );
        }
        brute *= 2.0 * prm.norm_const();
        let rel = (e - brute).abs() / brute;
        assert!(rel < 0.02, "energy {e} vs brute {brute}, rel {rel}");
    }
}
