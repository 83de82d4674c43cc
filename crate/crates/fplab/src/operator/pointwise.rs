//! Pointwise operator evaluation and the fractional gradient.
//!
//! The symmetrized integrand (u(x)-u(x+z))^{p-1} + (u(x)-u(x-z))^{p-1}
//! cancels the leading singularity at z = 0, so the integral is split into
//! panels between the profile's breakpoint offsets with geometric grading
//! toward z = 0 and toward the offsets where x +- z crosses the support
//! boundary. The exterior contribution, where the profile vanishes, is
//! integrated in closed form against the kernel.

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec};
use crate::operator::kernels::sphere_area;
use crate::operator::{sgn_pow, Params, Profile, QuadratureConfig};
use crate::quad::{gl_rule, graded_toward_hi, graded_toward_lo};

/// Evaluate the fractional p-Laplacian of a profile at an interior point.
///
/// `x` is the mesh coordinate of the evaluation point: the abscissa for an
/// interval domain, the radius for a ball (profiles on balls are radial).
pub fn eval_fplap_pointwise(
    u: &dyn Profile,
    dom: &DomainSpec,
    x: f64,
    prm: &Params,
    qc: &QuadratureConfig,
) -> Result<f64> {
    qc.validate()?;
    prm.validate_base()?;
    match &dom.kind {
        DomainKind::Interval { .. } => eval_interval(u, dom, x, prm, qc, Integrand::SignedPower),
        DomainKind::Ball { .. } => eval_radial(u, dom, x, prm, qc, Integrand::SignedPower),
    }
}

/// |D^s u(x)|^p, the fractional gradient of Definition-style form
/// int |u(x+h) - u(x)|^p / |h|^{N+sp} dh.
pub fn fractional_gradient(
    u: &dyn Profile,
    dom: &DomainSpec,
    x: f64,
    prm: &Params,
    qc: &QuadratureConfig,
) -> Result<f64> {
    qc.validate()?;
    prm.validate_base()?;
    match &dom.kind {
        DomainKind::Interval { .. } => eval_interval(u, dom, x, prm, qc, Integrand::AbsPower),
        DomainKind::Ball { .. } => eval_radial(u, dom, x, prm, qc, Integrand::AbsPower),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Integrand {
    /// (u(x)-u(x+z))^{p-1} + (u(x)-u(x-z))^{p-1}, the symmetrized operator.
    SignedPower,
    /// |u(x+z)-u(x)|^p + |u(x-z)-u(x)|^p, the fractional-gradient density.
    AbsPower,
}

fn check_interior(dom: &DomainSpec, x: f64) -> Result<f64> {
    let d = dom.coord_distance(x);
    if d <= 0.0 {
        return Err(Error::Domain(format!(
            "evaluation point must be interior: coordinate {x} has d = {d}"
        )));
    }
    Ok(d)
}

fn eval_interval(
    u: &dyn Profile,
    dom: &DomainSpec,
    x: f64,
    prm: &Params,
    qc: &QuadratureConfig,
    which: Integrand,
) -> Result<f64> {
    let d = check_interior(dom, x)?;
    let (a, b) = u.support();
    let sp = prm.sp();
    let pm1 = prm.p - 1.0;

    // grid profiles cannot resolve points hugging the boundary
    let breaks = u.breakpoints();
    if breaks.len() > 2 {
        let h_local = local_gap(&breaks, x);
        if d < h_local {
            return Err(Error::Resolution(format!(
                "point at distance {d} from the boundary is inside one mesh cell ({h_local})"
            )));
        }
    }

    let z_reach = (x - a).max(b - x);
    // offsets where x+z or x-z crosses a breakpoint or the support boundary
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * breaks.len() + 4);
    for c in breaks.iter().chain([a, b].iter()) {
        let t = (x - c).abs();
        if t > 0.0 && t < z_reach {
            cuts.push(t);
        }
    }
    // boundary-crossing offsets attract grading (Hoelder kinks of d^beta type)
    let singular = [x - a, b - x];
    cuts.extend(singular.iter().copied().filter(|&t| t > 0.0 && t < z_reach));
    cuts.push(z_reach);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup_by(|p, q| (*p - *q).abs() < 1e-15 * z_reach);

    let ux = u.value(x);
    let f = |z: f64| -> f64 {
        let up = u.value(x + z);
        let um = u.value(x - z);
        match which {
            Integrand::SignedPower => {
                (sgn_pow(ux - up, pm1) + sgn_pow(ux - um, pm1)) * z.powf(-(1.0 + sp))
            }
            Integrand::AbsPower => {
                ((up - ux).abs().powf(prm.p) + (um - ux).abs().powf(prm.p)) * z.powf(-(1.0 + sp))
            }
        }
    };

    let is_sing = |t: f64| singular.iter().any(|&s| (s - t).abs() < 1e-13 * z_reach);
    let mut total = 0.0;
    let mut lo = 0.0;
    let (xs, ws) = gl_rule(qc.gl_order);
    for &hi in &cuts {
        if hi <= lo {
            continue;
        }
        // near field: symmetrization cancels the singularity but closed-form
        // profiles still need grading toward 0; breakpoint offsets are C^0
        // kinks, boundary crossings are Hoelder points. Grading toward z = 0
        // is capped: below ~2^-14 of the panel the second difference drowns
        // in f64 roundoff and the kernel amplifies the noise.
        let toward_lo = lo == 0.0 || is_sing(lo);
        let toward_hi = is_sing(hi);
        let lo_levels = if lo == 0.0 { qc.graded_levels.min(14) } else { qc.graded_levels };
        let panels: Vec<(f64, f64)> = match (toward_lo, toward_hi) {
            (false, false) => vec![(lo, hi)],
            (true, false) => graded_toward_lo(lo, hi, lo_levels),
            (false, true) => graded_toward_hi(lo, hi, qc.graded_levels),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                let mut p = graded_toward_lo(lo, mid, lo_levels);
                p.extend(graded_toward_hi(mid, hi, qc.graded_levels));
                p
            }
        };
        for (plo, phi) in panels {
            let mid = 0.5 * (plo + phi);
            let hl = 0.5 * (phi - plo);
            let mut acc = 0.0;
            for (xg, wg) in xs.iter().zip(ws) {
                acc += wg * f(mid + hl * xg);
            }
            total += acc * hl;
        }
        lo = hi;
    }
    // exterior of the support: both translates vanish
    let tail_coeff = match which {
        Integrand::SignedPower => 2.0 * sgn_pow(ux, pm1),
        Integrand::AbsPower => 2.0 * ux.abs().powf(prm.p),
    };
    total += tail_coeff * z_reach.powf(-sp) / sp;

    let value = prm.norm_const() * 2.0 * total;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite operator value at x = {x}")));
    }
    Ok(value)
}

fn local_gap(breaks: &[f64], x: f64) -> f64 {
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::INFINITY;
    for &c in breaks {
        if c <= x && c > below {
            below = c;
        }
        if c >= x && c < above {
            above = c;
        }
    }
    if below.is_finite() && above.is_finite() {
        above - below
    } else {
        0.0
    }
}

/// Radial evaluation: the sphere average of the symmetrized integrand is
/// computed by angular quadrature at each |z| panel point, pairing the +z
/// and -z evaluations so the near-field cancellation survives in floating
/// point.
fn eval_radial(
    u: &dyn Profile,
    dom: &DomainSpec,
    r0: f64,
    prm: &Params,
    qc: &QuadratureConfig,
    which: Integrand,
) -> Result<f64> {
    if r0 < 0.0 {
        return Err(Error::Domain("radius must be nonnegative".into()));
    }
    check_interior(dom, r0)?;
    let (_, rad) = u.support();
    let n = prm.dim;
    if n < 2 {
        return Err(Error::Config(
            "radial pointwise evaluation needs dimension >= 2; use an interval domain in 1D".into(),
        ));
    }
    let sp = prm.sp();
    let pm1 = prm.p - 1.0;
    let u0 = u.value(r0);

    // singular |z| offsets: tangency radii of breakpoint spheres
    let mut breaks = u.breakpoints();
    breaks.push(rad);
    let z_reach = r0 + rad;
    let mut cuts: Vec<f64> = Vec::new();
    for &c in &breaks {
        for t in [(c - r0).abs(), c + r0] {
            if t > 0.0 && t < z_reach {
                cuts.push(t);
            }
        }
    }
    cuts.push(z_reach);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup_by(|p, q| (*p - *q).abs() < 1e-14 * z_reach);

    let boundary_tangent = [(rad - r0).abs(), rad + r0];
    let is_sing = |t: f64| boundary_tangent.iter().any(|&s| (s - t).abs() < 1e-13 * z_reach);

    let wm2 = n as i32 - 2;
    let ang_rule = gl_rule(16);
    // sphere average of the paired integrand at |z| = rho
    let sphere_avg = |rho: f64| -> f64 {
        let mut acc = 0.0;
        let (half, scale) = (0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI);
        for (xg, wg) in ang_rule.0.iter().zip(&ang_rule.1) {
            let phi = half + scale * xg;
            let cph = phi.cos();
            let wp = (r0 * r0 + rho * rho + 2.0 * r0 * rho * cph).max(0.0).sqrt();
            let wm = (r0 * r0 + rho * rho - 2.0 * r0 * rho * cph).max(0.0).sqrt();
            let pair = match which {
                Integrand::SignedPower => sgn_pow(u0 - u.value(wp), pm1) + sgn_pow(u0 - u.value(wm), pm1),
                Integrand::AbsPower => {
                    (u.value(wp) - u0).abs().powf(prm.p) + (u.value(wm) - u0).abs().powf(prm.p)
                }
            };
            acc += wg * pair * phi.sin().abs().powi(wm2);
        }
        sphere_area(n - 2) * acc * scale
    };

    let (xs, ws) = gl_rule(qc.gl_order);
    let mut total = 0.0;
    let mut lo = 0.0;
    for &hi in &cuts {
        if hi <= lo {
            continue;
        }
        let toward_lo = lo == 0.0 || is_sing(lo);
        let toward_hi = is_sing(hi);
        let lo_levels = if lo == 0.0 { qc.graded_levels.min(14) } else { qc.graded_levels.min(26) };
        let hi_levels = qc.graded_levels.min(26);
        let panels: Vec<(f64, f64)> = match (toward_lo, toward_hi) {
            (false, false) => vec![(lo, hi)],
            (true, false) => graded_toward_lo(lo, hi, lo_levels),
            (false, true) => graded_toward_hi(lo, hi, hi_levels),
            (true, true) => {
                let mid = 0.5 * (lo + hi);
                let mut p = graded_toward_lo(lo, mid, lo_levels);
                p.extend(graded_toward_hi(mid, hi, hi_levels));
                p
            }
        };
        for (plo, phi) in panels {
            let mid = 0.5 * (plo + phi);
            let hl = 0.5 * (phi - plo);
            let mut acc = 0.0;
            for (xg, wg) in xs.iter().zip(ws) {
                let rho = mid + hl * xg;
                acc += wg * sphere_avg(rho) * rho.powf(-(1.0 + sp));
            }
            total += acc * hl;
        }
        lo = hi;
    }
    // beyond r0 + R both translates vanish on the whole sphere
    let tail_coeff = match which {
        Integrand::SignedPower => 2.0 * sgn_pow(u0, pm1),
        Integrand::AbsPower => 2.0 * u0.abs().powf(prm.p),
    };
    total += sphere_area(n - 1) * tail_coeff * z_reach.powf(-sp) / sp;

    let value = prm.norm_const() * total;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("non-finite operator value at r = {r0}")));
    }
    Ok(value)
}
