//! Barrier construction and numerical verification of the boundary
//! estimates.
//!
//! The barrier equals d^beta on the boundary layer and is extended inward by
//! a sextic blend in d that matches value and three derivatives at the layer
//! interface and flattens (zero first and second derivative) at the
//! incenter, so the composite is C^2 across the inradius ridge of d and C^3
//! at the interface. Third-order contact keeps the blend above d^beta
//! without inflating the interior level, which would otherwise pollute the
//! boundary asymptotics the verifiers measure. The verifiers evaluate the
//! operator on log-spaced samples of d and report fitted exponents and
//! constants, never the proof's.

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec, Mesh};
use crate::operator::{
    eval_fplap_pointwise, ClosedForm, GridFunction, Params, Profile, QuadratureConfig,
};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub dom: DomainSpec,
    /// Exponent of d^beta on the layer; 0 < beta < sp/(p-1).
    pub beta: f64,
    /// Layer width; defaults to the domain's delta.
    pub delta: f64,
    /// Flat interior level as a multiple of inradius^beta. The extension must
    /// dominate d^beta, which is checked at build time.
    pub flat_factor: f64,
}

impl BarrierSpec {
    pub fn new(dom: DomainSpec, beta: f64) -> Self {
        let delta = dom.delta;
        BarrierSpec { dom, beta, delta, flat_factor: 1.25 }
    }
}

/// The barrier xi as a closed-form callable with exact derivatives in d.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub spec: BarrierSpec,
    /// Blend coefficients in tau = (d - delta)/(D - delta).
    coef: [f64; 7],
    inradius: f64,
}

/// Build the barrier; fails if beta is out of range or the blend dips below
/// d^beta anywhere (the flat factor is then too small).
pub fn build_barrier(spec: &BarrierSpec, prm: &Params) -> Result<Barrier> {
    prm.check_beta(spec.beta)?;
    spec.dom.validate()?;
    if !(spec.delta > 0.0 && spec.delta < spec.dom.inradius()) {
        return Err(Error::Config(format!(
            "barrier layer width must lie in (0, inradius), got {}",
            spec.delta
        )));
    }
    if spec.flat_factor <= 1.0 {
        return Err(Error::Config("flat_factor must exceed 1".into()));
    }
    let d0 = spec.delta;
    let dd = spec.dom.inradius();
    let beta = spec.beta;
    let len = dd - d0;
    // blend q(tau) with third-order contact to d^beta at tau = 0 and a flat
    // end (q' = q'' = 0) at tau = 1
    let c0 = d0.powf(beta);
    let c1 = beta * d0.powf(beta - 1.0) * len;
    let c2 = 0.5 * beta * (beta - 1.0) * d0.powf(beta - 2.0) * len * len;
    let c3 = beta * (beta - 1.0) * (beta - 2.0) * d0.powf(beta - 3.0) * len * len * len / 6.0;
    let tail_coeffs = |flat: f64| -> (f64, f64, f64) {
        let r0 = flat - (c0 + c1 + c2 + c3);
        let r1 = -(c1 + 2.0 * c2 + 3.0 * c3);
        let r2 = -(2.0 * c2 + 6.0 * c3);
        // [1 1 1; 4 5 6; 12 20 30] [c4 c5 c6]^T = [r0 r1 r2]^T
        let c4 = (30.0 * r0 - 10.0 * r1 + r2) / 2.0;
        let c5 = (-48.0 * r0 + 18.0 * r1 - 2.0 * r2) / 2.0;
        let c6 = (20.0 * r0 - 8.0 * r1 + r2) / 2.0;
        (c4, c5, c6)
    };
    let mut spec_used = spec.clone();
    // extension inequality r(x) >= d^beta; escalate the flat level if the
    // blend ever sags below the power profile
    'escalate: for _ in 0..16 {
        let flat = spec_used.flat_factor * dd.powf(beta);
        let (c4, c5, c6) = tail_coeffs(flat);
        let barrier = Barrier {
            spec: spec_used.clone(),
            coef: [c0, c1, c2, c3, c4, c5, c6],
            inradius: dd,
        };
        for k in 0..=4000 {
            let d = d0 + (dd - d0) * k as f64 / 4000.0;
            if barrier.profile_of_d(d) < d.powf(beta) - 1e-9 {
                spec_used.flat_factor *= 1.1;
                continue 'escalate;
            }
        }
        return Ok(barrier);
    }
    Err(Error::Config(
        "interior extension cannot dominate d^beta even after flat-factor escalation".into(),
    ))
}

impl Barrier {
    /// xi as a function of the distance d >= 0.
    pub fn profile_of_d(&self, d: f64) -> f64 {
        if d <= 0.0 {
            0.0
        } else if d <= self.spec.delta {
            d.powf(self.spec.beta)
        } else {
            let tau = ((d - self.spec.delta) / (self.inradius - self.spec.delta)).min(1.0);
            let c = &self.coef;
            c[0] + tau
                * (c[1]
                    + tau * (c[2] + tau * (c[3] + tau * (c[4] + tau * (c[5] + tau * c[6])))))
        }
    }

    /// Analytic (value, d/dd, d2/dd2) of the two branches at the layer
    /// interface d = delta: power side first, blend side second.
    pub fn interface_derivatives(&self) -> ([f64; 3], [f64; 3]) {
        let beta = self.spec.beta;
        let d0 = self.spec.delta;
        let len = self.inradius - d0;
        let power = [
            d0.powf(beta),
            beta * d0.powf(beta - 1.0),
            beta * (beta - 1.0) * d0.powf(beta - 2.0),
        ];
        let c = &self.coef;
        let blend = [c[0], c[1] / len, 2.0 * c[2] / (len * len)];
        (power, blend)
    }

    /// xi(x) for a point given in ambient coordinates.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self.spec.dom.distance_to_boundary(x) {
            Ok(d) => self.profile_of_d(d),
            Err(_) => 0.0,
        }
    }

    /// The barrier as a mesh-coordinate profile for operator evaluation.
    pub fn as_profile(&self) -> impl Profile + '_ {
        let dom = self.spec.dom.clone();
        let (lo, hi) = match &dom.kind {
            DomainKind::Interval { a, b } => (*a, *b),
            DomainKind::Ball { radius, .. } => (0.0, *radius),
        };
        // breakpoints: blend interfaces at d = delta (C^2 but split anyway)
        let breaks = match &dom.kind {
            DomainKind::Interval { a, b } => vec![a + self.spec.delta, b - self.spec.delta],
            DomainKind::Ball { radius, .. } => vec![radius - self.spec.delta],
        };
        ClosedForm::new(
            move |c: f64| self.profile_of_d(dom.coord_distance(c)),
            (lo, hi),
            breaks,
        )
    }

    /// Mesh sampling of the barrier (Dirichlet clamp applies at the boundary
    /// where xi = 0 anyway).
    pub fn sample(&self, mesh: Arc<Mesh>) -> Result<GridFunction> {
        if mesh.dom != self.spec.dom {
            return Err(Error::MeshMismatch("barrier domain differs from mesh domain".into()));
        }
        GridFunction::from_fn(mesh, |c| self.profile_of_d(self.spec.dom.coord_distance(c)))
    }
}

/// Verification report for the layer upper estimate.
#[derive(Debug, Clone, Serialize)]
pub struct UpperEstimateReport {
    /// (d, -(-Delta)_p^s xi) samples.
    pub samples: Vec<(f64, f64)>,
    pub all_negative: bool,
    /// Least-squares slope of log(-value) against log d.
    pub fitted_slope: f64,
    /// Target exponent beta (p-1) - sp.
    pub target_slope: f64,
    /// Largest C with value <= -C d^{beta(p-1)-sp} at every sample.
    pub fitted_c: f64,
    pub pass: bool,
}

/// Default barrier sample: 40 points log-spaced in d over (delta/100, delta).
pub fn default_layer_distances(delta: f64) -> Vec<f64> {
    let n = 40;
    let lo = (delta / 100.0).ln();
    let hi = (delta * 0.999).ln();
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Evaluate -(-Delta)_p^s xi on layer samples and fit the boundary exponent.
///
/// `distances` are distances-to-boundary of the sample points, all < delta;
/// samples sit near the "upper" boundary (x = b - d for intervals, r = R - d
/// for balls).
pub fn verify_upper_estimate(
    barrier: &Barrier,
    prm: &Params,
    qc: &QuadratureConfig,
    distances: &[f64],
    slope_tol: f64,
) -> Result<UpperEstimateReport> {
    prm.validate_barrier_range()?;
    prm.check_beta(barrier.spec.beta)?;
    let delta = barrier.spec.delta;
    if distances.iter().any(|&d| !(d > 0.0 && d < delta)) {
        return Err(Error::Domain("all sample distances must lie in (0, delta)".into()));
    }
    let profile = barrier.as_profile();
    let dom = &barrier.spec.dom;
    let (_, hi) = match &dom.kind {
        DomainKind::Interval { a, b } => (*a, *b),
        DomainKind::Ball { radius, .. } => (0.0, *radius),
    };
    let target_slope = barrier.spec.beta * (prm.p - 1.0) - prm.sp();
    let mut samples = Vec::with_capacity(distances.len());
    for &d in distances {
        let x = hi - d;
        let v = -eval_fplap_pointwise(&profile, dom, x, prm, qc)?;
        samples.push((d, v));
    }
    let all_negative = samples.iter().all(|&(_, v)| v < 0.0);
    let (fitted_slope, _) = log_log_fit(
        samples
            .iter()
            .filter(|&&(_, v)| v < 0.0)
            .map(|&(d, v)| (d, -v)),
    );
    let fitted_c = samples
        .iter()
        .map(|&(d, v)| -v / d.powf(target_slope))
        .fold(f64::INFINITY, f64::min);
    let pass = all_negative && (fitted_slope - target_slope).abs() <= slope_tol;
    Ok(UpperEstimateReport { samples, all_negative, fitted_slope, target_slope, fitted_c, pass })
}

/// Probe the first beta in an upward sweep where the layer sign claim fails.
/// Returns the last passing beta and the first failing one (None if the sweep
/// is exhausted without failure).
pub fn probe_beta0(
    dom: &DomainSpec,
    prm: &Params,
    qc: &QuadratureConfig,
    betas: &[f64],
    distances: &[f64],
) -> Result<(Option<f64>, Option<f64>)> {
    let mut last_ok = None;
    for &beta in betas {
        if prm.check_beta(beta).is_err() {
            return Ok((last_ok, Some(beta)));
        }
        let spec = BarrierSpec::new(dom.clone(), beta);
        let barrier = build_barrier(&spec, prm)?;
        let rep = verify_upper_estimate(&barrier, prm, qc, distances, f64::INFINITY)?;
        if !rep.all_negative {
            return Ok((last_ok, Some(beta)));
        }
        last_ok = Some(beta);
    }
    Ok((last_ok, None))
}

/// Per-tau report for the scaled lower estimate.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledEstimateReport {
    pub theta: f64,
    pub exponent: f64,
    /// (tau, fitted c0) with c0 = min over samples of value / d_tau^{exponent}.
    pub c0_by_tau: Vec<(f64, f64)>,
    /// max(c0)/min(c0) over the tau sweep.
    pub spread: f64,
    pub all_positive: bool,
    pub pass: bool,
}

/// Geometry of the rescaled picture in image mesh coordinates. For
/// intervals the anchor x0 is an endpoint and xi^tau varies along the line;
/// for balls xi^tau stays radial about the image center, so only the image
/// radial coordinate matters.
struct ScaledFrame {
    image: DomainSpec,
    /// image mesh coordinate of a point at scaled distance d from the anchor
    anchor_minus: Box<dyn Fn(f64) -> f64>,
    /// base distance-to-boundary of the point with image mesh coordinate y
    base_distance: Box<dyn Fn(f64) -> f64>,
    /// blend-interface images (quadrature breakpoints)
    breaks: Vec<f64>,
}

fn scaled_frame(dom: &DomainSpec, x0: &[f64], tau: f64, delta: f64) -> Result<ScaledFrame> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    let d0 = dom.distance_to_boundary(x0)?;
    if d0.abs() > 1e-10 * dom.diameter() {
        return Err(Error::Config("x0 must lie on the boundary".into()));
    }
    match &dom.kind {
        DomainKind::Interval { a, b } => {
            let (a, b) = (*a, *b);
            let x00 = x0[0];
            let image = DomainSpec::interval((a - x00) / tau, (b - x00) / tau, delta)?;
            let at_upper = (x00 - b).abs() < (x00 - a).abs();
            let sign = if at_upper { -1.0 } else { 1.0 };
            let dom_c = dom.clone();
            Ok(ScaledFrame {
                image,
                anchor_minus: Box::new(move |d: f64| sign * d),
                base_distance: Box::new(move |y: f64| dom_c.coord_distance(x00 + tau * y)),
                breaks: vec![(a + delta - x00) / tau, (b - delta - x00) / tau],
            })
        }
        DomainKind::Ball { radius, dim, .. } => {
            let rr = *radius;
            let image = DomainSpec::origin_ball(rr / tau, *dim, delta)?;
            Ok(ScaledFrame {
                image,
                anchor_minus: Box::new(move |d: f64| rr / tau - d),
                base_distance: Box::new(move |y: f64| rr - tau * y),
                breaks: vec![(rr - delta) / tau],
            })
        }
    }
}

/// Evaluate (-Delta)_p^s xi^tau_{x0} over layer samples of each scaled
/// domain and report the fitted lower constants c0 across the tau sweep.
/// Uniformity (spread below `spread_tol`) is the lemma's content.
pub fn verify_scaled_estimate(
    dom: &DomainSpec,
    x0: Vec<f64>,
    prm: &Params,
    qc: &QuadratureConfig,
    taus: &[f64],
    distances: &[f64],
    spread_tol: f64,
) -> Result<ScaledEstimateReport> {
    prm.validate_barrier_range()?;
    let theta = prm.theta_exp;
    prm.check_theta(theta)?;
    let beta = prm.sp() - theta;
    let exponent = prm.s * prm.p * prm.p - 2.0 * prm.sp() - theta * (prm.p - 1.0);
    let delta = dom.delta;
    if distances.iter().any(|&d| !(d > 0.0 && d < delta)) {
        return Err(Error::Domain("scaled samples must have d_tau in (0, delta)".into()));
    }

    let spec = BarrierSpec::new(dom.clone(), beta);
    let barrier = build_barrier(&spec, prm)?;
    let mut c0_by_tau = Vec::with_capacity(taus.len());
    let mut all_positive = true;
    for &tau in taus {
        let frame = scaled_frame(dom, &x0, tau, delta)?;
        let (lo_i, hi_i) = match &frame.image.kind {
            DomainKind::Interval { a, b } => (*a, *b),
            DomainKind::Ball { radius, .. } => (0.0, *radius),
        };
        let b2 = barrier.clone();
        let base_d = frame.base_distance;
        let profile = ClosedForm::new(
            move |y: f64| b2.profile_of_d(base_d(y)),
            (lo_i, hi_i),
            frame.breaks.clone(),
        );
        let mut c0 = f64::INFINITY;
        for &d in distances {
            let y = (frame.anchor_minus)(d);
            let v = eval_fplap_pointwise(&profile, &frame.image, y, prm, qc)?;
            if v <= 0.0 {
                all_positive = false;
            }
            c0 = c0.min(v / d.powf(exponent));
        }
        c0_by_tau.push((tau, c0));
    }
    let cmax = c0_by_tau.iter().map(|&(_, c)| c).fold(f64::NEG_INFINITY, f64::max);
    let cmin = c0_by_tau.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
    let spread = if cmin > 0.0 { cmax / cmin } else { f64::INFINITY };
    let pass = all_positive && spread <= spread_tol;
    Ok(ScaledEstimateReport { theta, exponent, c0_by_tau, spread, all_positive, pass })
}

/// Comparison-bound report: nodewise margin of R xi^tau over u on the layer.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonBoundReport {
    pub r_factor: f64,
    pub c0: f64,
    pub min_margin: f64,
    pub pass: bool,
}

/// Check u <= R xi^tau_{x0} on layer nodes, with
/// R = (c1/c0)^{1/(p-1)} + (tau delta)^{theta - sp} ||u||_inf.
/// A constructed violation shows up as a negative margin.
pub fn comparison_bound_check(
    u: &GridFunction,
    dom: &DomainSpec,
    x0: Vec<f64>,
    tau: f64,
    prm: &Params,
    qc: &QuadratureConfig,
    c1: f64,
) -> Result<ComparisonBoundReport> {
    let theta = prm.theta_exp;
    prm.check_theta(theta)?;
    let beta = prm.sp() - theta;
    let delta = dom.delta;

    // fitted c0 for this tau
    let rep = verify_scaled_estimate(
        dom,
        x0.clone(),
        prm,
        qc,
        &[tau],
        &default_layer_distances(delta),
        f64::INFINITY,
    )?;
    let c0 = rep.c0_by_tau[0].1;
    if c0 <= 0.0 {
        return Err(Error::Numerical("scaled lower estimate failed; no positive c0".into()));
    }
    let r_factor = (c1 / c0).powf(1.0 / (prm.p - 1.0))
        + (tau * delta).powf(theta - prm.sp()) * u.sup_norm();

    let spec = BarrierSpec::new(dom.clone(), beta);
    let barrier = build_barrier(&spec, prm)?;
    let frame = scaled_frame(dom, &x0, tau, delta)?;
    let mesh = u.mesh();
    let mut min_margin = f64::INFINITY;
    for (i, &y) in mesh.nodes.iter().enumerate() {
        let d_tau = mesh.dom.coord_distance(y);
        if !(d_tau > 0.0 && d_tau < delta) {
            continue;
        }
        let xi_tau = barrier.profile_of_d((frame.base_distance)(y));
        let margin = r_factor * xi_tau - u.values()[i];
        min_margin = min_margin.min(margin);
    }
    if !min_margin.is_finite() {
        return Err(Error::Resolution("no layer nodes for the comparison bound".into()));
    }
    Ok(ComparisonBoundReport { r_factor, c0, min_margin, pass: min_margin >= 0.0 })
}

/// Nodewise margin of a FIXED comparison function R xi^tau over u on the
/// layer; negative margins flag violations of a previously computed bound.
pub fn comparison_margin_fixed_r(
    u: &GridFunction,
    dom: &DomainSpec,
    x0: Vec<f64>,
    tau: f64,
    prm: &Params,
    r_factor: f64,
) -> Result<f64> {
    let theta = prm.theta_exp;
    prm.check_theta(theta)?;
    let beta = prm.sp() - theta;
    let delta = dom.delta;
    let barrier = build_barrier(&BarrierSpec::new(dom.clone(), beta), prm)?;
    let frame = scaled_frame(dom, &x0, tau, delta)?;
    let mesh = u.mesh();
    let mut min_margin = f64::INFINITY;
    for (i, &y) in mesh.nodes.iter().enumerate() {
        let d_tau = mesh.dom.coord_distance(y);
        if !(d_tau > 0.0 && d_tau < delta) {
            continue;
        }
        let xi_tau = barrier.profile_of_d((frame.base_distance)(y));
        min_margin = min_margin.min(r_factor * xi_tau - u.values()[i]);
    }
    if !min_margin.is_finite() {
        return Err(Error::Resolution("no layer nodes for the comparison margin".into()));
    }
    Ok(min_margin)
}

fn log_log_fit(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept.exp())
}
