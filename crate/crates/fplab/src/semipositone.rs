//! The rescaled semipositone problem (-Delta)_p^s w = w^r - gamma^r, solved
//! by continuation in gamma from the gamma = 0 Lane-Emden state.
//!
//! Each branch point is a fixed point of w = K(w_+^r - gamma^r). A damped
//! Picard predictor follows the spec of the homotopy map; because the
//! linearized Picard map has the multiplier r/(p-1) > 1 along the amplitude
//! direction, a Newton corrector on the weak form finishes every step.
//! Positivity is certified by the interior minimum together with the Hopf
//! quotient on the inner half of the boundary layer.

use crate::dirichlet::{hopf_quotient_layer, solve_k_lenient, solve_k_load, SolveConfig, SolveReport};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec, Grading, Mesh};
use crate::operator::{sgn_pow, Discretization, GridFunction, Params};
use nalgebra::LU;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Strictly increasing gamma grid starting at 0.
    pub gammas: Vec<f64>,
    pub solve: SolveConfig,
    /// Picard damping weight.
    pub omega: f64,
    /// Damped Picard predictor steps per gamma value.
    pub picard_steps: usize,
    /// Hopf layer as a fraction of the domain delta.
    pub positivity_layer_frac: f64,
    /// Fixed-point tolerance in solution units; branch points must satisfy
    /// residual_S <= 2 * fixed_point_tol.
    pub fixed_point_tol: f64,
    /// Bracket the breakdown gamma to this relative width (0 disables).
    pub bracket_rel: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            gammas: (0..=6).map(|k| 0.05 * k as f64).collect(),
            solve: SolveConfig::default(),
            omega: 0.3,
            picard_steps: 4,
            positivity_layer_frac: 0.5,
            fixed_point_tol: 1e-8,
            bracket_rel: 0.01,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.gammas[0] != 0.0 {
            return Err(Error::Config("gamma grid must start at 0".into()));
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("gamma grid must be strictly increasing".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config("damping omega must lie in (0, 1]".into()));
        }
        self.solve.validate()
    }
}

/// One converged point of the continuation branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub gamma: f64,
    pub w: GridFunction,
    /// ||w - K(w_+^r - gamma^r)||_inf.
    pub residual: f64,
    pub hopf_min: f64,
    pub sup_norm: f64,
    pub interior_min: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSummary {
    pub gamma: f64,
    pub residual: f64,
    pub hopf_min: f64,
    pub sup_norm: f64,
    pub interior_min: f64,
    pub positive: bool,
}

impl BranchPoint {
    pub fn summary(&self) -> BranchSummary {
        BranchSummary {
            gamma: self.gamma,
            residual: self.residual,
            hopf_min: self.hopf_min,
            sup_norm: self.sup_norm,
            interior_min: self.interior_min,
            positive: self.positive,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub points: Vec<BranchPoint>,
    /// Last gamma with a converged positive solution.
    pub gamma_star: f64,
}

/// ||w - K(w_+^r - gamma^r)||_inf, the homotopy fixed-point residual.
pub fn residual_s(
    gamma: f64,
    w: &GridFunction,
    disc: &Discretization,
    cfg: &SolveConfig,
) -> Result<f64> {
    let prm = disc.prm();
    let rhs: Vec<f64> = w
        .values()
        .iter()
        .map(|&v| sgn_pow(v.max(0.0), prm.r) - sgn_pow(gamma, prm.r))
        .collect();
    let b = disc.mass_apply(&rhs);
    let kf = solve_k_load(disc, &b, cfg)?.solution;
    Ok(w.values()
        .iter()
        .zip(kf.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Nontrivial nonnegative solution of (-Delta)_p^s w = w^r (gamma = 0) by
/// amplitude-renormalized fixed-point iteration with a Newton finish.
/// Nontriviality is certified against lambda_1^{1/(r-p+1)}.
pub fn solve_lane_emden(disc: &Discretization, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let prm = *disc.prm();
    prm.check_growth_exponent(prm.r)?;
    let r = prm.r;
    let p = prm.p;

    // shape iteration: v <- K(v_+^r) renormalized to sup 1; the scaling
    // mismatch t -> t^{r/(p-1)} then pins the amplitude
    let (lo, hi) = disc.mesh().coord_range();
    let mut v = disc.grid_fn(|c| {
        let t = (c - lo) / (hi - lo);
        (std::f64::consts::PI * t).sin()
    });
    v = v.scale(1.0 / v.sup_norm());
    let mut scale_c = 1.0;
    let inner = SolveConfig {
        tol: (cfg.tol * 1e2).max(1e-12),
        ..cfg.clone()
    };
    for _ in 0..60 {
        let rhs: Vec<f64> = v.values().iter().map(|&t| t.max(0.0).powf(r)).collect();
        let b = disc.mass_apply(&rhs);
        let tv = solve_k_load(disc, &b, &inner)?.solution;
        let c = tv.sup_norm();
        if c == 0.0 {
            return Err(Error::Convergence("Lane-Emden iteration collapsed to zero".into()));
        }
        let next = tv.scale(1.0 / c);
        let diff = next
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        scale_c = c;
        if diff < 1e-12 {
            break;
        }
    }
    let t = scale_c.powf(-(p - 1.0) / (r - p + 1.0));
    let w = v.scale(t);

    // Newton finish on A(w) = M w_+^r
    let (w_out, res, iters) = newton_branch(disc, &w, 0.0, cfg, 40)?;
    let w = w_out;

    let (hopf_min, _) = hopf_quotient_layer(&w, &prm, disc.mesh().dom.delta)?;
    let weighted_sup = crate::dirichlet::weighted_sup_norm(&w, &prm);
    let energy = disc.energy(&w) / p
        - disc.local_integral(&w, |t| t.max(0.0).powf(r + 1.0) / (r + 1.0));
    Ok(SolveReport {
        solution: w,
        residual_norm: res,
        iterations: iters,
        energy,
        hopf_min,
        weighted_sup,
    })
}

/// Newton iteration on F(w) = A(w) - M(w_+^r - gamma^r). Returns the
/// iterate, its weak-residual sup norm, and the iteration count.
fn newton_branch(
    disc: &Discretization,
    w0: &GridFunction,
    gamma: f64,
    cfg: &SolveConfig,
    max_iter: usize,
) -> Result<(GridFunction, f64, usize)> {
    let prm = *disc.prm();
    let r = prm.r;
    let gr = sgn_pow(gamma, r);
    let mut w = w0.clone();
    let mut res = f64::INFINITY;
    for it in 0..max_iter {
        let rhs: Vec<f64> = w.values().iter().map(|&t| t.max(0.0).powf(r) - gr).collect();
        let b = disc.mass_apply(&rhs);
        let g: Vec<f64> = disc
            .weak_gradient(&w)
            .iter()
            .zip(&b)
            .map(|(a, bi)| a - bi)
            .collect();
        res = disc.free().iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if res <= cfg.tol {
            return Ok((w, res, it));
        }
        let jac = disc.tangent(&w) - disc.weighted_mass(&w, |t| r * t.max(0.0).powf(r - 1.0));
        let jf = disc.restrict(&jac);
        let gf = disc.gather_free(&g);
        let lu = LU::new(jf);
        let step = lu
            .solve(&(-gf))
            .ok_or_else(|| Error::Numerical("singular Jacobian in branch Newton".into()))?;
        let dw = disc.scatter_free(&step);
        // damped Newton: backtrack on the residual norm
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand_vals: Vec<f64> = w.values().iter().zip(&dw).map(|(a, d)| a + alpha * d).collect();
            let cand = GridFunction::from_values(w.mesh().clone(), cand_vals)?;
            let rhs_c: Vec<f64> = cand.values().iter().map(|&t| t.max(0.0).powf(r) - gr).collect();
            let b_c = disc.mass_apply(&rhs_c);
            let g_c: Vec<f64> = disc
                .weak_gradient(&cand)
                .iter()
                .zip(&b_c)
                .map(|(a, bi)| a - bi)
                .collect();
            let res_c = disc.free().iter().map(|&i| g_c[i].abs()).fold(0.0, f64::max);
            if res_c < res * (1.0 - 1e-4 * alpha) {
                w = cand;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((w.clone(), res, max_iter))
}

fn branch_point(
    disc: &Discretization,
    gamma: f64,
    w: GridFunction,
    ccfg: &ContinuationConfig,
) -> Result<BranchPoint> {
    let prm = disc.prm();
    let residual = residual_s(gamma, &w, disc, &ccfg.solve)?;
    let layer = disc.mesh().dom.delta * ccfg.positivity_layer_frac;
    let (hopf_min, _) = hopf_quotient_layer(&w, prm, layer)?;
    let interior_min = disc
        .free()
        .iter()
        .map(|&i| w.values()[i])
        .fold(f64::INFINITY, f64::min);
    let positive = hopf_min > 0.0 && interior_min > 0.0;
    Ok(BranchPoint {
        gamma,
        sup_norm: w.sup_norm(),
        residual,
        hopf_min,
        interior_min,
        positive,
        w,
    })
}

/// Continue the branch from gamma = 0, warm-starting each step. Stops on the
/// first non-converged or non-positive step; with `bracket_rel > 0` the
/// breakdown point is bracketed by geometric refinement.
pub fn continue_in_gamma(
    disc: &Discretization,
    ccfg: &ContinuationConfig,
) -> Result<ContinuationResult> {
    ccfg.validate()?;
    let le = solve_lane_emden(disc, &ccfg.solve)?;
    let mut points = vec![branch_point(disc, 0.0, le.solution, ccfg)?];
    if !points[0].positive {
        return Err(Error::Convergence(
            "Lane-Emden state is not positive at this resolution".into(),
        ));
    }
    let mut gamma_star = 0.0;
    let mut stopped = false;
    for &gamma in ccfg.gammas.iter().skip(1) {
        let warm = points.last().unwrap().w.clone();
        match branch_step(disc, &warm, gamma, ccfg)? {
            Some(bp) => {
                let positive = bp.positive;
                points.push(bp);
                if positive {
                    gamma_star = gamma;
                } else {
                    stopped = true;
                    break;
                }
            }
            None => {
                stopped = true;
                break;
            }
        }
    }
    if points.len() == 1 && ccfg.gammas.len() > 1 {
        return Err(Error::Convergence(
            "no gamma > 0 solution found at this resolution".into(),
        ));
    }
    // bracket the breakdown point
    if stopped && ccfg.bracket_rel > 0.0 && gamma_star > 0.0 {
        let mut lo = gamma_star;
        let mut hi = points
            .iter()
            .map(|p| p.gamma)
            .filter(|&g| g > gamma_star)
            .fold(f64::INFINITY, f64::min)
            .min(*ccfg.gammas.last().unwrap());
        while (hi - lo) / lo > ccfg.bracket_rel {
            let mid = 0.5 * (lo + hi);
            let warm = points
                .iter().rfind(|p| p.positive)
                .unwrap()
                .w
                .clone();
            match branch_step(disc, &warm, mid, ccfg)? {
                Some(bp) if bp.positive => {
                    gamma_star = mid;
                    lo = mid;
                    points.push(bp);
                }
                _ => hi = mid,
            }
        }
        points.sort_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap());
    }
    Ok(ContinuationResult { points, gamma_star })
}

/// One damped-Picard + Newton continuation step; Ok(None) when the step does
/// not converge at this gamma.
fn branch_step(
    disc: &Discretization,
    warm: &GridFunction,
    gamma: f64,
    ccfg: &ContinuationConfig,
) -> Result<Option<BranchPoint>> {
    let prm = disc.prm();
    let r = prm.r;
    let gr = sgn_pow(gamma, r);
    let mut w = warm.clone();
    let mut omega = ccfg.omega;
    let mut prev_res = f64::INFINITY;
    for _ in 0..ccfg.picard_steps {
        let rhs: Vec<f64> = w.values().iter().map(|&t| t.max(0.0).powf(r) - gr).collect();
        let b = disc.mass_apply(&rhs);
        let (rep, ok) = solve_k_lenient(disc, &b, &ccfg.solve)?;
        if !ok && disc.prm().p != 2.0 {
            return Ok(None);
        }
        let kw = rep.solution;
        let res = w
            .values()
            .iter()
            .zip(kw.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if res > 2.0 * prev_res {
            omega *= 0.5; // adaptive halving on divergence
            if omega < 1e-3 {
                break;
            }
        }
        prev_res = res;
        w = w.scale(1.0 - omega).axpy(omega, &kw);
    }
    let (w, res, _) = newton_branch(disc, &w, gamma, &ccfg.solve, 40)?;
    if res > ccfg.solve.tol {
        return Ok(None);
    }
    let bp = branch_point(disc, gamma, w, ccfg)?;
    if bp.residual > 2.0 * ccfg.fixed_point_tol {
        return Ok(None);
    }
    Ok(Some(bp))
}

/// Undo the rescaling w = gamma u: returns (u, mu) with mu = gamma^{r+1-p}.
pub fn unscale_to_original(
    w: &GridFunction,
    gamma: f64,
    prm: &Params,
) -> Result<(GridFunction, f64)> {
    if gamma <= 0.0 {
        return Err(Error::Config(
            "unscaling needs gamma > 0; the original problem degenerates at gamma = 0".into(),
        ));
    }
    let u = w.scale(1.0 / gamma);
    let mu = gamma.powf(prm.r + 1.0 - prm.p);
    Ok((u, mu))
}

/// Gidas-Spruck rescaling diagnostic: v(y) = u(x_k + mu_k y)/M_k on the
/// zoomed domain, with x_k the argmax node, M_k = sup u, and
/// mu_k = M_k^{-(q-(p-1))/sp}. Guarantees v(0) = 1 and 0 <= v <= 1.
pub fn gidas_spruck_rescale(u: &GridFunction, prm: &Params) -> Result<(GridFunction, f64)> {
    if u.sup_norm() == 0.0 {
        return Err(Error::Config("rescaling needs a nontrivial function".into()));
    }
    if u.min_value() < 0.0 {
        return Err(Error::Config("rescaling needs a nonnegative function".into()));
    }
    let mesh = u.mesh();
    let (a, b) = match &mesh.dom.kind {
        DomainKind::Interval { a, b } => (*a, *b),
        DomainKind::Ball { .. } => {
            return Err(Error::Config(
                "the rescaling diagnostic zooms at interior maxima and is interval-only".into(),
            ))
        }
    };
    let k = u.argmax();
    let xk = mesh.nodes[k];
    let mk = u.values()[k];
    let mu_k = mk.powf(-(prm.q - (prm.p - 1.0)) / prm.sp());

    let lo = (a - xk) / mu_k;
    let hi = (b - xk) / mu_k;
    let delta = (mesh.dom.delta / mu_k).min(0.45 * (hi - lo));
    let dom = DomainSpec::interval(lo, hi, delta)?;
    let nodes: Vec<f64> = mesh.nodes.iter().map(|&x| (x - xk) / mu_k).collect();
    let zoomed = Arc::new(Mesh { dom, nodes, grading: Grading::Uniform });
    let vals: Vec<f64> = u.values().iter().map(|&t| t / mk).collect();
    let v = GridFunction::from_values(zoomed, vals)?;
    Ok((v, mu_k))
}
