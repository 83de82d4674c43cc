//! The solution operator K (unique weak solution of the Dirichlet problem),
//! the principal eigenpair, comparison checks, and boundary diagnostics.
//!
//! K(f) minimizes J(u) = energy(u)/p - int f u over Dirichlet grid
//! functions. For p = 2 the minimizer is one linear solve with the
//! assembled operator; otherwise a damped Newton iteration with an Armijo
//! line search on J, preconditioned by the kernel-matched linear stiffness,
//! drives the nodal weak residual below tolerance. Strict convexity of J
//! makes the discrete minimizer unique regardless of the path taken.

use crate::error::{Error, Result};
use crate::operator::{Discretization, GridFunction, Params, QuadratureConfig};
use nalgebra::Cholesky;
use serde::Serialize;

#[derive(Debug, Clone)]
pub enum InitialGuess {
    Zero,
    Given(GridFunction),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub max_iter: usize,
    /// Convergence means max_i |A(u)[phi_i] - b_i| <= tol over free nodes.
    pub tol: f64,
    /// Armijo slope fraction.
    pub ls_sigma: f64,
    pub ls_max_backtracks: usize,
    pub initial: InitialGuess,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iter: 300,
            tol: 1e-10,
            ls_sigma: 1e-4,
            ls_max_backtracks: 50,
            initial: InitialGuess::Zero,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("solver needs tol > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

/// Solution plus residual and boundary diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub residual_norm: f64,
    pub iterations: usize,
    /// J(u) at the solution.
    pub energy: f64,
    /// min of u/d^s over nodes in the boundary layer.
    pub hopf_min: f64,
    /// sup of |u|/d^s over interior nodes (the weighted C_d^0 norm).
    pub weighted_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub residual_norm: f64,
    pub iterations: usize,
    pub energy: f64,
    pub hopf_min: f64,
    pub weighted_sup: f64,
    pub sup_norm: f64,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            residual_norm: self.residual_norm,
            iterations: self.iterations,
            energy: self.energy,
            hopf_min: self.hopf_min,
            weighted_sup: self.weighted_sup,
            sup_norm: self.solution.sup_norm(),
        }
    }
}

/// K(f) for a nodally sampled right-hand side.
pub fn solve_k(f: &GridFunction, prm: &Params, cfg: &SolveConfig) -> Result<SolveReport> {
    let disc = Discretization::new(f.mesh().clone(), *prm, QuadratureConfig::default())?;
    solve_k_with(&disc, f, cfg)
}

/// K(f) reusing an assembled discretization.
pub fn solve_k_with(disc: &Discretization, f: &GridFunction, cfg: &SolveConfig) -> Result<SolveReport> {
    let b = disc.mass_apply(f.values());
    solve_k_load(disc, &b, cfg)
}

/// K for a precomputed load vector b_i = int f phi_i.
pub fn solve_k_load(disc: &Discretization, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let (report, converged) = solve_k_inner(disc, b, cfg)?;
    if !converged {
        return Err(Error::Convergence(format!(
            "K solve stalled after {} iterations with residual {}",
            report.iterations, report.residual_norm
        )));
    }
    Ok(report)
}

/// Like `solve_k_load` but hands back the best iterate on non-convergence.
pub fn solve_k_lenient(
    disc: &Discretization,
    b: &[f64],
    cfg: &SolveConfig,
) -> Result<(SolveReport, bool)> {
    cfg.validate()?;
    solve_k_inner(disc, b, cfg)
}

fn solve_k_inner(
    disc: &Discretization,
    b: &[f64],
    cfg: &SolveConfig,
) -> Result<(SolveReport, bool)> {
    let prm = *disc.prm();
    if prm.p == 2.0 {
        let u = disc.solve_linear(b)?;
        let res = residual_inf(disc, &u, b);
        let energy = disc.energy(&u) / prm.p - dot(b, u.values());
        return Ok((make_report(disc, u, res, 1, energy), res <= cfg.tol.max(1e-8)));
    }

    let mut u = match &cfg.initial {
        InitialGuess::Zero => disc.zeros(),
        InitialGuess::Given(g) => {
            g.same_mesh(&disc.zeros())?;
            g.clone()
        }
    };
    let mut j_u = objective(disc, &u, b);
    let mut converged = false;
    let mut iters = 0;
    let mut res = f64::INFINITY;
    for it in 0..cfg.max_iter {
        iters = it + 1;
        let g_full: Vec<f64> = disc
            .weak_gradient(&u)
            .iter()
            .zip(b)
            .map(|(a, bi)| a - bi)
            .collect();
        res = inf_norm_free(disc, &g_full);
        if res <= cfg.tol {
            converged = true;
            break;
        }
        // Newton direction when the tangent factorizes, preconditioned
        // gradient otherwise (the tangent degenerates at u = 0 for p > 2)
        let dir = newton_direction(disc, &u, &g_full)
            .unwrap_or_else(|| disc.precond_solve(&neg(&g_full)));
        let slope: f64 = g_full.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            let d2 = disc.precond_solve(&neg(&g_full));
            let s2: f64 = g_full.iter().zip(&d2).map(|(g, d)| g * d).sum();
            (d2, s2)
        };
        // full step first: near the minimizer Newton contracts the residual
        // quadratically while the objective difference is below roundoff
        let full_vals: Vec<f64> = u.values().iter().zip(&dir).map(|(a, d)| a + d).collect();
        let full = GridFunction::from_values(u.mesh().clone(), full_vals)?;
        if residual_inf(disc, &full, b) < 0.5 * res {
            j_u = objective(disc, &full, b);
            u = full;
            continue;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..cfg.ls_max_backtracks {
            let cand_vals: Vec<f64> = u.values().iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let cand = GridFunction::from_values(u.mesh().clone(), cand_vals)?;
            let j_c = objective(disc, &cand, b);
            if j_c <= j_u + cfg.ls_sigma * alpha * slope {
                u = cand;
                j_u = j_c;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break; // line search exhausted at numerical floor
        }
    }
    let energy = j_u;
    Ok((make_report(disc, u, res, iters, energy), converged))
}

fn newton_direction(disc: &Discretization, u: &GridFunction, g: &[f64]) -> Option<Vec<f64>> {
    if u.sup_norm() == 0.0 {
        return None;
    }
    let h = disc.restrict(&disc.tangent(u));
    let chol = Cholesky::new(h)?;
    let gf = disc.gather_free(g);
    let d = chol.solve(&(-gf));
    Some(disc.scatter_free(&d))
}

fn objective(disc: &Discretization, u: &GridFunction, b: &[f64]) -> f64 {
    disc.energy(u) / disc.prm().p - dot(b, u.values())
}

fn make_report(
    disc: &Discretization,
    u: GridFunction,
    res: f64,
    iterations: usize,
    energy: f64,
) -> SolveReport {
    let (hopf_min, _) = hopf_quotient(&u, disc.prm()).unwrap_or((f64::NAN, f64::NAN));
    let weighted_sup = weighted_sup_norm(&u, disc.prm());
    SolveReport { solution: u, residual_norm: res, iterations, energy, hopf_min, weighted_sup }
}

fn residual_inf(disc: &Discretization, u: &GridFunction, b: &[f64]) -> f64 {
    let a = disc.weak_gradient(u);
    let g: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    inf_norm_free(disc, &g)
}

fn inf_norm_free(disc: &Discretization, v: &[f64]) -> f64 {
    disc.free().iter().map(|&i| v[i].abs()).fold(0.0, f64::max)
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ||u/d^s||_inf over interior nodes.
pub fn weighted_sup_norm(u: &GridFunction, prm: &Params) -> f64 {
    let mesh = u.mesh();
    let mut best = 0.0f64;
    for (i, &v) in u.values().iter().enumerate() {
        let d = mesh.node_boundary_distance(i);
        if d > 0.0 {
            best = best.max(v.abs() / d.powf(prm.s));
        }
    }
    best
}

/// Extrema of u/d^s over nodes with 0 < d < delta. A positive minimum
/// certifies the discrete Hopf property.
pub fn hopf_quotient(u: &GridFunction, prm: &Params) -> Result<(f64, f64)> {
    hopf_quotient_layer(u, prm, u.mesh().dom.delta)
}

pub fn hopf_quotient_layer(u: &GridFunction, prm: &Params, layer: f64) -> Result<(f64, f64)> {
    let mesh = u.mesh();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut seen = false;
    for (i, &v) in u.values().iter().enumerate() {
        let d = mesh.node_boundary_distance(i);
        if d > 0.0 && d < layer {
            let q = v / d.powf(prm.s);
            min = min.min(q);
            max = max.max(q);
            seen = true;
        }
    }
    if !seen {
        return Err(Error::Resolution(format!("no mesh nodes inside the boundary layer {layer}")));
    }
    Ok((min, max))
}

/// lambda_1 and the positive, ||.||_p-normalized first eigenfunction.
pub fn principal_eigenpair(
    disc: &Discretization,
    cfg: &SolveConfig,
) -> Result<(f64, GridFunction)> {
    cfg.validate()?;
    let prm = *disc.prm();
    // positive initial shape vanishing at the boundary
    let (lo, hi) = disc.mesh().coord_range();
    let mut u = disc.grid_fn(|c| {
        let t = (c - lo) / (hi - lo);
        (std::f64::consts::PI * t).sin().max(0.0) + 0.1
    });
    let norm = disc.lp_norm(&u, prm.p);
    u = u.scale(1.0 / norm);
    let mut lam = rayleigh_quotient(disc, &u)?;

    let max_outer = 400;
    for _ in 0..max_outer {
        let rhs: Vec<f64> = u.values().iter().map(|&v| crate::operator::sgn_pow(v, prm.p - 1.0)).collect();
        let b = disc.mass_apply(&rhs);
        let b_scaled: Vec<f64> = b.iter().map(|x| lam * x).collect();
        let next = if prm.p == 2.0 {
            disc.solve_linear(&b_scaled)?
        } else {
            let mut inner = cfg.clone();
            inner.initial = InitialGuess::Given(u.clone());
            inner.tol = (cfg.tol * lam).max(1e-12);
            solve_k_load(disc, &b_scaled, &inner)?.solution
        };
        // positivity is free for the quotient; enforce it between iterates
        let next = next.map(f64::abs);
        let norm = disc.lp_norm(&next, prm.p);
        if norm == 0.0 {
            return Err(Error::Convergence("eigen iteration collapsed to zero".into()));
        }
        let next = next.scale(1.0 / norm);
        let lam_next = rayleigh_quotient(disc, &next)?;
        let done = (lam_next - lam).abs() <= 1e-13 * lam.abs().max(1.0);
        u = next;
        lam = lam_next;
        if done {
            return Ok((lam, u));
        }
    }
    Err(Error::Convergence(format!("eigen iteration stagnated at lambda = {lam}")))
}

/// energy(u) / ||u||_p^p.
pub fn rayleigh_quotient(disc: &Discretization, u: &GridFunction) -> Result<f64> {
    let denom = disc.lp_norm(u, disc.prm().p).powf(disc.prm().p);
    if denom == 0.0 {
        return Err(Error::Numerical("Rayleigh quotient of the zero function".into()));
    }
    Ok(disc.energy(u) / denom)
}

/// Comparison report: min over nodes of K(f2) - K(f1) for f1 <= f2.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub min_difference: f64,
    pub pass: bool,
}

pub fn comparison_check(
    disc: &Discretization,
    f1: &GridFunction,
    f2: &GridFunction,
    cfg: &SolveConfig,
    tol: f64,
) -> Result<ComparisonReport> {
    f1.same_mesh(f2)?;
    if f1.values().iter().zip(f2.values()).any(|(a, b)| a > b) {
        return Err(Error::Config("comparison check needs f1 <= f2 nodewise".into()));
    }
    let u1 = solve_k_with(disc, f1, cfg)?.solution;
    let u2 = solve_k_with(disc, f2, cfg)?.solution;
    let min_difference = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport { min_difference, pass: min_difference >= -tol })
}
