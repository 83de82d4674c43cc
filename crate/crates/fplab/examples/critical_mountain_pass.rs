//! Numerical mountain pass for the critical multiparameter problem on the
//! unit disk (radial reduction).
//!
//! Estimates the Sobolev constant on growing truncated domains, builds the
//! truncated bubble, deforms a discrete path to the pass point, and checks
//! the compactness threshold and the Nehari identity.

use fplab::critical::{
    build_bubble, estimate_sobolev_constant, mountain_pass_solve, nehari_residual,
    ps_threshold_check, BubbleSpec, PathConfig, SobolevConfig,
};
use fplab::dirichlet::{hopf_quotient, principal_eigenpair, SolveConfig};
use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::operator::{Discretization, Params, QuadratureConfig};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::origin_ball(1.0, 2, 0.2)?;
    let mut prm = Params::new(0.5, 2.0, 2)?;
    let qc = QuadratureConfig::default();
    let mesh = Arc::new(build_mesh(&dom, 193, Grading::BoundaryGraded { exponent: 2.0 })?);

    let disc0 = Discretization::new(mesh.clone(), prm, qc)?;
    let (lam1, _) = principal_eigenpair(&disc0, &SolveConfig::default())?;
    prm.lambda = 0.5 * lam1;
    prm.mu = 0.01;
    println!("unit disk, (s,p,N) = (1/2,2,2), p* = 4: lambda_1 = {lam1:.6}, lambda = lambda_1/2, mu = 0.01");
    let disc = Discretization::new(mesh, prm, qc)?;

    let sob = estimate_sobolev_constant(
        &prm,
        &qc,
        &SobolevConfig { base_radius: 16.0, levels: 3, core_nodes: 129, ring_nodes: 20, ..Default::default() },
    )?;
    println!("\nSobolev constant sweep (quotient minimization on nested truncations):");
    for (r, v) in &sob.by_radius {
        println!("  radius {r:>6}: {v:.6}");
    }
    println!("  extrapolated S = {:.6}", sob.value);

    let bubble = build_bubble(
        &BubbleSpec { epsilon: 0.1, delta_cut: 0.25, theta_ratio: 2.0, center: 0.0, amplitude: 1.0 },
        &prm,
        disc.mesh(),
    )?;
    let rep = mountain_pass_solve(&disc, &PathConfig::default(), &bubble)?;
    println!("\nmountain pass:");
    println!("  endpoint scale R = {} (E(R u) = {:.4})", rep.endpoint_scale, rep.endpoint_energy);
    println!("  sphere radius rho = {:.4} with floor c0 = {:.5}", rep.rho, rep.c0);
    println!("  level c_mu = {:.6}, gradient norm {:.2e}, {} sweeps", rep.c_mu, rep.gradient_norm, rep.sweeps);

    let threshold_ok = ps_threshold_check(rep.c_mu, prm.mu, sob.value, &prm, dom.volume())?;
    let threshold = (prm.s / 2.0) * sob.value.powf(2.0 / prm.sp())
        - (1.0 - 1.0 / prm.p) * prm.mu * dom.volume();
    println!("\ncompactness threshold: c_mu = {:.5} < {threshold:.5}: {threshold_ok}", rep.c_mu);
    println!("Nehari residual of the pass point: {:.2e}", nehari_residual(&rep.u_mu, &disc)?);
    let (hopf, _) = hopf_quotient(&rep.u_mu, &prm)?;
    println!("positivity: hopf quotient min = {hopf:.4}, sup u = {:.4}", rep.u_mu.sup_norm());
    Ok(())
}
