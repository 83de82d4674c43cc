//! Boundary estimates for the barrier d^beta under the operator.
//!
//! Fits the layer exponent beta(p-1) - sp from operator samples, sweeps the
//! rescaled domains to exhibit the uniform lower constant, probes the first
//! beta where the layer sign claim breaks, and runs the comparison bound for
//! a solve_k solution on a rescaled interval.

use fplab::barrier::{
    build_barrier, comparison_bound_check, default_layer_distances, probe_beta0,
    verify_scaled_estimate, verify_upper_estimate, BarrierSpec,
};
use fplab::dirichlet::{solve_k_with, SolveConfig};
use fplab::geometry::{build_mesh, DomainSpec, Grading, ScaledDomain};
use fplab::operator::{Discretization, Params, QuadratureConfig};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::interval(-1.0, 1.0, 0.1)?;
    let mut prm = Params::new(0.4, 3.0, 1)?;
    prm.theta_exp = 1.1;
    let qc = QuadratureConfig::default();
    let distances = default_layer_distances(dom.delta);

    let barrier = build_barrier(&BarrierSpec::new(dom.clone(), 0.2), &prm)?;
    let upper = verify_upper_estimate(&barrier, &prm, &qc, &distances, 0.05)?;
    println!("layer estimate at (s,p,beta) = (0.4, 3, 0.2), delta = 0.1:");
    println!("  all 40 values negative: {}", upper.all_negative);
    println!(
        "  fitted slope {:.4} (target {:.1}), largest constant C = {:.4}",
        upper.fitted_slope, upper.target_slope, upper.fitted_c
    );

    let scaled = verify_scaled_estimate(
        &dom,
        vec![1.0],
        &prm,
        &qc,
        &[1.0, 0.5, 0.25],
        &distances,
        2.0,
    )?;
    println!("\nscaled estimate at theta = 1.1 (exponent {}):", scaled.exponent);
    for (tau, c0) in &scaled.c0_by_tau {
        println!("  tau = {tau:<5} c0 = {c0:.4}");
    }
    println!("  spread {:.3} (uniformity evidence, < 2)", scaled.spread);

    let betas: Vec<f64> = (1..=11).map(|k| 0.05 * k as f64).collect();
    let (last_ok, first_bad) = probe_beta0(&dom, &prm, &qc, &betas, &distances)?;
    println!("\nempirical beta_0 probe: sign holds through beta = {last_ok:?}, first failure at {first_bad:?}");

    // comparison bound for the solve_k solution on the tau = 1/2 rescaled interval
    let tau = 0.5;
    let sd = ScaledDomain::new(dom.clone(), vec![1.0], tau)?;
    let image = sd.image_spec(dom.delta)?;
    let mesh = Arc::new(build_mesh(&image, 129, Grading::BoundaryGraded { exponent: 2.0 })?);
    let disc = Discretization::new(mesh, prm, qc)?;
    let one = disc.grid_fn(|_| 1.0);
    let u = solve_k_with(&disc, &one, &SolveConfig::default())?.solution;
    let rep = comparison_bound_check(&u, &dom, vec![1.0], tau, &prm, &qc, 1.0)?;
    println!(
        "\ncomparison bound for K(1) on the tau = {tau} rescaled interval: R = {:.3}, min layer margin = {:.4} (pass: {})",
        rep.r_factor, rep.min_margin, rep.pass
    );
    Ok(())
}
