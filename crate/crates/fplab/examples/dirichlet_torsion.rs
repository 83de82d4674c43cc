//! The solution operator K and its boundary diagnostics.
//!
//! Solves (-Delta)^{1/2} u = 1 on (-1,1), whose exact solution in this
//! normalization is sqrt(1-x^2), prints the boundary quotient u/d^s, and
//! verifies the comparison property on a random pair of ordered loads at
//! p = 3.

use fplab::dirichlet::{comparison_check, solve_k_with, SolveConfig};
use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::operator::{weak_residual, Discretization, Params, QuadratureConfig};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::interval(-1.0, 1.0, 0.2)?;
    let prm = Params::new(0.5, 2.0, 1)?;
    let mesh = Arc::new(build_mesh(&dom, 257, Grading::BoundaryGraded { exponent: 2.0 })?);
    let disc = Discretization::new(mesh, prm, QuadratureConfig::default())?;
    let cfg = SolveConfig::default();

    let one = disc.grid_fn(|_| 1.0);
    let rep = solve_k_with(&disc, &one, &cfg)?;
    println!("torsion problem (-Delta)^(1/2) u = 1 on (-1,1):");
    println!("{:>8} {:>14} {:>14}", "x", "u", "sqrt(1-x^2)");
    for &x in &[0.0f64, 0.4, 0.8, 0.95] {
        let exact = (1.0 - x * x).sqrt();
        println!("{x:>8.3} {:>14.8} {exact:>14.8}", rep.solution.eval(x));
    }
    let wr = weak_residual(&rep.solution, &one, disc.prm(), disc.qc())?;
    println!("max weak residual: {:.2e}", wr.sup_norm());
    println!(
        "hopf quotient min {:.4} (sqrt(2-delta) = {:.4}), weighted norm |u/d^s| = {:.4}",
        rep.hopf_min,
        (2.0f64 - dom.delta).sqrt(),
        rep.weighted_sup
    );

    let mut prm3 = Params::new(0.4, 3.0, 1)?;
    prm3.r = 3.0;
    let mesh3 = Arc::new(build_mesh(&dom, 65, Grading::BoundaryGraded { exponent: 2.0 })?);
    let disc3 = Discretization::new(mesh3, prm3, QuadratureConfig::default())?;
    let f1 = disc3.grid_fn(|x| (std::f64::consts::PI * x).sin());
    let f2 = disc3.grid_fn(|x| (std::f64::consts::PI * x).sin() + 0.5 * (1.0 - x * x));
    let cmp = comparison_check(&disc3, &f1, &f2, &SolveConfig { tol: 1e-11, ..cfg }, 1e-6)?;
    println!(
        "\ncomparison at p = 3: f1 <= f2 gives min(K(f2) - K(f1)) = {:.2e} (pass: {})",
        cmp.min_difference, cmp.pass
    );
    Ok(())
}
