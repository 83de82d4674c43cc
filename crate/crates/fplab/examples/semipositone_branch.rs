//! Continuation of the rescaled semipositone branch from the Lane-Emden
//! state, with positivity certificates, the unscaling to the original
//! problem, and the blow-up rescaling diagnostic.

use fplab::dirichlet::principal_eigenpair;
use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::operator::{Discretization, Params, QuadratureConfig};
use fplab::semipositone::{
    continue_in_gamma, gidas_spruck_rescale, unscale_to_original, ContinuationConfig,
};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::interval(-1.0, 1.0, 0.2)?;
    let mut prm = Params::new(0.5, 2.0, 1)?;
    prm.r = 3.0;
    prm.q = 3.0;
    let mesh = Arc::new(build_mesh(&dom, 257, Grading::BoundaryGraded { exponent: 2.0 })?);
    let disc = Discretization::new(mesh, prm, QuadratureConfig::default())?;

    let ccfg = ContinuationConfig {
        gammas: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
        ..Default::default()
    };
    let res = continue_in_gamma(&disc, &ccfg)?;
    println!("branch of (-Delta)^(1/2) w = w^3 - gamma^3 on (-1,1):");
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>9}",
        "gamma", "sup w", "hopf min", "residual_S", "positive"
    );
    for bp in &res.points {
        println!(
            "{:>8.4} {:>12.6} {:>12.6} {:>12.2e} {:>9}",
            bp.gamma, bp.sup_norm, bp.hopf_min, bp.residual, bp.positive
        );
    }
    println!("last positive gamma* = {}", res.gamma_star);

    let (lam, _) = principal_eigenpair(&disc, &ccfg.solve)?;
    let bound = lam.powf(1.0 / (prm.r - prm.p + 1.0));
    println!(
        "Lane-Emden amplitude bound: sup w = {:.4} >= lambda_1^(1/(r-p+1)) = {bound:.4}",
        res.points[0].sup_norm
    );

    // unscale the last positive branch point to the original parametrization
    let bp = res.points.iter().rev().find(|p| p.positive && p.gamma > 0.0).unwrap();
    let (u, mu) = unscale_to_original(&bp.w, bp.gamma, &prm)?;
    println!(
        "\nunscaled: gamma = {} corresponds to mu = gamma^(r+1-p) = {mu:.5}, sup u = {:.4}",
        bp.gamma,
        u.sup_norm()
    );

    let (v, mu_k) = gidas_spruck_rescale(&u, &prm)?;
    println!(
        "rescaling diagnostic: zoom scale mu_k = {mu_k:.5}, v(0) = {} (normalized), sup v = {}",
        v.eval(0.0),
        v.max_value()
    );
    Ok(())
}
