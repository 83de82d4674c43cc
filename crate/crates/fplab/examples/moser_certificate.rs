//! Explicit L-infinity certificate by bootstrap iteration constants.
//!
//! Runs the elementary-inequality property suites, assembles the iteration
//! constants for the Lane-Emden solution, prints the certified bound against
//! the actual sup norm, and shows that a mis-scaled input is caught by the
//! equation-driven step checks.

use fplab::critical::domain_embedding_constant;
use fplab::dirichlet::SolveConfig;
use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::moser::{
    check_lemma_a1, check_lemma_a2, effective_pstar, growth_constant_semipositone,
    verify_bound_on_solution, ConvexTest,
};
use fplab::operator::{sgn_pow, Discretization, Params, QuadratureConfig};
use fplab::semipositone::solve_lane_emden;
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    println!("elementary inequality suites (1e5 seeded samples, worst signed violation):");
    for &p in &[2.0, 2.5, 3.0] {
        let a1 = check_lemma_a1(100_000, p, 2.0, 1)?;
        let a2 = check_lemma_a2(100_000, p, ConvexTest::SmoothAbs { eps: 0.1 }, 2)?;
        println!("  p = {p}: truncated-power {a1:.2e}, convexity {a2:.2e}");
    }

    let dom = DomainSpec::interval(-1.0, 1.0, 0.2)?;
    let mut prm = Params::new(0.5, 2.0, 1)?;
    prm.r = 3.0;
    let mesh = Arc::new(build_mesh(&dom, 257, Grading::BoundaryGraded { exponent: 2.0 })?);
    let disc = Discretization::new(mesh, prm, QuadratureConfig::default())?;
    let w = solve_lane_emden(&disc, &SolveConfig::default())?.solution;

    // sp = N here, so the certificate runs on a finite surrogate exponent
    let pstar = effective_pstar(&prm, prm.r);
    let s_est = domain_embedding_constant(&disc, pstar)?;
    let c1 = growth_constant_semipositone(&prm, 0.0, pstar)?;
    let rhs = w.map(|t| sgn_pow(t.max(0.0), prm.r));
    let rep = verify_bound_on_solution(&w, &rhs, &disc, c1, s_est, pstar)?;

    println!("\ncertificate for the Lane-Emden solution (exponent {pstar}):");
    println!("  C1 = {}, Lambda = {}, S_est = {:.5}", rep.constants.c1, rep.constants.lambda, s_est);
    println!("  C_* = {:.5}, C^* = {:.5}", rep.constants.c_star, rep.constants.c_upper_star);
    println!("  bound {:.5} vs sup norm {:.5}  ->  pass = {}", rep.constants.bound, rep.sup_norm, rep.pass);
    for st in &rep.steps {
        println!(
            "  step k = {:>4}: norm chain {:.4} <= {:.4}, equation {:.4} <= {:.4}",
            st.k, st.norm_lhs, st.norm_rhs, st.eq_lhs, st.eq_rhs
        );
    }

    let bad = verify_bound_on_solution(&w.scale(10.0), &rhs, &disc, c1, s_est, pstar)?;
    println!(
        "\nmis-scaled input 10u with the original right-hand side: pass = {} (caught by step checks: {})",
        bad.pass,
        bad.steps.iter().filter(|s| !s.pass).count()
    );
    Ok(())
}
