//! Principal eigenpair of the fractional Laplacian by inverse iteration.
//!
//! Computes lambda_1 and phi_1 on (-1,1) at (s,p) = (1/2,2), checks mesh
//! stability under refinement, and shows that random Rayleigh quotients stay
//! above the eigenvalue.

use fplab::dirichlet::{principal_eigenpair, rayleigh_quotient, SolveConfig};
use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::operator::{Discretization, Params, QuadratureConfig};
use rand::{Rng, SeedableRng};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::interval(-1.0, 1.0, 0.2)?;
    let prm = Params::new(0.5, 2.0, 1)?;
    let cfg = SolveConfig::default();

    let mut last = None;
    for n in [129, 257, 513] {
        let mesh = Arc::new(build_mesh(&dom, n, Grading::BoundaryGraded { exponent: 2.0 })?);
        let disc = Discretization::new(mesh, prm, QuadratureConfig::default())?;
        let (lam, phi) = principal_eigenpair(&disc, &cfg)?;
        let drift = last.map(|l: f64| (lam - l).abs() / l);
        println!(
            "n = {n:>4}: lambda_1 = {lam:.8}{}   phi_1(0) = {:.6}",
            drift.map(|d| format!("  (drift {:.2e})", d)).unwrap_or_default(),
            phi.eval(0.0)
        );
        last = Some(lam);

        if n == 257 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            let mut min_q = f64::INFINITY;
            for _ in 0..200 {
                let coefs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = disc.grid_fn(|x| {
                    coefs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| {
                            c * ((k + 1) as f64 * std::f64::consts::PI * (x + 1.0) / 2.0).sin()
                        })
                        .sum()
                });
                min_q = min_q.min(rayleigh_quotient(&disc, &v)?);
            }
            println!("         min Rayleigh quotient over 200 random functions: {min_q:.8}");
        }
    }
    println!("\nreference value for the interval at s = 1/2: 1.15777388");
    Ok(())
}
