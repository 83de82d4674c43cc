//! Pointwise evaluation of the fractional p-Laplacian.
//!
//! Evaluates the operator on the closed-form profile (1-x^2)^{1/2} over
//! (-1,1) at p = 2, s = 1/2 (whose image is the constant 1), demonstrates
//! the (p-1)-homogeneity on a grid function at p = 3, and prints a
//! fractional-gradient sample.

use fplab::geometry::{build_mesh, DomainSpec, Grading};
use fplab::operator::{
    eval_fplap_pointwise, fractional_gradient, ClosedForm, GridFunction, Params,
    QuadratureConfig,
};
use std::sync::Arc;

fn main() -> fplab::Result<()> {
    let dom = DomainSpec::interval(-1.0, 1.0, 0.2)?;
    let qc = QuadratureConfig::default();

    let prm = Params::new(0.5, 2.0, 1)?;
    let sqrt_bump = ClosedForm::new(|x: f64| (1.0 - x * x).max(0.0).sqrt(), (-1.0, 1.0), vec![]);
    println!("(-Delta)^(1/2) of (1-x^2)^(1/2) on (-1,1)   [image is the constant 1]");
    println!("{:>8} {:>18}", "x", "value");
    for &x in &[-0.9, -0.5, 0.0, 0.3, 0.7, 0.95] {
        let v = eval_fplap_pointwise(&sqrt_bump, &dom, x, &prm, &qc)?;
        println!("{x:>8.3} {v:>18.12}");
    }

    let prm3 = Params::new(0.4, 3.0, 1)?;
    let mesh = Arc::new(build_mesh(&dom, 129, Grading::Uniform)?);
    let hat = GridFunction::from_fn(mesh, |x| 1.0 - x.abs())?;
    let v1 = eval_fplap_pointwise(&hat, &dom, 0.0, &prm3, &qc)?;
    let v2 = eval_fplap_pointwise(&hat.scale(2.0), &dom, 0.0, &prm3, &qc)?;
    println!("\nhomogeneity at p = 3: L(2u)(0) / L(u)(0) = {:.12}  (exact: 4)", v2 / v1);

    let g = fractional_gradient(&hat, &dom, 0.0, &prm3, &qc)?;
    println!("fractional gradient |D^s u(0)|^p of the hat at (s,p) = (0.4,3): {g:.8}");
    Ok(())
}
