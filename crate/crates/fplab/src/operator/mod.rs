//! Numerical evaluation of the fractional p-Laplacian in its symmetrized
//! principal-value form, the Gagliardo energy and its first variation, and
//! the fractional gradient.
//!
//! Convention: the operator is
//!
//! ```text
//! Lu(x) = k(N,s) * int_{R^N} [ (u(x)-u(x+z))^{p-1} + (u(x)-u(x-z))^{p-1} ] / |z|^{N+sp} dz
//! ```
//!
//! with `a^{p-1} := |a|^{p-2} a` and `k(N,s) = s 4^s Gamma((N+2s)/2) / (2 pi^{N/2} Gamma(1-s))`,
//! so that for p = 2 it reduces exactly to the linear fractional Laplacian
//! with Fourier symbol |xi|^{2s}. The symmetrized integrand cancels the
//! leading singularity and is absolutely integrable, so no principal value
//! is taken numerically. The Gagliardo energy carries the same constant, so
//! the weak form is the exact first variation of energy/p.

mod assembly;
mod energy;
mod gridfn;
mod kernels;
mod pointwise;

pub use assembly::Discretization;
pub use energy::{gagliardo_energy, lp_norm, weak_residual};
pub use gridfn::{ClosedForm, GridFunction, Profile};
pub use kernels::MeshKernel;
pub use pointwise::{eval_fplap_pointwise, fractional_gradient};

use crate::error::{Error, Result};
use crate::quad::gamma;
use serde::{Deserialize, Serialize};

/// The exponent bundle shared by all modules.
///
/// Not every operation reads every field; each entry point validates the
/// slice it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Fractional order, 0 < s < 1.
    pub s: f64,
    /// Integrability exponent, p > 1.
    pub p: f64,
    /// Ambient dimension.
    pub dim: usize,
    /// Semipositone exponent, p-1 < r < p_s^* - 1.
    pub r: f64,
    /// Subcritical exponent used by the rescaling diagnostic.
    pub q: f64,
    /// Linear coefficient of the critical problem, 0 < lambda < lambda_1.
    pub lambda: f64,
    /// Semipositone parameter.
    pub mu: f64,
    /// Rescaled semipositone parameter.
    pub gamma: f64,
    /// Barrier exponent, 0 < beta < sp/(p-1).
    pub beta: f64,
    /// Barrier shift theta in (sp - beta0, sp).
    pub theta_exp: f64,
    /// Bubble cutoff decay ratio theta > 1.
    pub theta_ratio: f64,
}

impl Params {
    /// A bundle with the given (s, p, N) and neutral defaults elsewhere.
    pub fn new(s: f64, p: f64, dim: usize) -> Result<Self> {
        let prm = Params {
            s,
            p,
            dim,
            r: p + 0.5,
            q: p + 0.5,
            lambda: 0.0,
            mu: 0.0,
            gamma: 0.0,
            beta: 0.25 * s * p / (p - 1.0),
            theta_exp: 0.9 * s * p,
            theta_ratio: 2.0,
        };
        prm.validate_base()?;
        Ok(prm)
    }

    pub fn validate_base(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Config(format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.p > 1.0) {
            return Err(Error::Config(format!("p must exceed 1, got {}", self.p)));
        }
        if self.dim < 1 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        Ok(())
    }

    /// Pointwise barrier estimates need p > 2/(2-s).
    pub fn validate_barrier_range(&self) -> Result<()> {
        self.validate_base()?;
        if self.p <= 2.0 / (2.0 - self.s) {
            return Err(Error::Config(format!(
                "barrier estimates need p > 2/(2-s) = {}, got p = {}",
                2.0 / (2.0 - self.s),
                self.p
            )));
        }
        Ok(())
    }

    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    pub fn kernel_exponent(&self) -> f64 {
        self.dim as f64 + self.sp()
    }

    /// Critical Sobolev exponent Np/(N-sp); None when sp >= N.
    pub fn pstar(&self) -> Option<f64> {
        let n = self.dim as f64;
        if self.sp() < n {
            Some(n * self.p / (n - self.sp()))
        } else {
            None
        }
    }

    /// Check p-1 < e < p_s^* - 1 for a growth exponent e (r or q).
    pub fn check_growth_exponent(&self, e: f64) -> Result<()> {
        if e <= self.p - 1.0 {
            return Err(Error::Config(format!(
                "growth exponent must exceed p-1 = {}, got {e}",
                self.p - 1.0
            )));
        }
        if let Some(ps) = self.pstar() {
            if e >= ps - 1.0 {
                return Err(Error::Config(format!(
                    "growth exponent must stay below p_s^*-1 = {}, got {e}",
                    ps - 1.0
                )));
            }
        }
        Ok(())
    }

    pub fn check_beta(&self, beta: f64) -> Result<()> {
        let cap = self.sp() / (self.p - 1.0);
        if !(beta > 0.0 && beta < cap) {
            return Err(Error::Config(format!(
                "beta must lie in (0, sp/(p-1)) = (0, {cap}), got {beta}"
            )));
        }
        Ok(())
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        if !(theta > 0.0 && theta < self.sp()) {
            return Err(Error::Config(format!(
                "theta must lie in (0, sp) = (0, {}), got {theta}",
                self.sp()
            )));
        }
        // the induced barrier exponent must be admissible
        self.check_beta(self.sp() - theta)
    }

    /// Normalization constant in front of the symmetrized integral. Chosen so
    /// the p = 2 case is the linear fractional Laplacian with symbol |xi|^{2s}.
    pub fn norm_const(&self) -> f64 {
        norm_const(self.dim, self.s)
    }
}

/// k(N,s) = s 4^s Gamma((N+2s)/2) / (2 pi^{N/2} Gamma(1-s)).
pub fn norm_const(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    s * 4f64.powf(s) * gamma((n + 2.0 * s) / 2.0)
        / (2.0 * std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s))
}

/// Quadrature controls for the singular-integral evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Near-field splitting radius as a fraction of d(x).
    pub near_split_frac: f64,
    /// Geometric panel halvings toward each singular endpoint.
    pub graded_levels: usize,
    /// Gauss-Legendre points per panel.
    pub gl_order: usize,
    /// Far-field truncation radius as a multiple of diam(Omega), used only
    /// where no closed form is available.
    pub far_field_factor: f64,
    /// Target tolerance driving panel refinement choices.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            near_split_frac: 0.5,
            graded_levels: 34,
            gl_order: 8,
            far_field_factor: 10.0,
            tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_split_frac > 0.0
            && self.graded_levels > 0
            && self.gl_order > 0
            && self.far_field_factor > 0.0)
        {
            return Err(Error::Config("quadrature parameters must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config("quadrature tolerance must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Signed power a^{p-1} = |a|^{p-2} a.
#[inline]
pub fn sgn_pow(a: f64, pm1: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a.signum() * a.abs().powf(pm1)
    }
}
