//! Scalar special functions and numeric utilities shared by the analytic and
//! Monte Carlo modules.

mod binorm;
mod fdcheck;
mod quad;
mod roots;
mod special;

pub use binorm::binorm_lower_cdf;
pub use fdcheck::{fd_check, fd_check_jacobian, FdDomain};
pub use quad::{gauss_hermite, integrate, normal_expectation, Integral};
pub use roots::{brent_root, golden_section_min};
pub use special::{
    binary_entropy, erfc, ln_gamma, normal_cdf, normal_pdf, qfunc, qinv, NATS_PER_BIT,
};

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Stopping rule shared by the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol >= 0.0) || !(rel_tol >= 0.0) || abs_tol + rel_tol <= 0.0 {
            return Err(domain(format!(
                "tolerance needs abs_tol, rel_tol >= 0 with a positive sum (got {abs_tol}, {rel_tol})"
            )));
        }
        if max_iter == 0 {
            return Err(domain("max_iter must be positive"));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Whether an error estimate `err` on a quantity of size `value` is acceptable.
    pub fn accepts<T: Real>(&self, err: T, value: T) -> bool {
        let bound = T::lit(self.abs_tol).max(T::lit(self.rel_tol) * value.abs());
        err <= bound
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_iter: 10_000,
        }
    }
}
