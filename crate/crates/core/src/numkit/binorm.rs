use crate::error::{domain, Result};
use crate::scalar::Real;

use super::quad::integrate;
use super::special::{normal_cdf, normal_pdf};
use super::Tolerance;

/// Beyond this many standard deviations the remaining Gaussian mass is below 1e-23.
const TAIL_CUTOFF: f64 = 10.0;

/// `P[Z1 <= z1, Z2 <= z2]` for a standard bivariate normal with correlation `rho`.
///
/// Integrates `phi(x) * Phi((z2 - rho x) / sqrt(1 - rho^2))` over the shorter
/// tail in `x`, splitting at the point where the inner argument changes sign.
pub fn binorm_lower_cdf<T: Real>(z1: T, z2: T, rho: T) -> Result<T> {
    if rho.is_nan() || rho.abs() > T::one() {
        return Err(domain(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    if z1.is_nan() || z2.is_nan() {
        return Err(domain("binorm_lower_cdf thresholds must not be NaN"));
    }
    if z1 == T::neg_infinity() || z2 == T::neg_infinity() {
        return Ok(T::zero());
    }
    if z1 == T::infinity() {
        return Ok(normal_cdf(z2));
    }
    if z2 == T::infinity() {
        return Ok(normal_cdf(z1));
    }
    if rho == T::one() {
        return Ok(normal_cdf(z1.min(z2)));
    }
    if rho == -T::one() {
        return Ok((normal_cdf(z1) + normal_cdf(z2) - T::one()).max(T::zero()));
    }
    if rho == T::zero() {
        return Ok(normal_cdf(z1) * normal_cdf(z2));
    }
    let sigma = ((T::one() - rho) * (T::one() + rho)).sqrt();
    let g = |x: T| normal_pdf(x) * normal_cdf((z2 - rho * x) / sigma);
    let kink = z2 / rho;
    let abs_tol = 1e-13_f64.max(64.0 * T::epsilon().to_f64_lossy());
    let tol = Tolerance::new(abs_tol, 0.0, 4000).expect("static tolerance");
    let cut = T::lit(TAIL_CUTOFF);
    let marginal2 = normal_cdf(z2);
    let value = if z1 <= T::zero() {
        if z1 <= -cut {
            T::zero()
        } else {
            integrate(g, -cut, z1, &[kink], &tol)?.value
        }
    } else if z1 >= cut {
        marginal2
    } else {
        marginal2 - integrate(g, z1, cut, &[kink], &tol)?.value
    };
    Ok(value.max(T::zero()).min(normal_cdf(z1).min(marginal2)))
}
