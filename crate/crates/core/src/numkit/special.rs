use crate::error::{domain, Result};
use crate::scalar::Real;

/// ln 2: multiply bits by this to get nats.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

/// Complementary error function (rational approximations from `libm`,
/// evaluated in double precision).
pub fn erfc<T: Real>(x: T) -> T {
    T::lit(libm::erfc(x.to_f64_lossy()))
}

/// Gaussian upper tail `P[N(0,1) > x]`.
pub fn qfunc<T: Real>(x: T) -> T {
    T::lit(0.5) * erfc(x / T::SQRT_2())
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    qfunc(-x)
}

/// Standard normal density.
pub fn normal_pdf<T: Real>(x: T) -> T {
    (-T::lit(0.5) * x * x).exp() / (T::TAU()).sqrt()
}

/// Inverse of [`qfunc`] on `(0, 1)`.
pub fn qinv<T: Real>(eps: T) -> Result<T> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(domain(format!("qinv needs 0 < eps < 1, got {eps}")));
    }
    if eps == T::lit(0.5) {
        return Ok(T::zero());
    }
    let (p, sign) = if eps > T::lit(0.5) {
        (T::one() - eps, -T::one())
    } else {
        (eps, T::one())
    };
    // Hastings rational starting point (|error| < 4.5e-4).
    let t = (-T::lit(2.0) * p.ln()).sqrt();
    let num = T::lit(2.515517) + t * (T::lit(0.802853) + t * T::lit(0.010328));
    let den = T::one() + t * (T::lit(1.432788) + t * (T::lit(0.189269) + t * T::lit(0.001308)));
    let mut x = t - num / den;
    // Halley refinement on qfunc(x) - p.
    for _ in 0..50 {
        let err = qfunc(x) - p;
        let pdf = normal_pdf(x);
        if pdf <= T::zero() {
            break;
        }
        let u = err / pdf;
        let step = u / (T::one() + T::lit(0.5) * x * u);
        x = x + step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * x.abs().max(T::one()) {
            break;
        }
    }
    Ok(sign * x)
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    T::lit(libm::lgamma_r(x.to_f64_lossy()).0)
}

/// Binary entropy in bits, `0 log 0 = 0`. Returns NaN outside `[0, 1]`.
pub fn binary_entropy<T: Real>(delta: T) -> T {
    if !(delta >= T::zero() && delta <= T::one()) {
        return T::nan();
    }
    let h = |p: T| if p > T::zero() { -p * p.log2() } else { T::zero() };
    h(delta) + h(T::one() - delta)
}
