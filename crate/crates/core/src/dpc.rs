//! Closed forms for dirty paper coding `Y = X + S + Z` with `U = X + alpha S`,
//! `X ~ N(0, P)` independent of the state, unit noise variance.

use crate::error::{domain, structural, Result};
use crate::numkit::{gauss_hermite, ln_gamma};
use crate::scalar::Real;

/// Transmit power, state-power bound, inflation factor and power-type widths.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DpcConfig<T> {
    pub p: T,
    pub pi_bound: T,
    pub alpha: T,
    pub delta_s: T,
    pub delta_x: T,
}

impl<T: Real> DpcConfig<T> {
    /// `alpha = P / (1 + P)` and unit power-type widths.
    pub fn new(p: T, pi_bound: T) -> Result<Self> {
        Self::with_alpha(p, pi_bound, alpha_opt(p)?)
    }

    pub fn with_alpha(p: T, pi_bound: T, alpha: T) -> Result<Self> {
        let cfg = Self {
            p,
            pi_bound,
            alpha,
            delta_s: T::one(),
            delta_x: T::one(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.p)?;
        if !(self.pi_bound >= T::zero()) {
            return Err(domain("state-power bound must be nonnegative"));
        }
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(domain("alpha must be finite and nonnegative"));
        }
        if !(self.delta_s > T::zero() && self.delta_x > T::zero()) {
            return Err(domain("power-type widths must be positive"));
        }
        Ok(())
    }
}

fn check_power<T: Real>(p: T) -> Result<()> {
    if p > T::zero() && p.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("transmit power must be positive, got {p}")))
    }
}

fn check_state_power<T: Real>(ps: T) -> Result<()> {
    if ps >= T::zero() && ps.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("state power must be nonnegative, got {ps}")))
    }
}

/// `P / (1 + P)`.
pub fn alpha_opt<T: Real>(p: T) -> Result<T> {
    check_power(p)?;
    Ok(p / (T::one() + p))
}

/// `log(1 + P) / 2`.
pub fn dpc_capacity<T: Real>(p: T) -> Result<T> {
    check_power(p)?;
    Ok(T::lit(0.5) * p.ln_1p())
}

/// `P (2 + P) / (2 (1 + P)^2)`.
pub fn dpc_dispersion<T: Real>(p: T) -> Result<T> {
    check_power(p)?;
    let one_p = T::one() + p;
    Ok(p * (T::lit(2.0) + p) / (T::lit(2.0) * one_p * one_p))
}

/// `P P_S (1 - alpha)^2 + P + alpha^2 P_S`.
fn big_d<T: Real>(p: T, ps: T, alpha: T) -> T {
    let oma = T::one() - alpha;
    p * ps * oma * oma + p + alpha * alpha * ps
}

/// `I(U;Y)` for state power `P_S`.
pub fn mi_uy<T: Real>(p: T, ps: T, alpha: T) -> Result<T> {
    check_power(p)?;
    check_state_power(ps)?;
    let su = p + alpha * alpha * ps;
    Ok(T::lit(0.5) * ((p + ps + T::one()) * su / big_d(p, ps, alpha)).ln())
}

/// `I(U;S)` for state power `P_S`.
pub fn mi_us<T: Real>(p: T, ps: T, alpha: T) -> Result<T> {
    check_power(p)?;
    check_state_power(ps)?;
    Ok(T::lit(0.5) * (alpha * alpha * ps / p).ln_1p())
}

/// Coefficients of the single-letter information density
/// `i(u,y) = c0 + c1 (y + c2 u)^2 + c3 y^2`.
pub fn density_coefficients<T: Real>(p: T, ps: T, alpha: T) -> Result<[T; 4]> {
    let c0 = mi_uy(p, ps, alpha)?;
    let su = p + alpha * alpha * ps;
    let d = big_d(p, ps, alpha);
    let c1 = -su / (T::lit(2.0) * d);
    let c2 = -(p + alpha * ps) / su;
    let c3 = T::one() / (T::lit(2.0) * (p + ps + T::one()));
    Ok([c0, c1, c2, c3])
}

/// `log f_{Y|U}(y|u) / f_Y(y)` for the Gaussian joint law with state power `P_S`.
pub fn info_density_gauss<T: Real>(u: T, y: T, p: T, ps: T, alpha: T) -> Result<T> {
    let [c0, c1, c2, c3] = density_coefficients(p, ps, alpha)?;
    let r = y + c2 * u;
    Ok(c0 + c1 * r * r + c3 * y * y)
}

/// Per-letter conditional mean and variance of `i_n(u, Y)` at the canonical
/// pair, with the coefficient sets that produce them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpcMoments<T> {
    pub mean_per_letter: T,
    pub var_per_letter: T,
    pub c: [T; 4],
    pub d: [T; 6],
}

/// Mean `n c0 + d1 |s|^2 + d2 |u|^2 + n d3 + d4 <s,u>` and variance
/// `2 n d3^2 + d5^2 |s|^2 + 2 d5 d6 <s,u> + d6^2 |u|^2` of `i_n(u, Y)` given
/// `(s, u)`, evaluated per letter at `|s|^2 = n P_S`,
/// `|u|^2 = n (P + alpha^2 P_S)`, `<s,u> = n alpha P_S`.
pub fn dpc_moments<T: Real>(p: T, ps: T, alpha: T) -> Result<DpcMoments<T>> {
    let c = density_coefficients(p, ps, alpha)?;
    let [c0, c1, c2, c3] = c;
    let two = T::lit(2.0);
    let oma = T::one() - alpha;
    let d3 = c1 + c3;
    let d = [
        d3 * oma * oma,
        c1 * c2 * c2 + two * c1 * c2 + d3,
        d3,
        two * c1 * c2 * oma + two * d3 * oma,
        two * d3 * oma,
        two * c1 * c2 + two * d3,
    ];
    let (ss, uu, su) = (ps, p + alpha * alpha * ps, alpha * ps);
    let mean = c0 + d[0] * ss + d[1] * uu + d[2] + d[3] * su;
    let var = two * d3 * d3 + d[4] * d[4] * ss + two * d[4] * d[5] * su + d[5] * d[5] * uu;
    Ok(DpcMoments {
        mean_per_letter: mean,
        var_per_letter: var.max(T::zero()),
        c,
        d,
    })
}

/// The two summands of `E[Var[i(U,Y)|S,U]] + Var[E[i(U,Y) - i(U,S)|S]]`
/// for an i.i.d. Gaussian state of power `P_S`, by tensor Gauss–Hermite
/// quadrature of the density (`order` nodes per dimension).
pub fn gaussian_state_dispersion<T: Real>(p: T, ps: T, alpha: T, order: usize) -> Result<[T; 2]> {
    check_power(p)?;
    check_state_power(ps)?;
    let (x, w) = gauss_hermite::<T>(order)?;
    let scale = T::SQRT_2();
    let norm = T::PI().sqrt();
    let nodes: Vec<(T, T)> = x.iter().zip(&w).map(|(&xi, &wi)| (scale * xi, wi / norm)).collect();
    let su = p + alpha * alpha * ps;
    let i_us = |u: T, s: T| {
        let e = u - alpha * s;
        T::lit(0.5) * (su / p).ln() - e * e / (T::lit(2.0) * p) + u * u / (T::lit(2.0) * su)
    };
    let mut first = T::zero();
    let mut gains = Vec::with_capacity(nodes.len());
    for &(zs, ws) in &nodes {
        let s = ps.sqrt() * zs;
        let mut gain = T::zero();
        for &(zu, wu) in &nodes {
            let u = alpha * s + p.sqrt() * zu;
            let centre = u + (T::one() - alpha) * s;
            let mut m1 = T::zero();
            let mut m2 = T::zero();
            for &(zy, wy) in &nodes {
                let v = info_density_gauss(u, centre + zy, p, ps, alpha)?;
                m1 = m1 + wy * v;
                m2 = m2 + wy * v * v;
            }
            first = first + ws * wu * (m2 - m1 * m1);
            gain = gain + wu * (m1 - i_us(u, s));
        }
        gains.push((ws, gain));
    }
    let mean: T = gains.iter().map(|&(w, g)| w * g).sum();
    let second: T = gains.iter().map(|&(w, g)| w * (g - mean) * (g - mean)).sum();
    Ok([first, second])
}

/// `log` of the surface area of the radius-`r` sphere in `R^n`.
pub fn sphere_log_surface<T: Real>(n: usize, r: T) -> Result<T> {
    if n == 0 || !(r > T::zero()) {
        return Err(domain("sphere needs n >= 1 and r > 0"));
    }
    let half_n = T::count(n) / T::lit(2.0);
    Ok(T::LN_2() + half_n * T::PI().ln() - ln_gamma(half_n) + T::count(n - 1) * r.ln())
}

/// Log-density of one coordinate of a point uniform on the sphere of
/// squared radius `n * power`; `-inf` outside `[-R, R]`.
pub fn sphere_coord_logpdf<T: Real>(u1: T, n: usize, power: T) -> Result<T> {
    if n < 2 || !(power > T::zero()) {
        return Err(domain("coordinate density needs n >= 2 and power > 0"));
    }
    let r2 = T::count(n) * power;
    if u1 * u1 > r2 || u1.is_nan() {
        return Ok(T::neg_infinity());
    }
    let nf = T::count(n);
    let half = T::lit(0.5);
    let constant = -half * (T::PI() * r2).ln() + ln_gamma(nf * half) - ln_gamma((nf - T::one()) * half);
    let expo = (nf - T::lit(3.0)) * half;
    let shape = if expo == T::zero() { T::zero() } else { expo * (-(u1 * u1) / r2).ln_1p() };
    Ok(constant + shape)
}

/// Exponential rate `I(U;S) = log((P + alpha^2 P_S)/P)/2` of the probability
/// that a codeword uniform on the `U`-sphere is jointly typical with `s`.
pub fn sphere_hit_exponent<T: Real>(p: T, ps: T, alpha: T) -> Result<T> {
    mi_us(p, ps, alpha)
}

/// Range of the first coordinate `u1` for which `u - alpha s` lands in the
/// input annulus `nP - delta_x <= |x|^2 <= nP`, given `s = (|s|, 0, ..., 0)`
/// and `|u|^2 = n (P + alpha^2 P_S)`.
pub fn sphere_coord_interval<T: Real>(cfg: &DpcConfig<T>, ps: T, n: usize, s_norm: T) -> Result<(T, T)> {
    cfg.validate()?;
    if !(cfg.alpha > T::zero() && s_norm > T::zero()) {
        return Err(structural("the interval needs alpha > 0 and a nonzero state"));
    }
    let two = T::lit(2.0);
    let lo = T::count(n) * cfg.alpha * ps / (two * s_norm) + cfg.alpha * s_norm / two;
    Ok((lo, lo + cfg.delta_x / (two * cfg.alpha * s_norm)))
}
