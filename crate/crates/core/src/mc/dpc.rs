//! Information-spectrum and sphere-geometry estimators for dirty paper coding.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{tail_fraction, Estimate, RngSpec};
use crate::dpc::{density_coefficients, DpcConfig};
use crate::error::{domain, structural, Result};

/// A state/auxiliary pair with `|s|^2 = n P_S`, `|u|^2 = n (P + alpha^2 P_S)`
/// and `<s,u> = n alpha P_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcPair {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
}

impl DpcPair {
    /// Checks the three inner products to a relative `1e-9`.
    pub fn new(s: Vec<f64>, u: Vec<f64>, cfg: &DpcConfig<f64>, ps: f64) -> Result<Self> {
        let n = s.len();
        if n < 2 || u.len() != n {
            return Err(structural("pair vectors need a common length n >= 2"));
        }
        let nf = n as f64;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let want = [nf * ps, nf * (cfg.p + cfg.alpha * cfg.alpha * ps), nf * cfg.alpha * ps];
        let got = [dot(&s, &s), dot(&u, &u), dot(&s, &u)];
        let scale = want[0].max(want[1]).max(1.0);
        if want.iter().zip(&got).any(|(w, g)| (w - g).abs() > 1e-9 * scale) {
            return Err(structural("pair does not have the required norms and inner product"));
        }
        Ok(Self { s, u })
    }

    /// Two nonzero coordinates plus zero padding.
    pub fn canonical(n: usize, cfg: &DpcConfig<f64>, ps: f64) -> Result<Self> {
        cfg.validate()?;
        if n < 2 || !(ps >= 0.0) {
            return Err(domain("canonical pair needs n >= 2 and P_S >= 0"));
        }
        let nf = n as f64;
        let mut s = vec![0.0; n];
        let mut u = vec![0.0; n];
        s[0] = (nf * ps).sqrt();
        u[0] = cfg.alpha * s[0];
        u[1] = (nf * cfg.p).sqrt();
        Self::new(s, u, cfg, ps)
    }

    /// Flat state `sqrt(P_S) (1, ..., 1)` with the input along an
    /// alternating-sign direction made orthogonal to it.
    pub fn spread(n: usize, cfg: &DpcConfig<f64>, ps: f64) -> Result<Self> {
        cfg.validate()?;
        if n < 2 || !(ps >= 0.0) {
            return Err(domain("spread pair needs n >= 2 and P_S >= 0"));
        }
        let nf = n as f64;
        let s = vec![ps.sqrt(); n];
        let mut v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mean = v.iter().sum::<f64>() / nf;
        v.iter_mut().for_each(|x| *x -= mean);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = (nf * cfg.p).sqrt() / norm;
        let u = s.iter().zip(&v).map(|(si, vi)| cfg.alpha * si + scale * vi).collect();
        Self::new(s, u, cfg, ps)
    }
}

/// Draws of `i_n(u, Y)` with `Y = u + (1 - alpha) s + Z`, `Z ~ N(0, I)`.
pub fn dpc_spectrum_samples(
    cfg: &DpcConfig<f64>,
    ps: f64,
    pair: &DpcPair,
    trials: usize,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    let [c0, c1, c2, c3] = density_coefficients(cfg.p, ps, cfg.alpha)?;
    let centre: Vec<f64> = pair.u.iter().zip(&pair.s).map(|(u, s)| u + (1.0 - cfg.alpha) * s).collect();
    let shards = rng.run(trials, |r, k| {
        (0..k)
            .map(|_| {
                centre
                    .iter()
                    .zip(&pair.u)
                    .map(|(m, u)| {
                        let y = m + r.sample::<f64, _>(StandardNormal);
                        let d = y + c2 * u;
                        c0 + c1 * d * d + c3 * y * y
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
    });
    Ok(shards.concat())
}

/// `P[i_n(u, Y) <= gamma]` at the canonical pair.
pub fn dpc_spectrum_tail(
    cfg: &DpcConfig<f64>,
    ps: f64,
    n: usize,
    gamma: f64,
    trials: usize,
    rng: &RngSpec,
) -> Result<Estimate> {
    let pair = DpcPair::canonical(n, cfg, ps)?;
    Ok(tail_fraction(&dpc_spectrum_samples(cfg, ps, &pair, trials, rng)?, gamma))
}

/// `P[nP - delta_x <= |U - alpha s|^2 <= nP]` for `U` uniform on the sphere
/// of squared radius `n (P + alpha^2 P_S)` and `s = (sqrt(n P_S), 0, ..., 0)`.
pub fn dpc_geometry_prob(cfg: &DpcConfig<f64>, ps: f64, n: usize, trials: usize, rng: &RngSpec) -> Result<Estimate> {
    cfg.validate()?;
    if n < 2 || !(ps >= 0.0) {
        return Err(domain("geometry estimate needs n >= 2 and P_S >= 0"));
    }
    let nf = n as f64;
    let r2 = nf * (cfg.p + cfg.alpha * cfg.alpha * ps);
    let radius = r2.sqrt();
    let s_norm = (nf * ps).sqrt();
    let (lo, hi) = (nf * cfg.p - cfg.delta_x, nf * cfg.p);
    let hits: usize = rng
        .run(trials, |r, k| {
            let mut g = vec![0.0f64; n];
            (0..k)
                .filter(|_| {
                    g.iter_mut().for_each(|x| *x = r.sample(StandardNormal));
                    let u1 = radius * g[0] / g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let x2 = r2 - 2.0 * cfg.alpha * s_norm * u1 + cfg.alpha * cfg.alpha * s_norm * s_norm;
                    (lo..=hi).contains(&x2)
                })
                .count()
        })
        .into_iter()
        .sum();
    Ok(Estimate::binary(hits, trials))
}
