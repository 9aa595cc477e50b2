//! Second-order expansions: the normal approximation, the i.i.d.-ensemble
//! coefficient `R~` over the bivariate `Q_inv` region, the Cauchy–Schwarz
//! comparison bound, and the state-at-both-ends calculator.

use rayon::prelude::*;

use crate::error::{domain, structural, Error, Result};
use crate::gp_model::{dispersion, JointSuy};
use crate::numkit::{binorm_lower_cdf, brent_root, golden_section_min, qinv, Tolerance};
use crate::scalar::Real;

/// Number of `R1` grid points in the `R~` sweep.
pub const SWEEP_POINTS: usize = 2001;
/// Width of the sweep in units of `sqrt(V1)`.
pub const SWEEP_PAD: f64 = 6.0;
const RHO_CLIP: f64 = 1e-12;

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() && eps < T::one() {
        Ok(())
    } else {
        Err(domain(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// `nC - sqrt(nV) Q^{-1}(eps)`.
pub fn normal_approx<T: Real>(c: T, v: T, n: usize, eps: T) -> Result<T> {
    check_eps(eps)?;
    if !(v >= T::zero()) {
        return Err(domain(format!("dispersion must be nonnegative, got {v}")));
    }
    if n == 0 {
        return Err(domain("blocklength must be positive"));
    }
    let nf = T::count(n);
    Ok(nf * c - (nf * v).sqrt() * qinv(eps)?)
}

/// Covariance of `(-i(U,S), i(U,Y))` under the joint law.
pub fn cov_matrix<T: Real>(joint: &JointSuy<T>) -> [[T; 2]; 2] {
    dispersion(joint).cov_matrix
}

fn check_psd<T: Real>(v: &[[T; 2]; 2]) -> Result<()> {
    let slack = T::lit(1e-12);
    let (a, b, d) = (v[0][0], v[0][1], v[1][1]);
    if !(a.is_finite() && b.is_finite() && d.is_finite()) || (v[1][0] - b).abs() > slack * (T::one() + b.abs()) {
        return Err(domain("covariance matrix must be finite and symmetric"));
    }
    if a < -slack || d < -slack || a * d - b * b < -slack * (T::one() + a * d) {
        return Err(domain("covariance matrix is not positive semidefinite"));
    }
    Ok(())
}

/// Minimizer of `R1 + R2` on the boundary of the `Q_inv` region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RTilde<T> {
    /// `min R1 + R2`, nats per square-root use.
    pub value: T,
    pub r1: T,
    pub r2: T,
}

/// `R~ = min { R1 + R2 : P[Z <= (R1, R2)] >= 1 - eps }`, `Z ~ N(0, vmat)`.
///
/// Sweeps `R1` over `SWEEP_POINTS` points above `sqrt(V1) Q^{-1}(eps)`, solves
/// the boundary `R2` by Brent's method and refines the best cell by
/// golden-section search. A zero-variance coordinate only needs `R_i >= 0`.
pub fn r_tilde<T: Real>(vmat: &[[T; 2]; 2], eps: T) -> Result<RTilde<T>> {
    check_eps(eps)?;
    check_psd(vmat)?;
    let q = qinv(eps)?;
    let v1 = vmat[0][0].max(T::zero());
    let v2 = vmat[1][1].max(T::zero());
    if v1 == T::zero() && v2 == T::zero() {
        return Ok(RTilde { value: T::zero(), r1: T::zero(), r2: T::zero() });
    }
    if v1 == T::zero() {
        let r2 = v2.sqrt() * q;
        return Ok(RTilde { value: r2, r1: T::zero(), r2 });
    }
    if v2 == T::zero() {
        let r1 = v1.sqrt() * q;
        return Ok(RTilde { value: r1, r1, r2: T::zero() });
    }
    let (s1, s2) = (v1.sqrt(), v2.sqrt());
    let clip = T::one() - T::lit(RHO_CLIP);
    let rho = (vmat[0][1] / (s1 * s2)).max(-clip).min(clip);
    let target = T::one() - eps;
    let root_tol = Tolerance::new(1e-13, 0.0, 200).expect("static tolerance");

    // Boundary R2 for a given R1 (None where the region is empty).
    let boundary = |r1: T| -> Option<T> {
        let z1 = r1 / s1;
        let g = |z2: T| binorm_lower_cdf(z1, z2, rho).map(|p| p - target).unwrap_or(T::nan());
        let lo = q;
        let mut hi = q + T::one();
        let mut gh = g(hi);
        while !(gh > T::zero()) {
            if hi > q + T::lit(40.0) || gh.is_nan() {
                return None;
            }
            hi = hi + (hi - q);
            gh = g(hi);
        }
        brent_root(g, lo, hi, &root_tol).ok().map(|z2| z2 * s2)
    };
    let total = |r1: T| boundary(r1).map_or(T::infinity(), |r2| r1 + r2);

    let lo = s1 * q;
    let mut width = T::lit(SWEEP_PAD) * s1;
    loop {
        let h = width / T::count(SWEEP_POINTS);
        let grid: Vec<T> = (1..=SWEEP_POINTS).map(|k| lo + h * T::count(k)).collect();
        let vals: Vec<T> = grid.par_iter().map(|&r1| total(r1)).collect();
        let (best, &fbest) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)))
            .expect("nonempty grid");
        if !fbest.is_finite() {
            return Err(Error::Numeric("no feasible point found in the R1 sweep".into()));
        }
        if best + 1 == SWEEP_POINTS && width < T::lit(1e3) * s1 {
            width = width * T::lit(4.0);
            continue;
        }
        let a = if best == 0 { lo + h * T::lit(0.5) } else { grid[best - 1] };
        let b = grid[(best + 1).min(SWEEP_POINTS - 1)];
        let gtol = Tolerance::new(1e-12, 0.0, 200).expect("static tolerance");
        let (r1, val) = golden_section_min(total, a, b, &gtol);
        let (r1, val) = if val <= fbest { (r1, val) } else { (grid[best], fbest) };
        return Ok(RTilde { value: val, r1, r2: val - r1 });
    }
}

/// `(sqrt(V1) + sqrt(V2)) Q^{-1}(eps)`.
pub fn cs_lower_bound<T: Real>(vmat: &[[T; 2]; 2], eps: T) -> Result<T> {
    check_eps(eps)?;
    check_psd(vmat)?;
    Ok((vmat[0][0].max(T::zero()).sqrt() + vmat[1][1].max(T::zero()).sqrt()) * qinv(eps)?)
}

/// Everything needed to compare the two second-order expansions.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SecondOrderSummary<T> {
    pub c: T,
    pub v: T,
    pub eps: T,
    pub n_grid: Vec<usize>,
    /// `nC - sqrt(nV) Q^{-1}(eps)` per blocklength.
    pub logm_curve: Vec<T>,
    /// `nC - sqrt(n) R~` per blocklength.
    pub iid_curve: Vec<T>,
    pub r_tilde: T,
    pub cs_lower: T,
}

/// Builds a [`SecondOrderSummary`] from a joint law, using the
/// conditional-variance dispersion.
pub fn summarize<T: Real>(joint: &JointSuy<T>, eps: T, n_grid: &[usize]) -> Result<SecondOrderSummary<T>> {
    let rep = dispersion(joint);
    let v = rep.v_conditional.max(T::zero());
    let rt = r_tilde(&rep.cov_matrix, eps)?.value;
    let cs = cs_lower_bound(&rep.cov_matrix, eps)?;
    let logm_curve = n_grid
        .iter()
        .map(|&n| normal_approx(rep.c, v, n, eps))
        .collect::<Result<Vec<_>>>()?;
    let iid_curve = n_grid
        .iter()
        .map(|&n| T::count(n) * rep.c - T::count(n).sqrt() * rt)
        .collect();
    Ok(SecondOrderSummary {
        c: rep.c,
        v,
        eps,
        n_grid: n_grid.to_vec(),
        logm_curve,
        iid_curve,
        r_tilde: rt,
        cs_lower: cs,
    })
}

/// Capacity-achieving input of a single-user channel `w[x][y]` by
/// Blahut–Arimoto, stopped once the duality gap is below `gap_tol` nats.
/// Returns `(capacity, input distribution)`.
pub fn blahut_arimoto<T: Real>(w: &[Vec<T>], gap_tol: T, max_iter: usize) -> Result<(T, Vec<T>)> {
    let nx = w.len();
    if nx == 0 || w[0].is_empty() {
        return Err(structural("channel matrix must be nonempty"));
    }
    let ny = w[0].len();
    for (x, row) in w.iter().enumerate() {
        let total: T = row.iter().copied().sum();
        if row.len() != ny || row.iter().any(|&v| !(v >= T::zero())) || (total - T::one()).abs() > T::lit(1e-12) {
            return Err(structural(format!("channel row {x} is not a probability vector")));
        }
    }
    let mut p = vec![T::one() / T::count(nx); nx];
    let mut d = vec![T::zero(); nx];
    for _ in 0..max_iter {
        let qy: Vec<T> = (0..ny).map(|y| (0..nx).map(|x| p[x] * w[x][y]).sum()).collect();
        for x in 0..nx {
            d[x] = (0..ny)
                .filter(|&y| w[x][y] > T::zero())
                .map(|y| w[x][y] * (w[x][y] / qy[y]).ln())
                .sum();
        }
        let lower: T = (0..nx).map(|x| p[x] * d[x]).sum();
        let upper = d.iter().copied().fold(T::neg_infinity(), T::max);
        if upper - lower <= gap_tol {
            return Ok((lower, p));
        }
        let dmax = upper;
        let weights: Vec<T> = (0..nx).map(|x| p[x] * (d[x] - dmax).exp()).collect();
        let z: T = weights.iter().copied().sum();
        p = weights.into_iter().map(|v| v / z).collect();
    }
    Err(Error::Numeric("Blahut-Arimoto did not reach the requested gap".into()))
}

/// `E[Var[i(X;Y) | X]]` at input `p` (the conditional-variance dispersion).
pub fn single_user_dispersion<T: Real>(w: &[Vec<T>], p: &[T]) -> T {
    let ny = w[0].len();
    let qy: Vec<T> = (0..ny).map(|y| p.iter().zip(w).map(|(&px, row)| px * row[y]).sum()).collect();
    let mut acc = T::zero();
    for (x, row) in w.iter().enumerate() {
        if !(p[x] > T::zero()) {
            continue;
        }
        let dens = |y: usize| (row[y] / qy[y]).ln();
        let mean: T = (0..ny).filter(|&y| row[y] > T::zero()).map(|y| row[y] * dens(y)).sum();
        let var: T = (0..ny)
            .filter(|&y| row[y] > T::zero())
            .map(|y| {
                let d = dens(y) - mean;
                row[y] * d * d
            })
            .sum();
        acc = acc + p[x] * var;
    }
    acc
}

/// Result of the state-at-both-ends combination.
#[derive(Debug, Clone, PartialEq)]
pub struct BothSides<T> {
    pub c: T,
    pub v: T,
    /// `(C_s, V_s)` per state.
    pub per_state: Vec<(T, T)>,
    /// `E[V_S] > 0`, the condition under which `v` is the dispersion.
    pub dispersion_condition_holds: bool,
}

/// `C = E[C_S]`, `V = E[V_S] + Var[C_S]` from per-state single-user channels
/// `channels[s][x][y]`.
pub fn both_sides<T: Real>(channels: &[Vec<Vec<T>>], pi: &[T]) -> Result<BothSides<T>> {
    if channels.len() != pi.len() || pi.is_empty() {
        return Err(structural("need one channel per state"));
    }
    let per_state = channels
        .iter()
        .map(|w| {
            let (c, p) = blahut_arimoto(w, T::lit(1e-10).max(T::lit(16.0) * T::epsilon()), 1_000_000)?;
            Ok((c, single_user_dispersion(w, &p)))
        })
        .collect::<Result<Vec<_>>>()?;
    let c: T = pi.iter().zip(&per_state).map(|(&w, &(cs, _))| w * cs).sum();
    let ev: T = pi.iter().zip(&per_state).map(|(&w, &(_, vs))| w * vs).sum();
    let var_c: T = pi
        .iter()
        .zip(&per_state)
        .map(|(&w, &(cs, _))| w * (cs - c) * (cs - c))
        .sum();
    Ok(BothSides {
        c,
        v: ev + var_c,
        per_state,
        dispersion_condition_holds: ev > T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp_model::build_joint;
    use crate::numkit::{normal_cdf, NATS_PER_BIT};
    use crate::presets::{stuck_at_channel, stuck_at_params};
    use proptest::prelude::*;

    #[test]
    fn normal_approx_trivia() {
        assert_eq!(normal_approx(0.3, 2.0, 100, 0.5).unwrap(), 30.0);
        assert_eq!(normal_approx(0.3, 0.0, 100, 0.01).unwrap(), 30.0);
        assert!(normal_approx(0.3, -1.0, 100, 0.01).is_err());
        assert!(normal_approx(0.3, 1.0, 100, 1.0).is_err());
    }

    #[test]
    fn stuck_at_reference_values() {
        let spec = stuck_at_channel(0.11_f64, 0.1).unwrap();
        let params = stuck_at_params(0.11_f64).unwrap();
        let joint = build_joint(&spec, &params, spec.pi()).unwrap();
        let v = cov_matrix(&joint);
        let rt = r_tilde(&v, 0.001).unwrap();
        assert!((rt.value / NATS_PER_BIT - 4.16).abs() < 0.01, "{}", rt.value / NATS_PER_BIT);
        let cs = cs_lower_bound(&v, 0.001).unwrap();
        assert!(cs <= rt.value + 1e-9);
        let s = summarize(&joint, 0.001, &[10_000]).unwrap();
        let coeff = 2.81 * NATS_PER_BIT;
        assert!((s.logm_curve[0] - (1e4 * s.c - 100.0 * coeff)).abs() < 100.0 * 0.01 * NATS_PER_BIT);
        // the returned minimizer lies on the boundary
        let p = binorm_lower_cdf(rt.r1 / v[0][0].sqrt(), rt.r2 / v[1][1].sqrt(), v[0][1] / (v[0][0] * v[1][1]).sqrt()).unwrap();
        assert!(p >= 0.999 - 1e-9);
    }

    #[test]
    fn degenerate_coordinates() {
        let v = [[0.0, 0.0], [0.0, 2.0]];
        let rt = r_tilde(&v, 0.01).unwrap();
        let want = 2f64.sqrt() * qinv(0.01).unwrap();
        assert!((rt.value - want).abs() < 1e-15);
        assert!((cs_lower_bound(&v, 0.01).unwrap() - want).abs() < 1e-15);
        assert_eq!(cs_lower_bound(&[[1.0, 0.2], [0.2, 3.0]], 0.5).unwrap(), 0.0);
        assert!(r_tilde(&[[1.0, 2.0], [2.0, 1.0]], 0.1).is_err());
    }

    /// Brute force for diagonal covariance: product-form CDF, dense grid
    /// in R1 and bisection in R2.
    fn diagonal_oracle(v1: f64, v2: f64, eps: f64) -> f64 {
        let (s1, s2) = (v1.sqrt(), v2.sqrt());
        let q = qinv(eps).unwrap();
        let feasible = |r1: f64, r2: f64| normal_cdf(r1 / s1) * normal_cdf(r2 / s2) >= 1.0 - eps;
        let min_r2 = |r1: f64| {
            let (mut lo, mut hi) = (s2 * q, s2 * (q + 30.0));
            if !feasible(r1, hi) {
                return f64::INFINITY;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if feasible(r1, mid) { hi = mid } else { lo = mid }
            }
            hi
        };
        let (mut a, mut b) = (s1 * q, s1 * (q + 8.0));
        let mut best = f64::INFINITY;
        for _ in 0..4 {
            let m = 400;
            let h = (b - a) / m as f64;
            let mut arg = a;
            for k in 0..=m {
                let r1 = a + h * k as f64;
                let val = r1 + min_r2(r1);
                if val < best {
                    best = val;
                    arg = r1;
                }
            }
            a = (arg - 2.0 * h).max(s1 * q);
            b = arg + 2.0 * h;
        }
        best
    }

    #[test]
    fn diagonal_matches_grid_oracle() {
        for &(v1, v2, eps) in &[(1.0, 1.0, 0.01), (0.3, 2.5, 0.001), (4.0, 0.2, 0.1)] {
            let got = r_tilde(&[[v1, 0.0], [0.0, v2]], eps).unwrap().value;
            let want = diagonal_oracle(v1, v2, eps);
            assert!((got - want).abs() < 1e-4, "({v1},{v2},{eps}): {got} vs {want}");
        }
    }

    #[test]
    fn blahut_arimoto_bsc_and_z_channel() {
        let d = 0.11_f64;
        let w = vec![vec![1.0 - d, d], vec![d, 1.0 - d]];
        let (c, p) = blahut_arimoto(&w, 1e-12, 10_000).unwrap();
        let h = -d * d.ln() - (1.0 - d) * (1.0 - d).ln();
        assert!((c - (2f64.ln() - h)).abs() < 1e-12);
        let v = single_user_dispersion(&w, &p);
        let want = d * (1.0 - d) * ((1.0 - d) / d).ln().powi(2);
        assert!((v - want).abs() < 1e-12);
        // Z channel with crossover 1/2: C = log2(5/4) bits
        let z = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let (c, _) = blahut_arimoto(&z, 1e-12, 100_000).unwrap();
        assert!((c - (1.25f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn both_sides_identical_and_single_state() {
        let d = 0.2_f64;
        let w = vec![vec![1.0 - d, d], vec![d, 1.0 - d]];
        let r = both_sides(&[w.clone(), w.clone()], &[0.3, 0.7]).unwrap();
        assert!((r.per_state[0].0 - r.per_state[1].0).abs() < 1e-15);
        assert!((r.v - r.per_state[0].1).abs() < 1e-14);
        let single = both_sides(std::slice::from_ref(&w), &[1.0]).unwrap();
        let (c, p) = blahut_arimoto(&w, 1e-10, 10_000).unwrap();
        assert_eq!(single.c, c);
        assert_eq!(single.v, single_user_dispersion(&w, &p));
        assert!(both_sides(&[vec![vec![0.5, 0.6]]], &[1.0]).is_err());
    }

    fn psd_strategy() -> impl Strategy<Value = ([[f64; 2]; 2], f64)> {
        (0.05f64..3.0, 0.05f64..3.0, -0.95f64..0.95, 1e-3f64..0.45).prop_map(|(v1, v2, r, eps)| {
            let c = r * (v1 * v2).sqrt();
            ([[v1, c], [c, v2]], eps)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cauchy_schwarz_direction((v, eps) in psd_strategy()) {
            let rt = r_tilde(&v, eps).unwrap();
            prop_assert!(cs_lower_bound(&v, eps).unwrap() <= rt.value + 1e-6);
            let z = (rt.r1 / v[0][0].sqrt(), rt.r2 / v[1][1].sqrt());
            let rho = v[0][1] / (v[0][0] * v[1][1]).sqrt();
            prop_assert!(binorm_lower_cdf(z.0, z.1, rho).unwrap() >= 1.0 - eps - 1e-9);
        }
    }
}
