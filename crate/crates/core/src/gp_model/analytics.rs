use crate::error::{domain, Error, Result};
use crate::scalar::Real;

use super::{build_joint_weighted, ChannelSpec, GpParams, JointSuy};

/// `i(u,s) = log Q(u|s) / P_U(u)`.
pub fn info_density_us<T: Real>(joint: &JointSuy<T>, u: usize, s: usize) -> Result<T> {
    check_index(u < joint.n_u() && s < joint.n_s())?;
    let q = joint.q(u, s);
    let pu = joint.p_u()[u];
    if !(q > T::zero() && pu > T::zero()) {
        return Err(Error::UndefinedPoint(format!("i(u={u}, s={s}) queried off the support")));
    }
    Ok((q / pu).ln())
}

/// `i(u,y) = log P_{Y|U}(y|u) / P_Y(y)`.
pub fn info_density_uy<T: Real>(joint: &JointSuy<T>, u: usize, y: usize) -> Result<T> {
    check_index(u < joint.n_u() && y < joint.n_y())?;
    let puy = joint.p_uy(u, y);
    if !(puy > T::zero()) {
        return Err(Error::UndefinedPoint(format!("i(u={u}, y={y}) queried off the support")));
    }
    Ok(iuy_unchecked(joint, u, y))
}

fn check_index(ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Structural("symbol index out of range".into()))
    }
}

#[inline]
fn ius_unchecked<T: Real>(joint: &JointSuy<T>, u: usize, s: usize) -> T {
    (joint.q(u, s) / joint.p_u()[u]).ln()
}

#[inline]
fn iuy_unchecked<T: Real>(joint: &JointSuy<T>, u: usize, y: usize) -> T {
    (joint.p_uy(u, y) / (joint.p_u()[u] * joint.p_y()[y])).ln()
}

/// Per-(s,u) conditional moments of `i(u,Y)` given `S=s, U=u`.
struct CondMoments<T> {
    mean: Vec<T>,
    var: Vec<T>,
}

fn cond_moments<T: Real>(joint: &JointSuy<T>) -> CondMoments<T> {
    let (n_s, n_u, n_y) = (joint.n_s(), joint.n_u(), joint.n_y());
    let mut mean = vec![T::zero(); n_s * n_u];
    let mut var = vec![T::zero(); n_s * n_u];
    for s in 0..n_s {
        for u in 0..n_u {
            if !(joint.p_su(s, u) > T::zero()) {
                continue;
            }
            let mut m = T::zero();
            for y in 0..n_y {
                let w = joint.w(s, u, y);
                if w > T::zero() {
                    m = m + w * iuy_unchecked(joint, u, y);
                }
            }
            let mut v = T::zero();
            for y in 0..n_y {
                let w = joint.w(s, u, y);
                if w > T::zero() {
                    let d = iuy_unchecked(joint, u, y) - m;
                    v = v + w * d * d;
                }
            }
            mean[s * n_u + u] = m;
            var[s * n_u + u] = v;
        }
    }
    CondMoments { mean, var }
}

fn mi_us<T: Real>(joint: &JointSuy<T>) -> T {
    let mut acc = T::zero();
    for s in 0..joint.n_s() {
        for u in 0..joint.n_u() {
            let m = joint.p_su(s, u);
            if m > T::zero() {
                acc = acc + m * ius_unchecked(joint, u, s);
            }
        }
    }
    acc
}

fn mi_uy<T: Real>(joint: &JointSuy<T>) -> T {
    let mut acc = T::zero();
    for u in 0..joint.n_u() {
        for y in 0..joint.n_y() {
            let m = joint.p_uy(u, y);
            if m > T::zero() {
                acc = acc + m * iuy_unchecked(joint, u, y);
            }
        }
    }
    acc
}

/// `I(U;Y) - I(U;S)` from exact sums.
pub fn gp_objective<T: Real>(joint: &JointSuy<T>) -> T {
    mi_uy(joint) - mi_us(joint)
}

/// Objective at arbitrary nonnegative `Q` entries (flat `[s * aux + u]`),
/// with the rows not required to sum to one. This is the function whose
/// partial derivatives [`grad_objective_q`] returns.
pub fn objective_at<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, q: &[T]) -> Result<T> {
    if q.len() != params.q_flat().len() {
        return Err(Error::Structural("Q vector has the wrong length".into()));
    }
    let joint = build_joint_weighted(spec, &params.with_q(q.to_vec()), spec.pi())?;
    Ok(gp_objective(&joint))
}

/// Analytic second-order summary of a joint law (nats).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionReport<T> {
    /// `I(U;Y) - I(U;S)`.
    pub c: T,
    pub mi_uy: T,
    pub mi_us: T,
    /// `E[Var[i(U,Y)|S,U]] + Var[E[i(U,Y) - i(U,S)|S]]`.
    pub v_conditional: T,
    /// The two summands of `v_conditional`.
    pub v_conditional_terms: [T; 2],
    /// `Var[i(U,Y) - i(U,S)]`.
    pub v_variance: T,
    /// Covariance of `(-i(U,S), i(U,Y))`.
    pub cov_matrix: [[T; 2]; 2],
    pub kkt_residual: T,
}

/// Both dispersion forms, the covariance matrix and the stationarity residual.
pub fn dispersion<T: Real>(joint: &JointSuy<T>) -> DispersionReport<T> {
    let (n_s, n_u, n_y) = (joint.n_s(), joint.n_u(), joint.n_y());
    let cm = cond_moments(joint);
    let a = mi_us(joint);
    let b = mi_uy(joint);
    let c = b - a;

    let mut first = T::zero();
    let mut g = vec![T::zero(); n_s];
    for s in 0..n_s {
        for u in 0..n_u {
            let k = s * n_u + u;
            let m = joint.p_su(s, u);
            if m > T::zero() {
                first = first + m * cm.var[k];
                g[s] = g[s] + joint.q(u, s) * (cm.mean[k] - ius_unchecked(joint, u, s));
            }
        }
    }
    let mut second = T::zero();
    for s in 0..n_s {
        let w = joint.state_marg()[s];
        if w > T::zero() {
            let d = g[s] - c;
            second = second + w * d * d;
        }
    }

    // Var of the difference and covariance of (-i(U,S), i(U,Y)).
    let mut v_var = T::zero();
    let (mut c11, mut c12, mut c22) = (T::zero(), T::zero(), T::zero());
    for s in 0..n_s {
        for u in 0..n_u {
            if !(joint.p_su(s, u) > T::zero()) {
                continue;
            }
            let d1 = -ius_unchecked(joint, u, s) + a;
            for y in 0..n_y {
                let p = joint.p(s, u, y);
                if p > T::zero() {
                    let d2 = iuy_unchecked(joint, u, y) - b;
                    let dd = d1 + d2;
                    v_var = v_var + p * dd * dd;
                    c11 = c11 + p * d1 * d1;
                    c12 = c12 + p * d1 * d2;
                    c22 = c22 + p * d2 * d2;
                }
            }
        }
    }
    DispersionReport {
        c,
        mi_uy: b,
        mi_us: a,
        v_conditional: first + second,
        v_conditional_terms: [first, second],
        v_variance: v_var,
        cov_matrix: [[c11, c12], [c12, c22]],
        kkt_residual: kkt_from_moments(joint, &cm),
    }
}

/// `xi'(s,u) = E[i(u,Y) | s,u] - i(u,s)`, the quantity constant on the
/// support of each `Q(.|s)` at a stationary point.
fn xi<T: Real>(joint: &JointSuy<T>, cm: &CondMoments<T>, s: usize, u: usize) -> T {
    cm.mean[s * joint.n_u() + u] - ius_unchecked(joint, u, s)
}

fn kkt_from_moments<T: Real>(joint: &JointSuy<T>, cm: &CondMoments<T>) -> T {
    let mut worst = T::zero();
    for s in 0..joint.n_s() {
        if !(joint.state_marg()[s] > T::zero()) {
            continue;
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for u in 0..joint.n_u() {
            if joint.q(u, s) > T::zero() {
                let v = xi(joint, cm, s, u);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi >= lo {
            worst = worst.max(hi - lo);
        }
    }
    worst
}

/// Largest spread over states of `xi'(s,.)` across the support of `Q(.|s)`.
pub fn kkt_residual<T: Real>(joint: &JointSuy<T>) -> T {
    kkt_from_moments(joint, &cond_moments(joint))
}

/// `d(I(U;Y) - I(U;S)) / dQ(u|s) = pi(s) (xi'(s,u) - 1)`, returned as `[s][u]`.
///
/// The derivative treats every entry of `Q` as a free coordinate; see
/// [`objective_at`].
pub fn grad_objective_q<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>) -> Result<Vec<Vec<T>>> {
    if params.q_flat().iter().any(|&q| !(q > T::zero())) {
        return Err(domain("Q-gradient requires every Q(u|s) > 0"));
    }
    let joint = build_joint_weighted(spec, params, spec.pi())?;
    Ok(grad_from_joint(&joint))
}

pub(crate) fn grad_from_joint<T: Real>(joint: &JointSuy<T>) -> Vec<Vec<T>> {
    let cm = cond_moments(joint);
    (0..joint.n_s())
        .map(|s| {
            let w = joint.state_marg()[s];
            (0..joint.n_u())
                .map(|u| w * (xi(joint, &cm, s, u) - T::one()))
                .collect()
        })
        .collect()
}

/// Conditional means `E[i(U,Y) - i(U,S) | S = s]` under the joint's own marginals.
pub(crate) fn per_state_gain<T: Real>(joint: &JointSuy<T>) -> Vec<T> {
    let cm = cond_moments(joint);
    (0..joint.n_s())
        .map(|s| {
            (0..joint.n_u())
                .filter(|&u| joint.q(u, s) > T::zero())
                .map(|u| joint.q(u, s) * xi(joint, &cm, s, u))
                .sum()
        })
        .collect()
}

/// `E[Var[i(U,Y)|S,U]]` under the joint's state weights.
pub(crate) fn conditional_variance<T: Real>(joint: &JointSuy<T>) -> T {
    let cm = cond_moments(joint);
    let mut acc = T::zero();
    for s in 0..joint.n_s() {
        for u in 0..joint.n_u() {
            let m = joint.p_su(s, u);
            if m > T::zero() {
                acc = acc + m * cm.var[s * joint.n_u() + u];
            }
        }
    }
    acc
}
