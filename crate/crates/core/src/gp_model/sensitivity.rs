//! Dependence of the objective on the state distribution.
//!
//! Every function here evaluates the objective with `P_S` in place of `pi`
//! while `Q` and `phi` stay fixed. Derivatives treat each `P_S(s)` as a free
//! coordinate (no simplex constraint).

use crate::error::{domain, structural, Result};
use crate::scalar::Real;

use super::analytics::{conditional_variance, gp_objective, per_state_gain};
use super::{build_joint_weighted, ChannelSpec, GpParams, JointSuy};

fn weighted<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<JointSuy<T>> {
    if ps.len() != spec.n_s() {
        return Err(structural(format!("P_S has {} entries, channel has {}", ps.len(), spec.n_s())));
    }
    if ps.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
        return Err(domain("P_S entries must be finite and nonnegative"));
    }
    build_joint_weighted(spec, params, ps)
}

fn interior<T: Real>(ps: &[T]) -> Result<()> {
    if ps.iter().any(|&v| !(v > T::zero())) {
        return Err(domain("derivatives in P_S require every entry to be positive"));
    }
    Ok(())
}

/// `I(P_S) = I^{(P_S)}(U;Y) - I^{(P_S)}(U;S)`.
pub fn i_of_ps<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<T> {
    Ok(gp_objective(&weighted(spec, params, ps)?))
}

/// `dI/dP_S(s) = E[i^{(P_S)}(U,Y) - i^{(P_S)}(U,S) | S = s]`.
pub fn grad_i_of_ps<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<Vec<T>> {
    interior(ps)?;
    Ok(per_state_gain(&weighted(spec, params, ps)?))
}

/// Second partial derivatives of `I(P_S)`.
///
/// With `b_s(u,y) = Q(u|s) W(y|phi(u,s),s)`, the `I(U;S)` contribution
/// cancels against the `P_U` part of the `I(U;Y)` contribution, leaving
/// `sum_{u,y} b_s b_t / P_UY - sum_y b_s(y) b_t(y) / P_Y`.
pub fn hessian_i_of_ps<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<Vec<Vec<T>>> {
    interior(ps)?;
    let joint = weighted(spec, params, ps)?;
    let (n_s, n_u, n_y) = (joint.n_s(), joint.n_u(), joint.n_y());
    let b = |s: usize, u: usize, y: usize| joint.q(u, s) * joint.w(s, u, y);
    let by: Vec<Vec<T>> = (0..n_s)
        .map(|s| (0..n_y).map(|y| (0..n_u).map(|u| b(s, u, y)).sum()).collect())
        .collect();
    let mut h = vec![vec![T::zero(); n_s]; n_s];
    for s in 0..n_s {
        for t in s..n_s {
            let mut acc = T::zero();
            for u in 0..n_u {
                for y in 0..n_y {
                    let puy = joint.p_uy(u, y);
                    if puy > T::zero() {
                        acc = acc + b(s, u, y) * b(t, u, y) / puy;
                    }
                }
            }
            for y in 0..n_y {
                let py = joint.p_y()[y];
                if py > T::zero() {
                    acc = acc - by[s][y] * by[t][y] / py;
                }
            }
            h[s][t] = acc;
            h[t][s] = acc;
        }
    }
    Ok(h)
}

/// First-order expansion of `I(P_S)` around `pi`:
/// `sum_s P_S(s) E[i(U,Y) - i(U,S) | S = s]` with the densities of the `pi` joint.
pub fn linearized_i<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<T> {
    let at_pi = per_state_gain(&weighted(spec, params, spec.pi())?);
    if ps.len() != at_pi.len() {
        return Err(structural("P_S has the wrong length"));
    }
    Ok(ps.iter().zip(&at_pi).map(|(&p, &g)| p * g).sum())
}

/// `I(P_S) - linearized_i(P_S)`.
pub fn taylor_remainder<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<T> {
    Ok(i_of_ps(spec, params, ps)? - linearized_i(spec, params, ps)?)
}

/// `V(P_S) = E[Var[i^{(P_S)}(U,Y) | S,U]]` under the `P_S`-weighted joint.
pub fn v_of_ps<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, ps: &[T]) -> Result<T> {
    Ok(conditional_variance(&weighted(spec, params, ps)?))
}
