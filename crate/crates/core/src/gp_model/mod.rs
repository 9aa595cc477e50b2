//! Discrete memoryless Gel'fand-Pinsker channel: data model, joint law,
//! information densities, dispersions, state-distribution sensitivity and
//! stationarity diagnostics.

mod analytics;
mod quantize;
mod sensitivity;

pub use analytics::{
    dispersion, gp_objective, grad_objective_q, info_density_us, info_density_uy, kkt_residual,
    objective_at, DispersionReport,
};
pub use quantize::{quantize_counts, type_quantize_q, StateType};
pub(crate) use analytics::grad_from_joint;
pub use sensitivity::{
    grad_i_of_ps, hessian_i_of_ps, i_of_ps, linearized_i, taylor_remainder, v_of_ps,
};

use crate::error::{domain, structural, Result};
use crate::scalar::Real;

const STOCHASTIC_TOL: f64 = 1e-12;

fn check_distribution<T: Real>(row: &[T], what: &str, tol: f64) -> Result<()> {
    if row.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
        return Err(domain(format!("{what}: entries must be finite and nonnegative")));
    }
    let total: T = row.iter().copied().sum();
    if (total - T::one()).abs().to_f64_lossy() > tol.max(8.0 * T::epsilon().to_f64_lossy() * row.len() as f64) {
        return Err(domain(format!("{what}: entries sum to {total}, not 1")));
    }
    Ok(())
}

/// State prior and transition kernel `W(y|x,s)` over finite alphabets.
///
/// States with zero prior mass are dropped at construction; `state_index`
/// maps the retained states back to the caller's numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T> {
    n_x: usize,
    n_s: usize,
    n_y: usize,
    pi: Vec<T>,
    kernel: Vec<T>,
    state_index: Vec<usize>,
    original_states: usize,
}

impl<T: Real> ChannelSpec<T> {
    /// `kernel[x][s][y] = W(y|x,s)`.
    pub fn new(pi: Vec<T>, kernel: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let n_s_all = pi.len();
        let n_x = kernel.len();
        if n_s_all == 0 || n_x == 0 {
            return Err(structural("state and input alphabets must be nonempty"));
        }
        check_distribution(&pi, "state distribution", STOCHASTIC_TOL)?;
        let n_y = kernel[0].first().map_or(0, Vec::len);
        if n_y == 0 {
            return Err(structural("output alphabet must be nonempty"));
        }
        for (x, rows) in kernel.iter().enumerate() {
            if rows.len() != n_s_all {
                return Err(structural(format!(
                    "kernel[{x}] has {} state rows, expected {n_s_all}",
                    rows.len()
                )));
            }
            for (s, row) in rows.iter().enumerate() {
                if row.len() != n_y {
                    return Err(structural(format!(
                        "kernel[{x}][{s}] has {} outputs, expected {n_y}",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("kernel[{x}][{s}]"), STOCHASTIC_TOL)?;
            }
        }
        let state_index: Vec<usize> = (0..n_s_all).filter(|&s| pi[s] > T::zero()).collect();
        let n_s = state_index.len();
        let mut flat = Vec::with_capacity(n_x * n_s * n_y);
        for rows in &kernel {
            for &s in &state_index {
                flat.extend_from_slice(&rows[s]);
            }
        }
        Ok(Self {
            n_x,
            n_s,
            n_y,
            pi: state_index.iter().map(|&s| pi[s]).collect(),
            kernel: flat,
            state_index,
            original_states: n_s_all,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }
    pub fn pi(&self) -> &[T] {
        &self.pi
    }
    /// Original index of each retained state.
    pub fn state_index(&self) -> &[usize] {
        &self.state_index
    }
    pub fn original_states(&self) -> usize {
        self.original_states
    }

    /// `W(·|x,s)` for a retained state `s`.
    #[inline]
    pub fn w_row(&self, x: usize, s: usize) -> &[T] {
        let start = (x * self.n_s + s) * self.n_y;
        &self.kernel[start..start + self.n_y]
    }

    /// Keeps the entries of a per-state table (indexed by original state)
    /// that belong to retained states.
    pub fn retain_states<V: Clone>(&self, rows: &[V]) -> Result<Vec<V>> {
        if rows.len() != self.original_states {
            return Err(structural(format!(
                "table has {} state rows, channel has {}",
                rows.len(),
                self.original_states
            )));
        }
        Ok(self.state_index.iter().map(|&s| rows[s].clone()).collect())
    }
}

/// Auxiliary alphabet size, `Q_{U|S}` and the map `x = phi(u, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpParams<T> {
    aux_size: usize,
    n_s: usize,
    q: Vec<T>,
    phi: Vec<usize>,
}

impl<T: Real> GpParams<T> {
    /// `q[s][u] = Q(u|s)`, `phi[u][s] = x`.
    pub fn new(q: Vec<Vec<T>>, phi: Vec<Vec<usize>>) -> Result<Self> {
        let n_s = q.len();
        if n_s == 0 {
            return Err(structural("Q must have at least one state row"));
        }
        let aux_size = q[0].len();
        if aux_size == 0 {
            return Err(structural("auxiliary alphabet must be nonempty"));
        }
        for (s, row) in q.iter().enumerate() {
            if row.len() != aux_size {
                return Err(structural(format!("Q row {s} has {} entries, expected {aux_size}", row.len())));
            }
            check_distribution(row, &format!("Q(.|s={s})"), STOCHASTIC_TOL)?;
        }
        if phi.len() != aux_size || phi.iter().any(|r| r.len() != n_s) {
            return Err(structural(format!("phi must be a {aux_size} x {n_s} table")));
        }
        Ok(Self {
            aux_size,
            n_s,
            q: q.into_iter().flatten().collect(),
            phi: phi.into_iter().flatten().collect(),
        })
    }

    /// Flat constructor: `q[s * aux + u]`, `phi[u * n_s + s]`. Rows of `q`
    /// are not checked for normalization.
    pub(crate) fn from_flat(aux_size: usize, n_s: usize, q: Vec<T>, phi: Vec<usize>) -> Self {
        debug_assert_eq!(q.len(), aux_size * n_s);
        debug_assert_eq!(phi.len(), aux_size * n_s);
        Self { aux_size, n_s, q, phi }
    }

    pub fn aux_size(&self) -> usize {
        self.aux_size
    }
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    #[inline]
    pub fn q(&self, u: usize, s: usize) -> T {
        self.q[s * self.aux_size + u]
    }
    #[inline]
    pub fn phi(&self, u: usize, s: usize) -> usize {
        self.phi[u * self.n_s + s]
    }
    pub fn q_row(&self, s: usize) -> &[T] {
        &self.q[s * self.aux_size..(s + 1) * self.aux_size]
    }
    pub fn q_flat(&self) -> &[T] {
        &self.q
    }
    pub fn phi_flat(&self) -> &[usize] {
        &self.phi
    }
    pub fn q_table(&self) -> Vec<Vec<T>> {
        self.q.chunks(self.aux_size).map(<[T]>::to_vec).collect()
    }
    pub fn phi_table(&self) -> Vec<Vec<usize>> {
        self.phi.chunks(self.n_s).map(<[usize]>::to_vec).collect()
    }

    pub(crate) fn with_q(&self, q: Vec<T>) -> Self {
        Self::from_flat(self.aux_size, self.n_s, q, self.phi.clone())
    }

    fn check_against(&self, spec: &ChannelSpec<T>) -> Result<()> {
        if self.n_s != spec.n_s() {
            return Err(structural(format!(
                "parameters cover {} states, channel has {} (after dropping zero-prior states)",
                self.n_s,
                spec.n_s()
            )));
        }
        if let Some(&x) = self.phi.iter().find(|&&x| x >= spec.n_x()) {
            return Err(structural(format!("phi maps to input {x}, alphabet size is {}", spec.n_x())));
        }
        Ok(())
    }
}

/// Joint law `p(s,u,y) = P_S(s) Q(u|s) W(y|phi(u,s),s)` with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSuy<T> {
    n_s: usize,
    n_u: usize,
    n_y: usize,
    state_marg: Vec<T>,
    q: Vec<T>,
    /// `W(y | phi(u,s), s)` laid out as `[(s*n_u + u)*n_y + y]`.
    w_su: Vec<T>,
    p: Vec<T>,
    p_u: Vec<T>,
    p_y: Vec<T>,
    p_uy: Vec<T>,
    p_su: Vec<T>,
}

/// Builds the joint law for a state distribution (`pi` or a state type).
pub fn build_joint<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>, state_marg: &[T]) -> Result<JointSuy<T>> {
    if state_marg.len() != spec.n_s() {
        return Err(structural(format!(
            "state distribution has {} entries, channel has {}",
            state_marg.len(),
            spec.n_s()
        )));
    }
    check_distribution(state_marg, "state distribution", 1e-10)?;
    build_joint_weighted(spec, params, state_marg)
}

/// As [`build_joint`] but accepts arbitrary nonnegative state weights and
/// unnormalized `Q` rows; used to differentiate in free coordinates.
pub fn build_joint_weighted<T: Real>(
    spec: &ChannelSpec<T>,
    params: &GpParams<T>,
    weights: &[T],
) -> Result<JointSuy<T>> {
    params.check_against(spec)?;
    if weights.len() != spec.n_s() {
        return Err(structural("state weight vector has the wrong length"));
    }
    let (n_s, n_u, n_y) = (spec.n_s(), params.aux_size(), spec.n_y());
    let mut w_su = Vec::with_capacity(n_s * n_u * n_y);
    let mut p = Vec::with_capacity(n_s * n_u * n_y);
    let mut p_u = vec![T::zero(); n_u];
    let mut p_y = vec![T::zero(); n_y];
    let mut p_uy = vec![T::zero(); n_u * n_y];
    let mut p_su = vec![T::zero(); n_s * n_u];
    for s in 0..n_s {
        for u in 0..n_u {
            let mass = weights[s] * params.q(u, s);
            p_su[s * n_u + u] = mass;
            p_u[u] = p_u[u] + mass;
            let row = spec.w_row(params.phi(u, s), s);
            for (y, &w) in row.iter().enumerate() {
                let m = mass * w;
                w_su.push(w);
                p.push(m);
                p_y[y] = p_y[y] + m;
                p_uy[u * n_y + y] = p_uy[u * n_y + y] + m;
            }
        }
    }
    Ok(JointSuy {
        n_s,
        n_u,
        n_y,
        state_marg: weights.to_vec(),
        q: params.q_flat().to_vec(),
        w_su,
        p,
        p_u,
        p_y,
        p_uy,
        p_su,
    })
}

impl<T: Real> JointSuy<T> {
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_y(&self) -> usize {
        self.n_y
    }
    #[inline]
    pub fn p(&self, s: usize, u: usize, y: usize) -> T {
        self.p[(s * self.n_u + u) * self.n_y + y]
    }
    /// `W(y|phi(u,s),s)`.
    #[inline]
    pub fn w(&self, s: usize, u: usize, y: usize) -> T {
        self.w_su[(s * self.n_u + u) * self.n_y + y]
    }
    #[inline]
    pub fn q(&self, u: usize, s: usize) -> T {
        self.q[s * self.n_u + u]
    }
    pub fn state_marg(&self) -> &[T] {
        &self.state_marg
    }
    pub fn p_u(&self) -> &[T] {
        &self.p_u
    }
    pub fn p_y(&self) -> &[T] {
        &self.p_y
    }
    #[inline]
    pub fn p_uy(&self, u: usize, y: usize) -> T {
        self.p_uy[u * self.n_y + y]
    }
    #[inline]
    pub fn p_su(&self, s: usize, u: usize) -> T {
        self.p_su[s * self.n_u + u]
    }
    pub fn total_mass(&self) -> T {
        self.p.iter().copied().sum()
    }
}
