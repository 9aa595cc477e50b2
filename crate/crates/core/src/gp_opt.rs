//! Search for capacity-achieving `(Q_{U|S}, phi)` by exhaustive enumeration
//! of `phi` and multi-start projected gradient ascent on `Q`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gp_model::{build_joint, dispersion, ChannelSpec, DispersionReport, GpParams};
use crate::gp_model::{build_joint_weighted, grad_from_joint};
use crate::numkit::Tolerance;
use crate::scalar::Real;

/// Largest number of `phi` maps the optimizer will enumerate.
pub const MAX_PHI_CANDIDATES: u64 = 1_000_000;
/// Iterates are clipped to this floor before gradients are evaluated.
pub const CLIP_FLOOR: f64 = 1e-12;
/// Entries at or below this value are zeroed in the reported parameters.
pub const SUPPORT_CUTOFF: f64 = 1e-10;
const ARMIJO_SLOPE: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

/// Optimizer settings. `tol.abs_tol` bounds the projected-gradient norm at
/// convergence and `tol.max_iter` the iterations per restart.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    pub aux_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub step_init: f64,
    pub tol: Tolerance,
}

impl OptimizerConfig {
    /// Defaults with `|U| = min(|X||S|, |Y| + |S| - 1)`.
    pub fn for_spec<T: Real>(spec: &ChannelSpec<T>) -> Self {
        Self {
            aux_size: default_aux_size(spec),
            restarts: 8,
            seed: 0,
            step_init: 1.0,
            tol: Tolerance {
                abs_tol: 1e-9,
                rel_tol: 0.0,
                max_iter: 10_000,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.aux_size == 0 {
            return Err(domain("aux_size must be positive"));
        }
        if self.restarts == 0 {
            return Err(domain("restarts must be positive"));
        }
        if !(self.step_init > 0.0) {
            return Err(domain("step_init must be positive"));
        }
        Tolerance::new(self.tol.abs_tol, self.tol.rel_tol, self.tol.max_iter).map(|_| ())
    }
}

pub fn default_aux_size<T: Real>(spec: &ChannelSpec<T>) -> usize {
    (spec.n_x() * spec.n_s()).min(spec.n_y() + spec.n_s() - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult<T> {
    pub best_params: GpParams<T>,
    pub capacity_nats: T,
    pub kkt_residual: T,
    /// Best value reached by each restart index (maximized over `phi`).
    pub per_restart_values: Vec<T>,
    pub phi_enumerated: usize,
    /// Full analytic summary at `best_params`.
    pub report: DispersionReport<T>,
}

/// Trajectory of one projected-gradient run.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentRun<T> {
    /// Final `Q`, flat `[s * aux + u]`.
    pub q: Vec<T>,
    pub value: T,
    /// Objective after each accepted step (starting with the initial point).
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex<T: Real>(v: &[T]) -> Vec<T> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (k, &x) in sorted.iter().enumerate() {
        cum = cum + x;
        let t = (cum - T::one()) / T::count(k + 1);
        if x - t > T::zero() {
            theta = t;
        }
    }
    let mut out: Vec<T> = v.iter().map(|&x| (x - theta).max(T::zero())).collect();
    // absorb rounding so rows stay stochastic to machine precision
    let total: T = out.iter().copied().sum();
    if total > T::zero() {
        out.iter_mut().for_each(|x| *x = *x / total);
    }
    out
}

fn clip_rows<T: Real>(q: &[T], aux: usize) -> Vec<T> {
    let floor = T::lit(CLIP_FLOOR);
    let mut out: Vec<T> = q.iter().map(|&x| x.max(floor)).collect();
    for row in out.chunks_mut(aux) {
        let t: T = row.iter().copied().sum();
        row.iter_mut().for_each(|x| *x = *x / t);
    }
    out
}

fn project_rows<T: Real>(q: &[T], aux: usize) -> Vec<T> {
    q.chunks(aux).flat_map(project_simplex).collect()
}

/// Projected gradient ascent on `Q` for a fixed `phi`, starting from `q0`.
///
/// The ascent direction is the `Q`-gradient divided row-wise by `pi(s)`;
/// steps are chosen by Armijo backtracking.
pub fn ascend<T: Real>(
    spec: &ChannelSpec<T>,
    base: &GpParams<T>,
    q0: &[T],
    step_init: f64,
    tol: &Tolerance,
) -> Result<AscentRun<T>> {
    let aux = base.aux_size();
    let objective = |q: &[T]| -> Result<T> {
        let joint = build_joint_weighted(spec, &base.with_q(q.to_vec()), spec.pi())?;
        Ok(crate::gp_model::gp_objective(&joint))
    };
    let mut q = project_rows(q0, aux);
    let mut f = objective(&q)?;
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < tol.max_iter {
        iterations += 1;
        let qc = clip_rows(&q, aux);
        let joint = build_joint_weighted(spec, &base.with_q(qc.clone()), spec.pi())?;
        let g: Vec<T> = grad_from_joint(&joint).concat();
        let dir: Vec<T> = g
            .iter()
            .enumerate()
            .map(|(k, &gk)| gk / spec.pi()[k / aux])
            .collect();
        // gradient-mapping norm at unit step
        let unit: Vec<T> = q.iter().zip(&dir).map(|(&a, &d)| a + d).collect();
        let mapped = project_rows(&unit, aux);
        let gm = mapped
            .iter()
            .zip(&q)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        if gm.to_f64_lossy() < tol.abs_tol {
            converged = true;
            break;
        }
        let mut t = step_init;
        let mut accepted = false;
        while t >= MIN_STEP {
            let tt = T::lit(t);
            let cand: Vec<T> = q.iter().zip(&dir).map(|(&a, &d)| a + tt * d).collect();
            let cand = project_rows(&cand, aux);
            let slope: T = g.iter().zip(cand.iter().zip(&q)).map(|(&gk, (&c, &a))| gk * (c - a)).sum();
            let fc = objective(&cand)?;
            if fc > f && fc >= f + T::lit(ARMIJO_SLOPE) * slope {
                q = cand;
                f = fc;
                trace.push(f);
                accepted = true;
                break;
            }
            t *= ARMIJO_SHRINK;
        }
        if !accepted {
            // no ascent possible at representable step sizes
            converged = true;
            break;
        }
    }
    Ok(AscentRun {
        q,
        value: f,
        trace,
        iterations,
        converged,
    })
}

fn cleanup<T: Real>(q: &[T], aux: usize) -> Vec<T> {
    let cut = T::lit(SUPPORT_CUTOFF);
    let mut out: Vec<T> = q.iter().map(|&x| if x <= cut { T::zero() } else { x }).collect();
    for row in out.chunks_mut(aux) {
        let t: T = row.iter().copied().sum();
        row.iter_mut().for_each(|x| *x = *x / t);
    }
    out
}

fn decode_phi(mut idx: u64, n_x: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let x = (idx % n_x as u64) as usize;
            idx /= n_x as u64;
            x
        })
        .collect()
}

fn initial_q<T: Real>(n_s: usize, aux: usize, seed: u64, stream: u64, uniform: bool) -> Vec<T> {
    if uniform {
        return vec![T::one() / T::count(aux); n_s * aux];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut q = Vec::with_capacity(n_s * aux);
    for _ in 0..n_s {
        let draws: Vec<f64> = (0..aux).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        q.extend(draws.iter().map(|&d| T::lit(d / total)));
    }
    q
}

/// Maximizes `I(U;Y) - I(U;S)` over `Q_{U|S}` for every `phi : U x S -> X`.
pub fn optimize<T: Real>(spec: &ChannelSpec<T>, cfg: &OptimizerConfig) -> Result<OptimizerResult<T>> {
    cfg.validate()?;
    let (n_s, n_x, aux) = (spec.n_s(), spec.n_x(), cfg.aux_size);
    let cells = (aux * n_s) as u32;
    let n_phi = (n_x as u64)
        .checked_pow(cells)
        .filter(|&c| c <= MAX_PHI_CANDIDATES)
        .ok_or_else(|| {
            Error::CapacityGuard(format!(
                "{n_x}^{cells} phi maps exceed the enumeration limit of {MAX_PHI_CANDIDATES}; supply phi explicitly"
            ))
        })?;
    let restarts = cfg.restarts as u64;
    let items: Vec<(u64, u64)> = (0..n_phi).flat_map(|p| (0..restarts).map(move |r| (p, r))).collect();
    let runs: Vec<Result<(T, Vec<T>)>> = items
        .par_iter()
        .map(|&(p, r)| {
            let phi = decode_phi(p, n_x, aux * n_s);
            let q0 = initial_q::<T>(n_s, aux, cfg.seed, p * restarts + r, r == 0);
            let base = GpParams::from_flat(aux, n_s, q0.clone(), phi);
            let run = ascend(spec, &base, &q0, cfg.step_init, &cfg.tol)?;
            let q = cleanup(&run.q, aux);
            let joint = build_joint(spec, &base.with_q(q.clone()), spec.pi())?;
            Ok((crate::gp_model::gp_objective(&joint), q))
        })
        .collect();
    let mut per_restart = vec![T::neg_infinity(); cfg.restarts];
    let mut best: Option<(T, usize, Vec<T>)> = None;
    for (k, run) in runs.into_iter().enumerate() {
        let (value, q) = run?;
        let r = k % cfg.restarts;
        if value > per_restart[r] {
            per_restart[r] = value;
        }
        if best.as_ref().is_none_or(|(bv, _, _)| value > *bv) {
            best = Some((value, k, q));
        }
    }
    let (_, k, q) = best.expect("at least one run");
    let phi = decode_phi(items[k].0, n_x, aux * n_s);
    let params = GpParams::from_flat(aux, n_s, q, phi);
    let mut out = evaluate_fixed(spec, &params)?;
    out.per_restart_values = per_restart;
    out.phi_enumerated = n_phi as usize;
    Ok(out)
}

/// Analytic evaluation of user-supplied parameters (no search).
pub fn evaluate_fixed<T: Real>(spec: &ChannelSpec<T>, params: &GpParams<T>) -> Result<OptimizerResult<T>> {
    let report = dispersion(&build_joint(spec, params, spec.pi())?);
    Ok(OptimizerResult {
        best_params: params.clone(),
        capacity_nats: report.c,
        kkt_residual: report.kkt_residual,
        per_restart_values: vec![report.c],
        phi_enumerated: 0,
        report,
    })
}
