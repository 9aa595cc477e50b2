//! Type-class samplers, information-spectrum and genie-aided codebook
//! simulation for discrete Gel'fand–Pinsker channels.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{encoder_failure_prob, Estimate, RngSpec};
use crate::error::{domain, structural, Error, Result};
use crate::gp_model::{build_joint, dispersion, quantize_counts, type_quantize_q, ChannelSpec, GpParams, StateType};
use crate::numkit::ln_gamma;

/// Upper limit on `M * L` codewords per state type.
pub const MAX_CODEBOOK: f64 = 1e6;

/// Integer composition `n * P_SU(s,u)` of an `n`-type given as a distribution `[s][u]`.
pub fn joint_type_counts(dist: &[Vec<f64>], n: usize) -> Result<Vec<Vec<usize>>> {
    let mut total = 0usize;
    let counts = dist
        .iter()
        .map(|row| {
            row.iter()
                .map(|&p| {
                    let c = p * n as f64;
                    let r = c.round();
                    if !(p >= 0.0) || (c - r).abs() > 1e-9 * n.max(1) as f64 {
                        return Err(structural(format!("{p} is not a multiple of 1/{n}")));
                    }
                    total += r as usize;
                    Ok(r as usize)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if total != n {
        return Err(structural(format!("joint type sums to {total}/{n}")));
    }
    Ok(counts)
}

/// The pair laid out state by state, auxiliary symbols ascending within a state.
pub fn canonical_pair(counts: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut s_seq = Vec::new();
    let mut u_seq = Vec::new();
    for (s, row) in counts.iter().enumerate() {
        for (u, &c) in row.iter().enumerate() {
            s_seq.extend(std::iter::repeat_n(s, c));
            u_seq.extend(std::iter::repeat_n(u, c));
        }
    }
    (s_seq, u_seq)
}

/// A pair drawn uniformly from the joint type class of `dist` (denominator `n`).
pub fn sample_joint_type_pair<R: Rng + ?Sized>(
    dist: &[Vec<f64>],
    n: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let counts = joint_type_counts(dist, n)?;
    let (s_seq, u_seq) = canonical_pair(&counts);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Ok((perm.iter().map(|&i| s_seq[i]).collect(), perm.iter().map(|&i| u_seq[i]).collect()))
}

/// Everything the samplers need for one state type.
struct TypeModel {
    n: usize,
    n_u: usize,
    n_y: usize,
    su_counts: Vec<Vec<usize>>,
    /// Auxiliary multiset, laid out in ascending order.
    u_layout: Vec<u8>,
    /// Cumulative `W(.|phi(u,s),s)` at index `s * n_u + u`.
    cdf: Vec<Vec<f64>>,
    /// Last output with positive probability, same indexing.
    last_y: Vec<usize>,
    /// `i^{(P_S)}(u,y)` at index `u * n_y + y`; `-inf` where `P_UY = 0`.
    iuy: Vec<f64>,
    mi_us: f64,
}

impl TypeModel {
    fn new(spec: &ChannelSpec<f64>, params: &GpParams<f64>, st: &StateType) -> Result<Self> {
        if params.aux_size() > 256 {
            return Err(domain("simulation supports at most 256 auxiliary symbols"));
        }
        let su_counts = quantize_counts(params, st)?;
        let qp = type_quantize_q(params, st)?;
        let ps = st.distribution::<f64>();
        let joint = build_joint(spec, &qp, &ps)?;
        let (n_s, n_u, n_y) = (spec.n_s(), qp.aux_size(), spec.n_y());
        let mut cdf = Vec::with_capacity(n_s * n_u);
        let mut last_y = Vec::with_capacity(n_s * n_u);
        for s in 0..n_s {
            for u in 0..n_u {
                let row = spec.w_row(qp.phi(u, s), s);
                let mut acc = 0.0;
                cdf.push(row.iter().map(|&w| {
                    acc += w;
                    acc
                }).collect());
                last_y.push(row.iter().rposition(|&w| w > 0.0).unwrap_or(0));
            }
        }
        let mut iuy = vec![f64::NEG_INFINITY; n_u * n_y];
        for u in 0..n_u {
            for y in 0..n_y {
                let puy = joint.p_uy(u, y);
                if puy > 0.0 {
                    iuy[u * n_y + y] = (puy / (joint.p_u()[u] * joint.p_y()[y])).ln();
                }
            }
        }
        let mut u_counts = vec![0usize; n_u];
        for row in &su_counts {
            for (u, &c) in row.iter().enumerate() {
                u_counts[u] += c;
            }
        }
        let u_layout = u_counts
            .iter()
            .enumerate()
            .flat_map(|(u, &c)| std::iter::repeat_n(u as u8, c))
            .collect();
        Ok(Self {
            n: st.n(),
            n_u,
            n_y,
            su_counts,
            u_layout,
            cdf,
            last_y,
            iuy,
            mi_us: dispersion(&joint).mi_us,
        })
    }

    fn draw_y(&self, rng: &mut ChaCha8Rng, s: usize, u: usize) -> usize {
        let k = s * self.n_u + u;
        let r: f64 = rng.random();
        self.cdf[k].iter().position(|&c| r < c).unwrap_or(self.last_y[k])
    }

    fn draw_output(&self, rng: &mut ChaCha8Rng, s_seq: &[usize], u_seq: impl Iterator<Item = usize>) -> Vec<usize> {
        s_seq.iter().zip(u_seq).map(|(&s, u)| self.draw_y(rng, s, u)).collect()
    }

    fn score(&self, u_seq: impl Iterator<Item = usize>, y: &[usize]) -> f64 {
        u_seq.zip(y).map(|(u, &yy)| self.iuy[u * self.n_y + yy]).sum()
    }

    fn matches(&self, s_seq: &[usize], u_seq: &[u8], scratch: &mut [usize]) -> bool {
        scratch.fill(0);
        for (&s, &u) in s_seq.iter().zip(u_seq) {
            scratch[s * self.n_u + u as usize] += 1;
        }
        self.su_counts
            .iter()
            .flatten()
            .zip(scratch.iter())
            .all(|(a, b)| a == b)
    }

    fn ln_hit_prob(&self) -> f64 {
        let lf = |k: usize| ln_gamma(k as f64 + 1.0);
        let mut acc = -lf(self.n);
        let mut u_tot = vec![0usize; self.n_u];
        for row in &self.su_counts {
            acc += lf(row.iter().sum());
            for (u, &c) in row.iter().enumerate() {
                acc -= lf(c);
                u_tot[u] += c;
            }
        }
        acc + u_tot.iter().map(|&c| lf(c)).sum::<f64>()
    }
}

fn check_pair(model: &TypeModel, s_seq: &[usize], u_seq: &[usize]) -> Result<()> {
    if s_seq.len() != model.n || u_seq.len() != model.n {
        return Err(structural("pair length differs from the type denominator"));
    }
    let mut counts = vec![vec![0usize; model.n_u]; model.su_counts.len()];
    for (&s, &u) in s_seq.iter().zip(u_seq) {
        if s >= counts.len() || u >= model.n_u {
            return Err(structural("pair symbol out of range"));
        }
        counts[s][u] += 1;
    }
    if counts != model.su_counts {
        return Err(structural("pair does not have the quantized joint type"));
    }
    Ok(())
}

/// Draws of `sum_i i^{(P_S)}(u_i, Y_i)` with `Y_i ~ W(.|phi(u_i,s_i), s_i)`
/// for the given pair, which must carry the quantized joint type of `st`.
pub fn gp_spectrum_samples_at(
    spec: &ChannelSpec<f64>,
    params: &GpParams<f64>,
    st: &StateType,
    s_seq: &[usize],
    u_seq: &[usize],
    trials: usize,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    let model = TypeModel::new(spec, params, st)?;
    check_pair(&model, s_seq, u_seq)?;
    let shards = rng.run(trials, |r, k| {
        (0..k)
            .map(|_| {
                let y = model.draw_output(r, s_seq, u_seq.iter().copied());
                model.score(u_seq.iter().copied(), &y)
            })
            .collect::<Vec<_>>()
    });
    Ok(shards.concat())
}

/// [`gp_spectrum_samples_at`] at the canonical pair of the quantized type.
pub fn gp_spectrum_samples(
    spec: &ChannelSpec<f64>,
    params: &GpParams<f64>,
    st: &StateType,
    trials: usize,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    let (s_seq, u_seq) = canonical_pair(&quantize_counts(params, st)?);
    gp_spectrum_samples_at(spec, params, st, &s_seq, &u_seq, trials, rng)
}

/// Fraction of spectrum draws at or below `gamma`.
pub fn gp_spectrum_tail(
    spec: &ChannelSpec<f64>,
    params: &GpParams<f64>,
    st: &StateType,
    gamma: f64,
    trials: usize,
    rng: &RngSpec,
) -> Result<Estimate> {
    Ok(super::tail_fraction(&gp_spectrum_samples(spec, params, st, trials, rng)?, gamma))
}

/// Probability that `U` uniform on the auxiliary type class forms the
/// quantized joint type with a fixed `s` of type `st`, by counting.
pub fn gp_hit_prob_exact(params: &GpParams<f64>, st: &StateType) -> Result<f64> {
    Ok(hit_model(params, st)?.ln_hit_prob().exp())
}

/// Monte Carlo estimate of the same probability.
pub fn gp_hit_prob(params: &GpParams<f64>, st: &StateType, trials: usize, rng: &RngSpec) -> Result<Estimate> {
    let model = hit_model(params, st)?;
    let (s_seq, _) = canonical_pair(&model.su_counts);
    let hits: usize = rng
        .run(trials, |r, k| {
            let mut u = model.u_layout.clone();
            let mut scratch = vec![0usize; model.su_counts.len() * model.n_u];
            (0..k)
                .filter(|_| {
                    u.shuffle(r);
                    model.matches(&s_seq, &u, &mut scratch)
                })
                .count()
        })
        .into_iter()
        .sum();
    Ok(Estimate::binary(hits, trials))
}

/// A type model carrying only the composition, for the counting routines.
fn hit_model(params: &GpParams<f64>, st: &StateType) -> Result<TypeModel> {
    let su_counts = quantize_counts(params, st)?;
    let n_u = params.aux_size();
    let u_layout = (0..n_u)
        .flat_map(|u| std::iter::repeat_n(u as u8, su_counts.iter().map(|row| row[u]).sum()))
        .collect();
    Ok(TypeModel {
        n: st.n(),
        n_u,
        n_y: 0,
        su_counts,
        u_layout,
        cdf: Vec::new(),
        last_y: Vec::new(),
        iuy: Vec::new(),
        mi_us: f64::NAN,
    })
}

/// Decoding rule of the simulated scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderMode {
    /// Declare the unique message with a codeword whose density exceeds `gamma`.
    Threshold,
    /// Maximum density over all codewords; ties go to the smallest
    /// `(message, index)` pair.
    Max,
}

/// Rate and threshold coefficients of the simulated scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `L = ceil(exp(n I^{(P_S)}(U;S) + k2 log n))`.
    pub k2: f64,
    /// `gamma = log M + n I^{(P_S)}(U;S) + k_gamma log n`.
    pub k_gamma: f64,
    pub decoder: DecoderMode,
    /// Count ties with a wrong message as errors.
    pub conservative: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { k2: 2.0, k_gamma: 2.0, decoder: DecoderMode::Max, conservative: false }
    }
}

/// Codebook size and threshold used for one state type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRecord {
    pub counts: Vec<usize>,
    pub l: u64,
    pub gamma: f64,
    pub mi_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub empirical_error: Estimate,
    /// Fraction of trials with no jointly typical codeword for the message.
    pub encoder_failure: Estimate,
    pub n: usize,
    pub m: usize,
    pub decoder_mode: DecoderMode,
    /// One record per state type encountered, ordered by counts.
    pub l_per_type: Vec<TypeRecord>,
}

struct TypeSetup {
    model: TypeModel,
    l: usize,
    gamma: f64,
}

struct Scheme<'a> {
    spec: &'a ChannelSpec<f64>,
    params: &'a GpParams<f64>,
    n: usize,
    m: usize,
    cfg: SimConfig,
    state_cdf: Vec<f64>,
}

impl<'a> Scheme<'a> {
    fn new(spec: &'a ChannelSpec<f64>, params: &'a GpParams<f64>, n: usize, m: usize, cfg: SimConfig) -> Result<Self> {
        if n < 2 || m == 0 {
            return Err(domain("simulation needs n >= 2 and M >= 1"));
        }
        if params.n_s() != spec.n_s() {
            return Err(structural("parameters and channel disagree on the state alphabet"));
        }
        let mut acc = 0.0;
        let state_cdf = spec.pi().iter().map(|&p| {
            acc += p;
            acc
        }).collect();
        Ok(Self { spec, params, n, m, cfg, state_cdf })
    }

    fn draw_states(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let last = self.state_cdf.len() - 1;
        (0..self.n)
            .map(|_| {
                let r: f64 = rng.random();
                self.state_cdf.iter().position(|&c| r < c).unwrap_or(last)
            })
            .collect()
    }

    fn setup(&self, st: &StateType) -> Result<TypeSetup> {
        let model = TypeModel::new(self.spec, self.params, st)?;
        let ln_n = (self.n as f64).ln();
        let l = (self.n as f64 * model.mi_us + self.cfg.k2 * ln_n).exp().ceil().max(1.0);
        if self.m as f64 * l > MAX_CODEBOOK {
            return Err(Error::CapacityGuard(format!(
                "M * L = {} * {l} codewords exceeds {MAX_CODEBOOK}; use gp_spectrum_tail instead",
                self.m
            )));
        }
        let gamma = (self.m as f64).ln() + self.n as f64 * model.mi_us + self.cfg.k_gamma * ln_n;
        Ok(TypeSetup { model, l: l as usize, gamma })
    }

    fn records(&self, caches: Vec<HashMap<Vec<usize>, Arc<TypeSetup>>>) -> Vec<TypeRecord> {
        let mut all = BTreeMap::new();
        for cache in caches {
            for (counts, t) in cache {
                all.entry(counts.clone()).or_insert(TypeRecord {
                    counts,
                    l: t.l as u64,
                    gamma: t.gamma,
                    mi_us: t.model.mi_us,
                });
            }
        }
        all.into_values().collect()
    }
}

fn cached(
    scheme: &Scheme,
    cache: &mut HashMap<Vec<usize>, Arc<TypeSetup>>,
    st: &StateType,
) -> Result<Arc<TypeSetup>> {
    if let Some(t) = cache.get(st.counts()) {
        return Ok(Arc::clone(t));
    }
    let t = Arc::new(scheme.setup(st)?);
    cache.insert(st.counts().to_vec(), Arc::clone(&t));
    Ok(t)
}

struct TrialResult {
    error: bool,
    encoder_failure: bool,
}

fn run_trial(scheme: &Scheme, t: &TypeSetup, s_seq: &[usize], rng: &mut ChaCha8Rng) -> TrialResult {
    let model = &t.model;
    let n = scheme.n;
    let sent = rng.random_range(0..scheme.m);
    let mut u = model.u_layout.clone();
    let mut scratch = vec![0usize; model.su_counts.len() * model.n_u];
    let mut block = Vec::with_capacity(t.l * n);
    let mut chosen = None;
    for l in 0..t.l {
        u.shuffle(rng);
        if chosen.is_none() && model.matches(s_seq, &u, &mut scratch) {
            chosen = Some(l);
        }
        block.extend_from_slice(&u);
    }
    let Some(l_star) = chosen else {
        return TrialResult { error: true, encoder_failure: true };
    };
    let cw = |l: usize| block[l * n..(l + 1) * n].iter().map(|&x| x as usize);
    let y = model.draw_output(rng, s_seq, cw(l_star));

    // (score, message, index); larger score wins, then the smaller index.
    let better = |a: (f64, usize, usize), b: (f64, usize, usize)| a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2));
    let mut best_true = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
    let mut true_pass = false;
    for l in 0..t.l {
        let sc = model.score(cw(l), &y);
        true_pass |= sc > t.gamma;
        if better((sc, sent, l), best_true) {
            best_true = (sc, sent, l);
        }
    }
    let mut best_wrong = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
    let mut wrong_pass = false;
    for msg in (0..scheme.m).filter(|&k| k != sent) {
        for l in 0..t.l {
            u.shuffle(rng);
            let sc = model.score(u.iter().map(|&x| x as usize), &y);
            wrong_pass |= if scheme.cfg.conservative { sc >= t.gamma } else { sc > t.gamma };
            if better((sc, msg, l), best_wrong) {
                best_wrong = (sc, msg, l);
            }
        }
    }
    let error = match scheme.cfg.decoder {
        DecoderMode::Threshold => !true_pass || wrong_pass,
        DecoderMode::Max if scheme.cfg.conservative => best_wrong.0 >= best_true.0,
        DecoderMode::Max => better(best_wrong, best_true),
    };
    TrialResult { error, encoder_failure: false }
}

/// Genie-aided random-coding simulation with a fresh codebook per trial.
///
/// States are i.i.d. from the channel's state distribution; the decoder
/// knows the realized state type and uses its quantized density.
pub fn gp_full_sim(
    spec: &ChannelSpec<f64>,
    params: &GpParams<f64>,
    n: usize,
    m: usize,
    cfg: &SimConfig,
    trials: usize,
    rng: &RngSpec,
) -> Result<SimOutcome> {
    let scheme = Scheme::new(spec, params, n, m, *cfg)?;
    let shards = rng.try_run(trials, |r, k| {
        let mut cache = HashMap::new();
        let (mut errors, mut failures) = (0usize, 0usize);
        for _ in 0..k {
            let s_seq = scheme.draw_states(r);
            let st = StateType::from_sequence(&s_seq, spec.n_s())?;
            let t = cached(&scheme, &mut cache, &st)?;
            let out = run_trial(&scheme, &t, &s_seq, r);
            errors += usize::from(out.error);
            failures += usize::from(out.encoder_failure);
        }
        Ok((errors, failures, cache))
    })?;
    let errors = shards.iter().map(|s| s.0).sum();
    let failures = shards.iter().map(|s| s.1).sum();
    Ok(SimOutcome {
        empirical_error: Estimate::binary(errors, trials),
        encoder_failure: Estimate::binary(failures, trials),
        n,
        m,
        decoder_mode: cfg.decoder,
        l_per_type: scheme.records(shards.into_iter().map(|s| s.2).collect()),
    })
}

/// The terms of the threshold-decoding union bound, each estimated with
/// its own draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTerms {
    /// Mean over state draws of `(1 - p1)^L` with `p1` counted exactly.
    pub encoder: Estimate,
    /// `P[i_n(U,Y) <= gamma]` at a jointly typical pair.
    pub tail: Estimate,
    /// Expected number of wrong-message codewords whose density exceeds `gamma`.
    pub union: Estimate,
}

impl ThresholdTerms {
    pub fn total(&self) -> f64 {
        self.encoder.value + self.tail.value + self.union.value
    }

    pub fn std_error(&self) -> f64 {
        (self.encoder.std_error.powi(2) + self.tail.std_error.powi(2) + self.union.std_error.powi(2)).sqrt()
    }
}

pub fn threshold_bound_terms(
    spec: &ChannelSpec<f64>,
    params: &GpParams<f64>,
    n: usize,
    m: usize,
    cfg: &SimConfig,
    trials: usize,
    rng: &RngSpec,
) -> Result<ThresholdTerms> {
    let scheme = Scheme::new(spec, params, n, m, *cfg)?;
    let shards = rng.try_run(trials, |r, k| {
        let mut cache = HashMap::new();
        let mut rows = Vec::with_capacity(k);
        for _ in 0..k {
            let s_seq = scheme.draw_states(r);
            let st = StateType::from_sequence(&s_seq, spec.n_s())?;
            let t = cached(&scheme, &mut cache, &st)?;
            let model = &t.model;
            let enc = encoder_failure_prob(model.ln_hit_prob().exp().min(1.0), t.l as f64)?;
            let (cs, cu) = canonical_pair(&model.su_counts);
            let y = model.draw_output(r, &cs, cu.iter().copied());
            let below = model.score(cu.iter().copied(), &y) <= t.gamma;
            let mut u = model.u_layout.clone();
            let mut exceed = 0usize;
            for _ in 0..(scheme.m - 1) * t.l {
                u.shuffle(r);
                let sc = model.score(u.iter().map(|&x| x as usize), &y);
                exceed += usize::from(if cfg.conservative { sc >= t.gamma } else { sc > t.gamma });
            }
            rows.push((enc, below, exceed as f64));
        }
        Ok(rows)
    })?;
    let rows: Vec<_> = shards.concat();
    let enc: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let union: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(ThresholdTerms {
        encoder: Estimate::mean(&enc),
        tail: Estimate::binary(rows.iter().filter(|r| r.1).count(), rows.len()),
        union: Estimate::mean(&union),
    })
}
