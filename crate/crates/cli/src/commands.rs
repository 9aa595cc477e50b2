//! Fully resolved command configurations and their execution.

use std::path::Path;

use dispersionlab::dpc::{alpha_opt, dpc_capacity, dpc_dispersion};
use dispersionlab::gp_opt::{evaluate_fixed, optimize, OptimizerConfig, OptimizerResult};
use dispersionlab::mc::{
    dpc_geometry_prob, dpc_spectrum_samples, gp_full_sim, gp_hit_prob, gp_spectrum_samples, tail_fraction,
    threshold_bound_terms, DecoderMode, DpcPair, Estimate, RngSpec, SimConfig,
};
use dispersionlab::numkit::qinv;
use dispersionlab::second_order::{normal_approx, summarize};
use dispersionlab::{build_joint, DpcConfig, StateType};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{num, Csv, Units};
use crate::spec_file::{SpecFile, SpecRef};

/// Blocklength grid `n_min, n_min + n_step, ..., <= n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
}

impl Grid {
    fn values(&self) -> Result<Vec<usize>, CliError> {
        if self.n_min == 0 || self.n_step == 0 || self.n_max < self.n_min {
            return Err(CliError::Usage("need 1 <= n-min <= n-max and n-step >= 1".into()));
        }
        Ok((self.n_min..=self.n_max).step_by(self.n_step).collect())
    }
}

/// A threshold given as a number or as `"inf"` / `"-inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Text(String),
}

impl Threshold {
    fn value(&self) -> Result<f64, CliError> {
        match self {
            Threshold::Value(v) => Ok(*v),
            Threshold::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                _ => Err(CliError::Ingestion(format!("threshold '{t}' is neither a number nor +-inf"))),
            },
        }
    }
}

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn max_decoder() -> DecoderMode {
    DecoderMode::Max
}

/// One Monte Carlo experiment. Thresholds are in the run's units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "snake_case")]
pub enum SimOp {
    GpSpectrumTail {
        spec: SpecRef,
        state_counts: Vec<usize>,
        gammas: Vec<Threshold>,
        trials: usize,
    },
    GpHitProb {
        spec: SpecRef,
        state_counts: Vec<usize>,
        trials: usize,
    },
    GpFullSim {
        spec: SpecRef,
        n: usize,
        m: usize,
        #[serde(default = "two")]
        k2: f64,
        #[serde(default = "two")]
        k_gamma: f64,
        #[serde(default = "max_decoder")]
        decoder: DecoderMode,
        #[serde(default)]
        conservative: bool,
        trials: usize,
    },
    ThresholdBoundTerms {
        spec: SpecRef,
        n: usize,
        m: usize,
        #[serde(default = "two")]
        k2: f64,
        #[serde(default = "two")]
        k_gamma: f64,
        #[serde(default)]
        conservative: bool,
        trials: usize,
    },
    DpcSpectrumTail {
        power: f64,
        state_power: f64,
        #[serde(default)]
        alpha: Option<f64>,
        n: usize,
        gammas: Vec<Threshold>,
        trials: usize,
    },
    DpcGeometryProb {
        power: f64,
        state_power: f64,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "one")]
        delta_x: f64,
        n: usize,
        trials: usize,
    },
}

impl SimOp {
    pub fn name(&self) -> &'static str {
        match self {
            SimOp::GpSpectrumTail { .. } => "gp_spectrum_tail",
            SimOp::GpHitProb { .. } => "gp_hit_prob",
            SimOp::GpFullSim { .. } => "gp_full_sim",
            SimOp::ThresholdBoundTerms { .. } => "threshold_bound_terms",
            SimOp::DpcSpectrumTail { .. } => "dpc_spectrum_tail",
            SimOp::DpcGeometryProb { .. } => "dpc_geometry_prob",
        }
    }

    /// Replaces spec paths by their contents so the op is self-contained.
    pub fn inline_specs(mut self, base: &Path) -> Result<Self, CliError> {
        match &mut self {
            SimOp::GpSpectrumTail { spec, .. }
            | SimOp::GpHitProb { spec, .. }
            | SimOp::GpFullSim { spec, .. }
            | SimOp::ThresholdBoundTerms { spec, .. } => *spec = SpecRef::Inline(spec.resolve(base)?),
            SimOp::DpcSpectrumTail { .. } | SimOp::DpcGeometryProb { .. } => {}
        }
        Ok(self)
    }
}

pub fn parse_sim_config(text: &str) -> Result<SimOp, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Ingestion("simulation config is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| {
        if e.to_string().contains("unknown variant") {
            CliError::Usage(format!("unknown operation: {e}"))
        } else {
            CliError::Ingestion(e.to_string())
        }
    })
}

/// Fully resolved configuration of one run; replaying it reproduces the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Resolved {
    GpCapacity {
        spec_source: String,
        spec: SpecFile,
        fixed: bool,
        aux_size: Option<usize>,
        restarts: usize,
        seed: u64,
        units: Units,
    },
    GpSecondOrder {
        spec_source: String,
        spec: SpecFile,
        fixed: bool,
        aux_size: Option<usize>,
        restarts: usize,
        seed: u64,
        eps: f64,
        grid: Grid,
        units: Units,
    },
    DpcCurve {
        power: f64,
        eps: f64,
        grid: Grid,
        units: Units,
    },
    Simulate {
        op: SimOp,
        seed: u64,
        shards: usize,
        units: Units,
    },
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Resolved::GpCapacity { .. } => "gp-capacity",
            Resolved::GpSecondOrder { .. } => "gp-second-order",
            Resolved::DpcCurve { .. } => "dpc-curve",
            Resolved::Simulate { .. } => "simulate",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Resolved::GpCapacity { seed, .. } | Resolved::GpSecondOrder { seed, .. } | Resolved::Simulate { seed, .. } => {
                Some(*seed)
            }
            Resolved::DpcCurve { .. } => None,
        }
    }
}

/// What a run produced: the file payload and an optional terminal summary.
pub struct Artifact {
    pub payload: String,
    pub summary: Option<String>,
}

pub fn execute(cfg: &Resolved) -> Result<Artifact, CliError> {
    match cfg {
        Resolved::GpCapacity { spec, fixed, aux_size, restarts, seed, units, .. } => {
            gp_capacity(spec, *fixed, *aux_size, *restarts, *seed, *units)
        }
        Resolved::GpSecondOrder { spec, fixed, aux_size, restarts, seed, eps, grid, units, .. } => {
            gp_second_order(spec, *fixed, *aux_size, *restarts, *seed, *eps, grid, *units)
        }
        Resolved::DpcCurve { power, eps, grid, units } => dpc_curve(*power, *eps, grid, *units),
        Resolved::Simulate { op, seed, shards, units } => simulate(op, RngSpec::new(*seed, *shards)?, *units),
    }
}

fn solve(
    spec: &SpecFile,
    fixed: bool,
    aux_size: Option<usize>,
    restarts: usize,
    seed: u64,
) -> Result<OptimizerResult<f64>, CliError> {
    let channel = spec.channel()?;
    if fixed {
        return Ok(evaluate_fixed(&channel, &spec.require_params(&channel)?)?);
    }
    let mut cfg = OptimizerConfig::for_spec(&channel);
    if let Some(a) = aux_size {
        cfg.aux_size = a;
    }
    cfg.restarts = restarts;
    cfg.seed = seed;
    Ok(optimize(&channel, &cfg)?)
}

fn json_text(value: &serde_json::Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Output(e.to_string()))
}

fn gp_capacity(
    spec: &SpecFile,
    fixed: bool,
    aux_size: Option<usize>,
    restarts: usize,
    seed: u64,
    units: Units,
) -> Result<Artifact, CliError> {
    let r = solve(spec, fixed, aux_size, restarts, seed)?;
    let c = r.capacity_nats;
    let payload = json_text(&serde_json::json!({
        "units": units.label(),
        "capacity": units.scale(c),
        "capacity_bits": Units::Bits.scale(c),
        "capacity_nats": c,
        "dispersion": units.scale_var(r.report.v_conditional),
        "kkt_residual": r.kkt_residual,
        "fixed_parameters": fixed,
        "aux_size": r.best_params.aux_size(),
        "Q": r.best_params.q_table(),
        "phi": r.best_params.phi_table(),
        "phi_maps_enumerated": r.phi_enumerated,
    }))?;
    let summary = format!(
        "C = {} bits/use ({} nats/use)\nkkt_residual = {}\nQ[s][u] = {:?}\nphi[u][s] = {:?}\n",
        num(Units::Bits.scale(c)),
        num(c),
        num(r.kkt_residual),
        r.best_params.q_table(),
        r.best_params.phi_table()
    );
    Ok(Artifact { payload, summary: Some(summary) })
}

#[allow(clippy::too_many_arguments)]
fn gp_second_order(
    spec: &SpecFile,
    fixed: bool,
    aux_size: Option<usize>,
    restarts: usize,
    seed: u64,
    eps: f64,
    grid: &Grid,
    units: Units,
) -> Result<Artifact, CliError> {
    let r = solve(spec, fixed, aux_size, restarts, seed)?;
    let channel = spec.channel()?;
    let joint = build_joint(&channel, &r.best_params, channel.pi())?;
    let s = summarize(&joint, eps, &grid.values()?)?;
    let u = units.label();
    let comments = vec![
        "dispersionlab gp-second-order".to_string(),
        format!("units = {u}"),
        format!("eps = {}", num(eps)),
        format!("C = {} {u}/use", num(units.scale(s.c))),
        format!("V = {} {u}^2/use", num(units.scale_var(s.v))),
        format!("sqrt(V)*Qinv(eps) = {} {u}/sqrt(use)", num(units.scale(s.v.sqrt() * qinv(eps)?))),
        format!("R_tilde = {} {u}/sqrt(use)", num(units.scale(s.r_tilde))),
        format!("cs_lower_bound = {} {u}/sqrt(use)", num(units.scale(s.cs_lower))),
    ];
    let h1 = format!("normal_approx_{u}");
    let h2 = format!("iid_expansion_{u}");
    let mut csv = Csv::new(&comments, &["n", &h1, &h2]);
    for (k, n) in s.n_grid.iter().enumerate() {
        csv.row(&[n.to_string(), num(units.scale(s.logm_curve[k])), num(units.scale(s.iid_curve[k]))]);
    }
    Ok(Artifact { payload: csv.finish(), summary: None })
}

fn dpc_curve(power: f64, eps: f64, grid: &Grid, units: Units) -> Result<Artifact, CliError> {
    let c = dpc_capacity(power)?;
    let v = dpc_dispersion(power)?;
    let u = units.label();
    let comments = vec![
        "dispersionlab dpc-curve".to_string(),
        format!("units = {u}"),
        format!("P = {}", num(power)),
        format!("alpha = {}", num(alpha_opt(power)?)),
        format!("eps = {}", num(eps)),
        format!("C = {} {u}/use", num(units.scale(c))),
        format!("V = {} {u}^2/use", num(units.scale_var(v))),
    ];
    let h = format!("normal_approx_{u}");
    let mut csv = Csv::new(&comments, &["n", &h]);
    for n in grid.values()? {
        csv.row(&[n.to_string(), num(units.scale(normal_approx(c, v, n, eps)?))]);
    }
    Ok(Artifact { payload: csv.finish(), summary: None })
}

fn inline(spec: &SpecRef) -> Result<SpecFile, CliError> {
    spec.resolve(Path::new("."))
}

fn est_cells(e: &Estimate) -> [String; 3] {
    [num(e.value), num(e.std_error), e.trials.to_string()]
}

fn dpc_cfg(power: f64, state_power: f64, alpha: Option<f64>) -> Result<DpcConfig<f64>, CliError> {
    Ok(match alpha {
        Some(a) => DpcConfig::with_alpha(power, state_power, a)?,
        None => DpcConfig::new(power, state_power)?,
    })
}

fn simulate(op: &SimOp, rng: RngSpec, units: Units) -> Result<Artifact, CliError> {
    let u = units.label();
    let mut comments = vec![
        "dispersionlab simulate".to_string(),
        format!("operation = {}", op.name()),
        format!("seed = {}, shards = {}", rng.seed, rng.shards),
        format!("units = {u}"),
    ];
    let gamma_col = format!("gamma_{u}");
    let csv = match op {
        SimOp::GpSpectrumTail { spec, state_counts, gammas, trials } => {
            let sf = inline(spec)?;
            let channel = sf.channel()?;
            let params = sf.require_params(&channel)?;
            let st = StateType::new(state_counts.clone())?;
            let samples = gp_spectrum_samples(&channel, &params, &st, *trials, &rng)?;
            let mut csv = Csv::new(&comments, &[&gamma_col, "estimate", "std_error", "trials"]);
            for g in gammas {
                let g = g.value()?;
                let e = tail_fraction(&samples, units.to_nats(g));
                let [a, b, c] = est_cells(&e);
                csv.row(&[num(g), a, b, c]);
            }
            csv
        }
        SimOp::GpHitProb { spec, state_counts, trials } => {
            let sf = inline(spec)?;
            let channel = sf.channel()?;
            let params = sf.require_params(&channel)?;
            let st = StateType::new(state_counts.clone())?;
            let e = gp_hit_prob(&params, &st, *trials, &rng)?;
            let mut csv = Csv::new(&comments, &["quantity", "estimate", "std_error", "trials"]);
            let [a, b, c] = est_cells(&e);
            csv.row(&["hit_prob".into(), a, b, c]);
            csv
        }
        SimOp::GpFullSim { spec, n, m, k2, k_gamma, decoder, conservative, trials } => {
            let sf = inline(spec)?;
            let channel = sf.channel()?;
            let params = sf.require_params(&channel)?;
            let cfg = SimConfig { k2: *k2, k_gamma: *k_gamma, decoder: *decoder, conservative: *conservative };
            let out = gp_full_sim(&channel, &params, *n, *m, &cfg, *trials, &rng)?;
            for rec in &out.l_per_type {
                comments.push(format!(
                    "type {:?}: L = {}, gamma = {} {u}",
                    rec.counts,
                    rec.l,
                    num(units.scale(rec.gamma))
                ));
            }
            let mut csv = Csv::new(&comments, &["quantity", "estimate", "std_error", "trials"]);
            for (name, e) in [("empirical_error", &out.empirical_error), ("encoder_failure", &out.encoder_failure)] {
                let [a, b, c] = est_cells(e);
                csv.row(&[name.into(), a, b, c]);
            }
            csv
        }
        SimOp::ThresholdBoundTerms { spec, n, m, k2, k_gamma, conservative, trials } => {
            let sf = inline(spec)?;
            let channel = sf.channel()?;
            let params = sf.require_params(&channel)?;
            let cfg = SimConfig {
                k2: *k2,
                k_gamma: *k_gamma,
                decoder: DecoderMode::Threshold,
                conservative: *conservative,
            };
            let t = threshold_bound_terms(&channel, &params, *n, *m, &cfg, *trials, &rng)?;
            let mut csv = Csv::new(&comments, &["quantity", "estimate", "std_error", "trials"]);
            for (name, e) in [("encoder", &t.encoder), ("tail", &t.tail), ("union", &t.union)] {
                let [a, b, c] = est_cells(e);
                csv.row(&[name.into(), a, b, c]);
            }
            csv
        }
        SimOp::DpcSpectrumTail { power, state_power, alpha, n, gammas, trials } => {
            let cfg = dpc_cfg(*power, *state_power, *alpha)?;
            let pair = DpcPair::canonical(*n, &cfg, *state_power)?;
            let samples = dpc_spectrum_samples(&cfg, *state_power, &pair, *trials, &rng)?;
            let m = dispersionlab::mc::sample_moments(&samples);
            comments.push(format!(
                "sample mean of i_n = {} {u}, sample variance = {} {u}^2",
                num(units.scale(m.mean.value)),
                num(units.scale_var(m.variance.value))
            ));
            let mut csv = Csv::new(&comments, &[&gamma_col, "estimate", "std_error", "trials"]);
            for g in gammas {
                let g = g.value()?;
                let [a, b, c] = est_cells(&tail_fraction(&samples, units.to_nats(g)));
                csv.row(&[num(g), a, b, c]);
            }
            csv
        }
        SimOp::DpcGeometryProb { power, state_power, alpha, delta_x, n, trials } => {
            let mut cfg = dpc_cfg(*power, *state_power, *alpha)?;
            cfg.delta_x = *delta_x;
            let e = dpc_geometry_prob(&cfg, *state_power, *n, *trials, &rng)?;
            let mut csv = Csv::new(&comments, &["quantity", "estimate", "std_error", "trials"]);
            let [a, b, c] = est_cells(&e);
            csv.row(&["geometry_prob".into(), a, b, c]);
            csv
        }
    };
    Ok(Artifact { payload: csv.finish(), summary: None })
}
