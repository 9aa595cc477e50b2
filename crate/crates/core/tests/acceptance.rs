//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dispersionlab::dpc::{
    alpha_opt, dpc_dispersion, dpc_moments, gaussian_state_dispersion, sphere_coord_interval, mi_us, mi_uy,
    sphere_coord_logpdf,
};
use dispersionlab::gp_model::{
    build_joint, dispersion, grad_i_of_ps, grad_objective_q, hessian_i_of_ps, i_of_ps, objective_at,
    type_quantize_q, v_of_ps,
};
use dispersionlab::gp_opt::{evaluate_fixed, optimize, OptimizerConfig, OptimizerResult};
use dispersionlab::mc::{
    dpc_geometry_prob, dpc_spectrum_samples, gp_full_sim, gp_spectrum_samples, sample_moments, tail_fraction,
    threshold_bound_terms, DecoderMode, DpcPair, RngSpec, SimConfig,
};
use dispersionlab::numkit::{fd_check, fd_check_jacobian, integrate, qinv, FdDomain, Tolerance, NATS_PER_BIT};
use dispersionlab::presets::{bsc, stuck_at_channel, stuck_at_params};
use dispersionlab::second_order::{both_sides, cs_lower_bound, r_tilde, summarize};
use dispersionlab::{ChannelSpec, DpcConfig, GpParams, StateType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const DELTA: f64 = 0.11;
const P_STUCK: f64 = 0.1;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn h2_bits(d: f64) -> f64 {
    -d * d.log2() - (1.0 - d) * (1.0 - d).log2()
}

fn stuck() -> (ChannelSpec<f64>, GpParams<f64>) {
    (stuck_at_channel(DELTA, P_STUCK).unwrap(), stuck_at_params(DELTA).unwrap())
}

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 0.05).collect();
            let t: f64 = r.iter().sum();
            r.into_iter().map(|v| v / t).collect()
        })
        .collect()
}

fn random_instance(seed: u64) -> (ChannelSpec<f64>, GpParams<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let (nx, ns, ny, nu) = (2 + seed as usize % 2, 2 + seed as usize % 3, 2 + seed as usize % 3, 3);
    let pi = random_rows(&mut rng, 1, ns).remove(0);
    let kernel = (0..nx).map(|_| random_rows(&mut rng, ns, ny)).collect();
    let q = random_rows(&mut rng, ns, nu);
    let phi = (0..nu).map(|_| (0..ns).map(|_| rng.random_range(0..nx)).collect()).collect();
    (ChannelSpec::new(pi, kernel).unwrap(), GpParams::new(q, phi).unwrap())
}

/// Optimizer output on a random instance with a binary auxiliary alphabet.
fn optimize_small(seed: u64) -> OptimizerResult<f64> {
    let (spec, _) = random_instance(seed);
    let mut cfg = OptimizerConfig::for_spec(&spec);
    cfg.aux_size = 2;
    optimize(&spec, &cfg).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn c1_stuck_at_reproduction() -> Verdict {
    let ((rt, sv, c_bits), dt) = timed(|| {
        let (spec, params) = stuck();
        let joint = build_joint(&spec, &params, spec.pi()).unwrap();
        let s = summarize(&joint, 0.001, &[100]).unwrap();
        let sv = s.v.sqrt() * qinv(0.001).unwrap() / NATS_PER_BIT;
        (s.r_tilde / NATS_PER_BIT, sv, s.c / NATS_PER_BIT)
    });
    let c_ref = (1.0 - P_STUCK) * (1.0 - h2_bits(DELTA));
    let ok = (rt - 4.16).abs() <= 0.01 && (sv - 2.81).abs() <= 0.01 && (c_bits - c_ref).abs() <= 1e-6 && dt.as_secs_f64() < 1.0;
    verdict(ok, format!("R~ = {rt:.4} bits, sqrt(V)Q^-1 = {sv:.4} bits, |C - ref| = {:.2e} bits, {dt:.2?}", (c_bits - c_ref).abs()))
}

fn c2_optimizer_recovery() -> Verdict {
    let (spec, params) = stuck();
    let mut cfg = OptimizerConfig::for_spec(&spec);
    cfg.aux_size = 2;
    cfg.restarts = 32;
    let (res, dt) = timed(|| optimize(&spec, &cfg).unwrap());
    let fixed = evaluate_fixed(&spec, &params).unwrap();
    let gap = (res.capacity_nats - fixed.capacity_nats).abs();
    let ok = gap <= 1e-4 && res.kkt_residual <= 1e-6 && dt.as_secs_f64() < 30.0;
    verdict(ok, format!("|objective gap| = {gap:.2e} nats, kkt = {:.2e}, {dt:.2?}", res.kkt_residual))
}

fn c3_dispersion_forms() -> Verdict {
    let mut reports = Vec::new();
    let (spec, params) = stuck();
    reports.push(evaluate_fixed(&spec, &params).unwrap().report);
    let mut cfg = OptimizerConfig::for_spec(&spec);
    cfg.aux_size = 2;
    reports.push(optimize(&spec, &cfg).unwrap().report);
    let b = bsc(0.2).unwrap();
    reports.push(optimize(&b, &OptimizerConfig::for_spec(&b)).unwrap().report);
    for seed in 0..4 {
        reports.push(optimize_small(seed).report);
    }
    let qualifying: Vec<_> = reports.iter().filter(|r| r.kkt_residual <= 1e-8).collect();
    let worst_eq = qualifying.iter().map(|r| (r.v_conditional - r.v_variance).abs()).fold(0.0, f64::max);
    let mut worst_ineq = f64::NEG_INFINITY;
    for seed in 0..20 {
        let (spec, params) = random_instance(seed);
        let r = dispersion(&build_joint(&spec, &params, spec.pi()).unwrap());
        worst_ineq = worst_ineq.max(r.v_conditional - r.v_variance);
    }
    let ok = !qualifying.is_empty() && worst_eq <= 1e-6 && worst_ineq <= 1e-9;
    verdict(ok, format!(
        "{} stationary outputs, max |Vc - Vv| = {worst_eq:.2e}; suboptimal max(Vc - Vv) = {worst_ineq:.2e}",
        qualifying.len()
    ))
}

fn c4_derivatives() -> Verdict {
    let (mut g_ps, mut h_ps, mut g_q, mut ident) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20 {
        let (spec, params) = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps: Vec<f64> = (0..spec.n_s()).map(|_| rng.random_range(0.2..1.5)).collect();
        let g = grad_i_of_ps(&spec, &params, &ps).unwrap();
        let f = |x: &[f64]| i_of_ps(&spec, &params, x).unwrap();
        g_ps = g_ps.max(fd_check(f, &g, &ps, 1e-6, FdDomain::Positive).unwrap());
        let h = hessian_i_of_ps(&spec, &params, &ps).unwrap();
        let gf = |x: &[f64]| grad_i_of_ps(&spec, &params, x).unwrap();
        h_ps = h_ps.max(fd_check_jacobian(gf, &h, &ps, 1e-5, FdDomain::Positive).unwrap());
        let gq: Vec<f64> = grad_objective_q(&spec, &params).unwrap().concat();
        let fq = |q: &[f64]| objective_at(&spec, &params, q).unwrap();
        g_q = g_q.max(fd_check(fq, &gq, params.q_flat(), 1e-6, FdDomain::Positive).unwrap());
        let at_pi = grad_i_of_ps(&spec, &params, spec.pi()).unwrap();
        let lhs: f64 = spec.pi().iter().zip(&at_pi).map(|(p, g)| p * g).sum();
        ident = ident.max((lhs - i_of_ps(&spec, &params, spec.pi()).unwrap()).abs());
    }
    let ok = g_ps <= 1e-6 && h_ps <= 1e-5 && g_q <= 1e-6 && ident <= 1e-10;
    verdict(ok, format!(
        "grad I(P_S) {g_ps:.1e}, Hessian {h_ps:.1e}, Q-gradient {g_q:.1e}, identity {ident:.1e}"
    ))
}

fn c5_dpc_alpha_invariance() -> Verdict {
    let (mut worst_i, mut worst_v) = (0.0f64, 0.0f64);
    for &p in &[0.5, 1.0, 4.0] {
        let a = alpha_opt(p).unwrap();
        for k in 0..=100 {
            let ps = 0.1 * k as f64;
            let diff = mi_uy(p, ps, a).unwrap() - mi_us(p, ps, a).unwrap();
            worst_i = worst_i.max((diff - 0.5 * (1.0 + p).ln()).abs());
            let v = dpc_moments(p, ps, a).unwrap().var_per_letter;
            worst_v = worst_v.max((v - p * (2.0 + p) / (2.0 * (1.0 + p).powi(2))).abs());
        }
    }
    verdict(worst_i <= 1e-12 && worst_v <= 1e-12, format!("max |I - C| = {worst_i:.1e}, max |V - V*| = {worst_v:.1e}"))
}

fn c6_gaussian_state() -> Verdict {
    let (mut worst, mut second) = (0.0f64, 0.0f64);
    for &p in &[0.5_f64, 1.0, 4.0] {
        for &ps in &[0.5_f64, 2.0, 10.0] {
            let t = gaussian_state_dispersion(p, ps, alpha_opt(p).unwrap(), 12).unwrap();
            worst = worst.max((t[0] + t[1] - dpc_dispersion(p).unwrap()).abs());
            second = second.max(t[1].abs());
        }
    }
    verdict(worst <= 1e-6 && second <= 1e-8, format!("max |V_quad - V| = {worst:.1e}, max second term = {second:.1e}"))
}

fn c7_dpc_spectrum_moments() -> Verdict {
    let n = 100;
    let (lines, dt) = timed(|| {
        [0.5, 2.0]
            .iter()
            .enumerate()
            .map(|(k, &ps)| {
                let cfg = DpcConfig::new(1.0, 2.0).unwrap();
                let pair = DpcPair::canonical(n, &cfg, ps).unwrap();
                let s = dpc_spectrum_samples(&cfg, ps, &pair, 100_000, &RngSpec::new(70 + k as u64, 4).unwrap()).unwrap();
                let m = sample_moments(&s);
                let want = dpc_moments(1.0, ps, cfg.alpha).unwrap();
                let zm = (m.mean.value - n as f64 * want.mean_per_letter) / m.mean.std_error;
                let zv = (m.variance.value - n as f64 * want.var_per_letter) / m.variance.std_error;
                (ps, zm, zv)
            })
            .collect::<Vec<_>>()
    });
    let ok = lines.iter().all(|&(_, zm, zv)| zm.abs() <= 4.0 && zv.abs() <= 4.0) && dt.as_secs_f64() < 10.0;
    let body: Vec<String> = lines.iter().map(|(ps, zm, zv)| format!("P_S={ps}: z_mean {zm:+.2}, z_var {zv:+.2}")).collect();
    verdict(ok, format!("{}, {dt:.2?}", body.join("; ")))
}

fn c8_berry_esseen_band() -> Verdict {
    let (spec, params) = stuck();
    let n = 400usize;
    let st = StateType::new(vec![20, 20, 360]).unwrap();
    let qp = type_quantize_q(&params, &st).unwrap();
    let ps = st.distribution::<f64>();
    let joint = build_joint(&spec, &qp, &ps).unwrap();
    let i_uy = dispersion(&joint).mi_uy;
    let v = v_of_ps(&spec, &qp, &ps).unwrap();
    let samples = gp_spectrum_samples(&spec, &params, &st, 100_000, &RngSpec::new(8, 4).unwrap()).unwrap();
    let (nf, sd) = (n as f64, (n as f64 * v).sqrt());
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_diff = 0.0f64;
    for k in -4..=4 {
        let gamma = nf * i_uy + 0.5 * k as f64 * sd;
        let est = tail_fraction(&samples, gamma);
        let diff = (est.value - phi((gamma - nf * i_uy) / sd)).abs();
        worst_diff = worst_diff.max(diff);
        worst_excess = worst_excess.max(diff - (0.7 / nf.sqrt()).max(4.0 * est.std_error));
    }
    verdict(worst_excess <= 0.0, format!("max |tail - Phi| = {worst_diff:.4} (band {:.4})", 0.7 / nf.sqrt()))
}

fn c9_sphere_rate() -> Verdict {
    let (p, ps, alpha) = (1.0, 0.1, 0.5);
    let cfg = DpcConfig::with_alpha(p, 2.0, alpha).unwrap();
    let rate = mi_us(p, ps, alpha).unwrap();
    let rng = RngSpec::new(9, 4).unwrap();
    let ests: Vec<_> = [50usize, 100, 200].iter().map(|&n| (n, dpc_geometry_prob(&cfg, ps, n, 100_000, &rng).unwrap())).collect();
    let gaps: Vec<f64> = ests.iter().map(|(n, e)| -e.value.ln() / *n as f64 - rate).collect();
    let monotone = gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0;
    let n = 50;
    let (lo, hi) = sphere_coord_interval(&cfg, ps, n, (n as f64 * ps).sqrt()).unwrap();
    let tol = Tolerance::new(1e-14, 1e-10, 2000).unwrap();
    let power = p + alpha * alpha * ps;
    let quad = integrate(|u| sphere_coord_logpdf(u, n, power).unwrap().exp(), lo, hi, &[], &tol).unwrap().value;
    let z = (ests[0].1.value - quad) / ests[0].1.std_error;
    verdict(monotone && z.abs() <= 3.0, format!(
        "gaps to I(U;S) = {:.4}, {:.4}, {:.4}; n=50 MC vs quadrature z = {z:+.2}",
        gaps[0], gaps[1], gaps[2]
    ))
}

/// `P[Z1 <= z1, Z2 <= z2]` for unit normals with correlation `rho`, by
/// composite Simpson integration of `phi(x) Phi((z2 - rho x)/sqrt(1-rho^2))`.
fn binorm_oracle(z1: f64, z2: f64, rho: f64) -> f64 {
    let lo = -9.0f64;
    if z1 <= lo {
        return 0.0;
    }
    let r = (1.0 - rho * rho).sqrt();
    let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt() * phi((z2 - rho * x) / r);
    let m = 400;
    let h = (z1 - lo) / m as f64;
    let mut acc = f(lo) + f(z1);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + h * k as f64);
    }
    acc * h / 3.0
}

fn r_tilde_grid(v: &[[f64; 2]; 2], eps: f64) -> f64 {
    let (s1, s2) = (v[0][0].sqrt(), v[1][1].sqrt());
    let rho = v[0][1] / (s1 * s2);
    let q = qinv(eps).unwrap();
    let feasible = |r1: f64, r2: f64| binorm_oracle(r1 / s1, r2 / s2, rho) >= 1.0 - eps;
    let min_r2 = |r1: f64| {
        let (mut lo, mut hi) = (s2 * q, s2 * (q + 10.0));
        if !feasible(r1, hi) {
            return f64::INFINITY;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if feasible(r1, mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        hi
    };
    let (mut a, mut b) = (s1 * q, s1 * (q + 8.0));
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let m = 100;
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

fn c10_r_tilde_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let v = [
            [a[0] * a[0] + a[1] * a[1] + 0.01, a[0] * a[2] + a[1] * a[3]],
            [a[0] * a[2] + a[1] * a[3], a[2] * a[2] + a[3] * a[3] + 0.01],
        ];
        let eps = rng.random_range(0.001..0.3);
        worst = worst.max((r_tilde(&v, eps).unwrap().value - r_tilde_grid(&v, eps)).abs());
    }
    let mut order_ok = true;
    let (spec, params) = stuck();
    let mut joints = vec![build_joint(&spec, &params, spec.pi()).unwrap()];
    for seed in 0..3 {
        let (spec, _) = random_instance(seed);
        let best = optimize_small(seed).best_params;
        joints.push(build_joint(&spec, &best, spec.pi()).unwrap());
    }
    for joint in &joints {
        let r = dispersion(joint);
        for &eps in &[0.001, 0.01, 0.1, 0.3, 0.45] {
            let rt = r_tilde(&r.cov_matrix, eps).unwrap().value;
            let cs = cs_lower_bound(&r.cov_matrix, eps).unwrap();
            let na = r.v_conditional.sqrt() * qinv(eps).unwrap();
            order_ok &= cs <= rt + 1e-9 && na <= rt + 1e-9;
        }
    }
    verdict(worst <= 1e-4 && order_ok, format!("max |R~ - grid| = {worst:.1e} nats, orderings hold: {order_ok}"))
}

fn c11_both_sides() -> Verdict {
    let (spec, params) = stuck();
    let channels: Vec<Vec<Vec<f64>>> = (0..spec.n_s())
        .map(|s| (0..spec.n_x()).map(|x| spec.w_row(x, s).to_vec()).collect())
        .collect();
    let r = both_sides(&channels, spec.pi()).unwrap();
    let c_gp = evaluate_fixed(&spec, &params).unwrap().capacity_nats;
    let c_gap = (r.c - c_gp).abs() / NATS_PER_BIT;
    let v_bsc = DELTA * (1.0 - DELTA) * ((1.0 - DELTA) / DELTA).ln().powi(2);
    let c_bsc = (1.0 - h2_bits(DELTA)) * NATS_PER_BIT;
    let v_ref = (1.0 - P_STUCK) * v_bsc + P_STUCK * (1.0 - P_STUCK) * c_bsc * c_bsc;
    let v_gap = (r.v - v_ref).abs();
    verdict(c_gap <= 1e-6 && v_gap <= 1e-8, format!("|C - C_GP| = {c_gap:.1e} bits, |V - V_ref| = {v_gap:.1e} nats^2"))
}

fn c12_full_scheme() -> Verdict {
    let (spec, params) = stuck();
    let cfg = SimConfig { k2: 1.0, k_gamma: 2.0, decoder: DecoderMode::Threshold, conservative: false };
    let ((sim, terms), dt) = timed(|| {
        let sim = gp_full_sim(&spec, &params, 60, 2, &cfg, 1000, &RngSpec::new(12, 4).unwrap()).unwrap();
        let terms = threshold_bound_terms(&spec, &params, 60, 2, &cfg, 1000, &RngSpec::new(112, 4).unwrap()).unwrap();
        (sim, terms)
    });
    let se = (sim.empirical_error.std_error.powi(2) + terms.std_error().powi(2)).sqrt();
    let ok = sim.empirical_error.value <= terms.total() + 3.0 * se && dt.as_secs_f64() < 60.0;
    verdict(ok, format!(
        "empirical {:.4} vs bound {:.4} (encoder {:.1e}, tail {:.4}, union {:.4}) + 3se {:.4}, {dt:.2?}",
        sim.empirical_error.value,
        terms.total(),
        terms.encoder.value,
        terms.tail.value,
        terms.union.value,
        3.0 * se
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("stuck-at reproduction", c1_stuck_at_reproduction),
        ("optimizer recovery", c2_optimizer_recovery),
        ("dispersion-form equivalence", c3_dispersion_forms),
        ("derivative correctness", c4_derivatives),
        ("DPC alpha-invariance", c5_dpc_alpha_invariance),
        ("Gaussian-state cross-check", c6_gaussian_state),
        ("DPC spectrum moments", c7_dpc_spectrum_moments),
        ("Berry-Esseen band", c8_berry_esseen_band),
        ("sphere-geometry rate", c9_sphere_rate),
        ("R~ oracle equivalence", c10_r_tilde_oracle),
        ("both-sides state information", c11_both_sides),
        ("full-scheme sanity", c12_full_scheme),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!("{} criterion {:>2} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
