use crate::error::{Error, Result};
use crate::scalar::Real;

use super::Tolerance;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut fvals = [T::zero(); 14];
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fvals[2 * j] = f1;
        fvals[2 * j + 1] = f2;
        kronrod = kronrod + T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    // QUADPACK-style error scaling
    let mean = kronrod * half;
    let mut asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        asc = asc + T::lit(WGK[j]) * ((fvals[2 * j] - mean).abs() + (fvals[2 * j + 1] - mean).abs());
    }
    let value = kronrod * h;
    let asc = asc * h.abs();
    let mut err = ((kronrod - gauss) * h).abs();
    if asc > T::zero() && err > T::zero() {
        let scale = (T::lit(200.0) * err / asc).powf(T::lit(1.5));
        err = asc * scale.min(T::one());
    }
    let floor = T::lit(50.0) * T::epsilon() * value.abs();
    (value, err.max(floor))
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// `tol.max_iter` caps the number of bisections. Breakpoints in `splits`
/// (e.g. kinks of the integrand) seed the initial partition.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    splits: &[T],
    tol: &Tolerance,
) -> Result<Integral<T>> {
    if !a.is_finite() || !b.is_finite() {
        return Err(crate::error::domain("integration limits must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: T::zero(),
            abs_error: T::zero(),
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let mut pts = vec![lo];
    let mut inner: Vec<T> = splits
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).expect("finite split point"));
    pts.extend(inner);
    pts.push(hi);

    let mut segs: Vec<Segment<T>> = pts
        .windows(2)
        .map(|w| {
            let (value, err) = gk15(&f, w[0], w[1]);
            Segment {
                a: w[0],
                b: w[1],
                value,
                err,
            }
        })
        .collect();
    let mut evaluations = 15 * segs.len();
    let total = |segs: &[Segment<T>]| -> (T, T) {
        segs.iter()
            .fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.err))
    };
    for _ in 0..tol.max_iter {
        let (value, err) = total(&segs);
        if tol.accepts(err, value) {
            return Ok(Integral {
                value: sign * value,
                abs_error: err,
                evaluations,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, s)| {
                if s.err > be {
                    (i, s.err)
                } else {
                    (bi, be)
                }
            });
        let s = segs.swap_remove(worst);
        let mid = T::lit(0.5) * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            // cannot bisect further at this precision
            segs.push(s);
            break;
        }
        let (v1, e1) = gk15(&f, s.a, mid);
        let (v2, e2) = gk15(&f, mid, s.b);
        evaluations += 30;
        segs.push(Segment { a: s.a, b: mid, value: v1, err: e1 });
        segs.push(Segment { a: mid, b: s.b, value: v2, err: e2 });
    }
    let (value, err) = total(&segs);
    if tol.accepts(err, value) {
        Ok(Integral {
            value: sign * value,
            abs_error: err,
            evaluations,
        })
    } else {
        Err(Error::Numeric(format!(
            "adaptive quadrature did not reach tolerance (estimated error {err})"
        )))
    }
}

/// Gauss–Hermite nodes and weights for the weight `e^{-x^2}` on the real line.
pub fn gauss_hermite<T: Real>(m: usize) -> Result<(Vec<T>, Vec<T>)> {
    if m == 0 {
        return Err(crate::error::domain("Gauss-Hermite order must be positive"));
    }
    let pim4 = T::PI().powf(T::lit(-0.25));
    let mut x = vec![T::zero(); m];
    let mut w = vec![T::zero(); m];
    let mf = T::count(m);
    let mut z = T::zero();
    for i in 0..m.div_ceil(2) {
        z = match i {
            0 => {
                let t = T::lit(2.0) * mf + T::one();
                t.sqrt() - T::lit(1.85575) * t.powf(T::lit(-0.16667))
            }
            1 => z - T::lit(1.14) * mf.powf(T::lit(0.426)) / z,
            2 => T::lit(1.86) * z - T::lit(0.86) * x[0],
            3 => T::lit(1.91) * z - T::lit(0.91) * x[1],
            _ => T::lit(2.0) * z - x[i - 2],
        };
        let mut pp = T::zero();
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = T::zero();
            for j in 1..=m {
                let p3 = p2;
                p2 = p1;
                let jf = T::count(j);
                p1 = z * (T::lit(2.0) / jf).sqrt() * p2 - ((jf - T::one()) / jf).sqrt() * p3;
            }
            pp = (T::lit(2.0) * mf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= T::lit(4.0) * T::epsilon() * z.abs().max(T::one()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!("Gauss-Hermite node {i} did not converge")));
        }
        x[i] = z;
        x[m - 1 - i] = -z;
        w[i] = T::lit(2.0) / (pp * pp);
        w[m - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// `E[f(Z)]` for `Z ~ N(0,1)` using `m`-point Gauss–Hermite quadrature.
pub fn normal_expectation<T: Real, F: Fn(T) -> T>(f: F, m: usize) -> Result<T> {
    let (x, w) = gauss_hermite::<T>(m)?;
    let scale = T::SQRT_2();
    let norm = T::PI().sqrt();
    Ok(x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * f(scale * xi))
        .sum::<T>()
        / norm)
}
