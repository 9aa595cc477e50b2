use crate::error::{domain, structural, Result};
use crate::scalar::Real;

/// Domain of the function under a finite-difference check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdDomain {
    /// Any finite point.
    Reals,
    /// Every coordinate must stay strictly positive (probability simplex
    /// interiors, unnormalized tables).
    Positive,
}

fn validate<T: Real>(point: &[T], step: T, dom: FdDomain) -> Result<()> {
    if !(step > T::zero()) {
        return Err(domain("finite-difference step must be positive"));
    }
    if point.iter().any(|x| !x.is_finite()) {
        return Err(domain("finite-difference point must be finite"));
    }
    if dom == FdDomain::Positive && point.iter().any(|&x| x - step <= T::zero()) {
        return Err(domain(
            "point is on (or within one step of) the boundary of the positive orthant",
        ));
    }
    Ok(())
}

fn rel_err<T: Real>(fd: T, exact: T) -> T {
    (fd - exact).abs() / exact.abs().max(T::one())
}

/// Worst componentwise discrepancy between central differences of `f` and
/// `grad`, measured as `|fd - g| / max(|g|, 1)`.
pub fn fd_check<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    grad: &[T],
    point: &[T],
    step: T,
    dom: FdDomain,
) -> Result<T> {
    if grad.len() != point.len() {
        return Err(structural(format!(
            "gradient has {} entries, point has {}",
            grad.len(),
            point.len()
        )));
    }
    validate(point, step, dom)?;
    let mut x = point.to_vec();
    let mut worst = T::zero();
    for i in 0..x.len() {
        let xi = x[i];
        x[i] = xi + step;
        let fp = f(&x);
        x[i] = xi - step;
        let fm = f(&x);
        x[i] = xi;
        let fd = (fp - fm) / (step + step);
        worst = worst.max(rel_err(fd, grad[i]));
    }
    Ok(worst)
}

/// Jacobian variant: `g` maps the point to a vector; `jac[i][j]` is
/// `∂g_i/∂x_j`. Used to check Hessians by differencing analytic gradients.
pub fn fd_check_jacobian<T: Real, G: Fn(&[T]) -> Vec<T>>(
    g: G,
    jac: &[Vec<T>],
    point: &[T],
    step: T,
    dom: FdDomain,
) -> Result<T> {
    validate(point, step, dom)?;
    let mut x = point.to_vec();
    let mut worst = T::zero();
    for j in 0..x.len() {
        let xj = x[j];
        x[j] = xj + step;
        let gp = g(&x);
        x[j] = xj - step;
        let gm = g(&x);
        x[j] = xj;
        if gp.len() != jac.len() || gm.len() != jac.len() {
            return Err(structural("Jacobian row count does not match function output"));
        }
        for i in 0..jac.len() {
            if jac[i].len() != x.len() {
                return Err(structural("Jacobian column count does not match point"));
            }
            let fd = (gp[i] - gm[i]) / (step + step);
            worst = worst.max(rel_err(fd, jac[i][j]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_affine_and_quadratic() {
        let lin = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1] + 0.5;
        let e = fd_check(lin, &[3.0, -2.0], &[0.3, 0.7], 1e-3, FdDomain::Reals).unwrap();
        assert!(e <= 1e-12, "{e}");
        let quad = |x: &[f64]| x[0] * x[0] + 4.0 * x[0] * x[1] - x[1] * x[1];
        let (a, b) = (0.4, -1.3);
        let g = [2.0 * a + 4.0 * b, 4.0 * a - 2.0 * b];
        let e = fd_check(quad, &g, &[a, b], 1e-4, FdDomain::Reals).unwrap();
        assert!(e <= 1e-10, "{e}");
    }

    #[test]
    fn boundary_rejected() {
        let f = |x: &[f64]| x[0].ln();
        assert!(fd_check(f, &[1.0], &[0.0], 1e-6, FdDomain::Positive).is_err());
        assert!(fd_check(f, &[1.0], &[1.0], 0.0, FdDomain::Positive).is_err());
        assert!(fd_check(f, &[1.0, 2.0], &[1.0], 1e-6, FdDomain::Positive).is_err());
    }

    #[test]
    fn jacobian_of_gradient() {
        let g = |x: &[f64]| vec![2.0 * x[0] * x[1], x[0] * x[0]];
        let p = [0.7, 1.9];
        let jac = vec![vec![2.0 * p[1], 2.0 * p[0]], vec![2.0 * p[0], 0.0]];
        let e = fd_check_jacobian(g, &jac, &p, 1e-5, FdDomain::Reals).unwrap();
        assert!(e <= 1e-9, "{e}");
    }
}
