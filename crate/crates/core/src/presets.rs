//! Ready-made channels and parameters used in examples and tests.

use crate::error::{domain, Result};
use crate::gp_model::{ChannelSpec, GpParams};
use crate::scalar::Real;

fn check_prob<T: Real>(v: T, name: &str) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Memory cell with stuck-at faults: states `{0, 1, 2}` with prior
/// `(p/2, p/2, 1-p)`; the output is forced to 0 in state 0 and to 1 in
/// state 1, and state 2 is a BSC with crossover `delta`.
pub fn stuck_at_channel<T: Real>(delta: T, p: T) -> Result<ChannelSpec<T>> {
    check_prob(delta, "delta")?;
    check_prob(p, "p")?;
    let half = T::lit(0.5);
    let (z, o) = (T::zero(), T::one());
    let bsc_row = |x: usize| if x == 0 { vec![o - delta, delta] } else { vec![delta, o - delta] };
    let kernel = (0..2)
        .map(|x| vec![vec![o, z], vec![z, o], bsc_row(x)])
        .collect();
    ChannelSpec::new(vec![half * p, half * p, o - p], kernel)
}

/// Known optimal parameters for [`stuck_at_channel`]: binary `U`,
/// `Q(.|0) = (1-delta, delta)`, `Q(.|1) = (delta, 1-delta)`, `Q(.|2)` uniform,
/// `phi(u, s) = u`.
pub fn stuck_at_params<T: Real>(delta: T) -> Result<GpParams<T>> {
    check_prob(delta, "delta")?;
    let half = T::lit(0.5);
    let o = T::one();
    GpParams::new(
        vec![vec![o - delta, delta], vec![delta, o - delta], vec![half, half]],
        vec![vec![0, 0, 0], vec![1, 1, 1]],
    )
}

/// Binary symmetric channel as a single-state channel.
pub fn bsc<T: Real>(delta: T) -> Result<ChannelSpec<T>> {
    check_prob(delta, "delta")?;
    let o = T::one();
    ChannelSpec::new(
        vec![o],
        vec![vec![vec![o - delta, delta]], vec![vec![delta, o - delta]]],
    )
}
