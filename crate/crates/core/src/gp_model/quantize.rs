use crate::error::{structural, Result};
use crate::scalar::Real;

use super::GpParams;

/// Empirical composition of a state sequence of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct StateType {
    n: usize,
    counts: Vec<usize>,
}

impl StateType {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 || counts.is_empty() {
            return Err(structural("a type needs a positive length"));
        }
        Ok(Self { n, counts })
    }

    pub fn from_sequence(seq: &[usize], n_s: usize) -> Result<Self> {
        let mut counts = vec![0; n_s];
        for &s in seq {
            *counts
                .get_mut(s)
                .ok_or_else(|| structural(format!("state {s} outside alphabet of size {n_s}")))? += 1;
        }
        Self::new(counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn distribution<T: Real>(&self) -> Vec<T> {
        let n = T::count(self.n);
        self.counts.iter().map(|&c| T::count(c) / n).collect()
    }
}

/// Largest-remainder rounding of each `m_s * Q(.|s)` to integers summing to
/// `m_s = n P_S(s)`; ties go to the smaller `u`. Returned as `[s][u]`.
pub fn quantize_counts<T: Real>(params: &GpParams<T>, st: &StateType) -> Result<Vec<Vec<usize>>> {
    if st.counts().len() != params.n_s() {
        return Err(structural(format!(
            "state type covers {} states, parameters cover {}",
            st.counts().len(),
            params.n_s()
        )));
    }
    let nu = params.aux_size();
    Ok(st
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &m)| {
            let mut floors = Vec::with_capacity(nu);
            let mut rems = Vec::with_capacity(nu);
            for u in 0..nu {
                let target = params.q(u, s).to_f64_lossy() * m as f64;
                // snap values that are integral up to rounding noise
                let snapped = if (target - target.round()).abs() < 1e-9 { target.round() } else { target };
                let f = snapped.floor();
                floors.push(f as usize);
                rems.push(snapped - f);
            }
            let assigned: usize = floors.iter().sum();
            let mut order: Vec<usize> = (0..nu).collect();
            order.sort_by(|&a, &b| rems[b].partial_cmp(&rems[a]).expect("finite").then(a.cmp(&b)));
            for &u in order.iter().take(m.saturating_sub(assigned)) {
                floors[u] += 1;
            }
            floors
        })
        .collect())
}

/// Replaces each `Q(.|s)` by the nearest `n P_S(s)`-type (largest remainder).
/// Rows of states absent from the type are set uniform.
pub fn type_quantize_q<T: Real>(params: &GpParams<T>, st: &StateType) -> Result<GpParams<T>> {
    let counts = quantize_counts(params, st)?;
    let nu = params.aux_size();
    let q: Vec<T> = counts
        .iter()
        .zip(st.counts())
        .flat_map(|(row, &m)| {
            row.iter()
                .map(move |&k| if m == 0 { T::one() / T::count(nu) } else { T::count(k) / T::count(m) })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(params.with_q(q))
}
