//! Decentralization metrics over a [`WeightedSet`].
//!
//! - Gini index, via the sorted-rank form and via the Lorenz curve.
//! - Nakamoto coefficients for liveness (1/3 of weight) and safety (2/3).
//! - The epsilon of the (m, epsilon, delta) model: how many times richer the
//!   top validator is than the delta-th percentile one, minus one.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{neumaier_sum, ratio, WeightScheme, WeightSum, WeightedSet, Weights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub chain: String,
    pub scheme: WeightScheme,
    pub m: usize,
    pub gini: f64,
    pub nakamoto_liveness: usize,
    pub rho_liveness: f64,
    pub nakamoto_safety: usize,
    pub rho_safety: f64,
    /// delta (integer percent) -> epsilon
    pub epsilon_by_delta: BTreeMap<u8, f64>,
}

fn ensure_nonempty(ws: &WeightedSet) -> Result<()> {
    if ws.is_empty() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

/// Gini index in `[0, 1]`.
///
/// Uses `G = sum_i (2i - m - 1) x_(i) / (m * sum x)` over ascending ranks,
/// evaluated in exact integers for linear weights.
pub fn gini(ws: &WeightedSet) -> Result<f64> {
    ensure_nonempty(ws)?;
    let m = ws.len();
    let g = match ws.weights() {
        Weights::Exact(w) => {
            // canonical order is descending; walk it backwards for ascending ranks
            let mut num = BigInt::from(0);
            for (rank, x) in w.iter().rev().enumerate() {
                let coeff = 2 * (rank as i64 + 1) - m as i64 - 1;
                num += BigInt::from(coeff) * BigInt::from(x.clone());
            }
            let den: BigUint = w.iter().sum::<BigUint>() * BigUint::from(m);
            // numerator is never negative for ascending ranks
            ratio(num.magnitude(), &den)
        }
        Weights::Real(w) => gini_of_desc(w),
    };
    Ok(g.clamp(0.0, 1.0))
}

/// Gini of an arbitrary non-negative vector (any order).
pub fn gini_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    gini_of_desc(&sorted).clamp(0.0, 1.0)
}

fn gini_of_desc(desc: &[f64]) -> f64 {
    let m = desc.len();
    let total = neumaier_sum(desc.iter().copied());
    if total <= 0.0 {
        return 0.0;
    }
    let num = neumaier_sum(
        desc.iter()
            .rev()
            .enumerate()
            .map(|(rank, x)| (2.0 * (rank as f64 + 1.0) - m as f64 - 1.0) * x),
    );
    num / (m as f64 * total)
}

/// Lorenz curve points `(cumulative validator fraction, cumulative weight
/// fraction)` in ascending-weight order, from `(0, 0)` to `(1, 1)`.
pub fn lorenz_points(ws: &WeightedSet) -> Result<Vec<(f64, f64)>> {
    ensure_nonempty(ws)?;
    let m = ws.len();
    let mut points = Vec::with_capacity(m + 1);
    points.push((0.0, 0.0));
    match (ws.weights(), ws.total()) {
        (Weights::Exact(w), WeightSum::Exact(total)) => {
            let mut acc = BigUint::from(0u32);
            for (k, x) in w.iter().rev().enumerate() {
                acc += x;
                points.push(((k + 1) as f64 / m as f64, ratio(&acc, total)));
            }
        }
        _ => {
            let w = ws.weights_f64();
            let total = ws.total_f64();
            let mut acc = 0.0;
            let mut comp = 0.0;
            for (k, x) in w.iter().rev().enumerate() {
                // Kahan
                let y = x - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
                points.push(((k + 1) as f64 / m as f64, acc / total));
            }
        }
    }
    if let Some(last) = points.last_mut() {
        *last = (1.0, 1.0);
    }
    Ok(points)
}

/// `1 - 2 * (area under the Lorenz curve)` with trapezoids.
pub fn gini_from_lorenz(points: &[(f64, f64)]) -> f64 {
    let area = neumaier_sum(
        points
            .windows(2)
            .map(|p| (p[1].0 - p[0].0) * (p[1].1 + p[0].1) / 2.0),
    );
    (1.0 - 2.0 * area).clamp(0.0, 1.0)
}

/// Smallest number of validators whose weight reaches `num/den` of the total.
/// Taking the heaviest first is optimal: the k largest weights maximize every
/// k-subset sum.
fn nakamoto(ws: &WeightedSet, num: u32, den: u32) -> Result<usize> {
    ensure_nonempty(ws)?;
    let m = ws.len();
    match ws.weights() {
        Weights::Exact(w) => {
            let mut acc = BigUint::from(0u32);
            for (k, x) in w.iter().enumerate() {
                acc += x;
                if ws.reaches(&WeightSum::Exact(acc.clone()), num, den) {
                    return Ok(k + 1);
                }
            }
        }
        Weights::Real(w) => {
            let mut acc = 0.0;
            let mut comp = 0.0;
            for (k, x) in w.iter().enumerate() {
                let y = x - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
                if ws.reaches(&WeightSum::Real(acc), num, den) {
                    return Ok(k + 1);
                }
            }
        }
    }
    Ok(m)
}

pub fn nakamoto_liveness(ws: &WeightedSet) -> Result<usize> {
    nakamoto(ws, 1, 3)
}

pub fn nakamoto_safety(ws: &WeightedSet) -> Result<usize> {
    nakamoto(ws, 2, 3)
}

/// `n / m * 100`.
pub fn scale_nakamoto(n: usize, m: usize) -> Result<f64> {
    if m == 0 || n == 0 || n > m {
        return Err(Error::OutOfRange {
            what: "nakamoto coefficient",
            detail: format!("need 1 <= n <= m, got n={n}, m={m}"),
        });
    }
    Ok(n as f64 / m as f64 * 100.0)
}

/// `w_max / w_delta - 1`, where `w_delta` sits at ascending index
/// `floor(delta * (m - 1) / 100)`.
pub fn epsilon(ws: &WeightedSet, delta: u8) -> Result<f64> {
    ensure_nonempty(ws)?;
    if delta > 100 {
        return Err(Error::OutOfRange {
            what: "delta",
            detail: format!("{delta} is not a percentage"),
        });
    }
    let m = ws.len();
    let asc_index = delta as usize * (m - 1) / 100;
    let desc_index = m - 1 - asc_index;
    let eps = match ws.weights() {
        Weights::Exact(w) => {
            let top = &w[0];
            let at = &w[desc_index];
            ratio(&(top - at), at)
        }
        Weights::Real(w) => w[0] / w[desc_index] - 1.0,
    };
    Ok(eps.max(0.0))
}

pub fn full_report(ws: &WeightedSet, deltas: &[u8]) -> Result<MetricsReport> {
    ensure_nonempty(ws)?;
    let m = ws.len();
    let nakamoto_liveness = nakamoto_liveness(ws)?;
    let nakamoto_safety = nakamoto_safety(ws)?;
    let epsilon_by_delta = deltas
        .iter()
        .map(|&d| epsilon(ws, d).map(|e| (d, e)))
        .collect::<Result<_>>()?;
    Ok(MetricsReport {
        chain: ws.snapshot().chain.clone(),
        scheme: ws.scheme(),
        m,
        gini: gini(ws)?,
        nakamoto_liveness,
        rho_liveness: scale_nakamoto(nakamoto_liveness, m)?,
        nakamoto_safety,
        rho_safety: scale_nakamoto(nakamoto_safety, m)?,
        epsilon_by_delta,
    })
}
