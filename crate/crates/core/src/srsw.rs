//! Quorum thresholds, top-M admission, epoch rewards and Sybil-split checks.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{biguint_to_f64, sqrt_f64, ValidatorSnapshot, WeightScheme, WeightSum, WeightedSet};

/// Economic parameters of the reward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    /// Inflation factor per epoch, as a fraction (0.045 is 4.5%).
    pub alpha: f64,
    /// Maximum validator-set cardinality M.
    pub cap_m: usize,
    /// Extra cost C of running one more identity, in reward units per epoch.
    pub sybil_cost: f64,
    pub scheme: WeightScheme,
}

impl EconParams {
    pub fn new(alpha: f64, cap_m: usize, sybil_cost: f64, scheme: WeightScheme) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be a positive finite number, got {alpha}"),
            });
        }
        if cap_m == 0 {
            return Err(Error::InvalidParameter {
                name: "cap_m",
                reason: "must be at least 1".into(),
            });
        }
        if !(sybil_cost.is_finite() && sybil_cost >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sybil_cost",
                reason: format!("must be a non-negative finite number, got {sybil_cost}"),
            });
        }
        Ok(EconParams {
            alpha,
            cap_m,
            sybil_cost,
            scheme,
        })
    }
}

/// The two-thirds-of-total-weight quorum bound for one weighted set.
#[derive(Debug, Clone, PartialEq)]
pub struct QuorumThreshold {
    pub scheme: WeightScheme,
    pub threshold: f64,
    pub total_weight: f64,
    exact_total: Option<BigUint>,
}

impl QuorumThreshold {
    /// Whether a subset whose weights sum to `sum` forms a quorum.
    ///
    /// Linear: `3 * sum >= 2 * total` in integers. SRSW: normalized sum at
    /// least `2/3 - 1e-9`.
    pub fn is_met_by(&self, sum: &WeightSum) -> bool {
        match (sum, &self.exact_total) {
            (WeightSum::Exact(s), Some(total)) => s * 3u32 >= total * 2u32,
            _ => {
                sum.to_f64() / self.total_weight >= 2.0 / 3.0 - crate::model::SRSW_TOLERANCE
            }
        }
    }
}

pub fn quorum_threshold(ws: &WeightedSet) -> Result<QuorumThreshold> {
    if ws.is_empty() {
        return Err(Error::EmptySet);
    }
    let exact_total = match ws.total() {
        WeightSum::Exact(t) => Some(t.clone()),
        WeightSum::Real(_) => None,
    };
    let total_weight = ws.total_f64();
    Ok(QuorumThreshold {
        scheme: ws.scheme(),
        threshold: total_weight * 2.0 / 3.0,
        total_weight,
        exact_total,
    })
}

/// Whether the validators at `subset` (canonical indices) together hold a
/// quorum. With uniform weights this is `|subset| >= ceil(2m/3)`.
pub fn meets_quorum(ws: &WeightedSet, subset: &[usize]) -> Result<bool> {
    let mut seen = HashSet::with_capacity(subset.len());
    for &i in subset {
        if i >= ws.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: ws.len(),
            });
        }
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let q = quorum_threshold(ws)?;
    Ok(q.is_met_by(&ws.sum_of(subset.iter().copied())))
}

/// Admits the `cap_m` highest-staked candidates.
///
/// Returns the admitted set and the admission threshold `s_M`, the stake of
/// the last admitted validator. When the cap does not bind, `s_M` is the
/// smallest stake.
pub fn select_top_m(
    candidates: &ValidatorSnapshot,
    cap_m: usize,
) -> Result<(ValidatorSnapshot, BigUint)> {
    if candidates.is_empty() {
        return Err(Error::EmptySet);
    }
    if cap_m == 0 {
        return Err(Error::InvalidParameter {
            name: "cap_m",
            reason: "must be at least 1".into(),
        });
    }
    let n = cap_m.min(candidates.len());
    let selected = candidates.truncated(n);
    let threshold = selected.validators()[n - 1].stake.clone();
    Ok((selected, threshold))
}

/// Per-epoch reward: `alpha * w(stake)` when `stake > threshold_stake`,
/// otherwise zero.
pub fn reward(stake: &BigUint, params: &EconParams, threshold_stake: &BigUint) -> f64 {
    if stake > threshold_stake {
        params.alpha * params.scheme.weight_f64(stake)
    } else {
        0.0
    }
}

/// Outcome of splitting one stake across two identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitVerdict {
    pub stake: BigUint,
    pub single_reward: f64,
    /// The most profitable two-way split, `None` when the stake is 1.
    pub best_split: Option<(BigUint, BigUint)>,
    /// Reward of `best_split` net of the Sybil cost.
    pub best_split_reward: f64,
    pub rational_to_split: bool,
}

/// Stakes at or below this are split exhaustively; above it only the
/// analytically optimal candidates are evaluated.
const EXHAUSTIVE_SPLIT_LIMIT: u64 = 1 << 20;

/// Compares keeping `stake` in one identity against every two-way split
/// `(a, stake - a)` with both parts at least one base unit.
///
/// A part holding exactly `threshold_stake` counts as admitted and rewarded,
/// so `(3, 1)` at `s_M = 3` earns `alpha * sqrt(3)`.
pub fn sybil_split_analysis(
    stake: &BigUint,
    params: &EconParams,
    threshold_stake: &BigUint,
) -> Result<SplitVerdict> {
    if stake.is_zero() {
        return Err(Error::InvalidParameter {
            name: "stake",
            reason: "must be at least 1".into(),
        });
    }
    // integers: s >= s_M  <=>  s > s_M - 1
    let rewarded_above = if threshold_stake.is_zero() {
        BigUint::zero()
    } else {
        threshold_stake - 1u32
    };
    let single_reward = reward(stake, params, &rewarded_above);
    let candidates: Vec<BigUint> = match stake.to_u64() {
        Some(s) if s <= EXHAUSTIVE_SPLIT_LIMIT => (1..=s / 2).map(BigUint::from).collect(),
        _ => split_candidates(stake, &rewarded_above),
    };

    let mut best: Option<(BigUint, f64)> = None;
    for a in candidates {
        let r = split_reward(&a, &(stake - &a), params, &rewarded_above);
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((a, r));
        }
    }
    Ok(match best {
        Some((a, r)) => SplitVerdict {
            stake: stake.clone(),
            single_reward,
            best_split: Some((stake - &a, a)),
            best_split_reward: r,
            rational_to_split: r > single_reward,
        },
        None => SplitVerdict {
            stake: stake.clone(),
            single_reward,
            best_split: None,
            best_split_reward: f64::NEG_INFINITY,
            rational_to_split: false,
        },
    })
}

/// Reward of the two parts net of C. The eligible weights are summed before
/// multiplying by alpha so a reward-neutral linear split compares equal to
/// the single identity.
fn split_reward(a: &BigUint, b: &BigUint, params: &EconParams, threshold: &BigUint) -> f64 {
    let eligible = [a, b].into_iter().filter(|s| *s > threshold);
    let weight = match params.scheme {
        WeightScheme::Linear => biguint_to_f64(&eligible.sum::<BigUint>()),
        WeightScheme::Srsw => eligible.map(sqrt_f64).sum(),
    };
    params.alpha * weight - params.sybil_cost
}

/// Smaller-part sizes that contain the optimum over all two-way splits.
///
/// With the smaller part `a` in `[1, s/2]`: while only the larger part is
/// rewarded its weight falls as `a` grows, so `a = 1` is best there; once
/// both parts are rewarded the weight sum is constant (linear) or concave and
/// symmetric about `s/2` (SRSW), so `a = s/2` is best there.
pub(crate) fn split_candidates(stake: &BigUint, threshold: &BigUint) -> Vec<BigUint> {
    let half = stake / 2u32;
    let mut out = vec![BigUint::one(), half.clone()];
    let both_lo = threshold + 1u32;
    if both_lo <= half {
        out.push(both_lo);
    }
    out.retain(|a| !a.is_zero() && *a <= half);
    out.sort();
    out.dedup();
    out
}
