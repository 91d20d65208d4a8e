//! Domain types shared by every analysis module.
//!
//! Stakes are exact arbitrary-precision integers. Under the linear scheme the
//! weights are the stakes themselves and every threshold test is done in
//! integer arithmetic. Under the square-root scheme weights are `f64` and
//! threshold tests compare normalized weights with an absolute tolerance of
//! [`SRSW_TOLERANCE`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on normalized weights for square-root threshold tests.
pub const SRSW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Validator {
    pub address: String,
    pub stake: BigUint,
    pub moniker: Option<String>,
}

impl Validator {
    pub fn new(address: impl Into<String>, stake: impl Into<BigUint>) -> Self {
        Validator {
            address: address.into(),
            stake: stake.into(),
            moniker: None,
        }
    }

    pub fn with_moniker(mut self, moniker: impl Into<String>) -> Self {
        self.moniker = Some(moniker.into());
        self
    }
}

/// A chain's validator set at one instant.
///
/// Construction validates and canonicalizes, so every value of this type is
/// non-empty, has unique addresses and positive stakes, and is ordered by
/// stake descending with ties broken by address ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorSnapshot {
    pub chain: String,
    pub captured_at: DateTime<Utc>,
    validators: Vec<Validator>,
}

impl ValidatorSnapshot {
    pub fn new(
        chain: impl Into<String>,
        captured_at: DateTime<Utc>,
        validators: Vec<Validator>,
    ) -> Result<Self> {
        canonicalize(ValidatorSnapshot {
            chain: chain.into(),
            captured_at,
            validators,
        })
    }

    /// Convenience constructor for tests and bindings: addresses are `v0`,
    /// `v1`, ... in input order, timestamp is the Unix epoch.
    pub fn from_stakes<I, S>(chain: impl Into<String>, stakes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<BigUint>,
    {
        let validators = stakes
            .into_iter()
            .enumerate()
            .map(|(i, s)| Validator::new(format!("v{i}"), s))
            .collect();
        Self::new(chain, DateTime::<Utc>::UNIX_EPOCH, validators)
    }

    pub fn validators(&self) -> &[Validator] {
        &self.validators
    }

    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn total_stake(&self) -> BigUint {
        self.validators.iter().map(|v| &v.stake).sum()
    }

    /// Keeps the first `n` validators. `n` must be at least one.
    pub(crate) fn truncated(&self, n: usize) -> ValidatorSnapshot {
        ValidatorSnapshot {
            chain: self.chain.clone(),
            captured_at: self.captured_at,
            validators: self.validators[..n].to_vec(),
        }
    }
}

fn canonical_cmp(a: &Validator, b: &Validator) -> std::cmp::Ordering {
    b.stake.cmp(&a.stake).then_with(|| a.address.cmp(&b.address))
}

/// Validates a snapshot and sorts it into canonical order. Idempotent.
pub fn canonicalize(mut snapshot: ValidatorSnapshot) -> Result<ValidatorSnapshot> {
    if snapshot.validators.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut seen = HashSet::with_capacity(snapshot.validators.len());
    for v in &snapshot.validators {
        if !seen.insert(v.address.as_str()) {
            return Err(Error::DuplicateAddress(v.address.clone()));
        }
    }
    if let Some(v) = snapshot.validators.iter().find(|v| v.stake.is_zero()) {
        return Err(Error::ZeroStake(v.address.clone()));
    }
    snapshot.validators.sort_by(canonical_cmp);
    Ok(snapshot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// weight = stake
    Linear,
    /// weight = sqrt(stake)
    Srsw,
}

impl WeightScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Linear => "linear",
            WeightScheme::Srsw => "srsw",
        }
    }

    /// Weight of a single stake as a float.
    pub fn weight_f64(self, stake: &BigUint) -> f64 {
        match self {
            WeightScheme::Linear => biguint_to_f64(stake),
            WeightScheme::Srsw => sqrt_f64(stake),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(WeightScheme::Linear),
            "srsw" | "sqrt" => Ok(WeightScheme::Srsw),
            other => Err(Error::InvalidParameter {
                name: "scheme",
                reason: format!("expected `linear` or `srsw`, got `{other}`"),
            }),
        }
    }
}

pub(crate) fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Square root of an arbitrary-size integer, correct to `f64` precision.
pub(crate) fn sqrt_f64(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return biguint_to_f64(x).sqrt();
    }
    // sqrt(x) = sqrt(x >> 2k) * 2^k keeps the shifted value inside f64 range
    let k = (bits - 900) / 2;
    let shifted = x >> (2 * k);
    biguint_to_f64(&shifted).sqrt() * 2f64.powi(k as i32)
}

/// Per-validator weights, aligned with the snapshot's canonical order.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Exact(Vec<BigUint>),
    Real(Vec<f64>),
}

/// A sum of weights in the representation of its scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSum {
    Exact(BigUint),
    Real(f64),
}

impl WeightSum {
    pub fn to_f64(&self) -> f64 {
        match self {
            WeightSum::Exact(x) => biguint_to_f64(x),
            WeightSum::Real(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    snapshot: ValidatorSnapshot,
    scheme: WeightScheme,
    weights: Weights,
    total: WeightSum,
}

/// Maps every stake of a canonical snapshot through `scheme`.
pub fn apply_weights(snapshot: &ValidatorSnapshot, scheme: WeightScheme) -> WeightedSet {
    let (weights, total) = match scheme {
        WeightScheme::Linear => {
            let w: Vec<BigUint> = snapshot.validators.iter().map(|v| v.stake.clone()).collect();
            let total = w.iter().sum();
            (Weights::Exact(w), WeightSum::Exact(total))
        }
        WeightScheme::Srsw => {
            let w: Vec<f64> = snapshot.validators.iter().map(|v| sqrt_f64(&v.stake)).collect();
            let total = neumaier_sum(w.iter().copied());
            (Weights::Real(w), WeightSum::Real(total))
        }
    };
    WeightedSet {
        snapshot: snapshot.clone(),
        scheme,
        weights,
        total,
    }
}

impl WeightedSet {
    pub fn snapshot(&self) -> &ValidatorSnapshot {
        &self.snapshot
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn total(&self) -> &WeightSum {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.snapshot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshot.is_empty()
    }

    pub fn weight_f64(&self, i: usize) -> f64 {
        match &self.weights {
            Weights::Exact(w) => biguint_to_f64(&w[i]),
            Weights::Real(w) => w[i],
        }
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight_f64(i)).collect()
    }

    pub fn total_f64(&self) -> f64 {
        self.total.to_f64()
    }

    /// Weight of validator `i` divided by the total weight.
    pub fn share(&self, i: usize) -> f64 {
        match (&self.weights, &self.total) {
            (Weights::Exact(w), WeightSum::Exact(t)) => ratio(&w[i], t),
            _ => self.weight_f64(i) / self.total_f64(),
        }
    }

    /// Sum of the weights at `indices`. Indices must be in range.
    pub fn sum_of<I: IntoIterator<Item = usize>>(&self, indices: I) -> WeightSum {
        match &self.weights {
            Weights::Exact(w) => WeightSum::Exact(indices.into_iter().map(|i| &w[i]).sum()),
            Weights::Real(w) => WeightSum::Real(neumaier_sum(indices.into_iter().map(|i| w[i]))),
        }
    }

    /// Whether `sum` is at least `num/den` of the total weight.
    ///
    /// Exact weights compare `den * sum >= num * total`. Real weights compare
    /// `sum / total >= num / den - SRSW_TOLERANCE`.
    pub fn reaches(&self, sum: &WeightSum, num: u32, den: u32) -> bool {
        match (sum, &self.total) {
            (WeightSum::Exact(s), WeightSum::Exact(t)) => s * den >= t * num,
            _ => sum.to_f64() / self.total_f64() >= num as f64 / den as f64 - SRSW_TOLERANCE,
        }
    }
}

/// `a / b` for big integers, correct to roughly f64 precision even when both
/// exceed the f64 range.
/// `a / b` correctly rounded, so the result depends only on the rational
/// value and not on the magnitudes of `a` and `b`.
pub(crate) fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    // at least 66 quotient bits, then a sticky bit for the remainder
    let k = (b.bits() + 66).saturating_sub(a.bits());
    let scaled = a << k;
    let mut q = &scaled / b;
    if !(&scaled % b).is_zero() {
        q |= BigUint::one();
    }
    let half = (k / 2) as i32;
    biguint_to_f64(&q) * 2f64.powi(-half) * 2f64.powi(half - k as i32)
}

/// Compensated summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
