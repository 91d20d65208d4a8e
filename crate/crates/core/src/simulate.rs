//! Reward compounding over epochs and stake-weighted proposer sampling.
//!
//! Proposer draws use `ChaCha20Rng` seeded with `seed_from_u64`; the
//! algorithm name is carried in every [`ProposerHistogram`].

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::gini_of;
use crate::model::{apply_weights, biguint_to_f64, ValidatorSnapshot, WeightScheme, WeightedSet};
use crate::srsw::EconParams;

pub const PRNG_ALGORITHM: &str = "ChaCha20Rng";

/// An annual inflation rate apportioned linearly over the epochs of a year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnualRate {
    /// Fractional rate per year (0.045 is 4.5%).
    pub rate: f64,
    pub epochs_per_year: u32,
}

impl AnnualRate {
    pub fn per_epoch(&self) -> f64 {
        self.rate / self.epochs_per_year as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardTrajectory {
    pub scheme: WeightScheme,
    pub alpha: f64,
    pub addresses: Vec<String>,
    /// `0..=T`, including the initial state.
    pub epochs: Vec<u64>,
    /// `stakes[v][t]`: stake of validator `v` at the start of epoch `t`.
    pub stakes: Vec<Vec<f64>>,
    /// `rewards[v][t]`: reward paid to validator `v` at the end of epoch `t`.
    pub rewards: Vec<Vec<f64>>,
}

impl RewardTrajectory {
    pub fn final_stakes(&self) -> Vec<f64> {
        self.stakes.iter().map(|s| *s.last().unwrap()).collect()
    }

    /// Final stake over initial stake, per validator.
    pub fn growth(&self) -> Vec<f64> {
        self.stakes.iter().map(|s| s[s.len() - 1] / s[0]).collect()
    }

    /// `epoch,validator_address,stake`, epoch-major, canonical validator order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "validator_address", "stake"])?;
        for (t, epoch) in self.epochs.iter().enumerate() {
            for (v, addr) in self.addresses.iter().enumerate() {
                w.write_record([epoch.to_string(), addr.clone(), self.stakes[v][t].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Compounds stakes for `epochs` epochs: `s <- s + alpha * w(s)` for every
/// validator above the admission threshold.
///
/// The threshold is re-evaluated from current stakes every epoch. When the
/// set is larger than `cap_m` it is the `cap_m`-th largest stake and that
/// validator earns nothing (strict `s > s_M`); when the cap does not bind no
/// candidate is rejected and every validator is rewarded.
///
/// `annual`, when given, overrides `params.alpha` with the per-epoch rate.
pub fn simulate_rewards(
    snapshot: &ValidatorSnapshot,
    params: &EconParams,
    epochs: usize,
    annual: Option<AnnualRate>,
) -> Result<RewardTrajectory> {
    if epochs == 0 {
        return Err(Error::InvalidHorizon("at least one epoch is required".into()));
    }
    let alpha = match annual {
        Some(a) => {
            if a.epochs_per_year == 0 {
                return Err(Error::InvalidHorizon("epochs per year must be positive".into()));
            }
            if !(a.rate.is_finite() && a.rate > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "annual_rate",
                    reason: format!("must be a positive finite number, got {}", a.rate),
                });
            }
            a.per_epoch()
        }
        None => params.alpha,
    };
    let m = snapshot.len();
    let mut current: Vec<f64> = snapshot.validators().iter().map(|v| biguint_to_f64(&v.stake)).collect();
    let mut stakes: Vec<Vec<f64>> = current.iter().map(|&s| {
        let mut row = Vec::with_capacity(epochs + 1);
        row.push(s);
        row
    }).collect();
    let mut rewards: Vec<Vec<f64>> = vec![Vec::with_capacity(epochs); m];
    let mut sorted = current.clone();

    for _ in 0..epochs {
        let threshold = if m > params.cap_m {
            sorted.clone_from(&current);
            sorted.sort_by(|a, b| b.total_cmp(a));
            sorted[params.cap_m - 1]
        } else {
            0.0
        };
        for (v, s) in current.iter_mut().enumerate() {
            let r = if *s > threshold {
                alpha * weight_of(params.scheme, *s)
            } else {
                0.0
            };
            *s += r;
            rewards[v].push(r);
            stakes[v].push(*s);
        }
    }

    Ok(RewardTrajectory {
        scheme: params.scheme,
        alpha,
        addresses: snapshot.validators().iter().map(|v| v.address.clone()).collect(),
        epochs: (0..=epochs as u64).collect(),
        stakes,
        rewards,
    })
}

fn weight_of(scheme: WeightScheme, stake: f64) -> f64 {
    match scheme {
        WeightScheme::Linear => stake,
        WeightScheme::Srsw => stake.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProposerHistogram {
    pub scheme: WeightScheme,
    pub algorithm: &'static str,
    pub seed: u64,
    pub draws: u64,
    pub addresses: Vec<String>,
    pub counts: Vec<u64>,
    pub expected_share: Vec<f64>,
}

impl ProposerHistogram {
    pub fn empirical_share(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.draws as f64).collect()
    }

    /// `validator_address,count,expected_share` in canonical validator order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["validator_address", "count", "expected_share"])?;
        for ((addr, count), share) in self.addresses.iter().zip(&self.counts).zip(&self.expected_share) {
            w.write_record([addr.clone(), count.to_string(), share.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws `draws` proposers i.i.d. with probability proportional to weight.
pub fn proposer_distribution(ws: &WeightedSet, draws: u64, seed: u64) -> Result<ProposerHistogram> {
    if ws.is_empty() {
        return Err(Error::EmptySet);
    }
    if draws == 0 {
        return Err(Error::InvalidParameter {
            name: "draws",
            reason: "must be at least 1".into(),
        });
    }
    let expected_share: Vec<f64> = (0..ws.len()).map(|i| ws.share(i)).collect();
    let index = WeightedIndex::new(&expected_share).map_err(|e| Error::InvalidParameter {
        name: "weights",
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; ws.len()];
    for _ in 0..draws {
        counts[index.sample(&mut rng)] += 1;
    }
    Ok(ProposerHistogram {
        scheme: ws.scheme(),
        algorithm: PRNG_ALGORITHM,
        seed,
        draws,
        addresses: ws.snapshot().validators().iter().map(|v| v.address.clone()).collect(),
        counts,
        expected_share,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProposerComparison {
    pub linear: ProposerHistogram,
    pub srsw: ProposerHistogram,
    /// Gini of the linear expected-share vector.
    pub linear_share_gini: f64,
    pub srsw_share_gini: f64,
}

/// Runs [`proposer_distribution`] under both schemes with the same seed.
pub fn compare_proposer_concentration(
    snapshot: &ValidatorSnapshot,
    draws: u64,
    seed: u64,
) -> Result<ProposerComparison> {
    let linear = proposer_distribution(&apply_weights(snapshot, WeightScheme::Linear), draws, seed)?;
    let srsw = proposer_distribution(&apply_weights(snapshot, WeightScheme::Srsw), draws, seed)?;
    Ok(ProposerComparison {
        linear_share_gini: gini_of(&linear.expected_share),
        srsw_share_gini: gini_of(&srsw.expected_share),
        linear,
        srsw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use WeightScheme::*;

    fn params(alpha: f64, cap: usize, scheme: WeightScheme) -> EconParams {
        EconParams::new(alpha, cap, 0.0, scheme).unwrap()
    }

    fn snap(stakes: &[u64]) -> ValidatorSnapshot {
        ValidatorSnapshot::from_stakes("t", stakes.iter().copied()).unwrap()
    }

    #[test]
    fn linear_two_epochs() {
        let t = simulate_rewards(&snap(&[100]), &params(0.1, 10, Linear), 2, None).unwrap();
        assert_eq!(t.epochs, vec![0, 1, 2]);
        assert!((t.stakes[0][2] - 121.0).abs() < 1e-9);
    }

    #[test]
    fn srsw_two_epochs() {
        let t = simulate_rewards(&snap(&[100]), &params(0.1, 10, Srsw), 2, None).unwrap();
        assert_eq!(t.stakes[0][1], 101.0);
        // 101 + 0.1 * sqrt(101), mpmath: 102.00498756211208902702
        assert!((t.stakes[0][2] - 102.00498756211209).abs() < 1e-9);
    }

    #[test]
    fn binding_cap_freezes_the_boundary_and_below() {
        // cap 1: s_M is the top stake itself, so nobody earns under a strict test
        let t = simulate_rewards(&snap(&[10, 5, 1]), &params(0.5, 1, Linear), 5, None).unwrap();
        for row in &t.stakes {
            assert!(row.iter().all(|&s| s == row[0]));
        }
        // cap 2: only the top validator is strictly above the 2nd stake
        let t = simulate_rewards(&snap(&[10, 5, 1]), &params(0.5, 2, Linear), 3, None).unwrap();
        assert!((t.stakes[0][3] - 10.0 * 1.5f64.powi(3)).abs() < 1e-9);
        assert_eq!(t.stakes[1][3], 5.0);
        assert_eq!(t.stakes[2][3], 1.0);
    }

    #[test]
    fn annual_rate_is_apportioned() {
        let annual = AnnualRate { rate: 0.045, epochs_per_year: 365 };
        let t = simulate_rewards(&snap(&[1_000_000]), &params(1.0, 10, Linear), 365, Some(annual)).unwrap();
        let expected = (1.0 + 0.045 / 365.0f64).powi(365);
        assert!((t.growth()[0] - expected).abs() < 1e-12);
        assert!((t.alpha - 0.045 / 365.0).abs() < 1e-18);
    }

    #[test]
    fn invalid_horizons() {
        let p = params(0.1, 10, Linear);
        assert!(matches!(simulate_rewards(&snap(&[1]), &p, 0, None), Err(Error::InvalidHorizon(_))));
        let annual = AnnualRate { rate: 0.05, epochs_per_year: 0 };
        assert!(matches!(
            simulate_rewards(&snap(&[1]), &p, 3, Some(annual)),
            Err(Error::InvalidHorizon(_))
        ));
    }

    #[test]
    fn expected_shares() {
        let h = proposer_distribution(&apply_weights(&snap(&[5, 5, 5, 5]), Linear), 10, 1).unwrap();
        assert_eq!(h.expected_share, vec![0.25; 4]);
        let h = proposer_distribution(&apply_weights(&snap(&[3, 1]), Linear), 10, 1).unwrap();
        assert_eq!(h.expected_share, vec![0.75, 0.25]);
        assert_eq!(h.counts.iter().sum::<u64>(), 10);
        assert!(proposer_distribution(&apply_weights(&snap(&[3, 1]), Linear), 0, 1).is_err());
    }

    #[test]
    fn srsw_flattens_proposer_shares() {
        let c = compare_proposer_concentration(&snap(&[100, 1, 1, 1]), 1000, 3).unwrap();
        assert!((c.srsw.expected_share[0] - 10.0 / 13.0).abs() < 1e-12);
        assert!((c.linear.expected_share[0] - 100.0 / 103.0).abs() < 1e-12);
        assert!(c.srsw_share_gini < c.linear_share_gini);
    }

    #[test]
    fn csv_layout() {
        let t = simulate_rewards(&snap(&[4, 1]), &params(0.5, 10, Linear), 1, None).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,validator_address,stake\n0,v0,4\n0,v1,1\n1,v0,6\n1,v1,1.5\n"
        );
        let h = proposer_distribution(&apply_weights(&snap(&[3, 1]), Linear), 4, 9).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("validator_address,count,expected_share\nv0,"));
        assert!(text.ends_with(",0.25\n"));
    }
}
