//! Statistics of random pairwise grouping of white and black balls.
//!
//! A set of `N` balls (N even) is shuffled and cut into `N/2` adjacent pairs. The
//! quantities of interest are the number of white-white (`ww`) and white-black (`wb`)
//! pairs, which model untagged-untagged pairs in standard two-way post-processing and
//! odd-parity pairs in odd-parity error rejection. Two kinds of input set exist:
//! an exact set `[k, N]` with a fixed white count, and an iid set `[p_u, N]` where each
//! ball is white independently.
//!
//! [`exact`] computes the pair-count law of `[k, N]` (closed form and recursion),
//! [`bounds`] the binomial bounds that dominate it, [`monte_carlo`] a seeded sampler,
//! and [`enumerate`] a brute-force oracle over all perfect matchings for tiny sets.

pub mod bounds;
pub mod enumerate;
pub mod exact;
pub mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bounds::{eps_pairs, wb_iid_bound, wb_uniform_bound, ww_iid_bound, ww_uniform_bound};
pub use exact::{exact_wb_distribution, exact_wb_distribution_recursive, ww_distribution_from_wb};
pub use monte_carlo::{mc_random_pairing, random_pairing_tallies, EmpiricalPairing, PairTally};

/// `[k, N]`: `N` balls of which exactly `k` are white.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallSetExact {
    white: u64,
    total: u64,
}

impl BallSetExact {
    pub fn new(white: u64, total: u64) -> Result<Self> {
        check_total(total)?;
        if white > total {
            return Err(Error::InvalidSet(format!(
                "white count {white} exceeds total {total}"
            )));
        }
        Ok(BallSetExact { white, total })
    }

    pub fn white(&self) -> u64 {
        self.white
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn pairs(&self) -> u64 {
        self.total / 2
    }

    pub fn white_fraction(&self) -> f64 {
        self.white as f64 / self.total as f64
    }
}

/// `[p_u, N]_iid`: `N` balls, each white independently with probability `p_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSetIid {
    white_prob: f64,
    total: u64,
}

impl BallSetIid {
    pub fn new(white_prob: f64, total: u64) -> Result<Self> {
        check_total(total)?;
        if !(0.0..=1.0).contains(&white_prob) {
            return Err(Error::InvalidSet(format!(
                "white probability {white_prob} outside [0, 1]"
            )));
        }
        Ok(BallSetIid { white_prob, total })
    }

    pub fn white_prob(&self) -> f64 {
        self.white_prob
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn pairs(&self) -> u64 {
        self.total / 2
    }

    /// Mixture weight `p̃(m) = C(N, m) p_u^m (1 - p_u)^{N-m}` of the exact set `[m, N]`.
    pub fn mixture_weight(&self, white: u64) -> f64 {
        let p = self.white_prob;
        if white > self.total {
            return 0.0;
        }
        if p <= 0.0 {
            return if white == 0 { 1.0 } else { 0.0 };
        }
        if p >= 1.0 {
            return if white == self.total { 1.0 } else { 0.0 };
        }
        crate::tail_bounds::ln_binom_pmf(white, self.total, p, 1.0 - p).exp()
    }
}

fn check_total(total: u64) -> Result<()> {
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::InvalidSet(format!(
            "total ball count must be positive and even, got {total}"
        )));
    }
    Ok(())
}

/// Either kind of input set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BallSet {
    Exact(BallSetExact),
    Iid(BallSetIid),
}

impl From<BallSetExact> for BallSet {
    fn from(s: BallSetExact) -> Self {
        BallSet::Exact(s)
    }
}

impl From<BallSetIid> for BallSet {
    fn from(s: BallSetIid) -> Self {
        BallSet::Iid(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// Two white balls.
    #[serde(rename = "ww")]
    WhiteWhite,
    /// One white and one black ball.
    #[serde(rename = "wb")]
    WhiteBlack,
}

impl std::fmt::Display for PairKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairKind::WhiteWhite => f.write_str("ww"),
            PairKind::WhiteBlack => f.write_str("wb"),
        }
    }
}

/// Law of the number of pairs of one kind; `probs[c]` is `P(count = c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCountDistribution {
    kind: PairKind,
    probs: Vec<f64>,
}

impl PairCountDistribution {
    pub fn new(kind: PairKind, probs: Vec<f64>) -> Self {
        PairCountDistribution { kind, probs }
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, count: u64) -> f64 {
        self.probs.get(count as usize).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P(count < threshold)`.
    pub fn tail_below(&self, threshold: u64) -> f64 {
        let end = (threshold as usize).min(self.probs.len());
        self.probs[..end].iter().sum::<f64>().min(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(c, p)| c as f64 * p)
            .sum()
    }
}
