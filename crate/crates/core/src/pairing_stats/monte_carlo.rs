//! Seeded Monte Carlo of random adjacent pairing.
//!
//! Trials are split into fixed-size blocks; block `b` draws from a ChaCha8 stream `b`
//! of the user seed, so results do not depend on the number of worker threads.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BallSetExact, PairCountDistribution, PairKind};
use crate::error::{Error, Result};

const BLOCK: u64 = 256;

/// Index of the unordered class pair `(i, j)` among `classes` classes.
pub fn class_pair_index(i: usize, j: usize, classes: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * classes - a * (a + 1) / 2 + b
}

/// Pair counts of one trial, indexed by [`class_pair_index`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTally {
    pub counts: Vec<u32>,
}

impl PairTally {
    pub fn get(&self, i: usize, j: usize, classes: usize) -> u32 {
        self.counts[class_pair_index(i, j, classes)]
    }
}

/// Shuffle a ball population with the given class sizes and tally adjacent pairs, per trial.
pub fn random_pairing_tallies(
    class_sizes: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<PairTally>> {
    let total: u64 = class_sizes.iter().sum();
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::InvalidSet(format!(
            "population size {total} must be positive and even"
        )));
    }
    if class_sizes.len() > u8::MAX as usize {
        return Err(Error::InvalidArgument("too many classes".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let classes = class_sizes.len();
    let base: Vec<u8> = class_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c as u8, n as usize))
        .collect();
    let n_pairs = classes * (classes + 1) / 2;
    let blocks = trials.div_ceil(BLOCK);
    let per_block: Vec<Vec<PairTally>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut balls = base.clone();
            let count = BLOCK.min(trials - b * BLOCK);
            (0..count)
                .map(|_| {
                    balls.shuffle(&mut rng);
                    let mut counts = vec![0u32; n_pairs];
                    for pair in balls.chunks_exact(2) {
                        counts[class_pair_index(pair[0] as usize, pair[1] as usize, classes)] += 1;
                    }
                    PairTally { counts }
                })
                .collect()
        })
        .collect();
    Ok(per_block.into_iter().flatten().collect())
}

/// Empirical pair-count histograms of a Monte Carlo run over `[k, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPairing {
    pub trials: u64,
    pub ww_histogram: Vec<u64>,
    pub wb_histogram: Vec<u64>,
}

impl EmpiricalPairing {
    pub fn histogram(&self, kind: PairKind) -> &[u64] {
        match kind {
            PairKind::WhiteWhite => &self.ww_histogram,
            PairKind::WhiteBlack => &self.wb_histogram,
        }
    }

    /// Relative frequencies as a distribution.
    pub fn frequencies(&self, kind: PairKind) -> PairCountDistribution {
        let n = self.trials as f64;
        PairCountDistribution::new(
            kind,
            self.histogram(kind).iter().map(|&c| c as f64 / n).collect(),
        )
    }
}

/// Monte Carlo of `[k, N]`: Fisher-Yates shuffle, then adjacent pairing.
pub fn mc_random_pairing(set: &BallSetExact, trials: u64, seed: u64) -> Result<EmpiricalPairing> {
    let sizes = [set.white(), set.total() - set.white()];
    let tallies = random_pairing_tallies(&sizes, trials, seed)?;
    let k = set.white() as usize;
    let mut ww_histogram = vec![0u64; k / 2 + 1];
    let mut wb_histogram = vec![0u64; k.min(set.total() as usize - k) + 1];
    for t in &tallies {
        ww_histogram[t.get(0, 0, 2) as usize] += 1;
        wb_histogram[t.get(0, 1, 2) as usize] += 1;
    }
    Ok(EmpiricalPairing {
        trials,
        ww_histogram,
        wb_histogram,
    })
}
