//! Brute-force enumeration of all perfect matchings, as an oracle for tiny sets.

use super::BallSetExact;
use crate::error::{Error, Result};

/// Largest set accepted by [`enumerate_wb_counts`] (10395 matchings).
pub const MAX_ENUMERATION_TOTAL: u64 = 12;

/// Number of perfect matchings of `[k, N]` with exactly `c` white-black pairs,
/// indexed by `c`. Balls `0..k` are white. The entries sum to `(N-1)!!`.
pub fn enumerate_wb_counts(set: &BallSetExact) -> Result<Vec<u64>> {
    if set.total() > MAX_ENUMERATION_TOTAL {
        return Err(Error::InvalidArgument(format!(
            "enumeration is limited to N <= {MAX_ENUMERATION_TOTAL}"
        )));
    }
    let n = set.total() as usize;
    let k = set.white() as usize;
    let mut counts = vec![0u64; n / 2 + 1];
    let mut used = vec![false; n];
    walk(&mut used, k, 0, &mut counts);
    Ok(counts)
}

fn walk(used: &mut [bool], k: usize, wb: usize, counts: &mut [u64]) {
    let Some(first) = used.iter().position(|u| !u) else {
        counts[wb] += 1;
        return;
    };
    used[first] = true;
    for other in first + 1..used.len() {
        if used[other] {
            continue;
        }
        used[other] = true;
        let mixed = usize::from((first < k) != (other < k));
        walk(used, k, wb + mixed, counts);
        used[other] = false;
    }
    used[first] = false;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        let s = BallSetExact::new(2, 4).unwrap();
        assert_eq!(enumerate_wb_counts(&s).unwrap(), vec![1, 0, 2]);
        let s = BallSetExact::new(3, 6).unwrap();
        assert_eq!(enumerate_wb_counts(&s).unwrap().iter().sum::<u64>(), 15);
        let s = BallSetExact::new(5, 12).unwrap();
        assert_eq!(enumerate_wb_counts(&s).unwrap().iter().sum::<u64>(), 10395);
        assert!(enumerate_wb_counts(&BallSetExact::new(2, 14).unwrap()).is_err());
    }
}
