//! Exact law of the `wb` and `ww` pair counts of `[k, N]`.

use super::{BallSetExact, PairCountDistribution, PairKind};
use crate::error::{Error, Result};

/// `ln(i!)` for `i = 0..=n`, accumulated with compensation.
fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for i in 1..=n {
        let x = (i as f64).ln();
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Closed form for an even white count `2K` over `N = 2n` balls:
/// `P(2l) = C(n, K-l) C(n-K+l, 2l) (2K)! (2n-2K)! 4^l / (2n)!`.
fn closed_form_even(half_white: u64, half_total: u64) -> Vec<f64> {
    let (kk, n) = (half_white, half_total);
    let lf = ln_factorials(2 * n);
    let ln_c = |a: u64, b: u64| lf[a as usize] - lf[b as usize] - lf[(a - b) as usize];
    let common = lf[(2 * kk) as usize] + lf[(2 * n - 2 * kk) as usize] - lf[(2 * n) as usize];
    let l_max = kk.min(n - kk);
    let mut probs = vec![0.0; (2 * l_max + 1) as usize];
    for l in 0..=l_max {
        let ln_p = ln_c(n, kk - l)
            + ln_c(n - kk + l, 2 * l)
            + common
            + (2 * l) as f64 * std::f64::consts::LN_2;
        probs[(2 * l) as usize] = ln_p.exp();
    }
    probs
}

/// One application of the recursion: from `white` to `white + 1` white balls.
///
/// A black ball is turned white. If it sat in a `wb` pair that pair becomes `ww`,
/// otherwise a `bb` pair becomes `wb`:
/// `P'(c) = P(c-1) (N - w - (c-1)) / (N - w) + P(c+1) (c+1) / (N - w)`.
fn recursion_step(prev: &[f64], white: u64, total: u64) -> Vec<f64> {
    let blacks = (total - white) as f64;
    let len = (white + 1).min(total - white - 1) as usize + 1;
    let mut next = vec![0.0; len];
    for (c, slot) in next.iter_mut().enumerate() {
        let mut p = 0.0;
        if c >= 1 {
            if let Some(&q) = prev.get(c - 1) {
                p += q * (blacks - (c - 1) as f64) / blacks;
            }
        }
        if let Some(&q) = prev.get(c + 1) {
            p += q * (c + 1) as f64 / blacks;
        }
        *slot = p;
    }
    next
}

/// Law of the number of `wb` pairs of `[k, N]`.
///
/// Even `k` uses the closed form directly; odd `k` applies one recursion step to the
/// closed form at `k - 1`.
pub fn exact_wb_distribution(set: &BallSetExact) -> PairCountDistribution {
    let (k, total) = (set.white(), set.total());
    let probs = if k % 2 == 0 {
        closed_form_even(k / 2, total / 2)
    } else {
        recursion_step(&closed_form_even(k / 2, total / 2), k - 1, total)
    };
    PairCountDistribution::new(PairKind::WhiteBlack, probs)
}

/// Same law as [`exact_wb_distribution`], built by the recursion from the all-black set.
pub fn exact_wb_distribution_recursive(set: &BallSetExact) -> PairCountDistribution {
    let mut probs = vec![1.0];
    for w in 0..set.white() {
        probs = recursion_step(&probs, w, set.total());
    }
    PairCountDistribution::new(PairKind::WhiteBlack, probs)
}

/// Re-index a `wb` law as a `ww` law via `n_ww = (k - n_wb) / 2`.
pub fn ww_distribution_from_wb(
    set: &BallSetExact,
    wb: &PairCountDistribution,
) -> Result<PairCountDistribution> {
    if wb.kind() != PairKind::WhiteBlack {
        return Err(Error::InvalidArgument("expected a wb distribution".into()));
    }
    let k = set.white();
    for (c, &p) in wb.probs().iter().enumerate() {
        if p != 0.0 && (c as u64 > k || !(k - c as u64).is_multiple_of(2)) {
            return Err(Error::Parity(format!(
                "{c} wb pairs carry mass {p:e} but are incompatible with {k} white balls"
            )));
        }
    }
    Ok(reindex_ww(k, wb))
}

pub(crate) fn reindex_ww(k: u64, wb: &PairCountDistribution) -> PairCountDistribution {
    let mut probs = vec![0.0; (k / 2) as usize + 1];
    for (c, &p) in wb.probs().iter().enumerate() {
        let c = c as u64;
        if c <= k && (k - c).is_multiple_of(2) {
            probs[((k - c) / 2) as usize] += p;
        }
    }
    PairCountDistribution::new(PairKind::WhiteWhite, probs)
}

/// Exact law of the requested pair kind for `[k, N]`.
pub fn exact_distribution(set: &BallSetExact, kind: PairKind) -> PairCountDistribution {
    let wb = exact_wb_distribution(set);
    match kind {
        PairKind::WhiteBlack => wb,
        PairKind::WhiteWhite => reindex_ww(set.white(), &wb),
    }
}
