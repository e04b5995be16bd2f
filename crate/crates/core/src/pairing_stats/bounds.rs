//! Failure probabilities of pair-count lower bounds and their binomial dominators.

use super::exact::exact_distribution;
use super::{BallSet, BallSetExact, BallSetIid, PairKind};
use crate::error::{Error, Result};
use crate::tail_bounds::{binom_tail_below, BinomialSpec, FailureProb};

/// Largest iid set evaluated through the exact `p̃(m)` mixture.
pub const IID_MIXTURE_MAX_TOTAL: u64 = 64;

fn pair_prob(kind: PairKind, p: f64) -> f64 {
    match kind {
        PairKind::WhiteWhite => p * p,
        PairKind::WhiteBlack => 2.0 * p * (1.0 - p),
    }
}

/// `ξ_L(threshold; P, N/2)` with `P = p²` or `2p(1-p)`: the iid pair counts are binomial.
fn iid_pair_tail(threshold: u64, kind: PairKind, p: f64, pairs: u64) -> f64 {
    let prob = pair_prob(kind, p).clamp(0.0, 1.0);
    match BinomialSpec::new(pairs, prob) {
        Ok(spec) => binom_tail_below(threshold, &spec).value(),
        Err(_) => 1.0,
    }
}

/// `ε(n̲|set)`: probability that fewer than `threshold` pairs of `kind` form.
pub fn eps_pairs(threshold: u64, kind: PairKind, set: impl Into<BallSet>) -> FailureProb {
    if threshold == 0 {
        return FailureProb::ZERO;
    }
    let v = match set.into() {
        BallSet::Exact(s) => exact_distribution(&s, kind).tail_below(threshold),
        BallSet::Iid(s) if s.total() <= IID_MIXTURE_MAX_TOTAL => iid_mixture(threshold, kind, &s),
        BallSet::Iid(s) => iid_pair_tail(threshold, kind, s.white_prob(), s.pairs()),
    };
    FailureProb::clamped(v)
}

fn iid_mixture(threshold: u64, kind: PairKind, set: &BallSetIid) -> f64 {
    (0..=set.total())
        .map(|m| {
            let w = set.mixture_weight(m);
            if w == 0.0 {
                return 0.0;
            }
            let exact = BallSetExact {
                white: m,
                total: set.total(),
            };
            w * exact_distribution(&exact, kind).tail_below(threshold)
        })
        .sum()
}

/// Doubled iid tail with `p_u = k/N`, bounding `ε(n̲_ww|[k, N])`.
pub fn ww_iid_bound(set: &BallSetExact, min_ww: u64) -> FailureProb {
    if min_ww == 0 {
        return FailureProb::ZERO;
    }
    let tail = iid_pair_tail(
        min_ww,
        PairKind::WhiteWhite,
        set.white_fraction(),
        set.pairs(),
    );
    FailureProb::clamped(2.0 * tail)
}

/// Doubled iid tail at `n̲_wb + 1` with `p_u = k/N`, bounding `ε(n̲_wb|[k, N])`.
/// Requires `k ≤ N/2`.
pub fn wb_iid_bound(set: &BallSetExact, min_wb: u64) -> Result<FailureProb> {
    if set.white() > set.pairs() {
        return Err(Error::Precondition(format!(
            "white count {} exceeds half of {}",
            set.white(),
            set.total()
        )));
    }
    let tail = iid_pair_tail(
        min_wb + 1,
        PairKind::WhiteBlack,
        set.white_fraction(),
        set.pairs(),
    );
    Ok(FailureProb::clamped(2.0 * tail))
}

/// `γ = Σ_{m ≤ k_u} p̃(m)`, the probability that an iid set has at most `k_u` white balls.
fn gamma_iid(k_u: u64, total: u64, p_u: f64) -> Result<f64> {
    let spec = BinomialSpec::new(total, p_u)?;
    let g = binom_tail_below(k_u.saturating_add(1), &spec).value();
    if g <= 0.0 {
        return Err(Error::Underflow(format!(
            "P[Bin({total}, {p_u}) <= {k_u}] underflows to zero"
        )));
    }
    Ok(g)
}

fn check_uniform_args(total: u64, p_u: f64) -> Result<()> {
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::InvalidSet(format!(
            "total {total} must be positive and even"
        )));
    }
    if !(p_u > 0.0 && p_u < 1.0) {
        return Err(Error::Precondition(format!(
            "p_u = {p_u} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `ε(n̲_ww|[p_u, N]_iid) / γ`, bounding `ε(n̲_ww|[k, N])` for every `k ≥ k_u`.
pub fn ww_uniform_bound(k_u: u64, total: u64, p_u: f64, min_ww: u64) -> Result<FailureProb> {
    check_uniform_args(total, p_u)?;
    let gamma = gamma_iid(k_u, total, p_u)?;
    let tail = iid_pair_tail(min_ww, PairKind::WhiteWhite, p_u, total / 2);
    Ok(FailureProb::clamped(tail / gamma))
}

/// `ε(n̲_wb + 1|[p_u, N]_iid) / γ'`, bounding `ε(n̲_wb|[k_u, N])`. Requires `k_u ≤ N/2`.
pub fn wb_uniform_bound(k_u: u64, total: u64, p_u: f64, min_wb: u64) -> Result<FailureProb> {
    check_uniform_args(total, p_u)?;
    if k_u > total / 2 {
        return Err(Error::Precondition(format!(
            "k_u = {k_u} exceeds half of {total}"
        )));
    }
    let gamma = gamma_iid(k_u, total, p_u)?;
    let tail = iid_pair_tail(min_wb + 1, PairKind::WhiteBlack, p_u, total / 2);
    Ok(FailureProb::clamped(tail / gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(k: u64, n: u64) -> BallSetExact {
        BallSetExact::new(k, n).unwrap()
    }

    #[test]
    fn eps_small_cases() {
        let e = eps_pairs(1, PairKind::WhiteWhite, set(2, 4)).value();
        assert!((e - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(eps_pairs(0, PairKind::WhiteBlack, set(2, 4)).value(), 0.0);
        assert_eq!(eps_pairs(1, PairKind::WhiteBlack, set(1, 4)).value(), 0.0);
    }

    #[test]
    fn iid_mixture_equals_pair_binomial() {
        for &p in &[0.1, 0.37, 0.5, 0.8] {
            let s = BallSetIid::new(p, 40).unwrap();
            for kind in [PairKind::WhiteWhite, PairKind::WhiteBlack] {
                for t in 0..=21 {
                    let mix = eps_pairs(t, kind, s).value();
                    let bin = iid_pair_tail(t, kind, p, 20);
                    let bin = if t == 0 { 0.0 } else { bin };
                    assert!(
                        (mix - bin).abs() < 1e-12,
                        "p={p} {kind} t={t}: {mix} vs {bin}"
                    );
                }
            }
        }
    }

    #[test]
    fn result_bounds_small_cases() {
        assert_eq!(ww_iid_bound(&set(2, 4), 1).value(), 1.0);
        assert_eq!(ww_iid_bound(&set(2, 4), 0).value(), 0.0);
        assert_eq!(ww_iid_bound(&set(6, 6), 3).value(), 0.0);
        // 2 ξ_L(2; 0.375, 2) = 1.72 clamps to 1.
        let b = wb_iid_bound(&set(1, 4), 1).unwrap().value();
        assert_eq!(b, 1.0);
        assert_eq!(wb_iid_bound(&set(1, 4), 5).unwrap().value(), 1.0);
        assert!(wb_iid_bound(&set(3, 4), 0).is_err());
    }

    #[test]
    fn uniform_bounds() {
        assert!(ww_uniform_bound(2, 4, 0.0, 1).is_err());
        assert!(wb_uniform_bound(3, 4, 0.5, 1).is_err());
        // γ = 1 when k_u = N.
        let b = ww_uniform_bound(4, 4, 0.5, 1).unwrap().value();
        assert!((b - iid_pair_tail(1, PairKind::WhiteWhite, 0.5, 2)).abs() < 1e-15);
        // At p_u = k_u/N the median argument gives γ ≥ 1/2.
        for k in 0..=40 {
            let r = ww_iid_bound(&set(k, 40), 5).value();
            if k > 0 && k < 40 {
                let t = ww_uniform_bound(k, 40, k as f64 / 40.0, 5).unwrap().value();
                assert!(t <= r + 1e-15, "k={k}: {t} > {r}");
            }
        }
    }
}
