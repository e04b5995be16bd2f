//! Self-checks of the pair-count bounds: exhaustive dominance over small sets and a
//! Monte Carlo test of the threshold claims used by the post-processing pipelines.

use serde::{Deserialize, Serialize};

use crate::decoy::DecoyBounds;
use crate::error::{Error, Result};
use crate::ledger::EpsLedger;
use crate::pairing_stats::exact::exact_distribution;
use crate::pairing_stats::{
    random_pairing_tallies, wb_iid_bound, wb_uniform_bound, ww_iid_bound, ww_uniform_bound,
    BallSetExact, PairKind,
};
use crate::tail_bounds::FailureProb;
use crate::twcc::{n_uu_lower_bound, oper_counts};

/// Slack allowed for floating-point rounding when comparing probabilities.
pub const DOMINANCE_SLACK: f64 = 1e-12;

/// Fixed white probabilities tried by the uniform checks, besides `k_u / N`.
pub const UNIFORM_WHITE_PROBS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceCheck {
    /// Doubled iid `ww` tail at `p_u = k/N` bounds the exact `ww` tail.
    WwIid,
    /// Doubled iid `wb` tail one step up bounds the exact `wb` tail, `k ≤ N/2`.
    WbIid,
    /// iid `ww` tail over `γ` bounds the exact tail of every `k ≥ k_u`.
    WwUniform,
    /// iid `wb` tail one step up over `γ'` bounds the exact tail of every `k_u ≤ k ≤ N/2`.
    WbUniform,
    /// The exact `ww` tail does not increase with the white count.
    WwMonotone,
    /// The `wb` tail one step up at fewer whites bounds the tail at more, up to `N/2`.
    WbMonotone,
}

impl DominanceCheck {
    pub const ALL: [DominanceCheck; 6] = [
        DominanceCheck::WwIid,
        DominanceCheck::WbIid,
        DominanceCheck::WwUniform,
        DominanceCheck::WbUniform,
        DominanceCheck::WwMonotone,
        DominanceCheck::WbMonotone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DominanceCheck::WwIid => "ww_iid",
            DominanceCheck::WbIid => "wb_iid",
            DominanceCheck::WwUniform => "ww_uniform",
            DominanceCheck::WbUniform => "wb_uniform",
            DominanceCheck::WwMonotone => "ww_monotone",
            DominanceCheck::WbMonotone => "wb_monotone",
        }
    }
}

/// One comparison of an exact failure probability against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub check: DominanceCheck,
    pub total: u64,
    pub white: u64,
    pub threshold: u64,
    pub kind: PairKind,
    pub exact_eps: f64,
    pub bound: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: DominanceCheck,
    pub comparisons: u64,
    pub violations: u64,
    /// Smallest `bound - exact` seen.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub max_total: u64,
    /// Every comparison of the two direct bounds; the other checks are summarized only.
    pub result_rows: Vec<DominanceRow>,
    pub summaries: Vec<CheckSummary>,
    /// Every failed comparison of any check.
    pub violations: Vec<DominanceRow>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self, check: DominanceCheck) -> Option<&CheckSummary> {
        self.summaries.iter().find(|s| s.check == check)
    }
}

struct Tally {
    summaries: Vec<CheckSummary>,
    violations: Vec<DominanceRow>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            summaries: DominanceCheck::ALL
                .iter()
                .map(|&check| CheckSummary {
                    check,
                    comparisons: 0,
                    violations: 0,
                    worst_margin: f64::INFINITY,
                })
                .collect(),
            violations: Vec::new(),
        }
    }

    fn record(&mut self, row: DominanceRow) -> DominanceRow {
        let s = self
            .summaries
            .iter_mut()
            .find(|s| s.check == row.check)
            .expect("every check has a summary");
        s.comparisons += 1;
        s.worst_margin = s.worst_margin.min(row.bound - row.exact_eps);
        if !row.dominated {
            s.violations += 1;
            self.violations.push(row.clone());
        }
        row
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    check: DominanceCheck,
    total: u64,
    white: u64,
    threshold: u64,
    kind: PairKind,
    exact: f64,
    bound: f64,
) -> DominanceRow {
    DominanceRow {
        check,
        total,
        white,
        threshold,
        kind,
        exact_eps: exact,
        bound,
        dominated: exact <= bound + DOMINANCE_SLACK,
    }
}

/// Uniform bounds signal an underflowing `γ` for far-off `p_u`; the bound is then vacuous.
fn uniform_value(b: Result<FailureProb>) -> Result<f64> {
    match b {
        Ok(v) => Ok(v.value()),
        Err(Error::Underflow(_)) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Exact tails `eps[k][t] = P(count < t)` of `[k, N]` for `t = 0..=N/2 + 1`.
fn exact_tails(total: u64, kind: PairKind) -> Result<Vec<Vec<f64>>> {
    (0..=total)
        .map(|k| {
            let d = exact_distribution(&BallSetExact::new(k, total)?, kind);
            Ok((0..=total / 2 + 1).map(|t| d.tail_below(t)).collect())
        })
        .collect()
}

/// Compare every bound with the exact failure probabilities for all even `N ≤ max_total`,
/// all white counts and all thresholds up to `N/2 + 1`.
pub fn dominance_check(max_total: u64) -> Result<DominanceReport> {
    let mut tally = Tally::new();
    let mut result_rows = Vec::new();
    for total in (2..=max_total).step_by(2) {
        let half = total / 2;
        let ww = exact_tails(total, PairKind::WhiteWhite)?;
        let wb = exact_tails(total, PairKind::WhiteBlack)?;
        let thresholds = 0..=half + 1;

        for k in 0..=total {
            let set = BallSetExact::new(k, total)?;
            for t in thresholds.clone() {
                let b = ww_iid_bound(&set, t).value();
                let r = row(
                    DominanceCheck::WwIid,
                    total,
                    k,
                    t,
                    PairKind::WhiteWhite,
                    ww[k as usize][t as usize],
                    b,
                );
                result_rows.push(tally.record(r));
                if k <= half {
                    let b = wb_iid_bound(&set, t)?.value();
                    let r = row(
                        DominanceCheck::WbIid,
                        total,
                        k,
                        t,
                        PairKind::WhiteBlack,
                        wb[k as usize][t as usize],
                        b,
                    );
                    result_rows.push(tally.record(r));
                }
            }
        }

        for t in thresholds.clone() {
            let t_us = t as usize;
            // Suffix maxima of the exact tails: uniform bounds cover every k at or above k_u.
            let mut ww_max = vec![0.0f64; total as usize + 2];
            for k in (0..=total as usize).rev() {
                ww_max[k] = ww_max[k + 1].max(ww[k][t_us]);
            }
            let mut wb_max = vec![0.0f64; half as usize + 2];
            for k in (0..=half as usize).rev() {
                wb_max[k] = wb_max[k + 1].max(wb[k][t_us]);
            }
            for k_u in 0..=total {
                let mut probs = UNIFORM_WHITE_PROBS.to_vec();
                if k_u > 0 && k_u < total {
                    probs.push(k_u as f64 / total as f64);
                }
                for &p_u in &probs {
                    let b = uniform_value(ww_uniform_bound(k_u, total, p_u, t))?;
                    let r = row(
                        DominanceCheck::WwUniform,
                        total,
                        k_u,
                        t,
                        PairKind::WhiteWhite,
                        ww_max[k_u as usize],
                        b,
                    );
                    tally.record(r);
                    if k_u <= half {
                        let b = uniform_value(wb_uniform_bound(k_u, total, p_u, t))?;
                        let r = row(
                            DominanceCheck::WbUniform,
                            total,
                            k_u,
                            t,
                            PairKind::WhiteBlack,
                            wb_max[k_u as usize],
                            b,
                        );
                        tally.record(r);
                    }
                }
            }

            for k1 in 0..=total as usize {
                for k2 in 0..=k1 {
                    let r = row(
                        DominanceCheck::WwMonotone,
                        total,
                        k1 as u64,
                        t,
                        PairKind::WhiteWhite,
                        ww[k1][t_us],
                        ww[k2][t_us],
                    );
                    tally.record(r);
                    if k1 <= half as usize && t_us < ww[k1].len() - 1 {
                        let r = row(
                            DominanceCheck::WbMonotone,
                            total,
                            k1 as u64,
                            t,
                            PairKind::WhiteBlack,
                            wb[k1][t_us],
                            wb[k2][t_us + 1],
                        );
                        tally.record(r);
                    }
                }
            }
        }
    }
    Ok(DominanceReport {
        max_total,
        result_rows,
        summaries: tally.summaries,
        violations: tally.violations,
    })
}

/// Random pairing of a bit string with two untagged classes and one tagged class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingScenario {
    pub bits: u64,
    /// Untagged bits of value 0 and 1.
    pub untagged_zeros: u64,
    pub untagged_ones: u64,
    pub trials: u64,
}

impl Default for PairingScenario {
    fn default() -> Self {
        PairingScenario {
            bits: 10_000,
            untagged_zeros: 3_000,
            untagged_ones: 3_000,
            trials: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairQuantity {
    /// Pairs of two untagged bits.
    UntaggedPairs,
    /// Pairs of two untagged bits of different value.
    OddUntaggedPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub quantity: PairQuantity,
    /// Failure probability requested of each estimate.
    pub target: f64,
    pub threshold: u64,
    /// Union bound over every estimate the threshold relies on.
    pub claimed_eps: f64,
    pub failures: u64,
    pub trials: u64,
    pub frequency: f64,
    pub passed: bool,
}

/// Sample the scenario and compare the frequency of falling below each lower bound
/// with the failure probability claimed for it.
pub fn monte_carlo_check(
    scenario: &PairingScenario,
    targets: &[f64],
    seed: u64,
) -> Result<Vec<MonteCarloCheck>> {
    let untagged = scenario.untagged_zeros + scenario.untagged_ones;
    if untagged > scenario.bits {
        return Err(Error::InvalidArgument(format!(
            "{untagged} untagged bits exceed the {} bits",
            scenario.bits
        )));
    }
    let sizes = [
        scenario.untagged_zeros,
        scenario.untagged_ones,
        scenario.bits - untagged,
    ];
    let tallies = random_pairing_tallies(&sizes, scenario.trials, seed)?;
    let mut out = Vec::new();
    for &target in targets {
        let xi = FailureProb::new(target)?;
        let (n_uu, eps_twcc) = n_uu_lower_bound(scenario.bits, untagged as f64, xi)?;
        let decoy = DecoyBounds {
            mean_s01_lower: 0.0,
            mean_s10_lower: 0.0,
            mean_s1_lower: 0.0,
            n1_lower: untagged as f64,
            n01_lower: scenario.untagged_zeros as f64,
            n10_lower: scenario.untagged_ones as f64,
            e1ph_mean_upper: 0.0,
            m_e_upper: 0.0,
            clamped: false,
            eps_ledger: EpsLedger::new(),
        };
        let counts = oper_counts(n_uu, &decoy, xi, xi)?;
        let claims = [
            (PairQuantity::UntaggedPairs, n_uu, eps_twcc.value()),
            (
                PairQuantity::OddUntaggedPairs,
                counts.n_oper_lower,
                eps_twcc.value() + 2.0 * target + counts.eps_oper.value(),
            ),
        ];
        for (quantity, threshold, claimed) in claims {
            let failures = tallies
                .iter()
                .filter(|t| {
                    let odd = t.get(0, 1, 3) as u64;
                    let count = match quantity {
                        PairQuantity::UntaggedPairs => {
                            t.get(0, 0, 3) as u64 + odd + t.get(1, 1, 3) as u64
                        }
                        PairQuantity::OddUntaggedPairs => odd,
                    };
                    count < threshold
                })
                .count() as u64;
            let frequency = failures as f64 / scenario.trials as f64;
            out.push(MonteCarloCheck {
                quantity,
                target,
                threshold,
                claimed_eps: claimed,
                failures,
                trials: scenario.trials,
                frequency,
                passed: frequency <= claimed,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dominance_has_no_violations() {
        let r = dominance_check(10).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        for s in &r.summaries {
            assert!(s.comparisons > 0, "{:?}", s.check);
        }
        // [2, 4] with threshold 1: exact 2/3 against a clamped bound of 1.
        let row = r
            .result_rows
            .iter()
            .find(|r| {
                r.check == DominanceCheck::WwIid && r.total == 4 && r.white == 2 && r.threshold == 1
            })
            .unwrap();
        assert!((row.exact_eps - 2.0 / 3.0).abs() < 1e-15 && row.bound == 1.0);
    }

    #[test]
    fn small_monte_carlo_respects_claims() {
        let s = PairingScenario {
            bits: 1000,
            untagged_zeros: 300,
            untagged_ones: 300,
            trials: 2000,
        };
        let checks = monte_carlo_check(&s, &[1e-2], 3).unwrap();
        assert_eq!(checks.len(), 2);
        for c in &checks {
            assert!(c.passed, "{c:?}");
            assert!(c.threshold > 0);
        }
        let bad = PairingScenario {
            untagged_zeros: 900,
            ..s
        };
        assert!(monte_carlo_check(&bad, &[1e-2], 3).is_err());
    }
}
