//! Error-rejection post-processing: standard two-way parity checks, odd-parity error
//! rejection with the zigzag phase-error bound, and active odd-parity pairing.

use serde::{Deserialize, Serialize};

use crate::channel_model::ObservedStats;
use crate::decoy::DecoyBounds;
use crate::error::{Error, Result};
use crate::ledger::{EpsBudget, EpsChain, EpsLedger};
use crate::tail_bounds::{
    binom_tail_below, binom_upper_quantile, binomial_threshold_guess, chernoff_upper_from_expected,
    hypergeom_lower_count, largest_threshold, largest_threshold_near, BinomialSpec, FailureProb,
};

/// How phase-error pairs are counted in standard TWCC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PhaseErrorMode {
    /// Every phase error in `V` may sit in its own pair: `n_Ie ≤ m_ve`.
    #[default]
    Strict,
    /// `n_Ie = m_ve - 2 n_ee` with a caller-supplied lower bound on doubly-erroneous pairs.
    Paired { n_ee_lower: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwccBounds {
    /// Even number of Z-window bits entering the random pairing.
    pub n_t: u64,
    pub n_uu_lower: u64,
    /// Achieved `2 ξ_L(n̲_uu; p², n_t/2)`.
    pub eps_twcc: FailureProb,
    /// Phase errors among the `2 n̲_uu` bits of untagged pairs.
    pub m_ve_upper: f64,
    /// Phase-error pairs after the mode's correction.
    pub n_ie_upper: f64,
    pub e_ap_upper: f64,
    pub mode: PhaseErrorMode,
    pub eps_ledger: EpsLedger,
}

/// Even part of a real-valued bit count: drop the fraction and one odd bit.
pub fn even_bits(n_t: f64) -> u64 {
    let n = n_t.max(0.0).floor() as u64;
    n - n % 2
}

/// `(n̲_uu, achieved ε)`: the largest `t` with `2 ξ_L(t; (n̲1/n_t)², n_t/2) ≤ budget`.
pub fn n_uu_lower_bound(
    n_t: u64,
    n1_lower: f64,
    budget: FailureProb,
) -> Result<(u64, FailureProb)> {
    if !n_t.is_multiple_of(2) {
        return Err(Error::Parity(format!("bit count {n_t} is odd")));
    }
    if !(n1_lower >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "untagged count {n1_lower} is negative"
        )));
    }
    let p = (n1_lower / n_t as f64).min(1.0);
    let pairs = n_t / 2;
    if n_t == 0 || p == 0.0 {
        return Ok((0, FailureProb::ZERO));
    }
    let spec = BinomialSpec::new(pairs, p * p)?;
    let bound = |t: u64| 2.0 * binom_tail_below(t, &spec).value();
    let (guess, sd) = binomial_threshold_guess(&spec, budget.value() / 2.0);
    let t = largest_threshold_near(pairs, budget.value(), guess, sd, bound);
    Ok((t, FailureProb::clamped(bound(t))))
}

/// Standard TWCC: untagged pairs and their phase-error rate after rejection.
pub fn standard_twcc(
    stats: &ObservedStats,
    decoy: &DecoyBounds,
    xi_c: FailureProb,
    mode: PhaseErrorMode,
) -> Result<TwccBounds> {
    let n_t = even_bits(stats.n_t);
    let n1 = decoy.n1_lower.min(n_t as f64);
    let (n_uu, eps_twcc) = n_uu_lower_bound(n_t, n1, xi_c)?;
    let mut ledger = decoy.eps_ledger.clone();
    ledger.push("twcc:n_uu", EpsChain::UntaggedCount, xi_c);

    // V holds untagged bits, each with expected phase-error rate at most ē1.
    let expected = if n1 > 0.0 {
        decoy.e1ph_mean_upper.min(1.0) * 2.0 * n_uu as f64
    } else {
        0.0
    };
    let m_ve = chernoff_upper_from_expected(expected, xi_c)?.min(2.0 * n_uu as f64);
    ledger.push("twcc:m_ve", EpsChain::PhaseError, xi_c);

    let n_ie = match mode {
        PhaseErrorMode::Strict => m_ve,
        PhaseErrorMode::Paired { n_ee_lower } => {
            if !(n_ee_lower >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "n_ee lower bound {n_ee_lower} is negative"
                )));
            }
            (m_ve - 2.0 * n_ee_lower).max(0.0)
        }
    };
    let e_ap = if n_uu > 0 {
        (n_ie / n_uu as f64).min(1.0)
    } else {
        0.0
    };
    Ok(TwccBounds {
        n_t,
        n_uu_lower: n_uu,
        eps_twcc,
        m_ve_upper: m_ve,
        n_ie_upper: n_ie,
        e_ap_upper: e_ap,
        mode,
        eps_ledger: ledger,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperCounts {
    /// Untagged 0s and 1s among the `2 n̲_uu` bits of untagged pairs.
    pub n01_prime_lower: f64,
    pub n10_prime_lower: f64,
    pub n_min: u64,
    pub n_oper_lower: u64,
    /// Achieved `2 ξ_L(n̲_oper + 1; 2p(1-p), n̲_uu)` with `p = n_min / 2n̲_uu`.
    pub eps_oper: FailureProb,
}

/// `ε(n̲|...)` for the odd-parity untagged pairs among `n_uu` pairs holding `n_min`
/// bits of the minority value.
pub fn eps_oper_bound(n_uu: u64, n_min: u64, threshold: u64) -> f64 {
    if threshold == 0 {
        return 0.0;
    }
    match oper_spec(n_uu, n_min) {
        Some(spec) => (2.0 * binom_tail_below(threshold + 1, &spec).value()).min(1.0),
        None => 1.0,
    }
}

fn oper_spec(n_uu: u64, n_min: u64) -> Option<BinomialSpec> {
    let p = n_min as f64 / (2.0 * n_uu as f64);
    BinomialSpec::new(n_uu, (2.0 * p * (1.0 - p)).clamp(0.0, 1.0)).ok()
}

/// Lower bounds on untagged bit values inside untagged pairs and on the odd-parity pairs.
pub fn oper_counts(
    n_uu_lower: u64,
    decoy: &DecoyBounds,
    xi_h: FailureProb,
    xi_c: FailureProb,
) -> Result<OperCounts> {
    if n_uu_lower == 0 {
        return Err(Error::Precondition("no untagged pairs".into()));
    }
    let draws = 2.0 * n_uu_lower as f64;
    let n1 = decoy.n1_lower.max(draws);
    let n01 = hypergeom_lower_count(decoy.n01_lower.min(n1), n1, draws, xi_h)?.max(0.0);
    let n10 = hypergeom_lower_count(decoy.n10_lower.min(n1), n1, draws, xi_h)?.max(0.0);
    let n_min = n01.min(n10).floor() as u64;
    let (n_oper, eps) = if n_min == 0 {
        (0, 0.0)
    } else {
        let bound = |t: u64| eps_oper_bound(n_uu_lower, n_min, t);
        let t = match oper_spec(n_uu_lower, n_min) {
            Some(spec) => {
                let (guess, sd) = binomial_threshold_guess(&spec, xi_c.value() / 2.0);
                largest_threshold_near(n_min, xi_c.value(), guess, sd, bound)
            }
            None => largest_threshold(n_min, xi_c.value(), bound),
        };
        (t, bound(t))
    };
    Ok(OperCounts {
        n01_prime_lower: n01,
        n10_prime_lower: n10,
        n_min,
        n_oper_lower: n_oper,
        eps_oper: FailureProb::clamped(eps),
    })
}

/// Which pairs of iid qubits the zigzag binomial ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZigzagPairs {
    /// Every pair of iid qubits, `⌊(M - r)/2⌋`.
    All,
    /// Only odd-parity pairs of iid qubits, at least `n̲_oper - r` of them. Bit parity
    /// commutes with the pair phase error, and for any product state the phase-error
    /// probability conditioned on odd parity is at most the unconditioned `2p(1 - p)`.
    #[default]
    OddParity,
}

/// The chain of failure probabilities behind the post-rejection phase-error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZigzagChain {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZigzagBound {
    pub qubits: u64,
    pub r: u64,
    pub dd_pairs: u64,
    pub p_e: f64,
    pub m_s_upper: u64,
    pub m_odd_upper: u64,
    pub chain: ZigzagChain,
}

/// `⌈√M⌉`, the default size of the non-iid remainder.
pub fn default_r(qubits: u64) -> u64 {
    (qubits as f64).sqrt().ceil() as u64
}

/// Phase errors after odd-parity rejection on `qubits` untagged qubits carrying at most
/// `m_e_upper` phase errors, with `dd_pairs` pairs of iid qubits.
pub fn zigzag_phase_bound(
    qubits: u64,
    r: u64,
    dd_pairs: u64,
    m_e_upper: f64,
    eps1: f64,
    eps2: FailureProb,
    eps5: FailureProb,
) -> Result<ZigzagBound> {
    if r >= qubits {
        return Err(Error::Precondition(format!(
            "remainder {r} must be below the qubit count {qubits}"
        )));
    }
    if !(m_e_upper >= 0.0 && m_e_upper <= qubits as f64) {
        return Err(Error::InvalidArgument(format!(
            "phase-error bound {m_e_upper} outside [0, {qubits}]"
        )));
    }
    if dd_pairs > (qubits - r) / 2 {
        return Err(Error::InvalidArgument(format!(
            "{dd_pairs} pairs exceed the {} iid qubits",
            qubits - r
        )));
    }
    let p_e = (m_e_upper / (qubits - r) as f64).min(1.0);
    // 2p(1-p) peaks at one half; an upper bound beyond it says nothing more.
    let p = p_e.min(0.5);
    let spec = BinomialSpec::new(dd_pairs, 2.0 * p * (1.0 - p))?;
    let m_s = binom_upper_quantile(&spec, eps5)?;
    let eps3 = eps1 + eps2.value();
    Ok(ZigzagBound {
        qubits,
        r,
        dd_pairs,
        p_e,
        m_s_upper: m_s,
        m_odd_upper: m_s + r,
        chain: ZigzagChain {
            eps1,
            eps2: eps2.value(),
            eps3,
            eps4: 2.0 * eps3,
            eps5: eps5.value(),
            eps6: eps5.value() + eps2.value(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperBounds {
    pub twcc: TwccBounds,
    pub counts: OperCounts,
    /// `None` when no odd-parity untagged pair is certified.
    pub zigzag: Option<ZigzagBound>,
    pub m_oper_upper: f64,
    pub e_ph_upper: f64,
    pub eps_ledger: EpsLedger,
}

/// Odd-parity error rejection on top of the standard untagged-pair bound.
pub fn oper(
    stats: &ObservedStats,
    decoy: &DecoyBounds,
    budget: &EpsBudget,
    pairs: ZigzagPairs,
) -> Result<OperBounds> {
    let twcc = standard_twcc(stats, decoy, budget.xi_c, PhaseErrorMode::Strict)?;
    let mut ledger = twcc.eps_ledger.clone();
    ledger.push("oper:n01_prime", EpsChain::UntaggedCount, budget.xi_h);
    ledger.push("oper:n10_prime", EpsChain::UntaggedCount, budget.xi_h);
    ledger.push("oper:n_oper", EpsChain::UntaggedCount, budget.xi_c);
    let counts = if twcc.n_uu_lower > 0 {
        oper_counts(twcc.n_uu_lower, decoy, budget.xi_h, budget.xi_c)?
    } else {
        OperCounts {
            n01_prime_lower: 0.0,
            n10_prime_lower: 0.0,
            n_min: 0,
            n_oper_lower: 0,
            eps_oper: FailureProb::ZERO,
        }
    };

    // ε1 covers every estimate feeding the phase-error count of the untagged pairs.
    let eps1: f64 = ledger
        .entries()
        .iter()
        .filter(|e| e.chain == Some(EpsChain::PhaseError))
        .map(|e| e.value.value())
        .sum();
    let qubits = 2 * twcc.n_uu_lower;
    let r = budget.definetti_r.unwrap_or_else(|| default_r(qubits));
    let zigzag = if counts.n_oper_lower > 0 && r < qubits {
        let dd = match pairs {
            ZigzagPairs::All => (qubits - r) / 2,
            ZigzagPairs::OddParity => counts.n_oper_lower.saturating_sub(r),
        };
        Some(zigzag_phase_bound(
            qubits,
            r,
            dd,
            twcc.m_ve_upper,
            eps1,
            budget.eps2,
            budget.eps5,
        )?)
    } else {
        None
    };
    let chain = zigzag.map(|z| z.chain).unwrap_or(ZigzagChain {
        eps1,
        eps2: budget.eps2.value(),
        eps3: eps1 + budget.eps2.value(),
        eps4: 2.0 * (eps1 + budget.eps2.value()),
        eps5: budget.eps5.value(),
        eps6: budget.eps5.value() + budget.eps2.value(),
    });
    for (label, v) in [
        ("zigzag:eps2", chain.eps2),
        ("zigzag:eps3", chain.eps3),
        ("zigzag:eps4", chain.eps4),
        ("zigzag:eps5", chain.eps5),
        ("zigzag:eps6", chain.eps6),
    ] {
        ledger.push(label, EpsChain::PhaseError, FailureProb::clamped(v));
    }

    let n_oper = counts.n_oper_lower as f64;
    let m_oper = zigzag.map_or(0.0, |z| (z.m_odd_upper as f64).min(n_oper));
    let e_ph = if n_oper > 0.0 { m_oper / n_oper } else { 0.0 };
    Ok(OperBounds {
        twcc,
        counts,
        zigzag,
        m_oper_upper: m_oper,
        e_ph_upper: e_ph,
        eps_ledger: ledger,
    })
}

/// How the bits consumed by each active-pairing subset are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AoppBits {
    /// Random grouping yields an odd pair with probability `2 N0 N1 / n_t²`, and every
    /// pair uses two bits: `ñ_t = ñ_g n_t² / (N0 N1)`.
    #[default]
    Grouping,
    /// `ñ_t = ñ_g n_t² / (2 N0 N1)`, the number of pairs rather than bits.
    HalfGrouping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoppPlan {
    /// Odd-parity pairs in each subset.
    pub n_g_tilde: u64,
    /// Bits an ordinary random grouping would use to produce one subset.
    pub n_t_tilde: f64,
    pub subsets: u32,
}

impl AoppPlan {
    pub fn is_empty(&self) -> bool {
        self.n_g_tilde == 0
    }

    /// Share of the Z-window bits each subset stands for.
    pub fn fraction(&self, n_t: f64) -> f64 {
        if n_t > 0.0 {
            (self.n_t_tilde / n_t).min(1.0)
        } else {
            0.0
        }
    }
}

/// Bits a random grouping of `n_t` bits (`n0` zeros, `n1` ones) uses to form `n_g`
/// odd-parity pairs.
pub fn aopp_subset_bits(n_g: u64, n_t: f64, n0: f64, n1: f64, bits: AoppBits) -> f64 {
    let grouped = n_g as f64 * n_t * n_t / (n0 * n1);
    match bits {
        AoppBits::Grouping => grouped,
        AoppBits::HalfGrouping => grouped / 2.0,
    }
}

/// Split the actively paired odd-parity pairs into two equal subsets.
pub fn aopp_plan_from_counts(n_t: f64, n0: f64, n1: f64, bits: AoppBits) -> AoppPlan {
    let minority = n0.min(n1).max(0.0).floor() as u64;
    let n_g = (minority - minority % 2) / 2;
    if n_g == 0 {
        return AoppPlan {
            n_g_tilde: 0,
            n_t_tilde: 0.0,
            subsets: 2,
        };
    }
    AoppPlan {
        n_g_tilde: n_g,
        n_t_tilde: aopp_subset_bits(n_g, n_t, n0, n1, bits).min(n_t),
        subsets: 2,
    }
}

pub fn aopp_plan(stats: &ObservedStats, bits: AoppBits) -> AoppPlan {
    aopp_plan_from_counts(stats.n_t, stats.n0, stats.n1, bits)
}
