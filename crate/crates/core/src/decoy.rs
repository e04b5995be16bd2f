//! Decoy-state bounds on untagged counts and on the phase-flip error rate.
//!
//! Every counting rate enters through a Chernoff interval on its expectation, taken in
//! the direction that makes the final bound conservative. Each conversion consumes one
//! planned entry of the [`ConversionPlan`] and one ledger entry.

use serde::{Deserialize, Serialize};

use crate::channel_model::{
    expected_to_observed_ledger, security_constraint_residual, ConversionPlan, Direction,
    Intensity, ObservedStats, ProtocolParams, Quantity, SideParams, SECURITY_CONSTRAINT_TOL,
};
use crate::error::{Error, Result};
use crate::ledger::{EpsChain, EpsLedger};
use crate::tail_bounds::{
    chernoff_expected_bounds_from_observed, chernoff_lower_from_expected,
    chernoff_upper_from_expected, FailureProb,
};

/// Ledger label of the phase-error count bound on the untagged bits.
pub const M_E_LABEL: &str = "decoy:m_e";

/// Bounds on the expected counting rates consumed by the decoy formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub s_ox_lower: f64,
    pub s_oy_upper: f64,
    pub s_xo_lower: f64,
    pub s_yo_upper: f64,
    pub s_oo_upper: f64,
    pub s_oo_lower: f64,
    pub t_x_upper: f64,
}

impl RateBounds {
    /// The observed rates taken as exact expectations.
    pub fn from_observed(stats: &ObservedStats) -> Self {
        use Intensity::*;
        RateBounds {
            s_ox_lower: stats.counting_rate(O, X),
            s_oy_upper: stats.counting_rate(O, Y),
            s_xo_lower: stats.counting_rate(X, O),
            s_yo_upper: stats.counting_rate(Y, O),
            s_oo_upper: stats.counting_rate(O, O),
            s_oo_lower: stats.counting_rate(O, O),
            t_x_upper: stats.t_x(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    pub mean_s01_lower: f64,
    pub mean_s10_lower: f64,
    pub mean_s1_lower: f64,
    pub n1_lower: f64,
    pub n01_lower: f64,
    pub n10_lower: f64,
    pub e1ph_mean_upper: f64,
    /// Phase-error count bound on a subset of `n1_lower` untagged bits.
    pub m_e_upper: f64,
    /// Set when a single-photon yield bound was negative and clamped to zero.
    pub clamped: bool,
    pub eps_ledger: EpsLedger,
}

/// Outcome of the intensity-ratio security check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub residual: f64,
    pub pass: bool,
}

pub fn check_security_constraint(protocol: &ProtocolParams) -> ConstraintCheck {
    let residual = security_constraint_residual(protocol);
    ConstraintCheck {
        residual,
        pass: residual <= SECURITY_CONSTRAINT_TOL,
    }
}

/// Chernoff interval on the expected rate of `q`, recorded under `chain`.
fn convert(
    stats: &ObservedStats,
    q: Quantity,
    dir: Direction,
    chain: EpsChain,
    plan: &mut ConversionPlan,
    ledger: &mut EpsLedger,
) -> Result<f64> {
    plan.take(q, dir)?;
    let (count, sent) = match q {
        Quantity::Counting(a, b) => {
            let s = stats.source(a, b);
            (s.heralded, s.sent)
        }
        Quantity::XError => (stats.x_errors, stats.x_sent),
    };
    let (lo, hi) = chernoff_expected_bounds_from_observed(count, plan.xi)?;
    ledger.push(format!("decoy:{q}:{dir}"), chain, plan.xi);
    Ok(match dir {
        Direction::Lower => lo / sent,
        Direction::Upper => (hi / sent).min(1.0),
    })
}

/// Consume every planned conversion and return the resulting rate bounds.
pub fn expected_rate_bounds(
    stats: &ObservedStats,
    plan: &mut ConversionPlan,
    ledger: &mut EpsLedger,
) -> Result<RateBounds> {
    use Direction::*;
    use EpsChain::*;
    use Intensity::*;
    let mut c = |q, d, chain| convert(stats, q, d, chain, plan, ledger);
    Ok(RateBounds {
        s_ox_lower: c(Quantity::Counting(O, X), Lower, UntaggedCount)?,
        s_oy_upper: c(Quantity::Counting(O, Y), Upper, UntaggedCount)?,
        s_oo_upper: c(Quantity::Counting(O, O), Upper, UntaggedCount)?,
        s_xo_lower: c(Quantity::Counting(X, O), Lower, UntaggedCount)?,
        s_yo_upper: c(Quantity::Counting(Y, O), Upper, UntaggedCount)?,
        s_oo_lower: c(Quantity::Counting(O, O), Lower, PhaseError)?,
        t_x_upper: c(Quantity::XError, Upper, PhaseError)?,
    })
}

/// Single-photon yield bound of one side from its weak/strong/vacuum rate bounds.
fn single_photon_yield(
    side: &SideParams,
    weak_lower: f64,
    strong_upper: f64,
    vac_upper: f64,
) -> Result<f64> {
    let (m1, m2) = (side.mu1, side.mu2);
    if !(m2 > m1 && m1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decoy intensities must satisfy mu2 > mu1 > 0, got {m1} and {m2}"
        )));
    }
    let num = m2 * m2 * m1.exp() * weak_lower
        - m1 * m1 * m2.exp() * strong_upper
        - (m2 * m2 - m1 * m1) * vac_upper;
    Ok(num / (m2 * m1 * (m2 - m1)))
}

/// `(⟨s̲01⟩, ⟨s̲10⟩, clamped)` from rate bounds; negative values clamp to zero.
pub fn s01_s10_from_rates(protocol: &ProtocolParams, r: &RateBounds) -> Result<(f64, f64, bool)> {
    let s01 = single_photon_yield(&protocol.bob, r.s_ox_lower, r.s_oy_upper, r.s_oo_upper)?;
    let s10 = single_photon_yield(&protocol.alice, r.s_xo_lower, r.s_yo_upper, r.s_oo_upper)?;
    let clamped = s01 < 0.0 || s10 < 0.0;
    Ok((s01.clamp(0.0, 1.0), s10.clamp(0.0, 1.0), clamped))
}

/// `(⟨s̲01⟩, ⟨s̲10⟩)` with every rate converted at failure probability `xi`.
pub fn s01_s10_lower(
    stats: &ObservedStats,
    protocol: &ProtocolParams,
    xi: FailureProb,
) -> Result<(f64, f64)> {
    let (stats, mut plan) = expected_to_observed_ledger(stats.clone(), xi);
    let rates = expected_rate_bounds(&stats, &mut plan, &mut EpsLedger::new())?;
    let (s01, s10, _) = s01_s10_from_rates(protocol, &rates)?;
    Ok((s01, s10))
}

/// `μ`-weighted untagged yield `⟨s̲1⟩`.
pub fn mean_s1(protocol: &ProtocolParams, s01: f64, s10: f64) -> f64 {
    let (a1, b1) = (protocol.alice.mu1, protocol.bob.mu1);
    (a1 * s10 + b1 * s01) / (a1 + b1)
}

/// Expected untagged bits 0 and 1 per unit yield: `N p_z² ε(1-ε') μ_z e^{-μ_z}`.
fn untagged_prefactors(protocol: &ProtocolParams) -> (f64, f64) {
    let (a, b) = (&protocol.alice, &protocol.bob);
    let z = protocol.total_pulses * protocol.p_z * protocol.p_z;
    let ones = z * a.send_prob * (1.0 - b.send_prob) * a.mu_z * (-a.mu_z).exp();
    let zeros = z * b.send_prob * (1.0 - a.send_prob) * b.mu_z * (-b.mu_z).exp();
    (zeros, ones)
}

/// `(n̲1, n̲01, n̲10)`: Chernoff lower bounds on the realised untagged counts.
pub fn untagged_counts(
    protocol: &ProtocolParams,
    s01: f64,
    s10: f64,
    xi: FailureProb,
    ledger: &mut EpsLedger,
) -> Result<(f64, f64, f64)> {
    let (zeros, ones) = untagged_prefactors(protocol);
    let n01 = chernoff_lower_from_expected(zeros * s01, xi)?;
    let n10 = chernoff_lower_from_expected(ones * s10, xi)?;
    ledger.push("decoy:n01:lower", EpsChain::UntaggedCount, xi);
    ledger.push("decoy:n10:lower", EpsChain::UntaggedCount, xi);
    Ok((n01 + n10, n01, n10))
}

/// Upper bound on the expected phase-flip error rate of untagged bits.
pub fn phase_error_rate_upper(
    protocol: &ProtocolParams,
    t_x_upper: f64,
    s_oo_lower: f64,
    s1: f64,
) -> Result<f64> {
    let (a1, b1) = (protocol.alice.mu1, protocol.bob.mu1);
    let vac = (-a1 - b1).exp();
    let den = vac * (a1 + b1) * s1;
    if !(den > 0.0) {
        return Err(Error::NoUntaggedSignal(format!(
            "single-photon yield bound {s1:.3e} is not positive"
        )));
    }
    Ok(((t_x_upper - vac * s_oo_lower / 2.0) / den).clamp(0.0, 1.0))
}

/// `(ē1, m̄_e)` with `m̄_e` the phase-error count bound on `subset` untagged bits.
pub fn phase_error_upper(
    protocol: &ProtocolParams,
    rates: &RateBounds,
    s1: f64,
    subset: f64,
    xi: FailureProb,
    ledger: &mut EpsLedger,
) -> Result<(f64, f64)> {
    let e1 = phase_error_rate_upper(protocol, rates.t_x_upper, rates.s_oo_lower, s1)?;
    let m_e = chernoff_upper_from_expected(e1 * subset, xi)?.min(subset);
    ledger.push(M_E_LABEL, EpsChain::PhaseError, xi);
    Ok((e1, m_e))
}

/// The full decoy analysis at failure probability `xi` per estimate.
pub fn estimate(
    stats: &ObservedStats,
    protocol: &ProtocolParams,
    xi: FailureProb,
) -> Result<DecoyBounds> {
    estimate_subset(stats, protocol, xi, 1.0)
}

/// The decoy analysis for a random `fraction` of the Z-window bits: untagged
/// expectations scale with the fraction before their Chernoff conversion.
pub fn estimate_subset(
    stats: &ObservedStats,
    protocol: &ProtocolParams,
    xi: FailureProb,
    fraction: f64,
) -> Result<DecoyBounds> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subset fraction {fraction} outside (0, 1]"
        )));
    }
    let check = check_security_constraint(protocol);
    if !check.pass {
        return Err(Error::SecurityConstraint {
            residual: check.residual,
        });
    }
    let (stats, mut plan) = expected_to_observed_ledger(stats.clone(), xi);
    let mut ledger = EpsLedger::new();
    let rates = expected_rate_bounds(&stats, &mut plan, &mut ledger)?;
    let (s01, s10, clamped) = s01_s10_from_rates(protocol, &rates)?;
    let s1 = mean_s1(protocol, s01, s10);
    let (n1, n01, n10) =
        untagged_counts(protocol, s01 * fraction, s10 * fraction, xi, &mut ledger)?;
    let (e1, m_e) = phase_error_upper(protocol, &rates, s1, n1, xi, &mut ledger)?;
    Ok(DecoyBounds {
        mean_s01_lower: s01,
        mean_s10_lower: s10,
        mean_s1_lower: s1,
        n1_lower: n1,
        n01_lower: n01,
        n10_lower: n10,
        e1ph_mean_upper: e1,
        m_e_upper: m_e,
        clamped,
        eps_ledger: ledger,
    })
}
