//! Key-rate formulas, composition of the security parameter, and PLOB benchmarks.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ledger::EpsLedger;
use crate::tail_bounds::FailureProb;

/// Largest value returned by [`plob_bounds`]; reached only at unit transmittance.
pub const PLOB_CEILING: f64 = 64.0;

/// Binary entropy with the argument clamped to `[0, 1/2]`.
pub fn binary_entropy(x: f64) -> f64 {
    let x = if x.is_nan() { 0.5 } else { x.clamp(0.0, 0.5) };
    if x == 0.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityEps {
    /// Phase-error estimation chain `ε_e`.
    pub eps_e: f64,
    /// Untagged-count estimation chain `ε_n1`.
    pub eps_n1: f64,
    pub eps_sec: f64,
    pub eps_cor: f64,
    pub eps_tol: f64,
    /// Ledger entries composed.
    pub term_count: usize,
}

impl SecurityEps {
    /// Parameters of independently secured sub-keys add up.
    pub fn combine(parts: &[SecurityEps]) -> SecurityEps {
        let mut out = SecurityEps {
            eps_e: 0.0,
            eps_n1: 0.0,
            eps_sec: 0.0,
            eps_cor: 0.0,
            eps_tol: 0.0,
            term_count: 0,
        };
        for p in parts {
            out.eps_e += p.eps_e;
            out.eps_n1 += p.eps_n1;
            out.eps_sec += p.eps_sec;
            out.eps_cor += p.eps_cor;
            out.eps_tol += p.eps_tol;
            out.term_count += p.term_count;
        }
        out
    }
}

/// `ε_sec = 2ε̂ + ε_PA + 4√(ε_e + ε_n1)` and `ε_tol = ε_cor + ε_sec`.
pub fn security_epsilon(
    ledger: &EpsLedger,
    eps_hat: FailureProb,
    eps_pa: FailureProb,
    eps_cor: FailureProb,
) -> Result<SecurityEps> {
    let (eps_e, eps_n1) = ledger.chain_totals()?;
    let eps_sec = 2.0 * eps_hat.value() + eps_pa.value() + 4.0 * (eps_e + eps_n1).sqrt();
    Ok(SecurityEps {
        eps_e,
        eps_n1,
        eps_sec,
        eps_cor: eps_cor.value(),
        eps_tol: eps_cor.value() + eps_sec,
        term_count: ledger.len(),
    })
}

/// `log2(2/ε_sec) + 2 log2(1/(√2 ε_PA ε̂))`, the finite-size cost in bits.
pub fn finite_size_cost(eps_sec: f64, eps_pa: FailureProb, eps_hat: FailureProb) -> f64 {
    (2.0 / eps_sec).log2() + 2.0 * (1.0 / (SQRT_2 * eps_pa.value() * eps_hat.value())).log2()
}

/// A bit count together with the error rate that the error correction must fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftedClass {
    pub bits: f64,
    pub error_rate: f64,
}

/// The terms of a key-length formula, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    /// Untagged bits surviving error rejection.
    pub untagged: f64,
    pub phase_error: f64,
    /// `untagged · [1 - H(phase_error)]`.
    pub privacy: f64,
    pub error_correction: f64,
    pub finite_size: f64,
    /// Key length before clamping.
    pub key_bits: f64,
}

/// `(1/N_tol){n[1 - H(e)] - f Σ n_i H(E_i) - cost}`, clamped at zero.
pub fn key_rate(
    untagged: f64,
    phase_error: f64,
    classes: &[SiftedClass],
    ec_inefficiency: f64,
    finite_size: f64,
    total_pulses: f64,
) -> (f64, RateTerms) {
    let privacy = untagged * (1.0 - binary_entropy(phase_error));
    let error_correction: f64 = ec_inefficiency
        * classes
            .iter()
            .map(|c| c.bits * binary_entropy(c.error_rate))
            .sum::<f64>();
    let key_bits = privacy - error_correction - finite_size;
    let rate = if untagged > 0.0 && key_bits > 0.0 && phase_error <= 0.5 {
        key_bits / total_pulses
    } else {
        0.0
    };
    (
        rate,
        RateTerms {
            untagged,
            phase_error,
            privacy,
            error_correction,
            finite_size,
            key_bits,
        },
    )
}

/// `(absolute, relative)` PLOB bounds in bits per pulse over `distance_km` of fiber.
pub fn plob_bounds(
    distance_km: f64,
    fiber_loss_db_km: f64,
    detector_efficiency: f64,
) -> (f64, f64) {
    let eta = 10f64.powf(-fiber_loss_db_km * distance_km.max(0.0) / 10.0);
    let plob = |t: f64| {
        let v = -(-t.min(1.0)).ln_1p() / std::f64::consts::LN_2;
        if v.is_finite() {
            v.min(PLOB_CEILING)
        } else {
            PLOB_CEILING
        }
    };
    (
        plob(eta),
        plob(eta * detector_efficiency * detector_efficiency),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::EpsChain;

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.7), 1.0);
        assert_eq!(binary_entropy(-0.1), 0.0);
        assert!((binary_entropy(0.11) - 0.4999).abs() < 1e-3);
    }

    #[test]
    fn composition() {
        let e = FailureProb::new(1e-20).unwrap();
        let mut l = EpsLedger::new();
        for i in 0..4 {
            l.push(format!("p{i}"), EpsChain::PhaseError, e);
        }
        for i in 0..8 {
            l.push(format!("n{i}"), EpsChain::UntaggedCount, e);
        }
        let s = security_epsilon(&l, e, e, e).unwrap();
        assert_eq!(s.term_count, 12);
        assert!((s.eps_tol / 1.39e-9 - 1.0).abs() < 0.05);
        let z = security_epsilon(
            &EpsLedger::new(),
            FailureProb::ZERO,
            FailureProb::ZERO,
            FailureProb::ZERO,
        )
        .unwrap();
        assert_eq!(z.eps_sec, 0.0);
    }

    #[test]
    fn rate_limits() {
        let (r, _) = key_rate(0.0, 0.0, &[], 1.1, 0.0, 1e12);
        assert_eq!(r, 0.0);
        let (r, _) = key_rate(
            1e6,
            0.0,
            &[SiftedClass {
                bits: 1e6,
                error_rate: 0.0,
            }],
            1.1,
            100.0,
            1e12,
        );
        assert!((r - (1e6 - 100.0) / 1e12).abs() < 1e-20);
        let (r, _) = key_rate(1e6, 0.6, &[], 1.1, 0.0, 1e12);
        assert_eq!(r, 0.0);
        let (a, _) = key_rate(1e6, 0.05, &[], 1.1, 0.0, 1e12);
        let (b, _) = key_rate(1e6, 0.06, &[], 1.1, 0.0, 1e12);
        assert!(b < a);
    }

    #[test]
    fn plob() {
        let (abs, rel) = plob_bounds(10.0 * 2f64.log10() / 0.2, 0.2, 0.3);
        assert!((abs - 1.0).abs() < 1e-12);
        assert!(rel < abs);
        assert_eq!(plob_bounds(0.0, 0.2, 1.0), (PLOB_CEILING, PLOB_CEILING));
        for d in [1.0, 100.0, 500.0] {
            let (a, r) = plob_bounds(d, 0.2, 0.3);
            assert!(r <= a);
        }
    }
}
