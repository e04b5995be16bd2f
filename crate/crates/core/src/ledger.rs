//! Bookkeeping of every failure probability a pipeline consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tail_bounds::FailureProb;

/// Which estimate a failure probability protects. The composition treats the two
/// chains separately: `4 √(ε_e + ε_n1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsChain {
    /// Phase-flip error estimation (`ε_e`).
    PhaseError,
    /// Untagged-count estimation (`ε_n1`).
    UntaggedCount,
}

/// Every failure probability a pipeline is configured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsBudget {
    /// Each statistical-fluctuation estimate.
    pub xi_c: FailureProb,
    /// Hypergeometric sampling of untagged bit values.
    pub xi_h: FailureProb,
    /// Chain-rule smoothing coefficient `ε̂`.
    pub eps_hat: FailureProb,
    pub eps_pa: FailureProb,
    pub eps_cor: FailureProb,
    /// Trace distance to the de Finetti associate state.
    pub eps2: FailureProb,
    /// Binomial tail of the post-rejection phase-error count.
    pub eps5: FailureProb,
    /// Qubits outside the iid part of the associate state; `None` means `⌈√M⌉`.
    pub definetti_r: Option<u64>,
}

impl Default for EpsBudget {
    fn default() -> Self {
        EpsBudget::uniform(FailureProb::clamped(1e-20))
    }
}

impl EpsBudget {
    /// Every failure probability set to `eps`.
    pub fn uniform(eps: FailureProb) -> Self {
        EpsBudget {
            xi_c: eps,
            xi_h: eps,
            eps_hat: eps,
            eps_pa: eps,
            eps_cor: eps,
            eps2: eps,
            eps5: eps,
            definetti_r: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("xi_c", self.xi_c),
            ("xi_h", self.xi_h),
            ("eps_hat", self.eps_hat),
            ("eps_pa", self.eps_pa),
            ("eps_cor", self.eps_cor),
            ("eps2", self.eps2),
            ("eps5", self.eps5),
        ] {
            let v = v.value();
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub label: String,
    /// `None` marks an entry that was recorded without a chain; composing such a ledger fails.
    pub chain: Option<EpsChain>,
    pub value: FailureProb,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsLedger {
    entries: Vec<EpsEntry>,
}

impl EpsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, chain: EpsChain, value: FailureProb) {
        self.entries.push(EpsEntry {
            label: label.into(),
            chain: Some(chain),
            value,
        });
    }

    pub fn push_unassigned(&mut self, label: impl Into<String>, value: FailureProb) {
        self.entries.push(EpsEntry {
            label: label.into(),
            chain: None,
            value,
        });
    }

    pub fn extend(&mut self, other: &EpsLedger) {
        self.entries.extend(other.entries.iter().cloned());
    }

    /// The same entries with `prefix` prepended to every label.
    pub fn prefixed(&self, prefix: &str) -> EpsLedger {
        EpsLedger {
            entries: self
                .entries
                .iter()
                .map(|e| EpsEntry {
                    label: format!("{prefix}{}", e.label),
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[EpsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.iter().any(|e| e.label == label)
    }

    /// `(ε_e, ε_n1)`; fails on any entry without a chain.
    pub fn chain_totals(&self) -> Result<(f64, f64)> {
        let (mut phase, mut count) = (0.0, 0.0);
        for e in &self.entries {
            match e.chain {
                Some(EpsChain::PhaseError) => phase += e.value.value(),
                Some(EpsChain::UntaggedCount) => count += e.value.value(),
                None => return Err(Error::UnpartitionedLedger(e.label.clone())),
            }
        }
        Ok((phase, count))
    }
}
