//! End-to-end evaluation of one pipeline at one parameter point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel_model::{simulate_observed, DeviceParams, ObservedStats, ProtocolParams};
use crate::decoy::{estimate_subset, DecoyBounds};
use crate::error::{Error, Result};
use crate::key_rate::{
    finite_size_cost, key_rate, security_epsilon, RateTerms, SecurityEps, SiftedClass,
};
use crate::ledger::{EpsBudget, EpsLedger};
use crate::twcc::{
    aopp_plan, oper, standard_twcc, AoppBits, AoppPlan, OperBounds, PhaseErrorMode, TwccBounds,
    ZigzagPairs,
};

/// Version of the serialized [`KeyRateReport`] layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// SNS without two-way post-processing.
    Plain,
    /// Standard two-way parity check.
    Twcc,
    /// Odd-parity error rejection.
    Oper,
    /// Active odd-parity pairing.
    Aopp,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] = [
        Pipeline::Plain,
        Pipeline::Twcc,
        Pipeline::Oper,
        Pipeline::Aopp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Plain => "plain",
            Pipeline::Twcc => "twcc",
            Pipeline::Oper => "oper",
            Pipeline::Aopp => "aopp",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pipeline `{s}`")))
    }
}

/// Modelling choices that are not failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub phase_error_mode: PhaseErrorMode,
    pub zigzag_pairs: ZigzagPairs,
    pub aopp_bits: AoppBits,
}

/// Reasons a report carries a zero or degraded rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFlag {
    NoUntaggedSignal,
    DecoyClamped,
    NoUntaggedPairs,
    PhaseErrorAboveHalf,
    EmptyAoppPlan,
    NonPositiveKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoppDetail {
    pub plan: AoppPlan,
    /// Both subsets are drawn from the same statistics and share one evaluation.
    pub subset: Option<OperBounds>,
    pub subset_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub schema_version: u32,
    pub pipeline: Pipeline,
    pub distance_km: f64,
    /// Secret bits per sent pulse pair, never negative.
    pub rate: f64,
    pub flags: Vec<RateFlag>,
    pub terms: RateTerms,
    pub security: SecurityEps,
    pub protocol: ProtocolParams,
    pub stats: ObservedStats,
    pub decoy: Option<DecoyBounds>,
    pub twcc: Option<TwccBounds>,
    pub oper: Option<OperBounds>,
    pub aopp: Option<AoppDetail>,
    pub eps_ledger: EpsLedger,
}

impl KeyRateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }
}

fn rate_flags(terms: &RateTerms, untagged: f64) -> Vec<RateFlag> {
    let mut flags = Vec::new();
    if untagged <= 0.0 {
        flags.push(RateFlag::NoUntaggedPairs);
    } else if terms.phase_error > 0.5 {
        flags.push(RateFlag::PhaseErrorAboveHalf);
    } else if terms.key_bits <= 0.0 {
        flags.push(RateFlag::NonPositiveKey);
    }
    flags
}

struct Evaluated {
    rate: f64,
    terms: RateTerms,
    security: SecurityEps,
    flags: Vec<RateFlag>,
}

fn finish(
    untagged: f64,
    phase_error: f64,
    classes: &[SiftedClass],
    ledger: &EpsLedger,
    device: &DeviceParams,
    budget: &EpsBudget,
    total_pulses: f64,
) -> Result<Evaluated> {
    let security = security_epsilon(ledger, budget.eps_hat, budget.eps_pa, budget.eps_cor)?;
    let cost = finite_size_cost(security.eps_sec, budget.eps_pa, budget.eps_hat);
    let (rate, terms) = key_rate(
        untagged,
        phase_error,
        classes,
        device.ec_inefficiency,
        cost,
        total_pulses,
    );
    Ok(Evaluated {
        rate,
        flags: rate_flags(&terms, untagged),
        terms,
        security,
    })
}

fn oper_rate(
    stats: &ObservedStats,
    bounds: &OperBounds,
    device: &DeviceParams,
    budget: &EpsBudget,
    total_pulses: f64,
) -> Result<Evaluated> {
    let class = SiftedClass {
        bits: stats.oper.survived,
        error_rate: stats.oper.error_rate,
    };
    finish(
        bounds.counts.n_oper_lower as f64,
        bounds.e_ph_upper,
        &[class],
        &bounds.eps_ledger,
        device,
        budget,
        total_pulses,
    )
}

/// Simulate the run and evaluate `pipeline` on it.
pub fn evaluate(
    device: &DeviceParams,
    protocol: &ProtocolParams,
    pipeline: Pipeline,
    budget: &EpsBudget,
    options: &PipelineOptions,
) -> Result<KeyRateReport> {
    budget.validate()?;
    let stats = simulate_observed(device, protocol)?;
    evaluate_stats(device, protocol, &stats, pipeline, budget, options)
}

/// Evaluate `pipeline` on already simulated statistics.
pub fn evaluate_stats(
    device: &DeviceParams,
    protocol: &ProtocolParams,
    stats: &ObservedStats,
    pipeline: Pipeline,
    budget: &EpsBudget,
    options: &PipelineOptions,
) -> Result<KeyRateReport> {
    let n_tol = protocol.total_pulses;
    let mut report = KeyRateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        pipeline,
        distance_km: protocol.distance_km,
        rate: 0.0,
        flags: Vec::new(),
        terms: key_rate(0.0, 0.0, &[], device.ec_inefficiency, 0.0, n_tol).1,
        security: security_epsilon(
            &EpsLedger::new(),
            budget.eps_hat,
            budget.eps_pa,
            budget.eps_cor,
        )?,
        protocol: *protocol,
        stats: stats.clone(),
        decoy: None,
        twcc: None,
        oper: None,
        aopp: None,
        eps_ledger: EpsLedger::new(),
    };

    let fraction = if pipeline == Pipeline::Aopp {
        let plan = aopp_plan(stats, options.aopp_bits);
        report.aopp = Some(AoppDetail {
            plan,
            subset: None,
            subset_rate: 0.0,
        });
        if plan.is_empty() {
            report.flags.push(RateFlag::EmptyAoppPlan);
            return Ok(report);
        }
        plan.fraction(stats.n_t)
    } else {
        1.0
    };

    let decoy = match estimate_subset(stats, protocol, budget.xi_c, fraction) {
        Ok(d) => d,
        Err(Error::NoUntaggedSignal(_)) => {
            report.flags.push(RateFlag::NoUntaggedSignal);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    if decoy.clamped {
        report.flags.push(RateFlag::DecoyClamped);
    }

    let ev = match pipeline {
        Pipeline::Plain => {
            let e1 = if decoy.n1_lower > 0.0 {
                decoy.m_e_upper / decoy.n1_lower
            } else {
                0.0
            };
            let class = SiftedClass {
                bits: stats.n_t,
                error_rate: stats.e_z,
            };
            report.eps_ledger = decoy.eps_ledger.clone();
            finish(
                decoy.n1_lower,
                e1,
                &[class],
                &decoy.eps_ledger,
                device,
                budget,
                n_tol,
            )?
        }
        Pipeline::Twcc => {
            let t = standard_twcc(stats, &decoy, budget.xi_c, options.phase_error_mode)?;
            let classes: Vec<SiftedClass> = stats
                .parity_classes
                .iter()
                .map(|c| SiftedClass {
                    bits: c.survived,
                    error_rate: c.error_rate,
                })
                .collect();
            report.eps_ledger = t.eps_ledger.clone();
            let ev = finish(
                t.n_uu_lower as f64,
                t.e_ap_upper,
                &classes,
                &t.eps_ledger,
                device,
                budget,
                n_tol,
            )?;
            report.twcc = Some(t);
            ev
        }
        Pipeline::Oper => {
            let b = oper(stats, &decoy, budget, options.zigzag_pairs)?;
            report.eps_ledger = b.eps_ledger.clone();
            let ev = oper_rate(stats, &b, device, budget, n_tol)?;
            report.oper = Some(b);
            ev
        }
        Pipeline::Aopp => {
            let sub_stats = stats.scaled_z(fraction);
            let b = oper(&sub_stats, &decoy, budget, options.zigzag_pairs)?;
            let sub = oper_rate(&sub_stats, &b, device, budget, n_tol)?;
            let mut ledger = b.eps_ledger.prefixed("aopp1:");
            ledger.extend(&b.eps_ledger.prefixed("aopp2:"));
            report.eps_ledger = ledger;
            let detail = report.aopp.as_mut().expect("plan recorded above");
            detail.subset = Some(b);
            detail.subset_rate = sub.rate;
            let mut terms = sub.terms;
            terms.untagged *= 2.0;
            terms.privacy *= 2.0;
            terms.error_correction *= 2.0;
            terms.finite_size *= 2.0;
            terms.key_bits *= 2.0;
            Evaluated {
                rate: 2.0 * sub.rate,
                terms,
                security: SecurityEps::combine(&[sub.security, sub.security]),
                flags: sub.flags,
            }
        }
    };
    report.decoy = Some(decoy);
    report.rate = ev.rate;
    report.terms = ev.terms;
    report.security = ev.security;
    report.flags.extend(ev.flags);
    Ok(report)
}
