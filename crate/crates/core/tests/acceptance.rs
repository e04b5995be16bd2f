//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs the full default distance sweep, so it takes about a minute in release mode.

mod common;

use std::process::ExitCode;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Deserialize;

use common::*;
use twcc_core::channel_model::{DeviceParams, ProtocolParams, SourceParams};
use twcc_core::ledger::EpsBudget;
use twcc_core::pairing_stats::enumerate::{enumerate_wb_counts, MAX_ENUMERATION_TOTAL};
use twcc_core::pairing_stats::{
    exact_wb_distribution, exact_wb_distribution_recursive, BallSetExact,
};
use twcc_core::pipeline::{evaluate, Pipeline, PipelineOptions};
use twcc_core::sweep::{sweep, SweepResult, SweepSettings};
use twcc_core::tail_bounds::{
    binom_tail_at_least, binom_tail_below, chernoff_expected_bounds_from_observed,
    chernoff_lower_from_expected, chernoff_upper_from_expected, BinomialSpec, FailureProb,
};
use twcc_core::twcc::PhaseErrorMode;
use twcc_core::validation::{dominance_check, monte_carlo_check, PairingScenario};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(x: f64, want: f64, rel: f64) -> bool {
    (x / want - 1.0).abs() <= rel
}

fn eps_tol_levels() -> Outcome {
    let dev = DeviceParams::default();
    let source = SourceParams {
        send_prob: 0.05,
        ..Default::default()
    };
    let p = ProtocolParams::symmetric(1e12, 200.0, &source);
    let budget = EpsBudget::default();
    let opts = PipelineOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (pipeline, want) in [
        (Pipeline::Twcc, 1.39e-9),
        (Pipeline::Oper, 2.33e-9),
        (Pipeline::Aopp, 4.66e-9),
    ] {
        let r = evaluate(&dev, &p, pipeline, &budget, &opts).map_err(|e| e.to_string())?;
        let got = r.security.eps_tol;
        ok &= within(got, want, 0.05);
        parts.push(format!("{}={got:.3e} (want {want:.2e})", pipeline.name()));
    }
    verdict(ok, parts.join(", "))
}

fn max_distance(res: &SweepResult, p: Pipeline) -> Option<f64> {
    res.summary(p).and_then(|s| s.max_distance_km)
}

fn distance_gain(res: &SweepResult) -> Outcome {
    let plain = max_distance(res, Pipeline::Plain).ok_or("plain never has a positive rate")?;
    let mut ok = true;
    let mut parts = vec![format!("plain {plain:.1} km")];
    for p in [Pipeline::Twcc, Pipeline::Oper, Pipeline::Aopp] {
        let d = max_distance(res, p).ok_or(format!("{} never has a positive rate", p.name()))?;
        let gain = d - plain;
        ok &= (35.0..=65.0).contains(&gain);
        parts.push(format!("{} {d:.1} km (+{gain:.1})", p.name()));
    }
    verdict(ok, parts.join(", "))
}

fn beats_plob(res: &SweepResult) -> Outcome {
    let above: Vec<f64> = res
        .points_of(Pipeline::Twcc)
        .filter(|p| p.rate > p.plob_absolute)
        .map(|p| p.distance_km)
        .collect();
    match (above.first(), above.last()) {
        (Some(a), Some(b)) => Ok(format!(
            "twcc above the bound at {} grid points, {a}..{b} km",
            above.len()
        )),
        _ => Err("twcc never exceeds the bound".into()),
    }
}

fn ordering(res: &SweepResult, step: f64) -> Outcome {
    let rates = |p| res.points_of(p).map(|x| x.rate).collect::<Vec<_>>();
    let (t, o, a) = (
        rates(Pipeline::Twcc),
        rates(Pipeline::Oper),
        rates(Pipeline::Aopp),
    );
    let mut positive = 0;
    let mut ordered = 0;
    for i in 0..t.len() {
        if t[i] > 0.0 || o[i] > 0.0 || a[i] > 0.0 {
            positive += 1;
            if a[i] >= o[i] && o[i] >= t[i] {
                ordered += 1;
            }
        }
    }
    let frac = ordered as f64 / positive.max(1) as f64;
    let grid_max = |p| {
        res.summary(p)
            .and_then(|s| s.grid_max_distance_km)
            .unwrap_or(f64::NAN)
    };
    let (dt, d_o, da) = (
        grid_max(Pipeline::Twcc),
        grid_max(Pipeline::Oper),
        grid_max(Pipeline::Aopp),
    );
    let close = (da - d_o).abs() <= step + 1e-9 && (d_o - dt).abs() <= step + 1e-9;
    verdict(
        positive > 0 && frac >= 0.9 && close,
        format!("ordered at {ordered}/{positive} distances; grid edges twcc {dt}, oper {d_o}, aopp {da} km"),
    )
}

fn strict_vs_paired(res: &SweepResult) -> Outcome {
    let dev = DeviceParams::default();
    let settings = SweepSettings::default();
    let paired = PipelineOptions {
        phase_error_mode: PhaseErrorMode::Paired { n_ee_lower: 0.0 },
        ..settings.options
    };
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for pt in res.points_of(Pipeline::Twcc).filter(|p| p.rate > 0.0) {
        let p = ProtocolParams::symmetric(settings.total_pulses, pt.distance_km, &pt.source);
        let r = evaluate(&dev, &p, Pipeline::Twcc, &settings.budget, &paired)
            .map_err(|e| e.to_string())?;
        worst = worst.max((r.rate / pt.rate - 1.0).abs());
        n += 1;
    }
    verdict(
        n > 0 && worst <= 0.01,
        format!("{n} distances, worst relative gap {worst:.2e}"),
    )
}

fn closed_form_and_recursion() -> Outcome {
    let mut worst: f64 = 0.0;
    for total in (2..=200u64).step_by(2) {
        for k in 0..=total {
            let set = BallSetExact::new(k, total).map_err(|e| e.to_string())?;
            let a = exact_wb_distribution(&set);
            let b = exact_wb_distribution_recursive(&set);
            let len = a.probs().len().max(b.probs().len());
            for c in 0..len as u64 {
                worst = worst.max((a.prob(c) - b.prob(c)).abs());
            }
        }
    }
    let mut exact_ok = true;
    let mut enum_worst: f64 = 0.0;
    for total in (2..=MAX_ENUMERATION_TOTAL).step_by(2) {
        let denom = double_factorial_odd(total - 1);
        for k in 0..=total {
            let set = BallSetExact::new(k, total).map_err(|e| e.to_string())?;
            let counts = enumerate_wb_counts(&set).map_err(|e| e.to_string())?;
            let law = wb_law_closed_rational(k, total);
            let float = exact_wb_distribution(&set);
            for c in 0..counts.len().max(law.len()) {
                let brute = BigRational::new(
                    BigInt::from(counts.get(c).copied().unwrap_or(0)),
                    denom.clone(),
                );
                let closed = law.get(c).cloned().unwrap_or_else(BigRational::zero);
                exact_ok &= brute == closed;
                enum_worst = enum_worst.max((float.prob(c as u64) - to_f64(&brute)).abs());
            }
        }
    }
    verdict(
        worst <= 1e-12 && exact_ok && enum_worst <= 1e-12,
        format!(
            "engines differ by {worst:.1e} for N <= 200; enumeration {} the rational law for N <= {MAX_ENUMERATION_TOTAL}, float gap {enum_worst:.1e}",
            if exact_ok { "equals" } else { "differs from" }
        ),
    )
}

fn dominance() -> Outcome {
    let r = dominance_check(40).map_err(|e| e.to_string())?;
    let parts: Vec<String> = r
        .summaries
        .iter()
        .map(|s| {
            format!(
                "{} {}/{}",
                s.check.name(),
                s.comparisons - s.violations,
                s.comparisons
            )
        })
        .collect();
    verdict(r.passed(), parts.join(", "))
}

fn monte_carlo() -> Outcome {
    let checks = monte_carlo_check(&PairingScenario::default(), &[1e-2, 1e-3], 2024)
        .map_err(|e| e.to_string())?;
    let parts: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{:?}@{:.0e}: {:.1e} <= {:.2e}",
                c.quantity, c.target, c.frequency, c.claimed_eps
            )
        })
        .collect();
    verdict(checks.iter().all(|c| c.passed), parts.join(", "))
}

fn exact_tail_below(x: u64, m: u64, p: f64) -> f64 {
    let p = BigRational::from_float(p).unwrap();
    let q = BigRational::one() - &p;
    let mut acc = BigRational::zero();
    for l in 0..x.min(m + 1) {
        acc += BigRational::from_integer(binomial(m, l))
            * num_traits::pow(p.clone(), l as usize)
            * num_traits::pow(q.clone(), (m - l) as usize);
    }
    acc.to_f64().unwrap()
}

fn tails_and_chernoff() -> Outcome {
    let mut trip: f64 = 0.0;
    for &e in &[1.0, 37.5, 1e3, 2.5e5, 1e8, 3e11] {
        for &xi in &[1e-3, 1e-10, 1e-20, 1e-30] {
            let xi = FailureProb::new(xi).map_err(|e| e.to_string())?;
            let hi = chernoff_upper_from_expected(e, xi).map_err(|e| e.to_string())?;
            let (e_lo, _) =
                chernoff_expected_bounds_from_observed(hi, xi).map_err(|e| e.to_string())?;
            trip = trip.max((e_lo / e - 1.0).abs());
            let lo = chernoff_lower_from_expected(e, xi).map_err(|e| e.to_string())?;
            if lo > 0.0 {
                let (_, e_hi) =
                    chernoff_expected_bounds_from_observed(lo, xi).map_err(|e| e.to_string())?;
                trip = trip.max((e_hi / e - 1.0).abs());
            }
        }
    }
    let mut tail: f64 = 0.0;
    for m in 0..=30u64 {
        for &p in &[0.5, 1.0 / 3.0, 0.1, 0.9, 0.0625, 0.999] {
            let spec = BinomialSpec::new(m, p).map_err(|e| e.to_string())?;
            for x in 0..=m + 1 {
                let below = exact_tail_below(x, m, p);
                tail = tail.max((binom_tail_below(x, &spec).value() - below).abs());
                tail = tail.max((binom_tail_at_least(x, &spec).value() - (1.0 - below)).abs());
            }
        }
    }
    verdict(
        trip <= 1e-8 && tail <= 1e-12,
        format!("Chernoff round trip {trip:.1e}, binomial tails vs rationals {tail:.1e}"),
    )
}

#[derive(Deserialize)]
struct GoldenEdge {
    pipeline: Pipeline,
    grid_max_distance_km: f64,
}

/// Grid edges recorded from a reference run; drift is reported but is not a criterion.
fn golden_drift(res: &SweepResult, step: f64) -> String {
    let golden: Vec<GoldenEdge> =
        serde_json::from_str(include_str!("golden/sweep_edges.json")).unwrap();
    let drift: Vec<String> = golden
        .iter()
        .filter_map(|g| {
            let now = res.summary(g.pipeline)?.grid_max_distance_km?;
            ((now - g.grid_max_distance_km).abs() > step / 2.0)
                .then(|| format!("{} {} -> {now}", g.pipeline.name(), g.grid_max_distance_km))
        })
        .collect();
    if drift.is_empty() {
        "grid edges match the recorded run".into()
    } else {
        format!("grid edges moved: {}", drift.join(", "))
    }
}

fn main() -> ExitCode {
    let settings = SweepSettings::default();
    let step = settings.grid.step_km;
    let swept = sweep(&DeviceParams::default(), &settings).map_err(|e| e.to_string());
    let with_sweep = |f: &dyn Fn(&SweepResult) -> Outcome| match &swept {
        Ok(r) => f(r),
        Err(e) => Err(format!("sweep failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("eps_tol levels", eps_tol_levels()),
        ("distance gain over plain", with_sweep(&distance_gain)),
        ("rate above the repeaterless bound", with_sweep(&beats_plob)),
        ("aopp >= oper >= twcc", with_sweep(&|r| ordering(r, step))),
        (
            "strict vs paired phase error",
            with_sweep(&strict_vs_paired),
        ),
        ("closed form vs recursion", closed_form_and_recursion()),
        ("bound dominance up to N = 40", dominance()),
        ("Monte Carlo thresholds", monte_carlo()),
        ("Chernoff and binomial tails", tails_and_chernoff()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name}: {detail}", i + 1);
    }
    if let Ok(r) = &swept {
        println!("[INFO] {}", golden_drift(r, step));
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
