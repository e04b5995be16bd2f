//! Derivative-free maximisation of the key rate over the source parameters.
//!
//! Coordinate descent in log space with shrinking multiplicative steps. Each restart
//! resets the step size; the second restart starts cold from the defaults and the third
//! from a seeded perturbation of the best point so far.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel_model::{DeviceParams, ProtocolParams, SourceParams};
use crate::error::Result;
use crate::ledger::EpsBudget;
use crate::pipeline::{evaluate, KeyRateReport, Pipeline, PipelineOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub restarts: u32,
    /// Stop a restart once a full sweep improves the rate by less than this fraction.
    pub rel_tol: f64,
    /// Initial step in log space.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evaluations: u32,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            restarts: 3,
            rel_tol: 1e-4,
            initial_step: 0.4,
            min_step: 1e-3,
            max_evaluations: 2000,
        }
    }
}

const DIM: usize = 8;

/// Box constraints of each coordinate, in the order of [`to_vec`].
const BOUNDS: [(f64, f64); DIM] = [
    (1e-3, 0.5),  // mu1
    (2e-3, 1.0),  // mu2
    (1e-2, 1.5),  // mu_z
    (0.05, 0.98), // p_z
    (1e-3, 0.5),  // send_prob
    (1e-2, 0.9),  // p1
    (1e-2, 0.9),  // p2
    (1e-4, 0.5),  // lambda
];

/// Smallest allowed `mu2 / mu1`.
const MIN_INTENSITY_RATIO: f64 = 1.05;
/// Largest allowed `p1 + p2`.
const MAX_DECOY_PROB: f64 = 0.98;

fn to_vec(s: &SourceParams) -> [f64; DIM] {
    [
        s.mu1,
        s.mu2,
        s.mu_z,
        s.p_z,
        s.send_prob,
        s.p1,
        s.p2,
        s.lambda,
    ]
}

fn from_vec(v: &[f64; DIM]) -> SourceParams {
    SourceParams {
        mu1: v[0],
        mu2: v[1],
        mu_z: v[2],
        p_z: v[3],
        send_prob: v[4],
        p1: v[5],
        p2: v[6],
        lambda: v[7],
    }
}

/// Move `s` into the feasible region: box, intensity ordering and decoy simplex.
pub fn project(s: &SourceParams) -> SourceParams {
    let mut v = to_vec(s);
    for (x, (lo, hi)) in v.iter_mut().zip(BOUNDS) {
        *x = if x.is_finite() { x.clamp(lo, hi) } else { lo };
    }
    if v[1] < v[0] * MIN_INTENSITY_RATIO {
        v[1] = (v[0] * MIN_INTENSITY_RATIO).min(BOUNDS[1].1);
        v[0] = v[0].min(v[1] / MIN_INTENSITY_RATIO);
    }
    let total = v[5] + v[6];
    if total > MAX_DECOY_PROB {
        v[5] *= MAX_DECOY_PROB / total;
        v[6] *= MAX_DECOY_PROB / total;
    }
    from_vec(&v)
}

pub fn is_feasible(s: &SourceParams) -> bool {
    let v = to_vec(s);
    v.iter()
        .zip(BOUNDS)
        .all(|(x, (lo, hi))| *x >= lo && *x <= hi)
        && v[1] >= v[0] * MIN_INTENSITY_RATIO * (1.0 - 1e-12)
        && v[5] + v[6] <= MAX_DECOY_PROB * (1.0 + 1e-12)
}

/// Objective: the rate where positive. Elsewhere a value in `[-2, 0)`: the key length
/// relative to the magnitude of its terms, minus any phase-error excess over one half,
/// so that the search can climb out of zero-rate regions.
fn score(report: &Result<KeyRateReport>) -> f64 {
    match report {
        Ok(r) if r.rate > 0.0 => r.rate,
        Ok(r) if r.terms.untagged > 0.0 && r.terms.key_bits.is_finite() => {
            let t = &r.terms;
            let scale = t.privacy.abs() + t.error_correction + t.finite_size;
            let relative = if scale > 0.0 {
                (t.key_bits / scale).clamp(-1.0, 0.0)
            } else {
                -1.0
            };
            relative - (t.phase_error - 0.5).clamp(0.0, 1.0) - f64::MIN_POSITIVE
        }
        _ => f64::NEG_INFINITY,
    }
}

/// The best parameters found and the report at that point.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub source: SourceParams,
    pub report: Result<KeyRateReport>,
    pub evaluations: u32,
}

impl Optimum {
    pub fn rate(&self) -> f64 {
        self.report.as_ref().map_or(0.0, |r| r.rate)
    }
}

struct Search<'a> {
    device: &'a DeviceParams,
    total_pulses: f64,
    distance_km: f64,
    pipeline: Pipeline,
    budget: &'a EpsBudget,
    options: &'a PipelineOptions,
    evaluations: u32,
    max_evaluations: u32,
}

impl Search<'_> {
    fn eval(&mut self, s: &SourceParams) -> (f64, Result<KeyRateReport>) {
        self.evaluations += 1;
        let p = ProtocolParams::symmetric(self.total_pulses, self.distance_km, s);
        let r = evaluate(self.device, &p, self.pipeline, self.budget, self.options);
        (score(&r), r)
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.max_evaluations
    }

    /// One coordinate-descent run from `start`.
    fn descend(
        &mut self,
        start: SourceParams,
        settings: &OptimizerSettings,
    ) -> (SourceParams, f64, Result<KeyRateReport>) {
        let mut x = project(&start);
        let (mut fx, mut rx) = self.eval(&x);
        let mut step = settings.initial_step;
        while step >= settings.min_step && !self.exhausted() {
            let before = fx;
            for i in 0..DIM {
                for dir in [1.0, -1.0] {
                    let mut moved = false;
                    let mut s = step;
                    // Keep stepping, doubling, while the objective improves.
                    loop {
                        let mut v = to_vec(&x);
                        v[i] *= (dir * s).exp();
                        let cand = project(&from_vec(&v));
                        if cand == x || self.exhausted() {
                            break;
                        }
                        let (fc, rc) = self.eval(&cand);
                        if fc > fx {
                            x = cand;
                            fx = fc;
                            rx = rc;
                            moved = true;
                            s *= 2.0;
                        } else {
                            break;
                        }
                    }
                    if moved {
                        break;
                    }
                }
            }
            let gain = fx - before;
            if gain <= settings.rel_tol * fx.abs() {
                step *= 0.5;
            }
        }
        (x, fx, rx)
    }
}

/// Maximise the rate of `pipeline` at `distance_km`, starting from `start`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_point(
    device: &DeviceParams,
    total_pulses: f64,
    distance_km: f64,
    pipeline: Pipeline,
    budget: &EpsBudget,
    options: &PipelineOptions,
    start: &SourceParams,
    settings: &OptimizerSettings,
    seed: u64,
) -> Optimum {
    let mut search = Search {
        device,
        total_pulses,
        distance_km,
        pipeline,
        budget,
        options,
        evaluations: 0,
        max_evaluations: settings.max_evaluations,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(SourceParams, f64, Result<KeyRateReport>)> = None;
    for k in 0..settings.restarts.max(1) {
        let from = match (k, &best) {
            (0, _) | (_, None) => *start,
            (1, _) => SourceParams::default(),
            (_, Some((b, _, _))) => {
                let mut v = to_vec(b);
                for x in v.iter_mut() {
                    *x *= (settings.initial_step * rng.random_range(-1.0..1.0)).exp();
                }
                from_vec(&v)
            }
        };
        let run = search.descend(from, settings);
        if best.as_ref().is_none_or(|b| run.1 > b.1) {
            best = Some(run);
        }
        if search.exhausted() {
            break;
        }
    }
    let (source, _, report) = best.expect("at least one restart runs");
    Optimum {
        source,
        report,
        evaluations: search.evaluations,
    }
}
