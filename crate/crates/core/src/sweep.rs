//! Distance sweeps with per-point optimization of the source parameters.
//!
//! Each pipeline walks the grid in increasing distance, warm-starting every point from
//! the optimum of the previous positive-rate point. Pipelines run concurrently; within a
//! pipeline the walk is sequential, so the output does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{DeviceParams, SourceParams};
use crate::error::{Error, Result};
use crate::key_rate::plob_bounds;
use crate::ledger::EpsBudget;
use crate::optimize::{optimize_point, OptimizerSettings, Optimum};
use crate::pipeline::{KeyRateReport, Pipeline, PipelineOptions, RateFlag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceGrid {
    pub start_km: f64,
    pub stop_km: f64,
    pub step_km: f64,
}

impl Default for DistanceGrid {
    fn default() -> Self {
        DistanceGrid {
            start_km: 0.0,
            stop_km: 500.0,
            step_km: 10.0,
        }
    }
}

impl DistanceGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.start_km.is_finite()
            && self.stop_km.is_finite()
            && self.start_km >= 0.0
            && self.stop_km >= self.start_km
            && self.step_km > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "distance grid {}..{} step {} km is not increasing from a non-negative start",
                self.start_km, self.stop_km, self.step_km
            )));
        }
        Ok(())
    }

    /// Grid points, including `stop_km` when it lies on the grid.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop_km - self.start_km) / self.step_km + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| self.start_km + i as f64 * self.step_km)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub total_pulses: f64,
    pub grid: DistanceGrid,
    pub pipelines: Vec<Pipeline>,
    pub optimizer: OptimizerSettings,
    pub budget: EpsBudget,
    pub options: PipelineOptions,
    /// Starting point of the first grid distance.
    pub start: SourceParams,
    /// Bisection tolerance for the maximum distance; zero keeps the grid value.
    pub edge_tolerance_km: f64,
    pub seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            total_pulses: 1e12,
            grid: DistanceGrid::default(),
            pipelines: Pipeline::ALL.to_vec(),
            optimizer: OptimizerSettings::default(),
            budget: EpsBudget::default(),
            options: PipelineOptions::default(),
            start: SourceParams::default(),
            edge_tolerance_km: 1.0,
            seed: 0,
        }
    }
}

impl SweepSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_pulses.is_finite() && self.total_pulses >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "total pulse count {} must be at least one",
                self.total_pulses
            )));
        }
        if self.pipelines.is_empty() {
            return Err(Error::InvalidArgument("no pipelines selected".into()));
        }
        if !(self.edge_tolerance_km >= 0.0 && self.edge_tolerance_km.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "edge tolerance {} km must be non-negative",
                self.edge_tolerance_km
            )));
        }
        self.grid.validate()?;
        self.budget.validate()
    }
}

/// The optimum of one pipeline at one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pipeline: Pipeline,
    pub distance_km: f64,
    pub rate: f64,
    pub plob_absolute: f64,
    pub plob_relative: f64,
    pub source: SourceParams,
    pub flags: Vec<RateFlag>,
    pub evaluations: u32,
    /// Why no report exists at the optimum, if none does.
    pub error: Option<String>,
    pub report: Option<KeyRateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub pipeline: Pipeline,
    /// Largest grid distance with a positive rate.
    pub grid_max_distance_km: Option<f64>,
    /// The same, refined by bisection towards the next grid point.
    pub max_distance_km: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub summaries: Vec<PipelineSummary>,
}

impl SweepResult {
    pub fn points_of(&self, pipeline: Pipeline) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(move |p| p.pipeline == pipeline)
    }

    pub fn summary(&self, pipeline: Pipeline) -> Option<&PipelineSummary> {
        self.summaries.iter().find(|s| s.pipeline == pipeline)
    }
}

fn point_seed(seed: u64, pipeline: Pipeline, index: usize) -> u64 {
    let lane = Pipeline::ALL
        .iter()
        .position(|&p| p == pipeline)
        .unwrap_or(0) as u64;
    seed ^ (lane << 56) ^ index as u64
}

impl SweepPoint {
    /// The row of an evaluated point.
    pub fn from_report(
        device: &DeviceParams,
        source: SourceParams,
        evaluations: u32,
        report: KeyRateReport,
    ) -> Self {
        let (pipeline, distance_km, rate) = (report.pipeline, report.distance_km, report.rate);
        let flags = report.flags.clone();
        Self::bare(
            pipeline,
            distance_km,
            device,
            source,
            evaluations,
            rate,
            flags,
            Some(report),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn bare(
        pipeline: Pipeline,
        distance_km: f64,
        device: &DeviceParams,
        source: SourceParams,
        evaluations: u32,
        rate: f64,
        flags: Vec<RateFlag>,
        report: Option<KeyRateReport>,
    ) -> Self {
        let (plob_absolute, plob_relative) = plob_bounds(
            distance_km,
            device.fiber_loss_db_km,
            device.detector_efficiency,
        );
        SweepPoint {
            pipeline,
            distance_km,
            rate,
            plob_absolute,
            plob_relative,
            source,
            flags,
            evaluations,
            error: None,
            report,
        }
    }
}

fn to_point(pipeline: Pipeline, distance_km: f64, device: &DeviceParams, o: Optimum) -> SweepPoint {
    match o.report {
        Ok(r) => SweepPoint::from_report(device, o.source, o.evaluations, r),
        Err(e) => SweepPoint {
            error: Some(e.to_string()),
            ..SweepPoint::bare(
                pipeline,
                distance_km,
                device,
                o.source,
                o.evaluations,
                0.0,
                Vec::new(),
                None,
            )
        },
    }
}

fn sweep_pipeline(
    device: &DeviceParams,
    settings: &SweepSettings,
    pipeline: Pipeline,
) -> (Vec<SweepPoint>, PipelineSummary) {
    let optimize = |distance: f64, start: &SourceParams, seed: u64| {
        optimize_point(
            device,
            settings.total_pulses,
            distance,
            pipeline,
            &settings.budget,
            &settings.options,
            start,
            &settings.optimizer,
            seed,
        )
    };
    let grid = settings.grid.points();
    let mut points = Vec::with_capacity(grid.len());
    let mut warm = settings.start;
    let mut last_positive: Option<(usize, SourceParams)> = None;
    for (i, &d) in grid.iter().enumerate() {
        let o = optimize(d, &warm, point_seed(settings.seed, pipeline, i));
        if o.rate() > 0.0 {
            warm = o.source;
            last_positive = Some((i, o.source));
        }
        points.push(to_point(pipeline, d, device, o));
    }

    let grid_max = last_positive.map(|(i, _)| grid[i]);
    let mut max_distance = grid_max;
    if let Some((i, mut source)) = last_positive {
        if let Some(&next) = grid.get(i + 1) {
            if settings.edge_tolerance_km > 0.0 {
                let (mut lo, mut hi) = (grid[i], next);
                let mut k = 0;
                while hi - lo > settings.edge_tolerance_km {
                    let mid = 0.5 * (lo + hi);
                    k += 1;
                    let o = optimize(
                        mid,
                        &source,
                        point_seed(settings.seed, pipeline, grid.len() + k),
                    );
                    if o.rate() > 0.0 {
                        lo = mid;
                        source = o.source;
                    } else {
                        hi = mid;
                    }
                }
                max_distance = Some(lo);
            }
        }
    }
    let summary = PipelineSummary {
        pipeline,
        grid_max_distance_km: grid_max,
        max_distance_km: max_distance,
    };
    (points, summary)
}

/// Optimize every selected pipeline at every grid distance.
pub fn sweep(device: &DeviceParams, settings: &SweepSettings) -> Result<SweepResult> {
    device.validate()?;
    settings.validate()?;
    let mut pipelines = settings.pipelines.clone();
    pipelines.sort();
    pipelines.dedup();
    let per: Vec<(Vec<SweepPoint>, PipelineSummary)> = pipelines
        .par_iter()
        .map(|&p| sweep_pipeline(device, settings, p))
        .collect();
    let mut points = Vec::new();
    let mut summaries = Vec::new();
    for (pts, s) in per {
        points.extend(pts);
        summaries.push(s);
    }
    Ok(SweepResult { points, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = DistanceGrid {
            start_km: 0.0,
            stop_km: 30.0,
            step_km: 10.0,
        };
        assert_eq!(g.points(), vec![0.0, 10.0, 20.0, 30.0]);
        let g = DistanceGrid {
            start_km: 5.0,
            stop_km: 29.0,
            step_km: 10.0,
        };
        assert_eq!(g.points(), vec![5.0, 15.0, 25.0]);
        assert!(DistanceGrid { step_km: 0.0, ..g }.validate().is_err());
        assert!(DistanceGrid { stop_km: 1.0, ..g }.validate().is_err());
    }

    #[test]
    fn small_sweep_is_deterministic_and_finds_an_edge() {
        let settings = SweepSettings {
            grid: DistanceGrid {
                start_km: 380.0,
                stop_km: 480.0,
                step_km: 50.0,
            },
            pipelines: vec![Pipeline::Twcc],
            optimizer: OptimizerSettings {
                restarts: 1,
                max_evaluations: 300,
                ..Default::default()
            },
            edge_tolerance_km: 10.0,
            ..Default::default()
        };
        let dev = DeviceParams::default();
        let a = sweep(&dev, &settings).unwrap();
        let b = sweep(&dev, &settings).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 3);
        let s = a.summary(Pipeline::Twcc).unwrap();
        let edge = s.max_distance_km.unwrap();
        assert!((380.0..480.0).contains(&edge), "{edge}");
        assert!(a.points[0].rate > 0.0 && a.points[2].rate == 0.0);
    }
}
