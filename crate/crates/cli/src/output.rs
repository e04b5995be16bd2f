//! Flat CSV rows and JSON documents, written to a file or standard output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use twcc_core::sweep::SweepPoint;
use twcc_core::validation::{DominanceReport, MonteCarloCheck};

use crate::CliError;

pub struct Destination(Option<PathBuf>);

impl Destination {
    pub fn new(path: Option<PathBuf>) -> Self {
        Destination(path)
    }

    fn open(&self) -> Result<Box<dyn Write>, CliError> {
        match &self.0 {
            Some(p) => {
                let f = File::create(p)
                    .map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }
}

/// A closed downstream pipe, as in `twcc sweep | head`, is not an error.
fn io_result(r: io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::Output(e.to_string())),
        _ => Ok(()),
    }
}

fn csv_result(r: csv::Result<()>) -> Result<(), CliError> {
    r.or_else(|e| match e.into_kind() {
        csv::ErrorKind::Io(e) => io_result(Err(e)),
        other => Err(CliError::Output(format!("{other:?}"))),
    })
}

pub fn write_csv<T: Serialize>(out: &Destination, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out.open()?);
    for r in rows {
        csv_result(w.serialize(r))?;
    }
    io_result(w.flush())
}

pub fn write_json<T: Serialize>(out: &Destination, value: &T) -> Result<(), CliError> {
    let mut w = out.open()?;
    io_result(
        serde_json::to_writer_pretty(&mut w, value)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(w))
            .and_then(|_| w.flush()),
    )
}

/// The serialized name of a unit enum variant.
fn tag<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

/// One optimized point per row.
#[derive(Debug, Serialize)]
pub struct PointRow {
    pub pipeline: String,
    pub distance_km: f64,
    pub rate: f64,
    pub plob_absolute: f64,
    pub plob_relative: f64,
    pub eps_tol: Option<f64>,
    pub mu1: f64,
    pub mu2: f64,
    pub mu_z: f64,
    pub p_z: f64,
    pub send_prob: f64,
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
    /// Rate flags separated by `;`.
    pub flags: String,
    pub evaluations: u32,
    pub error: Option<String>,
}

pub fn point_rows(points: &[SweepPoint]) -> Vec<PointRow> {
    points
        .iter()
        .map(|p| PointRow {
            pipeline: p.pipeline.to_string(),
            distance_km: p.distance_km,
            rate: p.rate,
            plob_absolute: p.plob_absolute,
            plob_relative: p.plob_relative,
            eps_tol: p.report.as_ref().map(|r| r.security.eps_tol),
            mu1: p.source.mu1,
            mu2: p.source.mu2,
            mu_z: p.source.mu_z,
            p_z: p.source.p_z,
            send_prob: p.source.send_prob,
            p1: p.source.p1,
            p2: p.source.p2,
            lambda: p.source.lambda,
            flags: p.flags.iter().map(tag).collect::<Vec<_>>().join(";"),
            evaluations: p.evaluations,
            error: p.error.clone(),
        })
        .collect()
}

/// One row per dominance check or Monte Carlo estimate; unused columns stay empty.
#[derive(Debug, Serialize)]
pub struct ValidationRow {
    pub check: String,
    pub comparisons: Option<u64>,
    pub violations: Option<u64>,
    pub worst_margin: Option<f64>,
    pub target: Option<f64>,
    pub threshold: Option<u64>,
    pub claimed_eps: Option<f64>,
    pub frequency: Option<f64>,
    pub passed: bool,
}

pub fn validation_rows(
    dominance: &DominanceReport,
    monte_carlo: &[MonteCarloCheck],
) -> Vec<ValidationRow> {
    let mut rows: Vec<ValidationRow> = dominance
        .summaries
        .iter()
        .map(|s| ValidationRow {
            check: s.check.name().into(),
            comparisons: Some(s.comparisons),
            violations: Some(s.violations),
            worst_margin: Some(s.worst_margin),
            target: None,
            threshold: None,
            claimed_eps: None,
            frequency: None,
            passed: s.violations == 0,
        })
        .collect();
    rows.extend(monte_carlo.iter().map(|m| ValidationRow {
        check: tag(&m.quantity),
        comparisons: Some(m.trials),
        violations: Some(m.failures),
        worst_margin: None,
        target: Some(m.target),
        threshold: Some(m.threshold),
        claimed_eps: Some(m.claimed_eps),
        frequency: Some(m.frequency),
        passed: m.passed,
    }));
    rows
}
