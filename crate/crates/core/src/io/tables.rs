//! CSV tables: training history, evaluation results, image metrics, and the
//! merged model-by-metric report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::train::{EpochRecord, EvalReport, EvalRow};

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_history(path: &Path, epochs: &[EpochRecord]) -> Result<()> {
    write_rows(path, epochs)
}

pub fn write_eval(path: &Path, report: &EvalReport) -> Result<()> {
    write_rows(
        path,
        report.rows.iter().chain(std::iter::once(&report.mean)),
    )
}

pub fn read_eval(path: &Path) -> Result<Vec<EvalRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub sample_id: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub enl: Option<f64>,
    pub mae: f64,
    pub pslr_db: Option<f64>,
    pub islr_db: Option<f64>,
}

impl MetricsRow {
    pub fn new(sample_id: impl Into<String>, m: &MetricsReport) -> Self {
        Self {
            sample_id: sample_id.into(),
            psnr_db: m.psnr,
            ssim: m.ssim,
            enl: m.enl,
            mae: m.mae,
            pslr_db: m.pslr,
            islr_db: m.islr,
        }
    }
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_rows(path, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub psnr: f64,
    pub ssim: f64,
    pub mae: f64,
}

/// One row per model from each eval CSV's `mean` row.
pub fn merge_reports(inputs: &[(String, Vec<EvalRow>)]) -> Result<Vec<ReportRow>> {
    inputs
        .iter()
        .map(|(model, rows)| {
            let mean = rows
                .iter()
                .find(|r| r.sample_id == "mean")
                .ok_or_else(|| Error::Format(format!("{model}: no mean row")))?;
            Ok(ReportRow {
                model: model.clone(),
                psnr: mean.psnr_db,
                ssim: mean.ssim,
                mae: mean.mae,
            })
        })
        .collect()
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_rows(path, rows)
}
