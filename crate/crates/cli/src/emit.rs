//! CSV and JSON emission for experiment results.
//!
//! CSV rows follow the documented metrics schema
//! (`precoder,M,N,L,tau,D,sigma,iterations,user,signal_db,isi_db,iui_db,sinr_db,seed`);
//! aggregate rows carry `mean` in the user column. JSON output echoes the
//! configuration next to the result rows.

use std::io::Write;
use std::path::Path;

use serde_json::json;

use trdma_core::metrics::MetricsReport;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::runner::{CompareResult, ComplexityRow, SweepResult};
use crate::CliError;

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn finish(mut sink: Box<dyn Write>) -> Result<(), CliError> {
    sink.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Serializes metric reports (and optional aggregates) in the configured
/// format. An empty result set still emits the CSV header.
pub fn write_sweep(
    cfg: &ExperimentConfig,
    result: &SweepResult,
    path: Option<&Path>,
) -> Result<(), CliError> {
    let mut sink = open_sink(path)?;
    let io_err = |e: std::io::Error| CliError::Io(e.to_string());
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(sink, "{}", MetricsReport::CSV_HEADER).map_err(io_err)?;
            for report in &result.rows {
                for row in report.csv_rows() {
                    writeln!(sink, "{row}").map_err(io_err)?;
                }
            }
            for agg in &result.aggregates {
                writeln!(sink, "{}", agg.csv_row()).map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            let doc = json!({
                "config": cfg,
                "results": result.rows,
                "aggregates": result.aggregates,
                "attempted": result.attempted,
                "skipped": result.skipped,
                "failures": result.failures,
            });
            serde_json::to_writer_pretty(&mut sink, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    finish(sink)
}

pub fn write_reports(
    cfg: &ExperimentConfig,
    reports: &[MetricsReport],
    path: Option<&Path>,
) -> Result<(), CliError> {
    let mut sink = open_sink(path)?;
    let io_err = |e: std::io::Error| CliError::Io(e.to_string());
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(sink, "{}", MetricsReport::CSV_HEADER).map_err(io_err)?;
            for report in reports {
                for row in report.csv_rows() {
                    writeln!(sink, "{row}").map_err(io_err)?;
                }
            }
        }
        OutputFormat::Json => {
            let doc = json!({ "config": cfg, "results": reports });
            serde_json::to_writer_pretty(&mut sink, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    finish(sink)
}

pub fn write_compare(
    cfg: &ExperimentConfig,
    result: &CompareResult,
    path: Option<&Path>,
) -> Result<(), CliError> {
    let mut sink = open_sink(path)?;
    let io_err = |e: std::io::Error| CliError::Io(e.to_string());
    match cfg.format {
        OutputFormat::Csv => {
            writeln!(
                sink,
                "precoder,M,trials,signal_db,interference_db,wrap_artifact_db"
            )
            .map_err(io_err)?;
            for e in &result.entries {
                writeln!(
                    sink,
                    "{},{},{},{},{},{}",
                    e.precoder,
                    e.num_antennas,
                    e.trials,
                    trdma_core::metrics::fmt_db(e.signal_db()),
                    trdma_core::metrics::fmt_db(e.interference_db()),
                    e.wrap_artifact_db()
                        .map(trdma_core::metrics::fmt_db)
                        .unwrap_or_else(|| "-".into()),
                )
                .map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            let doc = json!({
                "config": cfg,
                "results": result.entries,
                "attempted": result.attempted,
                "skipped": result.skipped,
                "failures": result.failures,
            });
            serde_json::to_writer_pretty(&mut sink, &doc)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    finish(sink)
}

pub fn write_complexity(
    format: OutputFormat,
    rows: &[ComplexityRow],
    path: Option<&Path>,
) -> Result<(), CliError> {
    let mut sink = open_sink(path)?;
    let io_err = |e: std::io::Error| CliError::Io(e.to_string());
    match format {
        OutputFormat::Csv => {
            writeln!(sink, "M,N,L,iterations,itr_direct,itr_fft,rzf").map_err(io_err)?;
            for r in rows {
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{}",
                    r.num_antennas,
                    r.num_users,
                    r.num_taps,
                    r.iterations,
                    r.itr_direct,
                    r.itr_fft,
                    r.rzf
                )
                .map_err(io_err)?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, rows)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    finish(sink)
}
