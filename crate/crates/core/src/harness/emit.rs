//! Result files. Every number is in SI seconds.
//!
//! Curves CSV: `strategy,grid_time_s,uncertainty_s,ci_lo_s,ci_hi_s,bound_s`, one row
//! per strategy and grid point. JSON carries the full summaries with metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::batch::RunSummary;
use super::bench::BenchReport;
use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::protocol::{EpochRecord, Strategy};

pub const CURVE_HEADER: &str = "strategy,grid_time_s,uncertainty_s,ci_lo_s,ci_hi_s,bound_s";
pub const BENCH_HEADER: &str = "particles,mean_s,median_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

/// Curves as CSV text. `f64` values use Rust's shortest round-trip form.
pub fn curves_csv(summaries: &[RunSummary]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for s in summaries {
        for i in 0..s.grid.len() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                s.strategy, s.grid[i], s.uncertainty[i], s.ci_lo[i], s.ci_hi[i], s.bound[i]
            )
            .unwrap();
        }
    }
    out
}

pub fn curves_json(summaries: &[RunSummary]) -> String {
    serde_json::to_string_pretty(summaries).expect("summaries serialise") + "\n"
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for p in &report.points {
        writeln!(out, "{},{:e},{:e}", p.particles, p.mean_s, p.median_s).unwrap();
    }
    out
}

pub fn bench_json(report: &BenchReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialises") + "\n"
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_summaries(summaries: &[RunSummary], path: impl AsRef<Path>, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => curves_csv(summaries),
        Format::Json => curves_json(summaries),
    };
    write(path.as_ref(), &text)
}

pub fn emit_bench(report: &BenchReport, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => bench_csv(report),
        Format::Json => bench_json(report),
    };
    write(path.as_ref(), &text)
}

pub fn load_summaries(path: impl AsRef<Path>) -> Result<Vec<RunSummary>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// One replica's full record, enough to replay it against the logged outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: RunConfig,
    pub strategy: Strategy,
    pub seed: u64,
    pub replica: u64,
    pub records: Vec<EpochRecord>,
}

impl RunLog {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("run log serialises") + "\n";
        write(path.as_ref(), &text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let log: RunLog = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        log.config.validate()?;
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::batch::run_batch;

    fn summary() -> RunSummary {
        let mut cfg = RunConfig::preset("fig4").unwrap();
        cfg.estimator.particles = 100;
        cfg.protocol.epochs = 20;
        cfg.run.grid_points = 10;
        cfg.run.bootstrap_draws = 50;
        run_batch(&cfg, Strategy::AdaptiveVariance, 3).unwrap()
    }

    #[test]
    fn empty_summary_is_header_only() {
        assert_eq!(curves_csv(&[]), format!("{CURVE_HEADER}\n"));
    }

    #[test]
    fn csv_has_one_row_per_grid_point() {
        let s = summary();
        let csv = curves_csv(&[s.clone(), s.clone()]);
        assert_eq!(csv.lines().count(), 1 + 2 * s.grid.len());
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "adaptive-variance");
        assert_eq!(row[1].parse::<f64>().unwrap(), s.grid[0]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = vec![summary()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        emit_summaries(&s, &path, Format::Json).unwrap();
        assert_eq!(load_summaries(&path).unwrap(), s);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_summaries(&[], "/nonexistent-dir/x.csv", Format::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
