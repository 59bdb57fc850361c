//! Benchmark harness: configuration, the (watermark × attack × seed) grid,
//! null calibration, and report output.

pub mod bench;
pub mod calibrate;
pub mod config;
pub mod error;
pub mod report;

pub use bench::{run_bench, BenchCell, BenchReport, CellAggregates, SeedRecord};
pub use calibrate::{calibrate_null, CalibrationRecord};
pub use config::{BenchConfig, ReportFormat};
pub use error::{HarnessError, Result};
pub use report::{emit_report, load_report};
