//! Reference instances, reproduction runs and the self-test harness.

pub mod instances;
pub mod plot;
pub mod reproduce;
pub mod selftest;
pub mod theorems;

pub use reproduce::{reproduce, ExperimentId, ExperimentOutcome, ExperimentSpec, RatioSeries};
pub use selftest::{selftest, SelftestOptions, SelftestReport, SuiteResult, SUITES};
pub use theorems::{theorem_rate, TheoremRate};
