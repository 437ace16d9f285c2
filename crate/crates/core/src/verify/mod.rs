//! Monte Carlo verification of the limit theorems: scenarios, statistical
//! tests, and reports.

use thiserror::Error;

use crate::laws::LawError;
use crate::limits::LimitsError;
use crate::renewal::RenewalError;
use crate::shotnoise::{Regime, ShotNoiseError};
use crate::stable::StableError;

pub mod report;
pub mod runner;
pub mod scenario;
pub mod stats;

pub use report::{PlotData, RunOutput, TestRecord, TestReport};
pub use runner::{estimate_shots, replicate_path, run_scenario, simulate, SampleMatrix, SampleSummary};
pub use scenario::{GridSection, RegimeSection, RunSection, Scenario, TestKind};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains non-finite values")]
    NonFinite,
    #[error("variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("test {test} does not apply to regime {regime:?}: {reason}")]
    Inapplicable {
        test: &'static str,
        regime: Regime,
        reason: String,
    },
    #[error("expected {estimated:.3e} shots exceeds the cap of {cap:.3e}")]
    ResourceCap { estimated: f64, cap: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    ShotNoise(#[from] ShotNoiseError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error(transparent)]
    Renewal(#[from] RenewalError),
    #[error(transparent)]
    Stable(#[from] StableError),
}
