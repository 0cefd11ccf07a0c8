//! Experiment orchestration: configs, runners, reports and CSV series.

mod config;
mod report;
mod run;

pub use config::{
    CapConfig, EscapeVerifyParams, Experiment, ExperimentConfig, FeynmanCompareParams, FlowCertifyParams, GridSpec, LapParams, LocalCompactnessParams,
    MetricValidateParams, MourreParams, RadiationParams, RemainderParams, SchwartzParams, SubellipticParams, SuiteConfig, SymbolsAppendixParams,
    EXPERIMENT_NAMES,
};
pub use report::{ExperimentReport, Series, SuiteItem, SuiteReport};
pub use run::{run, suite};

use thiserror::Error;

use crate::grid_calculus::GridError;
use crate::hamilton_flow::{CertError, EscapeError};
use crate::metric_symbols::{CutoffError, MetricError};
use crate::resolvent_lab::ResolventError;
use crate::scattering::ScatteringError;

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error(transparent)]
    Certify(#[from] CertError),
    #[error(transparent)]
    Escape(#[from] EscapeError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("{experiment}: {stage}: {source}")]
    Module { experiment: &'static str, stage: &'static str, source: ModuleError },
    #[error("io: {0}")]
    Io(String),
}

impl LabError {
    /// Exit status for command-line use: 2 for config errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}
