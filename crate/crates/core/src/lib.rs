//! Extended hypothalamus–pituitary–adrenal (HPA) axis model.
//!
//! Three coupled hormone equations (CRH, ACTH, cortisol) with Hill-type
//! feedback, a hippocampal term on CRH release, an AVP pathway on ACTH and a
//! circadian daylight forcing. Around the model sit an integrator, MAPE/RMSE
//! scoring, a bounded simplex calibrator, local sensitivity analysis and a CLI.
//!
//! Batch work (per-parameter sensitivities, multi-start fits, batch
//! integration) runs in parallel through [`Execution`] when the `parallel`
//! feature is on.

// `!(x > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod integrator;
pub mod io;
pub mod metrics;
pub mod model;
pub mod params;
pub mod sensitivity;
pub mod synthetic;

pub use calibration::{fit, fit_with, objective, FitOptions, FitProblem, FitResult, ObjectiveKind};
pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use integrator::{
    integrate, integrate_batch, sample, step_rk4, IntegrationConfig, StepMode, Trajectory,
};
pub use io::parse_observations;
pub use metrics::{mape, rmse, score_fit, FitScore, ObservationSeries};
pub use model::{
    crh_feedback_factor, daylight, hill, rhs, steady_state_open_loop, Derivatives, HormoneState,
};
pub use params::{ParamName, ParameterSet};
pub use sensitivity::{
    analyze, correlation_matrix, rank_parameters, si_timeseries, SensitivityOptions,
    SensitivityReport,
};
