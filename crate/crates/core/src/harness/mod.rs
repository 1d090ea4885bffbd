//! Experiment harness: configuration, deterministic trial execution on a
//! worker pool, and CSV result tables for the four experiment drivers.

pub mod config;
mod ensemble_compare;
mod injectivity;
mod param_sweep;
mod phase_transition;
mod records;

pub use config::{ExperimentConfig, ExperimentKind, SolverChoice, TuningMode};
pub use ensemble_compare::{run_ensemble_compare, EnsembleCompareRow, EnsembleCompareTable};
pub use injectivity::{run_injectivity, InjectivityRow, InjectivityTable};
pub use param_sweep::{run_param_sweep, ParamSweepRow, ParamSweepTable};
pub use phase_transition::{run_phase_transition, PhaseCellRow, PhaseTransitionTable};
pub use records::{build_instance, TrialInstance, TrialRecord};

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::measure::MeasurementOperator;
use crate::model::Factorization;
use crate::objective::RegularizationParams;
use crate::solvers::{alternating_minimization, palm, SolveConfig, SolveResult};
use crate::tuning::SolverKind;

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

pub(crate) fn run_iterative(
    kind: SolverKind,
    y: &Array1<f64>,
    op: &MeasurementOperator<f64>,
    p: &RegularizationParams<f64>,
    init: &Factorization<f64>,
    cfg: &SolveConfig<f64>,
) -> Result<SolveResult<f64>> {
    match kind {
        SolverKind::Am => alternating_minimization(y, op, p, init, cfg),
        SolverKind::Palm => palm(y, op, p, init, cfg),
    }
}

/// Evenly spaced grid including both endpoints.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
