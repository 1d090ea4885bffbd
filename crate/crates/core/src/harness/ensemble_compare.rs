//! Ensemble comparison: tuned reconstruction versus the low-rank-only
//! baseline for varying numbers of measurements, over Gaussian,
//! log-normal, and Gaussian rank-1 ensembles.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::measure::Ensemble;
use crate::model::SignalClassSpec;
use crate::seeding::derive_seed;
use crate::solvers::altmin_sense_baseline;
use crate::tuning::{tune_shrink, TuneMetric};

use super::config::{ExperimentConfig, TuningMode};
use super::records::{build_instance, TrialRecord};
use super::thread_pool;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleCompareRow {
    pub ensemble: &'static str,
    pub m: usize,
    pub method: &'static str,
    pub trial: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone)]
pub struct EnsembleCompareTable {
    pub rows: Vec<EnsembleCompareRow>,
}

impl EnsembleCompareTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("ensemble,m,method,trial,{}\n", TrialRecord::CSV_FIELDS);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.ensemble,
                r.m,
                r.method,
                r.trial,
                r.record.csv_row()
            ));
        }
        out
    }
}

/// The rank-1 ensemble needs square matrices, so it runs on its own
/// square signal class while the dense ensembles share the rectangular
/// one.
fn spec_for(cfg: &ExperimentConfig, ensemble: Ensemble) -> Result<SignalClassSpec<f64>> {
    match ensemble {
        Ensemble::Rank1Gaussian => SignalClassSpec::new(
            cfg.rank1_n,
            cfg.rank1_n,
            cfg.rank,
            cfg.rank1_s,
            cfg.rank1_s,
            cfg.gamma,
        ),
        _ => SignalClassSpec::new(cfg.n1, cfg.n2, cfg.rank, cfg.s1, cfg.s2, cfg.gamma),
    }
}

pub fn run_ensemble_compare(cfg: &ExperimentConfig) -> Result<EnsembleCompareTable> {
    cfg.validate()?;
    let solve_cfg = cfg.solve_config();
    let digest = cfg.digest();

    let mut items = Vec::new();
    for (ei, &ensemble) in cfg.ensembles.iter().enumerate() {
        for (mi, &m) in cfg.m_grid.iter().enumerate() {
            let grid_index = (ei * cfg.m_grid.len() + mi) as u64;
            for trial in 0..cfg.trials {
                items.push((ensemble, m, grid_index, trial));
            }
        }
    }

    let pool = thread_pool(cfg.jobs)?;
    let nested: Vec<Vec<EnsembleCompareRow>> = pool.install(|| {
        items
            .into_par_iter()
            .map(|(ensemble, m, grid_index, trial)| -> Result<Vec<EnsembleCompareRow>> {
                let spec = spec_for(cfg, ensemble)?;
                let trial_seed = derive_seed(cfg.seed, grid_index, trial as u64);
                let inst = build_instance(
                    &spec,
                    ensemble,
                    m,
                    cfg.noise_rel,
                    cfg.dense_fraction,
                    cfg.init_rel_error,
                    trial_seed,
                )?;
                let mut rows = Vec::with_capacity(2);
                if let Some(kind) = cfg.solver.tuned() {
                    let metric = match cfg.tuning {
                        TuningMode::Oracle => TuneMetric::OracleError(&inst.x_hat),
                        TuningMode::Discrepancy => TuneMetric::Discrepancy(inst.sample.eta_norm),
                    };
                    let start = Instant::now();
                    let tuned = tune_shrink(
                        &inst.sample.y,
                        &inst.op,
                        &inst.init,
                        &metric,
                        cfg.mu0,
                        kind,
                        &solve_cfg,
                    )?;
                    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                    rows.push(EnsembleCompareRow {
                        ensemble: ensemble.tag(),
                        m,
                        method: kind.tag(),
                        trial,
                        record: inst.record(
                            &tuned.best,
                            cfg.success_threshold,
                            &digest,
                            trial_seed,
                            wall_ms,
                        ),
                    });
                }
                let start = Instant::now();
                let baseline = altmin_sense_baseline(&inst.sample.y, &inst.op, &inst.init, &solve_cfg)?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                rows.push(EnsembleCompareRow {
                    ensemble: ensemble.tag(),
                    m,
                    method: "baseline",
                    trial,
                    record: inst.record(
                        &baseline,
                        cfg.success_threshold,
                        &digest,
                        trial_seed,
                        wall_ms,
                    ),
                });
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(EnsembleCompareTable { rows: nested.into_iter().flatten().collect() })
}
