//! Parameter sweep: reconstruction error and factor sparsity along a
//! halving grid of penalty weights, in both the equal-parameter and the
//! ratio-locked mode, over repeated random instances.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::model::SignalClassSpec;
use crate::objective::RegularizationParams;
use crate::seeding::derive_seed;

use super::config::ExperimentConfig;
use super::records::{build_instance, TrialRecord};
use super::{run_iterative, thread_pool};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSweepRow {
    pub mode: &'static str,
    pub mu: f64,
    pub trial: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone)]
pub struct ParamSweepTable {
    pub mu_grid: Vec<f64>,
    pub rows: Vec<ParamSweepRow>,
}

impl ParamSweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("mode,mu,trial,{}\n", TrialRecord::CSV_FIELDS);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.mode, r.mu, r.trial, r.record.csv_row()));
        }
        out
    }
}

const MODES: [&str; 2] = ["equal", "locked"];

pub fn run_param_sweep(cfg: &ExperimentConfig) -> Result<ParamSweepTable> {
    cfg.validate()?;
    let spec = SignalClassSpec::new(cfg.n1, cfg.n2, cfg.rank, cfg.s1, cfg.s2, cfg.gamma)?;
    let ensemble = cfg.ensembles[0];
    let m = cfg.m_grid[0];
    let solver = cfg.solver.tuned().expect("validated");
    let solve_cfg = cfg.solve_config();
    let digest = cfg.digest();
    let mu_grid: Vec<f64> = (0..cfg.halvings).map(|j| cfg.mu0 / f64::powi(2.0, j as i32)).collect();
    let s_lock = cfg.s1.max(cfg.s2);

    let pool = thread_pool(cfg.jobs)?;
    let per_trial: Vec<Vec<ParamSweepRow>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<ParamSweepRow>> {
                let trial_seed = derive_seed(cfg.seed, 0, trial as u64);
                let inst = build_instance(
                    &spec,
                    ensemble,
                    m,
                    cfg.noise_rel,
                    cfg.dense_fraction,
                    cfg.init_rel_error,
                    trial_seed,
                )?;
                let mut rows = Vec::with_capacity(MODES.len() * mu_grid.len());
                for (mode_idx, mode) in MODES.iter().enumerate() {
                    for &mu in &mu_grid {
                        let params = if mode_idx == 0 {
                            RegularizationParams::equal(mu)?
                        } else {
                            RegularizationParams::theorem_locked(mu, cfg.gamma, s_lock)?
                        };
                        let start = Instant::now();
                        let result = run_iterative(
                            solver,
                            &inst.sample.y,
                            &inst.op,
                            &params,
                            &inst.init,
                            &solve_cfg,
                        )?;
                        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                        rows.push(ParamSweepRow {
                            mode,
                            mu,
                            trial,
                            record: inst.record(
                                &result,
                                cfg.success_threshold,
                                &digest,
                                trial_seed,
                                wall_ms,
                            ),
                        });
                    }
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // output sorted by (mode, grid point, trial) regardless of scheduling
    let mut rows = Vec::with_capacity(cfg.trials * MODES.len() * mu_grid.len());
    for mode_idx in 0..MODES.len() {
        for mu_idx in 0..mu_grid.len() {
            for trial_rows in &per_trial {
                rows.push(trial_rows[mode_idx * mu_grid.len() + mu_idx].clone());
            }
        }
    }
    Ok(ParamSweepTable { mu_grid, rows })
}
