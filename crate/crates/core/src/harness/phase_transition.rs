//! Phase transition diagram: empirical success counts over a grid of
//! (sparsity fraction, measurement fraction) cells, under both the oracle
//! and the discrepancy tuning rule on the same random instances.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::median;
use crate::model::SignalClassSpec;
use crate::seeding::derive_seed;
use crate::tuning::{tune_shrink, TuneMetric};

use super::config::ExperimentConfig;
use super::records::build_instance;
use super::{linspace, thread_pool};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCellRow {
    pub tuning: &'static str,
    pub s_frac: f64,
    pub m_frac: f64,
    pub s: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseTransitionTable {
    pub s_grid: Vec<f64>,
    pub m_grid: Vec<f64>,
    pub rows: Vec<PhaseCellRow>,
}

impl PhaseTransitionTable {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("tuning,s_frac,m_frac,s,m,trials,successes,success_rate,median_relative_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.tuning,
                r.s_frac,
                r.m_frac,
                r.s,
                r.m,
                r.trials,
                r.successes,
                r.successes as f64 / r.trials as f64,
                r.median_relative_error
            ));
        }
        out
    }

    pub fn cell(&self, tuning: &str, s_idx: usize, m_idx: usize) -> &PhaseCellRow {
        let offset = if tuning == "oracle" { 0 } else { self.s_grid.len() * self.m_grid.len() };
        &self.rows[offset + s_idx * self.m_grid.len() + m_idx]
    }
}

const TUNINGS: [&str; 2] = ["oracle", "discrepancy"];

pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<PhaseTransitionTable> {
    cfg.validate()?;
    let solver = cfg.solver.tuned().expect("validated");
    let solve_cfg = cfg.solve_config();
    let threshold = cfg.success_threshold.expect("validated");
    let s_grid = linspace(cfg.s_frac_min, cfg.s_frac_max, cfg.cells_s);
    let m_grid = linspace(cfg.m_frac_min, cfg.m_frac_max, cfg.cells_m);

    let mut items = Vec::new();
    for (si, &s_frac) in s_grid.iter().enumerate() {
        for (mi, &m_frac) in m_grid.iter().enumerate() {
            let s = ((s_frac * cfg.n2 as f64).round() as usize).clamp(1, cfg.n2);
            let m = ((m_frac * (cfg.n1 * cfg.n2) as f64).round() as usize).max(1);
            let grid_index = (si * m_grid.len() + mi) as u64;
            for trial in 0..cfg.trials {
                items.push((si, mi, s, m, grid_index, trial));
            }
        }
    }

    // each item solves both tuning modes on one shared instance and
    // reports (oracle_error, oracle_success, discrepancy_error, ...)
    let pool = thread_pool(cfg.jobs)?;
    let outcomes: Vec<(usize, usize, [(f64, bool); 2])> = pool.install(|| {
        items
            .into_par_iter()
            .map(|(si, mi, s, m, grid_index, trial)| -> Result<(usize, usize, [(f64, bool); 2])> {
                let spec =
                    SignalClassSpec::new(cfg.n1, cfg.n2, cfg.rank, cfg.s1, s as f64, cfg.gamma)?;
                let trial_seed = derive_seed(cfg.seed, grid_index, trial as u64);
                let inst = build_instance(
                    &spec,
                    cfg.ensembles[0],
                    m,
                    cfg.noise_rel,
                    cfg.dense_fraction,
                    cfg.init_rel_error,
                    trial_seed,
                )?;
                let mut per_mode = [(f64::NAN, false); 2];
                for (ti, tuning) in TUNINGS.iter().enumerate() {
                    let metric = if *tuning == "oracle" {
                        TuneMetric::OracleError(&inst.x_hat)
                    } else {
                        TuneMetric::Discrepancy(inst.sample.eta_norm)
                    };
                    let tuned = tune_shrink(
                        &inst.sample.y,
                        &inst.op,
                        &inst.init,
                        &metric,
                        cfg.mu0,
                        solver,
                        &solve_cfg,
                    )?;
                    let rec = inst.record(&tuned.best, Some(threshold), "", trial_seed, 0.0);
                    per_mode[ti] = (rec.relative_error, rec.success);
                }
                Ok((si, mi, per_mode))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let cells = s_grid.len() * m_grid.len();
    let mut errors: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); cells]; 2];
    let mut successes: Vec<Vec<usize>> = vec![vec![0; cells]; 2];
    for (si, mi, per_mode) in outcomes {
        let c = si * m_grid.len() + mi;
        for (ti, (err, ok)) in per_mode.into_iter().enumerate() {
            errors[ti][c].push(err);
            if ok {
                successes[ti][c] += 1;
            }
        }
    }

    let mut rows = Vec::with_capacity(2 * cells);
    for (ti, tuning) in TUNINGS.iter().enumerate() {
        for (si, &s_frac) in s_grid.iter().enumerate() {
            for (mi, &m_frac) in m_grid.iter().enumerate() {
                let c = si * m_grid.len() + mi;
                let s = ((s_frac * cfg.n2 as f64).round() as usize).clamp(1, cfg.n2);
                let m = ((m_frac * (cfg.n1 * cfg.n2) as f64).round() as usize).max(1);
                rows.push(PhaseCellRow {
                    tuning,
                    s_frac,
                    m_frac,
                    s,
                    m,
                    trials: cfg.trials,
                    successes: successes[ti][c],
                    median_relative_error: median(&errors[ti][c]),
                });
            }
        }
    }
    Ok(PhaseTransitionTable { s_grid, m_grid, rows })
}
