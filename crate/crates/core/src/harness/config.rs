//! Experiment configuration: per-experiment defaults, a flat key=value
//! config-file format, and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::measure::Ensemble;
use crate::solvers::{SolveConfig, StepRule};
use crate::tuning::SolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ParamSweep,
    EnsembleCompare,
    PhaseTransition,
    Injectivity,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::ParamSweep => "param-sweep",
            ExperimentKind::EnsembleCompare => "ensemble-compare",
            ExperimentKind::PhaseTransition => "phase-transition",
            ExperimentKind::Injectivity => "injectivity",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "param-sweep" => Ok(ExperimentKind::ParamSweep),
            "ensemble-compare" => Ok(ExperimentKind::EnsembleCompare),
            "phase-transition" => Ok(ExperimentKind::PhaseTransition),
            "injectivity" => Ok(ExperimentKind::Injectivity),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Solver selected on the command line. The baseline is only meaningful
/// for the ensemble comparison, where it restricts the run to the
/// low-rank-only method (it is included as the comparison otherwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Am,
    Palm,
    Baseline,
}

impl SolverChoice {
    pub fn tag(&self) -> &'static str {
        match self {
            SolverChoice::Am => "am",
            SolverChoice::Palm => "palm",
            SolverChoice::Baseline => "baseline",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "am" => Ok(SolverChoice::Am),
            "palm" => Ok(SolverChoice::Palm),
            "baseline" => Ok(SolverChoice::Baseline),
            other => Err(Error::Config(format!("unknown solver '{other}'"))),
        }
    }

    /// The iterative scheme for tuned runs, if this choice names one.
    pub fn tuned(&self) -> Option<SolverKind> {
        match self {
            SolverChoice::Am => Some(SolverKind::Am),
            SolverChoice::Palm => Some(SolverKind::Palm),
            SolverChoice::Baseline => None,
        }
    }
}

/// Metric used by tuned runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningMode {
    /// Best approximation against the known ground truth.
    Oracle,
    /// Drive the residual norm to the known noise norm.
    Discrepancy,
}

impl TuningMode {
    pub fn tag(&self) -> &'static str {
        match self {
            TuningMode::Oracle => "oracle",
            TuningMode::Discrepancy => "discrepancy",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "oracle" => Ok(TuningMode::Oracle),
            "discrepancy" => Ok(TuningMode::Discrepancy),
            other => Err(Error::Config(format!("unknown tuning mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub s1: f64,
    pub s2: f64,
    pub gamma: f64,
    pub ensembles: Vec<Ensemble>,
    pub m_grid: Vec<usize>,
    pub noise_rel: f64,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverChoice,
    pub tuning: TuningMode,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub mu0: f64,
    pub halvings: usize,
    pub success_threshold: Option<f64>,
    pub dense_fraction: f64,
    pub init_rel_error: f64,
    pub rank1_n: usize,
    pub rank1_s: f64,
    pub s_frac_min: f64,
    pub s_frac_max: f64,
    pub m_frac_min: f64,
    pub m_frac_max: f64,
    pub cells_s: usize,
    pub cells_m: usize,
    pub n_samples: usize,
    pub max_outer_iters: usize,
    pub outer_tol: f64,
    pub inner_max_iters: usize,
    pub inner_tol: f64,
}

impl ExperimentConfig {
    /// Paper-derived defaults for each experiment at desk scale.
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let solve = SolveConfig::<f64>::default();
        let mut cfg = Self {
            experiment: kind,
            n1: 20,
            n2: 300,
            rank: 1,
            s1: 20.0,
            s2: 20.0,
            gamma: 1.0,
            ensembles: vec![Ensemble::Gaussian],
            m_grid: vec![160],
            noise_rel: 0.05,
            trials: 20,
            seed: 7,
            solver: SolverChoice::Am,
            tuning: TuningMode::Oracle,
            out: None,
            jobs: 0,
            mu0: 32.0,
            halvings: 20,
            success_threshold: None,
            dense_fraction: 0.1,
            init_rel_error: 0.6,
            rank1_n: 50,
            rank1_s: 10.0,
            s_frac_min: 0.05,
            s_frac_max: 0.3,
            m_frac_min: 0.05,
            m_frac_max: 0.3,
            cells_s: 4,
            cells_m: 4,
            n_samples: 200,
            max_outer_iters: solve.max_outer_iters,
            outer_tol: solve.outer_tol,
            inner_max_iters: solve.inner_max_iters,
            inner_tol: solve.inner_tol,
        };
        match kind {
            ExperimentKind::ParamSweep => {}
            ExperimentKind::EnsembleCompare => {
                cfg.ensembles =
                    vec![Ensemble::Gaussian, Ensemble::LogNormal, Ensemble::Rank1Gaussian];
                cfg.m_grid = vec![160, 220, 300, 380, 460];
                cfg.noise_rel = 0.1;
            }
            ExperimentKind::PhaseTransition => {
                cfg.n1 = 16;
                cfg.n2 = 100;
                cfg.rank = 3;
                cfg.s1 = 16.0;
                cfg.s2 = 16.0; // per-cell value comes from the fraction grid
                cfg.noise_rel = 0.2;
                cfg.success_threshold = Some(0.4);
            }
            ExperimentKind::Injectivity => {
                cfg.n1 = 20;
                cfg.n2 = 30;
                cfg.s1 = 5.0;
                cfg.s2 = 5.0;
                cfg.m_grid = vec![256, 1024, 4096];
            }
        }
        cfg
    }

    /// Solver knobs exposed through the config.
    pub fn solve_config(&self) -> SolveConfig<f64> {
        SolveConfig {
            max_outer_iters: self.max_outer_iters,
            outer_tol: self.outer_tol,
            inner_max_iters: self.inner_max_iters,
            inner_tol: self.inner_tol,
            step_rule: StepRule::LipschitzInverse,
            step_clamp: SolveConfig::<f64>::default().step_clamp,
            record_trace: false,
        }
    }

    /// Apply `key = value` pairs from a flat config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply one override.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "experiment" => {
                let kind = ExperimentKind::from_tag(value)?;
                if kind != self.experiment {
                    return Err(Error::Config(format!(
                        "config file is for '{}' but the '{}' experiment was requested",
                        kind.tag(),
                        self.experiment.tag()
                    )));
                }
            }
            "n1" => self.n1 = parse(key, value)?,
            "n2" => self.n2 = parse(key, value)?,
            "rank" => self.rank = parse(key, value)?,
            "s1" => self.s1 = parse(key, value)?,
            "s2" => self.s2 = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "ensembles" => {
                self.ensembles = value
                    .split(',')
                    .map(|t| Ensemble::from_tag(t.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "m" => {
                self.m_grid = value
                    .split(',')
                    .map(|t| parse::<usize>("m", t.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "noise_rel" => self.noise_rel = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "solver" => self.solver = SolverChoice::from_tag(value)?,
            "tuning" => self.tuning = TuningMode::from_tag(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "jobs" => self.jobs = parse(key, value)?,
            "mu0" => self.mu0 = parse(key, value)?,
            "halvings" => self.halvings = parse(key, value)?,
            "success_threshold" => self.success_threshold = Some(parse(key, value)?),
            "dense_fraction" => self.dense_fraction = parse(key, value)?,
            "init_rel_error" => self.init_rel_error = parse(key, value)?,
            "rank1_n" => self.rank1_n = parse(key, value)?,
            "rank1_s" => self.rank1_s = parse(key, value)?,
            "s_frac_min" => self.s_frac_min = parse(key, value)?,
            "s_frac_max" => self.s_frac_max = parse(key, value)?,
            "m_frac_min" => self.m_frac_min = parse(key, value)?,
            "m_frac_max" => self.m_frac_max = parse(key, value)?,
            "cells_s" => self.cells_s = parse(key, value)?,
            "cells_m" => self.cells_m = parse(key, value)?,
            "n_samples" => self.n_samples = parse(key, value)?,
            "max_outer_iters" => self.max_outer_iters = parse(key, value)?,
            "outer_tol" => self.outer_tol = parse(key, value)?,
            "inner_max_iters" => self.inner_max_iters = parse(key, value)?,
            "inner_tol" => self.inner_tol = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.rank == 0 {
            return Err(Error::Config("dimensions and rank must be positive".into()));
        }
        if self.s1 < 1.0 || self.s1 > self.n1 as f64 || self.s2 < 1.0 || self.s2 > self.n2 as f64 {
            return Err(Error::Config("sparsity levels must lie in [1, n]".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if self.m_grid.is_empty() || self.m_grid.iter().any(|&m| m == 0) {
            return Err(Error::Config("m grid must be non-empty and positive".into()));
        }
        if self.ensembles.is_empty() {
            return Err(Error::Config("ensemble list must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.noise_rel < 0.0 {
            return Err(Error::Config("noise_rel must be >= 0".into()));
        }
        if self.mu0 <= 0.0 {
            return Err(Error::Config("mu0 must be positive".into()));
        }
        if self.halvings == 0 {
            return Err(Error::Config("halvings must be >= 1".into()));
        }
        if self.init_rel_error <= 0.0 {
            return Err(Error::Config("init_rel_error must be positive".into()));
        }
        if self.dense_fraction < 0.0 {
            return Err(Error::Config("dense_fraction must be >= 0".into()));
        }
        if let Some(t) = self.success_threshold {
            if t <= 0.0 {
                return Err(Error::Config("success_threshold must be positive".into()));
            }
        }
        if self.outer_tol <= 0.0 || self.inner_tol <= 0.0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.inner_max_iters == 0 {
            return Err(Error::Config("iteration caps must be >= 1".into()));
        }
        match self.experiment {
            ExperimentKind::ParamSweep => {
                if self.solver.tuned().is_none() {
                    return Err(Error::Config(
                        "the parameter sweep needs an iterative solver (am or palm)".into(),
                    ));
                }
                let square = self.n1 == self.n2;
                if self.ensembles.iter().any(|e| *e == Ensemble::Rank1Gaussian) && !square {
                    return Err(Error::Config("rank1 ensemble requires square dimensions".into()));
                }
            }
            ExperimentKind::EnsembleCompare => {
                if self.rank1_n == 0 || self.rank1_s < 1.0 || self.rank1_s > self.rank1_n as f64 {
                    return Err(Error::Config("rank1_n / rank1_s out of range".into()));
                }
            }
            ExperimentKind::PhaseTransition => {
                if self.solver.tuned().is_none() {
                    return Err(Error::Config(
                        "the phase transition needs an iterative solver (am or palm)".into(),
                    ));
                }
                if self.cells_s < 2 || self.cells_m < 2 {
                    return Err(Error::Config("phase grid needs at least 2 cells per axis".into()));
                }
                if !(self.s_frac_min > 0.0 && self.s_frac_min <= self.s_frac_max) {
                    return Err(Error::Config("require 0 < s_frac_min <= s_frac_max".into()));
                }
                if !(self.m_frac_min > 0.0 && self.m_frac_min <= self.m_frac_max) {
                    return Err(Error::Config("require 0 < m_frac_min <= m_frac_max".into()));
                }
                if (self.s_frac_min * self.n2 as f64).round() < 1.0 {
                    return Err(Error::Config("s_frac_min * n2 rounds below 1".into()));
                }
                if (self.s_frac_max * self.n2 as f64).round() > self.n2 as f64 {
                    return Err(Error::Config("s_frac_max * n2 exceeds n2".into()));
                }
                if self.success_threshold.is_none() {
                    return Err(Error::Config("phase transition needs a success threshold".into()));
                }
            }
            ExperimentKind::Injectivity => {
                // the envelope fit needs at least two points
                if self.n_samples < 2 {
                    return Err(Error::Config("n_samples must be >= 2".into()));
                }
            }
        }
        if self
            .ensembles
            .iter()
            .any(|e| matches!(e, Ensemble::Rank1Gaussian))
            && self.experiment != ExperimentKind::EnsembleCompare
            && self.n1 != self.n2
        {
            return Err(Error::Config("rank1 ensemble requires square dimensions".into()));
        }
        Ok(())
    }

    /// Canonical single-line rendering of every field, used for digests.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let ensembles: Vec<&str> = self.ensembles.iter().map(|e| e.tag()).collect();
        let m: Vec<String> = self.m_grid.iter().map(|m| m.to_string()).collect();
        write!(
            s,
            "experiment={};n1={};n2={};rank={};s1={};s2={};gamma={};ensembles={};m={};\
             noise_rel={};trials={};seed={};solver={};tuning={};jobs={};mu0={};halvings={};\
             success_threshold={};dense_fraction={};init_rel_error={};rank1_n={};rank1_s={};\
             s_frac=[{},{}];m_frac=[{},{}];cells=[{},{}];n_samples={};\
             max_outer_iters={};outer_tol={};inner_max_iters={};inner_tol={}",
            self.experiment.tag(),
            self.n1,
            self.n2,
            self.rank,
            self.s1,
            self.s2,
            self.gamma,
            ensembles.join("|"),
            m.join("|"),
            self.noise_rel,
            self.trials,
            self.seed,
            self.solver.tag(),
            self.tuning.tag(),
            self.jobs,
            self.mu0,
            self.halvings,
            self.success_threshold.map_or("none".to_string(), |t| t.to_string()),
            self.dense_fraction,
            self.init_rel_error,
            self.rank1_n,
            self.rank1_s,
            self.s_frac_min,
            self.s_frac_max,
            self.m_frac_min,
            self.m_frac_max,
            self.cells_s,
            self.cells_m,
            self.n_samples,
            self.max_outer_iters,
            self.outer_tol,
            self.inner_max_iters,
            self.inner_tol,
        )
        .expect("writing to string cannot fail");
        s
    }

    /// FNV-1a digest of the canonical config string.
    pub fn digest(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
        format!("{h:016x}")
    }
}
