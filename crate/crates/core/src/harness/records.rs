//! Per-trial result records and the shared instance builder.

use ndarray::Array2;

use crate::error::Result;
use crate::linalg::fro_norm;
use crate::measure::{add_noise, Ensemble, MeasurementOperator, NoisySample};
use crate::model::{
    effective_sparsity, hard_sparsity, perturb_initialization, sample_ground_truth,
    Factorization, SignalClassSpec,
};
use crate::seeding::{derive_stream, rng_from_seed};
use crate::solvers::SolveResult;

/// One experiment run. `wall_ms` is kept for programmatic use but never
/// serialized: CSV output must be byte-identical across reruns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub config_digest: String,
    pub relative_error: f64,
    pub misfit: f64,
    pub eta_norm: f64,
    /// Effective sparsity of the final right factor relative to its rows.
    pub effective_sparsity: f64,
    /// Fraction of nonzero entries of the final right factor per rank.
    pub hard_sparsity: f64,
    pub outer_iters: usize,
    pub wall_ms: f64,
    pub success: bool,
}

impl TrialRecord {
    pub const CSV_FIELDS: &'static str = "seed,config_digest,relative_error,misfit,eta_norm,\
effective_sparsity,hard_sparsity,outer_iters,success";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.config_digest,
            self.relative_error,
            self.misfit,
            self.eta_norm,
            self.effective_sparsity,
            self.hard_sparsity,
            self.outer_iters,
            self.success
        )
    }
}

/// One sampled problem: ground truth, operator, noisy measurements, and
/// the perturbed initialization.
pub struct TrialInstance {
    pub truth: Factorization<f64>,
    pub x_hat: Array2<f64>,
    pub x_norm: f64,
    pub op: MeasurementOperator<f64>,
    pub sample: NoisySample<f64>,
    pub init: Factorization<f64>,
}

/// Role identifiers for the per-trial stream split.
const ROLE_TRUTH: u64 = 1;
const ROLE_OPERATOR: u64 = 2;
const ROLE_NOISE: u64 = 3;
const ROLE_INIT: u64 = 4;

/// Build one deterministic trial instance from its derived seed.
pub fn build_instance(
    spec: &SignalClassSpec<f64>,
    ensemble: Ensemble,
    m: usize,
    noise_rel: f64,
    dense_fraction: f64,
    init_rel_error: f64,
    trial_seed: u64,
) -> Result<TrialInstance> {
    let mut rng = rng_from_seed(derive_stream(trial_seed, ROLE_TRUTH));
    let truth = sample_ground_truth(spec, dense_fraction, &mut rng)?;
    let x_hat = truth.product();
    let x_norm = fro_norm(&x_hat);

    let mut rng = rng_from_seed(derive_stream(trial_seed, ROLE_OPERATOR));
    let op = match ensemble {
        Ensemble::Gaussian => MeasurementOperator::gaussian(spec.n1, spec.n2, m, &mut rng)?,
        Ensemble::LogNormal => MeasurementOperator::lognormal(spec.n1, spec.n2, m, &mut rng)?,
        Ensemble::Rank1Gaussian => MeasurementOperator::rank1_gaussian(spec.n1, m, &mut rng)?,
        Ensemble::IdentityLike => MeasurementOperator::identity_like(spec.n1, spec.n2)?,
    };

    let clean = op.forward(&x_hat)?;
    let mut rng = rng_from_seed(derive_stream(trial_seed, ROLE_NOISE));
    let sample = add_noise(&clean, noise_rel, x_norm, &mut rng)?;

    let mut rng = rng_from_seed(derive_stream(trial_seed, ROLE_INIT));
    let init = perturb_initialization(&truth, init_rel_error, &mut rng)?;

    Ok(TrialInstance { truth, x_hat, x_norm, op, sample, init })
}

impl TrialInstance {
    /// Summarize a finished solve against this instance.
    pub fn record(
        &self,
        result: &SolveResult<f64>,
        threshold: Option<f64>,
        digest: &str,
        seed: u64,
        wall_ms: f64,
    ) -> TrialRecord {
        let diff = &self.x_hat - &result.factors.product();
        let relative_error = fro_norm(&diff) / self.x_norm;
        let v = &result.factors.v;
        let rank = result.factors.rank_budget();
        TrialRecord {
            seed,
            config_digest: digest.to_string(),
            relative_error,
            misfit: result.misfit,
            eta_norm: self.sample.eta_norm,
            effective_sparsity: effective_sparsity(v, rank) / v.nrows() as f64,
            hard_sparsity: hard_sparsity(v, rank),
            outer_iters: result.outer_iters,
            wall_ms,
            success: match threshold {
                Some(t) => relative_error <= t,
                None => relative_error.is_finite(),
            },
        }
    }
}
