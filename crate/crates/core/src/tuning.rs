//! Parameter selection: the shrink-by-half sweep with either the oracle
//! (best-approximation) metric or the discrepancy metric, and the
//! theoretically motivated ratio lock.
//!
//! The sweep starts at a weight large enough that the solve returns the
//! zero factorization, then halves the weight, warm-starting each solve
//! from the previous solution, until the metric has increased twice in a
//! row.

use std::io::Write;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::fro_norm;
use crate::measure::MeasurementOperator;
use crate::model::{effective_sparsity, Factorization};
use crate::objective::RegularizationParams;
use crate::scalar::Float;
use crate::solvers::{alternating_minimization, palm, SolveConfig, SolveResult};

/// Which iterative scheme a tuned run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Am,
    Palm,
}

impl SolverKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SolverKind::Am => "am",
            SolverKind::Palm => "palm",
        }
    }
}

/// Selection metric along the sweep.
#[derive(Debug, Clone, Copy)]
pub enum TuneMetric<'a, F> {
    /// `|X_hat - X|_F / |X_hat|_F` against the known ground truth.
    OracleError(&'a Array2<F>),
    /// `| |y - A(X)|_2 - eta_norm |` from the known noise norm.
    Discrepancy(F),
}

impl<F: Float> TuneMetric<'_, F> {
    fn eval(&self, result: &SolveResult<F>) -> F {
        match self {
            TuneMetric::OracleError(truth) => {
                let diff = *truth - &result.factors.product();
                fro_norm(&diff) / fro_norm(truth)
            }
            TuneMetric::Discrepancy(eta_norm) => (result.misfit - *eta_norm).abs(),
        }
    }
}

/// One recorded sweep step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<F> {
    pub mu: F,
    pub metric: F,
    pub misfit: F,
    /// Effective sparsity of the right factor relative to its row count.
    pub effective_sparsity: F,
}

#[derive(Debug, Clone)]
pub struct TuneResult<F> {
    pub best_mu: F,
    pub best: SolveResult<F>,
    pub sweep: Vec<SweepPoint<F>>,
}

impl<F: Float> TuneResult<F> {
    /// Emit the sweep table as CSV rows.
    pub fn write_sweep_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "mu,metric,misfit,effective_sparsity")?;
        for p in &self.sweep {
            writeln!(
                w,
                "{},{},{},{}",
                p.mu.to_f64().unwrap_or(f64::NAN),
                p.metric.to_f64().unwrap_or(f64::NAN),
                p.misfit.to_f64().unwrap_or(f64::NAN),
                p.effective_sparsity.to_f64().unwrap_or(f64::NAN),
            )?;
        }
        Ok(())
    }
}

const MU0_DOUBLINGS: usize = 60;
const MU_FLOOR: f64 = 1e-12;

fn run_solver<F: Float>(
    kind: SolverKind,
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    p: &RegularizationParams<F>,
    init: &Factorization<F>,
    cfg: &SolveConfig<F>,
) -> Result<SolveResult<F>> {
    match kind {
        SolverKind::Am => alternating_minimization(y, op, p, init, cfg),
        SolverKind::Palm => palm(y, op, p, init, cfg),
    }
}

fn sweep_point<F: Float>(mu: F, metric: F, result: &SolveResult<F>) -> SweepPoint<F> {
    let v = &result.factors.v;
    SweepPoint {
        mu,
        metric,
        misfit: result.misfit,
        effective_sparsity: effective_sparsity(v, result.factors.rank_budget())
            / F::cast(v.nrows() as f64),
    }
}

/// Shrink-by-half parameter sweep with all four weights set to the common
/// value `mu` (the empirically preferred equal-parameter mode).
///
/// `mu0` is doubled first if needed until the solve at `mu0` returns the
/// zero factorization. The sweep stops after two consecutive metric
/// increases or when `mu` underflows; the best recorded solve is returned.
pub fn tune_shrink<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    init: &Factorization<F>,
    metric: &TuneMetric<'_, F>,
    mu0: F,
    solver: SolverKind,
    cfg: &SolveConfig<F>,
) -> Result<TuneResult<F>> {
    if mu0 <= F::zero() {
        return Err(Error::InvalidArgument("mu0 must be positive".into()));
    }

    // establish the zero-solution starting weight
    let mut mu = mu0;
    let mut first = None;
    for _ in 0..=MU0_DOUBLINGS {
        let result = run_solver(solver, y, op, &RegularizationParams::equal(mu)?, init, cfg)?;
        if fro_norm(&result.factors.product()) == F::zero() {
            first = Some(result);
            break;
        }
        mu = mu * F::cast(2.0);
    }
    let first = first.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no zero solution after {MU0_DOUBLINGS} doublings of mu0"
        ))
    })?;

    let m0 = metric.eval(&first);
    let mut sweep = vec![sweep_point(mu, m0, &first)];
    let mut best_mu = mu;
    let mut best_metric = m0;
    let mut best = first.clone();
    let mut prev_result = first;
    let mut prev_metric = m0;
    let mut increases = 0usize;
    let floor = F::cast(MU_FLOOR);

    while mu > floor {
        mu = mu / F::cast(2.0);
        // zero factors are fixed points of both schemes, so fall back to
        // the original initialization when the previous solve collapsed
        let warm = if fro_norm(&prev_result.factors.product()) > F::zero() {
            prev_result.factors.clone()
        } else {
            init.clone()
        };
        let result = run_solver(solver, y, op, &RegularizationParams::equal(mu)?, &warm, cfg)?;
        let m = metric.eval(&result);
        sweep.push(sweep_point(mu, m, &result));
        if m < best_metric {
            best_metric = m;
            best_mu = mu;
            best = result.clone();
        }
        increases = if m > prev_metric { increases + 1 } else { 0 };
        prev_metric = m;
        prev_result = result;
        if increases >= 2 {
            break;
        }
    }

    Ok(TuneResult { best_mu, best, sweep })
}

/// Ratio-locked parameters from a base weight:
/// `a2 = b2 = mu`, `a1 = b1 = sqrt(s/gamma) * mu`.
pub fn lock_ratio<F: Float>(mu: F, gamma: F, s: F) -> Result<RegularizationParams<F>> {
    if mu <= F::zero() {
        return Err(Error::InvalidArgument("mu must be positive".into()));
    }
    RegularizationParams::theorem_locked(mu, gamma, s)
}

/// Ratio-locked parameters small enough that the global minimizer's misfit
/// stays within twice the noise norm, computed from the factor norms of
/// the sampled truth.
///
/// Each weight is bounded by `eta^2 / (2 * norm)` with the matching factor
/// norm; the lock then fixes the base weight to the tightest bound.
pub fn lemma_small_locked<F: Float>(
    truth: &Factorization<F>,
    eta_norm: F,
    gamma: F,
    s: F,
) -> Result<RegularizationParams<F>> {
    if eta_norm <= F::zero() {
        return Err(Error::InvalidArgument("eta_norm must be positive".into()));
    }
    let two = F::cast(2.0);
    let eta2 = eta_norm * eta_norm;
    let nu_f = fro_norm(&truth.u);
    let nv_f = fro_norm(&truth.v);
    let nu_1 = crate::linalg::l1_norm(&truth.u);
    let nv_1 = crate::linalg::l1_norm(&truth.v);
    if nu_f == F::zero() || nv_f == F::zero() || nu_1 == F::zero() || nv_1 == F::zero() {
        return Err(Error::InvalidArgument("truth factors must be nonzero".into()));
    }
    let rho = (s / gamma).sqrt();
    let mu = (eta2 / (two * nu_1))
        .min(eta2 / (two * nv_1))
        .min(eta2 / (two * nu_f * nu_f) / rho)
        .min(eta2 / (two * nv_f * nv_f) / rho);
    lock_ratio(mu, gamma, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::add_noise;
    use crate::model::{perturb_initialization, sample_ground_truth, SignalClassSpec};
    use crate::seeding::rng_from_seed;

    #[test]
    fn lock_ratio_examples() {
        let p = lock_ratio(0.37f64, 2.0, 2.0).unwrap();
        assert_eq!(p.alpha1, 0.37);
        assert_eq!(p.alpha2, 0.37);
        assert_eq!(p.beta1, 0.37);
        assert_eq!(p.beta2, 0.37);

        let p = lock_ratio(0.1f64, 1.0, 20.0).unwrap();
        assert!((p.alpha1 - 0.4472135954999579).abs() < 1e-15);
        assert_eq!(p.alpha2, 0.1);
        assert!((p.beta1 - 0.4472135954999579).abs() < 1e-15);
        assert_eq!(p.beta2, 0.1);
        p.validate().unwrap();
    }

    #[test]
    fn lemma_small_lock_respects_all_four_bounds() {
        let mut rng = rng_from_seed(90);
        let spec = SignalClassSpec::new(12, 30, 1, 6.0, 6.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        let eta = 0.05;
        let p = lemma_small_locked(&truth, eta, 1.0, 6.0).unwrap();
        let eta2 = eta * eta;
        let nu_f = fro_norm(&truth.u);
        let nv_f = fro_norm(&truth.v);
        assert!(p.alpha1 <= eta2 / (2.0 * nu_f * nu_f) + 1e-15);
        assert!(p.beta1 <= eta2 / (2.0 * nv_f * nv_f) + 1e-15);
        assert!(p.alpha2 <= eta2 / (2.0 * crate::linalg::l1_norm(&truth.u)) + 1e-15);
        assert!(p.beta2 <= eta2 / (2.0 * crate::linalg::l1_norm(&truth.v)) + 1e-15);
        p.validate().unwrap();
    }

    #[test]
    fn sweep_starts_at_zero_solution_and_finds_small_error() {
        // small noiseless instance: the oracle sweep must plateau near zero
        let mut rng = rng_from_seed(91);
        let spec = SignalClassSpec::new(8, 12, 1, 4.0, 4.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        let op = MeasurementOperator::gaussian(8, 12, 48, &mut rng).unwrap();
        let y = op.forward(&truth.product()).unwrap();
        let init = perturb_initialization(&truth, 0.6, &mut rng).unwrap();
        let x_hat = truth.product();

        let metric = TuneMetric::OracleError(&x_hat);
        let res = tune_shrink(
            &y,
            &op,
            &init,
            &metric,
            1e6 * y.iter().map(|v| v * v).sum::<f64>(),
            SolverKind::Am,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!((res.sweep[0].metric - 1.0).abs() < 1e-12, "zero solution first");
        assert!(
            res.sweep.iter().map(|p| p.metric).fold(f64::INFINITY, f64::min) <= 1e-3,
            "sweep should plateau near zero error: {:?}",
            res.sweep.iter().map(|p| p.metric).collect::<Vec<_>>()
        );
        assert!(res.best_mu < 1e6);
    }

    #[test]
    fn sweep_discrepancy_metric_tracks_noise_norm() {
        let mut rng = rng_from_seed(92);
        let spec = SignalClassSpec::new(8, 12, 1, 4.0, 4.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        let op = MeasurementOperator::gaussian(8, 12, 48, &mut rng).unwrap();
        let clean = op.forward(&truth.product()).unwrap();
        let sample = add_noise(&clean, 0.05, fro_norm(&truth.product()), &mut rng).unwrap();
        let init = perturb_initialization(&truth, 0.6, &mut rng).unwrap();

        let metric = TuneMetric::Discrepancy(sample.eta_norm);
        let res = tune_shrink(
            &sample.y,
            &op,
            &init,
            &metric,
            64.0,
            SolverKind::Am,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!(
            res.best.misfit <= 2.5 * sample.eta_norm,
            "misfit {} vs eta {}",
            res.best.misfit,
            sample.eta_norm
        );
    }

    #[test]
    fn sweep_rejects_nonpositive_mu0() {
        let mut rng = rng_from_seed(93);
        let spec = SignalClassSpec::new(4, 5, 1, 2.0, 2.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        let op = MeasurementOperator::gaussian(4, 5, 10, &mut rng).unwrap();
        let y = op.forward(&truth.product()).unwrap();
        let x_hat = truth.product();
        let err = tune_shrink(
            &y,
            &op,
            &truth,
            &TuneMetric::OracleError(&x_hat),
            0.0,
            SolverKind::Am,
            &SolveConfig::default(),
        );
        assert!(err.is_err());
    }
}
