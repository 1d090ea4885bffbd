//! Iterative schemes: alternating minimization with inner proximal
//! gradient descent, proximal alternating linearized minimization (one
//! prox-gradient step per block per sweep), and an unregularized
//! alternating least-squares baseline that only exploits low rank.
//!
//! A solve is single-threaded and deterministic given its inputs; the
//! harness runs many solves concurrently.

use std::io::Write;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, unflatten, vec_norm, cholesky_solve_spd};
use crate::measure::{MeasurementOperator, RestrictedMap};
use crate::model::{effective_sparsity, Factorization};
use crate::objective::{prox_enet, ElasticNetWeights, RegularizationParams};
use crate::scalar::Float;

/// Step-size selection for prox-gradient iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule<F> {
    /// `step = 1/L` with `L` the block Lipschitz constant from the
    /// power-iteration norm estimate.
    LipschitzInverse,
    Fixed(F),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig<F> {
    pub max_outer_iters: usize,
    /// Stop when the relative objective decrease over one outer iteration
    /// falls below this.
    pub outer_tol: F,
    pub inner_max_iters: usize,
    /// Inner stop on relative iterate change.
    pub inner_tol: F,
    pub step_rule: StepRule<F>,
    /// Admissible step-size interval; steps outside are clamped and
    /// counted in the result.
    pub step_clamp: (F, F),
    pub record_trace: bool,
}

impl<F: Float> Default for SolveConfig<F> {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            outer_tol: F::cast(1e-6),
            inner_max_iters: 5000,
            inner_tol: F::cast(1e-7),
            step_rule: StepRule::LipschitzInverse,
            step_clamp: (F::cast(1e-12), F::cast(1e12)),
            record_trace: false,
        }
    }
}

impl<F: Float> SolveConfig<F> {
    fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.inner_max_iters == 0 {
            return Err(Error::InvalidArgument("iteration caps must be >= 1".into()));
        }
        if self.outer_tol <= F::zero() || self.inner_tol <= F::zero() {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.step_clamp.0 <= F::zero() || self.step_clamp.1 < self.step_clamp.0 {
            return Err(Error::InvalidArgument("step clamp must satisfy 0 < lo <= hi".into()));
        }
        Ok(())
    }
}

/// One recorded outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<F> {
    pub iteration: usize,
    pub objective: F,
    pub misfit: F,
    /// Effective sparsity of the right factor, relative to its row count.
    pub effective_sparsity: F,
    pub delta_u_sq: F,
    pub delta_v_sq: F,
}

#[derive(Debug, Clone)]
pub struct SolveResult<F> {
    pub factors: Factorization<F>,
    /// Objective values, starting at the initialization.
    pub objective_trace: Vec<F>,
    pub outer_iters: usize,
    pub converged: bool,
    /// Final measurement misfit `|y - A(U V^T)|_2`.
    pub misfit: F,
    /// Set when a zero restricted map or a singular least-squares block
    /// was encountered.
    pub degenerate: bool,
    /// Number of step sizes that fell outside the clamp interval.
    pub clamped_steps: usize,
    pub trace: Option<Vec<TracePoint<F>>>,
}

impl<F: Float> SolveResult<F> {
    /// Emit the recorded trace as CSV rows.
    pub fn write_trace_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iteration,objective,misfit,effective_sparsity")?;
        if let Some(points) = &self.trace {
            for p in points {
                writeln!(
                    w,
                    "{},{},{},{}",
                    p.iteration,
                    p.objective.to_f64().unwrap_or(f64::NAN),
                    p.misfit.to_f64().unwrap_or(f64::NAN),
                    p.effective_sparsity.to_f64().unwrap_or(f64::NAN),
                )?;
            }
        }
        Ok(())
    }
}

/// Outcome of one inner convex solve.
#[derive(Debug, Clone)]
pub struct InnerSolve<F> {
    pub x: Array2<F>,
    pub iters: usize,
    pub converged: bool,
}

/// Proximal gradient descent on `f + g` with `grad` the gradient of the
/// smooth part and `prox(z, step)` the proximal map of `step * g`.
///
/// Under [`StepRule::LipschitzInverse`] the step is `1/lipschitz`. Stops at
/// relative iterate change below `cfg.inner_tol` or at the iteration cap.
pub fn prox_gradient_descent<F, G, P>(
    grad: G,
    lipschitz: F,
    prox: P,
    x0: Array2<F>,
    cfg: &SolveConfig<F>,
) -> Result<InnerSolve<F>>
where
    F: Float,
    G: Fn(&Array2<F>) -> Array2<F>,
    P: Fn(&Array2<F>, F) -> Array2<F>,
{
    let step = match cfg.step_rule {
        StepRule::LipschitzInverse => {
            if lipschitz <= F::zero() {
                return Err(Error::InvalidArgument("lipschitz constant must be positive".into()));
            }
            F::one() / lipschitz
        }
        StepRule::Fixed(s) => s,
    };
    let mut x = x0;
    for k in 1..=cfg.inner_max_iters {
        let g = grad(&x);
        let z = &x - &(&g * step);
        let next = prox(&z, step);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("inner iterate at iteration {k}")));
        }
        let diff = fro_norm(&(&next - &x));
        let scale = fro_norm(&next).max(F::one());
        x = next;
        if diff <= cfg.inner_tol * scale {
            return Ok(InnerSolve { x, iters: k, converged: true });
        }
    }
    Ok(InnerSolve { x, iters: cfg.inner_max_iters, converged: false })
}

struct Objective<F> {
    value: F,
    misfit: F,
}

fn objective_parts<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    f: &Factorization<F>,
    p: &RegularizationParams<F>,
) -> Result<Objective<F>> {
    let residual = y - &op.forward(&f.product())?;
    let misfit = vec_norm(&residual);
    let value = misfit * misfit + p.left().eval(&f.u) + p.right().eval(&f.v);
    if !value.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    Ok(Objective { value, misfit })
}

fn check_solve_shapes<F: Float>(
    op: &MeasurementOperator<F>,
    init: &Factorization<F>,
    y: &Array1<F>,
) -> Result<()> {
    let (n1, n2) = op.dims();
    if init.u.nrows() != n1 || init.v.nrows() != n2 {
        return Err(Error::ShapeMismatch(format!(
            "initialization {}x{} / {}x{} does not match operator {}x{}",
            init.u.nrows(),
            init.u.ncols(),
            init.v.nrows(),
            init.v.ncols(),
            n1,
            n2
        )));
    }
    if y.len() != op.len() {
        return Err(Error::ShapeMismatch(format!(
            "measurement length {} does not match m = {}",
            y.len(),
            op.len()
        )));
    }
    Ok(())
}

/// Exact (to inner tolerance) convex block solve by prox-gradient descent,
/// warm-started at the current block value so the outer objective can only
/// decrease.
fn solve_block<F: Float>(
    y: &Array1<F>,
    map: &RestrictedMap<F>,
    x0: &Array2<F>,
    w: ElasticNetWeights<F>,
    cfg: &SolveConfig<F>,
) -> Result<(Array2<F>, bool)> {
    let norm = map.op_norm_est();
    if norm <= F::zero() {
        // zero map: the block objective reduces to the penalty, whose
        // minimizer is the prox of zero, i.e. zero
        return Ok((Array2::zeros(x0.raw_dim()), true));
    }
    let lipschitz = F::cast(2.0) * norm * norm;
    let grad = |x: &Array2<F>| {
        let r = &map.apply(x) - y;
        map.apply_adjoint(&r) * F::cast(2.0)
    };
    let prox = |z: &Array2<F>, step: F| prox_enet(z, &w, step);
    let sol = prox_gradient_descent(grad, lipschitz, prox, x0.clone(), cfg)?;
    Ok((sol.x, false))
}

/// Alternating minimization: each sweep solves the two convex block
/// problems to the inner tolerance.
pub fn alternating_minimization<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    p: &RegularizationParams<F>,
    init: &Factorization<F>,
    cfg: &SolveConfig<F>,
) -> Result<SolveResult<F>> {
    p.validate()?;
    cfg.validate()?;
    check_solve_shapes(op, init, y)?;

    let mut f = init.clone();
    let mut current = objective_parts(y, op, &f, p)?;
    let mut objective_trace = vec![current.value];
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut converged = false;
    let mut degenerate = false;
    let mut outer_iters = 0;

    for k in 0..cfg.max_outer_iters {
        let u_prev = f.u.clone();
        let v_prev = f.v.clone();

        let map_v = op.restrict_right(&f.v)?;
        let (u_new, deg_u) = solve_block(y, &map_v, &f.u, p.left(), cfg)?;
        f.u = u_new;
        let map_u = op.restrict_left(&f.u)?;
        let (v_new, deg_v) = solve_block(y, &map_u, &f.v, p.right(), cfg)?;
        f.v = v_new;
        degenerate |= deg_u || deg_v;

        let next = objective_parts(y, op, &f, p)?;
        objective_trace.push(next.value);
        outer_iters = k + 1;
        if let Some(points) = &mut trace {
            let du = &f.u - &u_prev;
            let dv = &f.v - &v_prev;
            points.push(TracePoint {
                iteration: outer_iters,
                objective: next.value,
                misfit: next.misfit,
                effective_sparsity: effective_sparsity(&f.v, f.rank_budget())
                    / F::cast(f.v.nrows() as f64),
                delta_u_sq: fro_norm(&du).powi(2),
                delta_v_sq: fro_norm(&dv).powi(2),
            });
        }
        let decrease = current.value - next.value;
        current = next;
        if decrease <= cfg.outer_tol * objective_trace[k].max(F::epsilon()) {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        factors: f,
        objective_trace,
        outer_iters,
        converged,
        misfit: current.misfit,
        degenerate,
        clamped_steps: 0,
        trace,
    })
}

/// One linearized prox-gradient step for a block.
fn palm_block_step<F: Float>(
    y: &Array1<F>,
    map: &RestrictedMap<F>,
    x: &Array2<F>,
    w: ElasticNetWeights<F>,
    cfg: &SolveConfig<F>,
) -> Result<(Array2<F>, usize, bool)> {
    let norm = map.op_norm_est();
    let mut clamped = 0;
    let mut degenerate = false;
    let raw_step = if norm <= F::zero() {
        degenerate = true;
        F::infinity()
    } else {
        match cfg.step_rule {
            StepRule::LipschitzInverse => F::one() / (F::cast(2.0) * norm * norm),
            StepRule::Fixed(s) => s,
        }
    };
    let step = if raw_step < cfg.step_clamp.0 {
        clamped = 1;
        cfg.step_clamp.0
    } else if raw_step > cfg.step_clamp.1 {
        clamped = 1;
        cfg.step_clamp.1
    } else {
        raw_step
    };
    let r = &map.apply(x) - y;
    let g = map.apply_adjoint(&r) * F::cast(2.0);
    let z = x - &(&g * step);
    let next = prox_enet(&z, &w, step);
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("linearized block step".into()));
    }
    Ok((next, clamped, degenerate))
}

/// Proximal alternating linearized minimization: one prox-gradient step
/// per block per outer iteration, with per-block step sizes
/// `1/(2 |A_V|^2)` from the safeguarded norm estimate.
pub fn palm<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    p: &RegularizationParams<F>,
    init: &Factorization<F>,
    cfg: &SolveConfig<F>,
) -> Result<SolveResult<F>> {
    p.validate()?;
    cfg.validate()?;
    check_solve_shapes(op, init, y)?;

    let mut f = init.clone();
    let mut current = objective_parts(y, op, &f, p)?;
    let mut objective_trace = vec![current.value];
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut converged = false;
    let mut degenerate = false;
    let mut clamped_steps = 0;
    let mut outer_iters = 0;

    for k in 0..cfg.max_outer_iters {
        let u_prev = f.u.clone();
        let v_prev = f.v.clone();

        let map_v = op.restrict_right(&f.v)?;
        let (u_new, c_u, deg_u) = palm_block_step(y, &map_v, &f.u, p.left(), cfg)?;
        f.u = u_new;
        let map_u = op.restrict_left(&f.u)?;
        let (v_new, c_v, deg_v) = palm_block_step(y, &map_u, &f.v, p.right(), cfg)?;
        f.v = v_new;
        clamped_steps += c_u + c_v;
        degenerate |= deg_u || deg_v;

        let next = objective_parts(y, op, &f, p)?;
        objective_trace.push(next.value);
        outer_iters = k + 1;
        if let Some(points) = &mut trace {
            let du = &f.u - &u_prev;
            let dv = &f.v - &v_prev;
            points.push(TracePoint {
                iteration: outer_iters,
                objective: next.value,
                misfit: next.misfit,
                effective_sparsity: effective_sparsity(&f.v, f.rank_budget())
                    / F::cast(f.v.nrows() as f64),
                delta_u_sq: fro_norm(&du).powi(2),
                delta_v_sq: fro_norm(&dv).powi(2),
            });
        }
        let decrease = current.value - next.value;
        current = next;
        if decrease <= cfg.outer_tol * objective_trace[k].max(F::epsilon()) {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        factors: f,
        objective_trace,
        outer_iters,
        converged,
        misfit: current.misfit,
        degenerate,
        clamped_steps,
        trace,
    })
}

/// Tikhonov floor added to the normal equations of the baseline.
const BASELINE_FLOOR: f64 = 1e-10;

fn least_squares_block<F: Float>(
    y: &Array1<F>,
    map: &RestrictedMap<F>,
) -> Result<(Array2<F>, bool)> {
    let s = map.stacked();
    let g = s.t().dot(s);
    let b = s.t().dot(y);
    let structurally_singular = s.nrows() < s.ncols();
    let (x, bumped) = cholesky_solve_spd(&g, &b, F::cast(BASELINE_FLOOR))?;
    let (rows, rank) = map.free_shape();
    Ok((unflatten(x, rows, rank), bumped || structurally_singular))
}

/// Unregularized alternating least squares on the restricted maps; the
/// low-rank-only baseline. The objective trace holds the squared misfit.
pub fn altmin_sense_baseline<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    init: &Factorization<F>,
    cfg: &SolveConfig<F>,
) -> Result<SolveResult<F>> {
    cfg.validate()?;
    check_solve_shapes(op, init, y)?;

    let misfit_sq = |f: &Factorization<F>| -> Result<(F, F)> {
        let r = y - &op.forward(&f.product())?;
        let m = vec_norm(&r);
        if !m.is_finite() {
            return Err(Error::NonFinite("baseline misfit".into()));
        }
        Ok((m * m, m))
    };

    let mut f = init.clone();
    let (mut j_prev, mut misfit) = misfit_sq(&f)?;
    let mut objective_trace = vec![j_prev];
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut converged = false;
    let mut degenerate = false;
    let mut outer_iters = 0;

    for k in 0..cfg.max_outer_iters {
        let u_prev = f.u.clone();
        let v_prev = f.v.clone();

        let map_v = op.restrict_right(&f.v)?;
        let (u_new, deg_u) = least_squares_block(y, &map_v)?;
        f.u = u_new;
        let map_u = op.restrict_left(&f.u)?;
        let (v_new, deg_v) = least_squares_block(y, &map_u)?;
        f.v = v_new;
        degenerate |= deg_u || deg_v;

        let (j, m) = misfit_sq(&f)?;
        misfit = m;
        objective_trace.push(j);
        outer_iters = k + 1;
        if let Some(points) = &mut trace {
            let du = &f.u - &u_prev;
            let dv = &f.v - &v_prev;
            points.push(TracePoint {
                iteration: outer_iters,
                objective: j,
                misfit: m,
                effective_sparsity: effective_sparsity(&f.v, f.rank_budget())
                    / F::cast(f.v.nrows() as f64),
                delta_u_sq: fro_norm(&du).powi(2),
                delta_v_sq: fro_norm(&dv).powi(2),
            });
        }
        let decrease = j_prev - j;
        j_prev = j;
        if decrease <= cfg.outer_tol * objective_trace[k].max(F::epsilon()) {
            converged = true;
            break;
        }
    }

    Ok(SolveResult {
        factors: f,
        objective_trace,
        outer_iters,
        converged,
        misfit,
        degenerate,
        clamped_steps: 0,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{perturb_initialization, sample_ground_truth, SignalClassSpec};
    use crate::seeding::rng_from_seed;
    use ndarray::array;

    fn small_instance(
        seed: u64,
        noiseless: bool,
    ) -> (
        Array1<f64>,
        MeasurementOperator<f64>,
        Factorization<f64>,
        Factorization<f64>,
        f64,
    ) {
        let mut rng = rng_from_seed(seed);
        let spec = SignalClassSpec::new(8, 10, 1, 4.0, 4.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        let op = MeasurementOperator::gaussian(8, 10, 60, &mut rng).unwrap();
        let clean = op.forward(&truth.product()).unwrap();
        let x_norm = fro_norm(&truth.product());
        let (y, eta) = if noiseless {
            (clean, 0.0)
        } else {
            let s = crate::measure::add_noise(&clean, 0.05, x_norm, &mut rng).unwrap();
            (s.y, s.eta_norm)
        };
        let init = perturb_initialization(&truth, 0.6, &mut rng).unwrap();
        (y, op, truth, init, eta)
    }

    #[test]
    fn prox_gradient_solves_quadratic_in_one_step() {
        // f(x) = 0.5 (x - 2)^2, g = 0, exact step 1
        let grad = |x: &Array2<f64>| x.mapv(|v| v - 2.0);
        let prox = |z: &Array2<f64>, _s: f64| z.clone();
        let cfg = SolveConfig { step_rule: StepRule::Fixed(1.0), ..Default::default() };
        let sol = prox_gradient_descent(grad, 1.0, prox, array![[0.0]], &cfg).unwrap();
        assert!((sol.x[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(sol.iters <= 2);
    }

    #[test]
    fn prox_gradient_solves_lasso_toy() {
        // min 0.5 (x-1)^2 + 0.3 |x|  =>  x* = 0.7
        let grad = |x: &Array2<f64>| x.mapv(|v| v - 1.0);
        let w = ElasticNetWeights::new(0.0, 0.3).unwrap();
        let prox = |z: &Array2<f64>, s: f64| prox_enet(z, &w, s);
        let cfg = SolveConfig {
            step_rule: StepRule::LipschitzInverse,
            inner_tol: 1e-12,
            ..Default::default()
        };
        let sol = prox_gradient_descent(grad, 1.0, prox, array![[0.0]], &cfg).unwrap();
        assert!((sol.x[(0, 0)] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn prox_gradient_returns_immediately_at_optimum() {
        let grad = |x: &Array2<f64>| x.mapv(|v| v - 2.0);
        let prox = |z: &Array2<f64>, _s: f64| z.clone();
        let cfg = SolveConfig { step_rule: StepRule::Fixed(1.0), ..Default::default() };
        let sol = prox_gradient_descent(grad, 1.0, prox, array![[2.0]], &cfg).unwrap();
        assert_eq!(sol.iters, 1);
        assert_eq!(sol.x[(0, 0)], 2.0);
    }

    #[test]
    fn am_keeps_noiseless_truth_fixed() {
        let (y, op, truth, _, _) = small_instance(70, true);
        let p = RegularizationParams::equal(1e-8).unwrap();
        let cfg = SolveConfig::default();
        let res = alternating_minimization(&y, &op, &p, &truth, &cfg).unwrap();
        assert!(res.misfit <= 1e-6, "misfit {}", res.misfit);
        assert!(res.factors.relative_error_to(&truth) <= 1e-3);
    }

    #[test]
    fn am_collapses_to_zero_under_huge_penalties() {
        let (y, op, _, init, _) = small_instance(71, false);
        let y_norm2 = y.iter().map(|v| v * v).sum::<f64>();
        let p = RegularizationParams::equal(1e4 * y_norm2).unwrap();
        let res = alternating_minimization(&y, &op, &p, &init, &SolveConfig::default()).unwrap();
        assert!(res.factors.u.iter().all(|&v| v == 0.0));
        assert!(res.factors.v.iter().all(|&v| v == 0.0));
        let j_final = *res.objective_trace.last().unwrap();
        assert!((j_final - y_norm2).abs() <= 1e-10 * y_norm2);
        assert!(res.degenerate, "zero blocks should be flagged");
    }

    #[test]
    fn am_objective_trace_never_increases() {
        let (y, op, _, init, _) = small_instance(72, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let res = alternating_minimization(&y, &op, &p, &init, &SolveConfig::default()).unwrap();
        for w in res.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * (1.0 + w[0]));
        }
        assert!(res.converged);
    }

    #[test]
    fn am_satisfies_sufficient_decrease_on_small_instance() {
        let (y, op, _, init, _) = small_instance(73, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let cfg = SolveConfig { record_trace: true, ..Default::default() };
        let res = alternating_minimization(&y, &op, &p, &init, &cfg).unwrap();
        let trace = res.trace.as_ref().unwrap();
        let j0 = res.objective_trace[0];
        let slack = 2.0 * cfg.inner_tol * (1.0 + j0);
        for (k, point) in trace.iter().enumerate() {
            let decrease = res.objective_trace[k] - res.objective_trace[k + 1];
            let bound = p.alpha1 * point.delta_u_sq + p.beta1 * point.delta_v_sq;
            assert!(
                decrease + slack >= bound,
                "iteration {}: decrease {decrease} < bound {bound}",
                point.iteration
            );
        }
    }

    #[test]
    fn palm_keeps_noiseless_truth_fixed() {
        let (y, op, truth, _, _) = small_instance(74, true);
        let p = RegularizationParams::equal(1e-9).unwrap();
        let pm = palm(&y, &op, &p, &truth, &SolveConfig::default()).unwrap();
        assert!(pm.misfit <= 1e-6, "misfit {}", pm.misfit);
    }

    #[test]
    fn palm_matches_am_objective_on_small_instance() {
        let (y, op, _, init, _) = small_instance(74, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let cfg = SolveConfig { max_outer_iters: 4000, ..Default::default() };
        let am = alternating_minimization(&y, &op, &p, &init, &cfg).unwrap();
        let pm = palm(&y, &op, &p, &init, &cfg).unwrap();
        let ja = *am.objective_trace.last().unwrap();
        let jp = *pm.objective_trace.last().unwrap();
        assert!((ja - jp).abs() <= 0.05 * ja.max(jp), "{ja} vs {jp}");
    }

    #[test]
    fn palm_trace_never_increases() {
        let (y, op, _, init, _) = small_instance(75, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let res = palm(&y, &op, &p, &init, &SolveConfig::default()).unwrap();
        for w in res.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * (1.0 + w[0]));
        }
    }

    #[test]
    fn palm_clamps_and_logs_out_of_range_steps() {
        let (y, op, _, init, _) = small_instance(76, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let cfg = SolveConfig {
            step_clamp: (1e-7, 2e-7),
            max_outer_iters: 3,
            ..Default::default()
        };
        let res = palm(&y, &op, &p, &init, &cfg).unwrap();
        assert!(res.clamped_steps > 0);
    }

    #[test]
    fn baseline_recovers_noiseless_oversampled_rank1() {
        let mut rng = rng_from_seed(77);
        let spec = SignalClassSpec::new(8, 10, 1, 4.0, 4.0, 1.0).unwrap();
        let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
        // m >= 4 (n1 + n2) R
        let op = MeasurementOperator::gaussian(8, 10, 72, &mut rng).unwrap();
        let y = op.forward(&truth.product()).unwrap();
        let init = perturb_initialization(&truth, 0.6, &mut rng).unwrap();
        let res = altmin_sense_baseline(&y, &op, &init, &SolveConfig::default()).unwrap();
        assert!(res.factors.relative_error_to(&truth) <= 1e-3);
    }

    #[test]
    fn baseline_fails_far_below_counting_bound() {
        let mut errs = Vec::new();
        for seed in 0..5 {
            let mut rng = rng_from_seed(780 + seed);
            let spec = SignalClassSpec::new(8, 10, 1, 4.0, 4.0, 1.0).unwrap();
            let truth = sample_ground_truth(&spec, 0.1, &mut rng).unwrap();
            // far below (n1 + n2) R = 18
            let op = MeasurementOperator::gaussian(8, 10, 9, &mut rng).unwrap();
            let y = op.forward(&truth.product()).unwrap();
            let init = perturb_initialization(&truth, 0.6, &mut rng).unwrap();
            let res = altmin_sense_baseline(&y, &op, &init, &SolveConfig::default()).unwrap();
            assert!(res.degenerate, "undersampled normal equations are singular");
            errs.push(res.factors.relative_error_to(&truth));
        }
        assert!(crate::linalg::median(&errs) >= 0.5, "median {:?}", errs);
    }

    #[test]
    fn baseline_stays_at_noiseless_truth() {
        let (y, op, truth, _, _) = small_instance(79, true);
        let res = altmin_sense_baseline(&y, &op, &truth, &SolveConfig::default()).unwrap();
        assert!(res.factors.relative_error_to(&truth) <= 1e-6);
    }

    #[test]
    fn solver_rejects_shape_mismatch() {
        let (y, op, _, _, _) = small_instance(80, true);
        let bad = Factorization::<f64>::zeros(9, 10, 1);
        let p = RegularizationParams::equal(0.1).unwrap();
        assert!(matches!(
            alternating_minimization(&y, &op, &p, &bad, &SolveConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn trace_csv_has_expected_header() {
        let (y, op, _, init, _) = small_instance(81, false);
        let p = RegularizationParams::equal(5e-3).unwrap();
        let cfg = SolveConfig { record_trace: true, max_outer_iters: 4, ..Default::default() };
        let res = alternating_minimization(&y, &op, &p, &init, &cfg).unwrap();
        let mut buf = Vec::new();
        res.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iteration,objective,misfit,effective_sparsity");
        assert_eq!(lines.count(), res.trace.as_ref().unwrap().len());
    }
}
