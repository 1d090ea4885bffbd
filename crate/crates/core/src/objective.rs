//! The multi-penalty objective
//! `J(U,V) = |y - A(UV^T)|_2^2 + a1 |U|_F^2 + a2 |U|_1 + b1 |V|_F^2 + b2 |V|_1`,
//! the elastic-net penalty with its closed-form proximal map, and the
//! gradients of the smooth data-fidelity term.
//!
//! The l1 terms are never differentiated; all nonsmoothness goes through
//! the prox.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, l1_norm};
use crate::measure::MeasurementOperator;
use crate::model::Factorization;
use crate::scalar::Float;

/// Parameter coupling: free weights, or the ratio lock
/// `a1 = sqrt(s/gamma) a2 = b1 = sqrt(s/gamma) b2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioMode<F> {
    Free,
    TheoremLocked { gamma: F, s: F },
}

/// The four penalty weights of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationParams<F> {
    pub alpha1: F,
    pub alpha2: F,
    pub beta1: F,
    pub beta2: F,
    pub ratio_mode: RatioMode<F>,
}

impl<F: Float> RegularizationParams<F> {
    /// Independent weights.
    pub fn free(alpha1: F, alpha2: F, beta1: F, beta2: F) -> Result<Self> {
        let p = Self { alpha1, alpha2, beta1, beta2, ratio_mode: RatioMode::Free };
        p.validate()?;
        Ok(p)
    }

    /// All four weights equal to `mu` (the empirically preferred mode).
    pub fn equal(mu: F) -> Result<Self> {
        Self::free(mu, mu, mu, mu)
    }

    /// Ratio-locked weights with `a2 = b2 = mu` and
    /// `a1 = b1 = sqrt(s/gamma) * mu`.
    pub fn theorem_locked(mu: F, gamma: F, s: F) -> Result<Self> {
        if gamma <= F::zero() || s <= F::zero() {
            return Err(Error::InvalidArgument("gamma and s must be positive".into()));
        }
        let rho = (s / gamma).sqrt();
        let p = Self {
            alpha1: rho * mu,
            alpha2: mu,
            beta1: rho * mu,
            beta2: mu,
            ratio_mode: RatioMode::TheoremLocked { gamma, s },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [self.alpha1, self.alpha2, self.beta1, self.beta2];
        if weights.iter().any(|w| *w < F::zero() || !w.is_finite()) {
            return Err(Error::InvalidArgument("penalty weights must be finite and >= 0".into()));
        }
        if let RatioMode::TheoremLocked { gamma, s } = self.ratio_mode {
            let rho = (s / gamma).sqrt();
            let tol = F::cast(1e-12);
            let scale = F::one() + self.alpha1.abs();
            if (self.alpha1 - rho * self.alpha2).abs() > tol * scale
                || (self.alpha1 - self.beta1).abs() > tol * scale
                || (self.beta1 - rho * self.beta2).abs() > tol * scale
            {
                return Err(Error::InvalidArgument("ratio lock violated".into()));
            }
        }
        Ok(())
    }

    /// Weights applied to the left factor.
    pub fn left(&self) -> ElasticNetWeights<F> {
        ElasticNetWeights { theta1: self.alpha1, theta2: self.alpha2 }
    }

    /// Weights applied to the right factor.
    pub fn right(&self) -> ElasticNetWeights<F> {
        ElasticNetWeights { theta1: self.beta1, theta2: self.beta2 }
    }
}

/// Elastic-net weights: quadratic part `theta1`, l1 part `theta2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetWeights<F> {
    pub theta1: F,
    pub theta2: F,
}

impl<F: Float> ElasticNetWeights<F> {
    pub fn new(theta1: F, theta2: F) -> Result<Self> {
        if theta1 < F::zero() || theta2 < F::zero() {
            return Err(Error::InvalidArgument("elastic net weights must be >= 0".into()));
        }
        Ok(Self { theta1, theta2 })
    }

    /// The penalty value `theta1 |Z|_F^2 + theta2 |Z|_1`.
    pub fn eval(&self, z: &Array2<F>) -> F {
        let f = fro_norm(z);
        self.theta1 * f * f + self.theta2 * l1_norm(z)
    }
}

/// Evaluate the objective.
pub fn eval_j<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    f: &Factorization<F>,
    p: &RegularizationParams<F>,
) -> Result<F> {
    let residual = y - &op.forward(&f.product())?;
    let fit = residual.iter().map(|&r| r * r).sum::<F>();
    let nu = fro_norm(&f.u);
    let nv = fro_norm(&f.v);
    Ok(fit
        + p.alpha1 * nu * nu
        + p.alpha2 * l1_norm(&f.u)
        + p.beta1 * nv * nv
        + p.beta2 * l1_norm(&f.v))
}

/// Scalar shrinkage: the prox of `mu * (theta1 x^2 + theta2 |x|)` at `z`.
#[inline]
pub fn prox_enet_scalar<F: Float>(z: F, theta1: F, theta2: F, mu: F) -> F {
    let threshold = mu * theta2;
    let denom = F::one() + F::cast(2.0) * mu * theta1;
    if z > threshold {
        (z - threshold) / denom
    } else if z < -threshold {
        (z + threshold) / denom
    } else {
        F::zero()
    }
}

/// Componentwise proximal map of `mu * Enet_theta`.
pub fn prox_enet<F: Float>(z: &Array2<F>, w: &ElasticNetWeights<F>, mu: F) -> Array2<F> {
    debug_assert!(mu > F::zero());
    z.mapv(|x| prox_enet_scalar(x, w.theta1, w.theta2, mu))
}

/// Gradient of `U -> |y - A(U V^T)|_2^2` at fixed `V`.
pub fn grad_fidelity_u<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    f: &Factorization<F>,
) -> Result<Array2<F>> {
    let residual = &op.forward(&f.product())? - y;
    // 2 A*(residual) V
    Ok(op.adjoint(&residual)?.dot(&f.v) * F::cast(2.0))
}

/// Gradient of `V -> |y - A(U V^T)|_2^2` at fixed `U`.
pub fn grad_fidelity_v<F: Float>(
    y: &Array1<F>,
    op: &MeasurementOperator<F>,
    f: &Factorization<F>,
) -> Result<Array2<F>> {
    let residual = &op.forward(&f.product())? - y;
    Ok(op.adjoint(&residual)?.t().dot(&f.u) * F::cast(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use ndarray::Array2;
    use rand::Rng;

    fn random_matrix(n1: usize, n2: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from_seed(seed);
        let data: Vec<f64> = (0..n1 * n2).map(|_| f64::standard_normal(&mut rng)).collect();
        Array2::from_shape_vec((n1, n2), data).unwrap()
    }

    fn random_instance(
        seed: u64,
    ) -> (ndarray::Array1<f64>, MeasurementOperator<f64>, Factorization<f64>) {
        let mut rng = rng_from_seed(seed);
        let op = MeasurementOperator::gaussian(5, 6, 30, &mut rng).unwrap();
        let f = Factorization::new(random_matrix(5, 4, seed + 1), random_matrix(6, 4, seed + 2))
            .unwrap();
        let y = op.forward(&random_matrix(5, 6, seed + 3)).unwrap();
        (y, op, f)
    }

    /// Brute-force one-dimensional minimizer of
    /// `0.5 (x - z)^2 + mu (theta1 x^2 + theta2 |x|)` on a fine grid.
    /// Independent oracle for the closed-form prox.
    pub fn prox_grid_oracle(z: f64, theta1: f64, theta2: f64, mu: f64, step: f64) -> f64 {
        let half_width = 3.0 * z.abs().max(step);
        let objective = |x: f64| 0.5 * (x - z) * (x - z) + mu * (theta1 * x * x + theta2 * x.abs());
        let mut best_x = 0.0;
        let mut best_val = objective(0.0);
        let n = (2.0 * half_width / step).ceil() as usize;
        for i in 0..=n {
            let x = -half_width + step * i as f64;
            let v = objective(x);
            if v < best_val {
                best_val = v;
                best_x = x;
            }
        }
        best_x
    }

    #[test]
    fn eval_j_closed_forms() {
        let (y, op, f) = random_instance(40);
        let p = RegularizationParams::equal(0.3).unwrap();

        let zero = Factorization::zeros(5, 6, 4);
        let y_norm2 = y.iter().map(|v| v * v).sum::<f64>();
        assert!((eval_j(&y, &op, &zero, &p).unwrap() - y_norm2).abs() < 1e-12 * y_norm2);

        let exact_y = op.forward(&f.product()).unwrap();
        let p0 = RegularizationParams::equal(0.0).unwrap();
        assert_eq!(eval_j(&exact_y, &op, &f, &p0).unwrap(), 0.0);
    }

    #[test]
    fn eval_j_matches_termwise_oracle() {
        let (y, op, f) = random_instance(41);
        let p = RegularizationParams::free(0.11, 0.23, 0.05, 0.41).unwrap();
        let residual = &y - &op.forward(&f.product()).unwrap();
        let expected = residual.iter().map(|r| r * r).sum::<f64>()
            + 0.11 * f.u.iter().map(|x| x * x).sum::<f64>()
            + 0.23 * f.u.iter().map(|x| x.abs()).sum::<f64>()
            + 0.05 * f.v.iter().map(|x| x * x).sum::<f64>()
            + 0.41 * f.v.iter().map(|x| x.abs()).sum::<f64>();
        let got = eval_j(&y, &op, &f, &p).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn eval_j_is_separately_convex() {
        let mut rng = rng_from_seed(42);
        for t in 0..20 {
            let (y, op, f) = random_instance(43 + t);
            let p = RegularizationParams::equal(0.2).unwrap();
            let u2 = random_matrix(5, 4, 600 + t);
            let lambda: f64 = rng.random::<f64>();
            let mix = Factorization::new(
                &f.u * lambda + &u2 * (1.0 - lambda),
                f.v.clone(),
            )
            .unwrap();
            let f2 = Factorization::new(u2, f.v.clone()).unwrap();
            let lhs = eval_j(&y, &op, &mix, &p).unwrap();
            let rhs = lambda * eval_j(&y, &op, &f, &p).unwrap()
                + (1.0 - lambda) * eval_j(&y, &op, &f2, &p).unwrap();
            assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn prox_with_zero_weights_is_identity() {
        let z = random_matrix(6, 3, 44);
        let w = ElasticNetWeights::new(0.0, 0.0).unwrap();
        assert_eq!(prox_enet(&z, &w, 1.7), z);
    }

    #[test]
    fn prox_frozen_value_and_dead_zone() {
        // (1 - 0.25) / (1 + 2*1*0.5) = 0.375
        let got = prox_enet_scalar(1.0f64, 0.5, 0.25, 1.0);
        assert!((got - 0.375).abs() < 1e-15);
        let oracle = prox_grid_oracle(1.0, 0.5, 0.25, 1.0, 1e-5);
        assert!((got - oracle).abs() < 1e-4);

        // |z| <= mu*theta2 collapses to zero
        assert_eq!(prox_enet_scalar(0.2f64, 0.5, 0.25, 1.0), 0.0);
        assert_eq!(prox_enet_scalar(-0.25f64, 0.5, 0.25, 1.0), 0.0);

        // magnitude never grows, sign never flips
        let z = random_matrix(8, 8, 45);
        let w = ElasticNetWeights::new(0.7, 0.3).unwrap();
        let p = prox_enet(&z, &w, 0.9);
        for (a, b) in z.iter().zip(p.iter()) {
            assert!(b.abs() <= a.abs() + 1e-15);
            assert!(*b == 0.0 || a.signum() == b.signum());
        }
    }

    #[test]
    fn prox_matches_grid_oracle_on_random_tuples() {
        let mut rng = rng_from_seed(46);
        for _ in 0..60 {
            let z = 3.0 * (rng.random::<f64>() - 0.5);
            let theta1 = 2.0 * rng.random::<f64>();
            let theta2 = 2.0 * rng.random::<f64>();
            let mu = 0.05 + 2.0 * rng.random::<f64>();
            let got = prox_enet_scalar(z, theta1, theta2, mu);
            let oracle = prox_grid_oracle(z, theta1, theta2, mu, 1e-5);
            assert!(
                (got - oracle).abs() < 2e-4,
                "z={z} theta=({theta1},{theta2}) mu={mu}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive_componentwise() {
        let mut rng = rng_from_seed(47);
        for _ in 0..20 {
            let theta1 = 2.0 * rng.random::<f64>();
            let theta2 = 2.0 * rng.random::<f64>();
            let mu = 0.05 + 2.0 * rng.random::<f64>();
            for i in 0..100 {
                for j in 0..100 {
                    let a = -2.0 + 4.0 * (i as f64) / 99.0;
                    let b = -2.0 + 4.0 * (j as f64) / 99.0;
                    let pa = prox_enet_scalar(a, theta1, theta2, mu);
                    let pb = prox_enet_scalar(b, theta1, theta2, mu);
                    assert!((pa - pb).abs() <= (a - b).abs() + 1e-15);
                }
            }
        }
    }

    #[test]
    fn prox_output_is_a_local_minimizer() {
        let mut rng = rng_from_seed(48);
        for _ in 0..50 {
            let z = random_matrix(4, 3, rng.random::<u16>() as u64);
            let w = ElasticNetWeights::new(rng.random::<f64>(), rng.random::<f64>()).unwrap();
            let mu = 0.1 + rng.random::<f64>();
            let p = prox_enet(&z, &w, mu);
            let objective = |x: &Array2<f64>| {
                let d = x - &z;
                0.5 * d.iter().map(|t| t * t).sum::<f64>() + mu * w.eval(x)
            };
            let base = objective(&p);
            for _ in 0..200 {
                let noise = random_matrix(4, 3, rng.random::<u16>() as u64).mapv(|x| 0.01 * x);
                assert!(objective(&(&p + &noise)) >= base - 1e-12);
            }
        }
    }

    fn finite_difference_grad(
        y: &ndarray::Array1<f64>,
        op: &MeasurementOperator<f64>,
        f: &Factorization<f64>,
        left: bool,
        h: f64,
    ) -> Array2<f64> {
        let fit = |fac: &Factorization<f64>| {
            let r = y - &op.forward(&fac.product()).unwrap();
            r.iter().map(|v| v * v).sum::<f64>()
        };
        let base = if left { f.u.clone() } else { f.v.clone() };
        let mut g = Array2::zeros(base.raw_dim());
        for idx in 0..base.len() {
            let (r, c) = (idx / base.ncols(), idx % base.ncols());
            let mut plus = base.clone();
            plus[(r, c)] += h;
            let mut minus = base.clone();
            minus[(r, c)] -= h;
            let fp = if left {
                fit(&Factorization::new(plus, f.v.clone()).unwrap())
            } else {
                fit(&Factorization::new(f.u.clone(), plus).unwrap())
            };
            let fm = if left {
                fit(&Factorization::new(minus, f.v.clone()).unwrap())
            } else {
                fit(&Factorization::new(f.u.clone(), minus).unwrap())
            };
            g[(r, c)] = (fp - fm) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradients_match_central_differences() {
        for t in 0..5 {
            let (y, op, f) = random_instance(50 + t);
            for left in [true, false] {
                let analytic = if left {
                    grad_fidelity_u(&y, &op, &f).unwrap()
                } else {
                    grad_fidelity_v(&y, &op, &f).unwrap()
                };
                let numeric = finite_difference_grad(&y, &op, &f, left, 1e-5);
                let diff = fro_norm(&(&analytic - &numeric));
                let scale = fro_norm(&analytic);
                assert!(diff < 1e-5 * scale, "side {left}: rel err {}", diff / scale);
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_zero_residual() {
        let (_, op, f) = random_instance(60);
        let y = op.forward(&f.product()).unwrap();
        let gu = grad_fidelity_u(&y, &op, &f).unwrap();
        let gv = grad_fidelity_v(&y, &op, &f).unwrap();
        assert!(fro_norm(&gu) < 1e-12);
        assert!(fro_norm(&gv) < 1e-12);
    }

    #[test]
    fn gradient_is_affine_in_u() {
        let (y, op, f) = random_instance(61);
        let u2 = random_matrix(5, 4, 62);
        let g = |u: Array2<f64>| {
            grad_fidelity_u(&y, &op, &Factorization::new(u, f.v.clone()).unwrap()).unwrap()
        };
        let lhs = g(&f.u + &u2);
        let combo = &(&g(f.u.clone()) + &g(u2)) - &g(Array2::zeros((5, 4)));
        assert!(fro_norm(&(&lhs - &combo)) < 1e-10);
    }

    #[test]
    fn transposed_problem_swaps_gradient_roles() {
        let (y, op, f) = random_instance(63);
        // build the transposed operator explicitly from the components
        let mut rows_t = Array2::<f64>::zeros((op.len() * 6, 5));
        for i in 0..op.len() {
            rows_t
                .slice_mut(ndarray::s![i * 6..(i + 1) * 6, ..])
                .assign(&op.component(i).t());
        }
        let op_t = MeasurementOperator::from_stacked(
            rows_t,
            6,
            5,
            op.len(),
            crate::measure::Ensemble::Gaussian,
        );
        let f_t = Factorization::new(f.v.clone(), f.u.clone()).unwrap();
        let gv = grad_fidelity_v(&y, &op, &f).unwrap();
        let gu_t = grad_fidelity_u(&y, &op_t, &f_t).unwrap();
        assert!(fro_norm(&(&gv - &gu_t)) < 1e-10);
    }

    #[test]
    fn locked_params_satisfy_ratio_invariant() {
        let p = RegularizationParams::theorem_locked(0.1, 1.0, 20.0).unwrap();
        assert!(p.validate().is_ok());
        assert!((p.alpha1 - 20f64.sqrt() * 0.1).abs() < 1e-12);
        let bad = RegularizationParams {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 1.0,
            beta2: 1.0,
            ratio_mode: RatioMode::TheoremLocked { gamma: 1.0, s: 20.0 },
        };
        assert!(bad.validate().is_err());
    }
}
