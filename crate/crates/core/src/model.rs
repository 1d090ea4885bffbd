//! Signal model: factored ground truths, their random sampling, perturbed
//! initializations, and class-membership diagnostics.
//!
//! A signal is a matrix `X = U V^T` whose factors have bounded Frobenius
//! norm and bounded entrywise l1 norm. Sampled ground truths are only
//! approximately in the class (their sparse part carries a small dense
//! additive component), so membership is reported as the smallest sparsity
//! level at which the constraints hold rather than as a boolean.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, l1_norm};
use crate::scalar::Float;

/// A pair of component matrices representing `X = U V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<F> {
    pub u: Array2<F>,
    pub v: Array2<F>,
}

impl<F: Float> Factorization<F> {
    /// Build a factorization, checking that both factors share the column
    /// count (the rank budget) and that it is at least one.
    pub fn new(u: Array2<F>, v: Array2<F>) -> Result<Self> {
        if u.ncols() != v.ncols() || u.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "factor column counts must match and be >= 1, got {} and {}",
                u.ncols(),
                v.ncols()
            )));
        }
        Ok(Self { u, v })
    }

    /// All-zero factorization of the given dimensions.
    pub fn zeros(n1: usize, n2: usize, rank: usize) -> Self {
        Self {
            u: Array2::zeros((n1, rank)),
            v: Array2::zeros((n2, rank)),
        }
    }

    /// Column count shared by both factors.
    pub fn rank_budget(&self) -> usize {
        self.u.ncols()
    }

    /// The represented matrix `U V^T`.
    pub fn product(&self) -> Array2<F> {
        self.u.dot(&self.v.t())
    }

    /// Frobenius distance between the represented matrices, relative to
    /// `|reference|_F`.
    pub fn relative_error_to(&self, reference: &Self) -> F {
        let xr = reference.product();
        let nr = fro_norm(&xr);
        let diff = &self.product() - &xr;
        fro_norm(&diff) / nr
    }
}

/// Description of the signal class: dimensions, rank budget, effective
/// sparsity levels and the scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalClassSpec<F> {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub s1: F,
    pub s2: F,
    pub gamma: F,
}

impl<F: Float> SignalClassSpec<F> {
    pub fn new(n1: usize, n2: usize, rank: usize, s1: F, s2: F, gamma: F) -> Result<Self> {
        let spec = Self { n1, n2, rank, s1, s2, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.rank == 0 {
            return Err(Error::InvalidArgument("dimensions and rank must be positive".into()));
        }
        let one = F::one();
        if self.s1 < one || self.s1 > F::cast(self.n1 as f64) {
            return Err(Error::InvalidArgument(format!(
                "s1 must lie in [1, n1], got {}",
                self.s1
            )));
        }
        if self.s2 < one || self.s2 > F::cast(self.n2 as f64) {
            return Err(Error::InvalidArgument(format!(
                "s2 must lie in [1, n2], got {}",
                self.s2
            )));
        }
        if self.gamma <= F::zero() {
            return Err(Error::InvalidArgument("gamma must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest sparsity levels at which the scaled class constraints hold for
/// a factorization, plus the Frobenius budget check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport<F> {
    pub s1_required: F,
    pub s2_required: F,
    pub frobenius_ok: bool,
}

/// Draw one random ground truth.
///
/// Each factor is built by placing `round(rank * s)` i.i.d. standard normal
/// entries at uniformly random positions (without replacement) of a zero
/// matrix, rescaling to Frobenius norm `sqrt(rank)`, then adding a dense
/// i.i.d. normal matrix rescaled to Frobenius norm `dense_fraction *
/// sqrt(rank)`.
pub fn sample_ground_truth<F: Float, R: Rng + ?Sized>(
    spec: &SignalClassSpec<F>,
    dense_fraction: F,
    rng: &mut R,
) -> Result<Factorization<F>> {
    if dense_fraction < F::zero() {
        return Err(Error::InvalidArgument("dense_fraction must be >= 0".into()));
    }
    let u = sample_factor(spec.n1, spec.rank, spec.s1, dense_fraction, rng)?;
    let v = sample_factor(spec.n2, spec.rank, spec.s2, dense_fraction, rng)?;
    Factorization::new(u, v)
}

fn sample_factor<F: Float, R: Rng + ?Sized>(
    n: usize,
    rank: usize,
    s: F,
    dense_fraction: F,
    rng: &mut R,
) -> Result<Array2<F>> {
    let total = n * rank;
    let k = (F::cast(rank as f64) * s).round().to_usize().unwrap_or(0);
    if k == 0 || k > total {
        return Err(Error::InvalidArgument(format!(
            "round(rank*s) = {k} nonzeros out of {total} entries is not admissible"
        )));
    }
    let target = F::cast(rank as f64).sqrt();

    let mut data = vec![F::zero(); total];
    let positions = rand::seq::index::sample(rng, total, k);
    for p in positions.iter() {
        data[p] = F::standard_normal(rng);
    }
    let mut m = Array2::from_shape_vec((n, rank), data).expect("shape matches");
    rescale_to(&mut m, target);

    if dense_fraction > F::zero() {
        let dense: Vec<F> = (0..total).map(|_| F::standard_normal(rng)).collect();
        let mut d = Array2::from_shape_vec((n, rank), dense).expect("shape matches");
        rescale_to(&mut d, dense_fraction * target);
        m = m + d;
    }
    Ok(m)
}

fn rescale_to<F: Float>(m: &mut Array2<F>, target: F) {
    let norm = fro_norm(m);
    if norm > F::zero() {
        let c = target / norm;
        m.mapv_inplace(|x| x * c);
    }
}

const BRACKET_DOUBLINGS: usize = 90;
const BISECTION_STEPS: usize = 200;

/// Perturb a ground truth into an initialization whose product sits at a
/// prescribed relative distance.
///
/// Gaussian noise directions are drawn once for each factor; the common
/// noise scale is bisected until the relative product error lands within
/// five percent of `target_rel_error`.
pub fn perturb_initialization<F: Float, R: Rng + ?Sized>(
    truth: &Factorization<F>,
    target_rel_error: F,
    rng: &mut R,
) -> Result<Factorization<F>> {
    if target_rel_error <= F::zero() {
        return Err(Error::InvalidArgument("target_rel_error must be positive".into()));
    }
    let x = truth.product();
    let x_norm = fro_norm(&x);
    if x_norm <= F::zero() {
        return Err(Error::InvalidArgument("truth product must be nonzero".into()));
    }

    let gu = gaussian_like(&truth.u, rng);
    let gv = gaussian_like(&truth.v, rng);
    let err_at = |t: F| -> F {
        let u = &truth.u + &(&gu * t);
        let v = &truth.v + &(&gv * t);
        let diff = &x - &u.dot(&v.t());
        fro_norm(&diff) / x_norm
    };

    let lo_band = target_rel_error * F::cast(0.95);
    let hi_band = target_rel_error * F::cast(1.05);

    let mut hi = F::cast(1e-12);
    let mut steps = 0usize;
    while err_at(hi) < target_rel_error {
        hi = hi * F::cast(2.0);
        steps += 1;
        if steps > BRACKET_DOUBLINGS {
            return Err(Error::BisectionFailed {
                target: target_rel_error.to_f64().unwrap_or(f64::NAN),
                steps,
            });
        }
    }
    let mut lo = F::zero();
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / F::cast(2.0);
        let e = err_at(mid);
        if e >= lo_band && e <= hi_band {
            let u = &truth.u + &(&gu * mid);
            let v = &truth.v + &(&gv * mid);
            return Factorization::new(u, v);
        }
        if e < target_rel_error {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BisectionFailed {
        target: target_rel_error.to_f64().unwrap_or(f64::NAN),
        steps: BISECTION_STEPS,
    })
}

fn gaussian_like<F: Float, R: Rng + ?Sized>(m: &Array2<F>, rng: &mut R) -> Array2<F> {
    let data: Vec<F> = (0..m.len()).map(|_| F::standard_normal(rng)).collect();
    Array2::from_shape_vec(m.raw_dim(), data).expect("shape matches")
}

/// Measure the smallest sparsity levels at which the gamma-scaled class
/// constraints hold for `f`, and whether the Frobenius budget is met.
///
/// The l1 constraint at scale gamma reads `|U|_1 <= rank * sqrt(gamma * s)`,
/// so the required level is `(|U|_1 / (rank * sqrt(gamma)))^2`.
pub fn certify_membership<F: Float>(f: &Factorization<F>, gamma: F) -> Result<MembershipReport<F>> {
    if gamma <= F::zero() {
        return Err(Error::InvalidArgument("gamma must be positive".into()));
    }
    let rank = F::cast(f.rank_budget() as f64);
    let nu = fro_norm(&f.u);
    let nv = fro_norm(&f.v);
    // Tiny relative slack so exactly renormalized inputs certify cleanly.
    let budget = gamma * rank * (F::one() + F::cast(32.0) * F::epsilon());
    let frobenius_ok = (nu * nu).max(nv * nv) <= budget;
    let denom = rank * gamma.sqrt();
    let ratio_u = l1_norm(&f.u) / denom;
    let ratio_v = l1_norm(&f.v) / denom;
    Ok(MembershipReport {
        s1_required: ratio_u * ratio_u,
        s2_required: ratio_v * ratio_v,
        frobenius_ok,
    })
}

/// Scale-invariant effective sparsity per rank of a matrix:
/// `(|M|_1 / |M|_F)^2 / rank`. The zero matrix scores zero.
pub fn effective_sparsity<F: Float>(m: &Array2<F>, rank: usize) -> F {
    let fro = fro_norm(m);
    if fro <= F::zero() {
        return F::zero();
    }
    let ratio = l1_norm(m) / fro;
    ratio * ratio / F::cast(rank as f64)
}

/// Hard sparsity diagnostic: fraction of entries per rank and row that are
/// nonzero, counting magnitudes above machine epsilon.
pub fn hard_sparsity<F: Float>(m: &Array2<F>, rank: usize) -> F {
    let nnz = m.iter().filter(|&&x| x.abs() > F::epsilon()).count();
    F::cast(nnz as f64) / (F::cast(rank as f64) * F::cast(m.nrows() as f64))
}
