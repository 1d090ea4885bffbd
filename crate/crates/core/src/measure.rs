//! Linear measurement operators: `y_i = (1/sqrt(m)) <A_i, Z>_F` for dense
//! random ensembles, plus adjoints, factor-restricted maps, noise
//! injection, and a binary dump/load for reproducibility audits.
//!
//! Operators are materialized densely; at desk scale this is affordable
//! and keeps every application a single matrix product. Two stacked copies
//! are kept: the `A_i` stacked vertically (rows) and their transposes
//! stacked vertically, so both factor restrictions are one `dot` each.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, s};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{flatten, unflatten, vec_norm};
use crate::scalar::Float;

/// Tag identifying how an operator was drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// i.i.d. log-normal entries, standardized to mean 0 and variance 1.
    LogNormal,
    /// Symmetric rank-1 components `a a^T` with standard normal `a`.
    Rank1Gaussian,
    /// Scaled canonical basis with `m = n1*n2`; measures exactly `vec(Z)`.
    IdentityLike,
}

impl Ensemble {
    pub fn tag(&self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::LogNormal => "lognormal",
            Ensemble::Rank1Gaussian => "rank1",
            Ensemble::IdentityLike => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "gaussian" => Ok(Ensemble::Gaussian),
            "lognormal" => Ok(Ensemble::LogNormal),
            "rank1" => Ok(Ensemble::Rank1Gaussian),
            "identity" => Ok(Ensemble::IdentityLike),
            other => Err(Error::Config(format!("unknown ensemble '{other}'"))),
        }
    }

    fn code(&self) -> u32 {
        match self {
            Ensemble::Gaussian => 0,
            Ensemble::LogNormal => 1,
            Ensemble::Rank1Gaussian => 2,
            Ensemble::IdentityLike => 3,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Ensemble::Gaussian),
            1 => Ok(Ensemble::LogNormal),
            2 => Ok(Ensemble::Rank1Gaussian),
            3 => Ok(Ensemble::IdentityLike),
            other => Err(Error::Config(format!("unknown ensemble code {other}"))),
        }
    }
}

/// `m` dense component matrices with the `1/sqrt(m)` forward scaling.
#[derive(Debug, Clone)]
pub struct MeasurementOperator<F> {
    /// The `A_i` stacked vertically: shape `(m*n1, n2)`.
    rows: Array2<F>,
    /// The `A_i^T` stacked vertically: shape `(m*n2, n1)`.
    cols: Array2<F>,
    n1: usize,
    n2: usize,
    m: usize,
    scale: F,
    ensemble: Ensemble,
}

impl<F: Float> MeasurementOperator<F> {
    pub(crate) fn from_stacked(
        rows: Array2<F>,
        n1: usize,
        n2: usize,
        m: usize,
        ensemble: Ensemble,
    ) -> Self {
        let mut cols = Array2::zeros((m * n2, n1));
        for i in 0..m {
            let block = rows.slice(s![i * n1..(i + 1) * n1, ..]);
            cols.slice_mut(s![i * n2..(i + 1) * n2, ..]).assign(&block.t());
        }
        let scale = F::one() / F::cast(m as f64).sqrt();
        Self { rows, cols, n1, n2, m, scale, ensemble }
    }

    /// Operator with i.i.d. standard normal entries.
    pub fn gaussian<R: Rng + ?Sized>(n1: usize, n2: usize, m: usize, rng: &mut R) -> Result<Self> {
        check_dims(n1, n2, m)?;
        let data: Vec<F> = (0..m * n1 * n2).map(|_| F::standard_normal(rng)).collect();
        let rows = Array2::from_shape_vec((m * n1, n2), data).expect("shape matches");
        Ok(Self::from_stacked(rows, n1, n2, m, Ensemble::Gaussian))
    }

    /// Operator with i.i.d. log-normal entries standardized to mean 0 and
    /// variance 1.
    pub fn lognormal<R: Rng + ?Sized>(n1: usize, n2: usize, m: usize, rng: &mut R) -> Result<Self> {
        check_dims(n1, n2, m)?;
        let data: Vec<F> = (0..m * n1 * n2)
            .map(|_| lognormal_standardized(F::standard_normal(rng)))
            .collect();
        let rows = Array2::from_shape_vec((m * n1, n2), data).expect("shape matches");
        Ok(Self::from_stacked(rows, n1, n2, m, Ensemble::LogNormal))
    }

    /// Operator with components `A_i = a_i a_i^T`; square matrices only.
    pub fn rank1_gaussian<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        check_dims(n, n, m)?;
        let mut rows = Array2::zeros((m * n, n));
        for i in 0..m {
            let a: Vec<F> = (0..n).map(|_| F::standard_normal(rng)).collect();
            for r in 0..n {
                for c in 0..n {
                    rows[(i * n + r, c)] = a[r] * a[c];
                }
            }
        }
        Ok(Self::from_stacked(rows, n, n, m, Ensemble::Rank1Gaussian))
    }

    /// Deterministic ensemble with `m = n1*n2` and `A_i = sqrt(m) E_i` over
    /// the canonical basis, so that `forward(Z) = vec(Z)` exactly.
    pub fn identity_like(n1: usize, n2: usize) -> Result<Self> {
        let m = n1 * n2;
        check_dims(n1, n2, m)?;
        let root_m = F::cast(m as f64).sqrt();
        let mut rows = Array2::zeros((m * n1, n2));
        for i in 0..m {
            let (r, c) = (i / n2, i % n2);
            rows[(i * n1 + r, c)] = root_m;
        }
        Ok(Self::from_stacked(rows, n1, n2, m, Ensemble::IdentityLike))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    /// View of the i-th component matrix.
    pub fn component(&self, i: usize) -> ArrayView2<'_, F> {
        self.rows.slice(s![i * self.n1..(i + 1) * self.n1, ..])
    }

    /// Apply the operator: `y_i = (1/sqrt(m)) <A_i, Z>_F`.
    pub fn forward(&self, z: &Array2<F>) -> Result<Array1<F>> {
        if z.dim() != (self.n1, self.n2) {
            return Err(Error::ShapeMismatch(format!(
                "forward expects {}x{}, got {}x{}",
                self.n1,
                self.n2,
                z.nrows(),
                z.ncols()
            )));
        }
        let d = self
            .rows
            .view()
            .into_shape_with_order((self.m, self.n1 * self.n2))
            .expect("stack is contiguous");
        let y = d.dot(&flatten(z));
        Ok(y * self.scale)
    }

    /// Adjoint of [`forward`]: `(1/sqrt(m)) sum_i w_i A_i`.
    pub fn adjoint(&self, w: &Array1<F>) -> Result<Array2<F>> {
        if w.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "adjoint expects length {}, got {}",
                self.m,
                w.len()
            )));
        }
        let d = self
            .rows
            .view()
            .into_shape_with_order((self.m, self.n1 * self.n2))
            .expect("stack is contiguous");
        let g = d.t().dot(w);
        Ok(unflatten(g * self.scale, self.n1, self.n2))
    }

    /// Linear map `U -> forward(U V^T)` for fixed right factor `V`.
    pub fn restrict_right(&self, v: &Array2<F>) -> Result<RestrictedMap<F>> {
        if v.nrows() != self.n2 {
            return Err(Error::ShapeMismatch(format!(
                "restrict_right expects {} rows, got {}",
                self.n2,
                v.nrows()
            )));
        }
        let r = v.ncols();
        let prod = self.rows.dot(v); // (m*n1) x r, block i = A_i V
        let stacked = prod
            .into_shape_with_order((self.m, self.n1 * r))
            .expect("stack is contiguous")
            * self.scale;
        Ok(RestrictedMap { stacked, rows: self.n1, rank: r })
    }

    /// Linear map `V -> forward(U V^T)` for fixed left factor `U`.
    pub fn restrict_left(&self, u: &Array2<F>) -> Result<RestrictedMap<F>> {
        if u.nrows() != self.n1 {
            return Err(Error::ShapeMismatch(format!(
                "restrict_left expects {} rows, got {}",
                self.n1,
                u.nrows()
            )));
        }
        let r = u.ncols();
        let prod = self.cols.dot(u); // (m*n2) x r, block i = A_i^T U
        let stacked = prod
            .into_shape_with_order((self.m, self.n2 * r))
            .expect("stack is contiguous")
            * self.scale;
        Ok(RestrictedMap { stacked, rows: self.n2, rank: r })
    }

    /// Serialize dims, ensemble tag, a caller-supplied seed, and the
    /// component matrices as row-major little-endian doubles.
    pub fn dump<W: Write>(&self, seed: u64, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.ensemble.code().to_le_bytes())?;
        w.write_all(&(self.n1 as u32).to_le_bytes())?;
        w.write_all(&(self.n2 as u32).to_le_bytes())?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        w.write_all(&seed.to_le_bytes())?;
        for &x in self.rows.iter() {
            w.write_all(&x.to_f64().expect("scalar fits f64").to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`dump`]; returns the operator and the recorded seed.
    pub fn load<R: Read>(r: &mut R) -> Result<(Self, u64)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("bad operator file magic".into()));
        }
        let ensemble = Ensemble::from_code(read_u32(r)?)?;
        let n1 = read_u32(r)? as usize;
        let n2 = read_u32(r)? as usize;
        let m = read_u32(r)? as usize;
        let mut seed_bytes = [0u8; 8];
        r.read_exact(&mut seed_bytes)?;
        let seed = u64::from_le_bytes(seed_bytes);
        let mut data = Vec::with_capacity(m * n1 * n2);
        let mut buf = [0u8; 8];
        for _ in 0..m * n1 * n2 {
            r.read_exact(&mut buf)?;
            data.push(F::cast(f64::from_le_bytes(buf)));
        }
        let rows = Array2::from_shape_vec((m * n1, n2), data).expect("shape matches");
        Ok((Self::from_stacked(rows, n1, n2, m, ensemble), seed))
    }
}

const MAGIC: &[u8; 8] = b"LRSENSE1";

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn check_dims(n1: usize, n2: usize, m: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 || m == 0 {
        return Err(Error::InvalidArgument("dimensions and m must be positive".into()));
    }
    Ok(())
}

/// Standardize `exp(g)` for standard normal `g` to mean 0 and variance 1.
pub fn lognormal_standardized<F: Float>(g: F) -> F {
    let e = F::one().exp();
    let mean = F::cast(0.5).exp();
    let sd = (e * e - e).sqrt();
    (g.exp() - mean) / sd
}

/// Materialized restriction of an operator to one factor: stores the
/// `m x (rows*rank)` matrix acting on the flattened free factor.
#[derive(Debug, Clone)]
pub struct RestrictedMap<F> {
    stacked: Array2<F>,
    rows: usize,
    rank: usize,
}

/// Iterations and relative tolerance for the power iteration, with a 1.01
/// inflation on the returned norm for step-size safeguarding.
const POWER_ITERS: usize = 50;
const POWER_TOL: f64 = 1e-6;
const POWER_SAFETY: f64 = 1.01;

impl<F: Float> RestrictedMap<F> {
    /// Apply the map to a factor matrix of shape `rows x rank`.
    pub fn apply(&self, x: &Array2<F>) -> Array1<F> {
        debug_assert_eq!(x.dim(), (self.rows, self.rank));
        self.stacked.dot(&flatten(x))
    }

    /// Adjoint applied to a measurement-space vector.
    pub fn apply_adjoint(&self, w: &Array1<F>) -> Array2<F> {
        debug_assert_eq!(w.len(), self.stacked.nrows());
        unflatten(self.stacked.t().dot(w), self.rows, self.rank)
    }

    /// The explicit `m x (rows*rank)` matrix for inner convex solves.
    pub fn stacked(&self) -> &Array2<F> {
        &self.stacked
    }

    pub fn free_shape(&self) -> (usize, usize) {
        (self.rows, self.rank)
    }

    /// Operator-norm estimate by power iteration on the normal matrix,
    /// inflated by one percent.
    pub fn op_norm_est(&self) -> F {
        let n = self.rows * self.rank;
        let mut x = Array1::from_elem(n, F::one() / F::cast(n as f64).sqrt());
        let mut prev = F::zero();
        let mut lambda = F::zero();
        for _ in 0..POWER_ITERS {
            let u = self.stacked.dot(&x);
            lambda = u.iter().map(|&t| t * t).sum();
            let g = self.stacked.t().dot(&u);
            let gn = vec_norm(&g);
            if gn <= F::zero() {
                return F::zero();
            }
            x = g / gn;
            if (lambda - prev).abs() <= F::cast(POWER_TOL) * lambda.max(F::epsilon()) {
                break;
            }
            prev = lambda;
        }
        lambda.sqrt() * F::cast(POWER_SAFETY)
    }
}

/// Measurements with additive noise of an exactly known norm.
#[derive(Debug, Clone)]
pub struct NoisySample<F> {
    pub y: Array1<F>,
    pub clean: Array1<F>,
    pub eta_norm: F,
}

/// Add Gaussian-direction noise rescaled to `rel_level * reference_norm`.
pub fn add_noise<F: Float, R: Rng + ?Sized>(
    clean: &Array1<F>,
    rel_level: F,
    reference_norm: F,
    rng: &mut R,
) -> Result<NoisySample<F>> {
    if rel_level < F::zero() {
        return Err(Error::InvalidArgument("rel_level must be >= 0".into()));
    }
    let target = rel_level * reference_norm;
    let mut eta = Array1::from_iter((0..clean.len()).map(|_| F::standard_normal(rng)));
    let norm = vec_norm(&eta);
    if target > F::zero() && norm > F::zero() {
        eta.mapv_inplace(|x| x * target / norm);
    } else {
        eta.fill(F::zero());
    }
    Ok(NoisySample { y: clean + &eta, clean: clean.clone(), eta_norm: if target > F::zero() { target } else { F::zero() } })
}
