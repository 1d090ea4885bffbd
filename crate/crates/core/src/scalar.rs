//! Scalar abstraction: everything numeric in this crate is generic over
//! [`Float`], implemented for `f32` and `f64`.

use ndarray::NdFloat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point scalar usable in all numeric routines of this crate.
///
/// Extends [`ndarray::NdFloat`] with a sampling hook so that random
/// constructions (signals, measurement ensembles, noise) stay generic.
pub trait Float: NdFloat + std::iter::Sum {
    /// Draw one standard normal sample from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Convert an `f64` constant, panicking if it is not representable.
    #[inline]
    fn cast(x: f64) -> Self {
        Self::from(x).expect("constant not representable in scalar type")
    }
}

impl Float for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Float for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
