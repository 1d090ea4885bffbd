//! Small dense helpers shared across the crate: norms, row-major
//! (un)flattening, a Cholesky solve for normal equations, and medians.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Float;

/// Frobenius norm of a matrix.
pub fn fro_norm<F: Float>(m: &Array2<F>) -> F {
    m.iter().map(|&x| x * x).sum::<F>().sqrt()
}

/// Entrywise l1 norm of a matrix.
pub fn l1_norm<F: Float>(m: &Array2<F>) -> F {
    m.iter().map(|&x| x.abs()).sum()
}

/// Euclidean norm of a vector.
pub fn vec_norm<F: Float>(v: &Array1<F>) -> F {
    v.iter().map(|&x| x * x).sum::<F>().sqrt()
}

/// Row-major flattening of a matrix into a vector.
pub fn flatten<F: Float>(m: &Array2<F>) -> Array1<F> {
    Array1::from_iter(m.iter().copied())
}

/// Inverse of [`flatten`].
pub fn unflatten<F: Float>(v: Array1<F>, rows: usize, cols: usize) -> Array2<F> {
    Array2::from_shape_vec((rows, cols), v.to_vec()).expect("length matches rows*cols")
}

/// Solve `(g + jitter*I) x = b` for symmetric positive semidefinite `g`
/// via Cholesky, increasing the jitter tenfold on failure.
///
/// Returns the solution and whether extra jitter beyond the initial floor
/// was required (a degeneracy signal for callers).
pub fn cholesky_solve_spd<F: Float>(
    g: &Array2<F>,
    b: &Array1<F>,
    jitter: F,
) -> Result<(Array1<F>, bool)> {
    let n = g.nrows();
    if g.ncols() != n || b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "cholesky: {}x{} matrix with rhs of length {}",
            g.nrows(),
            g.ncols(),
            b.len()
        )));
    }
    let mut jit = jitter;
    let mut bumped = false;
    for _ in 0..30 {
        match try_cholesky(g, jit) {
            Some(l) => {
                let x = chol_back_substitute(&l, b);
                return Ok((x, bumped));
            }
            None => {
                jit = if jit > F::zero() {
                    jit * F::cast(10.0)
                } else {
                    F::cast(1e-12)
                };
                bumped = true;
            }
        }
    }
    Err(Error::NonFinite("cholesky failed at maximal jitter".into()))
}

/// Lower-triangular Cholesky factor of `g + jit*I`, or `None` if a pivot
/// is not strictly positive.
fn try_cholesky<F: Float>(g: &Array2<F>, jit: F) -> Option<Array2<F>> {
    let n = g.nrows();
    let mut l = Array2::<F>::zeros((n, n));
    for j in 0..n {
        let mut d = g[(j, j)] + jit;
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if d <= F::zero() || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

fn chol_back_substitute<F: Float>(l: &Array2<F>, b: &Array1<F>) -> Array1<F> {
    let n = l.nrows();
    // forward: L z = b
    let mut z = Array1::<F>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    // backward: L^T x = z
    let mut x = Array1::<F>::zeros(n);
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Median of a slice (average of the two middle elements for even length).
pub fn median<F: Float>(values: &[F]) -> F {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / F::cast(2.0)
    }
}
