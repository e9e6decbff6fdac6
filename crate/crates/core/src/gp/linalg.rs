//! Dense Cholesky factorization and triangular solves on row-major storage.

use alloc::vec;
use alloc::vec::Vec;

/// Lower-triangular `L` with `L L^T = a`, or `None` if `a` is not
/// numerically positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            let s = a[i * n + j] - dot;
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L x = b`.
pub fn solve_lower(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..n {
        let dot: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (x[i] - dot) / l[i * n + i];
    }
    x
}

/// Solve `L^T x = b`.
pub fn solve_lower_transpose(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let dot: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (x[i] - dot) / l[i * n + i];
    }
    x
}

/// Factorize `a + jitter I`, multiplying the jitter by ten after each
/// failure until `max_jitter`. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(
    a: &[f64],
    n: usize,
    jitter: f64,
    max_jitter: f64,
) -> crate::Result<(Vec<f64>, f64)> {
    let mut current = jitter;
    loop {
        let mut m = a.to_vec();
        for i in 0..n {
            m[i * n + i] += current;
        }
        if let Some(l) = cholesky(&m, n) {
            return Ok((l, current));
        }
        if current >= max_jitter {
            return Err(crate::Error::NotPositiveDefinite(current));
        }
        current = if current == 0.0 { 1e-10 } else { (current * 10.0).min(max_jitter) };
    }
}
