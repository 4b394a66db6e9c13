//! Minimal dense linear algebra for the small (n ≤ ~10) systems this crate needs.
//! Square matrices are stored row-major in a flat slice.

use crate::num::Real;

pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm_sq<F: Real>(a: &[F]) -> F {
    dot(a, a)
}

pub(crate) fn norm<F: Real>(a: &[F]) -> F {
    norm_sq(a).sqrt()
}

/// Gram matrix JᵀJ of a matrix given by its columns (each of equal length).
pub(crate) fn gram<F: Real>(columns: &[Vec<F>]) -> Vec<F> {
    let n = columns.len();
    let mut g = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&columns[i], &columns[j]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

/// log det of a symmetric positive definite matrix via Cholesky.
/// Returns `None` when a pivot is not strictly positive.
pub(crate) fn spd_log_det<F: Real>(a: &[F], n: usize) -> Option<F> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![F::zero(); n * n];
    let mut log_det = F::zero();
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > F::zero()) {
                    return None;
                }
                let d = s.sqrt();
                l[i * n + i] = d;
                log_det = log_det + F::of(2.0) * d.ln();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(log_det)
}

/// log |det| of a square matrix via LU with partial pivoting.
/// Returns `None` when the matrix is singular to working precision.
pub(crate) fn lu_log_abs_det<F: Real>(a: &[F], n: usize) -> Option<F> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut log_det = F::zero();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        if !(pivot_abs > F::zero()) || !pivot_abs.is_finite() {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
        }
        let pivot = m[col * n + col];
        log_det = log_det + pivot.abs().ln();
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            for k in col + 1..n {
                m[row * n + k] = m[row * n + k] - factor * m[col * n + k];
            }
            m[row * n + col] = F::zero();
        }
    }
    Some(log_det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_of_orthogonal_columns_is_diagonal() {
        let cols = vec![vec![3.0, 0.0, 4.0], vec![0.0, 2.0, 0.0]];
        let g = gram(&cols);
        assert_eq!(g, vec![25.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn spd_log_det_matches_direct_2x2() {
        // [[4, 1], [1, 3]]: det = 11
        let a = vec![4.0, 1.0, 1.0, 3.0];
        let ld = spd_log_det(&a, 2).unwrap();
        assert!((ld - 11.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn spd_log_det_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, -1
        assert!(spd_log_det(&a, 2).is_none());
    }

    #[test]
    fn lu_log_abs_det_matches_3x3() {
        // det = 1*(2*2-0) - 2*(0-3) + 0 = 10
        let a = vec![1.0, 2.0, 0.0, 0.0, 2.0, 1.0, 3.0, 0.0, 2.0];
        let ld = lu_log_abs_det(&a, 3).unwrap();
        assert!((ld - 10.0f64.ln()).abs() < 1e-14, "{ld}");
    }

    #[test]
    fn lu_log_abs_det_negative_determinant() {
        let a = vec![0.0f64, 1.0, 1.0, 0.0]; // det = -1
        let ld = lu_log_abs_det(&a, 2).unwrap();
        assert!(ld.abs() < 1e-15);
    }

    #[test]
    fn lu_detects_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(lu_log_abs_det(&a, 2).is_none());
    }
}
