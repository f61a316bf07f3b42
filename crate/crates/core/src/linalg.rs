//! Dense helpers for the small symmetric systems that appear in
//! post-processing and diagnostics.

use crate::scalar::Scalar;

/// Sample covariance (divisor `m − 1`) of `rows`, returned row-major `n × n`.
pub fn covariance<T: Scalar, R: AsRef<[T]>>(rows: &[R]) -> Vec<T> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.as_ref().len());
    let mean = column_means(rows);
    let mut cov = vec![T::zero(); n * n];
    for r in rows {
        let r = r.as_ref();
        for i in 0..n {
            let di = r[i] - mean[i];
            for j in i..n {
                cov[i * n + j] = cov[i * n + j] + di * (r[j] - mean[j]);
            }
        }
    }
    let denom = T::from_count(m.saturating_sub(1).max(1));
    for i in 0..n {
        for j in i..n {
            let v = cov[i * n + j] / denom;
            cov[i * n + j] = v;
            cov[j * n + i] = v;
        }
    }
    cov
}

pub fn column_means<T: Scalar, R: AsRef<[T]>>(rows: &[R]) -> Vec<T> {
    let n = rows.first().map_or(0, |r| r.as_ref().len());
    let mut mean = vec![T::zero(); n];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r.as_ref()) {
            *m = *m + v;
        }
    }
    let k = T::from_count(rows.len().max(1));
    mean.iter_mut().for_each(|m| *m = *m / k);
    mean
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major) by
/// Cholesky factorisation. Returns `None` when a pivot is not positive.
pub fn cholesky_solve<T: Scalar>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let pivot_floor = scale * T::epsilon() * T::from_count(n.max(1));
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > pivot_floor) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a: [f64; 4] = [4.0, 1.0, 1.0, 3.0];
        let x = cholesky_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(cholesky_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 0.0]).is_none());
    }

    #[test]
    fn covariance_of_two_points() {
        let c = covariance(&[vec![1.0, 2.0], vec![3.0, 6.0]]);
        assert_eq!(c, vec![2.0, 4.0, 4.0, 8.0]);
    }
}
