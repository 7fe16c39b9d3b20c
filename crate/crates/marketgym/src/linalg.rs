//! Small dense linear algebra on row-major `Vec<f64>` matrices: sample
//! covariance, ridge conditioning and Cholesky solves.

/// Relative ridge applied when the caller does not pin one.
pub const DEFAULT_RELATIVE_RIDGE: f64 = 1e-8;

/// Column means and sample (n - 1) covariance of `rows`, each of length `n`.
pub fn mean_and_covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; n];
    for row in rows {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let mut cov = vec![0.0; n * n];
    for row in rows {
        for i in 0..n {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[i * n + j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (m.max(2) - 1) as f64;
    for i in 0..n {
        for j in 0..=i {
            let v = cov[i * n + j] / denom;
            cov[i * n + j] = v;
            cov[j * n + i] = v;
        }
    }
    (mean, cov)
}

pub fn trace(matrix: &[f64], n: usize) -> f64 {
    (0..n).map(|i| matrix[i * n + i]).sum()
}

/// Adds `ridge` to the diagonal, or `DEFAULT_RELATIVE_RIDGE * trace / n` when
/// `ridge` is `None`.
pub fn regularize(matrix: &mut [f64], n: usize, ridge: Option<f64>) {
    let eps = ridge.unwrap_or_else(|| DEFAULT_RELATIVE_RIDGE * trace(matrix, n) / n as f64);
    for i in 0..n {
        matrix[i * n + i] += eps;
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// if a pivot is not safely positive.
pub fn cholesky(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| matrix[i * n + i].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > tol) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L z = b` for lower-triangular `L`.
pub fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * z[k];
        }
        z[i] = sum / l[i * n + i];
    }
    z
}

/// `x' A x` for symmetric `A`.
pub fn quadratic_form(a: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[i * n + j] * x[j];
        }
        total += x[i] * row;
    }
    total
}

/// `A x` for an `n x n` matrix.
pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let rebuilt = [
            l[0] * l[0],
            l[0] * l[2],
            l[2] * l[0],
            l[2] * l[2] + l[3] * l[3],
        ];
        for (x, y) in rebuilt.iter().zip(a) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_has_no_factor() {
        assert!(cholesky(&[1.0, 1.0, 1.0, 1.0], 2).is_none());
    }

    #[test]
    fn covariance_of_known_rows() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        let (mean, cov) = mean_and_covariance(&rows);
        assert_eq!(mean, vec![2.0, 4.0]);
        assert_eq!(cov, vec![2.0, 4.0, 4.0, 8.0]);
    }
}
