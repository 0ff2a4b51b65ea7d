//! Small dense symmetric eigenproblems by cyclic Jacobi rotation.

/// Off-diagonal Frobenius norm at which the iteration stops.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Row k holds the unit eigenvector of `values[k]`, with its first nonzero
    /// coordinate positive.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn off_diagonal(a: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[i * d + j] * a[i * d + j];
            }
        }
    }
    s.sqrt()
}

/// Eigen-decomposition of a symmetric row-major d×d matrix.
pub fn jacobi_eigen(matrix: &[f64], d: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), d * d);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off_diagonal(&a, d) > JACOBI_TOL {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                if s == 0.0 {
                    continue;
                }
                rotated = true;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps the lowest index first among equal eigenvalues.
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]));
    let values = order.iter().map(|&i| a[i * d + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = (0..d).map(|k| v[k * d + i]).collect();
            if col.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0) {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    SymmetricEigen {
        values,
        vectors,
        sweeps,
    }
}

/// Solve the k×k system `a x = b` (row-major) by Gaussian elimination with
/// partial pivoting; `None` if a pivot vanishes.
pub fn solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..k {
        let piv =
            (col..k).max_by(|&i, &j| m[i * k + col].abs().total_cmp(&m[j * k + col].abs()))?;
        if m[piv * k + col] == 0.0 || !m[piv * k + col].is_finite() {
            return None;
        }
        if piv != col {
            for j in 0..k {
                m.swap(piv * k + j, col * k + j);
            }
            x.swap(piv, col);
        }
        for r in col + 1..k {
            let f = m[r * k + col] / m[col * k + col];
            for j in col..k {
                m[r * k + j] -= f * m[col * k + j];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..k).rev() {
        let s: f64 = (col + 1..k).map(|j| m[col * k + j] * x[j]).sum();
        x[col] = (x[col] - s) / m[col * k + col];
    }
    Some(x)
}
