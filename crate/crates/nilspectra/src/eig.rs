//! Hand-rolled dense eigensolvers.
//!
//! * [`sym_eig`]: cyclic Jacobi for symmetric matrices; eigenvalues exact to
//!   a few ulps of ‖A‖, eigenvectors orthogonal to working precision.
//! * [`singular_values`]: one-sided Jacobi; small singular values come out
//!   with absolute accuracy ~eps·‖A‖, which keeps true zeros far below the
//!   1e-8-relative rank thresholds used by the rank diagnostics.

use crate::mat::{dot, Mat};
use crate::scalar::Scalar;

fn off_diag_norm<T: Scalar>(a: &Mat<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a symmetric matrix.
/// Returns eigenvalues in nonincreasing order and the matching orthonormal
/// eigenvectors as columns.
pub fn sym_eig<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    assert!(a.is_square(), "sym_eig needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    // Work on the symmetrized copy; callers pass near-symmetric data.
    for i in 0..n {
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)]) / T::c(2.0);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = Mat::identity(n);
    let scale = m.frobenius() + T::one();
    let tol = T::epsilon() * scale;
    for _sweep in 0..100 {
        if off_diag_norm(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::epsilon() * scale / T::c(n as f64 * n as f64) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::c(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // Rotate rows/columns p,q of m and columns p,q of v.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigs: Vec<T> = order.iter().map(|&i| diag[i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (eigs, vecs)
}

/// Singular values in nonincreasing order, via one-sided Jacobi on columns.
pub fn singular_values<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    let work = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let n = work.cols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| work.col(j)).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::c(2.0) * gamma);
                let t = {
                    let s = if zeta >= T::zero() { T::one() } else { -T::one() };
                    s / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..cols[i].len() {
                    let vi = cols[i][k];
                    let vj = cols[j][k];
                    cols[i][k] = c * vi - s * vj;
                    cols[j][k] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut svs: Vec<T> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    svs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    svs
}

/// Number of singular values exceeding `rel_tol` times the largest one.
pub fn numerical_rank<T: Scalar>(a: &Mat<T>, rel_tol: T) -> usize {
    let svs = singular_values(a);
    match svs.first() {
        None => 0,
        Some(&top) if top == T::zero() => 0,
        Some(&top) => svs.iter().filter(|&&s| s > rel_tol * top).count(),
    }
}
