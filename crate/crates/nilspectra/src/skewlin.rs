//! Spectral theory of real skew-symmetric operators.
//!
//! A skew operator S ∈ so(m) has purely imaginary eigenvalues ±i·d_k with
//! d_k ≥ 0; the multiset {d_k} together with dim ker S determines S up to
//! orthogonal conjugation. This module computes that invariant, the
//! canonical 2×2 block form, and explicit orthogonal conjugators between
//! operators with matching frequency data.

use std::fmt;

use thiserror::Error;

use crate::eig::{singular_values, sym_eig};
use crate::mat::{dot, norm, Mat};
use crate::scalar::Scalar;

/// Two frequencies are treated as equal when |d − d′| ≤ knob·(1 + max(d, d′)).
/// Single knob shared by every comparison in this module.
pub const FREQ_EQ_KNOB: f64 = 1e-8;

/// Relative antisymmetry defect accepted by the constructor.
pub const SKEW_DEFECT_TOL: f64 = 1e-12;

pub fn freqs_close<T: Scalar>(a: T, b: T) -> bool {
    let m = if a > b { a } else { b };
    (a - b).abs() <= T::c(FREQ_EQ_KNOB) * (T::one() + m)
}

#[derive(Debug, Error)]
pub enum SkewLinError {
    #[error("operator must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not antisymmetric (defect {defect:e} exceeds tolerance)")]
    NotSkew { defect: f64 },
    #[error("operators have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operators are not orthogonally similar: spectra {left} vs {right}")]
    NotSimilar { left: String, right: String },
}

/// A real skew-symmetric operator. The constructor symmetrizes
/// M ← (M − Mᵀ)/2 and rejects input whose antisymmetry defect exceeds
/// `SKEW_DEFECT_TOL` relative to the entry scale.
#[derive(Clone, PartialEq, Debug)]
pub struct SkewOperator<T: Scalar = crate::Real> {
    dim: usize,
    entries: Mat<T>,
}

impl<T: Scalar> SkewOperator<T> {
    pub fn new(entries: Mat<T>) -> Result<Self, SkewLinError> {
        if !entries.is_square() {
            return Err(SkewLinError::NotSquare(entries.rows(), entries.cols()));
        }
        let n = entries.rows();
        let mut defect = T::zero();
        for i in 0..n {
            for j in 0..=i {
                let d = (entries[(i, j)] + entries[(j, i)]).abs();
                if d > defect {
                    defect = d;
                }
            }
        }
        let scale = T::one() + entries.max_abs();
        if defect > T::c(SKEW_DEFECT_TOL) * scale {
            return Err(SkewLinError::NotSkew {
                defect: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
        let half = T::c(0.5);
        let skew = Mat::from_fn(n, n, |i, j| (entries[(i, j)] - entries[(j, i)]) * half);
        Ok(SkewOperator { dim: n, entries: skew })
    }

    pub fn zero(dim: usize) -> Self {
        SkewOperator { dim, entries: Mat::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &Mat<T> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<T> {
        self.entries
    }
}

/// Frequencies d_k ≥ 0 (one per ±i·d_k pair), nonincreasing, plus the kernel
/// dimension; 2·freqs.len() + kernel_dim = dim of the operator.
#[derive(Clone, PartialEq, Debug)]
pub struct SkewSpectrum<T: Scalar = crate::Real> {
    freqs: Vec<T>,
    kernel_dim: usize,
}

impl<T: Scalar> SkewSpectrum<T> {
    pub fn new(mut freqs: Vec<T>, kernel_dim: usize) -> Self {
        assert!(freqs.iter().all(|&d| d >= T::zero()), "frequencies must be nonnegative");
        freqs.sort_by(|a, b| b.partial_cmp(a).expect("finite frequencies"));
        SkewSpectrum { freqs, kernel_dim }
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.freqs.len() + self.kernel_dim
    }

    /// Frequency-multiset equality under the `FREQ_EQ_KNOB` tolerance.
    pub fn close_to(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.kernel_dim == other.kernel_dim
            && self
                .freqs
                .iter()
                .zip(&other.freqs)
                .all(|(&a, &b)| freqs_close(a, b))
    }
}

impl<T: Scalar> fmt::Display for SkewSpectrum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fs: Vec<String> = self.freqs.iter().map(|d| format!("{d}")).collect();
        write!(f, "[{}] + 0^{}", fs.join(", "), self.kernel_dim)
    }
}

/// Frequencies of S from its singular values: each positive d appears twice
/// among the singular values of a skew matrix, so they are paired down.
/// Values at or below knob·(1 + d_max) count as kernel.
pub fn skew_spectrum<T: Scalar>(s: &SkewOperator<T>) -> SkewSpectrum<T> {
    let svs = singular_values(s.entries());
    let m = s.dim();
    if m == 0 {
        return SkewSpectrum::new(vec![], 0);
    }
    let ztol = T::c(FREQ_EQ_KNOB) * (T::one() + svs[0]);
    let mut freqs = Vec::new();
    let mut i = 0usize;
    while i + 1 < m && svs[i] > ztol && svs[i + 1] > ztol {
        freqs.push((svs[i] + svs[i + 1]) * T::c(0.5));
        i += 2;
    }
    let kernel_dim = m - 2 * freqs.len();
    SkewSpectrum { freqs, kernel_dim }
}

fn project_out<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) {
    for b in basis {
        let c = dot(w, b);
        for (wi, bi) in w.iter_mut().zip(b) {
            *wi = *wi - c * *bi;
        }
    }
}

/// Orthogonal Q and frequency data with Qᵀ·S·Q = blockdiag([[0,−d_k],[d_k,0]], …, 0)
/// in nonincreasing d order, kernel block last.
pub fn canonical_block_form<T: Scalar>(s: &SkewOperator<T>) -> (Mat<T>, SkewSpectrum<T>) {
    let m = s.dim();
    let a = s.entries();
    // −S² is symmetric PSD with eigenvalues d², each doubled.
    let minus_s2 = a.matmul(a).scale(-T::one());
    let (lam, v) = sym_eig(&minus_s2);
    let d_of = |l: T| if l > T::zero() { l.sqrt() } else { T::zero() };
    let d_max = d_of(lam[0]);
    let ztol = T::c(FREQ_EQ_KNOB) * (T::one() + d_max);

    // Cluster eigenvalues, largest first, so repeated frequencies are
    // handled inside one subspace.
    let mut clusters: Vec<(T, Vec<usize>)> = Vec::new();
    for i in 0..m {
        let d = d_of(lam[i]);
        match clusters.last_mut() {
            Some((dc, cols)) if freqs_close(*dc, d) || (d <= ztol && *dc <= ztol) => {
                cols.push(i)
            }
            _ => clusters.push((d, vec![i])),
        }
    }

    let mut q_cols: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut kernel_cols: Vec<Vec<T>> = Vec::new();
    let mut freqs: Vec<T> = Vec::new();
    for (dc, cols) in &clusters {
        if *dc <= ztol {
            for &ci in cols {
                let mut w = v.col(ci);
                project_out(&mut w, &q_cols);
                project_out(&mut w, &kernel_cols);
                let n = norm(&w);
                if n > T::c(0.5) {
                    let inv = T::one() / n;
                    for x in &mut w {
                        *x = *x * inv;
                    }
                    kernel_cols.push(w);
                }
            }
            continue;
        }
        let pairs = cols.len() / 2;
        for _ in 0..pairs {
            // Pick the cluster column with the largest residual against the
            // columns chosen so far; the residual is bounded below, so no
            // threshold is needed.
            let mut best: Option<(T, Vec<T>)> = None;
            for &ci in cols {
                let mut w = v.col(ci);
                project_out(&mut w, &q_cols);
                let n = norm(&w);
                if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                    best = Some((n, w));
                }
            }
            let (n, mut u) = best.expect("cluster is nonempty");
            let inv = T::one() / n;
            for x in &mut u {
                *x = *x * inv;
            }
            // Second orthogonalization pass for numerical hygiene.
            project_out(&mut u, &q_cols);
            let n = norm(&u);
            let inv = T::one() / n;
            for x in &mut u {
                *x = *x * inv;
            }
            // Partner column: S·u/d spans the rotation plane with u.
            let mut w = a.matvec(&u);
            let invd = T::one() / *dc;
            for x in &mut w {
                *x = *x * invd;
            }
            project_out(&mut w, &q_cols);
            let c = dot(&w, &u);
            for (wi, ui) in w.iter_mut().zip(&u) {
                *wi = *wi - c * *ui;
            }
            let n = norm(&w);
            let inv = T::one() / n;
            for x in &mut w {
                *x = *x * inv;
            }
            q_cols.push(u);
            q_cols.push(w);
            freqs.push(*dc);
        }
    }
    let mut q = Mat::zeros(m, m);
    for (j, cvec) in q_cols.iter().chain(kernel_cols.iter()).enumerate() {
        q.set_col(j, cvec);
    }
    let kernel_dim = m - 2 * freqs.len();
    (q, SkewSpectrum { freqs, kernel_dim })
}

/// Orthogonal Q with Q·S1·Qᵀ = S2, or `NotSimilar` exactly when the
/// frequency data of S1 and S2 differ beyond the comparison knob.
pub fn orthogonal_conjugator<T: Scalar>(
    s1: &SkewOperator<T>,
    s2: &SkewOperator<T>,
) -> Result<Mat<T>, SkewLinError> {
    if s1.dim() != s2.dim() {
        return Err(SkewLinError::DimensionMismatch(s1.dim(), s2.dim()));
    }
    let (q1, sp1) = canonical_block_form(s1);
    let (q2, sp2) = canonical_block_form(s2);
    if !sp1.close_to(&sp2) {
        return Err(SkewLinError::NotSimilar {
            left: sp1.to_string(),
            right: sp2.to_string(),
        });
    }
    // Q1ᵀS1Q1 and Q2ᵀS2Q2 are the same block form, so Q2·Q1ᵀ conjugates.
    Ok(q2.matmul(&q1.transpose()))
}

/// trace(S^{2k}), the literal matrix power: equals (−1)ᵏ · Σ 2·d_i^{2k}.
pub fn trace_power<T: Scalar>(s: &SkewOperator<T>, k: usize) -> T {
    assert!(k >= 1, "trace_power needs k >= 1");
    s.entries().pow(2 * k).trace()
}
