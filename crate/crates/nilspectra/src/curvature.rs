//! Curvature of the metric two-step algebra attached to a j-map.
//!
//! With orthonormal central directions Z_k, the operator S = ½·Σ_k j(Z_k)²
//! is symmetric negative semi-definite and gives the Ricci form on v; the
//! central block is Ric(Z_i, Z_j) = −¼·trace(j(Z_i)j(Z_j)), positive
//! definite for injective j; the mixed block vanishes. Sectional curvature
//! on tagged pure planes: K(X,Y) = −¾‖[X,Y]‖², K(X,Z) = ¼‖j(Z)X‖²,
//! K(Z,W) = 0.
//!
//! Isospectral maps share the central block (it polarizes the quadratic
//! trace invariant) and the Frobenius norm of S, while det S and the
//! eigenvalue multiset of S can move: curvature separates members of an
//! isospectral family.

use thiserror::Error;

use crate::eig::sym_eig;
use crate::families::{build_jab, deform, DeformationFamily, FamiliesError};
use crate::mat::{det, dot, norm, Mat};
use crate::nilalg::JMap;
use crate::scalar::Scalar;

/// Orthonormality gate for sectional-curvature input planes.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("tangent vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("plane vectors must be orthonormal: {0}")]
    NotOrthonormal(String),
    #[error(transparent)]
    Families(#[from] FamiliesError),
}

/// Tangent vector tagged by the factor it lives in: V for the
/// non-central factor (length m), Z for the center (length r).
#[derive(Clone, Debug)]
pub enum TangentVector<T: Scalar = crate::Real> {
    V(Vec<T>),
    Z(Vec<T>),
}

impl<T: Scalar> TangentVector<T> {
    fn coords(&self) -> &[T] {
        match self {
            TangentVector::V(x) | TangentVector::Z(x) => x,
        }
    }

    fn check_dim(&self, m: usize, r: usize) -> Result<(), CurvatureError> {
        let (want, got) = match self {
            TangentVector::V(x) => (m, x.len()),
            TangentVector::Z(x) => (r, x.len()),
        };
        if want != got {
            return Err(CurvatureError::DimensionMismatch { expected: want, got });
        }
        Ok(())
    }
}

/// S = ½·Σ_k j(Z_k)², symmetric negative semi-definite.
pub fn s_operator<T: Scalar>(j: &JMap<T>) -> Mat<T> {
    let m = j.m();
    let mut s = Mat::zeros(m, m);
    for sk in j.mats() {
        let e = sk.entries();
        s = s.add(&e.matmul(e));
    }
    s.scale(T::c(0.5))
}

/// Sectional curvature of the plane spanned by two orthonormal tagged
/// vectors. Pure central planes are flat; pure v-planes see the bracket;
/// mixed planes see j.
pub fn sectional<T: Scalar>(
    j: &JMap<T>,
    x: &TangentVector<T>,
    y: &TangentVector<T>,
) -> Result<T, CurvatureError> {
    x.check_dim(j.m(), j.r())?;
    y.check_dim(j.m(), j.r())?;
    let tol = T::c(ORTHONORMAL_TOL);
    for (name, v) in [("first", x), ("second", y)] {
        let n = norm(v.coords());
        if (n - T::one()).abs() > tol {
            return Err(CurvatureError::NotOrthonormal(format!(
                "{name} vector has norm {n}"
            )));
        }
    }
    let same_factor = matches!(
        (x, y),
        (TangentVector::V(_), TangentVector::V(_)) | (TangentVector::Z(_), TangentVector::Z(_))
    );
    if same_factor {
        let ip = dot(x.coords(), y.coords());
        if ip.abs() > tol {
            return Err(CurvatureError::NotOrthonormal(format!(
                "plane vectors have inner product {ip}"
            )));
        }
    }
    Ok(match (x, y) {
        (TangentVector::Z(_), TangentVector::Z(_)) => T::zero(),
        (TangentVector::V(a), TangentVector::V(b)) => {
            // [a, b]_k = ⟨j(Z_k)a, b⟩
            let br: Vec<T> = j
                .mats()
                .iter()
                .map(|s| dot(&s.entries().matvec(a), b))
                .collect();
            -T::c(0.75) * dot(&br, &br)
        }
        (TangentVector::V(a), TangentVector::Z(z))
        | (TangentVector::Z(z), TangentVector::V(a)) => {
            let jz = j.j_at(z);
            let ja = jz.entries().matvec(a);
            T::c(0.25) * dot(&ja, &ja)
        }
    })
}

/// Ricci data of a j-map: the operator S with its spectrum and scalar
/// summaries, and the central block.
#[derive(Clone, Debug)]
pub struct RicciReport<T: Scalar = crate::Real> {
    pub s: Mat<T>,
    /// Eigenvalues of S, ascending (all ≤ 0).
    pub v_block_eigs: Vec<T>,
    /// r×r block with entries −¼·trace(j(Z_i)j(Z_j)); positive definite.
    pub z_block: Mat<T>,
    pub det_s: T,
    /// Frobenius norm of S; constant along isospectral deformations.
    pub frobenius_s: T,
}

impl<T: Scalar> RicciReport<T> {
    /// Frobenius norm of the full Ricci tensor: the mixed block vanishes,
    /// so the blocks combine in quadrature.
    pub fn total_frobenius(&self) -> T {
        let z = self.z_block.frobenius();
        (self.frobenius_s * self.frobenius_s + z * z).sqrt()
    }
}

pub fn ricci_report<T: Scalar>(j: &JMap<T>) -> RicciReport<T> {
    let s = s_operator(j);
    let (mut eigs, _) = sym_eig(&s);
    eigs.reverse();
    let r = j.r();
    let z_block = Mat::from_fn(r, r, |a, b| {
        -T::c(0.25) * j.mats()[a].entries().trace_product(j.mats()[b].entries())
    });
    let det_s = det(&s);
    let frobenius_s = s.frobenius();
    RicciReport { s, v_block_eigs: eigs, z_block, det_s, frobenius_s }
}

/// One sampled point of a deformation scan.
#[derive(Clone, Debug)]
pub struct ScanRow<T: Scalar = crate::Real> {
    pub u: T,
    pub det_s: T,
    pub frobenius_s: T,
    pub v_block_eigs: Vec<T>,
}

/// Scan summary: rows plus the extremes that certify "det moves, norm
/// does not".
#[derive(Clone, Debug)]
pub struct DeformationScan<T: Scalar = crate::Real> {
    pub rows: Vec<ScanRow<T>>,
    pub det_min: T,
    pub det_max: T,
    pub frobenius_spread: T,
}

/// Evaluates the Ricci data at `samples` equispaced points of the
/// deformation interval. A single-sample scan evaluates the midpoint.
pub fn curvature_deformation_scan<T: Scalar>(
    fam: &DeformationFamily<T>,
    samples: usize,
) -> Result<DeformationScan<T>, CurvatureError> {
    assert!(samples >= 1, "scan needs at least one sample");
    let (lo, hi) = fam.interval();
    let us: Vec<T> = if samples == 1 {
        vec![(lo + hi) * T::c(0.5)]
    } else {
        (0..samples)
            .map(|i| lo + (hi - lo) * T::c(i as f64 / (samples - 1) as f64))
            .collect()
    };
    let mut rows = Vec::with_capacity(samples);
    for u in us {
        let b_u = deform(fam, u)?;
        let j = build_jab(fam.a(), b_u)?;
        let rep = ricci_report(&j);
        rows.push(ScanRow {
            u,
            det_s: rep.det_s,
            frobenius_s: rep.frobenius_s,
            v_block_eigs: rep.v_block_eigs,
        });
    }
    let det_min = rows.iter().map(|r| r.det_s).fold(T::infinity(), T::min);
    let det_max = rows.iter().map(|r| r.det_s).fold(T::neg_infinity(), T::max);
    let f_min = rows.iter().map(|r| r.frobenius_s).fold(T::infinity(), T::min);
    let f_max = rows.iter().map(|r| r.frobenius_s).fold(T::neg_infinity(), T::max);
    Ok(DeformationScan { rows, det_min, det_max, frobenius_spread: f_max - f_min })
}
