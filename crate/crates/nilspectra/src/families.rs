//! Generators for the concrete families: quaternionic 7-dimensional pairs
//! (m = 4, r = 3), the 8-dimensional one-parameter deformation (m = 6,
//! r = 2), and integer instances of the deformed pairs.
//!
//! Quaternions use the basis (1, i, j, k); for q = (w, x, y, z) the left and
//! right multiplication matrices are
//!
//! ```text
//! L(q) = [ w −x −y −z ]      R(q) = [ w −x −y −z ]
//!        [ x  w −z  y ]             [ x  w  z −y ]
//!        [ y  z  w −x ]             [ y −z  w  x ]
//!        [ z −y  x  w ]             [ z  y −x  w ]
//! ```
//!
//! both golden-tested against the multiplication table. For pure q, p the
//! operator J(q, p) = L(q) + R(p) is skew with eigenvalues ±i(|q|+|p|) and
//! ±i||q|−|p||, so its spectrum depends only on the two lengths.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exactlat::RationalMatrix;
use crate::mat::Mat;
use crate::nilalg::{JMap, MetricTwoStepAlgebra, NilAlgError};
use crate::scalar::Scalar;
use crate::skewlin::{SkewLinError, SkewOperator};

#[derive(Debug, Error)]
pub enum FamiliesError {
    #[error("quaternion argument must be pure (zero real part), got real part {0:e}")]
    NonPure(f64),
    #[error("T must be an invertible 3x3 matrix")]
    SingularT,
    #[error("frequencies must satisfy 0 < a1 < a2 < a3")]
    BadOrdering,
    #[error("b must be nonzero")]
    ZeroB,
    #[error("u = {u} outside the deformation interval [{lo}, {hi}]")]
    OutsideInterval { u: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Skew(#[from] SkewLinError),
    #[error(transparent)]
    NilAlg(#[from] NilAlgError),
}

// ---------------------------------------------------------------------------
// Quaternion matrices
// ---------------------------------------------------------------------------

/// Hamilton product in basis (1, i, j, k).
pub fn quat_mul<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> [T; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Matrix of h ↦ q·h.
pub fn left_mul_matrix<T: Scalar>(q: &[T; 4]) -> Mat<T> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Mat::from_rows(&[
        vec![w, -x, -y, -z],
        vec![x, w, -z, y],
        vec![y, z, w, -x],
        vec![z, -y, x, w],
    ])
}

/// Matrix of h ↦ h·p.
pub fn right_mul_matrix<T: Scalar>(p: &[T; 4]) -> Mat<T> {
    let (w, x, y, z) = (p[0], p[1], p[2], p[3]);
    Mat::from_rows(&[
        vec![w, -x, -y, -z],
        vec![x, w, z, -y],
        vec![y, -z, w, x],
        vec![z, y, -x, w],
    ])
}

fn left_mul_matrix_exact(q: &[BigRational; 4]) -> RationalMatrix {
    let (w, x, y, z) = (&q[0], &q[1], &q[2], &q[3]);
    RationalMatrix::new(
        4,
        4,
        vec![
            w.clone(), -x.clone(), -y.clone(), -z.clone(),
            x.clone(), w.clone(), -z.clone(), y.clone(),
            y.clone(), z.clone(), w.clone(), -x.clone(),
            z.clone(), -y.clone(), x.clone(), w.clone(),
        ],
    )
}

fn right_mul_matrix_exact(p: &[BigRational; 4]) -> RationalMatrix {
    let (w, x, y, z) = (&p[0], &p[1], &p[2], &p[3]);
    RationalMatrix::new(
        4,
        4,
        vec![
            w.clone(), -x.clone(), -y.clone(), -z.clone(),
            x.clone(), w.clone(), z.clone(), -y.clone(),
            y.clone(), -z.clone(), w.clone(), x.clone(),
            z.clone(), y.clone(), -x.clone(), w.clone(),
        ],
    )
}

/// J(q, p) = L(q) + R(p) for pure quaternions q, p (skew by construction).
pub fn jqp<T: Scalar>(q: &[T; 4], p: &[T; 4]) -> Result<SkewOperator<T>, FamiliesError> {
    let scale = q.iter().chain(p.iter()).fold(T::one(), |acc, &v| acc.max(v.abs()));
    for v in [q[0], p[0]] {
        if v.abs() > T::c(1e-12) * scale {
            return Err(FamiliesError::NonPure(v.to_f64().unwrap_or(f64::NAN)));
        }
    }
    let m = left_mul_matrix(q).add(&right_mul_matrix(p));
    Ok(SkewOperator::new(m)?)
}

fn jqp_exact(q: &[BigRational; 4], p: &[BigRational; 4]) -> RationalMatrix {
    assert!(q[0].is_zero() && p[0].is_zero(), "pure quaternions required");
    left_mul_matrix_exact(q).add(&right_mul_matrix_exact(p))
}

// ---------------------------------------------------------------------------
// Quaternionic pairs j(q) = J(q, Tq), j′(q) = J(q, (A∘T)q)
// ---------------------------------------------------------------------------

const DET_NEG_A: [i64; 3] = [-1, 1, 1]; // fixed orthogonal factor of det −1, diagonal

fn pure(v: &[BigRational]) -> [BigRational; 4] {
    [BigRational::zero(), v[0].clone(), v[1].clone(), v[2].clone()]
}

/// Exact pair of algebras for a rational invertible T: j(q) = J(q, Tq) and
/// j′(q) = J(q, T′q) with T′ = diag(−1,1,1)·T. The two are isospectral for
/// every q and never equivalent (the determinants of T and T′ differ in
/// sign while conjugation preserves it).
pub fn quaternion_algebra_pair<T: Scalar>(
    t: &RationalMatrix,
) -> Result<(MetricTwoStepAlgebra<T>, MetricTwoStepAlgebra<T>), FamiliesError> {
    if !t.is_square() || t.rows() != 3 || t.determinant().is_zero() {
        return Err(FamiliesError::SingularT);
    }
    let mut mats = Vec::with_capacity(3);
    let mut mats_prime = Vec::with_capacity(3);
    for k in 0..3 {
        let e: Vec<BigRational> = (0..3)
            .map(|i| if i == k { BigRational::one() } else { BigRational::zero() })
            .collect();
        let te: Vec<BigRational> = (0..3).map(|i| t.get(i, k).clone()).collect();
        let te_prime: Vec<BigRational> = (0..3)
            .map(|i| BigRational::from(BigInt::from(DET_NEG_A[i])) * t.get(i, k))
            .collect();
        mats.push(jqp_exact(&pure(&e), &pure(&te)));
        mats_prime.push(jqp_exact(&pure(&e), &pure(&te_prime)));
    }
    Ok((
        MetricTwoStepAlgebra::from_exact(4, mats)?,
        MetricTwoStepAlgebra::from_exact(4, mats_prime)?,
    ))
}

/// Float view of `quaternion_algebra_pair`, returning the two j-maps.
pub fn quaternion_pair<T: Scalar>(
    t: &RationalMatrix,
) -> Result<(JMap<T>, JMap<T>), FamiliesError> {
    let (a, b) = quaternion_algebra_pair::<T>(t)?;
    Ok((a.jmap().clone(), b.jmap().clone()))
}

// ---------------------------------------------------------------------------
// One-parameter deformation (m = 6, r = 2)
// ---------------------------------------------------------------------------

/// One-parameter family of b-vectors keeping j_{a,b(u)} isospectral to
/// j_{a,b}: b_ij(u)² = b_ij² + u·Δ_ij with Δ = (a₂²−a₁², a₁²−a₃², a₃²−a₂²)
/// and signs inherited from b. The parameter interval is exactly the set of
/// u keeping all three squares nonnegative.
#[derive(Clone, Debug)]
pub struct DeformationFamily<T: Scalar = crate::Real> {
    a: [T; 3],
    b: [T; 3],
    interval: (T, T),
}

impl<T: Scalar> DeformationFamily<T> {
    pub fn new(a: [T; 3], b: [T; 3]) -> Result<Self, FamiliesError> {
        if !(T::zero() < a[0] && a[0] < a[1] && a[1] < a[2]) {
            return Err(FamiliesError::BadOrdering);
        }
        if b.iter().all(|&v| v == T::zero()) {
            return Err(FamiliesError::ZeroB);
        }
        let (a1, a2, a3) = (a[0], a[1], a[2]);
        let d12 = a2 * a2 - a1 * a1;
        let d13neg = a3 * a3 - a1 * a1;
        let d23 = a3 * a3 - a2 * a2;
        let lo = (-b[0] * b[0] / d12).max(-b[2] * b[2] / d23);
        let hi = b[1] * b[1] / d13neg;
        Ok(DeformationFamily { a, b, interval: (lo, hi) })
    }

    pub fn a(&self) -> [T; 3] {
        self.a
    }

    pub fn b(&self) -> [T; 3] {
        self.b
    }

    pub fn interval(&self) -> (T, T) {
        self.interval
    }
}

/// b(u): componentwise √(b_ij² + u·Δ_ij) with the sign of b_ij.
pub fn deform<T: Scalar>(fam: &DeformationFamily<T>, u: T) -> Result<[T; 3], FamiliesError> {
    let (lo, hi) = fam.interval;
    let slack = T::c(1e-12) * (T::one() + hi.abs().max(lo.abs()));
    if u < lo - slack || u > hi + slack {
        return Err(FamiliesError::OutsideInterval {
            u: u.to_f64().unwrap_or(f64::NAN),
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let (a1, a2, a3) = (fam.a[0], fam.a[1], fam.a[2]);
    let delta = [a2 * a2 - a1 * a1, a1 * a1 - a3 * a3, a3 * a3 - a2 * a2];
    let mut out = [T::zero(); 3];
    for k in 0..3 {
        let sq = (fam.b[k] * fam.b[k] + u * delta[k]).max(T::zero());
        let sign = if fam.b[k] < T::zero() { -T::one() } else { T::one() };
        out[k] = sign * sq.sqrt();
    }
    Ok(out)
}

fn jab_entries<V: Clone + std::ops::Neg<Output = V>>(
    zero: V,
    a: &[V; 3],
    b: &[V; 3],
) -> (Vec<V>, Vec<V>) {
    let n = 6;
    let mut amat = vec![zero.clone(); n * n];
    for (blk, ak) in a.iter().enumerate() {
        amat[(2 * blk) * n + 2 * blk + 1] = -ak.clone();
        amat[(2 * blk + 1) * n + 2 * blk] = ak.clone();
    }
    // b lives on the odd-index complement: rows/cols 1, 3, 5 are zero.
    let mut bmat = vec![zero; n * n];
    let (b12, b13, b23) = (b[0].clone(), b[1].clone(), b[2].clone());
    bmat[2] = b12.clone();
    bmat[2 * n] = -b12;
    bmat[4] = b13.clone();
    bmat[4 * n] = -b13;
    bmat[2 * n + 4] = b23.clone();
    bmat[4 * n + 2] = -b23;
    (amat, bmat)
}

/// j_{a,b}(s, t) = s·(block-diagonal a) + t·(corner b-matrix): the j-map
/// with mats = [a-matrix, b-matrix], m = 6, r = 2.
pub fn build_jab<T: Scalar>(a: [T; 3], b: [T; 3]) -> Result<JMap<T>, FamiliesError> {
    if !(T::zero() < a[0] && a[0] < a[1] && a[1] < a[2]) {
        return Err(FamiliesError::BadOrdering);
    }
    if b.iter().all(|&v| v == T::zero()) {
        return Err(FamiliesError::ZeroB);
    }
    let (amat, bmat) = jab_entries(T::zero(), &a, &b);
    let am = SkewOperator::new(Mat::new(6, 6, amat))?;
    let bm = SkewOperator::new(Mat::new(6, 6, bmat))?;
    Ok(JMap::new(vec![am, bm])?)
}

/// Exact-rational version of `build_jab`, packaged as an algebra.
pub fn build_jab_exact<T: Scalar>(
    a: &[BigRational; 3],
    b: &[BigRational; 3],
) -> Result<MetricTwoStepAlgebra<T>, FamiliesError> {
    if !(a[0].is_positive() && a[0] < a[1] && a[1] < a[2]) {
        return Err(FamiliesError::BadOrdering);
    }
    if b.iter().all(|v| v.is_zero()) {
        return Err(FamiliesError::ZeroB);
    }
    let (amat, bmat) = jab_entries(BigRational::zero(), a, b);
    Ok(MetricTwoStepAlgebra::from_exact(
        6,
        vec![RationalMatrix::new(6, 6, amat), RationalMatrix::new(6, 6, bmat)],
    )?)
}

// ---------------------------------------------------------------------------
// Integer instances
// ---------------------------------------------------------------------------

/// An integer pair (b, b(u)) on the deformation line through b, with the
/// exact parameter u.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntegerInstance {
    pub b: [i64; 3],
    pub b_new: [i64; 3],
    pub u: BigRational,
}

fn exact_sqrt_i128(s: i128) -> Option<i64> {
    if s < 0 {
        return None;
    }
    let r = s.sqrt();
    if r * r == s {
        Some(r as i64)
    } else {
        None
    }
}

/// Exhaustive search over 0 ≤ b_ij ≤ bound for integer pairs (b, b(u)) with
/// u > 0: u ranges over (1/g)·Z with g = gcd of the three a²-differences
/// (the only u making every b_ij(u)² an integer), a mod-4 test on the
/// square differences prunes early, and the final check is exact integer
/// square roots. Pairs with b(u) = b are dropped; pairs failing
/// gcd(b) = gcd(b(u)) are dropped. Output sorted by (b, b_new).
pub fn integer_instances(a: [i64; 3], bound: i64) -> Result<Vec<IntegerInstance>, FamiliesError> {
    if !(0 < a[0] && a[0] < a[1] && a[1] < a[2]) {
        return Err(FamiliesError::BadOrdering);
    }
    let (a1, a2, a3) = (a[0] as i128, a[1] as i128, a[2] as i128);
    let d12 = a2 * a2 - a1 * a1;
    let d13 = a1 * a1 - a3 * a3;
    let d23 = a3 * a3 - a2 * a2;
    let g = d12.gcd(&(-d13)).gcd(&d23);

    let mut bases: Vec<[i64; 3]> = Vec::new();
    for b12 in 0..=bound {
        for b13 in 0..=bound {
            for b23 in 0..=bound {
                if b12 == 0 && b13 == 0 && b23 == 0 {
                    continue;
                }
                bases.push([b12, b13, b23]);
            }
        }
    }
    let gcd3 = |v: &[i64; 3]| v[0].gcd(&v[1]).gcd(&v[2]);
    let mut out: Vec<IntegerInstance> = bases
        .par_iter()
        .map(|&b| {
            let mut found = Vec::new();
            let (b12, b13, b23) = (b[0] as i128, b[1] as i128, b[2] as i128);
            // u = k/g ≤ b13²/(a3²−a1²) keeps the middle square nonnegative.
            let k_max = (g * b13 * b13) / (-d13);
            for k in 1..=k_max {
                // Integrality of u·Δ for u = k/g: g | Δ, so always integral.
                let s12 = b12 * b12 + k * d12 / g;
                let s13 = b13 * b13 + k * d13 / g;
                let s23 = b23 * b23 + k * d23 / g;
                // Difference-of-squares residues: x² − y² mod 4 ∈ {0,1,3}.
                if (s12 - b12 * b12).rem_euclid(4) == 2
                    || (s13 - b13 * b13).rem_euclid(4) == 2
                    || (s23 - b23 * b23).rem_euclid(4) == 2
                {
                    continue;
                }
                let (Some(t12), Some(t13), Some(t23)) =
                    (exact_sqrt_i128(s12), exact_sqrt_i128(s13), exact_sqrt_i128(s23))
                else {
                    continue;
                };
                let b_new = [t12, t13, t23];
                if b_new == b {
                    continue;
                }
                if gcd3(&b) != gcd3(&b_new) {
                    continue;
                }
                found.push(IntegerInstance {
                    b,
                    b_new,
                    u: BigRational::new(BigInt::from(k), BigInt::from(g)),
                });
            }
            found
        })
        .flatten()
        .collect();
    out.sort_by(|x, y| (x.b, x.b_new).cmp(&(y.b, y.b_new)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skewlin::skew_spectrum;
    use crate::Real;

    fn qi() -> [Real; 4] {
        [0.0, 1.0, 0.0, 0.0]
    }

    #[test]
    fn multiplication_table_golden() {
        // L(q)·h and R(p)·h must equal the Hamilton products q·h and h·p.
        let q = [0.5, -1.0, 2.0, 0.25];
        let h = [1.5, 0.5, -0.75, 2.0];
        let lh = left_mul_matrix(&q).matvec(&h);
        let qh = quat_mul(&q, &h);
        let rh = right_mul_matrix(&q).matvec(&h);
        let hq = quat_mul(&h, &q);
        for k in 0..4 {
            assert!((lh[k] - qh[k]).abs() < 1e-14);
            assert!((rh[k] - hq[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn jqp_unit_cases() {
        let zero = [0.0; 4];
        let sp = skew_spectrum(&jqp(&qi(), &zero).unwrap());
        assert_eq!(sp.freqs().len(), 2);
        assert!((sp.freqs()[0] - 1.0).abs() < 1e-12);
        assert!((sp.freqs()[1] - 1.0).abs() < 1e-12);
        // |q| = |p| = 1: frequencies |q|+|p| = 2 and ||q|−|p|| = 0.
        let sp2 = skew_spectrum(&jqp(&qi(), &qi()).unwrap());
        assert_eq!(sp2.freqs().len(), 1);
        assert!((sp2.freqs()[0] - 2.0).abs() < 1e-12);
        assert_eq!(sp2.kernel_dim(), 2);
    }

    #[test]
    fn jqp_rejects_non_pure() {
        let not_pure = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            jqp(&not_pure, &[0.0; 4]),
            Err(FamiliesError::NonPure(_))
        ));
    }

    #[test]
    fn conjugation_by_quaternion_conjugate_swaps() {
        // B·J(q,p)·B⁻¹ = J(−p,−q) with B = diag(1,−1,−1,−1).
        let q = [0.0, 0.5, -1.0, 2.0];
        let p = [0.0, 1.5, 0.25, -0.5];
        let b = Mat::from_fn(4, 4, |i, j| {
            if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                -1.0
            }
        });
        let j = jqp(&q, &p).unwrap();
        let lhs = b.matmul(j.entries()).matmul(&b);
        let neg = |v: &[Real; 4]| [-v[0], -v[1], -v[2], -v[3]];
        let rhs = jqp(&neg(&p), &neg(&q)).unwrap();
        assert!(lhs.sub(rhs.entries()).max_abs() < 1e-13);
    }

    #[test]
    fn conjugation_by_left_right_units() {
        // L(ā)·R(b̄)·J(q,p)·(L(ā)R(b̄))⁻¹ = J(ā⁻¹qā, b̄pb̄⁻¹) for unit ā, b̄.
        let s = 1.0 / (2.0f64).sqrt();
        let aq = [s, s, 0.0, 0.0];
        let bq = [0.5, 0.5, 0.5, 0.5];
        let q = [0.0, 1.0, -2.0, 0.5];
        let p = [0.0, 0.25, 1.0, -1.5];
        let conj = left_mul_matrix(&aq).matmul(&right_mul_matrix(&bq));
        let j = jqp(&q, &p).unwrap();
        // (L_aR_b)⁻¹·J(q,p)·(L_aR_b) = J(a⁻¹qa, bpb⁻¹); the inverse is the
        // transpose because a, b are unit quaternions.
        let lhs = conj.transpose().matmul(j.entries()).matmul(&conj);
        let inv = |v: &[Real; 4]| {
            let n = v.iter().map(|x| x * x).sum::<f64>();
            [v[0] / n, -v[1] / n, -v[2] / n, -v[3] / n]
        };
        let q2 = quat_mul(&quat_mul(&inv(&aq), &q), &aq);
        let p2 = quat_mul(&quat_mul(&bq, &p), &inv(&bq));
        let rhs = jqp(&q2, &p2).unwrap();
        assert!(lhs.sub(rhs.entries()).max_abs() < 1e-10);
    }

    #[test]
    fn quaternion_pair_spectra_match_pointwise() {
        let t = RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        let (j, jp) = quaternion_pair::<Real>(&t).unwrap();
        assert_eq!((j.m(), j.r()), (4, 3));
        for z in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, -1.0, 2.0], [1.0, 1.0, 1.0]] {
            let s1 = skew_spectrum(&j.j_at(&z));
            let s2 = skew_spectrum(&jp.j_at(&z));
            assert!(s1.close_to(&s2), "spectra at {z:?}: {s1} vs {s2}");
        }
    }

    #[test]
    fn quaternion_pair_rejects_singular() {
        let t = RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 1, 0], &[1, 1, 0]]);
        assert!(matches!(
            quaternion_pair::<Real>(&t),
            Err(FamiliesError::SingularT)
        ));
    }

    #[test]
    fn deformation_interval_and_values() {
        let fam = DeformationFamily::new([1.0, 2.0, 3.0], [4.0, 7.0, 7.0]).unwrap();
        let (lo, hi) = fam.interval();
        assert!((lo - (-16.0 / 3.0)).abs() < 1e-14);
        assert!((hi - 49.0 / 8.0).abs() < 1e-14);
        let b0 = deform(&fam, 0.0).unwrap();
        assert_eq!(b0, [4.0, 7.0, 7.0]);
        let b3 = deform(&fam, 3.0).unwrap();
        for (got, want) in b3.iter().zip([5.0, 5.0, 8.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(matches!(
            deform(&fam, 7.0),
            Err(FamiliesError::OutsideInterval { .. })
        ));
    }

    #[test]
    fn deformation_endpoints_have_zero_component() {
        let fam = DeformationFamily::new([1.0, 2.0, 3.0], [4.0, 7.0, 7.0]).unwrap();
        let (lo, hi) = fam.interval();
        let bl = deform(&fam, lo).unwrap();
        let bh = deform(&fam, hi).unwrap();
        assert!(bl.iter().any(|v| v.abs() < 1e-7));
        assert!(bh.iter().any(|v| v.abs() < 1e-7));
    }

    #[test]
    fn jab_characteristic_polynomial_identity_exact() {
        // det(λI − j(s,t)) = Π(λ²+s²a_i²) + λ⁴t²Σb² + λ²s²t²(a₁²b₂₃²+a₂²b₁₃²+a₃²b₁₂²)
        // is a polynomial identity, so it must hold exactly at rational points.
        let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let a = [rat(1, 1), rat(2, 1), rat(3, 1)];
        let b = [rat(4, 1), rat(7, 1), rat(7, 1)];
        let alg = build_jab_exact::<Real>(&a, &b).unwrap();
        for (lam, s, t) in [(rat(1, 2), rat(2, 3), rat(-1, 5)), (rat(3, 1), rat(-1, 7), rat(2, 1))] {
            let j = alg.j_at_exact(&[s.clone(), t.clone()]);
            let m = RationalMatrix::identity(6).scale(&lam).sub(&j);
            let lhs = m.determinant();
            let l2 = &lam * &lam;
            let s2 = &s * &s;
            let t2 = &t * &t;
            let prod = (0..3).fold(BigRational::one(), |acc, i| {
                acc * (&l2 + &s2 * &a[i] * &a[i])
            });
            let sum_b2 = b.iter().fold(BigRational::zero(), |acc, v| acc + v * v);
            let cross = &a[0] * &a[0] * &b[2] * &b[2]
                + &a[1] * &a[1] * &b[1] * &b[1]
                + &a[2] * &a[2] * &b[0] * &b[0];
            let rhs = prod + &l2 * &l2 * &t2 * sum_b2 + l2 * s2 * t2 * cross;
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn jab_singular_only_at_s_zero() {
        let j = build_jab::<Real>([1.0, 2.0, 3.0], [4.0, 7.0, 7.0]).unwrap();
        let sp0 = skew_spectrum(&j.j_at(&[0.0, 2.0]));
        assert_eq!(sp0.kernel_dim(), 4);
        let total: Real = [4.0f64, 7.0, 7.0].iter().map(|v| v * v).sum();
        assert!((sp0.freqs()[0] - 2.0 * total.sqrt()).abs() < 1e-10);
        let sp1 = skew_spectrum(&j.j_at(&[0.3, 2.0]));
        assert_eq!(sp1.kernel_dim(), 0);
    }

    #[test]
    fn integer_search_finds_reference_pair() {
        let found = integer_instances([1, 2, 3], 8).unwrap();
        assert!(found
            .iter()
            .any(|inst| inst.b == [4, 7, 7]
                && inst.b_new == [5, 5, 8]
                && inst.u == BigRational::from(BigInt::from(3))));
        for inst in &found {
            let s: i64 = inst.b.iter().map(|v| v * v).sum();
            let s2: i64 = inst.b_new.iter().map(|v| v * v).sum();
            assert_eq!(s, s2, "norm balance for {inst:?}");
        }
    }

    #[test]
    fn integer_search_bound_one_empty() {
        assert!(integer_instances([1, 2, 3], 1).unwrap().is_empty());
    }
}
