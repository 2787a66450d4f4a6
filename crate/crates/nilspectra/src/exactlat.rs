//! Exact rational and integer lattice arithmetic.
//!
//! Everything in this module is exact: arbitrary-precision integers and
//! rationals, no floating point. Integrality statements (occurrence
//! conditions, multiplicities) are decided here, where they can actually be
//! certified.
//!
//! Lattices are stored by a canonical basis: rows of the basis matrix span
//! the lattice, and the matrix is the (positive-pivot, reduced) row Hermite
//! normal form of any generating set, rescaled by the common denominator.
//! Two lattices are equal iff their canonical bases are equal as matrices.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ExactLatError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix entries are not integers")]
    NotInteger,
    #[error("gram matrix is singular or not symmetric")]
    SingularGram,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("pfaffian needs even dimension, got {0}")]
    OddDimension(usize),
    #[error("enumeration budget exceeded ({0} nodes)")]
    BudgetExceeded(usize),
    #[error("cannot parse rational literal `{0}`")]
    ParseError(String),
}

// ---------------------------------------------------------------------------
// Integer matrices and Hermite normal form
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols);
        IntMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row.iter().map(|&x| BigInt::from(x)));
        }
        IntMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k).clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = out.get(i, j) + &a * other.get(k, j);
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| BigRational::from(x.clone())).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.get(r, j).clone();
            self.set(r, j, v);
        }
    }

    /// row[dst] -= q * row[src]
    fn sub_scaled_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) - q * self.get(src, j);
            self.set(dst, j, v);
        }
    }
}

/// Row Hermite normal form: returns (H, U) with H = U·M, U unimodular,
/// pivots positive, entries above each pivot reduced into [0, pivot),
/// zero rows at the bottom. H is the canonical representative of the row
/// lattice of M.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let rows = m.rows();
    let cols = m.cols();
    let mut pivot_row = 0usize;
    for col in 0..cols {
        if pivot_row >= rows {
            break;
        }
        if (pivot_row..rows).all(|r| h.get(r, col).is_zero()) {
            continue;
        }
        // Euclid on the column entries below pivot_row until one survives.
        loop {
            let mut best: Option<(usize, BigInt)> = None;
            for r in pivot_row..rows {
                let v = h.get(r, col);
                if v.is_zero() {
                    continue;
                }
                let a = v.abs();
                match &best {
                    Some((_, cur)) if *cur <= a => {}
                    _ => best = Some((r, a)),
                }
            }
            let (r_min, _) = best.expect("nonzero entry exists");
            h.swap_rows(pivot_row, r_min);
            u.swap_rows(pivot_row, r_min);
            let mut done = true;
            let pivot = h.get(pivot_row, col).clone();
            for r in pivot_row + 1..rows {
                let v = h.get(r, col).clone();
                if v.is_zero() {
                    continue;
                }
                // Round-to-nearest quotient shrinks remainders fastest.
                let (q, rem) = v.div_rem(&pivot);
                h.sub_scaled_row(r, pivot_row, &q);
                u.sub_scaled_row(r, pivot_row, &q);
                if !rem.is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(pivot_row, col).is_negative() {
            h.negate_row(pivot_row);
            u.negate_row(pivot_row);
        }
        let pivot = h.get(pivot_row, col).clone();
        for r in 0..pivot_row {
            let q = h.get(r, col).div_floor(&pivot);
            h.sub_scaled_row(r, pivot_row, &q);
            u.sub_scaled_row(r, pivot_row, &q);
        }
        pivot_row += 1;
    }
    (h, u)
}

/// Basis (as rows) of the saturated left kernel {c ∈ Zᵏ : c·M = 0}.
pub fn left_integer_kernel(m: &IntMatrix) -> IntMatrix {
    let (h, u) = hnf(m);
    let zero_rows: Vec<usize> =
        (0..h.rows()).filter(|&r| h.row(r).iter().all(|x| x.is_zero())).collect();
    let mut out = IntMatrix::zeros(zero_rows.len(), m.rows());
    for (i, &r) in zero_rows.iter().enumerate() {
        for j in 0..m.rows() {
            out.set(i, j, u.get(r, j).clone());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Rational matrices
// ---------------------------------------------------------------------------

/// Dense matrix of exact rationals. `num_rational` keeps every entry in
/// canonical reduced form (gcd 1, positive denominator) by construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Self {
        assert_eq!(data.len(), rows * cols);
        RationalMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row.iter().map(|&x| BigRational::from(BigInt::from(x))));
        }
        RationalMatrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        RationalMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        RationalMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Self {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn trace(&self) -> BigRational {
        assert!(self.is_square());
        (0..self.rows).fold(BigRational::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..=i).all(|j| *self.get(i, j) == -self.get(j, i).clone()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn to_float<T: Scalar>(&self) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            T::c(self.get(i, j).to_f64().expect("rational out of f64 range"))
        })
    }

    pub fn from_float<T: Scalar>(m: &Mat<T>) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| {
            BigRational::from_float(m[(i, j)].to_f64().expect("scalar convertible"))
                .expect("finite float")
        })
    }

    /// lcm of all entry denominators (1 for an integer matrix).
    pub fn denominator_lcm(&self) -> BigInt {
        self.data
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn to_integer_scaled(&self) -> (IntMatrix, BigInt) {
        let d = self.denominator_lcm();
        let data = self
            .data
            .iter()
            .map(|x| {
                let scaled = x * BigRational::from(d.clone());
                debug_assert!(scaled.is_integer());
                scaled.to_integer()
            })
            .collect();
        (IntMatrix { rows: self.rows, cols: self.cols, data }, d)
    }

    pub fn to_int_exact(&self) -> Result<IntMatrix, ExactLatError> {
        if self.data.iter().any(|x| !x.is_integer()) {
            return Err(ExactLatError::NotInteger);
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.to_integer()).collect(),
        })
    }

    /// Gauss-Jordan inverse; None when singular.
    pub fn inverse(&self) -> Option<RationalMatrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            if piv != col {
                for j in 0..n {
                    let tmp = a.get(col, j).clone();
                    a.set(col, j, a.get(piv, j).clone());
                    a.set(piv, j, tmp);
                    let tmp = inv.get(col, j).clone();
                    inv.set(col, j, inv.get(piv, j).clone());
                    inv.set(piv, j, tmp);
                }
            }
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j) / &p);
                inv.set(col, j, inv.get(col, j) / &p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j) - &f * a.get(col, j);
                    a.set(r, j, v);
                    let v = inv.get(r, j) - &f * inv.get(col, j);
                    inv.set(r, j, v);
                }
            }
        }
        Some(inv)
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        let mut rank = 0usize;
        for col in 0..a.cols {
            let piv = (rank..a.rows).find(|&r| !a.get(r, col).is_zero());
            let Some(piv) = piv else { continue };
            if piv != rank {
                for j in 0..a.cols {
                    let tmp = a.get(rank, j).clone();
                    a.set(rank, j, a.get(piv, j).clone());
                    a.set(piv, j, tmp);
                }
            }
            let p = a.get(rank, col).clone();
            for r in rank + 1..a.rows {
                let f = a.get(r, col) / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..a.cols {
                    let v = a.get(r, j) - &f * a.get(rank, j);
                    a.set(r, j, v);
                }
            }
            rank += 1;
            if rank == a.rows {
                break;
            }
        }
        rank
    }

    /// Exact determinant by fraction-free-ish Gaussian elimination.
    pub fn determinant(&self) -> BigRational {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let piv = match (col..n).find(|&r| !a.get(r, col).is_zero()) {
                Some(p) => p,
                None => return BigRational::zero(),
            };
            if piv != col {
                det = -det;
                for j in 0..n {
                    let tmp = a.get(col, j).clone();
                    a.set(col, j, a.get(piv, j).clone());
                    a.set(piv, j, tmp);
                }
            }
            let p = a.get(col, col).clone();
            det = det * &p;
            for r in col + 1..n {
                let f = a.get(r, col) / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(r, j) - &f * a.get(col, j);
                    a.set(r, j, v);
                }
            }
        }
        det
    }

    /// Basis (rows) of the right kernel {x : M·x = 0}.
    pub fn kernel(&self) -> RationalMatrix {
        let mut a = self.clone();
        let n = self.cols;
        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
        let mut rank = 0usize;
        for col in 0..n {
            let piv = (rank..a.rows).find(|&r| !a.get(r, col).is_zero());
            let Some(piv) = piv else { continue };
            if piv != rank {
                for j in 0..n {
                    let tmp = a.get(rank, j).clone();
                    a.set(rank, j, a.get(piv, j).clone());
                    a.set(piv, j, tmp);
                }
            }
            let p = a.get(rank, col).clone();
            for j in 0..n {
                a.set(rank, j, a.get(rank, j) / &p);
            }
            for r in 0..a.rows {
                if r == rank {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j) - &f * a.get(rank, j);
                    a.set(r, j, v);
                }
            }
            pivots.push((rank, col));
            rank += 1;
            if rank == a.rows {
                break;
            }
        }
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        let mut out = RationalMatrix::zeros(free_cols.len(), n);
        for (k, &fc) in free_cols.iter().enumerate() {
            out.set(k, fc, BigRational::one());
            for &(r, pc) in &pivots {
                out.set(k, pc, -a.get(r, fc).clone());
            }
        }
        out
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, ExactLatError> {
    BigRational::from_str(s.trim()).map_err(|_| ExactLatError::ParseError(s.to_string()))
}

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

/// A lattice of rank ≤ ambient_dim given by the canonical basis described in
/// the module docs. Equality of lattices is equality of the structs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LatticeBasis {
    ambient_dim: usize,
    basis: RationalMatrix,
}

impl LatticeBasis {
    /// Canonical basis from any finite generating set (rows).
    pub fn from_generators(ambient_dim: usize, gens: &RationalMatrix) -> Self {
        assert_eq!(gens.cols(), ambient_dim, "generator length mismatch");
        let (scaled, d) = gens.to_integer_scaled();
        let (h, _) = hnf(&scaled);
        let nonzero: Vec<usize> =
            (0..h.rows()).filter(|&r| h.row(r).iter().any(|x| !x.is_zero())).collect();
        let d_rat = BigRational::from(d);
        let basis = RationalMatrix::from_fn(nonzero.len(), ambient_dim, |i, j| {
            BigRational::from(h.get(nonzero[i], j).clone()) / &d_rat
        });
        LatticeBasis { ambient_dim, basis }
    }

    pub fn from_i64_rows(ambient_dim: usize, rows: &[&[i64]]) -> Self {
        Self::from_generators(ambient_dim, &RationalMatrix::from_i64_rows(rows))
    }

    pub fn standard(n: usize) -> Self {
        LatticeBasis { ambient_dim: n, basis: RationalMatrix::identity(n) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &RationalMatrix {
        &self.basis
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.ambient_dim
    }

    /// Integer-combination membership test, using the echelon structure of
    /// the canonical basis.
    pub fn contains(&self, v: &[BigRational]) -> bool {
        assert_eq!(v.len(), self.ambient_dim);
        let mut rem: Vec<BigRational> = v.to_vec();
        for i in 0..self.rank() {
            let pivot_col = match self.basis.row(i).iter().position(|x| !x.is_zero()) {
                Some(c) => c,
                None => continue,
            };
            let coeff = &rem[pivot_col] / self.basis.get(i, pivot_col);
            if !coeff.is_integer() {
                return false;
            }
            if coeff.is_zero() {
                continue;
            }
            for j in 0..self.ambient_dim {
                rem[j] = &rem[j] - &coeff * self.basis.get(i, j);
            }
        }
        rem.iter().all(|x| x.is_zero())
    }

    pub fn is_sublattice_of(&self, other: &LatticeBasis) -> bool {
        self.ambient_dim == other.ambient_dim
            && (0..self.rank()).all(|i| other.contains(self.basis.row(i)))
    }

    /// Gram matrix B·G·Bᵀ of the basis (identity inner product when `gram`
    /// is None).
    pub fn gram(&self, gram: Option<&RationalMatrix>) -> RationalMatrix {
        match gram {
            Some(g) => self.basis.matmul(g).matmul(&self.basis.transpose()),
            None => self.basis.matmul(&self.basis.transpose()),
        }
    }
}

/// lat ∩ span(subspace rows). The result is saturated: it is exactly the set
/// of lattice vectors lying in the subspace.
pub fn lattice_intersect_subspace(
    lat: &LatticeBasis,
    subspace: &RationalMatrix,
) -> Result<LatticeBasis, ExactLatError> {
    if subspace.cols() != lat.ambient_dim() {
        return Err(ExactLatError::DimensionMismatch(format!(
            "subspace in dim {}, lattice in dim {}",
            subspace.cols(),
            lat.ambient_dim()
        )));
    }
    // x ∈ span(S) ⟺ x ⟂ ker(S·), so c·B ∈ span(S) ⟺ c·(B·Wᵀ) = 0.
    let w = subspace.kernel();
    if w.rows() == 0 {
        return Ok(lat.clone());
    }
    let bw = lat.basis().matmul(&w.transpose());
    let (bw_int, _) = bw.to_integer_scaled();
    let kernel = left_integer_kernel(&bw_int);
    let gens = kernel.to_rational().matmul(lat.basis());
    Ok(LatticeBasis::from_generators(lat.ambient_dim(), &gens))
}

/// Dual lattice inside the span of `lat`, with respect to the inner product
/// `gram`: the returned rows d_i satisfy d_i·G·b_jᵀ = δ_ij, so the duals of
/// a full-rank lattice are the usual ones and the involution dual∘dual = id
/// holds within the span.
pub fn dual_lattice(
    lat: &LatticeBasis,
    gram: &RationalMatrix,
) -> Result<LatticeBasis, ExactLatError> {
    if gram.rows() != lat.ambient_dim() || gram.cols() != lat.ambient_dim() {
        return Err(ExactLatError::DimensionMismatch(format!(
            "gram is {}x{}, ambient dim {}",
            gram.rows(),
            gram.cols(),
            lat.ambient_dim()
        )));
    }
    if !gram.is_symmetric() {
        return Err(ExactLatError::SingularGram);
    }
    ldl(gram)?; // positive-definiteness gate (also rejects singular)
    let b = lat.basis();
    let bgbt = b.matmul(gram).matmul(&b.transpose());
    let inv = bgbt.inverse().ok_or(ExactLatError::SingularGram)?;
    let dual = inv.matmul(b);
    Ok(LatticeBasis::from_generators(lat.ambient_dim(), &dual))
}

/// Image of the lattice under a linear map (matrix acting on column
/// vectors). The image of a finitely generated subgroup of Q^n is again a
/// lattice; rationality is guaranteed by the types.
pub fn project_lattice(lat: &LatticeBasis, quotient_map: &RationalMatrix) -> LatticeBasis {
    assert_eq!(quotient_map.cols(), lat.ambient_dim(), "quotient map dimension mismatch");
    let gens = lat.basis().matmul(&quotient_map.transpose());
    LatticeBasis::from_generators(quotient_map.rows(), &gens)
}

/// Canonical basis of the lattice generated by `gens` rows, together with a
/// matching preimage row for each basis row: lift i is the combination of
/// `sources` rows given by the same unimodular transform that produced basis
/// row i from `gens`.
pub fn image_lattice_with_lifts(
    gens: &RationalMatrix,
    sources: &RationalMatrix,
) -> (LatticeBasis, RationalMatrix) {
    assert_eq!(gens.rows(), sources.rows(), "one source row per generator");
    let (scaled, d) = gens.to_integer_scaled();
    let (h, u) = hnf(&scaled);
    let nonzero: Vec<usize> =
        (0..h.rows()).filter(|&r| h.row(r).iter().any(|x| !x.is_zero())).collect();
    let d_rat = BigRational::from(d);
    let basis = RationalMatrix::from_fn(nonzero.len(), gens.cols(), |i, j| {
        BigRational::from(h.get(nonzero[i], j).clone()) / &d_rat
    });
    let u_rat = u.to_rational();
    let lifts = RationalMatrix::from_fn(nonzero.len(), sources.cols(), |i, j| {
        (0..sources.rows()).fold(BigRational::zero(), |acc, k| {
            acc + u_rat.get(nonzero[i], k) * sources.get(k, j)
        })
    });
    (LatticeBasis { ambient_dim: gens.cols(), basis }, lifts)
}

// ---------------------------------------------------------------------------
// Pfaffian
// ---------------------------------------------------------------------------

/// Pfaffian of an exact antisymmetric matrix (recursive expansion; the
/// matrices here are at most 8×8).
pub fn pfaffian(m: &RationalMatrix) -> Result<BigRational, ExactLatError> {
    if !m.is_square() {
        return Err(ExactLatError::DimensionMismatch("pfaffian of non-square matrix".into()));
    }
    if m.rows() % 2 != 0 {
        return Err(ExactLatError::OddDimension(m.rows()));
    }
    if !m.is_antisymmetric() {
        return Err(ExactLatError::NotAntisymmetric);
    }
    let n = m.rows();
    let entries: Vec<Vec<BigRational>> =
        (0..n).map(|i| m.row(i).to_vec()).collect();
    Ok(pf_rec(&entries, &(0..n).collect::<Vec<_>>()))
}

fn pf_rec(m: &[Vec<BigRational>], idx: &[usize]) -> BigRational {
    if idx.is_empty() {
        return BigRational::one();
    }
    let i0 = idx[0];
    let mut acc = BigRational::zero();
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        let a = &m[i0][j];
        if a.is_zero() {
            continue;
        }
        let rest: Vec<usize> =
            idx.iter().copied().filter(|&k| k != i0 && k != j).collect();
        let sign = if pos % 2 == 1 { BigRational::one() } else { -BigRational::one() };
        acc = acc + sign * a * pf_rec(m, &rest);
    }
    acc
}

// ---------------------------------------------------------------------------
// Exact LDLᵀ and complete ellipsoid enumeration
// ---------------------------------------------------------------------------

/// Exact A = L·diag(D)·Lᵀ with L unit lower triangular; fails unless A is
/// symmetric positive definite.
pub fn ldl(a: &RationalMatrix) -> Result<(RationalMatrix, Vec<BigRational>), ExactLatError> {
    if !a.is_square() || !a.is_symmetric() {
        return Err(ExactLatError::SingularGram);
    }
    let n = a.rows();
    let mut l = RationalMatrix::identity(n);
    let mut d: Vec<BigRational> = vec![BigRational::zero(); n];
    for j in 0..n {
        let mut dj = a.get(j, j).clone();
        for s in 0..j {
            dj = dj - l.get(j, s) * l.get(j, s) * &d[s];
        }
        if !dj.is_positive() {
            return Err(ExactLatError::NotPositiveDefinite);
        }
        for i in j + 1..n {
            let mut v = a.get(i, j).clone();
            for s in 0..j {
                v = v - l.get(i, s) * l.get(j, s) * &d[s];
            }
            l.set(i, j, v / &dj);
        }
        d[j] = dj;
    }
    Ok((l, d))
}

/// All integer vectors c with (c + offset)·A·(c + offset)ᵀ ≤ bound, for A
/// symmetric positive definite. Level bounds are located with floats (±1
/// slack) and every candidate is checked exactly, so the enumeration is
/// provably complete. `budget` caps visited nodes.
pub fn enumerate_quadratic(
    a: &RationalMatrix,
    offset: &[BigRational],
    bound: &BigRational,
    budget: usize,
) -> Result<Vec<Vec<BigInt>>, ExactLatError> {
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    enumerate_quadratic_each(a, offset, bound, budget, |c, _| {
        out.push(c.to_vec());
        Ok(())
    })?;
    Ok(out)
}

/// Streaming form of `enumerate_quadratic`: calls `visit(c, q)` with each
/// point and its exact form value q = (c + offset)·A·(c + offset)ᵀ, without
/// materializing the point list. Same completeness guarantee.
pub fn enumerate_quadratic_each(
    a: &RationalMatrix,
    offset: &[BigRational],
    bound: &BigRational,
    budget: usize,
    mut visit: impl FnMut(&[BigInt], &BigRational) -> Result<(), ExactLatError>,
) -> Result<(), ExactLatError> {
    let k = a.rows();
    if offset.len() != k {
        return Err(ExactLatError::DimensionMismatch("offset length".into()));
    }
    if k == 0 {
        if !bound.is_negative() {
            visit(&[], &BigRational::zero())?;
        }
        return Ok(());
    }
    let (l, d) = ldl(a)?;
    let mut current = vec![BigInt::zero(); k];
    let mut nodes = 0usize;
    // k == level index; recursion fills from the last coordinate down.
    enum_rec(
        &l,
        &d,
        offset,
        bound,
        bound,
        k - 1,
        &mut current,
        &mut visit,
        &mut nodes,
        budget,
    )
}

#[allow(clippy::too_many_arguments)]
fn enum_rec(
    l: &RationalMatrix,
    d: &[BigRational],
    offset: &[BigRational],
    total: &BigRational,
    remaining: &BigRational,
    level: usize,
    current: &mut [BigInt],
    visit: &mut impl FnMut(&[BigInt], &BigRational) -> Result<(), ExactLatError>,
    nodes: &mut usize,
    budget: usize,
) -> Result<(), ExactLatError> {
    *nodes += 1;
    if *nodes > budget {
        return Err(ExactLatError::BudgetExceeded(budget));
    }
    let k = d.len();
    // μ = offset[level] + Σ_{i>level} (c_i + offset_i)·L[i][level]
    let mut mu = offset[level].clone();
    for i in level + 1..k {
        let xi = BigRational::from(current[i].clone()) + &offset[i];
        mu = mu + xi * l.get(i, level);
    }
    let ratio = remaining / &d[level];
    let s = ratio.to_f64().unwrap_or(f64::MAX).max(0.0).sqrt();
    let mu_f = mu.to_f64().unwrap_or(0.0);
    let lo = (-s - mu_f).floor() as i64 - 1;
    let hi = (s - mu_f).ceil() as i64 + 1;
    for c in lo..=hi {
        let cb = BigInt::from(c);
        let t = BigRational::from(cb.clone()) + &mu;
        let term = &t * &t * &d[level];
        if &term > remaining {
            continue;
        }
        current[level] = cb;
        let rem = remaining - term;
        if level == 0 {
            let q = total - &rem;
            visit(current, &q)?;
            *nodes += 1;
            if *nodes > budget {
                return Err(ExactLatError::BudgetExceeded(budget));
            }
        } else {
            enum_rec(l, d, offset, total, &rem, level - 1, current, visit, nodes, budget)?;
        }
    }
    current[level] = BigInt::zero();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn hnf_identity_fixed() {
        let m = IntMatrix::identity(3);
        let (h, u) = hnf(&m);
        assert_eq!(h, m);
        assert_eq!(u, IntMatrix::identity(3));
    }

    #[test]
    fn hnf_product_and_unimodularity() {
        let m = IntMatrix::from_i64_rows(&[&[2, 4], &[6, 8]]);
        let (h, u) = hnf(&m);
        assert_eq!(u.matmul(&m), h);
        // |det U| = 1 for 2×2:
        let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
        assert_eq!(det.abs(), BigInt::one());
        // Pivot divides the column below/above structure: H is echelon with
        // positive pivots.
        assert!(h.get(0, 0).is_positive());
        assert!(h.get(1, 0).is_zero());
    }

    #[test]
    fn hnf_zero_row() {
        let m = IntMatrix::from_i64_rows(&[&[0, 0]]);
        let (h, _) = hnf(&m);
        assert_eq!(h, m);
    }

    #[test]
    fn hnf_idempotent_on_hnf() {
        let m = IntMatrix::from_i64_rows(&[&[2, 1, 0], &[0, 3, 2], &[0, 0, 7]]);
        let (h, _) = hnf(&m);
        let (h2, _) = hnf(&h);
        assert_eq!(h, h2);
    }

    #[test]
    fn kernel_of_dependent_rows() {
        let m = IntMatrix::from_i64_rows(&[&[1, 2], &[2, 4], &[1, 0]]);
        let k = left_integer_kernel(&m);
        assert_eq!(k.rows(), 1);
        // kernel row c satisfies c·M = 0
        let prod = k.matmul(&m);
        assert!(prod.row(0).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn lattice_canonical_equality() {
        let a = LatticeBasis::from_i64_rows(2, &[&[1, 0], &[0, 1]]);
        let b = LatticeBasis::from_i64_rows(2, &[&[1, 1], &[2, 1]]);
        assert_eq!(a, b); // both generate Z²
        let c = LatticeBasis::from_i64_rows(2, &[&[2, 0], &[0, 1]]);
        assert_ne!(a, c);
    }

    #[test]
    fn lattice_contains() {
        let l = LatticeBasis::from_i64_rows(2, &[&[2, 0], &[1, 1]]);
        assert!(l.contains(&[rat(3, 1), rat(1, 1)]));
        assert!(!l.contains(&[rat(1, 1), rat(0, 1)]));
        assert!(!l.contains(&[rat(1, 2), rat(1, 2)]));
    }

    #[test]
    fn intersect_axis() {
        let l = LatticeBasis::standard(2);
        let axis = RationalMatrix::from_i64_rows(&[&[1, 0]]);
        let cap = lattice_intersect_subspace(&l, &axis).unwrap();
        assert_eq!(cap, LatticeBasis::from_i64_rows(2, &[&[1, 0]]));
    }

    #[test]
    fn intersect_full_space_is_identity() {
        let l = LatticeBasis::from_i64_rows(2, &[&[2, 1], &[0, 3]]);
        let full = RationalMatrix::identity(2);
        assert_eq!(lattice_intersect_subspace(&l, &full).unwrap(), l);
    }

    #[test]
    fn intersect_diagonal_line() {
        // Z² ∩ span(1,2) = multiples of (1,2)
        let l = LatticeBasis::standard(2);
        let line = RationalMatrix::from_i64_rows(&[&[1, 2]]);
        let cap = lattice_intersect_subspace(&l, &line).unwrap();
        assert_eq!(cap, LatticeBasis::from_i64_rows(2, &[&[1, 2]]));
    }

    #[test]
    fn dual_of_standard_is_standard() {
        let l = LatticeBasis::standard(3);
        let d = dual_lattice(&l, &RationalMatrix::identity(3)).unwrap();
        assert_eq!(d, l);
    }

    #[test]
    fn dual_scaling() {
        let l = LatticeBasis::from_i64_rows(1, &[&[2]]);
        let d = dual_lattice(&l, &RationalMatrix::identity(1)).unwrap();
        assert_eq!(*d.basis().get(0, 0), rat(1, 2));
    }

    #[test]
    fn dual_involution_and_gram_det() {
        let l = LatticeBasis::from_i64_rows(2, &[&[2, 1], &[0, 3]]);
        let g = RationalMatrix::identity(2);
        let d = dual_lattice(&l, &g).unwrap();
        let dd = dual_lattice(&d, &g).unwrap();
        assert_eq!(dd, l);
        // det(dual gram) = 1/det(primal gram)
        let det = |m: &RationalMatrix| {
            m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)
        };
        let gp = l.gram(None);
        let gd = d.gram(None);
        assert_eq!(det(&gp) * det(&gd), BigRational::one());
    }

    #[test]
    fn dual_rejects_singular_gram() {
        let l = LatticeBasis::standard(2);
        let g = RationalMatrix::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert!(dual_lattice(&l, &g).is_err());
    }

    #[test]
    fn project_to_first_coordinate() {
        let l = LatticeBasis::standard(2);
        let p = RationalMatrix::from_i64_rows(&[&[1, 0]]);
        let img = project_lattice(&l, &p);
        assert_eq!(img, LatticeBasis::standard(1));
    }

    #[test]
    fn project_zero_map() {
        let l = LatticeBasis::standard(2);
        let p = RationalMatrix::from_i64_rows(&[&[0, 0]]);
        let img = project_lattice(&l, &p);
        assert_eq!(img.rank(), 0);
    }

    #[test]
    fn pfaffian_2x2_and_4x4() {
        let m = RationalMatrix::from_i64_rows(&[&[0, 5], &[-5, 0]]);
        assert_eq!(pfaffian(&m).unwrap(), rat(5, 1));
        let m4 = RationalMatrix::from_i64_rows(&[
            &[0, 1, 2, 3],
            &[-1, 0, 4, 5],
            &[-2, -4, 0, 6],
            &[-3, -5, -6, 0],
        ]);
        // Pf = a12·a34 − a13·a24 + a14·a23 = 1·6 − 2·5 + 3·4 = 8
        assert_eq!(pfaffian(&m4).unwrap(), rat(8, 1));
    }

    #[test]
    fn pfaffian_squares_to_det_2x2_blocks() {
        let m = RationalMatrix::from_i64_rows(&[&[0, 3], &[-3, 0]]);
        let pf = pfaffian(&m).unwrap();
        assert_eq!(&pf * &pf, rat(9, 1));
    }

    #[test]
    fn pfaffian_rejects_non_antisymmetric() {
        let m = RationalMatrix::identity(2);
        assert!(matches!(pfaffian(&m), Err(ExactLatError::NotAntisymmetric)));
    }

    #[test]
    fn enumerate_circle_points() {
        // c1² + c2² ≤ 2 in Z²: 9 points
        let a = RationalMatrix::identity(2);
        let offset = vec![BigRational::zero(), BigRational::zero()];
        let pts = enumerate_quadratic(&a, &offset, &rat(2, 1), 100_000).unwrap();
        assert_eq!(pts.len(), 9);
    }

    #[test]
    fn enumerate_with_offset() {
        // (c + 1/2)² ≤ 1/4 in Z¹: c ∈ {-1, 0}
        let a = RationalMatrix::identity(1);
        let pts = enumerate_quadratic(&a, &[rat(1, 2)], &rat(1, 4), 1000).unwrap();
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn enumerate_budget_guard() {
        let a = RationalMatrix::identity(2);
        let offset = vec![BigRational::zero(), BigRational::zero()];
        let e = enumerate_quadratic(&a, &offset, &rat(100_000_000, 1), 10);
        assert!(matches!(e, Err(ExactLatError::BudgetExceeded(_))));
    }

    #[test]
    fn image_lattice_lifts_map_back() {
        // Project Z³ onto first two coordinates; lifts must project onto the
        // basis rows exactly.
        let src = RationalMatrix::identity(3);
        let gens = RationalMatrix::from_i64_rows(&[&[1, 0], &[0, 2], &[0, 1]]);
        let (lat, lifts) = image_lattice_with_lifts(&gens, &src);
        assert_eq!(lat.rank(), 2);
        assert_eq!(lifts.rows(), 2);
    }
}
