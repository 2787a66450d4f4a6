//! Metric two-step nilpotent Lie algebras g = v ⊕ z and their discrete
//! subgroup data.
//!
//! The algebra is encoded by the linear map j: z → so(v) determined by
//! ⟨j(z)x, y⟩ = ⟨[x, y], z⟩; inner products are the identity gram in the
//! stored bases (change basis before construction for anything else). On the
//! simply connected group the product is
//! (x, z)(x′, z′) = (x + x′, z + z′ + ½[x, x′]), exact for two-step groups.
//!
//! Algebras carry an exact rational copy of the j-matrices whenever one is
//! available; lattice-sensitive computations use it, spectral ones use the
//! float copy.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::numerical_rank;
use crate::exactlat::{
    parse_rational, project_lattice, ExactLatError, LatticeBasis, RationalMatrix,
};
use crate::mat::{dot, Mat};
use crate::scalar::Scalar;
use crate::skewlin::{SkewLinError, SkewOperator};

#[derive(Debug, Error)]
pub enum NilAlgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("j-map is not injective: the {0} matrices are linearly dependent")]
    NotInjective(usize),
    #[error("functional is zero; use the torus path for the abelian sector")]
    LambdaZero,
    #[error("functional is not integral on the center lattice")]
    NotIntegralOnLattice,
    #[error("functional has irrational norm {0}; the quotient lattice has no exact basis")]
    IrrationalQuotient(String),
    #[error("basis does not span the algebra")]
    InvalidBasis,
    #[error("center lattice is not contained in the log lattice")]
    CenterNotContained,
    #[error("algebra document is malformed: {0}")]
    BadDocument(String),
    #[error(transparent)]
    Skew(#[from] SkewLinError),
    #[error(transparent)]
    Exact(#[from] ExactLatError),
}

// ---------------------------------------------------------------------------
// JMap
// ---------------------------------------------------------------------------

/// j: z → so(v) stored as the images mats[k] = j(ε_k) of a fixed orthonormal
/// z-basis. Injectivity (linear independence of the mats) is enforced.
#[derive(Clone, Debug)]
pub struct JMap<T: Scalar = crate::Real> {
    m: usize,
    r: usize,
    mats: Vec<SkewOperator<T>>,
}

impl<T: Scalar> JMap<T> {
    pub fn new(mats: Vec<SkewOperator<T>>) -> Result<Self, NilAlgError> {
        let r = mats.len();
        let m = mats.first().map_or(0, |s| s.dim());
        if mats.iter().any(|s| s.dim() != m) {
            return Err(NilAlgError::DimensionMismatch(
                "all j-matrices must act on the same v".into(),
            ));
        }
        if r > 0 && m > 0 {
            let stacked = Mat::from_fn(r, m * m, |k, idx| {
                mats[k].entries()[(idx / m, idx % m)]
            });
            if numerical_rank(&stacked, T::c(1e-10)) != r {
                return Err(NilAlgError::NotInjective(r));
            }
        }
        Ok(JMap { m, r, mats })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn mats(&self) -> &[SkewOperator<T>] {
        &self.mats
    }

    /// j(z) = Σ z_k · mats[k].
    pub fn j_at(&self, z: &[T]) -> SkewOperator<T> {
        assert_eq!(z.len(), self.r, "z-coordinate length");
        let mut acc = Mat::zeros(self.m, self.m);
        for (k, s) in self.mats.iter().enumerate() {
            acc = acc.add(&s.entries().scale(z[k]));
        }
        SkewOperator::new(acc).expect("sum of skew matrices is skew")
    }
}

// ---------------------------------------------------------------------------
// MetricTwoStepAlgebra
// ---------------------------------------------------------------------------

/// g = v ⊕ z with identity gram in the stored bases. `exact` carries the
/// rational j-matrices when the construction data was rational; deformed
/// families with irrational entries are float-only.
#[derive(Clone, Debug)]
pub struct MetricTwoStepAlgebra<T: Scalar = crate::Real> {
    jmap: JMap<T>,
    exact: Option<Vec<RationalMatrix>>,
}

impl<T: Scalar> MetricTwoStepAlgebra<T> {
    /// Exact construction: rational skew matrices, exact injectivity check.
    pub fn from_exact(m: usize, mats: Vec<RationalMatrix>) -> Result<Self, NilAlgError> {
        let r = mats.len();
        for mk in &mats {
            if mk.rows() != m || mk.cols() != m {
                return Err(NilAlgError::DimensionMismatch(format!(
                    "j-matrix is {}x{}, expected {}x{}",
                    mk.rows(),
                    mk.cols(),
                    m,
                    m
                )));
            }
            if !mk.is_antisymmetric() {
                return Err(NilAlgError::Skew(SkewLinError::NotSkew { defect: f64::NAN }));
            }
        }
        if r > 0 && m > 0 {
            let stacked = RationalMatrix::from_fn(r, m * m, |k, idx| {
                mats[k].get(idx / m, idx % m).clone()
            });
            if stacked.rank() != r {
                return Err(NilAlgError::NotInjective(r));
            }
        }
        let float_mats = mats
            .iter()
            .map(|mk| SkewOperator::new(mk.to_float()))
            .collect::<Result<Vec<_>, _>>()?;
        let jmap = JMap::new(float_mats)?;
        Ok(MetricTwoStepAlgebra { jmap, exact: Some(mats) })
    }

    /// Float construction, for families with irrational entries.
    pub fn from_float(jmap: JMap<T>) -> Self {
        MetricTwoStepAlgebra { jmap, exact: None }
    }

    pub fn m(&self) -> usize {
        self.jmap.m()
    }

    pub fn r(&self) -> usize {
        self.jmap.r()
    }

    pub fn jmap(&self) -> &JMap<T> {
        &self.jmap
    }

    pub fn exact_mats(&self) -> Option<&[RationalMatrix]> {
        self.exact.as_deref()
    }

    /// Exact j-matrices: stored ones, or the exact binary value of each
    /// float entry when the algebra was built from floats.
    pub fn exact_or_lifted_mats(&self) -> Vec<RationalMatrix> {
        match &self.exact {
            Some(mats) => mats.clone(),
            None => self
                .jmap
                .mats()
                .iter()
                .map(|s| RationalMatrix::from_float(s.entries()))
                .collect(),
        }
    }

    /// Exact j(z) for rational z-coordinates.
    pub fn j_at_exact(&self, z: &[BigRational]) -> RationalMatrix {
        assert_eq!(z.len(), self.r());
        let mats = self.exact_or_lifted_mats();
        let mut acc = RationalMatrix::zeros(self.m(), self.m());
        for (k, mk) in mats.iter().enumerate() {
            if z[k].is_zero() {
                continue;
            }
            acc = acc.add(&mk.scale(&z[k]));
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Bracket and group law
// ---------------------------------------------------------------------------

/// [x, y] ∈ z with component k equal to ⟨mats[k]·x, y⟩.
pub fn bracket<T: Scalar>(
    alg: &MetricTwoStepAlgebra<T>,
    x: &[T],
    y: &[T],
) -> Result<Vec<T>, NilAlgError> {
    if x.len() != alg.m() || y.len() != alg.m() {
        return Err(NilAlgError::DimensionMismatch(format!(
            "bracket arguments must lie in v (dim {})",
            alg.m()
        )));
    }
    Ok(alg
        .jmap
        .mats()
        .iter()
        .map(|s| dot(&s.entries().matvec(x), y))
        .collect())
}

fn bracket_exact(
    mats: &[RationalMatrix],
    x: &[BigRational],
    y: &[BigRational],
) -> Vec<BigRational> {
    mats.iter()
        .map(|mk| {
            mk.matvec(x)
                .iter()
                .zip(y)
                .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

/// Point (x, z) of the simply connected group G(j).
#[derive(Clone, PartialEq, Debug)]
pub struct GroupElement<T: Scalar = crate::Real> {
    pub x: Vec<T>,
    pub z: Vec<T>,
}

impl<T: Scalar> GroupElement<T> {
    pub fn new(x: Vec<T>, z: Vec<T>) -> Self {
        GroupElement { x, z }
    }

    pub fn identity(m: usize, r: usize) -> Self {
        GroupElement { x: vec![T::zero(); m], z: vec![T::zero(); r] }
    }

    pub fn inverse(&self) -> Self {
        GroupElement {
            x: self.x.iter().map(|&v| -v).collect(),
            z: self.z.iter().map(|&v| -v).collect(),
        }
    }
}

/// (x, z)(x′, z′) = (x + x′, z + z′ + ½[x, x′]).
pub fn group_mul<T: Scalar>(
    alg: &MetricTwoStepAlgebra<T>,
    a: &GroupElement<T>,
    b: &GroupElement<T>,
) -> Result<GroupElement<T>, NilAlgError> {
    if a.x.len() != alg.m() || b.x.len() != alg.m() || a.z.len() != alg.r() || b.z.len() != alg.r()
    {
        return Err(NilAlgError::DimensionMismatch("group element dims".into()));
    }
    let br = bracket(alg, &a.x, &b.x)?;
    let half = T::c(0.5);
    Ok(GroupElement {
        x: a.x.iter().zip(&b.x).map(|(&p, &q)| p + q).collect(),
        z: a.z
            .iter()
            .zip(&b.z)
            .zip(&br)
            .map(|((&p, &q), &w)| p + q + half * w)
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// GammaData
// ---------------------------------------------------------------------------

/// Lattice data of a uniform discrete subgroup Γ: the lattice log Γ in
/// v ⊕ z and the center lattice L = log(Γ ∩ exp z) ⊂ z. Both are inputs;
/// containment L ⊂ log Γ ∩ z is validated exactly.
#[derive(Clone, PartialEq, Debug)]
pub struct GammaData {
    log_basis: LatticeBasis,
    center_lattice: LatticeBasis,
}

impl GammaData {
    pub fn new(
        m: usize,
        r: usize,
        log_basis: LatticeBasis,
        center_lattice: LatticeBasis,
    ) -> Result<Self, NilAlgError> {
        if log_basis.ambient_dim() != m + r || center_lattice.ambient_dim() != r {
            return Err(NilAlgError::DimensionMismatch(format!(
                "lattice ambient dims {} and {}, expected {} and {}",
                log_basis.ambient_dim(),
                center_lattice.ambient_dim(),
                m + r,
                r
            )));
        }
        for i in 0..center_lattice.rank() {
            let row = center_lattice.basis().row(i);
            let mut embedded = vec![BigRational::zero(); m + r];
            embedded[m..].clone_from_slice(row);
            if !log_basis.contains(&embedded) {
                return Err(NilAlgError::CenterNotContained);
            }
        }
        Ok(GammaData { log_basis, center_lattice })
    }

    /// Standard cubical lattice Z^{m+r} with L = Z^r.
    pub fn standard(m: usize, r: usize) -> Self {
        GammaData {
            log_basis: LatticeBasis::standard(m + r),
            center_lattice: LatticeBasis::standard(r),
        }
    }

    pub fn log_basis(&self) -> &LatticeBasis {
        &self.log_basis
    }

    pub fn center_lattice(&self) -> &LatticeBasis {
        &self.center_lattice
    }
}

// ---------------------------------------------------------------------------
// Quotients along a functional on z
// ---------------------------------------------------------------------------

fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let ns = x.numer().sqrt();
    let ds = x.denom().sqrt();
    if &(&ns * &ns) == x.numer() && &(&ds * &ds) == x.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// Quotient of g by ker λ ⊂ z, for a functional λ given by its dual vector
/// in z. Returns the algebra with j restricted to the unit vector spanning
/// the surviving line (exact data carried over), plus the image lattice
/// data. λ must be nonzero, integral on the center lattice, and of rational
/// norm (otherwise the image of log Γ has no rational basis and the request
/// is refused).
pub fn quotient_along<T: Scalar>(
    alg: &MetricTwoStepAlgebra<T>,
    lam: &[BigRational],
    gamma: &GammaData,
) -> Result<(MetricTwoStepAlgebra<T>, GammaData), NilAlgError> {
    let (m, r) = (alg.m(), alg.r());
    if lam.len() != r {
        return Err(NilAlgError::DimensionMismatch("functional length".into()));
    }
    if lam.iter().all(|c| c.is_zero()) {
        return Err(NilAlgError::LambdaZero);
    }
    for i in 0..gamma.center_lattice().rank() {
        let row = gamma.center_lattice().basis().row(i);
        let val = row
            .iter()
            .zip(lam)
            .fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
        if !val.is_integer() {
            return Err(NilAlgError::NotIntegralOnLattice);
        }
    }
    let norm2 = lam
        .iter()
        .fold(BigRational::zero(), |acc, c| acc + c * c);
    let norm = rational_sqrt(&norm2)
        .ok_or_else(|| NilAlgError::IrrationalQuotient(format!("√({norm2})")))?;
    let unit: Vec<BigRational> = lam.iter().map(|c| c / &norm).collect();

    let quotient_alg = MetricTwoStepAlgebra::from_exact(m, vec![alg.j_at_exact(&unit)])?;

    // Orthogonal projection v ⊕ z → v ⊕ R·(λ/‖λ‖), in coordinates.
    let proj = RationalMatrix::from_fn(m + 1, m + r, |i, j| {
        if i < m {
            if j == i {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        } else if j >= m {
            unit[j - m].clone()
        } else {
            BigRational::zero()
        }
    });
    let log_image = project_lattice(gamma.log_basis(), &proj);
    let center_proj = RationalMatrix::from_fn(1, r, |_, j| unit[j].clone());
    let center_image = project_lattice(gamma.center_lattice(), &center_proj);
    let gamma_image = GammaData::new(m, 1, log_image, center_image)?;
    Ok((quotient_alg, gamma_image))
}

// ---------------------------------------------------------------------------
// Integer structure constants
// ---------------------------------------------------------------------------

/// Coordinates of each bracket [b_i, b_j], i < j, in the given basis.
pub type StructureTable = Vec<((usize, usize), Vec<BigRational>)>;

/// True iff every bracket of basis vectors has integer coordinates in that
/// same basis. Decided exactly on the rational j-matrices (stored ones, or
/// exact lifts of the float entries).
pub fn check_integer_structure<T: Scalar>(
    alg: &MetricTwoStepAlgebra<T>,
    basis: &RationalMatrix,
) -> Result<(bool, StructureTable), NilAlgError> {
    let (m, r) = (alg.m(), alg.r());
    let n = m + r;
    if basis.rows() != n || basis.cols() != n {
        return Err(NilAlgError::DimensionMismatch(format!(
            "basis is {}x{}, expected {}x{}",
            basis.rows(),
            basis.cols(),
            n,
            n
        )));
    }
    let inv = basis.inverse().ok_or(NilAlgError::InvalidBasis)?;
    let mats = alg.exact_or_lifted_mats();
    let mut table: StructureTable = Vec::new();
    let mut all_integer = true;
    for i in 0..n {
        for j in i + 1..n {
            let xi: Vec<BigRational> = basis.row(i)[..m].to_vec();
            let xj: Vec<BigRational> = basis.row(j)[..m].to_vec();
            let w = bracket_exact(&mats, &xi, &xj);
            // [b_i, b_j] = (0, w); coordinates c solve c·B = (0, w),
            // i.e. c = (0, w)·B⁻¹.
            let mut full = vec![BigRational::zero(); n];
            full[m..].clone_from_slice(&w);
            let coords: Vec<BigRational> = (0..n)
                .map(|col| {
                    full.iter()
                        .zip((0..n).map(|row| inv.get(row, col)))
                        .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
                })
                .collect();
            if coords.iter().any(|c| !c.is_integer()) {
                all_integer = false;
            }
            table.push(((i, j), coords));
        }
    }
    Ok((all_integer, table))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical on-disk form of an algebra with lattice data: dimensions,
/// row-major j-matrices as exact rational strings, lattice bases likewise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub m: usize,
    pub r: usize,
    pub mats: Vec<Vec<String>>,
    pub log_basis: Vec<Vec<String>>,
    pub center_lattice: Vec<Vec<String>>,
}

fn matrix_to_strings(m: &RationalMatrix) -> Vec<String> {
    m.entries().iter().map(|x| x.to_string()).collect()
}

fn rows_to_strings(m: &RationalMatrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| x.to_string()).collect())
        .collect()
}

fn strings_to_matrix(rows: usize, cols: usize, s: &[String]) -> Result<RationalMatrix, NilAlgError> {
    if s.len() != rows * cols {
        return Err(NilAlgError::BadDocument(format!(
            "expected {} entries, got {}",
            rows * cols,
            s.len()
        )));
    }
    let data = s
        .iter()
        .map(|t| parse_rational(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RationalMatrix::new(rows, cols, data))
}

fn string_rows_to_matrix(cols: usize, rows: &[Vec<String>]) -> Result<RationalMatrix, NilAlgError> {
    let flat: Vec<String> = rows.iter().flatten().cloned().collect();
    strings_to_matrix(rows.len(), cols, &flat)
}

impl AlgebraDocument {
    pub fn from_parts<T: Scalar>(
        alg: &MetricTwoStepAlgebra<T>,
        gamma: &GammaData,
    ) -> Self {
        let mats = alg
            .exact_or_lifted_mats()
            .iter()
            .map(matrix_to_strings)
            .collect();
        AlgebraDocument {
            m: alg.m(),
            r: alg.r(),
            mats,
            log_basis: rows_to_strings(gamma.log_basis().basis()),
            center_lattice: rows_to_strings(gamma.center_lattice().basis()),
        }
    }

    pub fn into_parts<T: Scalar>(
        &self,
    ) -> Result<(MetricTwoStepAlgebra<T>, GammaData), NilAlgError> {
        if self.mats.len() != self.r {
            return Err(NilAlgError::BadDocument(format!(
                "{} matrices for r = {}",
                self.mats.len(),
                self.r
            )));
        }
        let mats = self
            .mats
            .iter()
            .map(|s| strings_to_matrix(self.m, self.m, s))
            .collect::<Result<Vec<_>, _>>()?;
        let alg = MetricTwoStepAlgebra::from_exact(self.m, mats)?;
        let log = LatticeBasis::from_generators(
            self.m + self.r,
            &string_rows_to_matrix(self.m + self.r, &self.log_basis)?,
        );
        let center = LatticeBasis::from_generators(
            self.r,
            &string_rows_to_matrix(self.r, &self.center_lattice)?,
        );
        let gamma = GammaData::new(self.m, self.r, log, center)?;
        Ok((alg, gamma))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NilAlgError> {
        serde_json::from_str(s).map_err(|e| NilAlgError::BadDocument(e.to_string()))
    }

    /// Stable content string for hashing: dimensions and every rational
    /// entry in a fixed order.
    pub fn canonical_string(&self) -> String {
        let mut out = format!("m={};r={}", self.m, self.r);
        for (k, mstr) in self.mats.iter().enumerate() {
            out.push_str(&format!(";mat{k}:"));
            out.push_str(&mstr.join(","));
        }
        out.push_str(";log:");
        out.push_str(
            &self
                .log_basis
                .iter()
                .map(|row| row.join(","))
                .collect::<Vec<_>>()
                .join("|"),
        );
        out.push_str(";center:");
        out.push_str(
            &self
                .center_lattice
                .iter()
                .map(|row| row.join(","))
                .collect::<Vec<_>>()
                .join("|"),
        );
        out
    }
}
