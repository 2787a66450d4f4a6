//! Spectral and geometric toolkit for two-step nilmanifolds.
//!
//! A two-step metric algebra g = v ⊕ z is encoded by the linear map
//! j: z → so(v), ⟨j(z)x, y⟩ = ⟨[x, y], z⟩. The crate builds such algebras,
//! decides isospectrality and equivalence of j-maps, computes Laplace
//! spectra of the associated compact quotients, and evaluates curvature.
//!
//! Numeric kernels are generic over the scalar type through [`scalar::Scalar`]
//! (`f32`, `f64`); lattice and occurrence computations use exact big-rational
//! arithmetic. `Real` and `Rat` are the concrete aliases used by default.

pub mod eig;
pub mod exactlat;
pub mod curvature;
pub mod families;
pub mod isocheck;
pub mod mat;
pub mod nilalg;
pub mod scalar;
pub mod skewlin;
pub mod spectra;

/// Default floating-point scalar.
pub type Real = f64;
/// Exact rational scalar used by the lattice layer.
pub type Rat = num_rational::BigRational;

pub use mat::Mat;
pub use scalar::Scalar;
