//! Quadratic operator pencils for interior transmission eigenvalue problems.
//!
//! The crate assembles Chebyshev–Galerkin discretizations of the fourth-order
//! pencils
//!
//! ```text
//! T_H(λ) u = Δ q Δ u − λ (Δ q + q Δ + Δ) u + λ² (1 + q) u
//! T_S(λ) u = Δ q Δ u + Δ u − λ (Δ q + q Δ + 1) u + λ² q u
//! ```
//!
//! linearizes them through the companion operator, and provides numerical
//! probes of the analytic facts behind completeness of their generalized
//! eigenstates: parameter-ellipticity of the symbols, resolvent decay on
//! rays, growth on circles, Laurent structure at poles and a Chebyshev-type
//! bound on the eigenvalue counting function.
//!
//! Module map:
//!
//! * [`symbol`] – principal symbols and the two ellipticity conditions.
//! * [`discretization`] – Chebyshev grids, boundary-adapted bases and the dense
//!   `(A0, A1, A2)` triples.
//! * [`spectra`] – companion linearization, eigenpairs, Keldysh chains,
//!   Schatten norms, counting and completeness.
//! * [`resolvent`] – ray and circle scans, block-inverse and resolvent
//!   identities, the Weierstrass product, Laurent coefficients.
//! * [`oracle`] – exact characteristic determinant for constant coefficients.
//! * [`io`] – CSV exports in full precision.

pub mod discretization;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pencil;
pub mod resolvent;
pub mod sampling;
pub mod spectra;
pub mod symbol;

pub use num_complex::Complex64 as C64;

pub use discretization::{
    assemble_pencil, assemble_pencil_2d, make_grid, Coefficient, DiscretePencil, Grid1D,
    MediumProfile,
};
pub use pencil::QuadraticPencil;
pub use symbol::{BoundaryPair, PencilKind};

/// Errors raised by the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is numerically singular ({0})")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("problem size {size} exceeds the configured cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("divergent sum: {0}")]
    Divergent(String),
    #[error("contour check failed: {0}")]
    Contour(String),
    #[error("relation violated: {0}")]
    Relation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
