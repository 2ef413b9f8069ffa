//! Spectra of quadratic pencils: linearization, eigenvalues with Keldysh
//! chains, eigenvalue counting and completeness of root vectors.

pub mod chains;
pub mod companion;
pub mod completeness;
pub mod counting;
pub mod eigen;

pub use chains::{jordan_from_keldysh, keldysh_from_jordan, verify_chain, KeldyshChain};
pub use companion::{invertibility_scan, linearize, shifted_inverse, CompanionOperator};
pub use completeness::{completeness_profile, completeness_residual, CompletenessReport};
pub use counting::{
    counting, counting_values, schatten_norm, torus_embedding_sum, with_schatten_bound,
    CountingReport, TorusSum,
};
pub use eigen::{solve, EigenOptions, EigenSolution, Eigenvalue};
