//! Randomized sparse Cholesky preconditioning for Laplacian and SDD linear systems.
//!
//! The factorization eliminates one vertex of the weighted graph at a time; instead
//! of inserting the full clique among the eliminated vertex's neighbors (the exact
//! Schur-complement update), it samples a reweighted spanning tree of that clique
//! whose graph Laplacian matches the clique in expectation. The resulting
//! approximate factor `G` is used as a `G Gᵀ` preconditioner for conjugate
//! gradients. General SDD systems are reduced to Laplacian systems first: SDDM
//! matrices via a one-row extension, matrices with positive off-diagonals via
//! sign flipping or a doubled system.
//!
//! Modules:
//! - [`sparse`]: compressed-column symmetric storage, permutations, kernels
//! - [`classify`]: matrix-class detection and the SDD-to-Laplacian embeddings
//! - [`sampling`]: the clique sampler and its exact counterpart
//! - [`factor`]: sequential randomized elimination over a weighted graph
//! - [`ordering`]: minimum-degree, nested-dissection and utility orderings
//! - [`parallel`]: task-tree parallel factorization
//! - [`krylov`]: PCG, preconditioner application, end-to-end solve drivers
//! - [`problems`]: 7-point Poisson generators (constant and high-contrast)
//! - [`io`]: Matrix Market files and factor archives

pub mod classify;
pub mod factor;
pub mod io;
pub mod krylov;
pub mod ordering;
pub mod parallel;
pub mod problems;
pub mod sampling;
pub mod sparse;

mod error;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

pub use classify::{classify, MatrixClass, MatrixKind, Scenario};
pub use factor::{factor_laplacian, factor_sddm, CholFactor};
pub use krylov::{pcg, solve_sdd, solve_sddm, SolveOptions, SolveStats};
pub use ordering::{NdTree, OrderingKind, OrderingSpec};
pub use sampling::RngStream;
pub use sparse::{LowerTri, Perm, SparseSym};
