//! Weighted backup 2-center solvers for trees.
//!
//! A *backup 2-center* instance places two facilities on the points of a
//! tree (vertices or edge interiors). Each facility fails independently
//! with a known probability, and the two never fail together. The goal is
//! to minimize the expected worst weighted distance from any demand vertex
//! to its nearest functioning facility.
//!
//! The crate provides:
//!
//! * [`tree`] — the tree model: parsing, normalization, distances,
//!   eccentricities and proximity partitions over exact rationals or `f64`.
//! * [`center`] — weighted 1-center and balanced weighted 2-center solvers,
//!   the anchors of the search interval.
//! * [`envelope`] — path embeddings, cost half-lines and upper-envelope
//!   machinery, including symbolic `t ± ε` evaluation.
//! * [`solver`] — the prune-and-search solver that runs in time linear in
//!   the tree size once the anchors are known.
//! * [`oracle`] — an `O(n log n)` envelope-scan baseline plus exhaustive
//!   exact and grid oracles used for cross-validation.
//! * [`gen`] — deterministic instance generators for tests and benchmarks.

pub mod center;
pub mod diag;
pub mod envelope;
pub mod error;
pub mod gen;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod tree;

pub use center::{balance_2center, cover_feasible, split_edge_2center_oracle, weighted_2center,
                 weighted_center, CenterResult, TwoCenterResult};
pub use envelope::{build_envelope, embed, envelope_eval, intersection, inverse_query, CostLine,
                   DualValue, PathEmbedding, Side};
pub use error::{ParseError, SolverError, TreeError};
pub use oracle::{bending_point_oracle, bending_point_oracle_batch, bu2center_tree_baseline,
                 grid_oracle, OracleMethod, OracleReport};
pub use scalar::{parse_rat, Rat, Scalar};
pub use solver::{backup_2center, backup_2center_opts, psi, psi_components, Diagnostics,
                 FailureProbs, Solution, SolverOptions};
pub use tree::{Partition, PointRef, WeightedTree};
