//! Chip-firing games on strongly connected directed loop-free multigraphs.
//!
//! The central quantity is the *instability minimum* `c`: the least total
//! number of chips for which some initial configuration admits an infinite
//! legal game. This crate computes `c` by three independent exact methods
//! and approximates it from above with three heuristics:
//!
//! * [`game::instability_oracle`] — brute force over all configurations of
//!   increasing total, classifying each game as finite or infinite.
//! * [`exact::instability_by_strategies`] — minimum gain over primitive
//!   sequences, found by a pruned search over multiset permutations.
//! * [`extension::instability_by_extension`] — the primitive feedback
//!   number, computed on the primitive extension of the graph.
//! * [`heuristics`] — greedy, insertion-sort and PageRank-based sequence
//!   builders whose gains upper-bound `c`.
//!
//! All exact arithmetic (the Laplacian kernel behind the primitive period
//! vector) is done over arbitrary-precision rationals; game and bound
//! states use machine integers.
//!
//! With the default `parallel` feature the configuration scans and
//! sequence searches run on rayon; without it the same code paths run
//! sequentially.

pub mod bounds;
pub mod exact;
mod exec;
pub mod extension;
pub mod game;
pub mod heuristics;
pub mod multigraph;
pub mod period;

pub use bounds::{BoundTrace, PrimitiveSequence};
pub use exact::{InstabilityResult, Method, SearchError, SearchLimits, SearchStats};
pub use game::{Configuration, GameOutcome};
pub use multigraph::{DirectedMultigraph, GraphError, IntMatrix, VertexId};
pub use period::PeriodData;
