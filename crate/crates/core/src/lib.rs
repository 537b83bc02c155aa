//! Context-enhanced relational joins.
//!
//! Tuples carry context-rich tokens that an [`EmbeddingModel`] maps to
//! fixed-dimension vectors. Selections and joins then run on cosine-similarity
//! predicates over those vectors, in one of three physical formulations
//! (naive nested loop, prefetching nested loop, blocked tensor join) chosen by
//! hand or by the [`cost`] model.
//!
//! ```
//! use vecjoin::{make_raw_relation, tensor_join, EmbeddingModel, Threshold};
//!
//! let model = EmbeddingModel::synthetic(7, 64).unwrap();
//! let left = make_raw_relation("R", ["apple", "pear", "plum"]);
//! let right = make_raw_relation("S", ["apple", "fig"]);
//! let theta = Threshold::new(0.99).unwrap();
//! let (matches, stats) = tensor_join(&left, &right, &model, theta, 1 << 20, 2).unwrap();
//! assert_eq!(matches.pairs(), vec![(0, 0)]);
//! assert_eq!(stats.model_calls(), 5);
//! ```

pub mod cost;
pub mod embedding;
mod error;
pub mod join;
pub mod linalg;
pub mod relation;

pub use embedding::{decode, embed_relation, load_vec_file, top_k, EmbeddingModel, OovPolicy};
pub use error::{Error, Result};
pub use join::{
    e_selection, nlj_naive, nlj_prefetch, plan_batches, tensor_join, Algo, BatchPlan, InnerChoice,
    InnerRelation, JoinStats,
};
pub use linalg::Tile;
pub use relation::{
    canonicalize, make_raw_relation, EmbeddedRelation, Match, MatchSet, Offset, RawRelation,
    Threshold,
};
