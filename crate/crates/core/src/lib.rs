//! Meta-path learning for heterogeneous information networks.
//!
//! A heterogeneous information network (HIN) is kept in two views: an
//! *instance graph* of typed entities and a *schema graph* whose nodes are
//! entity types and whose edges are relations. A meta-path is a path in the
//! schema graph; its usefulness for explaining a relation is measured on the
//! instance graph by coverage (how many of the relation's entity pairs it
//! connects) and confidence (how many of its connected pairs the relation
//! holds for).
//!
//! The crate trains a reinforcement-learning agent that walks the schema
//! graph and emits meta-paths with high coverage and confidence, then uses
//! the mined meta-paths for query answering and link prediction. The main
//! pieces:
//!
//! - [`hin`]: the two-view data model, loaders and graph surgery
//! - [`eval`]: meta-path connectivity, coverage/confidence and rewards,
//!   backed by boolean sparse-matrix reachability with memoization
//! - [`embed`]: translation embeddings and mean-pooled type vectors
//! - [`env`]: the MDP over the schema graph (states, actions, stay)
//! - [`policy`]: the encoder-decoder policy network with hand-rolled
//!   backpropagation and Adam
//! - [`trainer`]: the REINFORCE loop with baseline, entropy bonus and the
//!   periodic multi-relation schedule
//! - [`inference`]: beam-search mining and Hits@K / MRR query answering
//! - [`linkpred`]: the per-relation link-prediction harness
//! - [`baselines`]: random-walk and breadth-first meta-path generators

pub mod baselines;
pub mod embed;
pub mod env;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod hin;
pub mod inference;
pub mod linalg;
pub mod linkpred;
pub mod policy;
pub mod trainer;

pub use error::{Error, Result};
pub use eval::{EvalRecord, Evaluator, MetaPath};
pub use hin::{EntityId, InstanceGraph, Query, RelId, SchemaGraph, TypeId, TypePairSupport};
