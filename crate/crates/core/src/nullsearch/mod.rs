//! Null-configuration search tree, feedback-driven tree search, exhaustive linear
//! search and the parallel multi-user search.

mod multi;
mod search;
mod tree;

pub use multi::{merge_nulls, multi_user_search, MultiUserPlan};
pub use search::{
    default_linear_grid, linear_search, tree_search, Evaluator, SearchOutcome, SearchState, Visit,
    DEFAULT_LINEAR_SPAN_DEG, DEFAULT_LINEAR_STEP_DEG,
};
pub use tree::{
    build_tree, default_nulls_per_level, sector_nulls, NodeId, NullConfig, SearchTree, DEFAULT_DEPTH, DEFAULT_FANOUT,
};
