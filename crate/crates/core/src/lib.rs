//! Hierarchical navigable small world (HNSW) graph index with in-place
//! replacement updates.
//!
//! Deleting a point only marks it. A later replacement update reuses the
//! oldest marked slot for a new vector, after repairing the edges around
//! the old point with one of several strategies ([`StrategyKind`]):
//!
//! * `hnsw-ru`: the classic replaced-update repair, every neighbor of the
//!   deleted point reselects its edges from a two-hop pool;
//! * `mn-ru-alpha`, `mn-ru-beta`, `mn-ru-gamma`: only mutual neighbors are
//!   repaired, from progressively smaller candidate pools;
//! * `mn-thn-ru`: the gamma variant plus two-hop in-neighbors.
//!
//! Repeated replacement can leave points no search reaches. The
//! [`reachability`] audits count them and [`DualIndex`] keeps them findable
//! through a periodically rebuilt backup index.
//!
//! ```
//! use mnru_index::{IndexParams, Label, LayeredGraph, UpdateStrategy};
//!
//! let mut index = LayeredGraph::new(IndexParams::new(8, 64), 2, 100)?;
//! for i in 0..50u64 {
//!     index.insert(&[i as f32, 0.0], Label(i))?;
//! }
//! index.mark_delete(Label(7))?;
//! index.replace_update(&[7.5, 0.0], Label(100), UpdateStrategy::mn_ru_gamma())?;
//! let hits = index.knn_search(&[7.4, 0.0], 1, 16)?;
//! assert_eq!(hits.labels(), vec![Label(100)]);
//! # Ok::<(), mnru_index::IndexError>(())
//! ```

mod concurrent;
mod distance;
mod dual;
mod error;
mod graph;
mod params;
pub mod reachability;
mod search;
pub mod snapshot;
mod update;

pub use concurrent::SharedIndex;
pub use distance::{distance, Metric};
pub use dual::{DualIndex, DualSearchOutcome, RebuildEvent, DEFAULT_TAU};
pub use error::{IndexError, Result};
pub use graph::{
    level_for_uniform, DegreeViolation, Label, LayeredGraph, Node, SlotId, StructureReport,
};
pub use params::IndexParams;
pub use reachability::ReachabilityReport;
pub use search::{select_neighbors, Candidate, SearchResult};
pub use update::{LayerRepair, RepairPlan, StrategyKind, UpdateStrategy};
