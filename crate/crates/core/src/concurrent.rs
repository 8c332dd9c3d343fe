//! Thread-safe handle: many concurrent readers, one writer at a time.

use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::Result;
use crate::graph::{Label, LayeredGraph, SlotId};
use crate::search::SearchResult;
use crate::update::UpdateStrategy;

#[derive(Debug, Clone)]
pub struct SharedIndex {
    inner: Arc<RwLock<LayeredGraph>>,
}

impl SharedIndex {
    pub fn new(graph: LayeredGraph) -> Self {
        Self {
            inner: Arc::new(RwLock::new(graph)),
        }
    }

    pub fn knn_search(&self, query: &[f32], k: usize, ef: usize) -> Result<SearchResult> {
        self.inner.read().knn_search(query, k, ef)
    }

    pub fn insert(&self, vector: &[f32], label: Label) -> Result<SlotId> {
        self.inner.write().insert(vector, label)
    }

    pub fn mark_delete(&self, label: Label) -> Result<()> {
        self.inner.write().mark_delete(label)
    }

    pub fn replace_update(
        &self,
        vector: &[f32],
        label: Label,
        strategy: UpdateStrategy,
    ) -> Result<SlotId> {
        self.inner.write().replace_update(vector, label, strategy)
    }

    pub fn live_count(&self) -> usize {
        self.inner.read().live_count()
    }

    /// Runs `f` with shared access, e.g. for audits.
    pub fn read<T>(&self, f: impl FnOnce(&LayeredGraph) -> T) -> T {
        f(&self.inner.read())
    }

    /// Runs `f` with exclusive access.
    pub fn write<T>(&self, f: impl FnOnce(&mut LayeredGraph) -> T) -> T {
        f(&mut self.inner.write())
    }

    /// Returns the graph if this is the last handle.
    pub fn try_unwrap(self) -> std::result::Result<LayeredGraph, Self> {
        Arc::try_unwrap(self.inner)
            .map(RwLock::into_inner)
            .map_err(|inner| Self { inner })
    }
}
