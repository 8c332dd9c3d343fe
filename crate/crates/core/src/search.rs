//! Beam search, occlusion-based neighbor selection, insertion and k-NN query.
//!
//! Equal distances are ordered by ascending label everywhere so that results
//! and adjacency are reproducible.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::distance::Metric;
use crate::error::{IndexError, Result};
use crate::graph::{Label, LayeredGraph, SlotId};

/// A slot together with its distance to some base vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub slot: SlotId,
    pub distance: f32,
}

/// Outcome of a k-NN query, ascending by distance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchResult {
    pub entries: Vec<(Label, f32)>,
}

impl SearchResult {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|&(l, _)| l).collect()
    }
}

#[derive(Clone, Copy)]
struct Ranked {
    distance: f32,
    label: Label,
    slot: SlotId,
}

impl Ranked {
    #[inline]
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.label.cmp(&other.label))
            .then(self.slot.cmp(&other.slot))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// Greedy occlusion pruning over candidates sorted ascending by distance to
/// the base point. A candidate is kept iff `factor * d(selected, cand) >
/// d(base, cand)` for every kept one, until `m` are kept.
fn prune_sorted<T: Copy>(
    sorted: &[(T, f32)],
    m: usize,
    factor: f32,
    mut pair_distance: impl FnMut(T, T) -> f32,
) -> Vec<(T, f32)> {
    let mut kept: Vec<(T, f32)> = Vec::with_capacity(m.min(sorted.len()));
    for &(cand, d_base) in sorted {
        if kept.len() >= m {
            break;
        }
        let occluded = kept
            .iter()
            .any(|&(sel, _)| factor * pair_distance(sel, cand) <= d_base);
        if !occluded {
            kept.push((cand, d_base));
        }
    }
    kept
}

/// Occlusion-based selection of at most `m` neighbors for `query` among free
/// points.
///
/// Candidates are visited closest first (ties by ascending key); a candidate
/// `e` survives iff `alpha * d(s, e) > d(query, e)` for every already kept `s`.
/// With `alpha = 1` this is the classic HNSW heuristic. For squared L2,
/// `alpha` applies to Euclidean lengths.
pub fn select_neighbors<K: Copy + Ord>(
    query: &[f32],
    candidates: &[(K, &[f32])],
    m: usize,
    alpha: f32,
    metric: Metric,
) -> Vec<K> {
    let mut scored: Vec<(usize, f32)> = candidates
        .iter()
        .enumerate()
        .map(|(i, (_, v))| (i, metric.eval(query, v)))
        .collect();
    scored.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(candidates[a.0].0.cmp(&candidates[b.0].0))
    });
    scored.dedup_by(|a, b| candidates[a.0].0 == candidates[b.0].0);
    let factor = metric.prune_factor(alpha);
    prune_sorted(&scored, m, factor, |i, j| {
        metric.eval(candidates[i].1, candidates[j].1)
    })
    .into_iter()
    .map(|(i, _)| candidates[i].0)
    .collect()
}

impl LayeredGraph {
    #[inline]
    fn ranked(&self, slot: SlotId, distance: f32) -> Ranked {
        Ranked {
            distance,
            label: self.label_of(slot),
            slot,
        }
    }

    /// Best-first beam search restricted to `layer`.
    ///
    /// Returns up to `ef` slots ascending by distance. Deleted slots take part
    /// like any other; [`knn_search`](Self::knn_search) filters them.
    pub fn search_layer(
        &self,
        query: &[f32],
        entries: &[SlotId],
        ef: usize,
        layer: usize,
    ) -> Result<Vec<Candidate>> {
        self.check_dim(query)?;
        if entries.is_empty() {
            return Err(IndexError::EmptyEntrySet);
        }
        for &e in entries {
            self.check_slot(e)?;
        }
        if ef == 0 {
            return Err(IndexError::InvalidParams("ef must be >= 1".into()));
        }
        Ok(self.beam(query, entries, ef, layer, false))
    }

    /// Core beam search. With `live_only` the result beam admits only
    /// non-deleted slots, while deleted ones are still expanded for routing.
    pub(crate) fn beam(
        &self,
        query: &[f32],
        entries: &[SlotId],
        ef: usize,
        layer: usize,
        live_only: bool,
    ) -> Vec<Candidate> {
        let metric = self.params.metric;
        let mut visited = vec![false; self.nodes.len()];
        let mut frontier: BinaryHeap<Reverse<Ranked>> = BinaryHeap::new();
        let mut best: BinaryHeap<Ranked> = BinaryHeap::new();

        for &e in entries {
            if std::mem::replace(&mut visited[e.index()], true) {
                continue;
            }
            let item = self.ranked(e, metric.eval(query, self.vector(e)));
            frontier.push(Reverse(item));
            if !live_only || !self.is_deleted(e) {
                best.push(item);
                if best.len() > ef {
                    best.pop();
                }
            }
        }

        while let Some(Reverse(current)) = frontier.pop() {
            if best.len() >= ef {
                if let Some(worst) = best.peek() {
                    if current > *worst {
                        break;
                    }
                }
            }
            for &nb in self.neighbors(current.slot, layer) {
                if std::mem::replace(&mut visited[nb.index()], true) {
                    continue;
                }
                let item = self.ranked(nb, metric.eval(query, self.vector(nb)));
                let admit = best.len() < ef || best.peek().is_some_and(|w| item < *w);
                if admit {
                    frontier.push(Reverse(item));
                    if !live_only || !self.is_deleted(nb) {
                        best.push(item);
                        if best.len() > ef {
                            best.pop();
                        }
                    }
                }
            }
        }

        best.into_sorted_vec()
            .into_iter()
            .map(|r| Candidate {
                slot: r.slot,
                distance: r.distance,
            })
            .collect()
    }

    /// Greedy walk from `start` through layers `from_layer` down to
    /// `stop_layer + 1`, moving to any strictly closer neighbor until none is
    /// left on each layer.
    pub(crate) fn descend(
        &self,
        query: &[f32],
        start: SlotId,
        from_layer: usize,
        stop_layer: usize,
    ) -> SlotId {
        let metric = self.params.metric;
        let mut current = self.ranked(start, metric.eval(query, self.vector(start)));
        let mut layer = from_layer;
        while layer > stop_layer {
            loop {
                let mut moved = false;
                for &nb in self.neighbors(current.slot, layer) {
                    let item = self.ranked(nb, metric.eval(query, self.vector(nb)));
                    if item < current {
                        current = item;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
            layer -= 1;
        }
        current.slot
    }

    /// Occlusion pruning of `candidates` (distances measured from `base`).
    pub(crate) fn select_for(
        &self,
        candidates: &mut Vec<Candidate>,
        m: usize,
        alpha: f32,
    ) -> Vec<SlotId> {
        candidates.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(self.label_of(a.slot).cmp(&self.label_of(b.slot)))
                .then(a.slot.cmp(&b.slot))
        });
        candidates.dedup_by_key(|c| c.slot);
        let metric = self.params.metric;
        let scored: Vec<(SlotId, f32)> = candidates.iter().map(|c| (c.slot, c.distance)).collect();
        prune_sorted(&scored, m, metric.prune_factor(alpha), |a, b| {
            metric.eval(self.vector(a), self.vector(b))
        })
        .into_iter()
        .map(|(s, _)| s)
        .collect()
    }

    /// Distances from `base_slot`'s vector to each of `slots`.
    pub(crate) fn score_from(&self, base_slot: SlotId, slots: &[SlotId]) -> Vec<Candidate> {
        let metric = self.params.metric;
        let base = self.vector(base_slot);
        slots
            .iter()
            .map(|&s| Candidate {
                slot: s,
                distance: metric.eval(base, self.vector(s)),
            })
            .collect()
    }

    /// Adds the edge `from -> to` at `layer`; a full list is shrunk by
    /// re-running neighbor selection from `from`'s own vector.
    pub(crate) fn add_reverse_edge(&mut self, from: SlotId, to: SlotId, layer: usize) {
        let bound = self.params.max_degree(layer);
        let list = &self.nodes[from.index()].neighbors[layer];
        if from == to || list.contains(&to) {
            return;
        }
        if list.len() < bound {
            self.nodes[from.index()].neighbors[layer].push(to);
            return;
        }
        let mut pool: Vec<SlotId> = list.clone();
        pool.push(to);
        let mut scored = self.score_from(from, &pool);
        let kept = self.select_for(&mut scored, bound, 1.0);
        self.nodes[from.index()].neighbors[layer] = kept;
    }

    /// Links `slot` (already holding its vector and label) into layers
    /// `0..=level`: greedy descent from the entry point, then per layer a beam
    /// search with `ef_construction`, `M` selected neighbors and bidirectional
    /// edges. The slot's existing lists at those layers are overwritten.
    pub(crate) fn link(&mut self, slot: SlotId, level: usize) {
        let Some(entry) = self.entry_point else {
            self.promote_entry(slot, level);
            return;
        };
        if entry == slot && self.nodes.len() == 1 {
            return;
        }
        let query = self.vector(slot).to_vec();
        let top = self.max_layer;
        let mut entries = vec![self.descend(&query, entry, top, level)];
        let m = self.params.m;
        let efc = self.params.ef_construction;

        for layer in (0..=level.min(top)).rev() {
            let found = self.beam(&query, &entries, efc, layer, false);
            let mut others: Vec<Candidate> =
                found.iter().copied().filter(|c| c.slot != slot).collect();
            let next: Vec<SlotId> = if others.is_empty() {
                entries.clone()
            } else {
                others.iter().map(|c| c.slot).collect()
            };
            let selected = self.select_for(&mut others, m, 1.0);
            self.nodes[slot.index()].neighbors[layer] = selected.clone();
            for nb in selected {
                self.add_reverse_edge(nb, slot, layer);
            }
            entries = next;
        }
        self.promote_entry(slot, level);
    }

    /// Standard insertion of a new point.
    pub fn insert(&mut self, vector: &[f32], label: Label) -> Result<SlotId> {
        self.check_dim(vector)?;
        if self.is_live(label) {
            return Err(IndexError::DuplicateLabel(label));
        }
        if self.nodes.len() >= self.capacity {
            return Err(IndexError::CapacityExhausted {
                capacity: self.capacity,
            });
        }
        let level = self.assign_level();
        let slot = self.allocate(vector, label, level)?;
        self.link(slot, level);
        Ok(slot)
    }

    /// Approximate k nearest live points to `query`.
    pub fn knn_search(&self, query: &[f32], k: usize, ef: usize) -> Result<SearchResult> {
        self.check_dim(query)?;
        if k == 0 {
            return Err(IndexError::InvalidParams("k must be >= 1".into()));
        }
        if ef < k {
            return Err(IndexError::InvalidParams(format!(
                "ef ({ef}) must be >= k ({k})"
            )));
        }
        let Some(entry) = self.entry_point else {
            return Err(IndexError::EmptyIndex);
        };
        if self.live_count == 0 {
            return Err(IndexError::EmptyIndex);
        }
        let start = self.descend(query, entry, self.max_layer, 0);
        let found = self.beam(query, &[start], ef, 0, true);
        Ok(SearchResult {
            entries: found
                .into_iter()
                .take(k)
                .map(|c| (self.label_of(c.slot), c.distance))
                .collect(),
        })
    }
}
