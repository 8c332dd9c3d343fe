//! Layered graph storage.
//!
//! Points live in dense slots. A slot keeps its vector, label, top level and
//! one neighbor list per layer. Deleting a point only flags the slot and queues
//! it on the deleted list; the slot keeps routing searches until a replacement
//! insertion takes it over.
//!
//! All mutating methods take `&mut self` and all queries take `&self`, so the
//! borrow checker enforces the many-readers-xor-one-writer discipline for
//! single-owner use. [`SharedIndex`](crate::SharedIndex) extends the same
//! discipline across threads.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{IndexError, Result};
use crate::params::IndexParams;

/// Caller-assigned point identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for Label {
    fn from(v: u64) -> Self {
        Label(v)
    }
}

/// Internal storage index of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId(pub u32);

impl SlotId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub(crate) label: Label,
    pub(crate) level: usize,
    pub(crate) neighbors: Vec<Vec<SlotId>>,
    pub(crate) deleted: bool,
}

impl Node {
    pub(crate) fn new(label: Label, level: usize) -> Self {
        Self {
            label,
            level,
            neighbors: vec![Vec::new(); level + 1],
            deleted: false,
        }
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn is_deleted(&self) -> bool {
        self.deleted
    }

    /// Neighbors at `layer`, empty above the node's level.
    pub fn neighbors(&self, layer: usize) -> &[SlotId] {
        self.neighbors.get(layer).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Samples a level from a uniform draw `u` in `(0, 1]`.
///
/// With `lambda = 1 / ln(M)` the probability of a level >= 1 is `1 / M`.
pub fn level_for_uniform(u: f64, lambda: f64) -> usize {
    debug_assert!(u > 0.0 && u <= 1.0);
    // -ln(1/M) / ln(M) lands a hair under 1.0 in floating point; round through
    // a relative epsilon so exact level boundaries map to the upper level.
    let raw = -u.ln() * lambda;
    (raw * (1.0 + 1e-12)).floor() as usize
}

/// The multi-layer proximity graph.
#[derive(Debug, Clone)]
pub struct LayeredGraph {
    pub(crate) params: IndexParams,
    pub(crate) dim: usize,
    pub(crate) capacity: usize,
    pub(crate) vectors: Vec<f32>,
    pub(crate) nodes: Vec<Node>,
    pub(crate) label_index: HashMap<Label, SlotId>,
    pub(crate) entry_point: Option<SlotId>,
    pub(crate) max_layer: usize,
    pub(crate) deleted_list: VecDeque<SlotId>,
    pub(crate) live_count: usize,
    pub(crate) rng: ChaCha8Rng,
}

impl LayeredGraph {
    pub fn new(params: IndexParams, dim: usize, capacity: usize) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(IndexError::InvalidParams("dimension must be >= 1".into()));
        }
        if capacity == 0 {
            return Err(IndexError::InvalidParams("capacity must be >= 1".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        Ok(Self {
            params,
            dim,
            capacity,
            vectors: Vec::new(),
            nodes: Vec::new(),
            label_index: HashMap::new(),
            entry_point: None,
            max_layer: 0,
            deleted_list: VecDeque::new(),
            live_count: 0,
            rng,
        })
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of allocated slots, deleted ones included.
    pub fn slot_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of points not flagged deleted.
    pub fn live_count(&self) -> usize {
        self.live_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry_point(&self) -> Option<SlotId> {
        self.entry_point
    }

    pub fn max_layer(&self) -> usize {
        self.max_layer
    }

    /// Slots awaiting reuse, oldest first.
    pub fn deleted_slots(&self) -> impl ExactSizeIterator<Item = SlotId> + '_ {
        self.deleted_list.iter().copied()
    }

    pub fn node(&self, slot: SlotId) -> Option<&Node> {
        self.nodes.get(slot.index())
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = (SlotId, &Node)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (SlotId(i as u32), n))
    }

    #[inline]
    pub fn vector(&self, slot: SlotId) -> &[f32] {
        let start = slot.index() * self.dim;
        &self.vectors[start..start + self.dim]
    }

    #[inline]
    pub(crate) fn label_of(&self, slot: SlotId) -> Label {
        self.nodes[slot.index()].label
    }

    #[inline]
    pub(crate) fn is_deleted(&self, slot: SlotId) -> bool {
        self.nodes[slot.index()].deleted
    }

    #[inline]
    pub fn neighbors(&self, slot: SlotId, layer: usize) -> &[SlotId] {
        self.nodes[slot.index()].neighbors(layer)
    }

    /// Slot currently holding `label`, live or deleted-but-not-replaced.
    pub fn slot_of(&self, label: Label) -> Option<SlotId> {
        self.label_index.get(&label).copied()
    }

    /// True when `label` maps to a slot that is not flagged deleted.
    pub fn is_live(&self, label: Label) -> bool {
        self.slot_of(label).is_some_and(|s| !self.is_deleted(s))
    }

    /// Live labels in slot order.
    pub fn live_labels(&self) -> Vec<Label> {
        self.nodes
            .iter()
            .filter(|n| !n.deleted)
            .map(|n| n.label)
            .collect()
    }

    /// Live `(label, vector)` pairs in slot order.
    pub fn live_points(&self) -> impl Iterator<Item = (Label, &[f32])> + '_ {
        self.nodes()
            .filter(|(_, n)| !n.deleted)
            .map(|(s, n)| (n.label, self.vector(s)))
    }

    pub(crate) fn check_dim(&self, v: &[f32]) -> Result<()> {
        if v.len() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_slot(&self, slot: SlotId) -> Result<()> {
        if slot.index() >= self.nodes.len() {
            return Err(IndexError::UnknownSlot(slot));
        }
        Ok(())
    }

    /// Draws a level for a new point from the index RNG.
    pub fn assign_level(&mut self) -> usize {
        // `random::<f64>()` is in [0, 1); flip it into (0, 1].
        let u = 1.0 - self.rng.random::<f64>();
        level_for_uniform(u, self.params.level_lambda)
    }

    pub(crate) fn write_vector(&mut self, slot: SlotId, v: &[f32]) {
        let start = slot.index() * self.dim;
        self.vectors[start..start + self.dim].copy_from_slice(v);
    }

    /// Allocates a slot with empty adjacency. The entry point moves to the new
    /// slot when it is the first point or sits above the current top layer.
    pub(crate) fn allocate(&mut self, v: &[f32], label: Label, level: usize) -> Result<SlotId> {
        self.check_dim(v)?;
        if self.is_live(label) {
            return Err(IndexError::DuplicateLabel(label));
        }
        if self.nodes.len() >= self.capacity {
            return Err(IndexError::CapacityExhausted {
                capacity: self.capacity,
            });
        }
        let slot = SlotId(self.nodes.len() as u32);
        self.nodes.push(Node::new(label, level));
        self.vectors.extend_from_slice(v);
        self.label_index.insert(label, slot);
        self.live_count += 1;
        Ok(slot)
    }

    pub(crate) fn promote_entry(&mut self, slot: SlotId, level: usize) {
        if self.entry_point.is_none() || level > self.max_layer {
            self.entry_point = Some(slot);
            self.max_layer = level;
        }
    }

    /// Adds a point at a fixed level without linking it to anything.
    ///
    /// Low-level hook for building exact topologies by hand together with
    /// [`set_neighbors`](Self::set_neighbors). Regular callers use
    /// [`insert`](Self::insert).
    pub fn add_unlinked(&mut self, v: &[f32], label: Label, level: usize) -> Result<SlotId> {
        let slot = self.allocate(v, label, level)?;
        self.promote_entry(slot, level);
        Ok(slot)
    }

    /// Overwrites the neighbor list of `slot` at `layer`.
    ///
    /// Only slot existence and the node's level are checked; degree bounds and
    /// self-edges are left for [`audit_structure`](Self::audit_structure) to
    /// report.
    pub fn set_neighbors(
        &mut self,
        slot: SlotId,
        layer: usize,
        neighbors: Vec<SlotId>,
    ) -> Result<()> {
        self.check_slot(slot)?;
        if let Some(bad) = neighbors.iter().find(|n| n.index() >= self.nodes.len()) {
            return Err(IndexError::UnknownSlot(*bad));
        }
        let node = &mut self.nodes[slot.index()];
        if layer > node.level {
            return Err(IndexError::InvalidParams(format!(
                "slot {slot} has level {}, cannot set layer {layer}",
                node.level
            )));
        }
        node.neighbors[layer] = neighbors;
        Ok(())
    }

    /// Finalizes `slot` as the live home of `label`, dropping the stale label
    /// mapping of the point it replaces.
    pub(crate) fn relabel(&mut self, slot: SlotId, label: Label) {
        let old = self.nodes[slot.index()].label;
        if self.label_index.get(&old) == Some(&slot) {
            self.label_index.remove(&old);
        }
        self.label_index.insert(label, slot);
        let node = &mut self.nodes[slot.index()];
        node.label = label;
        if node.deleted {
            node.deleted = false;
            self.live_count += 1;
        }
        if let Some(pos) = self.deleted_list.iter().position(|&s| s == slot) {
            self.deleted_list.remove(pos);
        }
    }

    /// Scans the graph for broken invariants.
    pub fn audit_structure(&self) -> StructureReport {
        let mut report = StructureReport::default();
        let n = self.nodes.len();

        for (slot, node) in self.nodes() {
            if node.neighbors.len() != node.level + 1 {
                report.level_mismatches.push(slot);
            }
            for (layer, list) in node.neighbors.iter().enumerate() {
                let bound = self.params.max_degree(layer);
                if list.len() > bound {
                    report.degree_violations.push(DegreeViolation {
                        slot,
                        layer,
                        degree: list.len(),
                        bound,
                    });
                }
                for (i, &nb) in list.iter().enumerate() {
                    if nb == slot {
                        report.self_edges.push((slot, layer));
                    } else if nb.index() >= n || self.nodes[nb.index()].level < layer {
                        report.dangling_edges.push((slot, layer, nb));
                    }
                    if list[..i].contains(&nb) {
                        report.duplicate_edges.push((slot, layer, nb));
                    }
                }
            }
            if !node.deleted && self.label_index.get(&node.label) != Some(&slot) {
                report.label_index_mismatches.push(slot);
            }
        }

        match self.entry_point {
            None if self.nodes.is_empty() => {}
            None => report
                .entry_point_issues
                .push("entry point absent in a non-empty index".into()),
            Some(ep) if ep.index() >= n => report
                .entry_point_issues
                .push(format!("entry point {ep} is not allocated")),
            Some(ep) => {
                let level = self.nodes[ep.index()].level;
                if level != self.max_layer {
                    report.entry_point_issues.push(format!(
                        "entry point {ep} has level {level} but max layer is {}",
                        self.max_layer
                    ));
                }
                if let Some(top) = self.nodes.iter().map(|nd| nd.level).max() {
                    if top > self.max_layer {
                        report.entry_point_issues.push(format!(
                            "a node sits at level {top} above max layer {}",
                            self.max_layer
                        ));
                    }
                }
            }
        }

        let flagged = self.nodes.iter().filter(|nd| nd.deleted).count();
        let mut seen = vec![false; n];
        let mut listed_ok = true;
        for &s in &self.deleted_list {
            if s.index() >= n || !self.nodes[s.index()].deleted || seen[s.index()] {
                listed_ok = false;
                break;
            }
            seen[s.index()] = true;
        }
        if !listed_ok || self.deleted_list.len() != flagged {
            report.deleted_list_mismatch = true;
        }
        if n - flagged != self.live_count {
            report.live_count_mismatch = true;
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeViolation {
    pub slot: SlotId,
    pub layer: usize,
    pub degree: usize,
    pub bound: usize,
}

/// Findings of [`LayeredGraph::audit_structure`]; empty on a healthy graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StructureReport {
    pub degree_violations: Vec<DegreeViolation>,
    pub self_edges: Vec<(SlotId, usize)>,
    /// Edges to unallocated slots or to nodes that do not reach the layer.
    pub dangling_edges: Vec<(SlotId, usize, SlotId)>,
    pub duplicate_edges: Vec<(SlotId, usize, SlotId)>,
    pub level_mismatches: Vec<SlotId>,
    pub label_index_mismatches: Vec<SlotId>,
    pub entry_point_issues: Vec<String>,
    pub deleted_list_mismatch: bool,
    pub live_count_mismatch: bool,
}

impl StructureReport {
    pub fn is_clean(&self) -> bool {
        self.degree_violations.is_empty()
            && self.self_edges.is_empty()
            && self.dangling_edges.is_empty()
            && self.duplicate_edges.is_empty()
            && self.level_mismatches.is_empty()
            && self.label_index_mismatches.is_empty()
            && self.entry_point_issues.is_empty()
            && !self.deleted_list_mismatch
            && !self.live_count_mismatch
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return f.write_str("structure ok");
        }
        writeln!(f, "degree violations: {}", self.degree_violations.len())?;
        writeln!(f, "self edges: {}", self.self_edges.len())?;
        writeln!(f, "dangling edges: {}", self.dangling_edges.len())?;
        writeln!(f, "duplicate edges: {}", self.duplicate_edges.len())?;
        writeln!(f, "level mismatches: {}", self.level_mismatches.len())?;
        writeln!(
            f,
            "label index mismatches: {}",
            self.label_index_mismatches.len()
        )?;
        for issue in &self.entry_point_issues {
            writeln!(f, "entry point: {issue}")?;
        }
        if self.deleted_list_mismatch {
            writeln!(f, "deleted list out of sync with deleted flags")?;
        }
        if self.live_count_mismatch {
            writeln!(f, "live count out of sync")?;
        }
        Ok(())
    }
}
