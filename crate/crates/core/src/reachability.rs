//! Unreachable-point auditing.
//!
//! Two notions are tracked:
//!
//! * in-degree zero: a live point with no incoming edge on any layer (the
//!   entry point is exempt, searches start there);
//! * search-unreachable: a live point an exhaustive k-NN search (`k = ef =`
//!   live count) probed with the entry point's vector does not return.
//!
//! The second is a superset of the first: a point only reachable through a
//! stranded point is stranded as well. [`LayeredGraph::traversal_reachable`]
//! is an independent graph-walk oracle for both.
//!
//! All audits need a quiescent index.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{Label, LayeredGraph};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub indegree_zero: BTreeSet<Label>,
    pub search_unreachable: BTreeSet<Label>,
    pub live_count: usize,
}

impl ReachabilityReport {
    /// CSV row `iteration,indegree_zero_count,search_unreachable_count,live_count`.
    pub fn csv_row(&self, iteration: usize) -> String {
        format!(
            "{iteration},{},{},{}",
            self.indegree_zero.len(),
            self.search_unreachable.len(),
            self.live_count
        )
    }

    pub const CSV_HEADER: &'static str =
        "iteration,indegree_zero_count,search_unreachable_count,live_count";
}

impl LayeredGraph {
    /// Live labels with zero in-degree summed over all layers, entry point
    /// excluded. Edges out of deleted slots still count.
    pub fn count_indegree_zero(&self) -> BTreeSet<Label> {
        let mut indegree = vec![0u32; self.nodes.len()];
        for node in &self.nodes {
            for list in &node.neighbors {
                for nb in list {
                    indegree[nb.index()] += 1;
                }
            }
        }
        self.nodes()
            .filter(|(slot, node)| {
                !node.deleted && indegree[slot.index()] == 0 && Some(*slot) != self.entry_point
            })
            .map(|(_, node)| node.label)
            .collect()
    }

    /// Live labels an exhaustive search from the entry point's vector misses.
    pub fn unreachable_by_search(&self) -> BTreeSet<Label> {
        let live = self.live_count;
        let Some(entry) = self.entry_point else {
            return BTreeSet::new();
        };
        if live == 0 {
            return BTreeSet::new();
        }
        let probe = self.vector(entry).to_vec();
        let found: BTreeSet<Label> = match self.knn_search(&probe, live, live) {
            Ok(res) => res.entries.into_iter().map(|(l, _)| l).collect(),
            Err(_) => BTreeSet::new(),
        };
        self.live_labels()
            .into_iter()
            .filter(|l| !found.contains(l))
            .collect()
    }

    /// Live labels reached by a directed walk from the entry point over the
    /// union of all layers' edges. Deleted slots are walked through.
    pub fn traversal_reachable(&self) -> BTreeSet<Label> {
        let Some(entry) = self.entry_point else {
            return BTreeSet::new();
        };
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([entry]);
        seen[entry.index()] = true;
        while let Some(s) = queue.pop_front() {
            for list in &self.nodes[s.index()].neighbors {
                for &nb in list {
                    if !std::mem::replace(&mut seen[nb.index()], true) {
                        queue.push_back(nb);
                    }
                }
            }
        }
        self.nodes()
            .filter(|(slot, node)| seen[slot.index()] && !node.deleted)
            .map(|(_, node)| node.label)
            .collect()
    }

    /// Live labels the traversal oracle does not reach.
    pub fn traversal_unreachable(&self) -> BTreeSet<Label> {
        let reached = self.traversal_reachable();
        self.live_labels()
            .into_iter()
            .filter(|l| !reached.contains(l))
            .collect()
    }

    pub fn reachability_report(&self) -> ReachabilityReport {
        ReachabilityReport {
            indegree_zero: self.count_indegree_zero(),
            search_unreachable: self.unreachable_by_search(),
            live_count: self.live_count,
        }
    }
}
