//! Main index plus a backup index over its search-unreachable points.
//!
//! The backup is rebuilt from scratch once more than `tau` replacement
//! updates have been recorded since the last rebuild. Queries run against
//! both indexes and merge by distance. Points stranded after the last rebuild
//! stay invisible until the next one.

use std::collections::BTreeSet;

use tracing::info;

use crate::error::{IndexError, Result};
use crate::graph::{Label, LayeredGraph, SlotId};
use crate::search::SearchResult;
use crate::update::UpdateStrategy;

pub const DEFAULT_TAU: u64 = 40_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RebuildEvent {
    /// Total replacement updates recorded when the rebuild ran.
    pub at_update: u64,
    pub unreachable: usize,
}

/// The three result sets of one dual query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualSearchOutcome {
    pub main: SearchResult,
    /// Backup hits still live in the main index, re-scored against the main
    /// index's current vectors.
    pub backup: SearchResult,
    /// Merged, label-deduplicated, ascending, truncated to `k`.
    pub combined: SearchResult,
}

#[derive(Debug, Clone)]
pub struct DualIndex {
    main: LayeredGraph,
    backup: Option<LayeredGraph>,
    backup_labels: BTreeSet<Label>,
    ops_since_rebuild: u64,
    total_ops: u64,
    tau: u64,
    rebuilds: Vec<RebuildEvent>,
}

impl DualIndex {
    pub fn new(main: LayeredGraph, tau: u64) -> Result<Self> {
        if tau == 0 {
            return Err(IndexError::InvalidParams("tau must be >= 1".into()));
        }
        Ok(Self {
            main,
            backup: None,
            backup_labels: BTreeSet::new(),
            ops_since_rebuild: 0,
            total_ops: 0,
            tau,
            rebuilds: Vec::new(),
        })
    }

    pub fn main(&self) -> &LayeredGraph {
        &self.main
    }

    /// Direct access to the main index. Replacement updates made through this
    /// handle must be followed by [`record_update`](Self::record_update).
    pub fn main_mut(&mut self) -> &mut LayeredGraph {
        &mut self.main
    }

    pub fn into_main(self) -> LayeredGraph {
        self.main
    }

    pub fn backup(&self) -> Option<&LayeredGraph> {
        self.backup.as_ref()
    }

    pub fn backup_len(&self) -> usize {
        self.backup_labels.len()
    }

    pub fn backup_labels(&self) -> &BTreeSet<Label> {
        &self.backup_labels
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn ops_since_rebuild(&self) -> u64 {
        self.ops_since_rebuild
    }

    pub fn rebuilds(&self) -> &[RebuildEvent] {
        &self.rebuilds
    }

    /// Rebuilds the backup over the main index's search-unreachable points,
    /// using the main index's parameters.
    pub fn build_backup(&mut self) -> Result<()> {
        let unreachable = self.main.unreachable_by_search();
        let backup = if unreachable.is_empty() {
            None
        } else {
            let mut g = LayeredGraph::new(
                self.main.params().clone(),
                self.main.dim(),
                unreachable.len(),
            )?;
            for &label in &unreachable {
                let slot = self
                    .main
                    .slot_of(label)
                    .expect("unreachable labels are live");
                g.insert(self.main.vector(slot), label)?;
            }
            Some(g)
        };
        info!(
            at_update = self.total_ops,
            unreachable = unreachable.len(),
            "rebuilt backup index"
        );
        self.rebuilds.push(RebuildEvent {
            at_update: self.total_ops,
            unreachable: unreachable.len(),
        });
        self.backup = backup;
        self.backup_labels = unreachable;
        self.ops_since_rebuild = 0;
        Ok(())
    }

    /// Counts one replacement update; rebuilds the backup once the count
    /// exceeds `tau`. Returns whether a rebuild ran.
    pub fn record_update(&mut self) -> Result<bool> {
        self.ops_since_rebuild += 1;
        self.total_ops += 1;
        if self.ops_since_rebuild > self.tau {
            self.build_backup()?;
            return Ok(true);
        }
        Ok(false)
    }

    pub fn mark_delete(&mut self, label: Label) -> Result<()> {
        self.main.mark_delete(label)
    }

    /// Replacement update on the main index followed by
    /// [`record_update`](Self::record_update).
    pub fn replace_update(
        &mut self,
        vector: &[f32],
        label: Label,
        strategy: UpdateStrategy,
    ) -> Result<(SlotId, bool)> {
        let slot = self.main.replace_update(vector, label, strategy)?;
        let rebuilt = self.record_update()?;
        Ok((slot, rebuilt))
    }

    pub fn dual_search(&self, query: &[f32], k: usize, ef: usize) -> Result<SearchResult> {
        Ok(self.dual_search_detailed(query, k, ef)?.combined)
    }

    pub fn dual_search_detailed(
        &self,
        query: &[f32],
        k: usize,
        ef: usize,
    ) -> Result<DualSearchOutcome> {
        let main = self.main.knn_search(query, k, ef)?;
        let metric = self.main.params().metric;
        let backup = match &self.backup {
            Some(b) => match b.knn_search(query, k, ef) {
                Ok(res) => SearchResult {
                    entries: res
                        .entries
                        .into_iter()
                        .filter_map(|(label, _)| {
                            let slot = self.main.slot_of(label)?;
                            if self.main.node(slot)?.is_deleted() {
                                return None;
                            }
                            Some((label, metric.eval(query, self.main.vector(slot))))
                        })
                        .collect(),
                },
                Err(IndexError::EmptyIndex) => SearchResult::default(),
                Err(e) => return Err(e),
            },
            None => SearchResult::default(),
        };

        let mut pool: Vec<(Label, f32)> = main
            .entries
            .iter()
            .chain(&backup.entries)
            .copied()
            .collect();
        pool.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut seen = BTreeSet::new();
        pool.retain(|(label, _)| seen.insert(*label));
        pool.truncate(k);
        Ok(DualSearchOutcome {
            main,
            backup,
            combined: SearchResult { entries: pool },
        })
    }

    /// Live labels of the main index an exhaustive dual query (entry point
    /// probe, `k = ef =` live count) does not return.
    pub fn unfindable_by_dual_search(&self) -> BTreeSet<Label> {
        let live = self.main.live_count();
        let Some(entry) = self.main.entry_point() else {
            return BTreeSet::new();
        };
        if live == 0 {
            return BTreeSet::new();
        }
        let probe = self.main.vector(entry).to_vec();
        let found: BTreeSet<Label> = self
            .dual_search(&probe, live, live)
            .map(|r| r.labels().into_iter().collect())
            .unwrap_or_default();
        self.main
            .live_labels()
            .into_iter()
            .filter(|l| !found.contains(l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::IndexParams;

    /// Entry cluster at 0..3 plus `stranded` points far away that nothing
    /// links to.
    fn stranded_index(stranded: usize) -> LayeredGraph {
        let mut g = LayeredGraph::new(IndexParams::new(4, 8), 1, 32).unwrap();
        let core: Vec<SlotId> = (0..4)
            .map(|i| g.add_unlinked(&[i as f32], Label(i), 0).unwrap())
            .collect();
        for &a in &core {
            g.set_neighbors(a, 0, core.iter().copied().filter(|&b| b != a).collect())
                .unwrap();
        }
        for j in 0..stranded {
            let s = g
                .add_unlinked(&[100.0 + j as f32], Label(100 + j as u64), 0)
                .unwrap();
            g.set_neighbors(s, 0, vec![core[0]]).unwrap();
        }
        g
    }

    #[test]
    fn no_unreachable_points_means_no_backup() {
        let mut d = DualIndex::new(stranded_index(0), 3).unwrap();
        d.build_backup().unwrap();
        assert_eq!(d.backup_len(), 0);
        assert!(d.backup().is_none());
    }

    #[test]
    fn backup_holds_stranded_points() {
        let mut d = DualIndex::new(stranded_index(3), 3).unwrap();
        d.build_backup().unwrap();
        assert_eq!(d.backup_len(), 3);
        assert!(d.unfindable_by_dual_search().is_empty());
        let first = d.backup_labels().clone();
        d.build_backup().unwrap();
        assert_eq!(d.backup_labels(), &first);
    }

    #[test]
    fn empty_backup_matches_main_search() {
        let d = DualIndex::new(stranded_index(0), 3).unwrap();
        let q = [1.2];
        assert_eq!(
            d.dual_search(&q, 2, 4).unwrap(),
            d.main().knn_search(&q, 2, 4).unwrap()
        );
    }

    #[test]
    fn backup_only_point_is_found() {
        let mut d = DualIndex::new(stranded_index(2), 3).unwrap();
        d.build_backup().unwrap();
        let res = d.dual_search(&[101.0], 1, 4).unwrap();
        assert_eq!(res.entries, vec![(Label(101), 0.0)]);
    }

    #[test]
    fn overlapping_hits_are_collapsed() {
        let mut d = DualIndex::new(stranded_index(1), 3).unwrap();
        d.build_backup().unwrap();
        // Link the stranded point back in: both indexes now return it.
        let stranded = d.main().slot_of(Label(100)).unwrap();
        let hub = d.main().slot_of(Label(3)).unwrap();
        let mut list = d.main().neighbors(hub, 0).to_vec();
        list.push(stranded);
        d.main_mut().set_neighbors(hub, 0, list).unwrap();
        let out = d.dual_search_detailed(&[100.0], 2, 8).unwrap();
        assert!(out.main.labels().contains(&Label(100)));
        assert!(out.backup.labels().contains(&Label(100)));
        let labels = out.combined.labels();
        assert_eq!(labels.iter().filter(|&&l| l == Label(100)).count(), 1);
    }

    #[test]
    fn deleted_labels_are_dropped_from_backup_hits() {
        let mut d = DualIndex::new(stranded_index(1), 3).unwrap();
        d.build_backup().unwrap();
        d.mark_delete(Label(100)).unwrap();
        let res = d.dual_search(&[100.0], 3, 8).unwrap();
        assert!(!res.labels().contains(&Label(100)));
    }

    #[test]
    fn rebuild_triggers_when_count_exceeds_tau() {
        let mut d = DualIndex::new(stranded_index(1), 3).unwrap();
        let fired: Vec<bool> = (0..4).map(|_| d.record_update().unwrap()).collect();
        assert_eq!(fired, vec![false, false, false, true]);
        assert_eq!(d.ops_since_rebuild(), 0);
        assert_eq!(d.rebuilds().len(), 1);
    }

    #[test]
    fn default_tau_cadence_with_ten_thousand_point_iterations() {
        let mut d = DualIndex::new(stranded_index(0), DEFAULT_TAU).unwrap();
        assert_eq!(d.tau(), 40_000);
        let mut rebuild_iterations = Vec::new();
        for iteration in 1..=12 {
            for _ in 0..10_000 {
                if d.record_update().unwrap() {
                    rebuild_iterations.push(iteration);
                }
            }
        }
        // 40,000 updates, i.e. four full iterations, elapse before each rebuild.
        assert_eq!(rebuild_iterations, vec![5, 9]);
        let gaps: Vec<u64> = d
            .rebuilds()
            .windows(2)
            .map(|w| w[1].at_update - w[0].at_update)
            .collect();
        assert_eq!(d.rebuilds()[0].at_update, 40_001);
        assert_eq!(gaps, vec![40_001]);
    }

    #[test]
    fn zero_tau_is_rejected() {
        assert!(DualIndex::new(stranded_index(0), 0).is_err());
    }
}
