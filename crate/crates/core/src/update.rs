//! Deletion and replacement insertion.
//!
//! A deletion only flags the slot. A later replacement insertion pops the
//! oldest deleted slot, repairs the neighborhood the deleted point leaves
//! behind, and installs the new point in the same slot with the deleted
//! point's level.
//!
//! Two repair families are provided:
//!
//! * [`StrategyKind::HnswRu`], the classic replaced update: every out-neighbor
//!   of the deleted point re-selects its list from the one-hop and two-hop
//!   neighborhood (a pool of order `M²`), which costs `O(M³)` per layer.
//! * The mutual-neighbor variants only re-wire out-neighbors that link back to
//!   the deleted point, choosing from their own list plus the deleted point's
//!   list (order `M`), `O(M²)` per layer.
//!
//! In every repair the new point already occupies the slot, so the slot is a
//! legitimate candidate (it stands for the new point). Other slots that are
//! still flagged deleted are never adopted as neighbors.

use std::fmt;
use std::str::FromStr;

use crate::error::{IndexError, Result};
use crate::graph::{Label, LayeredGraph, SlotId};
use crate::search::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Classic replaced update over one-hop and two-hop neighborhoods.
    HnswRu,
    /// Mutual neighbors re-wired from the shared one-hop + two-hop pool.
    MnRuAlpha,
    /// Mutual neighbors re-wired from their own list plus the deleted point's.
    MnRuBeta,
    /// As `MnRuBeta` with a looser pruning factor (alpha = 1.1).
    MnRuGamma,
    /// As `MnRuGamma`, also re-wiring two-hop nodes that link to the deleted point.
    MnThnRu,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::HnswRu,
        StrategyKind::MnRuAlpha,
        StrategyKind::MnRuBeta,
        StrategyKind::MnRuGamma,
        StrategyKind::MnThnRu,
    ];

    pub fn default_alpha(self) -> f32 {
        match self {
            StrategyKind::HnswRu | StrategyKind::MnRuAlpha | StrategyKind::MnRuBeta => 1.0,
            StrategyKind::MnRuGamma | StrategyKind::MnThnRu => 1.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::HnswRu => "hnsw-ru",
            StrategyKind::MnRuAlpha => "mn-ru-alpha",
            StrategyKind::MnRuBeta => "mn-ru-beta",
            StrategyKind::MnRuGamma => "mn-ru-gamma",
            StrategyKind::MnThnRu => "mn-thn-ru",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                format!("unknown strategy `{s}` (expected hnsw-ru, mn-ru-alpha, mn-ru-beta, mn-ru-gamma or mn-thn-ru)")
            })
    }
}

/// Replacement-insertion strategy with its pruning factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStrategy {
    pub kind: StrategyKind,
    pub alpha: f32,
}

impl UpdateStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            alpha: kind.default_alpha(),
        }
    }

    pub fn with_alpha(mut self, alpha: f32) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn hnsw_ru() -> Self {
        Self::new(StrategyKind::HnswRu)
    }

    pub fn mn_ru_alpha() -> Self {
        Self::new(StrategyKind::MnRuAlpha)
    }

    pub fn mn_ru_beta() -> Self {
        Self::new(StrategyKind::MnRuBeta)
    }

    pub fn mn_ru_gamma() -> Self {
        Self::new(StrategyKind::MnRuGamma)
    }

    pub fn mn_thn_ru() -> Self {
        Self::new(StrategyKind::MnThnRu)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(IndexError::InvalidParams(format!(
                "alpha must be >= 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

impl From<StrategyKind> for UpdateStrategy {
    fn from(kind: StrategyKind) -> Self {
        Self::new(kind)
    }
}

/// What a repair touched at one layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LayerRepair {
    pub layer: usize,
    /// Out-neighbors of the deleted slot.
    pub one_hop: Vec<SlotId>,
    /// Nodes whose lists were re-selected.
    pub repair_set: Vec<SlotId>,
    /// Candidate pool size per repaired node (distances evaluated), aligned
    /// with `repair_set`.
    pub candidate_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairPlan {
    pub deleted_slot: Option<SlotId>,
    pub layers: Vec<LayerRepair>,
}

impl RepairPlan {
    pub fn repaired_count(&self) -> usize {
        self.layers.iter().map(|l| l.repair_set.len()).sum()
    }
}

fn sorted_unique(mut v: Vec<SlotId>) -> Vec<SlotId> {
    v.sort_unstable();
    v.dedup();
    v
}

impl LayeredGraph {
    /// Flags `label` deleted and queues its slot for reuse. Adjacency is kept.
    pub fn mark_delete(&mut self, label: Label) -> Result<()> {
        let slot = self
            .slot_of(label)
            .ok_or(IndexError::LabelNotFound(label))?;
        let node = &mut self.nodes[slot.index()];
        if node.deleted {
            return Err(IndexError::AlreadyDeleted(label));
        }
        node.deleted = true;
        self.live_count -= 1;
        self.deleted_list.push_back(slot);
        Ok(())
    }

    /// Inserts `vector` under `label`, reusing the oldest deleted slot when
    /// there is one.
    pub fn replace_update(
        &mut self,
        vector: &[f32],
        label: Label,
        strategy: UpdateStrategy,
    ) -> Result<SlotId> {
        self.replace_update_traced(vector, label, strategy)
            .map(|(slot, _)| slot)
    }

    /// [`replace_update`](Self::replace_update) that also reports the repair
    /// it performed (`None` when it fell through to a plain insertion).
    pub fn replace_update_traced(
        &mut self,
        vector: &[f32],
        label: Label,
        strategy: UpdateStrategy,
    ) -> Result<(SlotId, Option<RepairPlan>)> {
        strategy.validate()?;
        self.check_dim(vector)?;
        if self.is_live(label) {
            return Err(IndexError::DuplicateLabel(label));
        }
        let Some(slot) = self.deleted_list.pop_front() else {
            return self.insert(vector, label).map(|slot| (slot, None));
        };
        let plan = match strategy.kind {
            StrategyKind::HnswRu => self.hnsw_ru_replace(slot, vector, label, strategy.alpha),
            _ => {
                let plan = self.repair_mutual(slot, vector, strategy);
                self.install(slot, vector, label);
                plan
            }
        };
        Ok((slot, Some(plan)))
    }

    /// The classic replaced update. Falls through to [`insert`](Self::insert)
    /// when no slot is deleted.
    pub fn hnsw_ru_insert(&mut self, vector: &[f32], label: Label) -> Result<SlotId> {
        self.replace_update(vector, label, UpdateStrategy::hnsw_ru())
    }

    /// Repairs the neighborhood of deleted `slot` with a mutual-neighbor
    /// strategy, with `vector` (the incoming point) staged into the slot.
    pub fn mn_repair(
        &mut self,
        slot: SlotId,
        vector: &[f32],
        strategy: UpdateStrategy,
    ) -> Result<RepairPlan> {
        strategy.validate()?;
        self.check_slot(slot)?;
        self.check_dim(vector)?;
        if !self.is_deleted(slot) {
            return Err(IndexError::SlotNotDeleted(slot));
        }
        if strategy.kind == StrategyKind::HnswRu {
            return Err(IndexError::InvalidParams(
                "mn_repair needs a mutual-neighbor strategy".into(),
            ));
        }
        Ok(self.repair_mutual(slot, vector, strategy))
    }

    /// Installs `vector` / `label` into deleted `slot`, keeping the slot's
    /// level, and links it like a regular insertion.
    pub fn mn_update_insert(
        &mut self,
        slot: SlotId,
        vector: &[f32],
        label: Label,
    ) -> Result<SlotId> {
        self.check_slot(slot)?;
        self.check_dim(vector)?;
        if !self.is_deleted(slot) {
            return Err(IndexError::SlotNotDeleted(slot));
        }
        if self.is_live(label) {
            return Err(IndexError::DuplicateLabel(label));
        }
        self.install(slot, vector, label);
        Ok(slot)
    }

    fn install(&mut self, slot: SlotId, vector: &[f32], label: Label) {
        self.write_vector(slot, vector);
        self.relabel(slot, label);
        let level = self.nodes[slot.index()].level;
        self.link(slot, level);
    }

    /// Candidate filter shared by all repairs: drop the repaired node itself
    /// and any other slot still flagged deleted.
    fn repair_candidates(&self, pool: &[SlotId], target: SlotId, replaced: SlotId) -> Vec<SlotId> {
        pool.iter()
            .copied()
            .filter(|&c| c != target && (c == replaced || !self.is_deleted(c)))
            .collect()
    }

    fn reselect(
        &mut self,
        target: SlotId,
        pool: &[SlotId],
        layer: usize,
        alpha: f32,
        trim: Option<usize>,
    ) -> usize {
        let mut scored: Vec<Candidate> = self.score_from(target, pool);
        let size = scored.len();
        if let Some(limit) = trim {
            if scored.len() > limit {
                scored.sort_by(|a, b| {
                    a.distance
                        .total_cmp(&b.distance)
                        .then(self.label_of(a.slot).cmp(&self.label_of(b.slot)))
                        .then(a.slot.cmp(&b.slot))
                });
                scored.truncate(limit);
            }
        }
        let kept = self.select_for(&mut scored, self.params.max_degree(layer), alpha);
        self.nodes[target.index()].neighbors[layer] = kept;
        size
    }

    fn hnsw_ru_replace(
        &mut self,
        slot: SlotId,
        vector: &[f32],
        label: Label,
        alpha: f32,
    ) -> RepairPlan {
        self.write_vector(slot, vector);
        let level = self.nodes[slot.index()].level;
        let efc = self.params.ef_construction;
        let mut plan = RepairPlan {
            deleted_slot: Some(slot),
            layers: Vec::new(),
        };
        for layer in 0..=level {
            let one_hop = self.neighbors(slot, layer).to_vec();
            if one_hop.is_empty() {
                continue;
            }
            let mut pool = one_hop.clone();
            pool.push(slot);
            for &v in &one_hop {
                pool.extend_from_slice(self.neighbors(v, layer));
            }
            let pool = sorted_unique(pool);
            let mut repair = LayerRepair {
                layer,
                one_hop: one_hop.clone(),
                ..Default::default()
            };
            for &v in &one_hop {
                let cands = self.repair_candidates(&pool, v, slot);
                let size = self.reselect(v, &cands, layer, alpha, Some(efc));
                repair.repair_set.push(v);
                repair.candidate_sizes.push(size);
            }
            plan.layers.push(repair);
        }
        self.relabel(slot, label);
        self.link(slot, level);
        plan
    }

    fn repair_mutual(
        &mut self,
        slot: SlotId,
        vector: &[f32],
        strategy: UpdateStrategy,
    ) -> RepairPlan {
        self.write_vector(slot, vector);
        let level = self.nodes[slot.index()].level;
        let mut plan = RepairPlan {
            deleted_slot: Some(slot),
            layers: Vec::new(),
        };
        for layer in 0..=level {
            let one_hop = self.neighbors(slot, layer).to_vec();
            let mut repair_set: Vec<SlotId> = one_hop
                .iter()
                .copied()
                .filter(|&v| self.neighbors(v, layer).contains(&slot))
                .collect();

            if strategy.kind == StrategyKind::MnThnRu {
                let mut two_hop: Vec<SlotId> = one_hop
                    .iter()
                    .flat_map(|&v| self.neighbors(v, layer).iter().copied())
                    .filter(|w| *w != slot && !one_hop.contains(w))
                    .collect();
                two_hop = sorted_unique(two_hop);
                repair_set.extend(
                    two_hop
                        .into_iter()
                        .filter(|&w| self.neighbors(w, layer).contains(&slot)),
                );
            }

            let shared_pool = if strategy.kind == StrategyKind::MnRuAlpha {
                let mut pool = one_hop.clone();
                pool.push(slot);
                for &v in &one_hop {
                    pool.extend_from_slice(self.neighbors(v, layer));
                }
                Some(sorted_unique(pool))
            } else {
                None
            };

            let mut repair = LayerRepair {
                layer,
                one_hop: one_hop.clone(),
                ..Default::default()
            };
            for &u in &repair_set {
                let pool = match &shared_pool {
                    Some(pool) => pool.clone(),
                    None => {
                        let mut pool = self.neighbors(u, layer).to_vec();
                        pool.extend_from_slice(&one_hop);
                        pool.push(slot);
                        sorted_unique(pool)
                    }
                };
                let cands = self.repair_candidates(&pool, u, slot);
                let size = self.reselect(u, &cands, layer, strategy.alpha, None);
                repair.candidate_sizes.push(size);
            }
            repair.repair_set = repair_set;
            plan.layers.push(repair);
        }
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::IndexParams;

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert_eq!(
            "MN_RU_GAMMA".parse::<StrategyKind>().unwrap(),
            StrategyKind::MnRuGamma
        );
        assert!("mn-ru-delta".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn default_alphas() {
        assert_eq!(UpdateStrategy::hnsw_ru().alpha, 1.0);
        assert_eq!(UpdateStrategy::mn_ru_alpha().alpha, 1.0);
        assert_eq!(UpdateStrategy::mn_ru_beta().alpha, 1.0);
        assert_eq!(UpdateStrategy::mn_ru_gamma().alpha, 1.1);
        assert_eq!(UpdateStrategy::mn_thn_ru().alpha, 1.1);
    }

    fn five_points() -> LayeredGraph {
        let mut g = LayeredGraph::new(IndexParams::new(4, 8).with_seed(1), 1, 8).unwrap();
        for i in 0..5u64 {
            g.insert(&[i as f32], Label(i)).unwrap();
        }
        g
    }

    #[test]
    fn mark_delete_queues_slot_and_hides_label() {
        let mut g = five_points();
        let slot = g.slot_of(Label(3)).unwrap();
        g.mark_delete(Label(3)).unwrap();
        assert_eq!(g.deleted_slots().collect::<Vec<_>>(), vec![slot]);
        let res = g.knn_search(&[0.0], 5, 8).unwrap();
        assert_eq!(res.len(), 4);
        assert!(!res.labels().contains(&Label(3)));
    }

    #[test]
    fn double_delete_and_unknown_label() {
        let mut g = five_points();
        g.mark_delete(Label(3)).unwrap();
        assert!(matches!(
            g.mark_delete(Label(3)),
            Err(IndexError::AlreadyDeleted(Label(3)))
        ));
        assert!(matches!(
            g.mark_delete(Label(42)),
            Err(IndexError::LabelNotFound(Label(42)))
        ));
    }

    #[test]
    fn deleting_everything_empties_results() {
        let mut g = five_points();
        for i in 0..5 {
            g.mark_delete(Label(i)).unwrap();
        }
        assert!(matches!(
            g.knn_search(&[0.0], 1, 4),
            Err(IndexError::EmptyIndex)
        ));
    }

    #[test]
    fn replace_reuses_slot_and_drains_deleted_list() {
        let mut g = five_points();
        let slot = g.slot_of(Label(2)).unwrap();
        g.mark_delete(Label(2)).unwrap();
        let got = g
            .replace_update(&[2.5], Label(10), UpdateStrategy::mn_ru_gamma())
            .unwrap();
        assert_eq!(got, slot);
        assert_eq!(g.slot_count(), 5);
        assert_eq!(g.live_count(), 5);
        assert_eq!(g.deleted_slots().len(), 0);
        assert_eq!(g.slot_of(Label(2)), None);
        assert!(g.audit_structure().is_clean());
    }

    #[test]
    fn replace_with_same_label_after_delete() {
        let mut g = five_points();
        g.mark_delete(Label(1)).unwrap();
        for s in [UpdateStrategy::hnsw_ru(), UpdateStrategy::mn_thn_ru()] {
            g.replace_update(&[1.0], Label(1), s).unwrap();
            assert!(g.is_live(Label(1)));
            g.mark_delete(Label(1)).unwrap();
        }
    }

    #[test]
    fn replace_rejects_live_label() {
        let mut g = five_points();
        g.mark_delete(Label(1)).unwrap();
        assert!(matches!(
            g.replace_update(&[9.0], Label(4), UpdateStrategy::mn_ru_beta()),
            Err(IndexError::DuplicateLabel(Label(4)))
        ));
        assert_eq!(g.deleted_slots().len(), 1);
    }

    #[test]
    fn mn_repair_requires_deleted_slot_and_mn_strategy() {
        let mut g = five_points();
        let slot = g.slot_of(Label(0)).unwrap();
        assert!(matches!(
            g.mn_repair(slot, &[0.0], UpdateStrategy::mn_ru_gamma()),
            Err(IndexError::SlotNotDeleted(_))
        ));
        g.mark_delete(Label(0)).unwrap();
        assert!(g
            .mn_repair(slot, &[0.0], UpdateStrategy::hnsw_ru())
            .is_err());
    }

    #[test]
    fn alpha_below_one_is_rejected() {
        let mut g = five_points();
        assert!(g
            .replace_update(
                &[7.0],
                Label(7),
                UpdateStrategy::mn_ru_gamma().with_alpha(0.5)
            )
            .is_err());
    }
}
