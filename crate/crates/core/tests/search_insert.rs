mod common;

use common::*;
use mnru_index::{select_neighbors, IndexParams, Label, LayeredGraph, Metric};
use proptest::prelude::*;

fn points_strategy() -> impl Strategy<Value = (Vec<f32>, Vec<Vec<f32>>)> {
    (1usize..5).prop_flat_map(|dim| {
        (
            prop::collection::vec(-10.0f32..10.0, dim),
            prop::collection::vec(prop::collection::vec(-10.0f32..10.0, dim), 1..24),
        )
    })
}

proptest! {
    #[test]
    fn selection_is_bounded_subset_keeping_closest(
        (query, cands) in points_strategy(),
        m in 1usize..8,
        alpha in 1.0f32..2.0,
    ) {
        let keyed: Vec<(u32, &[f32])> = cands.iter().enumerate().map(|(i, v)| (i as u32, v.as_slice())).collect();
        let kept = select_neighbors(&query, &keyed, m, alpha, Metric::L2);
        prop_assert!(kept.len() <= m);
        prop_assert!(!kept.is_empty());
        for k in &kept {
            prop_assert!((*k as usize) < cands.len());
        }
        let mut uniq = kept.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), kept.len());
        let closest = (0..cands.len() as u32)
            .min_by(|&a, &b| l2(&query, &cands[a as usize]).total_cmp(&l2(&query, &cands[b as usize])).then(a.cmp(&b)))
            .unwrap();
        prop_assert_eq!(kept[0], closest);
    }

    /// A candidate kept at alpha = 1 can only lose its place at alpha = 1.1
    /// to an occluder that alpha = 1 had pruned.
    #[test]
    fn larger_alpha_only_drops_edges_through_extra_occluders((query, cands) in points_strategy()) {
        let keyed: Vec<(u32, &[f32])> = cands.iter().enumerate().map(|(i, v)| (i as u32, v.as_slice())).collect();
        let unbounded = cands.len() + 1;
        let strict = select_neighbors(&query, &keyed, unbounded, 1.0, Metric::L2);
        let loose = select_neighbors(&query, &keyed, unbounded, 1.1, Metric::L2);
        prop_assert_eq!(strict[0], loose[0]);
        let euclid = |a: &[f32], b: &[f32]| l2(a, b).sqrt();
        for &e in &strict {
            if loose.contains(&e) {
                continue;
            }
            let ev = &cands[e as usize];
            let occluded = loose.iter().filter(|s| !strict.contains(s)).any(|&s| {
                1.1 * euclid(&cands[s as usize], ev) <= euclid(&query, ev) * (1.0 + 1e-5)
            });
            prop_assert!(occluded, "{e} dropped at 1.1 without a new occluder");
        }
    }

    #[test]
    fn larger_alpha_keeps_a_superset_when_no_new_occluder_interferes(
        (query, cands) in points_strategy(),
    ) {
        // Two candidates only: the second one's fate depends on the first alone.
        prop_assume!(cands.len() >= 2);
        let pair = &cands[..2];
        let keyed: Vec<(u32, &[f32])> = pair.iter().enumerate().map(|(i, v)| (i as u32, v.as_slice())).collect();
        let strict = select_neighbors(&query, &keyed, 3, 1.0, Metric::L2);
        let loose = select_neighbors(&query, &keyed, 3, 1.1, Metric::L2);
        for k in &strict {
            prop_assert!(loose.contains(k));
        }
    }

    #[test]
    fn knn_never_returns_deleted_labels(
        seed in 0u64..1000,
        deletions in prop::collection::vec(0u64..200, 0..120),
    ) {
        let pts = uniform(200, 4, seed);
        let mut g = build(&pts, IndexParams::new(6, 24).with_seed(seed), 200);
        let mut deleted = std::collections::BTreeSet::new();
        for l in deletions {
            if deleted.insert(l) {
                g.mark_delete(Label(l)).unwrap();
            }
        }
        let live = g.live_count();
        prop_assume!(live > 0);
        for q in uniform(5, 4, seed + 7) {
            let res = g.knn_search(&q, live.min(10), 40).unwrap();
            for l in res.labels() {
                prop_assert!(!deleted.contains(&l.0));
            }
            let labels = res.labels();
            let mut uniq = labels.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), labels.len());
            prop_assert!(res.entries.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }
}

#[test]
fn recall_on_ten_thousand_points() {
    let pts = gaussian(10_000, 32, 11);
    let g = build(&pts, IndexParams::new(16, 200).with_seed(11), 10_000);
    let base = live_set(&g);
    let queries = gaussian(100, 32, 12);
    let mean: f64 = queries
        .iter()
        .map(|q| {
            recall(
                &g.knn_search(q, 10, 100).unwrap().labels(),
                &exact_knn(&base, q, 10),
            )
        })
        .sum::<f64>()
        / queries.len() as f64;
    assert!(mean >= 0.90, "recall@10 = {mean}");
}

#[test]
fn exhaustive_ef_gives_perfect_recall_on_connected_index() {
    let pts = uniform(600, 8, 3);
    let g = build(&pts, IndexParams::new(8, 64).with_seed(3), 600);
    assert!(g.traversal_unreachable().is_empty());
    let base = live_set(&g);
    for q in uniform(20, 8, 4) {
        let res = g.knn_search(&q, 10, 600).unwrap();
        assert_eq!(recall(&res.labels(), &exact_knn(&base, &q, 10)), 1.0);
    }
}

#[test]
fn thousand_point_build_is_structurally_clean() {
    let pts = uniform(1000, 16, 21);
    let g = build(&pts, IndexParams::new(16, 200).with_seed(21), 1000);
    let report = g.audit_structure();
    assert!(report.is_clean(), "{report}");
    let ep = g.entry_point().unwrap();
    assert_eq!(g.node(ep).unwrap().level(), g.max_layer());
}

#[test]
fn construction_is_reproducible() {
    let pts = uniform(800, 8, 5);
    let a = build(&pts, IndexParams::new(8, 40).with_seed(99), 800);
    let b = build(&pts, IndexParams::new(8, 40).with_seed(99), 800);
    assert_eq!(adjacency(&a), adjacency(&b));
    assert_eq!(a.entry_point(), b.entry_point());
}

#[test]
fn other_metrics_find_self_matches() {
    for metric in [Metric::InnerProduct, Metric::Cosine] {
        let mut pts = uniform(300, 6, 8);
        for p in &mut pts {
            let n = p.iter().map(|x| x * x).sum::<f32>().sqrt();
            p.iter_mut().for_each(|x| *x /= n);
        }
        let g = build(&pts, IndexParams::new(8, 64).with_metric(metric), 300);
        assert!(g.audit_structure().is_clean());
        let hits = g.knn_search(&pts[17], 1, 64).unwrap();
        assert_eq!(hits.labels(), vec![Label(17)], "{metric}");
    }
}

#[test]
fn layer_search_on_line_matches_sorted_distances() {
    let mut g = LayeredGraph::new(IndexParams::new(4, 8), 1, 8).unwrap();
    let slots: Vec<_> = (0..5)
        .map(|i| g.add_unlinked(&[i as f32], Label(i), 0).unwrap())
        .collect();
    for &a in &slots {
        g.set_neighbors(a, 0, slots.iter().copied().filter(|&b| b != a).collect())
            .unwrap();
    }
    let q = [2.2f32];
    let mut oracle: Vec<_> = slots.iter().map(|&s| (l2(&q, g.vector(s)), s)).collect();
    oracle.sort_by(|a, b| a.0.total_cmp(&b.0));
    let got: Vec<_> = g
        .search_layer(&q, &[slots[0]], 3, 0)
        .unwrap()
        .iter()
        .map(|c| c.slot)
        .collect();
    let want: Vec<_> = oracle.iter().take(3).map(|(_, s)| *s).collect();
    assert_eq!(got, want);
}
