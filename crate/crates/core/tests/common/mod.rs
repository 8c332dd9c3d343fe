#![allow(dead_code)]

use mnru_index::{IndexParams, Label, LayeredGraph, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

pub fn uniform(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random()).collect())
        .collect()
}

pub fn build(points: &[Vec<f32>], params: IndexParams, capacity: usize) -> LayeredGraph {
    let mut g = LayeredGraph::new(params, points[0].len(), capacity).unwrap();
    for (i, p) in points.iter().enumerate() {
        g.insert(p, Label(i as u64)).unwrap();
    }
    g
}

/// Exact k nearest labels among `base`, ties by label.
pub fn exact_knn(base: &[(Label, Vec<f32>)], query: &[f32], k: usize) -> Vec<Label> {
    let mut scored: Vec<(f32, Label)> = base
        .iter()
        .map(|(l, v)| {
            let d: f32 = v.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, *l)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, l)| l).collect()
}

pub fn live_set(g: &LayeredGraph) -> Vec<(Label, Vec<f32>)> {
    g.live_points().map(|(l, v)| (l, v.to_vec())).collect()
}

pub fn recall(found: &[Label], truth: &[Label]) -> f64 {
    let hits = found
        .iter()
        .take(truth.len())
        .filter(|l| truth.contains(l))
        .count();
    hits as f64 / truth.len() as f64
}

pub fn l2(a: &[f32], b: &[f32]) -> f32 {
    Metric::L2.eval(a, b)
}

/// Adjacency of every slot, for before/after diffs.
pub fn adjacency(g: &LayeredGraph) -> Vec<Vec<Vec<u32>>> {
    g.nodes()
        .map(|(_, n)| {
            (0..=n.level())
                .map(|l| n.neighbors(l).iter().map(|s| s.0).collect())
                .collect()
        })
        .collect()
}
