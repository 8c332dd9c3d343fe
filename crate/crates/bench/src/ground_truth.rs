//! Exact nearest neighbors and recall.

use std::collections::BinaryHeap;
use std::time::Instant;

use mnru_index::{Label, LayeredGraph, Metric, SearchResult};

use crate::error::{BenchError, Result};

#[derive(PartialEq)]
struct Scored(f32, Label);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Exact `k` nearest labels of each query by full scan, ties by ascending
/// label.
pub fn brute_force_gt(
    base: &[(Label, &[f32])],
    queries: &[Vec<f32>],
    k: usize,
    metric: Metric,
) -> Result<Vec<Vec<Label>>> {
    if k == 0 || k > base.len() {
        return Err(BenchError::Input(format!(
            "k = {k} must be in 1..={}",
            base.len()
        )));
    }
    let dim = base[0].1.len();
    if let Some((l, _)) = base.iter().find(|(_, v)| v.len() != dim) {
        return Err(BenchError::Input(format!(
            "base vector {l} has a different dimension"
        )));
    }
    if let Some(i) = queries.iter().position(|q| q.len() != dim) {
        return Err(BenchError::Input(format!(
            "query {i} has dimension {} instead of {dim}",
            queries[i].len()
        )));
    }
    Ok(queries
        .iter()
        .map(|q| {
            let mut heap = BinaryHeap::with_capacity(k + 1);
            for &(label, v) in base {
                let item = Scored(metric.eval(q, v), label);
                if heap.len() < k {
                    heap.push(item);
                } else if item < *heap.peek().expect("heap holds k items") {
                    heap.pop();
                    heap.push(item);
                }
            }
            heap.into_sorted_vec().into_iter().map(|s| s.1).collect()
        })
        .collect())
}

/// Ground truth over the live points of an index.
pub fn live_gt(index: &LayeredGraph, queries: &[Vec<f32>], k: usize) -> Result<Vec<Vec<Label>>> {
    let base: Vec<(Label, &[f32])> = index.live_points().collect();
    brute_force_gt(&base, queries, k, index.params().metric)
}

/// `|first-k(result) ∩ first-k(gt)| / k`. Short results still divide by `k`.
pub fn recall_at_k(result: &[Label], gt: &[Label], k: usize) -> Result<f64> {
    if k == 0 || gt.len() < k {
        return Err(BenchError::Input(format!(
            "ground truth has {} labels, need k = {k}",
            gt.len()
        )));
    }
    let truth = &gt[..k];
    let hits = result.iter().take(k).filter(|l| truth.contains(l)).count();
    Ok(hits as f64 / k as f64)
}

pub fn mean_recall(results: &[SearchResult], gt: &[Vec<Label>], k: usize) -> Result<f64> {
    if results.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (r, g) in results.iter().zip(gt) {
        sum += recall_at_k(&r.labels(), g, k)?;
    }
    Ok(sum / results.len() as f64)
}

/// One point of a recall / latency curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub ef: usize,
    pub k: usize,
    pub recall: f64,
    pub mean_query_seconds: f64,
}

impl EvalPoint {
    pub const CSV_HEADER: [&'static str; 4] = ["ef", "k", "recall_at_k", "mean_query_seconds"];
}

/// Sweeps `efs`, timing `knn_search` over all queries at each setting.
pub fn search_eval(
    index: &LayeredGraph,
    queries: &[Vec<f32>],
    gt: &[Vec<Label>],
    k: usize,
    efs: &[usize],
) -> Result<Vec<EvalPoint>> {
    if queries.len() != gt.len() {
        return Err(BenchError::Input(format!(
            "{} queries but {} ground-truth rows",
            queries.len(),
            gt.len()
        )));
    }
    let mut points = Vec::with_capacity(efs.len());
    for &ef in efs {
        let start = Instant::now();
        let results = queries
            .iter()
            .map(|q| index.knn_search(q, k, ef.max(k)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let elapsed = start.elapsed().as_secs_f64();
        points.push(EvalPoint {
            ef,
            k,
            recall: mean_recall(&results, gt, k)?,
            mean_query_seconds: elapsed / queries.len().max(1) as f64,
        });
    }
    Ok(points)
}
