//! Update scenarios replayed against an index, with per-iteration metrics.
//!
//! * `full_coverage`: the dataset is cut into `iterations` equal segments;
//!   iteration `t` deletes segment `t` and reinserts the same points.
//! * `random`: each iteration samples `batch_size` distinct live labels,
//!   deletes them and reinserts the same points. With `exclude_unreachable`
//!   the sample skips points that are already search-unreachable.
//! * `new_data`: the index starts with the first half of the dataset; each
//!   iteration deletes the next `batch_size` old points and inserts the next
//!   `batch_size` points of the second half.
//!
//! Only the deletes and replacement updates are timed. Audits, backup
//! rebuilds and recall checkpoints run outside the timer.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use mnru_index::{DualIndex, IndexParams, Label, LayeredGraph, UpdateStrategy, DEFAULT_TAU};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tracing::{debug, info};

use crate::error::{BenchError, Result};
use crate::ground_truth::{live_gt, recall_at_k};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    FullCoverage,
    Random,
    NewData,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::FullCoverage => "full_coverage",
            Self::Random => "random",
            Self::NewData => "new_data",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "full_coverage" => Ok(Self::FullCoverage),
            "random" => Ok(Self::Random),
            "new_data" => Ok(Self::NewData),
            _ => Err(BenchError::Config(format!("unknown scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub iterations: usize,
    pub batch_size: usize,
    pub strategy: UpdateStrategy,
    pub params: IndexParams,
    pub dual_index: bool,
    pub tau: u64,
    /// Seeds label sampling and the recall query sample.
    pub seed: u64,
    pub exclude_unreachable: bool,
    pub k: usize,
    pub ef: usize,
    /// Recall checkpoint every `recall_stride` iterations; 0 disables.
    pub recall_stride: usize,
    /// Queries drawn from the dataset when none are supplied.
    pub recall_queries: usize,
    /// `audit_structure` every `structure_audit_stride` iterations; 0 disables.
    pub structure_audit_stride: usize,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, iterations: usize, batch_size: usize) -> Self {
        Self {
            kind,
            iterations,
            batch_size,
            strategy: UpdateStrategy::hnsw_ru(),
            params: IndexParams::default(),
            dual_index: false,
            tau: DEFAULT_TAU,
            seed: 0,
            exclude_unreachable: false,
            k: 10,
            ef: 100,
            recall_stride: 0,
            recall_queries: 100,
            structure_audit_stride: 0,
        }
    }

    /// Index size before the first iteration.
    pub fn initial_size(&self, dataset_len: usize) -> usize {
        match self.kind {
            ScenarioKind::NewData => dataset_len / 2,
            _ => dataset_len,
        }
    }

    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        self.params.validate()?;
        if self.iterations == 0 || self.batch_size == 0 {
            return fail("iterations and batch size must be positive".into());
        }
        if self.k == 0 || self.ef < self.k {
            return fail(format!(
                "need 1 <= k <= ef, got k = {} and ef = {}",
                self.k, self.ef
            ));
        }
        if self.dual_index && self.tau == 0 {
            return fail("tau must be positive".into());
        }
        let total = self.iterations.saturating_mul(self.batch_size);
        match self.kind {
            ScenarioKind::FullCoverage if total != dataset_len => fail(format!(
                "full_coverage needs iterations x batch ({total}) == dataset size ({dataset_len})"
            )),
            ScenarioKind::Random if self.batch_size > dataset_len => fail(format!(
                "batch {} exceeds dataset size {dataset_len}",
                self.batch_size
            )),
            ScenarioKind::NewData if dataset_len < 2 => {
                fail("new_data needs at least two points".into())
            }
            ScenarioKind::NewData if total > dataset_len / 2 => fail(format!(
                "new_data needs iterations x batch ({total}) <= half the dataset ({})",
                dataset_len / 2
            )),
            _ if self.recall_stride > 0 && self.k > self.initial_size(dataset_len) => {
                fail(format!("k = {} exceeds the index size", self.k))
            }
            _ => Ok(()),
        }
    }
}

/// One CSV row per iteration. `update_wall_time` is the only timing column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    /// Seconds spent in deletes and replacement updates.
    pub update_wall_time: f64,
    pub ops: usize,
    pub live_count: usize,
    pub indegree_zero_count: usize,
    pub search_unreachable_count: usize,
    pub recall_at_k: Option<f64>,
    pub ef: usize,
    pub k: usize,
    pub structure_clean: Option<bool>,
    pub rebuilt: bool,
    pub backup_size: Option<usize>,
    /// Live points an exhaustive dual query misses.
    pub dual_unfindable_count: Option<usize>,
}

pub const METRICS_CSV_HEADER: &str = "iteration,update_wall_time,ops,live_count,indegree_zero_count,\
search_unreachable_count,recall_at_k,ef,k,structure_clean,rebuilt,backup_size,dual_unfindable_count";

impl MetricsRecord {
    pub fn mean_op_seconds(&self) -> f64 {
        if self.ops == 0 {
            0.0
        } else {
            self.update_wall_time / self.ops as f64
        }
    }
}

pub fn write_metrics_csv<W: Write>(w: W, records: &[MetricsRecord]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(METRICS_CSV_HEADER.split(','))?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct ScenarioRun {
    pub records: Vec<MetricsRecord>,
    pub index: DualIndex,
}

impl ScenarioRun {
    pub fn total_update_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.update_wall_time).sum()
    }

    pub fn mean_op_seconds(&self) -> f64 {
        let ops: usize = self.records.iter().map(|r| r.ops).sum();
        if ops == 0 {
            0.0
        } else {
            self.total_update_seconds() / ops as f64
        }
    }
}

/// Builds the initial index from `data` (label `i` for row `i`) and replays
/// the scenario. `queries` defaults to a seeded sample of `data`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    data: &[Vec<f32>],
    queries: Option<&[Vec<f32>]>,
) -> Result<ScenarioRun> {
    if data.is_empty() {
        return Err(BenchError::Input("empty dataset".into()));
    }
    cfg.validate(data.len())?;
    let dim = data[0].len();
    if let Some(i) = data.iter().position(|v| v.len() != dim) {
        return Err(BenchError::Input(format!(
            "row {i} has dimension {} instead of {dim}",
            data[i].len()
        )));
    }
    let initial = cfg.initial_size(data.len());
    let mut main = LayeredGraph::new(cfg.params.clone(), dim, initial)?;
    let build_start = Instant::now();
    for (i, v) in data[..initial].iter().enumerate() {
        main.insert(v, Label(i as u64))?;
    }
    info!(
        points = initial,
        seconds = build_start.elapsed().as_secs_f64(),
        "built initial index"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampled_queries: Vec<Vec<f32>>;
    let queries: &[Vec<f32>] = match queries {
        Some(q) => q,
        None => {
            let mut qrng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            let n = cfg.recall_queries.min(data.len());
            sampled_queries = sample(&mut qrng, data.len(), n)
                .into_iter()
                .map(|i| data[i].clone())
                .collect();
            &sampled_queries
        }
    };

    let mut dual = DualIndex::new(main, cfg.tau.max(1))?;
    let mut unreachable: BTreeSet<Label> = if cfg.exclude_unreachable {
        dual.main().unreachable_by_search()
    } else {
        BTreeSet::new()
    };
    let mut records = Vec::with_capacity(cfg.iterations);

    for iteration in 1..=cfg.iterations {
        let t = iteration - 1;
        let b = cfg.batch_size;
        let (victims, arrivals): (Vec<Label>, Vec<(Label, usize)>) = match cfg.kind {
            ScenarioKind::FullCoverage => {
                let labels: Vec<usize> = (t * b..(t + 1) * b).collect();
                (
                    labels.iter().map(|&i| Label(i as u64)).collect(),
                    labels.iter().map(|&i| (Label(i as u64), i)).collect(),
                )
            }
            ScenarioKind::Random => {
                let pool: Vec<Label> = dual
                    .main()
                    .live_labels()
                    .into_iter()
                    .filter(|l| !unreachable.contains(l))
                    .collect();
                let amount = b.min(pool.len());
                let picked: Vec<Label> = sample(&mut rng, pool.len(), amount)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect();
                let arrivals = picked.iter().map(|&l| (l, l.0 as usize)).collect();
                (picked, arrivals)
            }
            ScenarioKind::NewData => {
                let old: Vec<Label> = (t * b..(t + 1) * b).map(|i| Label(i as u64)).collect();
                let new = (t * b..(t + 1) * b)
                    .map(|i| (Label((initial + i) as u64), initial + i))
                    .collect();
                (old, new)
            }
        };

        let mut elapsed = 0.0f64;
        let mut rebuilt = false;
        let start = Instant::now();
        for &label in &victims {
            dual.mark_delete(label)?;
        }
        elapsed += start.elapsed().as_secs_f64();
        for &(label, row) in &arrivals {
            let start = Instant::now();
            dual.main_mut()
                .replace_update(&data[row], label, cfg.strategy)?;
            elapsed += start.elapsed().as_secs_f64();
            if cfg.dual_index && dual.record_update()? {
                rebuilt = true;
                info!(
                    iteration,
                    unreachable = dual.backup_len(),
                    "backup index rebuilt"
                );
            }
        }

        let report = dual.main().reachability_report();
        if cfg.exclude_unreachable {
            unreachable = report.search_unreachable.clone();
        }
        let structure_clean = (cfg.structure_audit_stride > 0
            && iteration % cfg.structure_audit_stride == 0)
            .then(|| dual.main().audit_structure().is_clean());
        let recall = if cfg.recall_stride > 0 && iteration % cfg.recall_stride == 0 {
            Some(checkpoint_recall(&dual, cfg, queries)?)
        } else {
            None
        };
        let record = MetricsRecord {
            iteration,
            update_wall_time: elapsed,
            ops: arrivals.len(),
            live_count: report.live_count,
            indegree_zero_count: report.indegree_zero.len(),
            search_unreachable_count: report.search_unreachable.len(),
            recall_at_k: recall,
            ef: cfg.ef,
            k: cfg.k,
            structure_clean,
            rebuilt,
            backup_size: cfg.dual_index.then(|| dual.backup_len()),
            dual_unfindable_count: cfg
                .dual_index
                .then(|| dual.unfindable_by_dual_search().len()),
        };
        debug!(?record, "iteration done");
        records.push(record);
    }
    Ok(ScenarioRun {
        records,
        index: dual,
    })
}

fn checkpoint_recall(dual: &DualIndex, cfg: &ScenarioConfig, queries: &[Vec<f32>]) -> Result<f64> {
    if queries.is_empty() {
        return Ok(0.0);
    }
    let k = cfg.k.min(dual.main().live_count());
    let gt = live_gt(dual.main(), queries, k)?;
    let mut sum = 0.0;
    for (q, truth) in queries.iter().zip(&gt) {
        let res = if cfg.dual_index {
            dual.dual_search(q, k, cfg.ef)?
        } else {
            dual.main().knn_search(q, k, cfg.ef)?
        };
        sum += recall_at_k(&res.labels(), truth, k)?;
    }
    Ok(sum / queries.len() as f64)
}
