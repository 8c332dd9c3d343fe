use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mnru_bench::{
    brute_force_gt, run_scenario, search_eval, vecs, write_metrics_csv, BenchError, DatasetSource,
    EvalPoint, Result, ScenarioConfig, ScenarioKind,
};
use mnru_index::{
    IndexError, IndexParams, Label, LayeredGraph, Metric, StrategyKind, UpdateStrategy, DEFAULT_TAU,
};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "mnru-bench",
    version,
    about = "Replay update scenarios against an HNSW index"
)]
struct Cli {
    /// Log level for diagnostics on stderr.
    #[arg(long, default_value = "info", global = true)]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index and save a snapshot.
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        index: IndexArgs,
        /// Snapshot path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an update scenario and write per-iteration metrics as CSV.
    RunScenario(ScenarioArgs),
    /// Print both unreachable-point counts of an index.
    Audit {
        /// Snapshot to audit; otherwise an index is built from --dataset.
        #[arg(long, conflicts_with = "dataset")]
        index_file: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<DatasetSource>,
        #[command(flatten)]
        index: IndexArgs,
    },
    /// Compute exact nearest neighbors and write them as ivecs.
    Gt {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "l2")]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep ef and report recall and mean query time as CSV.
    SearchEval {
        /// Snapshot to evaluate; otherwise an index is built from --dataset.
        #[arg(long)]
        index_file: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Query vectors; defaults to the dataset itself.
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Ground-truth ivecs aligned with the queries; computed when absent.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80,160,320")]
        ef: Vec<usize>,
        #[command(flatten)]
        index: IndexArgs,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct DataArgs {
    /// An .fvecs file, `synthetic:N:D` or `synthetic-uniform:N:D`.
    #[arg(long)]
    dataset: DatasetSource,
}

#[derive(Args, Clone)]
struct IndexArgs {
    #[arg(long = "M", default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    efc: usize,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    /// Seeds synthetic data, level sampling and scenario sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl IndexArgs {
    fn params(&self) -> IndexParams {
        IndexParams::new(self.m, self.efc)
            .with_metric(self.metric)
            .with_seed(self.seed)
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Recall query vectors; defaults to a seeded sample of the dataset.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    scenario: ScenarioKind,
    #[arg(long, default_value = "mn-ru-gamma")]
    strategy: StrategyKind,
    /// Overrides the strategy's default alpha.
    #[arg(long)]
    alpha: Option<f32>,
    #[arg(long)]
    iterations: usize,
    #[arg(long)]
    batch: usize,
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, default_value_t = 100)]
    ef: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: u64,
    #[arg(long)]
    dual_index: bool,
    /// Random scenario only: never sample currently unreachable points.
    #[arg(long)]
    exclude_unreachable: bool,
    /// Recall checkpoint every N iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    recall_stride: usize,
    /// Structure audit every N iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    audit_stride: usize,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(BenchError::file(p))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_snapshot(path: &Path) -> Result<LayeredGraph> {
    LayeredGraph::load(path).map_err(|e| match e {
        IndexError::Io(source) => BenchError::File {
            path: path.to_path_buf(),
            source,
        },
        other => other.into(),
    })
}

fn build_index(data: &[Vec<f32>], params: IndexParams) -> Result<LayeredGraph> {
    let start = Instant::now();
    let mut g = LayeredGraph::new(params, data[0].len(), data.len())?;
    for (i, v) in data.iter().enumerate() {
        g.insert(v, Label(i as u64))?;
    }
    tracing::info!(
        points = data.len(),
        seconds = start.elapsed().as_secs_f64(),
        "index built"
    );
    Ok(g)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { data, index, out } => {
            let rows = data.dataset.load(index.seed)?;
            let g = build_index(&rows, index.params())?;
            g.save(&out)?;
            println!("saved {} points to {}", g.live_count(), out.display());
        }
        Command::RunScenario(args) => {
            let rows = args.data.dataset.load(args.index.seed)?;
            let queries = args.queries.as_deref().map(vecs::load_fvecs).transpose()?;
            let mut strategy = UpdateStrategy::new(args.strategy);
            if let Some(alpha) = args.alpha {
                strategy = strategy.with_alpha(alpha);
            }
            let mut cfg = ScenarioConfig::new(args.scenario, args.iterations, args.batch);
            cfg.strategy = strategy;
            cfg.params = args.index.params();
            cfg.dual_index = args.dual_index;
            cfg.tau = args.tau;
            cfg.seed = args.index.seed;
            cfg.exclude_unreachable = args.exclude_unreachable;
            cfg.k = args.k;
            cfg.ef = args.ef;
            cfg.recall_stride = args.recall_stride;
            cfg.structure_audit_stride = args.audit_stride;
            let run = run_scenario(&cfg, &rows, queries.as_deref())?;
            write_metrics_csv(output(args.out.as_deref())?, &run.records)?;
        }
        Command::Audit {
            index_file,
            dataset,
            index,
        } => {
            let g = match (index_file, dataset) {
                (Some(path), _) => load_snapshot(&path)?,
                (None, Some(ds)) => build_index(&ds.load(index.seed)?, index.params())?,
                (None, None) => {
                    return Err(BenchError::Config(
                        "audit needs --index-file or --dataset".into(),
                    ))
                }
            };
            let report = g.reachability_report();
            let structure = g.audit_structure();
            println!("live_count={}", report.live_count);
            println!("indegree_zero_count={}", report.indegree_zero.len());
            println!(
                "search_unreachable_count={}",
                report.search_unreachable.len()
            );
            println!("structure_clean={}", structure.is_clean());
            if !structure.is_clean() {
                println!("{structure}");
            }
        }
        Command::Gt {
            data,
            queries,
            k,
            metric,
            out,
        } => {
            let rows = data.dataset.load(0)?;
            let queries = vecs::load_fvecs(&queries)?;
            let base: Vec<(Label, &[f32])> = rows
                .iter()
                .enumerate()
                .map(|(i, v)| (Label(i as u64), v.as_slice()))
                .collect();
            let gt = brute_force_gt(&base, &queries, k, metric)?;
            let ints: Vec<Vec<i32>> = gt
                .iter()
                .map(|row| row.iter().map(|l| l.0 as i32).collect())
                .collect();
            vecs::save_ivecs(&out, &ints)?;
            println!(
                "wrote {} rows of {k} neighbors to {}",
                ints.len(),
                out.display()
            );
        }
        Command::SearchEval {
            index_file,
            data,
            queries,
            gt,
            k,
            ef,
            index,
            out,
        } => {
            let rows = data.dataset.load(index.seed)?;
            let g = match index_file {
                Some(path) => load_snapshot(&path)?,
                None => build_index(&rows, index.params())?,
            };
            let queries = match queries {
                Some(p) => vecs::load_fvecs(p)?,
                None => rows.clone(),
            };
            let truth: Vec<Vec<Label>> = match gt {
                Some(p) => vecs::load_ivecs(p)?
                    .into_iter()
                    .map(|row| row.into_iter().map(|i| Label(i as u64)).collect())
                    .collect(),
                None => {
                    let base: Vec<(Label, &[f32])> = g.live_points().collect();
                    brute_force_gt(&base, &queries, k, g.params().metric)?
                }
            };
            let points = search_eval(&g, &queries, &truth, k, &ef)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(EvalPoint::CSV_HEADER)?;
            for p in points {
                w.write_record([
                    p.ef.to_string(),
                    p.k.to_string(),
                    p.recall.to_string(),
                    p.mean_query_seconds.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_new(&cli.log_level).unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
