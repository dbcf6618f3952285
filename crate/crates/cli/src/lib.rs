//! Command implementations behind the `spadas` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use spadas_core::io::{
    generate_synthetic, load_index, load_points, save_index, Delimiter, Distribution, Manifest, SyntheticSpec,
};
use spadas_core::search::{
    exemplar_search, nn_point_search, range_dataset_search, range_point_search, RangeQuery,
};
use spadas_core::{EpsilonPolicy, Index64, MetricKind, PointSet};
use spadas_server::{
    round_score, AppState, Hit, HitsResponse, IdsResponse, NnPairJson, NnResponse, PointsResponse, ServeConfig,
    DEFAULT_BODY_LIMIT,
};

pub mod bench;

#[derive(Debug, Parser)]
#[command(name = "spadas", version, about = "Spatial dataset search over a two-level index")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a manifest and save it.
    Build(BuildArgs),
    /// Write a seeded synthetic repository (CSV files plus manifest).
    Generate(GenerateArgs),
    /// Run one search against a saved index.
    Search {
        #[command(subcommand)]
        kind: SearchKind,
    },
    /// Time index searches against scans and write CSV.
    Bench(bench::BenchArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, env = "SPADAS_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Grid resolution; defaults to the manifest's value.
    #[arg(long)]
    pub theta: Option<u32>,
    /// Leaf capacity of both index levels; defaults to the manifest's value.
    #[arg(long)]
    pub leaf_capacity: Option<usize>,
    #[arg(long)]
    pub no_outlier_removal: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "clustered")]
    pub distribution: Distribution,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_rate: f64,
    #[arg(long, env = "SPADAS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, env = "SPADAS_INDEX")]
    pub index: PathBuf,
    #[arg(long, env = "SPADAS_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum SearchKind {
    /// Datasets whose box meets a rectangle.
    Range {
        #[command(flatten)]
        common: Common,
        /// Lower corner as `x,y`.
        #[arg(long, value_parser = parse_corner, allow_hyphen_values = true)]
        lo: [f64; 2],
        /// Upper corner as `x,y`.
        #[arg(long, value_parser = parse_corner, allow_hyphen_values = true)]
        hi: [f64; 2],
    },
    /// Top-k datasets most similar to a query point file.
    Exemplar {
        #[command(flatten)]
        common: Common,
        /// Delimited point file (comma or tab, optional header).
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_parser = parse_metric, default_value = "haus_exact")]
        metric: MetricKind,
        #[arg(short, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Approximation threshold for `haus_approx`; defaults to one grid cell.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Points of one dataset inside a rectangle.
    PointsRange {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: u64,
        #[arg(long, value_parser = parse_corner, allow_hyphen_values = true)]
        lo: [f64; 2],
        #[arg(long, value_parser = parse_corner, allow_hyphen_values = true)]
        hi: [f64; 2],
    },
    /// Nearest point of one dataset for every query point.
    PointsNn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: u64,
        #[arg(long)]
        query: PathBuf,
        /// Run the Hausdorff phase first and reuse its queue.
        #[arg(long)]
        warm_start: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SPADAS_INDEX")]
    pub index: PathBuf,
    #[arg(long, env = "SPADAS_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Directory of static files served for non-API paths.
    #[arg(long = "static", env = "SPADAS_STATIC")]
    pub static_dir: Option<PathBuf>,
    /// Largest accepted request body in bytes.
    #[arg(long, env = "SPADAS_BODY_LIMIT", default_value_t = DEFAULT_BODY_LIMIT)]
    pub body_limit: usize,
}

fn parse_corner(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts.as_slice() else {
        return Err(format!("expected x,y but got {s:?}"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([num(x)?, num(y)?])
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: spadas_core::Error| e.to_string())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Build(a) => build(&a, out),
        Command::Generate(a) => generate(&a, out),
        Command::Search { kind } => search(kind, out),
        Command::Bench(a) => bench::run(&a, out),
        Command::Serve(a) => serve(a),
    }
}

fn build(a: &BuildArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = Manifest::from_path(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let mut params = manifest.index_params();
    if let Some(t) = a.theta {
        params.theta = t;
    }
    if let Some(f) = a.leaf_capacity {
        params.leaf_capacity = f;
    }
    params.outlier_removal = !a.no_outlier_removal;
    let started = Instant::now();
    let loaded = manifest.load::<f64>()?;
    for (id, rows) in &loaded.rejected {
        writeln!(out, "dataset {id}: {} rejected rows (first at line {})", rows.len(), rows[0].line)?;
    }
    let (index, report) = Index64::build_with(&loaded.repository, params)?;
    save_index(&index, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "datasets:      {}", index.len())?;
    writeln!(out, "build time:    {:.3} s", report.elapsed.as_secs_f64())?;
    match report.r_prime {
        Some(r) => writeln!(out, "r':            {r}")?,
        None => writeln!(out, "r':            disabled")?,
    }
    writeln!(out, "removed points: {}", report.removed_points)?;
    writeln!(out, "total time:    {:.3} s", started.elapsed().as_secs_f64())?;
    Ok(())
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        datasets: a.datasets,
        points: a.points,
        dim: a.dim,
        distribution: a.distribution,
        outlier_rate: a.outlier_rate,
        seed: a.seed,
        ..SyntheticSpec::default()
    };
    let syn = generate_synthetic::<f64>(&spec)?;
    let path = syn.write_to(&a.out, &a.name)?;
    let planted: usize = syn.labels.iter().map(|l| l.iter().filter(|&&x| x).count()).sum();
    writeln!(out, "wrote {} ({} datasets, {planted} planted outliers)", path.display(), a.datasets)?;
    Ok(())
}

fn read_query(path: &Path, index: &Index64) -> Result<PointSet<f64>> {
    let loaded = load_points::<f64>(path, index.dim(), Delimiter::Auto)
        .with_context(|| format!("reading query {}", path.display()))?;
    if !loaded.rejected.is_empty() {
        log::warn!("{}: skipped {} rows", path.display(), loaded.rejected.len());
    }
    Ok(loaded.points)
}

fn open(common: &Common) -> Result<Index64> {
    load_index(&common.index).with_context(|| format!("loading {}", common.index.display()))
}

fn emit<T: serde::Serialize>(out: &mut dyn Write, format: Format, value: &T, text: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer(&mut *out, value)?;
            writeln!(out)?;
        }
        Format::Text => text(out)?,
    }
    Ok(())
}

fn coords(p: &[f64]) -> String {
    p.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Answers a search the way the HTTP service would.
pub fn search(kind: SearchKind, out: &mut dyn Write) -> Result<()> {
    match kind {
        SearchKind::Range { common, lo, hi } => {
            let index = open(&common)?;
            let ids = range_dataset_search(&index, &RangeQuery::new(lo, hi)?);
            emit(out, common.format, &IdsResponse { ids: ids.clone() }, |w| {
                for id in &ids {
                    writeln!(w, "{id}")?;
                }
                Ok(())
            })
        }
        SearchKind::Exemplar {
            common,
            query,
            metric,
            k,
            epsilon,
        } => {
            let index = open(&common)?;
            let q = read_query(&query, &index)?;
            let eps = epsilon.map(EpsilonPolicy::new).transpose()?;
            let hits = exemplar_search(&index, &q, metric, k as usize, eps)?;
            let resp = HitsResponse {
                hits: hits
                    .iter()
                    .map(|h| Hit {
                        id: h.dataset_id,
                        score: round_score(h.score),
                        rank: h.rank,
                    })
                    .collect(),
            };
            emit(out, common.format, &resp, |w| {
                writeln!(w, "{:>4}  {:>10}  {:>20}", "rank", "id", "score")?;
                for h in &resp.hits {
                    writeln!(w, "{:>4}  {:>10}  {:>20}", h.rank, h.id, h.score)?;
                }
                Ok(())
            })
        }
        SearchKind::PointsRange { common, dataset, lo, hi } => {
            let index = open(&common)?;
            let (ids, pts) = range_point_search(&index, dataset, &RangeQuery::new(lo, hi)?)?;
            let resp = PointsResponse {
                ids,
                points: pts.iter().map(<[f64]>::to_vec).collect(),
            };
            emit(out, common.format, &resp, |w| {
                for (id, p) in resp.ids.iter().zip(&resp.points) {
                    writeln!(w, "{id:>8}  {}", coords(p))?;
                }
                Ok(())
            })
        }
        SearchKind::PointsNn {
            common,
            dataset,
            query,
            warm_start,
        } => {
            let index = open(&common)?;
            let q = read_query(&query, &index)?;
            let pairs = nn_point_search(&index, &q, dataset, warm_start)?;
            let resp = NnResponse {
                pairs: pairs
                    .into_iter()
                    .map(|p| NnPairJson {
                        query: p.query_index,
                        nn: p.nn,
                        nn_id: p.nn_index,
                        dist: round_score(p.distance),
                    })
                    .collect(),
            };
            emit(out, common.format, &resp, |w| {
                writeln!(w, "{:>8}  {:>8}  {:>20}  nn", "query", "nn_id", "dist")?;
                for p in &resp.pairs {
                    writeln!(w, "{:>8}  {:>8}  {:>20}  {}", p.query, p.nn_id, p.dist, coords(&p.nn))?;
                }
                Ok(())
            })
        }
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let index: Index64 = load_index(&a.index).with_context(|| format!("loading {}", a.index.display()))?;
    if let Some(d) = &a.static_dir {
        if !d.is_dir() {
            bail!("static directory {} does not exist", d.display());
        }
    }
    let state = AppState::new(Some(index));
    let config = ServeConfig {
        addr: a.addr,
        body_limit: a.body_limit,
        static_dir: a.static_dir,
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(spadas_server::serve(state, config))?;
    Ok(())
}
