//! Timing suites over seeded synthetic repositories.
//!
//! Every cell of a suite's parameter grid is run once as warmup and then
//! `repeat` times; the CSV row carries the mean of the timed runs.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spadas_core::baselines::{brute_nn, dataset_boxes, scan_gbo_topk, scan_haus_topk, scan_ia_topk};
use spadas_core::io::{generate_synthetic, Distribution, SyntheticSpec};
use spadas_core::search::{exemplar_search, nn_point_search};
use spadas_core::{Index64, IndexParams, MetricKind, PointSet, Repository64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    TopkHaus,
    TopkOverlap,
    Nnp,
    BuildScaling,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Timed runs per cell, after one discarded warmup.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeat: u32,
    #[arg(long, env = "SPADAS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Datasets in the generated repository.
    #[arg(long, default_value_t = 100)]
    pub datasets: usize,
    /// Points per generated dataset.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Query sets per top-k cell.
    #[arg(long, default_value_t = 5)]
    pub queries: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub parameter: &'static str,
    pub value: u64,
    pub method: &'static str,
    pub mean_ms: f64,
}

const K_GRID: [u64; 5] = [10, 20, 30, 40, 50];
const THETA_GRID: [u64; 5] = [3, 4, 5, 6, 7];
const F_GRID: [u64; 5] = [10, 20, 30, 40, 50];
const S_GRID: [u64; 5] = [1, 10, 100, 1000, 10_000];
const N_GRID: [u64; 4] = [1000, 2000, 4000, 8000];

/// `(parameter, value)` cells of a suite, in output order.
pub fn grid(suite: Suite) -> Vec<(&'static str, u64)> {
    let tag = |name, vals: &[u64]| vals.iter().map(move |&v| (name, v)).collect::<Vec<_>>();
    match suite {
        Suite::TopkHaus => tag("k", &K_GRID),
        Suite::TopkOverlap => [tag("k", &K_GRID), tag("theta", &THETA_GRID)].concat(),
        Suite::Nnp => tag("s", &S_GRID),
        Suite::BuildScaling => [tag("n", &N_GRID), tag("f", &F_GRID)].concat(),
    }
}

pub fn methods(suite: Suite) -> &'static [&'static str] {
    match suite {
        Suite::TopkHaus => &["exact_haus", "approx_haus", "scan_haus"],
        Suite::TopkOverlap => &["ia_index", "ia_scan", "gbo_index", "gbo_scan"],
        Suite::Nnp => &["nnp_index", "nnp_warm", "brute_nn"],
        Suite::BuildScaling => &["build"],
    }
}

fn mean_ms(repeat: u32, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?;
    let started = Instant::now();
    for _ in 0..repeat {
        f()?;
    }
    Ok(started.elapsed().as_secs_f64() * 1e3 / f64::from(repeat))
}

fn repository(a: &BenchArgs, points: usize, seed: u64) -> Result<Repository64> {
    let spec = SyntheticSpec {
        datasets: a.datasets,
        points,
        distribution: Distribution::Clustered,
        seed,
        ..SyntheticSpec::default()
    };
    Ok(generate_synthetic::<f64>(&spec)?.repository)
}

/// Jittered sample of a random dataset's retained points.
fn near_query(rng: &mut ChaCha8Rng, index: &Index64) -> PointSet<f64> {
    let e = index.entry(rng.random_range(0..index.len() as u32));
    let pts = e.tree.points_in_source_order();
    let n = rng.random_range(1..=pts.len());
    let jitter = e.radius() * 0.05;
    let mut q = PointSet::with_capacity(pts.dim(), n);
    let mut row = vec![0.0; pts.dim()];
    for _ in 0..n {
        let p = pts.point(rng.random_range(0..pts.len()));
        for (r, &c) in row.iter_mut().zip(p) {
            *r = c + rng.random_range(-jitter..=jitter);
        }
        q.try_push(&row).expect("query row has the index dimension");
    }
    q
}

fn uniform_query(rng: &mut ChaCha8Rng, index: &Index64, s: usize) -> PointSet<f64> {
    let g = index.global_mbr();
    let mut q = PointSet::with_capacity(g.dim(), s);
    let mut row = vec![0.0; g.dim()];
    for _ in 0..s {
        for (i, r) in row.iter_mut().enumerate() {
            *r = rng.random_range(g.lo()[i]..=g.hi()[i]);
        }
        q.try_push(&row).expect("query row has the index dimension");
    }
    q
}

pub fn run_suite(a: &BenchArgs) -> Result<Vec<Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = Vec::new();
    let mut push = |parameter, value, method, mean_ms| {
        rows.push(Row {
            parameter,
            value,
            method,
            mean_ms,
        })
    };
    match a.suite {
        Suite::TopkHaus => {
            let repo = repository(a, a.points, a.seed)?;
            let index = Index64::build_with(&repo, IndexParams::default())?.0;
            let queries: Vec<_> = (0..a.queries).map(|_| near_query(&mut rng, &index)).collect();
            // the scan sees the same retained points the index holds
            let retained: Vec<_> = index
                .entries()
                .iter()
                .map(|e| spadas_core::Dataset::new(e.id, e.name.clone(), e.tree.points_in_source_order()))
                .collect::<Result<_, _>>()?;
            let dims = index.metric_dims();
            for (param, k) in grid(a.suite) {
                let k = k as usize;
                for &m in methods(a.suite) {
                    let t = mean_ms(a.repeat, || {
                        for q in &queries {
                            match m {
                                "exact_haus" => drop(exemplar_search(&index, q, MetricKind::HausExact, k, None)?),
                                "approx_haus" => drop(exemplar_search(&index, q, MetricKind::HausApprox, k, None)?),
                                _ => drop(scan_haus_topk(&retained, q, k, dims)?),
                            }
                        }
                        Ok(())
                    })?;
                    push(param, k as u64, m, t);
                }
            }
        }
        Suite::TopkOverlap => {
            let repo = repository(a, a.points, a.seed)?;
            let mut cached: Option<(u64, Index64)> = None;
            for (param, v) in grid(a.suite) {
                let (k, theta) = match param {
                    "k" => (v as usize, IndexParams::default().theta),
                    _ => (10, v as u32),
                };
                if cached.as_ref().is_none_or(|(t, _)| *t != u64::from(theta)) {
                    let params = IndexParams {
                        theta,
                        ..IndexParams::default()
                    };
                    cached = Some((u64::from(theta), Index64::build_with(&repo, params)?.0));
                }
                let index = &cached.as_ref().expect("index built above").1;
                let queries: Vec<_> = (0..a.queries).map(|_| near_query(&mut rng, index)).collect();
                let boxes = dataset_boxes(&repo);
                let sigs: Vec<_> = index.entries().iter().map(|e| (e.id, e.signature.clone())).collect();
                for &m in methods(a.suite) {
                    let t = mean_ms(a.repeat, || {
                        for q in &queries {
                            match m {
                                "ia_index" => drop(exemplar_search(index, q, MetricKind::Ia, k, None)?),
                                "ia_scan" => drop(scan_ia_topk(&boxes, q, k)),
                                "gbo_index" => drop(exemplar_search(index, q, MetricKind::Gbo, k, None)?),
                                _ => drop(scan_gbo_topk(&sigs, index.grid(), q, k)),
                            }
                        }
                        Ok(())
                    })?;
                    push(param, v, m, t);
                }
            }
        }
        Suite::Nnp => {
            let repo = repository(a, a.points, a.seed)?;
            let index = Index64::build_with(&repo, IndexParams::default())?.0;
            let target = index.entry(0);
            let points = target.tree.points_in_source_order();
            let dims = index.metric_dims();
            for (param, s) in grid(a.suite) {
                let q = uniform_query(&mut rng, &index, s as usize);
                for &m in methods(a.suite) {
                    let t = mean_ms(a.repeat, || {
                        match m {
                            "nnp_index" => drop(nn_point_search(&index, &q, target.id, false)?),
                            "nnp_warm" => drop(nn_point_search(&index, &q, target.id, true)?),
                            _ => drop(brute_nn(&q, &points, dims)?),
                        }
                        Ok(())
                    })?;
                    push(param, s, m, t);
                }
            }
        }
        Suite::BuildScaling => {
            for (param, v) in grid(a.suite) {
                let (n, f) = match param {
                    "n" => (v as usize, IndexParams::default().leaf_capacity),
                    _ => (a.points, v as usize),
                };
                let repo = repository(a, n, a.seed)?;
                let params = IndexParams {
                    leaf_capacity: f,
                    ..IndexParams::default()
                };
                let t = mean_ms(a.repeat, || {
                    Index64::build_with(&repo, params)?;
                    Ok(())
                })?;
                push(param, v, "build", t);
            }
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[Row], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "value", "method", "mean_ms"])?;
    for r in rows {
        w.write_record([r.parameter, &r.value.to_string(), r.method, &format!("{:.4}", r.mean_ms)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let rows = run_suite(a)?;
    match &a.out {
        Some(path) => write_csv(&rows, File::create(path)?),
        None => write_csv(&rows, out),
    }
}
