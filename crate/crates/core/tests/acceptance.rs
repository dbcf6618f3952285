//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed. Pass substrings as arguments to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spadas_core::baselines::{
    brute_hausdorff, brute_nn, brute_range_datasets, brute_range_points, scan_gbo_topk, scan_haus_topk, scan_ia_topk,
    ScanHit,
};
use spadas_core::index::{audit, DatasetTree, IndexParams};
use spadas_core::io::{generate_synthetic, load_index, save_index, Distribution, SyntheticSpec};
use spadas_core::metrics::{haus_approx, haus_bounds, haus_exact};
use spadas_core::search::{
    exemplar_search, nn_point_search, range_dataset_search, range_point_search, DatasetHit, RangeQuery,
};
use spadas_core::{EpsilonPolicy, Index64, Mbr, MetricKind, PointSet, Repository};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A random 2-D point set of 1 to `max` points: uniform in a box or a few disks.
fn random_points(rng: &mut ChaCha8Rng, max: usize, clustered: bool) -> PointSet<f64> {
    let n = rng.random_range(1..=max);
    let origin = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
    let extent = rng.random_range(1.0..60.0);
    let centers: Vec<[f64; 2]> = (0..rng.random_range(1..=3))
        .map(|_| [origin[0] + rng.random_range(0.0..extent), origin[1] + rng.random_range(0.0..extent)])
        .collect();
    let mut ps = PointSet::with_capacity(2, n);
    for i in 0..n {
        let p = if clustered {
            let c = centers[i % centers.len()];
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let r = extent * 0.05 * rng.random::<f64>().sqrt();
            [c[0] + r * a.cos(), c[1] + r * a.sin()]
        } else {
            [origin[0] + rng.random_range(0.0..extent), origin[1] + rng.random_range(0.0..extent)]
        };
        ps.try_push(&p).unwrap();
    }
    ps
}

fn tree(ps: &PointSet<f64>) -> DatasetTree<f64> {
    DatasetTree::build(ps, 10, 2, None).unwrap()
}

fn synthetic(datasets: usize, points: usize, distribution: Distribution, rate: f64, seed: u64) -> Repository<f64> {
    generate_synthetic::<f64>(&SyntheticSpec {
        datasets,
        points,
        distribution,
        outlier_rate: rate,
        seed,
        ..SyntheticSpec::default()
    })
    .unwrap()
    .repository
}

fn build(repo: &Repository<f64>) -> Index64 {
    Index64::build_with(repo, IndexParams::default()).unwrap().0
}

/// Points of the node's subtree.
fn node_points(t: &DatasetTree<f64>, node: u32) -> PointSet<f64> {
    let mut ps = PointSet::with_capacity(2, t.node(node).len());
    for s in t.node(node).range() {
        ps.try_push(t.point(s)).unwrap();
    }
    ps
}

/// A query made from a random repository dataset: a subset of its retained
/// points, jittered.
fn near_query(rng: &mut ChaCha8Rng, index: &Index64, max: usize) -> PointSet<f64> {
    let e = index.entry(rng.random_range(0..index.len() as u32));
    let pts = e.tree.points_in_source_order();
    let n = rng.random_range(1..=max.min(pts.len()));
    let jitter = e.radius() * 0.05;
    let mut q = PointSet::with_capacity(2, n);
    for _ in 0..n {
        let p = pts.point(rng.random_range(0..pts.len()));
        q.try_push(&[
            p[0] + rng.random_range(-jitter..=jitter),
            p[1] + rng.random_range(-jitter..=jitter),
        ])
        .unwrap();
    }
    q
}

fn random_range(rng: &mut ChaCha8Rng, within: &Mbr<f64>) -> RangeQuery<f64> {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for i in 0..2 {
        let w = within.width(i);
        let a = within.lo()[i] + rng.random_range(-0.1..1.0) * w;
        let len = rng.random_range(0.0..0.4) * w;
        lo[i] = a;
        hi[i] = a + len;
    }
    RangeQuery::new(lo, hi).unwrap()
}

fn same_hits(hits: &[DatasetHit<f64>], scan: &[ScanHit<f64>]) -> bool {
    hits.len() == scan.len() && hits.iter().zip(scan).all(|(h, s)| h.dataset_id == s.0 && h.score == s.1)
}

fn exact_hausdorff() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut bad = 0;
    let pairs = 1000;
    for i in 0..pairs {
        let clustered = i % 2 == 1;
        let q = random_points(&mut rng, 400, clustered);
        let d = random_points(&mut rng, 400, clustered);
        let got = haus_exact(&tree(&q), &tree(&d)).unwrap();
        let want = brute_hausdorff(&q, &d, 2).unwrap();
        let rel = if want == 0.0 { got.abs() } else { (got - want).abs() / want };
        worst = worst.max(rel);
        if rel > 1e-9 {
            bad += 1;
        }
    }
    check(bad == 0, format!("{pairs} pairs, {bad} mismatches, max relative error {worst:.2e}"))
}

fn bound_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    let mut violations = 0;
    for (seed, dist) in [(11, Distribution::Clustered), (12, Distribution::Uniform)] {
        let index = build(&synthetic(20, 1000, dist, 0.01, seed));
        for _ in 0..5000 {
            let a = &index.entry(rng.random_range(0..index.len() as u32)).tree;
            let b = &index.entry(rng.random_range(0..index.len() as u32)).tree;
            let na = rng.random_range(0..a.nodes().len() as u32);
            let nb = rng.random_range(0..b.nodes().len() as u32);
            let (x, y) = (a.node(na), b.node(nb));
            let bnd = haus_bounds(&x.center, x.radius, &y.center, y.radius, 2);
            let h = brute_hausdorff(&node_points(a, na), &node_points(b, nb), 2).unwrap();
            let slack = 1e-12 * (1.0 + h);
            if bnd.lb > h + slack || h > bnd.ub + slack {
                violations += 1;
            }
            checked += 1;
        }
    }
    check(violations == 0, format!("{checked} node pairs, {violations} violations"))
}

fn approximation_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..250 {
        let clustered = i % 2 == 0;
        let q = random_points(&mut rng, 400, clustered);
        let d = random_points(&mut rng, 400, clustered);
        let (tq, td) = (tree(&q), tree(&d));
        let exact = haus_exact(&tq, &td).unwrap();
        let mut mbr = q.mbr().unwrap();
        mbr.union_with(&d.mbr().unwrap());
        for theta in 3..=7 {
            let Ok(eps) = EpsilonPolicy::from_mbr(&mbr, theta) else { continue };
            let approx = haus_approx(&tq, &td, &eps).unwrap();
            let err = (approx - exact).abs();
            worst = worst.max(err / eps.value());
            if err > 2.0 * eps.value() * (1.0 + 1e-12) {
                violations += 1;
            }
            checked += 1;
        }
    }
    check(
        checked >= 1000 && violations == 0,
        format!("{checked} pairs, {violations} violations, max error {worst:.3} eps"),
    )
}

fn topk_exactness() -> Outcome {
    let repo = synthetic(200, 400, Distribution::Clustered, 0.0, 21);
    let index = build(&repo);
    let retained: Vec<_> = index
        .entries()
        .iter()
        .map(|e| spadas_core::Dataset::new(e.id, e.name.clone(), e.tree.points_in_source_order()).unwrap())
        .collect();
    let boxes: Vec<(u64, Mbr<f64>)> = retained.iter().map(|d| (d.id, d.mbr())).collect();
    let sigs: Vec<_> = retained
        .iter()
        .map(|d| (d.id, index.grid().signature_of(d.points()).unwrap()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    let mut searches = 0;
    for qi in 0..100 {
        let q = if qi % 4 == 3 {
            random_points(&mut rng, 300, qi % 8 == 3)
        } else {
            near_query(&mut rng, &index, 300)
        };
        for k in [1, 10, 20, 50] {
            let ia = exemplar_search(&index, &q, MetricKind::Ia, k, None).unwrap();
            let gbo = exemplar_search(&index, &q, MetricKind::Gbo, k, None).unwrap();
            let haus = exemplar_search(&index, &q, MetricKind::HausExact, k, None).unwrap();
            for (metric, hits, scan) in [
                ("ia", &ia, scan_ia_topk(&boxes, &q, k)),
                ("gbo", &gbo, scan_gbo_topk(&sigs, index.grid(), &q, k)),
                ("haus", &haus, scan_haus_topk(&retained, &q, k, 2).unwrap()),
            ] {
                searches += 1;
                if !same_hits(hits, &scan) {
                    mismatches.push(format!("query {qi} k={k} {metric}"));
                }
            }
        }
    }
    check(
        mismatches.is_empty(),
        format!("{searches} searches, {} mismatches {:?}", mismatches.len(), &mismatches[..mismatches.len().min(5)]),
    )
}

fn range_and_nn_exactness() -> Outcome {
    let repo = synthetic(100, 2000, Distribution::Clustered, 0.01, 31);
    let index = build(&repo);
    let boxes: Vec<(u64, Mbr<f64>)> = index.entries().iter().map(|e| (e.id, e.mbr().clone())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();

    for i in 0..100 {
        let r = random_range(&mut rng, index.global_mbr());
        if range_dataset_search(&index, &r) != brute_range_datasets(&boxes, r.lo(), r.hi()) {
            bad.push(format!("RangeS {i}"));
        }
    }

    for i in 0..100 {
        let e = index.entry(rng.random_range(0..index.len() as u32));
        let r = random_range(&mut rng, e.mbr());
        let (ids, pts) = range_point_search(&index, e.id, &r).unwrap();
        let mut source_ids = e.tree.point_ids().to_vec();
        source_ids.sort_unstable();
        let retained = e.tree.points_in_source_order();
        let want = brute_range_points(&retained, r.lo(), r.hi());
        let want_ids: Vec<u32> = want.iter().map(|&j| source_ids[j]).collect();
        let same_points = want.iter().enumerate().all(|(k, &j)| pts.point(k) == retained.point(j));
        if ids != want_ids || pts.len() != want.len() || !same_points {
            bad.push(format!("RangeP {i}"));
        }
    }

    let mut nn_case = |q: &PointSet<f64>, id: u64, label: String, warm: bool| {
        let retained = index.dataset(id).unwrap().tree.points_in_source_order();
        let got = nn_point_search(&index, q, id, warm).unwrap();
        let want = brute_nn(q, &retained, 2).unwrap();
        let ok = got.len() == want.len()
            && got.iter().zip(&want).enumerate().all(|(i, (g, (j, d)))| {
                g.query_index == i && g.distance == *d && (g.nn.as_slice() == retained.point(*j) || {
                    let p = q.point(i);
                    ((g.nn[0] - p[0]).powi(2) + (g.nn[1] - p[1]).powi(2)).sqrt() == *d
                })
            });
        if !ok {
            bad.push(label);
        }
    };
    for i in 0..100 {
        let q = if i % 2 == 0 {
            near_query(&mut rng, &index, 500)
        } else {
            random_points(&mut rng, 500, i % 4 == 1)
        };
        let id = index.entry(rng.random_range(0..index.len() as u32)).id;
        nn_case(&q, id, format!("NNP {i}"), i % 3 == 0);
    }
    // combined query sets of growing size
    for s in [100, 1000, 5000, 10_000] {
        let mut q = PointSet::with_capacity(2, s);
        while q.len() < s {
            let part = near_query(&mut rng, &index, 2000);
            for p in part.iter().take(s - q.len()) {
                q.try_push(p).unwrap();
            }
        }
        let id = index.entry(rng.random_range(0..index.len() as u32)).id;
        nn_case(&q, id, format!("NNP s={s}"), false);
        nn_case(&q, id, format!("NNP s={s} warm"), true);
    }
    check(bad.is_empty(), format!("100 RangeS, 100 RangeP, 108 NNP queries; failures {bad:?}"))
}

fn structural_audit() -> Outcome {
    let cases: [(usize, usize, Distribution, IndexParams); 4] = [
        (500, 1000, Distribution::Clustered, IndexParams::default()),
        (200, 500, Distribution::Uniform, IndexParams { theta: 7, ..IndexParams::default() }),
        (100, 300, Distribution::Clustered, IndexParams { leaf_capacity: 3, ..IndexParams::default() }),
        (50, 1000, Distribution::Uniform, IndexParams { outlier_removal: false, ..IndexParams::default() }),
    ];
    let mut nodes = 0;
    let mut failures = Vec::new();
    for (i, (m, n, dist, params)) in cases.into_iter().enumerate() {
        let repo = synthetic(m, n, dist, 0.01, 40 + i as u64);
        let (index, _) = Index64::build_with(&repo, params).unwrap();
        match audit(&index, Some(&repo)) {
            Ok(r) => nodes += r.nodes_checked,
            Err(v) => failures.push(format!("case {i}: {} violations, first {}", v.len(), v[0])),
        }
    }
    check(failures.is_empty(), format!("4 indexes up to 500 x 1000, {nodes} nodes checked {failures:?}"))
}

fn outlier_efficacy() -> Outcome {
    let (mut planted, mut caught, mut inliers, mut lost) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_recall = 1.0f64;
    for seed in 0..20 {
        let s = generate_synthetic::<f64>(&SyntheticSpec {
            datasets: 50,
            points: 1000,
            distribution: Distribution::Clustered,
            outlier_rate: 0.01,
            seed,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let index = build(&s.repository);
        let (mut p, mut c) = (0, 0);
        for (e, labels) in index.entries().iter().zip(&s.labels) {
            let mut removed = vec![false; labels.len()];
            for &r in &e.removed {
                removed[r as usize] = true;
            }
            for (&is_out, &gone) in labels.iter().zip(&removed) {
                match (is_out, gone) {
                    (true, true) => c += 1,
                    (false, true) => lost += 1,
                    _ => {}
                }
                if is_out {
                    p += 1;
                } else {
                    inliers += 1;
                }
            }
        }
        planted += p;
        caught += c;
        worst_recall = worst_recall.min(c as f64 / p as f64);
    }
    let recall = caught as f64 / planted as f64;
    let loss = lost as f64 / inliers as f64;
    check(
        recall >= 0.95 && loss <= 0.01,
        format!(
            "recall {:.1}% (worst seed {:.1}%), inlier loss {:.3}% over 20 seeds",
            recall * 100.0,
            worst_recall * 100.0,
            loss * 100.0
        ),
    )
}

fn time<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

fn best_of<R>(runs: usize, mut f: impl FnMut() -> R) -> (R, Duration) {
    let (mut r, mut best) = time(&mut f);
    for _ in 1..runs {
        let (again, t) = time(&mut f);
        if t < best {
            (r, best) = (again, t);
        }
    }
    (r, best)
}

fn speedups() -> Outcome {
    let repo = synthetic(200, 10_000, Distribution::Clustered, 0.0, 51);
    let index = build(&repo);
    let retained: Vec<_> = index
        .entries()
        .iter()
        .map(|e| spadas_core::Dataset::new(e.id, e.name.clone(), e.tree.points_in_source_order()).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut t_exact, mut t_scan, mut t_nnp, mut t_brute) = (Duration::ZERO, Duration::ZERO, Duration::ZERO, Duration::ZERO);
    let mut agree = true;
    for _ in 0..5 {
        let q = near_query(&mut rng, &index, 10_000);
        let (hits, te) = time(|| exemplar_search(&index, &q, MetricKind::HausExact, 10, None).unwrap());
        let (scan, ts) = time(|| scan_haus_topk(&retained, &q, 10, 2).unwrap());
        agree &= same_hits(&hits, &scan);
        t_exact += te;
        t_scan += ts;

        let target = hits[0].dataset_id;
        let slot = retained.iter().position(|d| d.id == target).unwrap();
        // best of three for both sides; single runs on a shared core are noisy
        let (nn, tn) = best_of(3, || nn_point_search(&index, &q, target, false).unwrap());
        let (brute, tb) = best_of(3, || brute_nn(&q, retained[slot].points(), 2).unwrap());
        agree &= nn.len() == brute.len() && nn.iter().zip(&brute).all(|(a, b)| a.distance == b.1);
        t_nnp += tn;
        t_brute += tb;
    }
    let haus = t_scan.as_secs_f64() / t_exact.as_secs_f64();
    let nnp = t_brute.as_secs_f64() / t_nnp.as_secs_f64();
    check(
        agree && haus >= 10.0 && nnp >= 10.0,
        format!("ExactHaus {haus:.0}x faster than scan, NNP {nnp:.1}x faster than brute NN, results agree: {agree}"),
    )
}

fn build_scaling() -> Outcome {
    let sizes = [1000, 2000, 4000, 8000];
    let mut times = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let repo = synthetic(20, n, Distribution::Clustered, 0.0, 60 + i as u64);
        let best = (0..5)
            .map(|_| Index64::build_with(&repo, IndexParams::default()).unwrap().1.elapsed)
            .min()
            .unwrap();
        times.push(best.as_secs_f64());
    }
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    check(
        ratios.iter().all(|&r| r <= 2.6),
        format!(
            "build times {:?} ms, doubling ratios {:?}",
            times.iter().map(|t| (t * 1e4).round() / 10.0).collect::<Vec<_>>(),
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

/// Every answer of a fixed query suite, rendered with exact float bits.
fn query_suite(index: &Index64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = String::new();
    for i in 0..50 {
        let line = match i % 5 {
            0 => format!("{:?}", range_dataset_search(index, &random_range(&mut rng, index.global_mbr()))),
            1 => {
                let e = index.entry(rng.random_range(0..index.len() as u32));
                format!("{:?}", range_point_search(index, e.id, &random_range(&mut rng, e.mbr())).unwrap())
            }
            4 => {
                let q = near_query(&mut rng, index, 200);
                let id = index.entry(rng.random_range(0..index.len() as u32)).id;
                let pairs = nn_point_search(index, &q, id, false).unwrap();
                format!("{:?}", pairs.iter().map(|p| (p.query_index, p.nn_index, p.distance.to_bits())).collect::<Vec<_>>())
            }
            _ => {
                let q = near_query(&mut rng, index, 200);
                let metric = MetricKind::ALL[rng.random_range(0..4)];
                let hits = exemplar_search(index, &q, metric, 10, None).unwrap();
                format!("{:?}", hits.iter().map(|h| (h.dataset_id, h.score.to_bits(), h.rank)).collect::<Vec<_>>())
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn persistence() -> Outcome {
    let index = build(&synthetic(60, 500, Distribution::Clustered, 0.01, 70));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.spx");
    save_index(&index, &path).unwrap();
    let loaded: Index64 = load_index(&path).unwrap();
    let a = query_suite(&index);
    let b = query_suite(&loaded);
    check(a.as_bytes() == b.as_bytes(), format!("50 queries, {} bytes of answers identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact_hausdorff", exact_hausdorff),
        ("bound_soundness", bound_soundness),
        ("approximation_guarantee", approximation_guarantee),
        ("topk_exactness", topk_exactness),
        ("range_and_nn_exactness", range_and_nn_exactness),
        ("structural_audit", structural_audit),
        ("outlier_efficacy", outlier_efficacy),
        ("speedups", speedups),
        ("build_scaling", build_scaling),
        ("persistence", persistence),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
