use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use spadas_cli::bench::{grid, methods, run_suite, BenchArgs, Suite};
use spadas_core::io::load_index;
use spadas_core::{Index64, MetricKind};
use spadas_server::{router, AppState, DEFAULT_BODY_LIMIT};
use tower::ServiceExt;

fn spadas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spadas"))
        .args(args)
        .env_remove("SPADAS_INDEX")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = spadas(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Generated repository plus a built index in a temp dir.
struct Fixture {
    dir: tempfile::TempDir,
    index: PathBuf,
    build_log: String,
}

fn fixture(extra: &[&str]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    ok(&["generate", "--out", s(&repo), "--datasets", "15", "--points", "400", "--seed", "9", "--outlier-rate", "0.01"]);
    let index = dir.path().join("idx.bin");
    let manifest = repo.join("manifest.toml");
    let mut args = vec!["build", "--manifest", s(&manifest), "--out", s(&index)];
    args.extend_from_slice(extra);
    let build_log = ok(&args);
    Fixture { dir, index, build_log }
}

fn query_file(dir: &Path, rows: &[[f64; 2]]) -> PathBuf {
    let path = dir.join("q.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "x,y").unwrap();
    for r in rows {
        writeln!(f, "{},{}", r[0], r[1]).unwrap();
    }
    path
}

fn sample(index: &Index64, slot: u32, n: usize) -> Vec<[f64; 2]> {
    let pts = index.entry(slot).tree.points_in_source_order();
    pts.iter().step_by(3).take(n).map(|p| [p[0], p[1]]).collect()
}

async fn api(index: &Index64, uri: &str, body: Value) -> Vec<u8> {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let app = router(AppState::new(Some(index.clone())), DEFAULT_BODY_LIMIT);
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    resp.into_body().collect().await.unwrap().to_bytes().to_vec()
}

#[test]
fn build_reports_threshold_and_removals() {
    let fx = fixture(&[]);
    assert!(fx.build_log.contains("datasets:      15"), "{}", fx.build_log);
    assert!(fx.build_log.contains("build time:"));
    let index: Index64 = load_index(&fx.index).unwrap();
    let r = index.r_prime().unwrap();
    assert!(fx.build_log.contains(&format!("r':            {r}")));
    assert!(fx.build_log.contains(&format!("removed points: {}", index.removed_points())));
    assert!(index.removed_points() > 0);

    let plain = fixture(&["--no-outlier-removal", "--theta", "6", "--leaf-capacity", "20"]);
    assert!(plain.build_log.contains("r':            disabled"));
    assert!(plain.build_log.contains("removed points: 0"));
    let index: Index64 = load_index(&plain.index).unwrap();
    assert_eq!(index.params().theta, 6);
    assert_eq!(index.params().leaf_capacity, 20);
}

#[tokio::test]
async fn search_output_matches_service_bodies() {
    let fx = fixture(&[]);
    let idx = s(&fx.index);
    let index: Index64 = load_index(&fx.index).unwrap();
    let rows = sample(&index, 3, 60);
    let q = query_file(fx.dir.path(), &rows);

    let cli = ok(&["search", "range", "--index", idx, "--lo", "100,100", "--hi", "600,500"]);
    let body = api(&index, "/search/datasets/range", json!({"lo": [100.0, 100.0], "hi": [600.0, 500.0]})).await;
    assert_eq!(cli.trim_end().as_bytes(), body);

    for metric in MetricKind::ALL {
        let cli = ok(&["search", "exemplar", "--index", idx, "--query", s(&q), "--metric", metric.as_str(), "-k", "4"]);
        let body = api(
            &index,
            "/search/datasets/exemplar",
            json!({"points": rows, "metric": metric.as_str(), "k": 4}),
        )
        .await;
        assert_eq!(cli.trim_end().as_bytes(), body, "{metric:?}");
    }
    let cli = ok(&["search", "exemplar", "--index", idx, "--query", s(&q), "--metric", "haus_approx", "--epsilon", "3.5"]);
    let body = api(
        &index,
        "/search/datasets/exemplar",
        json!({"points": rows, "metric": "haus_approx", "k": 10, "epsilon": 3.5}),
    )
    .await;
    assert_eq!(cli.trim_end().as_bytes(), body);

    let id = index.entry(5).id;
    let m = index.entry(5).mbr().clone();
    let (lo, hi) = ([m.lo()[0], m.lo()[1]], [(m.lo()[0] + m.hi()[0]) / 2.0, m.hi()[1]]);
    let cli = ok(&[
        "search", "points-range", "--index", idx, "--dataset", &id.to_string(),
        "--lo", &format!("{},{}", lo[0], lo[1]), "--hi", &format!("{},{}", hi[0], hi[1]),
    ]);
    let body = api(&index, &format!("/datasets/{id}/points/range"), json!({"lo": lo, "hi": hi})).await;
    assert_eq!(cli.trim_end().as_bytes(), body);

    let body = api(&index, &format!("/datasets/{id}/points/nn"), json!({"points": rows})).await;
    for warm in [false, true] {
        let id = id.to_string();
        let mut args = vec!["search", "points-nn", "--index", idx, "--dataset", &id, "--query", s(&q)];
        if warm {
            args.push("--warm-start");
        }
        assert_eq!(ok(&args).trim_end().as_bytes(), body);
    }
}

#[test]
fn text_format_and_env_index() {
    let fx = fixture(&[]);
    let index: Index64 = load_index(&fx.index).unwrap();
    let q = query_file(fx.dir.path(), &sample(&index, 2, 30));
    let out = Command::new(env!("CARGO_BIN_EXE_spadas"))
        .args(["search", "exemplar", "--query", s(&q), "-k", "3", "--format", "text"])
        .env("SPADAS_INDEX", &fx.index)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("rank"));
    let first: Vec<_> = lines[1].split_whitespace().collect();
    assert_eq!(first, ["1", &index.entry(2).id.to_string(), "0"]);
}

#[test]
fn bad_arguments_fail_with_usage() {
    let fx = fixture(&[]);
    let idx = s(&fx.index);
    let q = query_file(fx.dir.path(), &[[1.0, 2.0]]);
    let usage_errors: [&[&str]; 6] = [
        &["search", "exemplar", "--index", idx, "--query", s(&q), "-k", "0"],
        &["search", "exemplar", "--index", idx, "--query", s(&q), "--metric", "cosine"],
        &["search", "range", "--index", idx, "--lo", "1", "--hi", "2,2"],
        &["search", "range", "--index", idx, "--lo", "1,1", "--hi", "2,2", "--format", "xml"],
        &["bench", "--suite", "nope"],
        &["frobnicate"],
    ];
    for args in usage_errors {
        let out = spadas(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    let runtime_errors: [&[&str]; 4] = [
        &["search", "range", "--index", idx, "--lo", "5,5", "--hi", "1,1"],
        &["search", "points-nn", "--index", idx, "--dataset", "999", "--query", s(&q)],
        &["search", "exemplar", "--index", idx, "--query", s(&q), "--metric", "haus_approx", "--epsilon", "-1"],
        &["search", "range", "--index", "/nonexistent/idx.bin", "--lo", "0,0", "--hi", "1,1"],
    ];
    for args in runtime_errors {
        let out = spadas(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}

fn small(suite: Suite, repeat: u32) -> BenchArgs {
    BenchArgs {
        suite,
        repeat,
        seed: 4,
        datasets: 12,
        points: 300,
        queries: 2,
        out: None,
    }
}

#[test]
fn bench_rows_cover_grid_times_methods() {
    for suite in [Suite::TopkHaus, Suite::TopkOverlap, Suite::Nnp, Suite::BuildScaling] {
        let a = small(suite, 1);
        let rows = run_suite(&a).unwrap();
        assert_eq!(rows.len(), grid(suite).len() * methods(suite).len(), "{suite:?}");
        let again = run_suite(&a).unwrap();
        let key = |r: &spadas_cli::bench::Row| (r.parameter, r.value, r.method);
        assert!(rows.iter().map(key).eq(again.iter().map(key)));
        assert!(rows.iter().all(|r| r.mean_ms.is_finite() && r.mean_ms >= 0.0));
    }
}

#[test]
fn bench_csv_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nnp.csv");
    ok(&["bench", "--suite", "nnp", "--repeat", "1", "--datasets", "5", "--points", "200", "--out", s(&csv)]);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("parameter,value,method,mean_ms"));
    assert_eq!(lines.count(), grid(Suite::Nnp).len() * methods(Suite::Nnp).len());
}

#[test]
fn exact_haus_beats_scan_on_every_row() {
    let a = BenchArgs {
        datasets: 40,
        points: 1000,
        queries: 3,
        ..small(Suite::TopkHaus, 2)
    };
    let rows = run_suite(&a).unwrap();
    for (param, k) in grid(Suite::TopkHaus) {
        let time = |m| rows.iter().find(|r| (r.parameter, r.value, r.method) == (param, k, m)).unwrap().mean_ms;
        assert!(time("exact_haus") < time("scan_haus"), "k={k}: {rows:?}");
    }
}

fn http_get(addr: &str, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(addr).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    stream.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[test]
fn serve_answers_api_and_static_files() {
    let fx = fixture(&[]);
    let web = fx.dir.path().join("web");
    std::fs::create_dir(&web).unwrap();
    std::fs::write(web.join("index.html"), "<p>hello</p>").unwrap();
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().to_string()
    };
    let mut child = Command::new(env!("CARGO_BIN_EXE_spadas"))
        .args(["serve", "--index", s(&fx.index), "--addr", &addr, "--static", s(&web)])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let listing = loop {
        if let Some(r) = http_get(&addr, "/datasets") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    let page = http_get(&addr, "/index.html").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(listing.starts_with("HTTP/1.1 200"), "{listing}");
    let json = listing.split("\r\n\r\n").nth(1).unwrap();
    assert_eq!(serde_json::from_str::<Value>(json).unwrap().as_array().unwrap().len(), 15);
    assert!(page.starts_with("HTTP/1.1 200") && page.ends_with("<p>hello</p>"), "{page}");
}

#[test]
fn serve_rejects_missing_static_dir() {
    let fx = fixture(&[]);
    let out = spadas(&["serve", "--index", s(&fx.index), "--addr", "127.0.0.1:0", "--static", "/no/such/dir"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("static directory"));
}
