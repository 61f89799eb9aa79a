//! Acceptance run: one line per criterion, then fail if any criterion failed.
//! Lines go straight to stdout so they show up without `--nocapture`.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use geopix_core::curvegen::{generate_instance, CurveConfig};
use geopix_core::dataset::{Geometry, Task};
use geopix_core::evaluate::{evaluate_image, EvalParams, Extracted};
use geopix_core::extract::{extract_square, snap_square, Quad, SnapParams};
use geopix_core::generate::{generate_items, GenConfig};
use geopix_core::geom::{minimum_spanning_tree, PlaneGraph, Point};
use geopix_core::maxap::{random_simple_polygon, same_cycle, solve_exact_dfs, solve_naive_oracle};
use geopix_core::metrics::{alignment_score, squareness_mask};
use geopix_core::raster::{rasterize_square_pair, GrayImage, PixelMap};
use geopix_core::sampling::PointSampler;
use geopix_core::seeds::{derive_seed, rng_from_seed};
use geopix_core::steiner::{solve_exact, validate_smt_structure};
use rand::Rng;

type Outcome = (bool, String);

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sizes(seed: u64, lo: usize, hi: usize, k: u64) -> usize {
    rng_from_seed(derive_seed(seed, k)).gen_range(lo..=hi)
}

fn squareness_closed_form() -> Outcome {
    let mut sq = GrayImage::new(128, 0);
    let mut rect = GrayImage::new(128, 0);
    for y in 40..80 {
        for x in 20..100 {
            rect.set(x, y, 255);
            if x < 60 {
                sq.set(x, y, 255);
            }
        }
    }
    let (a, b) = (squareness_mask(&sq).unwrap(), squareness_mask(&rect).unwrap());
    let want = (-2.0f64).exp();
    ((a == 1.0) && (b - want).abs() <= 1e-6, format!("square {a}, 2:1 rectangle {b:.9} (e^-2 = {want:.9})"))
}

fn ground_truth_table() -> Outcome {
    let cfg = CurveConfig::default();
    let (mut align, mut sq) = (Vec::new(), Vec::new());
    let mut seed = 0;
    while align.len() < 2000 {
        seed += 1;
        let inst = generate_instance(seed, &cfg).unwrap();
        for k in 0..inst.squares.len() {
            let (_, mask, map) = rasterize_square_pair(&inst, k, 128).unwrap();
            let curve = inst.curve.map(|p| map.apply(p));
            align.push(alignment_score(&extract_square(&mask).unwrap(), &curve));
            sq.push(squareness_mask(&mask).unwrap());
        }
    }
    let (a, s) = (mean(&align), mean(&sq));
    (
        (-0.35..=0.0).contains(&a) && (0.90..=0.95).contains(&s),
        format!("{} pairs: alignment {a:.3} px, squareness {s:.3}", align.len()),
    )
}

fn steiner_oracle() -> Outcome {
    let h = 3f64.sqrt() / 2.0;
    let tri = solve_exact(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, h)]).unwrap();
    let unit = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    let sq = solve_exact(&unit).unwrap();
    let mut bad = Vec::new();
    let mut worst: f64 = 1.0;
    for i in 0..200u64 {
        let n = sizes(1, 4, 8, i);
        let pts = PointSampler::steiner().sample(derive_seed(11, i), n).unwrap();
        let smt = solve_exact(&pts).unwrap();
        let mst = minimum_spanning_tree(&pts).unwrap().total_length();
        worst = worst.max(mst / smt.total_length);
        if smt.total_length > mst + 1e-12
            || mst / smt.total_length > 1.22
            || !validate_smt_structure(&smt, &pts, 1e-3).all_pass()
        {
            bad.push(i);
        }
    }
    let ok = (tri.total_length - 3f64.sqrt()).abs() <= 1e-6
        && (sq.total_length - (1.0 + 3f64.sqrt())).abs() <= 1e-6
        && bad.is_empty();
    (
        ok,
        format!(
            "triangle {:.9}, square {:.9}, 200 random: max MST/SMT {worst:.4}, failing {bad:?}",
            tri.total_length, sq.total_length
        ),
    )
}

fn mst_ratio() -> Outcome {
    let ratios: Vec<f64> = (0..200u64)
        .map(|i| {
            let pts = PointSampler::steiner().sample(derive_seed(12, i), sizes(2, 5, 8, i)).unwrap();
            minimum_spanning_tree(&pts).unwrap().total_length() / solve_exact(&pts).unwrap().total_length
        })
        .collect();
    let m = mean(&ratios);
    ((1.0..=1.16).contains(&m), format!("mean MST/SMT {m:.4} over 200, n in [5,8]"))
}

fn maxap_equivalence() -> Outcome {
    let mut bad = Vec::new();
    for i in 0..100u64 {
        let pts = PointSampler::maxap().sample(derive_seed(13, i), sizes(3, 5, 8, i)).unwrap();
        if solve_exact_dfs(&pts).unwrap().area != solve_naive_oracle(&pts).unwrap().area {
            bad.push(i);
        }
    }
    (bad.is_empty(), format!("100 instances, mismatches {bad:?}"))
}

fn random_polygon_ratio() -> Outcome {
    let ratios: Vec<f64> = (0..200u64)
        .map(|i| {
            let pts = PointSampler::maxap().sample(derive_seed(14, i), sizes(4, 7, 12, i)).unwrap();
            random_simple_polygon(&pts, derive_seed(15, i)).unwrap().area / solve_exact_dfs(&pts).unwrap().area
        })
        .collect();
    let m = mean(&ratios);
    ((0.63..=0.88).contains(&m), format!("mean random/optimal {m:.4} over 200, n in [7,12]"))
}

/// Independent structure check: every vertex of `got` within 1px of a
/// distinct vertex of `want`, and the edge sets equal under that matching.
fn same_graph_1px(got: &PlaneGraph, want: &PlaneGraph, map: &PixelMap) -> bool {
    if got.vertex_count() != want.vertex_count() || got.edges.len() != want.edges.len() {
        return false;
    }
    let w: Vec<Point> = want.vertices.iter().map(|&p| map.apply(p)).collect();
    let mut to = Vec::new();
    for &v in &got.vertices {
        let p = map.apply(v);
        match (0..w.len()).filter(|&j| w[j].dist(p) <= 1.0).min_by(|&a, &b| w[a].dist(p).total_cmp(&w[b].dist(p))) {
            Some(j) if !to.contains(&j) => to.push(j),
            _ => return false,
        }
    }
    let norm = |(a, b): (usize, usize)| (a.min(b), a.max(b));
    let mut a: Vec<_> = got.edges.iter().map(|&(x, y)| norm((to[x], to[y]))).collect();
    let mut b: Vec<_> = want.edges.iter().map(|&e| norm(e)).collect();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

fn square_match(q: &Quad, corners: [Point; 4], map: &PixelMap) -> bool {
    corners.iter().all(|&c| {
        let p = map.apply(c);
        q.vertices.iter().any(|v| v.dist(p) <= 1.0)
    })
}

fn round_trip() -> Outcome {
    let params = EvalParams::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (task, points, clearance) in
        [(Task::Square, (1, 5), None), (Task::Steiner, (4, 8), Some(7.0)), (Task::Maxap, (7, 12), None)]
    {
        let cfg = GenConfig {
            task,
            points,
            split: "roundtrip".into(),
            seed: 5,
            min_clearance_px: clearance,
            ..Default::default()
        };
        let map = cfg.pixel_map();
        let items = generate_items(&cfg, 100).unwrap();
        let hits = items
            .iter()
            .filter(|it| {
                let m = &it.manifest;
                let (found, _) = evaluate_image(m, m.seed, &it.sol, &params);
                match (&m.geometry, found) {
                    (Geometry::Square { square, .. }, Ok(Extracted::Square { quad, .. })) => {
                        square_match(&quad, square.vertices(), &map)
                    }
                    (Geometry::Steiner { solution, .. }, Ok(Extracted::Steiner { graph })) => {
                        same_graph_1px(&graph, solution, &map)
                    }
                    (Geometry::Maxap { order, .. }, Ok(Extracted::Maxap { order: got })) => same_cycle(&got, order),
                    _ => false,
                }
            })
            .count();
        ok &= hits >= 99;
        parts.push(format!("{task} {hits}/100"));
    }
    (ok, parts.join(", "))
}

fn snapping() -> Outcome {
    let cfg = CurveConfig::default();
    let snap = SnapParams::default();
    let (mut recovered, mut worse, mut n) = (Vec::new(), 0, 0);
    let mut seed = 1000;
    while n < 500 {
        seed += 1;
        let inst = generate_instance(seed, &cfg).unwrap();
        let map = PixelMap::square_task(128);
        let curve = inst.curve.map(|p| map.apply(p));
        for sq in &inst.squares {
            if n == 500 {
                break;
            }
            n += 1;
            let mut rng = rng_from_seed(derive_seed(seed, n));
            let gt = Quad::new(sq.vertices().map(|p| map.apply(p))).unwrap();
            let off = gt.transformed(
                rng.gen_range(-0.1..=0.1),
                Point::new(rng.gen_range(-3.0..=3.0), rng.gen_range(-3.0..=3.0)),
            );
            let (a_gt, a_off) = (alignment_score(&gt, &curve), alignment_score(&off, &curve));
            let a_snap = alignment_score(&snap_square(&off, &curve, &snap), &curve);
            if a_snap < a_off {
                worse += 1;
            }
            if a_gt - a_off > 1e-9 {
                recovered.push((a_snap - a_off) / (a_gt - a_off));
            }
        }
    }
    let r = mean(&recovered);
    (worse == 0 && r >= 0.8, format!("{n} quads: mean recovery {r:.3}, worse after snapping {worse}"))
}

fn shard_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (k, workers) in [(0, "1"), (1, "4")] {
        let out = tmp.path().join(format!("run{k}"));
        let mut summaries = String::new();
        for task in ["square", "steiner", "maxap"] {
            let o = Command::new(env!("CARGO_BIN_EXE_geopix"))
                .args(["gen", "--task", task, "--count", "30", "--seed", "77", "--split", "test", "--workers", workers])
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            summaries.push_str(&String::from_utf8_lossy(&o.stdout).replace(out.to_str().unwrap(), ""));
        }
        runs.push((summaries, shard_bytes(&out)));
    }
    let same = runs[0] == runs[1];
    (
        same,
        format!("{} files, two runs (1 and 4 workers) {}", runs[0].1.len(), if same { "identical" } else { "differ" }),
    )
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("squareness closed form", squareness_closed_form),
        ("ground-truth alignment/squareness", ground_truth_table),
        ("steiner exact oracle", steiner_oracle),
        ("mst/smt ratio", mst_ratio),
        ("maxap dfs = naive", maxap_equivalence),
        ("random/optimal polygon area", random_polygon_ratio),
        ("round-trip fidelity", round_trip),
        ("snapping", snapping),
        ("gen determinism", determinism),
    ];
    let results: Vec<(Outcome, std::time::Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t = std::time::Instant::now();
                    (f(), t.elapsed())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| ((false, "panicked".into()), Default::default())))
            .collect()
    });
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    let mut failed = Vec::new();
    for ((name, _), ((ok, detail), dt)) in criteria.iter().zip(&results) {
        writeln!(out, "{} {name}: {detail} [{:.1}s]", if *ok { "PASS" } else { "FAIL" }, dt.as_secs_f64()).unwrap();
        if !ok {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
