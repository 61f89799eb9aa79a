use geopix_core::geom::{
    minimum_spanning_tree, point_to_polyline_distance, segment_intersect, shoelace_area, Point, Polyline, Segment,
};
use geopix_core::seeds::rng_from_seed;
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn pt() -> impl Strategy<Value = Point> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| Point::new(x, y))
}

/// Every spanning tree of the complete graph on `n` vertices, by Prüfer code.
fn all_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let total = n.pow((n - 2) as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(n - 2);
        let mut c = code;
        for _ in 0..n - 2 {
            seq.push(c % n);
            c /= n;
        }
        let mut degree = vec![1; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::new();
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        out.push(edges);
    }
    out
}

#[test]
fn prufer_enumeration_counts() {
    assert_eq!(all_trees(4).len(), 16);
    assert_eq!(all_trees(5).len(), 125);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vertices_lie_on_their_polyline(pts in prop::collection::vec(pt(), 3..12)) {
        if let Ok(c) = Polyline::new(pts, true) {
            for &p in c.points() {
                prop_assert_eq!(point_to_polyline_distance(p, &c).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn shoelace_rigid_and_cyclic(pts in prop::collection::vec(pt(), 3..10), a in 0.0f64..6.3, tx in -3.0f64..3.0, ty in -3.0f64..3.0, k in 0usize..10) {
        let area = shoelace_area(&pts).unwrap();
        let moved: Vec<Point> = pts.iter().map(|p| p.rotate_about(Point::default(), a) + Point::new(tx, ty)).collect();
        prop_assert!((shoelace_area(&moved).unwrap() - area).abs() < 1e-9);
        let mut rot = pts.clone();
        rot.rotate_left(k % pts.len());
        prop_assert!((shoelace_area(&rot).unwrap() - area).abs() < 1e-12);
    }

    #[test]
    fn intersection_is_symmetric(a in pt(), b in pt(), c in pt(), d in pt(), snap in any::<bool>()) {
        // Snapped inputs hit collinear and touching cases often.
        let g = |p: Point| if snap { Point::new((p.x * 2.0).round() / 2.0, (p.y * 2.0).round() / 2.0) } else { p };
        let (s1, s2) = (Segment::new(g(a), g(b)), Segment::new(g(c), g(d)));
        prop_assert_eq!(segment_intersect(&s1, &s2, 1e-9), segment_intersect(&s2, &s1, 1e-9));
    }

    #[test]
    fn mst_is_the_cheapest_tree(pts in prop::collection::vec(pt(), 2..7), perm in any::<u64>()) {
        let len = minimum_spanning_tree(&pts).unwrap().total_length();
        let best = all_trees(pts.len())
            .into_iter()
            .map(|t| t.iter().map(|&(i, j)| pts[i].dist(pts[j])).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((len - best).abs() < 1e-9, "{len} vs {best}");
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut rng_from_seed(perm));
        prop_assert!((minimum_spanning_tree(&shuffled).unwrap().total_length() - len).abs() < 1e-9);
    }
}

#[test]
fn mst_optimal_at_eight_points() {
    let pts: Vec<Point> = (0..8)
        .map(|i| {
            let t = i as f64 * 2.399;
            Point::new(t.cos() * (0.2 + 0.1 * i as f64), t.sin() * (0.3 + 0.05 * i as f64))
        })
        .collect();
    let best = all_trees(8)
        .into_iter()
        .map(|t| t.iter().map(|&(i, j)| pts[i].dist(pts[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!((minimum_spanning_tree(&pts).unwrap().total_length() - best).abs() < 1e-9);
}
