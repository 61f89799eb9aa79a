//! Maximum-area polygonization: exact backtracking search, a brute-force
//! cross-check, and a random simple polygon baseline.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    convex_hull_indices, is_simple_polygon, segment_intersect, signed_area, GeomError, IntersectionKind, Point,
    Segment, SimplePolygon, EPS,
};
use crate::seeds::rng_from_seed;

pub const DFS_MAX_POINTS: usize = 15;
pub const NAIVE_MAX_POINTS: usize = 8;
const RANDOM_PERMUTATION_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxapError {
    #[error("at most {max} points supported, got {n}")]
    TooManyPoints { n: usize, max: usize },
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("no simple polygon through all points")]
    NoPolygon,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonizationResult {
    pub polygon: SimplePolygon,
    /// Input indices in cycle order, canonicalized by [`canonical_cycle`].
    pub order: Vec<usize>,
    pub area: f64,
    pub explored_count: u64,
}

/// Index of the bottommost point, leftmost among ties.
pub fn anchor_index(points: &[Point]) -> usize {
    (0..points.len())
        .min_by(|&a, &b| points[a].y.total_cmp(&points[b].y).then(points[a].x.total_cmp(&points[b].x)))
        .unwrap_or(0)
}

/// Rotate and orient a cycle so it starts at `anchor` and its second index is
/// smaller than its last.
pub fn canonical_cycle(order: &[usize], anchor: usize) -> Vec<usize> {
    let n = order.len();
    let start = order.iter().position(|&v| v == anchor).unwrap_or(0);
    let mut c: Vec<usize> = (0..n).map(|i| order[(start + i) % n]).collect();
    if n > 2 && c[1] > c[n - 1] {
        c[1..].reverse();
    }
    c
}

/// Cycle equality up to rotation and reflection.
pub fn same_cycle(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let Some(&first) = a.first() else { return true };
    canonical_cycle(a, first) == canonical_cycle(b, first)
}

fn cycle_area(points: &[Point], cycle: &[usize]) -> f64 {
    let verts: Vec<Point> = cycle.iter().map(|&i| points[i]).collect();
    signed_area(&verts).abs()
}

fn finish(points: &[Point], cycle: Vec<usize>, explored_count: u64) -> Result<PolygonizationResult, MaxapError> {
    let polygon = SimplePolygon::new(cycle.iter().map(|&i| points[i]).collect(), EPS)?;
    let area = cycle_area(points, &cycle);
    Ok(PolygonizationResult { polygon, order: cycle, area, explored_count })
}

fn check_points(points: &[Point], max: usize) -> Result<(), MaxapError> {
    let n = points.len();
    if n < 3 {
        return Err(MaxapError::TooFewPoints(n));
    }
    if n > max {
        return Err(MaxapError::TooManyPoints { n, max });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite.into());
    }
    convex_hull_indices(points).map_err(|_| MaxapError::NoPolygon)?;
    Ok(())
}

// Larger area wins; equal areas go to the lexicographically smaller cycle.
fn better(area: f64, cycle: &[usize], best: &Option<(f64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((a, c)) => match area.total_cmp(a) {
            Ordering::Greater => true,
            Ordering::Equal => cycle < c.as_slice(),
            Ordering::Less => false,
        },
    }
}

struct Dfs<'a> {
    points: &'a [Point],
    candidates: Vec<usize>,
    rank: Vec<usize>,
    path: Vec<usize>,
    used: Vec<bool>,
    best: Option<(f64, Vec<usize>)>,
    explored: u64,
}

impl Dfs<'_> {
    fn seg(&self, a: usize, b: usize) -> Segment {
        Segment::new(self.points[a], self.points[b])
    }

    // Can edge (from, to) join the path ending at `from`? `closing` also
    // treats the first path edge as adjacent.
    fn edge_ok(&self, from: usize, to: usize, closing: bool) -> bool {
        let s = self.seg(from, to);
        let m = self.path.len();
        for i in 0..m - 1 {
            let kind = segment_intersect(&s, &self.seg(self.path[i], self.path[i + 1]), EPS);
            let adjacent = i + 2 == m || (closing && i == 0);
            let bad =
                if adjacent { kind == IntersectionKind::CollinearOverlap } else { kind != IntersectionKind::None };
            if bad {
                return false;
            }
        }
        true
    }

    fn search(&mut self) {
        self.explored += 1;
        let n = self.points.len();
        let last = *self.path.last().unwrap_or(&0);
        if self.path.len() == n {
            // One orientation per cycle: second vertex precedes the last in angular order.
            if self.rank[self.path[1]] > self.rank[last] || !self.edge_ok(last, self.path[0], true) {
                return;
            }
            let cycle = canonical_cycle(&self.path, self.path[0]);
            let verts: Vec<Point> = cycle.iter().map(|&i| self.points[i]).collect();
            if !is_simple_polygon(&verts, EPS) {
                return;
            }
            let area = signed_area(&verts).abs();
            if better(area, &cycle, &self.best) {
                self.best = Some((area, cycle));
            }
            return;
        }
        for ci in 0..self.candidates.len() {
            let c = self.candidates[ci];
            if self.used[c] || (self.path.len() >= 2 && !self.edge_ok(last, c, false)) {
                continue;
            }
            self.used[c] = true;
            self.path.push(c);
            self.search();
            self.path.pop();
            self.used[c] = false;
        }
    }
}

/// Maximum-area simple polygon through all points (3 <= n <= 15).
///
/// Depth-first search from the bottommost-leftmost point, extending in
/// angular order around the centroid and rejecting any edge that crosses the
/// path so far.
pub fn solve_exact_dfs(points: &[Point]) -> Result<PolygonizationResult, MaxapError> {
    check_points(points, DFS_MAX_POINTS)?;
    let n = points.len();
    let anchor = anchor_index(points);
    let centroid = points.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n as f64);
    let mut candidates: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
    candidates
        .sort_by(|&a, &b| (points[a] - centroid).angle().total_cmp(&(points[b] - centroid).angle()).then(a.cmp(&b)));
    let mut rank = vec![0; n];
    for (r, &c) in candidates.iter().enumerate() {
        rank[c] = r;
    }
    let mut used = vec![false; n];
    used[anchor] = true;
    let mut dfs = Dfs { points, candidates, rank, path: vec![anchor], used, best: None, explored: 0 };
    dfs.search();
    let explored = dfs.explored;
    let (_, cycle) = dfs.best.ok_or(MaxapError::NoPolygon)?;
    finish(points, cycle, explored)
}

/// Brute force over all vertex orders with the anchor fixed (3 <= n <= 8).
pub fn solve_naive_oracle(points: &[Point]) -> Result<PolygonizationResult, MaxapError> {
    check_points(points, NAIVE_MAX_POINTS)?;
    let n = points.len();
    let anchor = anchor_index(points);
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != anchor).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut explored = 0u64;
    let mut visit = |perm: &[usize]| {
        explored += 1;
        if perm[0] > perm[perm.len() - 1] {
            return;
        }
        let mut cycle = vec![anchor];
        cycle.extend_from_slice(perm);
        let verts: Vec<Point> = cycle.iter().map(|&i| points[i]).collect();
        if !is_simple_polygon(&verts, EPS) {
            return;
        }
        let area = signed_area(&verts).abs();
        if better(area, &cycle, &best) {
            best = Some((area, cycle));
        }
    };
    heap_permutations(&mut rest, &mut visit);
    let (_, cycle) = best.ok_or(MaxapError::NoPolygon)?;
    finish(points, cycle, explored)
}

// Heap's algorithm, iterative.
fn heap_permutations(a: &mut [usize], f: &mut impl FnMut(&[usize])) {
    let n = a.len();
    let mut c = vec![0usize; n];
    f(a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn angular_cycle(points: &[Point], center: Point) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a] - center, points[b] - center);
        pa.angle().total_cmp(&pb.angle()).then(pa.norm().total_cmp(&pb.norm())).then(a.cmp(&b))
    });
    order
}

/// Seeded random simple polygonization: rejection over random vertex orders,
/// falling back to sorting by angle around a random interior point (then the
/// centroid).
pub fn random_simple_polygon(points: &[Point], seed: u64) -> Result<PolygonizationResult, MaxapError> {
    check_points(points, usize::MAX)?;
    let n = points.len();
    let anchor = anchor_index(points);
    let mut rng = rng_from_seed(seed);
    let simple = |cycle: &[usize]| is_simple_polygon(&cycle.iter().map(|&i| points[i]).collect::<Vec<_>>(), EPS);

    let mut order: Vec<usize> = (0..n).collect();
    for attempt in 0..RANDOM_PERMUTATION_ATTEMPTS {
        order.shuffle(&mut rng);
        if simple(&order) {
            return finish(points, canonical_cycle(&order, anchor), attempt as u64 + 1);
        }
    }
    let hull = convex_hull_indices(points)?;
    let weights: Vec<f64> = hull.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let center = hull.iter().zip(&weights).fold(Point::default(), |a, (&i, &w)| a + points[i] * (w / total));
    let centroid = points.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n as f64);
    for c in [center, centroid] {
        let cycle = angular_cycle(points, c);
        if simple(&cycle) {
            return finish(points, canonical_cycle(&cycle, anchor), RANDOM_PERMUTATION_ATTEMPTS as u64);
        }
    }
    Err(MaxapError::NoPolygon)
}
