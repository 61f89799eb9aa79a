use serde::{Deserialize, Serialize};

use super::shape::components;
use super::{ExtractError, ExtractionThresholds};
use crate::geom::{
    is_simple_polygon, segment_intersect, IntersectionKind, PlaneGraph, Point, Segment, SimplePolygon, EPS,
};
use crate::raster::{bresenham, fill_polygon, GrayImage};

/// Detected vertex in pixel coordinates, with the terminal it was snapped to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub position: Point,
    pub terminal: Option<usize>,
}

/// Fraction of the Bresenham pixels between `a` and `b` that are white within
/// a 1px dilation. Pixels closer than `endpoint_exclusion` to either end are
/// skipped; on short segments the zone shrinks to leave about 2px in the
/// middle, and if still nothing remains every pixel is used.
pub fn edge_coverage(img: &GrayImage, a: Point, b: Point, th: &ExtractionThresholds) -> f64 {
    let px = |p: Point| (p.x.floor() as i64, p.y.floor() as i64);
    let line = bresenham(px(a), px(b));
    let center = |(x, y): (i64, i64)| Point::new(x as f64 + 0.5, y as f64 + 0.5);
    let zone = th.endpoint_exclusion.min((0.5 * a.dist(b) - 1.0).max(0.0));
    let inner: Vec<(i64, i64)> =
        line.iter().copied().filter(|&q| center(q).dist(a) > zone && center(q).dist(b) > zone).collect();
    let samples = if inner.is_empty() { &line } else { &inner };
    let white = |(x, y): (i64, i64)| {
        (-1..=1).any(|dy| (-1..=1).any(|dx| img.get(x + dx, y + dy).is_some_and(|v| v >= th.binarize_white)))
    };
    samples.iter().filter(|&&q| white(q)).count() as f64 / samples.len() as f64
}

/// Centroids of dark components, snapped onto nearby terminals (`terminals`
/// in pixel coordinates). Nodes landing on the same terminal are merged.
pub fn detect_nodes(img: &GrayImage, terminals: &[Point], th: &ExtractionThresholds) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    for comp in components(img, |v| v <= th.binarize_black) {
        let c = comp.centroid();
        let nearest = terminals
            .iter()
            .enumerate()
            .map(|(i, &t)| (i, t.dist(c)))
            .filter(|&(_, d)| d <= th.snap_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let node = match nearest {
            Some((i, _)) => Node { position: terminals[i], terminal: Some(i) },
            None => Node { position: c, terminal: None },
        };
        if !nodes.iter().any(|n| n.position == node.position) {
            nodes.push(node);
        }
    }
    nodes
}

fn direction_gap(u: Point, v: Point) -> f64 {
    let a = (u.y.atan2(u.x) - v.y.atan2(v.x)).abs();
    a.min(std::f64::consts::TAU - a)
}

/// Edges between `nodes` by the coverage test, plus automatic edges between
/// very close nodes. A segment passing within `close_vertex_dist` of a third
/// node is not an edge. At each node, of two retained edges leaving in nearly
/// the same direction only the shorter survives.
pub fn extract_graph(img: &GrayImage, nodes: &[Node], th: &ExtractionThresholds) -> PlaneGraph {
    let pos: Vec<Point> = nodes.iter().map(|n| n.position).collect();
    let n = pos.len();
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if pos[i].dist(pos[j]) < th.close_vertex_dist {
                kept.push((i, j));
                continue;
            }
            let seg = Segment::new(pos[i], pos[j]);
            let through_node = (0..n).any(|k| k != i && k != j && seg.distance_to(pos[k]) < th.close_vertex_dist);
            if !through_node && edge_coverage(img, pos[i], pos[j], th) > th.edge_fraction {
                kept.push((i, j));
            }
        }
    }
    let len = |e: (usize, usize)| pos[e.0].dist(pos[e.1]);
    let mut dropped = vec![false; kept.len()];
    for v in 0..n {
        let inc: Vec<usize> = (0..kept.len()).filter(|&k| kept[k].0 == v || kept[k].1 == v).collect();
        let dir = |k: usize| {
            let (a, b) = kept[k];
            pos[if a == v { b } else { a }] - pos[v]
        };
        for (x, &ka) in inc.iter().enumerate() {
            for &kb in &inc[x + 1..] {
                if direction_gap(dir(ka), dir(kb)) < th.collinear_angle {
                    let longer = if len(kept[ka]) > len(kept[kb]) { ka } else { kb };
                    dropped[longer] = true;
                }
            }
        }
    }
    let mut g = PlaneGraph::new(pos, nodes.iter().map(|n| n.terminal.is_some()).collect());
    for (k, &(a, b)) in kept.iter().enumerate() {
        if !dropped[k] {
            g.edges.push((a, b));
        }
    }
    g.sort_edges();
    g
}

/// Recovered polygon together with the visiting order of the input points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedPolygon {
    pub order: Vec<usize>,
    pub polygon: SimplePolygon,
}

/// Node budget for the cycle search.
const CYCLE_SEARCH_LIMIT: usize = 2_000_000;
/// At most this many distinct cycles are compared against the image.
const MAX_CYCLES: usize = 64;

/// Simple Hamiltonian cycle through `points` (pixel coordinates) using only
/// edges that pass the coverage test. Edges are tried by decreasing coverage;
/// when several cycles fit the edge image, the one whose filled interior best
/// matches the dark pixels of `img` wins.
pub fn extract_polygon(
    img: &GrayImage,
    points: &[Point],
    th: &ExtractionThresholds,
) -> Result<ExtractedPolygon, ExtractError> {
    let n = points.len();
    if n < 3 {
        return Err(ExtractError::TooFewPoints { needed: 3, got: n });
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let c = edge_coverage(img, points[i], points[j], th);
            if c > th.edge_fraction {
                adj[i].push((j, c));
                adj[j].push((i, c));
            }
        }
    }
    if adj.iter().any(|a| a.len() < 2) {
        return Err(ExtractError::NoCycle);
    }
    for a in &mut adj {
        a.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    }
    let adj: Vec<Vec<usize>> = adj.into_iter().map(|a| a.into_iter().map(|x| x.0).collect()).collect();

    let mut search = CycleSearch {
        points,
        adj: &adj,
        path: vec![0],
        used: vec![false; n],
        budget: CYCLE_SEARCH_LIMIT,
        found: Vec::new(),
    };
    search.used[0] = true;
    search.extend();
    let order = match search.found.len() {
        0 => return Err(ExtractError::NoCycle),
        1 => search.found.pop().unwrap(),
        _ => {
            let dark: Vec<bool> = img.data().iter().map(|&v| v <= th.binarize_black).collect();
            let mismatch = |order: &Vec<usize>| {
                let verts: Vec<Point> = order.iter().map(|&i| pixel_center(points[i])).collect();
                let mut mask = GrayImage::new(img.width(), 0);
                fill_polygon(&mut mask, &verts, 1);
                mask.data().iter().zip(&dark).filter(|&(&m, &d)| (m == 1) != d).count()
            };
            let scores: Vec<usize> = search.found.iter().map(mismatch).collect();
            let best = (0..scores.len()).min_by_key(|&k| scores[k]).unwrap();
            search.found.swap_remove(best)
        }
    };
    let verts: Vec<Point> = order.iter().map(|&i| points[i]).collect();
    let polygon = SimplePolygon::new(verts, EPS).map_err(|_| ExtractError::NoCycle)?;
    Ok(ExtractedPolygon { order, polygon })
}

fn pixel_center(p: Point) -> Point {
    Point::new(p.x.floor() + 0.5, p.y.floor() + 0.5)
}

struct CycleSearch<'a> {
    points: &'a [Point],
    adj: &'a [Vec<usize>],
    path: Vec<usize>,
    used: Vec<bool>,
    budget: usize,
    found: Vec<Vec<usize>>,
}

impl CycleSearch<'_> {
    // Does segment a-b meet a path edge other than the ones sharing its ends?
    fn crosses(&self, a: usize, b: usize, closing: bool) -> bool {
        let s = Segment::new(self.points[a], self.points[b]);
        let p = &self.path;
        (usize::from(closing)..p.len().saturating_sub(2)).any(|k| {
            segment_intersect(&s, &Segment::new(self.points[p[k]], self.points[p[k + 1]]), EPS)
                != IntersectionKind::None
        })
    }

    /// Returns false once the search should stop.
    fn extend(&mut self) -> bool {
        if self.budget == 0 || self.found.len() == MAX_CYCLES {
            return false;
        }
        self.budget -= 1;
        let n = self.used.len();
        let last = *self.path.last().unwrap();
        if self.path.len() == n {
            // Each cycle is met in both directions; keep one.
            if self.path[1] < last && self.adj[last].contains(&0) && !self.crosses(last, 0, true) {
                let verts: Vec<Point> = self.path.iter().map(|&i| self.points[i]).collect();
                if is_simple_polygon(&verts, EPS) {
                    self.found.push(self.path.clone());
                }
            }
            return true;
        }
        for k in 0..self.adj[last].len() {
            let next = self.adj[last][k];
            if self.used[next] || self.crosses(last, next, false) {
                continue;
            }
            self.used[next] = true;
            self.path.push(next);
            // Every unvisited point still needs two free candidate edges.
            let feasible = self.path.len() == n
                || (0..n).all(|v| {
                    self.used[v] || self.adj[v].iter().filter(|&&w| !self.used[w] || w == 0 || w == next).count() >= 2
                });
            let go_on = !feasible || self.extend();
            self.path.pop();
            self.used[next] = false;
            if !go_on {
                return false;
            }
        }
        true
    }
}
