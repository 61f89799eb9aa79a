use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::primitives::{segment_intersect, IntersectionKind, Point, Segment};
use super::GeomError;

/// Straight-line graph; edges are stored as `(min, max)` index pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaneGraph {
    pub vertices: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    pub terminal: Vec<bool>,
}

impl PlaneGraph {
    pub fn new(vertices: Vec<Point>, terminal: Vec<bool>) -> Self {
        debug_assert_eq!(vertices.len(), terminal.len());
        Self { vertices, edges: Vec::new(), terminal }
    }

    /// Graph with every vertex marked as terminal.
    pub fn on_terminals(vertices: Vec<Point>) -> Self {
        let n = vertices.len();
        Self::new(vertices, vec![true; n])
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GeomError> {
        let n = self.vertices.len();
        if u >= n || v >= n {
            return Err(GeomError::EdgeOutOfRange { u, v, n });
        }
        if u == v {
            return Err(GeomError::SelfLoop(u));
        }
        let e = (u.min(v), u.max(v));
        if self.edges.contains(&e) {
            return Err(GeomError::DuplicateEdge(e.0, e.1));
        }
        self.edges.push(e);
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminal.iter().filter(|&&t| t).count()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn segment(&self, e: (usize, usize)) -> Segment {
        Segment::new(self.vertices[e.0], self.vertices[e.1])
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&e| self.segment(e).length()).sum()
    }

    pub fn edge_set(&self) -> HashSet<(usize, usize)> {
        self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
    }

    pub fn sort_edges(&mut self) {
        for e in &mut self.edges {
            *e = (e.0.min(e.1), e.0.max(e.1));
        }
        self.edges.sort_unstable();
    }

    /// Count of edge pairs whose interiors properly cross.
    pub fn proper_crossings(&self) -> usize {
        let mut count = 0;
        for (i, &e) in self.edges.iter().enumerate() {
            for &f in &self.edges[i + 1..] {
                if segment_intersect(&self.segment(e), &self.segment(f), super::EPS) == IntersectionKind::Proper {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Connected with exactly `|V| - 1` edges.
pub fn is_tree(g: &PlaneGraph) -> bool {
    let n = g.vertex_count();
    if n == 0 || g.edges.len() != n - 1 {
        return false;
    }
    let mut uf = UnionFind::new(n);
    for &(a, b) in &g.edges {
        if a >= n || b >= n || !uf.union(a, b) {
            return false;
        }
    }
    true
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal over the complete Euclidean graph. Equal lengths resolve by `(i, j)` order.
pub fn minimum_spanning_tree(points: &[Point]) -> Result<PlaneGraph, GeomError> {
    let n = points.len();
    if n < 2 {
        return Err(GeomError::TooFewPoints { needed: 2, got: n });
    }
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            cand.push((points[i].dist(points[j]), i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(n);
    let mut g = PlaneGraph::on_terminals(points.to_vec());
    for (_, i, j) in cand {
        if uf.union(i, j) {
            g.edges.push((i, j));
            if g.edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn mst_collinear() {
        let g = minimum_spanning_tree(&pts(&[(0., 0.), (1., 0.), (2., 0.)])).unwrap();
        let mut e = g.edges.clone();
        e.sort();
        assert_eq!(e, vec![(0, 1), (1, 2)]);
        assert_eq!(g.total_length(), 2.0);
    }

    #[test]
    fn mst_equilateral_ties() {
        let h = 3f64.sqrt() / 2.0;
        let g = minimum_spanning_tree(&pts(&[(0., 0.), (1., 0.), (0.5, h)])).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!((g.total_length() - 2.0).abs() < 1e-12);
        assert!(is_tree(&g));
    }

    #[test]
    fn mst_needs_two_points() {
        assert!(minimum_spanning_tree(&pts(&[(0., 0.)])).is_err());
    }

    // Enumerate every labelled tree via Prüfer sequences (Cayley: n^(n-2) of them).
    fn brute_force_mst_length(points: &[Point]) -> f64 {
        let n = points.len();
        let total = n.pow((n - 2) as u32);
        let mut best = f64::INFINITY;
        let mut seq = vec![0usize; n - 2];
        for code in 0..total {
            let mut c = code;
            for s in seq.iter_mut() {
                *s = c % n;
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut len = 0.0;
            for &s in &seq {
                let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
                len += points[leaf].dist(points[s]);
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            len += points[rest[0]].dist(points[rest[1]]);
            best = best.min(len);
        }
        best
    }

    #[test]
    fn mst_matches_cayley_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [4usize, 6, 8] {
            for _ in 0..3 {
                let p: Vec<Point> =
                    (0..n).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
                let g = minimum_spanning_tree(&p).unwrap();
                assert_eq!(g.edges.len(), n - 1);
                assert!((g.total_length() - brute_force_mst_length(&p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mst_length_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p: Vec<Point> = (0..30).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
        let l0 = minimum_spanning_tree(&p).unwrap().total_length();
        p.reverse();
        p.rotate_left(7);
        let l1 = minimum_spanning_tree(&p).unwrap().total_length();
        assert!((l0 - l1).abs() < 1e-12);
    }

    #[test]
    fn tree_examples() {
        let four = pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let mut path = PlaneGraph::on_terminals(four.clone());
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            path.add_edge(a, b).unwrap();
        }
        assert!(is_tree(&path));

        let mut cycle = path.clone();
        cycle.add_edge(3, 0).unwrap();
        assert!(!is_tree(&cycle));

        let mut split = PlaneGraph::on_terminals(four);
        split.add_edge(0, 1).unwrap();
        split.add_edge(2, 3).unwrap();
        assert!(!is_tree(&split));
    }

    #[test]
    fn add_edge_guards() {
        let mut g = PlaneGraph::on_terminals(pts(&[(0., 0.), (1., 0.)]));
        assert!(g.add_edge(0, 0).is_err());
        assert!(g.add_edge(0, 2).is_err());
        g.add_edge(1, 0).unwrap();
        assert!(g.add_edge(0, 1).is_err());
    }
}
