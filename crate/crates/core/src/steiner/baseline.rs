use rand::seq::SliceRandom;

use crate::geom::{segment_intersect, IntersectionKind, PlaneGraph, Point, Segment, EPS};
use crate::seeds::rng_from_seed;

const NEAREST_CHOICES: usize = 2;

/// Random non-crossing spanning tree over exactly `points` (no Steiner points).
///
/// Points are inserted in random order; each joins one of the two nearest
/// already inserted points (picked uniformly) whose connecting segment
/// crosses no existing edge.
pub fn random_planar_tree(points: &[Point], seed: u64) -> PlaneGraph {
    let n = points.len();
    let mut g = PlaneGraph::on_terminals(points.to_vec());
    if n < 2 {
        return g;
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    for k in 1..n {
        let p = order[k];
        let mut placed: Vec<usize> = order[..k].to_vec();
        placed.sort_by(|&a, &b| points[p].dist(points[a]).total_cmp(&points[p].dist(points[b])).then(a.cmp(&b)));
        let clear = |q: usize, g: &PlaneGraph| {
            let s = Segment::new(points[p], points[q]);
            g.edges.iter().all(|&(a, b)| {
                let kind = segment_intersect(&s, &g.segment((a, b)), EPS);
                kind == IntersectionKind::None || (kind == IntersectionKind::EndpointTouch && (a == q || b == q))
            })
        };
        let visible: Vec<usize> = placed.iter().copied().filter(|&q| clear(q, &g)).collect();
        let target = visible[..visible.len().min(NEAREST_CHOICES)].choose(&mut rng).copied().unwrap_or(placed[0]);
        g.edges.push((p.min(target), p.max(target)));
    }
    g.sort_edges();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::is_tree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_single_edge() {
        let g = random_planar_tree(&[Point::new(0., 0.), Point::new(1., 1.)], 3);
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn always_planar_spanning_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..50 {
            let n = rng.gen_range(2..30);
            let p: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
            let g = random_planar_tree(&p, seed);
            assert!(is_tree(&g));
            assert_eq!(g.proper_crossings(), 0);
        }
    }

    #[test]
    fn seed_changes_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p: Vec<Point> = (0..15).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
        assert_eq!(random_planar_tree(&p, 4), random_planar_tree(&p, 4));
        let distinct: std::collections::HashSet<Vec<(usize, usize)>> =
            (0..10).map(|s| random_planar_tree(&p, s).edges).collect();
        assert!(distinct.len() > 1);
    }
}
