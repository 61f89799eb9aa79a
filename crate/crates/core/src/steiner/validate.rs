use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SteinerSolution;
use crate::geom::{convex_hull, is_tree, point_in_or_on_polygon, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub tree: bool,
    /// No two edges properly cross.
    pub planar: bool,
    pub steiner_degree_3: bool,
    /// Every vertex of degree > 1 has all incident angles >= 120 degrees - tol.
    pub angles: bool,
    pub steiner_count_bound: bool,
    pub steiner_in_hull: bool,
}

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.tree
            && self.planar
            && self.steiner_degree_3
            && self.angles
            && self.steiner_count_bound
            && self.steiner_in_hull
    }
}

pub fn validate_smt_structure(sol: &SteinerSolution, terminals: &[Point], angle_tol: f64) -> StructureReport {
    let g = &sol.graph;
    let n = terminals.len();
    let adj = g.adjacency();
    let steiner: Vec<usize> = (0..g.vertex_count()).filter(|&v| !g.terminal[v]).collect();

    let min_angle = |v: usize| {
        let dirs: Vec<Point> = adj[v].iter().map(|&w| g.vertices[w] - g.vertices[v]).collect();
        let mut m = f64::INFINITY;
        for i in 0..dirs.len() {
            for j in (i + 1)..dirs.len() {
                let c = dirs[i].dot(dirs[j]) / (dirs[i].norm() * dirs[j].norm());
                m = m.min(c.clamp(-1.0, 1.0).acos());
            }
        }
        m
    };
    let angles =
        (0..g.vertex_count()).filter(|&v| adj[v].len() > 1).all(|v| min_angle(v) >= 2.0 * PI / 3.0 - angle_tol);

    let steiner_in_hull = steiner.is_empty()
        || match convex_hull(terminals) {
            Ok(h) => steiner.iter().all(|&s| point_in_or_on_polygon(g.vertices[s], h.vertices(), 1e-9)),
            Err(_) => false,
        };

    StructureReport {
        tree: is_tree(g),
        planar: g.proper_crossings() == 0,
        steiner_degree_3: steiner.iter().all(|&s| adj[s].len() == 3),
        angles,
        steiner_count_bound: steiner.len() <= n.saturating_sub(2),
        steiner_in_hull,
    }
}
