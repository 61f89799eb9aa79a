use std::f64::consts::PI;

use super::topology::{optimize_topology, OptimizeOptions, SteinerTopology};
use super::{check_input, finalize_solution, SteinerError, SteinerSolution};
use crate::geom::{minimum_spanning_tree, Point};

const STEINER_ANGLE: f64 = 2.0 * PI / 3.0;

fn angle_between(u: Point, v: Point) -> f64 {
    (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// MST improvement: while some terminal has two incident edges meeting below
/// 120 degrees, join that terminal and the two neighbours through their
/// Fermat point, then re-balance all Steiner points.
pub fn solve_heuristic(points: &[Point]) -> Result<SteinerSolution, SteinerError> {
    check_input(points)?;
    let n = points.len();
    let mst = minimum_spanning_tree(points)?;
    let mut topo = SteinerTopology { terminal_count: n, steiner_count: 0, edges: mst.edges.clone() };
    let mut steiner: Vec<Point> = Vec::new();
    let opts = OptimizeOptions::default();

    for _ in 0..3 * n {
        let pos = |v: usize, st: &[Point]| if v < n { points[v] } else { st[v - n] };
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); topo.slot_count()];
        for &(a, b) in &topo.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut pick: Option<(f64, usize, usize, usize)> = None;
        for v in 0..n {
            let nb = &adj[v];
            for i in 0..nb.len() {
                for j in (i + 1)..nb.len() {
                    let ang = angle_between(pos(nb[i], &steiner) - points[v], pos(nb[j], &steiner) - points[v]);
                    if ang < STEINER_ANGLE - 1e-9 && pick.is_none_or(|p| ang < p.0) {
                        pick = Some((ang, v, nb[i], nb[j]));
                    }
                }
            }
        }
        let Some((_, v, a, b)) = pick else { break };

        let star = SteinerTopology { terminal_count: 3, steiner_count: 1, edges: vec![(0, 3), (1, 3), (2, 3)] };
        let local = [points[v], pos(a, &steiner), pos(b, &steiner)];
        let fermat = optimize_topology(&star, &local, None, opts)?.steiner[0];

        let s = topo.slot_count();
        topo.edges.retain(|&e| e != (v.min(a), v.max(a)) && e != (v.min(b), v.max(b)));
        topo.edges.extend([(v, s), (a.min(s), a.max(s)), (b.min(s), b.max(s))]);
        topo.steiner_count += 1;
        steiner.push(fermat);
        steiner = optimize_topology(&topo, points, Some(&steiner), opts)?.steiner;
    }
    finalize_solution(&topo, points, &steiner, false)
}
