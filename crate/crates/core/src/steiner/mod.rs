//! Euclidean Steiner trees: an exact branch-and-bound solver for small
//! terminal sets, an MST-improvement heuristic for larger ones, structural
//! validation, and a random planar tree baseline.

mod baseline;
mod exact;
mod heuristic;
mod topology;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{GeomError, PlaneGraph, Point};
pub use baseline::random_planar_tree;
pub use exact::{solve_exact, EXACT_MAX_TERMINALS};
pub use heuristic::solve_heuristic;
pub use topology::{optimize_topology, OptimizeOptions, SteinerTopology, TopologyFit};
pub use validate::{validate_smt_structure, StructureReport};

use topology::tree_length;

/// Edges shorter than this are contracted in the final tree.
pub const COLLAPSE_TOLERANCE: f64 = 1e-7;
// Near-degenerate edges get a contraction attempt followed by re-optimization.
const CONTRACT_PROBE: f64 = 1e-4;
const CONTRACT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteinerError {
    #[error("exact solver supports at most {max} terminals, got {n}; use the heuristic")]
    TooManyTerminals { n: usize, max: usize },
    #[error("need at least 2 terminals, got {0}")]
    TooFewTerminals(usize),
    #[error("terminals {0} and {1} coincide")]
    DuplicateTerminals(usize, usize),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Terminals occupy vertices `0..n`; Steiner points follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerSolution {
    pub graph: PlaneGraph,
    pub total_length: f64,
    pub exact: bool,
}

impl SteinerSolution {
    pub fn from_graph(graph: PlaneGraph, exact: bool) -> Self {
        let total_length = graph.total_length();
        Self { graph, total_length, exact }
    }

    pub fn terminal_count(&self) -> usize {
        self.graph.terminal_count()
    }

    pub fn steiner_count(&self) -> usize {
        self.graph.vertex_count() - self.terminal_count()
    }

    /// Move ordered terminal `i` to vertex slot `order[i]`.
    fn relabel_terminals(mut self, order: &[usize]) -> Self {
        let n = order.len();
        let map = |v: usize| if v < n { order[v] } else { v };
        let mut verts = self.graph.vertices.clone();
        for (i, &o) in order.iter().enumerate() {
            verts[o] = self.graph.vertices[i];
        }
        self.graph.vertices = verts;
        for e in &mut self.graph.edges {
            *e = (map(e.0), map(e.1));
        }
        self.graph.sort_edges();
        self
    }
}

pub(crate) fn check_input(points: &[Point]) -> Result<(), SteinerError> {
    if points.len() < 2 {
        return Err(SteinerError::TooFewTerminals(points.len()));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(GeomError::NonFinite.into());
        }
        if let Some(j) = points[..i].iter().position(|q| q == p) {
            return Err(SteinerError::DuplicateTerminals(j, i));
        }
    }
    Ok(())
}

// Merge Steiner slot `s` into its terminal neighbour `t`.
fn contract(topo: &SteinerTopology, steiner: &[Point], s: usize, t: usize) -> (SteinerTopology, Vec<Point>) {
    let n = topo.terminal_count;
    let renumber = |v: usize| {
        if v == s {
            t
        } else if v > s {
            v - 1
        } else {
            v
        }
    };
    let edges = topo
        .edges
        .iter()
        .filter(|&&(a, b)| !((a == s && b == t) || (a == t && b == s)))
        .map(|&(a, b)| (renumber(a), renumber(b)))
        .collect();
    let mut st = steiner.to_vec();
    st.remove(s - n);
    (SteinerTopology { terminal_count: n, steiner_count: topo.steiner_count - 1, edges }, st)
}

/// Contract degenerate Steiner-terminal edges (re-optimizing after each
/// accepted contraction), then build the solution graph.
pub(crate) fn finalize_solution(
    topo: &SteinerTopology,
    terminals: &[Point],
    steiner: &[Point],
    exact: bool,
) -> Result<SteinerSolution, SteinerError> {
    let n = terminals.len();
    let mut topo = topo.clone();
    let mut st = steiner.to_vec();
    let mut len = tree_length(&topo, terminals, &st);
    let mut rejected: Vec<(usize, usize)> = Vec::new();
    loop {
        let pos = |v: usize, st: &[Point]| if v < n { terminals[v] } else { st[v - n] };
        let mut cand: Vec<(f64, usize, usize)> = topo
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                let (s, t) = match (a >= n, b >= n) {
                    (true, false) => (a, b),
                    (false, true) => (b, a),
                    _ => return None,
                };
                let l = pos(a, &st).dist(pos(b, &st));
                (l < CONTRACT_PROBE && !rejected.contains(&(s, t))).then_some((l, s, t))
            })
            .collect();
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let Some(&(_, s, t)) = cand.first() else { break };
        let (t2, init) = contract(&topo, &st, s, t);
        let fit = optimize_topology(&t2, terminals, Some(&init), OptimizeOptions::default())?;
        if fit.length <= len + CONTRACT_SLACK {
            topo = t2;
            st = fit.steiner;
            len = fit.length;
            rejected.clear();
        } else {
            rejected.push((s, t));
        }
    }

    let mut vertices = terminals.to_vec();
    vertices.extend_from_slice(&st);
    let mut terminal = vec![true; n];
    terminal.extend(std::iter::repeat_n(false, st.len()));
    let mut g = PlaneGraph::new(vertices, terminal);
    g.edges = topo.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut g = collapse_short_edges(g, COLLAPSE_TOLERANCE);
    g.sort_edges();
    Ok(SteinerSolution::from_graph(g, exact))
}

/// Merge every non-terminal endpoint of an edge shorter than `tol` into the other endpoint.
pub fn collapse_short_edges(mut g: PlaneGraph, tol: f64) -> PlaneGraph {
    loop {
        let hit = g
            .edges
            .iter()
            .position(|&(a, b)| (!g.terminal[a] || !g.terminal[b]) && g.vertices[a].dist(g.vertices[b]) < tol);
        let Some(idx) = hit else { return g };
        let (a, b) = g.edges[idx];
        let (gone, keep) = if !g.terminal[b] { (b, a) } else { (a, b) };
        let renumber = |v: usize| {
            let v = if v == gone { keep } else { v };
            if v > gone {
                v - 1
            } else {
                v
            }
        };
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(g.edges.len());
        for &(u, v) in &g.edges {
            let (u, v) = (renumber(u), renumber(v));
            let e = (u.min(v), u.max(v));
            if u != v && !edges.contains(&e) {
                edges.push(e);
            }
        }
        g.vertices.remove(gone);
        g.terminal.remove(gone);
        g.edges = edges;
    }
}
