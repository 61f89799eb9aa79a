//! Images to structures to evaluation records, against the stored oracle
//! geometry of a dataset record. Works for any image source.

use serde::{Deserialize, Serialize};

use crate::dataset::{Geometry, InstanceManifest};
use crate::extract::{
    detect_nodes, extract_graph, extract_polygon, extract_square, snap_square, ExtractError, ExtractionThresholds,
    Quad, SnapParams,
};
use crate::geom::{is_tree, signed_area, PlaneGraph, Point, Polyline};
use crate::maxap::same_cycle;
use crate::metrics::{alignment_score, squareness_mask, EvalRecord};
use crate::raster::{GrayImage, PixelMap};

/// Structure recovered from one image. Geometry is in world coordinates
/// except the square quads, which stay in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Extracted {
    Square { quad: Quad, snapped: Quad },
    Steiner { graph: PlaneGraph },
    Maxap { order: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalParams {
    pub thresholds: ExtractionThresholds,
    pub snap: SnapParams,
}

fn map_of(m: &InstanceManifest) -> PixelMap {
    PixelMap { m: m.world_to_pixel }
}

pub fn extract_structure(m: &InstanceManifest, img: &GrayImage, p: &EvalParams) -> Result<Extracted, ExtractError> {
    let map = map_of(m);
    match &m.geometry {
        Geometry::Square { curve, .. } => {
            let quad = extract_square(img)?;
            let curve = Polyline::new(curve.iter().map(|&q| map.apply(q)).collect(), true)
                .map_err(|_| ExtractError::Degenerate)?;
            let snapped = snap_square(&quad, &curve, &p.snap);
            Ok(Extracted::Square { quad, snapped })
        }
        Geometry::Steiner { terminals, .. } => {
            let px: Vec<Point> = terminals.iter().map(|&t| map.apply(t)).collect();
            let nodes = detect_nodes(img, &px, &p.thresholds);
            let mut graph = extract_graph(img, &nodes, &p.thresholds);
            // Snapped terminals go back to their exact world positions.
            for (v, n) in graph.vertices.iter_mut().zip(&nodes) {
                *v = match n.terminal {
                    Some(i) => terminals[i],
                    None => map.invert(n.position),
                };
            }
            let mut terminal_of = vec![None; graph.vertices.len()];
            for (k, n) in nodes.iter().enumerate() {
                terminal_of[k] = n.terminal;
            }
            Ok(Extracted::Steiner { graph: reorder_terminals_first(graph, &terminal_of, terminals.len()) })
        }
        Geometry::Maxap { points, .. } => {
            let px: Vec<Point> = points.iter().map(|&t| map.apply(t)).collect();
            Ok(Extracted::Maxap { order: extract_polygon(img, &px, &p.thresholds)?.order })
        }
    }
}

// Terminal `i` becomes vertex `i` (missing terminals leave the graph shorter
// than the terminal count); other nodes follow in detection order.
fn reorder_terminals_first(g: PlaneGraph, terminal_of: &[Option<usize>], n_terminals: usize) -> PlaneGraph {
    let mut slot = vec![usize::MAX; g.vertices.len()];
    let mut present: Vec<(usize, usize)> =
        terminal_of.iter().enumerate().filter_map(|(k, t)| t.map(|t| (t, k))).collect();
    present.sort();
    let mut next = 0;
    for &(_, k) in &present {
        slot[k] = next;
        next += 1;
    }
    for k in 0..g.vertices.len() {
        if slot[k] == usize::MAX {
            slot[k] = next;
            next += 1;
        }
    }
    let mut verts = vec![Point::default(); g.vertices.len()];
    let mut term = vec![false; g.vertices.len()];
    for k in 0..g.vertices.len() {
        verts[slot[k]] = g.vertices[k];
        term[slot[k]] = terminal_of[k].is_some();
    }
    let mut out = PlaneGraph::new(verts, term);
    for &(a, b) in &g.edges {
        let (a, b) = (slot[a], slot[b]);
        out.edges.push((a.min(b), a.max(b)));
    }
    out.sort_edges();
    debug_assert!(present.len() <= n_terminals);
    out
}

/// Steiner validity: a tree containing every terminal.
pub fn steiner_valid(g: &PlaneGraph, n_terminals: usize) -> bool {
    g.terminal_count() == n_terminals && g.terminal.iter().take(n_terminals).all(|&t| t) && is_tree(g)
}

/// Same edge set after matching extracted Steiner points to reference ones
/// within `tol_px` pixels (terminals match by index).
pub fn same_tree(got: &PlaneGraph, want: &PlaneGraph, n_terminals: usize, map: &PixelMap, tol_px: f64) -> bool {
    if got.vertices.len() != want.vertices.len() || got.edges.len() != want.edges.len() {
        return false;
    }
    let mut to_want: Vec<usize> = (0..n_terminals).collect();
    let mut taken = vec![false; want.vertices.len()];
    for v in n_terminals..got.vertices.len() {
        let p = map.apply(got.vertices[v]);
        let hit = (n_terminals..want.vertices.len())
            .filter(|&w| !taken[w])
            .map(|w| (w, map.apply(want.vertices[w]).dist(p)))
            .filter(|&(_, d)| d <= tol_px)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((w, _)) = hit else { return false };
        taken[w] = true;
        to_want.push(w);
    }
    let mut a: Vec<(usize, usize)> =
        got.edges.iter().map(|&(u, v)| (to_want[u].min(to_want[v]), to_want[u].max(to_want[v]))).collect();
    a.sort_unstable();
    let mut b = want.edges.clone();
    b.sort_unstable();
    a == b
}

fn size_of(m: &InstanceManifest) -> usize {
    match &m.geometry {
        Geometry::Square { squares, .. } => squares.len(),
        Geometry::Steiner { terminals, .. } => terminals.len(),
        Geometry::Maxap { points, .. } => points.len(),
    }
}

/// Scores an extraction outcome against the record's oracle geometry.
pub fn score(
    m: &InstanceManifest,
    seed: u64,
    outcome: &Result<Extracted, ExtractError>,
    img: &GrayImage,
    p: &EvalParams,
) -> EvalRecord {
    let mut rec = EvalRecord::invalid(m.instance_id.clone(), seed, size_of(m));
    let Ok(found) = outcome else { return rec };
    let map = map_of(m);
    match (&m.geometry, found) {
        (Geometry::Square { curve, .. }, Extracted::Square { snapped, .. }) => {
            let Ok(curve) = Polyline::new(curve.iter().map(|&q| map.apply(q)).collect(), true) else { return rec };
            rec.valid = true;
            rec.primary_value = Some(alignment_score(snapped, &curve));
            rec.squareness = squareness_mask(img).ok();
        }
        (Geometry::Steiner { terminals, solution, length, exact }, Extracted::Steiner { graph }) => {
            if !steiner_valid(graph, terminals.len()) {
                return rec;
            }
            let len = graph.total_length();
            rec.valid = true;
            rec.primary_value = Some(len);
            if *exact {
                rec.ratio_vs_optimal = Some(len / length);
                rec.optimal_match = Some(same_tree(graph, solution, terminals.len(), &map, p.thresholds.snap_radius));
            }
        }
        (Geometry::Maxap { points, order, area }, Extracted::Maxap { order: got }) => {
            let verts: Vec<Point> = got.iter().map(|&i| points[i]).collect();
            let a = signed_area(&verts).abs();
            rec.valid = true;
            rec.primary_value = Some(a);
            rec.ratio_vs_optimal = Some(a / area);
            rec.optimal_match = Some(same_cycle(got, order));
        }
        _ => {}
    }
    rec
}

/// Extract then score.
pub fn evaluate_image(
    m: &InstanceManifest,
    seed: u64,
    img: &GrayImage,
    p: &EvalParams,
) -> (Result<Extracted, ExtractError>, EvalRecord) {
    let outcome = extract_structure(m, img, p);
    let rec = score(m, seed, &outcome, img, p);
    (outcome, rec)
}

/// Solver choice for `solve_record`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Heuristic,
    Mst,
    Random,
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolveMode::Exact),
            "heuristic" => Ok(SolveMode::Heuristic),
            "mst" => Ok(SolveMode::Mst),
            "random" => Ok(SolveMode::Random),
            other => Err(format!("unknown mode '{other}' (expected exact, heuristic, mst or random)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Steiner(#[from] crate::steiner::SteinerError),
    #[error(transparent)]
    Maxap(#[from] crate::maxap::MaxapError),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
    #[error("mode {mode:?} is not available for the {task} task")]
    Unsupported { task: crate::dataset::Task, mode: SolveMode },
}

/// Solves the record's instance directly (no images) and scores the result
/// against the stored oracle solution. `seed` drives the random baselines.
pub fn solve_record(m: &InstanceManifest, mode: SolveMode, seed: u64) -> Result<EvalRecord, SolveError> {
    use crate::maxap::{random_simple_polygon, solve_exact_dfs};
    use crate::steiner::{random_planar_tree, solve_exact, solve_heuristic};

    let mut rec = EvalRecord::invalid(m.instance_id.clone(), seed, size_of(m));
    let map = map_of(m);
    match &m.geometry {
        Geometry::Steiner { terminals, solution, length, exact } => {
            let g = match mode {
                SolveMode::Exact => solve_exact(terminals)?.graph,
                SolveMode::Heuristic => solve_heuristic(terminals)?.graph,
                SolveMode::Mst => crate::geom::minimum_spanning_tree(terminals)?,
                SolveMode::Random => random_planar_tree(terminals, seed),
            };
            let len = g.total_length();
            rec.valid = steiner_valid(&g, terminals.len());
            rec.primary_value = Some(len);
            if *exact {
                rec.ratio_vs_optimal = Some(len / length);
                rec.optimal_match = Some(same_tree(&g, solution, terminals.len(), &map, 1.0));
            }
        }
        Geometry::Maxap { points, order, area } => {
            let r = match mode {
                SolveMode::Exact => solve_exact_dfs(points)?,
                SolveMode::Random => random_simple_polygon(points, seed)?,
                _ => return Err(SolveError::Unsupported { task: m.task, mode }),
            };
            rec.valid = true;
            rec.primary_value = Some(r.area);
            rec.ratio_vs_optimal = Some(r.area / area);
            rec.optimal_match = Some(same_cycle(&r.order, order));
        }
        Geometry::Square { .. } => return Err(SolveError::Unsupported { task: m.task, mode }),
    }
    Ok(rec)
}
