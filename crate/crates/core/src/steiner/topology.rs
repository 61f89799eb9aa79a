use serde::{Deserialize, Serialize};

use super::SteinerError;
use crate::geom::{Point, UnionFind};

/// Tree over `terminal_count + steiner_count` slots. Slots below
/// `terminal_count` are terminals, the rest are Steiner points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteinerTopology {
    pub terminal_count: usize,
    pub steiner_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SteinerTopology {
    pub fn new(terminal_count: usize, steiner_count: usize, edges: Vec<(usize, usize)>) -> Result<Self, SteinerError> {
        let t = Self { terminal_count, steiner_count, edges };
        t.validate()?;
        Ok(t)
    }

    pub fn slot_count(&self) -> usize {
        self.terminal_count + self.steiner_count
    }

    pub fn is_steiner(&self, slot: usize) -> bool {
        slot >= self.terminal_count
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.slot_count()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn validate(&self) -> Result<(), SteinerError> {
        let n = self.slot_count();
        let invalid = |m: String| Err(SteinerError::InvalidTopology(m));
        if self.terminal_count >= 2 && self.steiner_count > self.terminal_count - 2 {
            return invalid(format!("{} Steiner points for {} terminals", self.steiner_count, self.terminal_count));
        }
        if n == 0 || self.edges.len() + 1 != n {
            return invalid(format!("{} edges over {} slots", self.edges.len(), n));
        }
        let mut uf = UnionFind::new(n);
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return invalid(format!("bad edge ({a}, {b})"));
            }
            if !uf.union(a, b) {
                return invalid("cycle".into());
            }
        }
        for (slot, &d) in self.degrees().iter().enumerate() {
            if self.is_steiner(slot) && d != 3 {
                return invalid(format!("Steiner slot {slot} has degree {d}"));
            }
            if !self.is_steiner(slot) && d == 0 && n > 1 {
                return invalid(format!("terminal {slot} is isolated"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Stop once no Steiner point moves more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stop once the length is certified within this relative gap of the optimum.
    pub gap: f64,
    /// Stop early once the lower bound reaches this value.
    pub cutoff: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 10_000, gap: 1e-10, cutoff: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyFit {
    pub steiner: Vec<Point>,
    pub length: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `steiner` is then the best iterate.
    pub converged: bool,
    /// Certified lower bound on the optimal length for this topology.
    pub lower_bound: f64,
}

const WEIGHT_FLOOR: f64 = 1e-13;

/// Length-minimizing Steiner positions for a fixed topology, terminals pinned.
///
/// Each sweep freezes the current edge lengths as weights and moves every
/// Steiner point to the weighted average of its neighbours, solving the
/// coupled linear system exactly by eliminating along the tree. This is the
/// simultaneous form of the Weiszfeld geometric-median update and decreases
/// the total length monotonically.
pub fn optimize_topology(
    topo: &SteinerTopology,
    terminals: &[Point],
    init: Option<&[Point]>,
    opts: OptimizeOptions,
) -> Result<TopologyFit, SteinerError> {
    if terminals.len() != topo.terminal_count {
        return Err(SteinerError::InvalidTopology(format!(
            "{} terminals for a topology over {}",
            terminals.len(),
            topo.terminal_count
        )));
    }
    let n = topo.terminal_count;
    let k = topo.steiner_count;
    let mut steiner: Vec<Point> = match init {
        Some(p) if p.len() == k => p.to_vec(),
        _ => initial_positions(topo, terminals),
    };
    if k == 0 {
        let length = tree_length(topo, terminals, &steiner);
        return Ok(TopologyFit { steiner, length, iterations: 0, converged: true, lower_bound: length });
    }

    let plan = EliminationPlan::new(topo);
    let pos = |slot: usize, st: &[Point]| if slot < n { terminals[slot] } else { st[slot - n] };
    let mut best_len = tree_length(topo, terminals, &steiner);
    let mut best = steiner.clone();
    let mut lower = 0.0f64;
    let mut last_progress = 0;
    let mut weights = vec![0.0; topo.edges.len()];
    for it in 1..=opts.max_iterations {
        for (w, &(a, b)) in weights.iter_mut().zip(&topo.edges) {
            *w = 1.0 / pos(a, &steiner).dist(pos(b, &steiner)).max(WEIGHT_FLOOR);
        }
        let next = plan.solve(topo, terminals, &weights);
        let moved = next.iter().zip(&steiner).map(|(a, b)| a.dist(*b)).fold(0.0, f64::max);
        steiner = next;
        let len = tree_length(topo, terminals, &steiner);
        if len < best_len * (1.0 - STALL_RATE) {
            last_progress = it;
        }
        if len <= best_len {
            best_len = len;
            best.clone_from(&steiner);
        }
        if it - last_progress > STALL_WINDOW {
            lower = lower.max(plan.lower_bound(topo, terminals, &steiner));
            return Ok(TopologyFit {
                steiner: best,
                length: best_len,
                iterations: it,
                converged: true,
                lower_bound: lower,
            });
        }
        lower = lower.max(plan.lower_bound(topo, terminals, &steiner));
        if lower >= opts.cutoff || best_len - lower <= opts.gap * best_len {
            let converged = best_len - lower <= opts.gap * best_len;
            return Ok(TopologyFit { steiner: best, length: best_len, iterations: it, converged, lower_bound: lower });
        }
        let settled = moved < opts.tolerance;
        if (settled || it % SNAP_PERIOD == 0) && snap_degenerate(topo, terminals, &mut steiner, &plan.neighbors) {
            let len = tree_length(topo, terminals, &steiner);
            if len <= best_len {
                best_len = len;
                best.clone_from(&steiner);
            }
        } else if settled {
            return Ok(TopologyFit {
                steiner: best,
                length: best_len,
                iterations: it,
                converged: true,
                lower_bound: lower,
            });
        }
    }
    log::debug!("topology optimization hit the {} iteration cap", opts.max_iterations);
    Ok(TopologyFit {
        steiner: best,
        length: best_len,
        iterations: opts.max_iterations,
        converged: false,
        lower_bound: lower,
    })
}

const SNAP_PERIOD: usize = 16;
// No relative improvement above STALL_RATE for STALL_WINDOW sweeps ends the run.
const STALL_RATE: f64 = 1e-14;
const STALL_WINDOW: usize = 200;

// Pull on slot `s` placed at `at` from its neighbours other than `skip`,
// and the distance to the nearer of them.
fn pull_without(
    at: Point,
    s: usize,
    skip: usize,
    steiner: &[Point],
    terminals: &[Point],
    nb: &[[usize; 3]],
) -> (Point, f64) {
    let n = terminals.len();
    let mut pull = Point::default();
    let mut scale = f64::INFINITY;
    for (j, &o) in nb[s].iter().enumerate() {
        if j != skip {
            let v = (if o < n { terminals[o] } else { steiner[o - n] }) - at;
            let l = v.norm();
            scale = scale.min(l);
            if l > 0.0 {
                pull = pull + v * (1.0 / l);
            }
        }
    }
    (pull, scale)
}

// Points that reach a neighbour get glued there by the weight floor, and a
// Steiner point drifting towards a terminal converges only linearly. Release
// glued points whose other two neighbours pull harder than 1, and jump points
// onto a nearby terminal when staying there is locally optimal.
fn snap_degenerate(topo: &SteinerTopology, terminals: &[Point], steiner: &mut [Point], nb: &[[usize; 3]]) -> bool {
    let n = topo.terminal_count;
    let mut changed = false;
    for s in 0..steiner.len() {
        let mut released = false;
        for i in 0..3 {
            let o = nb[s][i];
            let at = if o < n { terminals[o] } else { steiner[o - n] };
            let (pull, scale) = pull_without(at, s, i, steiner, terminals, nb);
            let r = pull.norm();
            if steiner[s].dist(at) < 1e-9 * scale && r > 1.0 + 1e-12 {
                steiner[s] = at + pull * (1e-3 * scale / r);
                changed = true;
                released = true;
                break;
            }
        }
        if released {
            continue;
        }
        let mut pick: Option<(f64, usize)> = None;
        for (i, &t) in nb[s].iter().enumerate() {
            if t < n {
                let d = steiner[s].dist(terminals[t]);
                if pick.is_none_or(|p| d < p.0) {
                    pick = Some((d, i));
                }
            }
        }
        let Some((d, i)) = pick else { continue };
        let t = terminals[nb[s][i]];
        let (pull, scale) = pull_without(t, s, i, steiner, terminals, nb);
        if d >= 1e-9 * scale && pull.norm() <= 1.0 && d < 0.25 * scale {
            let before = local_length(steiner[s], s, steiner, terminals, nb, n);
            if local_length(t, s, steiner, terminals, nb, n) <= before {
                steiner[s] = t;
                changed = true;
            }
        }
    }
    changed
}

fn local_length(at: Point, s: usize, steiner: &[Point], terminals: &[Point], nb: &[[usize; 3]], n: usize) -> f64 {
    nb[s].iter().map(|&v| at.dist(if v < n { terminals[v] } else { steiner[v - n] })).sum()
}

pub(crate) fn tree_length(topo: &SteinerTopology, terminals: &[Point], steiner: &[Point]) -> f64 {
    let n = topo.terminal_count;
    let pos = |slot: usize| if slot < n { terminals[slot] } else { steiner[slot - n] };
    topo.edges.iter().map(|&(a, b)| pos(a).dist(pos(b))).sum()
}

fn initial_positions(topo: &SteinerTopology, terminals: &[Point]) -> Vec<Point> {
    let n = topo.terminal_count;
    let centroid = terminals.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n.max(1) as f64);
    let mut sums = vec![(Point::default(), 0usize); topo.steiner_count];
    for &(a, b) in &topo.edges {
        for (s, t) in [(a, b), (b, a)] {
            if s >= n && t < n {
                sums[s - n].0 = sums[s - n].0 + terminals[t];
                sums[s - n].1 += 1;
            }
        }
    }
    sums.into_iter().map(|(sum, c)| if c == 0 { centroid } else { (sum + centroid) * (1.0 / (c + 1) as f64) }).collect()
}

// Post-order over the Steiner-only forest, with the parent edge of each node.
struct EliminationPlan {
    order: Vec<usize>,
    parent: Vec<Option<(usize, usize)>>,
    neighbors: Vec<[usize; 3]>,
    // Steiner points deepest first, with parent slot and parent edge.
    up: Vec<(usize, usize, usize)>,
}

impl EliminationPlan {
    fn new(topo: &SteinerTopology) -> Self {
        let n = topo.terminal_count;
        let k = topo.steiner_count;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            if a >= n && b >= n {
                adj[a - n].push((b - n, e));
                adj[b - n].push((a - n, e));
            }
        }
        let mut seen = vec![false; k];
        let mut parent = vec![None; k];
        let mut order = Vec::with_capacity(k);
        for root in 0..k {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![root];
            let mut pre = Vec::new();
            while let Some(v) = stack.pop() {
                pre.push(v);
                for &(w, e) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some((v, e));
                        stack.push(w);
                    }
                }
            }
            order.extend(pre.into_iter().rev());
        }
        let mut neighbors = vec![[usize::MAX; 3]; k];
        let mut fill = vec![0usize; k];
        for &(a, b) in &topo.edges {
            for (s, t) in [(a, b), (b, a)] {
                if s >= n && fill[s - n] < 3 {
                    neighbors[s - n][fill[s - n]] = t;
                    fill[s - n] += 1;
                }
            }
        }
        // Root the whole tree at terminal 0 for the dual bound.
        let mut full: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + k];
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            full[a].push((b, e));
            full[b].push((a, e));
        }
        let mut up = Vec::with_capacity(k);
        let mut seen = vec![false; n + k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, e) in &full[v] {
                if !seen[w] {
                    seen[w] = true;
                    if w >= n {
                        up.push((w, v, e));
                    }
                    stack.push(w);
                }
            }
        }
        up.reverse();
        Self { order, parent, neighbors, up }
    }

    // Weak duality: for unit-bounded edge vectors u_e that balance at every
    // Steiner point, sum_e u_e . (x_a - x_b) depends on terminals only and
    // bounds every tree with this topology from below. Start from the current
    // edge directions and push each Steiner point's imbalance onto its parent edge.
    fn lower_bound(&self, topo: &SteinerTopology, terminals: &[Point], steiner: &[Point]) -> f64 {
        let n = topo.terminal_count;
        let pos = |v: usize| if v < n { terminals[v] } else { steiner[v - n] };
        // u[e] is oriented from edges[e].0 to edges[e].1.
        let mut u: Vec<Point> = topo
            .edges
            .iter()
            .map(|&(a, b)| {
                let d = pos(b) - pos(a);
                let l = d.norm();
                if l > 0.0 {
                    d * (1.0 / l)
                } else {
                    Point::default()
                }
            })
            .collect();
        // Outflow at v: sum of u_e pointing away from v.
        let outflow = |v: usize, u: &[Point]| {
            topo.edges.iter().enumerate().fold(Point::default(), |acc, (e, &(a, b))| {
                if a == v {
                    acc + u[e]
                } else if b == v {
                    acc - u[e]
                } else {
                    acc
                }
            })
        };
        for &(v, _, e) in &self.up {
            let r = outflow(v, &u);
            // Cancel the residual using the parent edge only.
            if topo.edges[e].0 == v {
                u[e] = u[e] - r;
            } else {
                u[e] = u[e] + r;
            }
        }
        let max_norm = u.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let raw: f64 = topo.edges.iter().zip(&u).map(|(&(a, b), ue)| ue.dot(pos(b) - pos(a))).sum();
        raw / max_norm
    }

    fn solve(&self, topo: &SteinerTopology, terminals: &[Point], w: &[f64]) -> Vec<Point> {
        let n = topo.terminal_count;
        let k = topo.steiner_count;
        // Row i: diag[i] * x_i - Σ w_ij x_j (Steiner j) = rhs[i]
        let mut diag = vec![0.0; k];
        let mut rhs = vec![Point::default(); k];
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            for (s, t) in [(a, b), (b, a)] {
                if s >= n {
                    diag[s - n] += w[e];
                    if t < n {
                        rhs[s - n] = rhs[s - n] + terminals[t] * w[e];
                    }
                }
            }
        }
        for &v in &self.order {
            if let Some((p, e)) = self.parent[v] {
                let f = w[e] / diag[v];
                diag[p] -= w[e] * f;
                rhs[p] = rhs[p] + rhs[v] * f;
            }
        }
        let mut x = vec![Point::default(); k];
        for &v in self.order.iter().rev() {
            let mut r = rhs[v];
            if let Some((p, e)) = self.parent[v] {
                r = r + x[p] * w[e];
            }
            x[v] = r * (1.0 / diag[v]);
        }
        x
    }
}
