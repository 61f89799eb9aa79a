use super::topology::{optimize_topology, OptimizeOptions, SteinerTopology};
use super::{finalize_solution, SteinerError, SteinerSolution};
use crate::geom::{minimum_spanning_tree, Point};

pub const EXACT_MAX_TERMINALS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Terminal(usize),
    Steiner(usize),
}

struct Search<'a> {
    terminals: &'a [Point],
    opts: OptimizeOptions,
    best_len: f64,
    best: Option<(Vec<(Node, Node)>, Vec<Point>)>,
    visited: usize,
}

fn to_topology(edges: &[(Node, Node)], terminal_count: usize, steiner_count: usize) -> SteinerTopology {
    let slot = |n: Node| match n {
        Node::Terminal(t) => t,
        Node::Steiner(s) => terminal_count + s,
    };
    SteinerTopology { terminal_count, steiner_count, edges: edges.iter().map(|&(a, b)| (slot(a), slot(b))).collect() }
}

impl Search<'_> {
    fn pos(&self, node: Node, steiner: &[Point]) -> Point {
        match node {
            Node::Terminal(t) => self.terminals[t],
            Node::Steiner(s) => steiner[s],
        }
    }

    // `edges` spans terminals 0..inserted; terminal `inserted` goes in next.
    fn expand(&mut self, edges: &[(Node, Node)], steiner: &[Point], inserted: usize) -> Result<(), SteinerError> {
        let n = self.terminals.len();
        let k = steiner.len();
        for e in 0..edges.len() {
            let (u, v) = edges[e];
            let s = Node::Steiner(k);
            let mut child = edges.to_vec();
            child[e] = (u, s);
            child.push((s, v));
            child.push((s, Node::Terminal(inserted)));
            let mut init = steiner.to_vec();
            init.push((self.pos(u, steiner) + self.pos(v, steiner) + self.terminals[inserted]) * (1.0 / 3.0));
            let topo = to_topology(&child, inserted + 1, k + 1);
            let opts = OptimizeOptions { cutoff: self.best_len, ..self.opts };
            let fit = optimize_topology(&topo, &self.terminals[..=inserted], Some(&init), opts)?;
            self.visited += 1;
            // Adding terminals never shortens the optimum, so a partial tree
            // already at the incumbent length cannot lead anywhere better.
            if fit.lower_bound >= self.best_len || fit.length >= self.best_len {
                continue;
            }
            if inserted + 1 == n {
                self.best_len = fit.length;
                self.best = Some((child, fit.steiner));
            } else {
                self.expand(&child, &fit.steiner, inserted + 1)?;
            }
        }
        Ok(())
    }
}

/// Exact Steiner minimal tree for `2 <= n <= 8` by branch-and-bound over full
/// topologies. Degenerate full topologies cover every non-full tree, so the
/// minimum over them is the global optimum once short edges are collapsed.
pub fn solve_exact(points: &[Point]) -> Result<SteinerSolution, SteinerError> {
    let n = points.len();
    if n > EXACT_MAX_TERMINALS {
        return Err(SteinerError::TooManyTerminals { n, max: EXACT_MAX_TERMINALS });
    }
    super::check_input(points)?;
    if n == 2 {
        let mut g = minimum_spanning_tree(points)?;
        g.sort_edges();
        return Ok(SteinerSolution::from_graph(g, true));
    }

    // Far-from-centroid terminals first tightens the early bounds.
    let centroid = points.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n as f64);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .dist(centroid)
            .total_cmp(&points[a].dist(centroid))
            .then(points[a].x.total_cmp(&points[b].x))
            .then(points[a].y.total_cmp(&points[b].y))
    });
    let ordered: Vec<Point> = order.iter().map(|&i| points[i]).collect();

    // The heuristic tree is a valid incumbent and usually close to optimal.
    let incumbent = super::solve_heuristic(&ordered)?;
    let mut search = Search {
        terminals: &ordered,
        opts: OptimizeOptions::default(),
        best_len: incumbent.total_length,
        best: None,
        visited: 0,
    };
    let s0 = Node::Steiner(0);
    let star = vec![(Node::Terminal(0), s0), (Node::Terminal(1), s0), (Node::Terminal(2), s0)];
    let topo = to_topology(&star, 3, 1);
    let fit = optimize_topology(&topo, &ordered[..3], None, search.opts)?;
    if n == 3 {
        if fit.length < search.best_len {
            search.best_len = fit.length;
            search.best = Some((star, fit.steiner));
        }
    } else if fit.length < search.best_len {
        search.expand(&star, &fit.steiner, 3)?;
    }
    log::debug!("exact Steiner search visited {} partial topologies for n={n}", search.visited);

    let sol = match search.best {
        Some((edges, steiner)) => {
            let topo = to_topology(&edges, n, steiner.len());
            finalize_solution(&topo, &ordered, &steiner, true)?
        }
        None => SteinerSolution { exact: true, ..incumbent },
    };
    Ok(sol.relabel_terminals(&order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steiner::validate_smt_structure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points() {
        let p = vec![Point::new(0.1, 0.2), Point::new(0.4, 0.6)];
        let s = solve_exact(&p).unwrap();
        assert_eq!(s.graph.edges, vec![(0, 1)]);
        assert!((s.total_length - 0.5).abs() < 1e-12);
        assert!(s.exact);
    }

    #[test]
    fn equilateral_triangle() {
        let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 3f64.sqrt() / 2.0)];
        let s = solve_exact(&p).unwrap();
        assert!((s.total_length - 3f64.sqrt()).abs() < 1e-6);
        assert_eq!(s.steiner_count(), 1);
        let c = Point::new(0.5, 3f64.sqrt() / 6.0);
        assert!(s.graph.vertices[3].dist(c) < 1e-6);
    }

    #[test]
    fn unit_square() {
        let p = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)];
        let s = solve_exact(&p).unwrap();
        assert!((s.total_length - (1.0 + 3f64.sqrt())).abs() < 1e-6);
        assert_eq!(s.steiner_count(), 2);
    }

    #[test]
    fn obtuse_triangle_has_no_steiner_point() {
        let p = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(-0.9, 0.2)];
        let s = solve_exact(&p).unwrap();
        assert_eq!(s.steiner_count(), 0);
        assert!((s.total_length - (1.0 + p[2].norm())).abs() < 1e-9);
    }

    #[test]
    fn size_limit() {
        let p: Vec<Point> = (0..9).map(|i| Point::new(i as f64, (i * i) as f64 * 0.1)).collect();
        assert_eq!(solve_exact(&p).unwrap_err(), SteinerError::TooManyTerminals { n: 9, max: 8 });
    }

    #[test]
    fn random_instances_are_valid_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 4..=7 {
            let p: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
            let s = solve_exact(&p).unwrap();
            let mst = minimum_spanning_tree(&p).unwrap().total_length();
            assert!(s.total_length <= mst + 1e-12);
            assert!(mst / s.total_length <= 1.22);
            let report = validate_smt_structure(&s, &p, 1e-3);
            assert!(report.all_pass(), "{report:?}");
        }
    }
}
