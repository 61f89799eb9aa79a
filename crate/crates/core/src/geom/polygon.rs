use serde::{Deserialize, Serialize};

use super::primitives::{orientation, segment_intersect, IntersectionKind, Point, Segment};
use super::GeomError;

/// Ordered point sequence, optionally closed. Consecutive duplicates are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<Point>,
    closed: bool,
}

impl Polyline {
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Self, GeomError> {
        let mut pts: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !p.is_finite() {
                return Err(GeomError::NonFinite);
            }
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if closed {
            while pts.len() > 1 && pts.first() == pts.last() {
                pts.pop();
            }
            if pts.len() < 3 {
                return Err(GeomError::TooFewPoints { needed: 3, got: pts.len() });
            }
        } else if pts.is_empty() {
            return Err(GeomError::Empty);
        }
        Ok(Self { points: pts, closed })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        match (self.closed, self.points.len()) {
            (true, n) => n,
            (false, n) => n.saturating_sub(1),
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.points.len();
        (0..self.segment_count()).map(move |i| Segment::new(self.points[i], self.points[(i + 1) % n]))
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Polyline {
        Polyline { points: self.points.iter().map(|&p| f(p)).collect(), closed: self.closed }
    }
}

/// Distance from `p` to the nearest point of `c`.
pub fn point_to_polyline_distance(p: Point, c: &Polyline) -> Result<f64, GeomError> {
    if c.is_empty() {
        return Err(GeomError::Empty);
    }
    if c.len() == 1 {
        return Ok(p.dist(c.points()[0]));
    }
    Ok(c.segments().map(|s| s.distance_to(p)).fold(f64::INFINITY, f64::min))
}

/// Signed area, positive for counter-clockwise order.
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc * 0.5
}

/// Absolute shoelace area of the closed vertex ring.
pub fn shoelace_area(vertices: &[Point]) -> Result<f64, GeomError> {
    if vertices.len() < 3 {
        return Err(GeomError::TooFewPoints { needed: 3, got: vertices.len() });
    }
    Ok(signed_area(vertices).abs())
}

/// True iff no two non-adjacent edges meet and adjacent edges share only their common vertex.
pub fn is_simple_polygon(vertices: &[Point], eps: f64) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| Segment::new(vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        if vertices[i] == vertices[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let ei = edge(i);
        for j in (i + 1)..n {
            let ej = edge(j);
            let kind = segment_intersect(&ei, &ej, eps);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                if n == 3 {
                    if kind == IntersectionKind::CollinearOverlap {
                        return false;
                    }
                    continue;
                }
                // Only the shared vertex may be common; a fold-back overlaps collinearly.
                if kind == IntersectionKind::CollinearOverlap {
                    return false;
                }
            } else if kind != IntersectionKind::None {
                return false;
            }
        }
    }
    signed_area(vertices) != 0.0
}

/// Closed, validated simple polygon (closing edge implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePolygon {
    vertices: Vec<Point>,
}

impl SimplePolygon {
    pub fn new(vertices: Vec<Point>, eps: f64) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::TooFewPoints { needed: 3, got: vertices.len() });
        }
        if !is_simple_polygon(&vertices, eps) {
            return Err(GeomError::NotSimple);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }
}

/// Even-odd containment test; boundary points may land on either side.
pub fn point_in_polygon(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Containment including a tolerance band around the boundary.
pub fn point_in_or_on_polygon(p: Point, ring: &[Point], tol: f64) -> bool {
    if point_in_polygon(p, ring) {
        return true;
    }
    let n = ring.len();
    (0..n).any(|i| Segment::new(ring[i], ring[(i + 1) % n]).distance_to(p) <= tol)
}

/// Convex hull by monotone chain, counter-clockwise, collinear boundary points dropped.
pub fn convex_hull(points: &[Point]) -> Result<SimplePolygon, GeomError> {
    let idx = convex_hull_indices(points)?;
    Ok(SimplePolygon { vertices: idx.into_iter().map(|i| points[i]).collect() })
}

/// Indices of the hull vertices, counter-clockwise.
pub fn convex_hull_indices(points: &[Point]) -> Result<Vec<usize>, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::TooFewPoints { needed: 3, got: points.len() });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].x.total_cmp(&points[j].x).then(points[i].y.total_cmp(&points[j].y)));
    order.dedup_by(|a, b| points[*a] == points[*b]);

    let turn = |o: usize, a: usize, b: usize| (points[a] - points[o]).cross(points[b] - points[o]);
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for &i in &order {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(GeomError::DegenerateHull);
    }
    // Near-collinear inputs can survive the exact test; reject zero-width hulls.
    let ring: Vec<Point> = hull.iter().map(|&i| points[i]).collect();
    let all_flat = (0..ring.len())
        .all(|k| orientation(ring[k], ring[(k + 1) % ring.len()], ring[(k + 2) % ring.len()], super::EPS) == 0);
    if all_flat || signed_area(&ring) <= 0.0 {
        return Err(GeomError::DegenerateHull);
    }
    Ok(hull)
}
