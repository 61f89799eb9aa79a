use serde::{Deserialize, Serialize};

use crate::geom::{convex_hull_indices, signed_area, Point};
use crate::raster::GrayImage;

/// 8-connected pixel set, pixels in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub pixels: Vec<(i64, i64)>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Mean of pixel centers.
    pub fn centroid(&self) -> Point {
        let n = self.pixels.len().max(1) as f64;
        let (sx, sy) = self.pixels.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
        Point::new(sx / n + 0.5, sy / n + 0.5)
    }

    pub fn centers(&self) -> Vec<Point> {
        self.pixels.iter().map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5)).collect()
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// 8-connected components of pixels satisfying `pred`, ordered by their first
/// pixel in raster order.
pub fn components(img: &GrayImage, pred: impl Fn(u8) -> bool) -> Vec<Component> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut label = vec![usize::MAX; (w * h) as usize];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if label[idx] != usize::MAX || !pred(img.data()[idx]) {
                continue;
            }
            let id = out.len();
            label[idx] = id;
            let mut stack = vec![(x, y)];
            let mut pixels = Vec::new();
            while let Some((cx, cy)) = stack.pop() {
                pixels.push((cx, cy));
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if !img.in_bounds(nx, ny) {
                        continue;
                    }
                    let nidx = (ny * w + nx) as usize;
                    if label[nidx] == usize::MAX && pred(img.data()[nidx]) {
                        label[nidx] = id;
                        stack.push((nx, ny));
                    }
                }
            }
            pixels.sort_by_key(|&(px, py)| (py, px));
            out.push(Component { pixels });
        }
    }
    out
}

/// Largest component; ties go to the earliest in raster order.
pub fn largest_component(img: &GrayImage, pred: impl Fn(u8) -> bool) -> Option<Component> {
    components(img, pred).into_iter().reduce(|best, c| if c.len() > best.len() { c } else { best })
}

/// Outer boundary of a component by Moore-neighbour tracing, as pixel centers.
pub fn trace_contour(comp: &Component) -> Vec<Point> {
    let Some(&start) = comp.pixels.first() else { return Vec::new() };
    let set: std::collections::HashSet<(i64, i64)> = comp.pixels.iter().copied().collect();
    let center = |(x, y): (i64, i64)| Point::new(x as f64 + 0.5, y as f64 + 0.5);
    let dir_of = |d: (i64, i64)| NEIGHBORS_8.iter().position(|&n| n == d).unwrap_or(0);

    // Next boundary pixel clockwise from the backtrack direction, plus the new backtrack.
    let step = |cur: (i64, i64), back: usize| {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let p = (cur.0 + NEIGHBORS_8[d].0, cur.1 + NEIGHBORS_8[d].1);
            if set.contains(&p) {
                let prev = (back + k - 1) % 8;
                let q = (cur.0 + NEIGHBORS_8[prev].0, cur.1 + NEIGHBORS_8[prev].1);
                return Some((p, dir_of((q.0 - p.0, q.1 - p.1))));
            }
        }
        None
    };

    // The first pixel in raster order has background to its west.
    let mut contour = vec![start];
    let Some((second, mut back)) = step(start, 4) else { return vec![center(start)] };
    let mut cur = second;
    // Jacob's criterion: stop when the start pixel would be left towards `second` again.
    while contour.len() <= 4 * comp.len() + 8 {
        let Some((p, b)) = step(cur, back) else { break };
        if cur == start && p == second {
            break;
        }
        contour.push(cur);
        cur = p;
        back = b;
    }
    contour.into_iter().map(center).collect()
}

/// Shoelace area of a closed contour.
pub fn contour_area(contour: &[Point]) -> f64 {
    if contour.len() < 3 {
        return 0.0;
    }
    signed_area(contour).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: Point,
    /// Extent along `angle`.
    pub width: f64,
    /// Extent perpendicular to `angle`.
    pub height: f64,
    /// Direction of the width axis, radians.
    pub angle: f64,
}

impl RotatedRect {
    pub fn corners(&self) -> [Point; 4] {
        let u = Point::new(self.angle.cos(), self.angle.sin());
        let v = Point::new(-u.y, u.x);
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)].map(|(a, b)| self.center + u * a + v * b)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Minimum-area enclosing rectangle by rotating calipers over the hull edges.
/// Collinear or repeated input yields a zero-height rectangle along the spread.
pub fn min_area_rect(points: &[Point]) -> Option<RotatedRect> {
    let first = *points.first()?;
    let hull: Vec<Point> = match convex_hull_indices(points) {
        Ok(idx) => idx.into_iter().map(|i| points[i]).collect(),
        Err(_) => {
            // Degenerate: span along the farthest pair.
            let far = points.iter().copied().fold(first, |a, p| if p.dist(first) > a.dist(first) { p } else { a });
            let far2 = points.iter().copied().fold(far, |a, p| if p.dist(far) > a.dist(far) { p } else { a });
            let d = far2 - far;
            return Some(RotatedRect {
                center: (far + far2) * 0.5,
                width: d.norm(),
                height: 0.0,
                angle: if d.norm() > 0.0 { d.angle() } else { 0.0 },
            });
        }
    };
    let n = hull.len();
    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..n {
        let e = hull[(i + 1) % n] - hull[i];
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let u = e * (1.0 / len);
        let v = Point::new(-u.y, u.x);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &p in &hull {
            let (a, b) = (p.dot(u), p.dot(v));
            lo_u = lo_u.min(a);
            hi_u = hi_u.max(a);
            lo_v = lo_v.min(b);
            hi_v = hi_v.max(b);
        }
        let area = (hi_u - lo_u) * (hi_v - lo_v);
        if best.as_ref().is_none_or(|b| area < b.0) {
            let center = u * ((lo_u + hi_u) / 2.0) + v * ((lo_v + hi_v) / 2.0);
            best = Some((area, RotatedRect { center, width: hi_u - lo_u, height: hi_v - lo_v, angle: u.angle() }));
        }
    }
    best.map(|b| b.1)
}
