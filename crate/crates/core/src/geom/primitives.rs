use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default relative tolerance for orientation tests.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotate counter-clockwise about `center`.
    pub fn rotate_about(self, center: Point, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        let d = self - center;
        center + Point::new(c * d.x - s * d.y, s * d.x + c * d.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return p.dist(self.a);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        p.dist(self.a + d * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntersectionKind {
    None,
    /// Interiors cross at a single point.
    Proper,
    /// The segments meet at a point that is an endpoint of at least one of them.
    EndpointTouch,
    /// Collinear with an overlap of positive length.
    CollinearOverlap,
}

/// Sign of the turn a -> b -> c, zero when |sin| of the angle at `a` is within `eps`.
pub fn orientation(a: Point, b: Point, c: Point, eps: f64) -> i8 {
    let u = b - a;
    let v = c - a;
    let cr = u.cross(v);
    let scale = u.norm() * v.norm();
    if cr.abs() <= eps * scale {
        0
    } else if cr > 0.0 {
        1
    } else {
        -1
    }
}

// `p` is known to be collinear with s; test whether it falls within its extent.
fn within_extent(s: &Segment, p: Point, eps: f64) -> bool {
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(s.a) <= eps;
    }
    let t = (p - s.a).dot(d) / len2;
    let slack = eps.max(f64::EPSILON);
    (-slack..=1.0 + slack).contains(&t)
}

pub fn segment_intersect(s1: &Segment, s2: &Segment, eps: f64) -> IntersectionKind {
    let o1 = orientation(s1.a, s1.b, s2.a, eps);
    let o2 = orientation(s1.a, s1.b, s2.b, eps);
    let o3 = orientation(s2.a, s2.b, s1.a, eps);
    let o4 = orientation(s2.a, s2.b, s1.b, eps);

    if o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0 {
        return collinear_kind(s1, s2, eps);
    }
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return IntersectionKind::Proper;
    }
    let touches = (o1 == 0 && within_extent(s1, s2.a, eps))
        || (o2 == 0 && within_extent(s1, s2.b, eps))
        || (o3 == 0 && within_extent(s2, s1.a, eps))
        || (o4 == 0 && within_extent(s2, s1.b, eps));
    if touches {
        IntersectionKind::EndpointTouch
    } else {
        IntersectionKind::None
    }
}

fn collinear_kind(s1: &Segment, s2: &Segment, eps: f64) -> IntersectionKind {
    // Project everything on the longer segment's direction.
    let (base, other) = if s1.length() >= s2.length() { (s1, s2) } else { (s2, s1) };
    let d = base.b - base.a;
    let len = d.norm();
    if len == 0.0 {
        return if s1.a.dist(s2.a) <= eps { IntersectionKind::EndpointTouch } else { IntersectionKind::None };
    }
    let dir = d * (1.0 / len);
    let t0 = (other.a - base.a).dot(dir);
    let t1 = (other.b - base.a).dot(dir);
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let overlap = hi.min(len) - lo.max(0.0);
    let tol = eps * len.max(1.0);
    if overlap > tol {
        IntersectionKind::CollinearOverlap
    } else if overlap >= -tol {
        IntersectionKind::EndpointTouch
    } else {
        IntersectionKind::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point::new(ax, ay), Point::new(bx, by))
    }

    #[test]
    fn classification_examples() {
        assert_eq!(segment_intersect(&seg(0., 0., 1., 1.), &seg(0., 1., 1., 0.), EPS), IntersectionKind::Proper);
        assert_eq!(segment_intersect(&seg(0., 0., 1., 0.), &seg(1., 0., 2., 0.), EPS), IntersectionKind::EndpointTouch);
        assert_eq!(
            segment_intersect(&seg(0., 0., 2., 0.), &seg(1., 0., 3., 0.), EPS),
            IntersectionKind::CollinearOverlap
        );
        assert_eq!(segment_intersect(&seg(0., 0., 1., 0.), &seg(2., 0., 3., 0.), EPS), IntersectionKind::None);
        assert_eq!(segment_intersect(&seg(0., 0., 1., 0.), &seg(0., 1., 1., 1.), EPS), IntersectionKind::None);
        // T-junction: endpoint of one lies in the interior of the other.
        assert_eq!(segment_intersect(&seg(0., 0., 2., 0.), &seg(1., 0., 1., 1.), EPS), IntersectionKind::EndpointTouch);
    }

    #[test]
    fn segment_distance() {
        let s = seg(0., 0., 1., 0.);
        assert_eq!(s.distance_to(Point::new(0.5, 2.0)), 2.0);
        assert_eq!(s.distance_to(Point::new(-3.0, 4.0)), 5.0);
    }

    proptest! {
        #[test]
        fn intersect_is_symmetric(
            c in proptest::collection::vec(-3i32..3, 8),
            f in proptest::collection::vec(-1.0f64..1.0, 8),
            use_grid in any::<bool>(),
        ) {
            // Grid coordinates exercise the degenerate cases, floats the generic ones.
            let v: Vec<f64> = if use_grid {
                c.iter().map(|&k| k as f64).collect()
            } else {
                f.clone()
            };
            let s1 = seg(v[0], v[1], v[2], v[3]);
            let s2 = seg(v[4], v[5], v[6], v[7]);
            prop_assert_eq!(segment_intersect(&s1, &s2, EPS), segment_intersect(&s2, &s1, EPS));
        }
    }
}
