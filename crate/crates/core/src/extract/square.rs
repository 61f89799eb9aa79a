use serde::{Deserialize, Serialize};

use super::shape::{largest_component, min_area_rect, trace_contour, RotatedRect};
use super::ExtractError;
use crate::geom::{signed_area, Point, Polyline};
use crate::metrics::alignment_score;
use crate::raster::GrayImage;

/// Four corners in cyclic order, pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub vertices: [Point; 4],
}

impl Quad {
    pub fn new(vertices: [Point; 4]) -> Result<Self, ExtractError> {
        if vertices.iter().any(|p| !p.is_finite()) || signed_area(&vertices) == 0.0 {
            return Err(ExtractError::Degenerate);
        }
        Ok(Self { vertices })
    }

    pub fn centroid(&self) -> Point {
        self.vertices.iter().fold(Point::default(), |a, &p| a + p) * 0.25
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// Rotate by `theta` about the centroid, then translate by `t`.
    pub fn transformed(&self, theta: f64, t: Point) -> Self {
        let c = self.centroid();
        Self { vertices: self.vertices.map(|p| p.rotate_about(c, theta) + t) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapParams {
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_step: f64,
    /// Integer pixel offsets `-T..=T` on both axes.
    pub translation_radius: u32,
}

impl Default for SnapParams {
    fn default() -> Self {
        Self { theta_min: -0.10, theta_max: 0.10, theta_step: 0.01, translation_radius: 3 }
    }
}

impl SnapParams {
    /// Multiples of `theta_step` inside `[theta_min, theta_max]`, zero first when present.
    pub fn thetas(&self) -> Vec<f64> {
        if self.theta_step <= 0.0 || self.theta_min > self.theta_max {
            return vec![0.0];
        }
        let lo = (self.theta_min / self.theta_step - 1e-9).ceil() as i64;
        let hi = (self.theta_max / self.theta_step + 1e-9).floor() as i64;
        let mut ks: Vec<i64> = (lo..=hi).collect();
        ks.sort_by_key(|k| (k.abs(), *k));
        ks.into_iter().map(|k| k as f64 * self.theta_step).collect()
    }
}

/// Foreground (>= 128), largest 8-connected component, minimum-area
/// rectangle around its contour. The rectangle is then refined: its
/// orientation from line fits to the four sides, its center at the pixel
/// centroid and its size rescaled to the pixel count. The contour runs through
/// pixel centers and sits up to a pixel inside the drawn edge, the area does not.
pub fn extract_square(mask: &GrayImage) -> Result<Quad, ExtractError> {
    let comp = largest_component(mask, |v| v >= 128).ok_or(ExtractError::NoShape)?;
    let contour = trace_contour(&comp);
    let rect = min_area_rect(&contour).ok_or(ExtractError::NoShape)?;
    let angle = refine_angle(&contour, &rect);
    let n = comp.len() as f64;
    let center = comp.pixels.iter().fold(Point::default(), |a, &(x, y)| a + Point::new(x as f64 + 0.5, y as f64 + 0.5))
        * (1.0 / n);
    let (u, v) = (Point::new(angle.cos(), angle.sin()), Point::new(-angle.sin(), angle.cos()));
    let extent = |d: Point| {
        let (lo, hi) =
            contour.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.dot(d)), hi.max(p.dot(d))));
        (hi - lo).max(1.0)
    };
    let (w, h) = (extent(u), extent(v));
    let k = (n / (w * h)).sqrt();
    Quad::new(RotatedRect { center, width: w * k, height: h * k, angle }.corners())
}

/// Mean side direction (mod 90 degrees) from total-least-squares fits to the
/// contour points near each side of `rect`, away from its corners. Falls back
/// to the rectangle's own angle when a side has too few points.
fn refine_angle(contour: &[Point], rect: &RotatedRect) -> f64 {
    let corners = rect.corners();
    let mut sum = Point::default();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let len = a.dist(b);
        if len < 8.0 {
            return rect.angle;
        }
        let dir = (b - a) * (1.0 / len);
        let normal = Point::new(-dir.y, dir.x);
        let pts: Vec<Point> = contour
            .iter()
            .copied()
            .filter(|&p| {
                let t = (p - a).dot(dir);
                (p - a).dot(normal).abs() <= 1.5 && t >= 3.0 && t <= len - 3.0
            })
            .collect();
        if pts.len() < 4 {
            return rect.angle;
        }
        let m = pts.iter().fold(Point::default(), |s, &p| s + p) * (1.0 / pts.len() as f64);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &pts {
            let d = *p - m;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        // Directions mod 90 degrees, averaged on the circle.
        sum = sum + Point::new((4.0 * theta).cos(), (4.0 * theta).sin());
    }
    let mean = sum.y.atan2(sum.x) / 4.0;
    // Nearest representative of `mean` (mod 90 degrees) to the rectangle's angle.
    let q = std::f64::consts::FRAC_PI_2;
    mean + ((rect.angle - mean) / q).round() * q
}

/// Best rigid correction of `q` against `curve` over the discrete grid of
/// rotations about the centroid and integer translations. The identity is
/// scored first and only replaced by a strictly better candidate.
pub fn snap_square(q: &Quad, curve: &Polyline, params: &SnapParams) -> Quad {
    let t = params.translation_radius as i64;
    let mut offsets: Vec<(i64, i64)> = (-t..=t).flat_map(|dx| (-t..=t).map(move |dy| (dx, dy))).collect();
    offsets.sort_by_key(|&(dx, dy)| (dx.abs() + dy.abs(), dx, dy));
    let mut best = *q;
    let mut best_score = alignment_score(q, curve);
    for theta in params.thetas() {
        let rotated = q.transformed(theta, Point::default());
        for &(dx, dy) in &offsets {
            let cand = rotated.transformed(0.0, Point::new(dx as f64, dy as f64));
            let s = alignment_score(&cand, curve);
            if s > best_score {
                best_score = s;
                best = cand;
            }
        }
    }
    best
}
