//! Random Jordan curves that pass exactly through the vertices of 1-5
//! prescribed squares.
//!
//! A harmonic radial profile `r(θ) = 1 + Σ ρ_h sin(hθ + φ_h)` is bent through
//! the square vertices by adding a periodic cubic spline fitted to the radius
//! corrections at the vertex angles. With a small probability the curve is a
//! plain circle carrying a few rotated inscribed squares instead.

mod spline;

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segment_intersect, IntersectionKind, Point, Polyline, EPS};
use crate::seeds::rng_from_seed;
pub use spline::{PeriodicSpline, SplineError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicProfile {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl HarmonicProfile {
    pub fn harmonic_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn radius(&self, theta: f64) -> f64 {
        sample_radial_profile(self, theta)
    }

    /// `ρ_h = a·u_h / h` with `u_h ~ U[-1, 1]`, phases uniform.
    pub fn random<R: Rng>(rng: &mut R, harmonics: usize, envelope: f64) -> Self {
        let mut amplitudes = Vec::with_capacity(harmonics);
        let mut phases = Vec::with_capacity(harmonics);
        for h in 1..=harmonics {
            amplitudes.push(envelope * rng.gen_range(-1.0..=1.0) / h as f64);
            phases.push(rng.gen_range(0.0..TAU));
        }
        Self { amplitudes, phases }
    }
}

pub fn sample_radial_profile(profile: &HarmonicProfile, theta: f64) -> f64 {
    1.0 + profile
        .amplitudes
        .iter()
        .zip(&profile.phases)
        .enumerate()
        .map(|(i, (rho, phi))| rho * ((i + 1) as f64 * theta + phi).sin())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InscribedSquare {
    pub center: Point,
    pub side: f64,
    /// Radians in `[0, 2π)`.
    pub rotation: f64,
}

impl InscribedSquare {
    /// Counter-clockwise corners.
    pub fn vertices(&self) -> [Point; 4] {
        let h = self.side / 2.0;
        [(-h, -h), (h, -h), (h, h), (-h, h)]
            .map(|(x, y)| (self.center + Point::new(x, y)).rotate_about(self.center, self.rotation))
    }

    fn transformed(&self, translation: Point, scale: f64) -> Self {
        Self { center: (self.center + translation) * scale, side: self.side * scale, rotation: self.rotation }
    }
}

/// `normalized = (raw + translation) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub translation: Point,
}

impl Normalization {
    pub fn apply(&self, p: Point) -> Point {
        (p + self.translation) * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveInstance {
    pub curve: Polyline,
    pub squares: Vec<InscribedSquare>,
    pub normalization: Normalization,
    pub circle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveConfig {
    pub harmonics: (usize, usize),
    pub samples: usize,
    pub side_range: (f64, f64),
    pub max_translation: f64,
    pub square_count: (usize, usize),
    pub circle_probability: f64,
    pub envelope: f64,
    /// Square centers are drawn uniformly from a disk of this radius.
    pub center_radius: f64,
    pub min_knot_separation: f64,
    pub min_radius: f64,
    pub max_attempts: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            harmonics: (6, 30),
            samples: 500,
            side_range: (0.3, 0.7),
            max_translation: 0.5,
            square_count: (1, 5),
            circle_probability: 0.1,
            envelope: 0.15,
            center_radius: 0.2,
            min_knot_separation: 0.5f64.to_radians(),
            min_radius: 0.05,
            max_attempts: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("curve generation failed for seed {seed} after {attempts} attempts")]
    GenerationFailed { seed: u64, attempts: usize },
    #[error("jordan check needs a closed polyline")]
    OpenPolyline,
    #[error("invalid curve config: {0}")]
    Config(String),
}

/// True iff no two non-adjacent segments of the closed polyline properly cross.
pub fn jordan_check(c: &Polyline) -> Result<bool, CurveError> {
    if !c.is_closed() {
        return Err(CurveError::OpenPolyline);
    }
    let segs: Vec<_> = c.segments().collect();
    let n = segs.len();
    let boxes: Vec<[f64; 4]> =
        segs.iter().map(|s| [s.a.x.min(s.b.x), s.a.x.max(s.b.x), s.a.y.min(s.b.y), s.a.y.max(s.b.y)]).collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (&boxes[i], &boxes[j]);
            if a[1] < b[0] || b[1] < a[0] || a[3] < b[2] || b[3] < a[2] {
                continue;
            }
            if segment_intersect(&segs[i], &segs[j], EPS) == IntersectionKind::Proper {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

impl CurveConfig {
    fn validate(&self) -> Result<(), CurveError> {
        let bad = |m: &str| Err(CurveError::Config(m.to_string()));
        if self.harmonics.0 < 1 || self.harmonics.0 > self.harmonics.1 {
            return bad("harmonic range");
        }
        if self.square_count.0 < 1 || self.square_count.0 > self.square_count.1 {
            return bad("square count range");
        }
        if !(self.side_range.0 > 0.0 && self.side_range.0 <= self.side_range.1) {
            return bad("side range");
        }
        if self.samples < 4 * self.square_count.1 + 8 {
            return bad("too few samples for the requested squares");
        }
        Ok(())
    }
}

pub fn generate_instance(seed: u64, cfg: &CurveConfig) -> Result<CurveInstance, CurveError> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    // Drawn once: redrawing per attempt would favour circles, which are
    // rejected far less often than harmonic curves.
    let circle = rng.gen_bool(cfg.circle_probability);
    for attempt in 0..cfg.max_attempts {
        let raw = if circle { circle_candidate(&mut rng, cfg) } else { harmonic_candidate(&mut rng, cfg) };
        let Some((points, squares)) = raw else {
            log::trace!("seed {seed}: attempt {attempt} rejected");
            continue;
        };
        let Ok(curve) = Polyline::new(points, true) else { continue };
        if !jordan_check(&curve)? {
            log::trace!("seed {seed}: attempt {attempt} self-intersects");
            continue;
        }
        let translation = Point::new(
            rng.gen_range(-cfg.max_translation..=cfg.max_translation),
            rng.gen_range(-cfg.max_translation..=cfg.max_translation),
        );
        let max_abs = curve
            .points()
            .iter()
            .map(|&p| {
                let q = p + translation;
                q.x.abs().max(q.y.abs())
            })
            .fold(0.0, f64::max);
        let normalization = Normalization { scale: 1.0 / max_abs, translation };
        return Ok(CurveInstance {
            curve: curve.map(|p| normalization.apply(p)),
            squares: squares.iter().map(|s| s.transformed(translation, normalization.scale)).collect(),
            normalization,
            circle,
        });
    }
    log::warn!("curve generation failed for seed {seed}");
    Err(CurveError::GenerationFailed { seed, attempts: cfg.max_attempts })
}

// Uniform angular grid with the knot angles merged in, so knots are exact samples.
fn sample_angles(knots: &[f64], samples: usize) -> Vec<f64> {
    let grid = samples - knots.len();
    let mut angles: Vec<f64> = (0..grid).map(|j| j as f64 * TAU / grid as f64).collect();
    angles.extend_from_slice(knots);
    angles.sort_by(f64::total_cmp);
    angles
}

fn polar_angle(p: Point) -> f64 {
    p.angle().rem_euclid(TAU)
}

fn circle_candidate<R: Rng>(rng: &mut R, cfg: &CurveConfig) -> Option<(Vec<Point>, Vec<InscribedSquare>)> {
    let side = rng.gen_range(cfg.side_range.0..=cfg.side_range.1);
    let radius = side / SQRT_2;
    let count = rng.gen_range(cfg.square_count.0..=cfg.square_count.1);
    let squares: Vec<InscribedSquare> = (0..count)
        .map(|_| InscribedSquare { center: Point::default(), side, rotation: rng.gen_range(0.0..TAU) })
        .collect();
    let knots: Vec<f64> = squares.iter().flat_map(|s| s.vertices()).map(polar_angle).collect();
    let points = sample_angles(&knots, cfg.samples)
        .into_iter()
        .map(|t| Point::new(radius * t.cos(), radius * t.sin()))
        .collect();
    Some((points, squares))
}

fn harmonic_candidate<R: Rng>(rng: &mut R, cfg: &CurveConfig) -> Option<(Vec<Point>, Vec<InscribedSquare>)> {
    let harmonics = rng.gen_range(cfg.harmonics.0..=cfg.harmonics.1);
    let profile = HarmonicProfile::random(rng, harmonics, cfg.envelope);
    let count = rng.gen_range(cfg.square_count.0..=cfg.square_count.1);
    let squares: Vec<InscribedSquare> = (0..count)
        .map(|_| {
            let side = rng.gen_range(cfg.side_range.0..=cfg.side_range.1);
            let rotation = rng.gen_range(0.0..TAU);
            let (r, a) = (cfg.center_radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
            InscribedSquare { center: Point::new(r * a.cos(), r * a.sin()), side, rotation }
        })
        .collect();

    let mut knots: Vec<(f64, f64)> =
        squares.iter().flat_map(|s| s.vertices()).map(|v| (polar_angle(v), v.norm())).collect();
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = knots.len();
    for i in 0..k {
        let next = if i + 1 < k { knots[i + 1].0 } else { knots[0].0 + TAU };
        if next - knots[i].0 < cfg.min_knot_separation {
            return None;
        }
    }
    let angles: Vec<f64> = knots.iter().map(|k| k.0).collect();
    let corrections: Vec<f64> = knots.iter().map(|&(t, r)| r - profile.radius(t)).collect();
    let spline = PeriodicSpline::fit_angular(&angles, &corrections).ok()?;

    let mut points = Vec::with_capacity(cfg.samples);
    for t in sample_angles(&angles, cfg.samples) {
        let r = profile.radius(t) + spline.eval(t);
        if r < cfg.min_radius {
            return None;
        }
        points.push(Point::new(r * t.cos(), r * t.sin()));
    }
    Some((points, squares))
}
