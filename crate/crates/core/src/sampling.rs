//! Random point sets for the Steiner and polygonization tasks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{orientation, Point};
use crate::seeds::rng_from_seed;

pub const STEINER_MIN_SEPARATION: f64 = 4.0 / 128.0;
pub const MAXAP_MIN_SEPARATION: f64 = 6.0 / 128.0;
/// Triples whose turn has |sin| at or below this are treated as collinear.
pub const COLLINEAR_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("no valid point set for seed {seed} after {attempts} attempts")]
    Exhausted { seed: u64, attempts: usize },
}

/// Uniform points in `[0, 1]^2`, drawn one at a time and redrawn when they
/// violate the separation or collinearity rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSampler {
    pub min_separation: f64,
    pub collinear_tolerance: Option<f64>,
    pub max_attempts: usize,
}

impl PointSampler {
    pub fn steiner() -> Self {
        Self { min_separation: STEINER_MIN_SEPARATION, collinear_tolerance: None, max_attempts: 10_000 }
    }

    pub fn maxap() -> Self {
        Self {
            min_separation: MAXAP_MIN_SEPARATION,
            collinear_tolerance: Some(COLLINEAR_TOLERANCE),
            max_attempts: 10_000,
        }
    }

    fn accepts(&self, pts: &[Point], p: Point) -> bool {
        if pts.iter().any(|q| q.dist(p) < self.min_separation) {
            return false;
        }
        let Some(tol) = self.collinear_tolerance else { return true };
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                if orientation(a, b, p, tol) == 0 || orientation(p, a, b, tol) == 0 || orientation(b, p, a, tol) == 0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<Point>, SampleError> {
        let mut rng = rng_from_seed(seed);
        let mut pts: Vec<Point> = Vec::with_capacity(n);
        let mut attempts = 0;
        while pts.len() < n {
            if attempts == self.max_attempts {
                return Err(SampleError::Exhausted { seed, attempts });
            }
            attempts += 1;
            let p = Point::new(rng.gen::<f64>(), rng.gen::<f64>());
            if self.accepts(&pts, p) {
                pts.push(p);
            }
        }
        Ok(pts)
    }
}
