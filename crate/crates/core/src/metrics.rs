//! Evaluation metrics: corner alignment, squareness, best-of-k selection and
//! per-size aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{largest_component, min_area_rect, Quad};
use crate::geom::{point_to_polyline_distance, Point, Polyline};
use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("degenerate shape: enclosing rectangle has zero extent")]
    Degenerate,
    #[error("no foreground pixels")]
    Empty,
    #[error("no records")]
    NoRecords,
}

/// Negative mean distance from the quad's corners to the curve; 0 is perfect.
pub fn alignment_score(q: &Quad, curve: &Polyline) -> f64 {
    let total: f64 = q.vertices.iter().map(|&p| point_to_polyline_distance(p, curve).unwrap_or(f64::INFINITY)).sum();
    -total / 4.0
}

fn squareness_from(area: f64, w: f64, h: f64) -> Result<f64, MetricError> {
    if w <= 0.0 || h <= 0.0 {
        return Err(MetricError::Degenerate);
    }
    let aspect = w.max(h) / w.min(h);
    Ok(area / (w * h) * (-2.0 * (aspect - 1.0).abs()).exp())
}

/// Fill ratio inside the minimum-area enclosing rectangle times
/// `exp(-2 |aspect - 1|)`.
pub fn squareness_quad(q: &Quad) -> Result<f64, MetricError> {
    let r = min_area_rect(&q.vertices).ok_or(MetricError::Degenerate)?;
    squareness_from(q.area(), r.width, r.height)
}

/// Squareness of the largest foreground (>= 128) component. Pixels count as
/// unit squares: the area is the pixel count and the rectangle encloses their
/// corners, so an axis-aligned block scores exactly.
pub fn squareness_mask(mask: &GrayImage) -> Result<f64, MetricError> {
    let comp = largest_component(mask, |v| v >= 128).ok_or(MetricError::Empty)?;
    let corners: Vec<Point> = comp
        .pixels
        .iter()
        .flat_map(|&(x, y)| {
            [(0, 0), (1, 0), (1, 1), (0, 1)].map(|(dx, dy)| Point::new((x + dx) as f64, (y + dy) as f64))
        })
        .collect();
    let r = min_area_rect(&corners).ok_or(MetricError::Degenerate)?;
    squareness_from(comp.len() as f64, r.width, r.height)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinLength,
    MaxArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub seed: u64,
    /// Point count, or square count for the square task.
    pub size: usize,
    pub valid: bool,
    /// Tree length, polygon area or alignment score.
    pub primary_value: Option<f64>,
    pub ratio_vs_optimal: Option<f64>,
    pub squareness: Option<f64>,
    /// Extracted structure equals the optimal one exactly.
    pub optimal_match: Option<bool>,
}

impl EvalRecord {
    pub fn invalid(instance_id: impl Into<String>, seed: u64, size: usize) -> Self {
        Self {
            instance_id: instance_id.into(),
            seed,
            size,
            valid: false,
            primary_value: None,
            ratio_vs_optimal: None,
            squareness: None,
            optimal_match: None,
        }
    }
}

/// Best valid record under `objective` (first wins ties); an invalid marker
/// carrying the first record's id when none is valid.
pub fn best_of_k(records: &[EvalRecord], objective: Objective) -> Result<EvalRecord, MetricError> {
    let first = records.first().ok_or(MetricError::NoRecords)?;
    let mut best: Option<&EvalRecord> = None;
    for r in records.iter().filter(|r| r.valid) {
        let Some(v) = r.primary_value else { continue };
        let better = match best.and_then(|b| b.primary_value) {
            None => true,
            Some(b) => match objective {
                Objective::MinLength => v < b,
                Objective::MaxArea => v > b,
            },
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best.cloned().unwrap_or_else(|| EvalRecord::invalid(first.instance_id.clone(), first.seed, first.size)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Inclusive size range.
    pub bucket: (usize, usize),
    pub count: usize,
    pub valid_rate: f64,
    pub ratio_mean: Option<f64>,
    /// Population standard deviation.
    pub ratio_std: Option<f64>,
    pub optimal_rate: Option<f64>,
    pub primary_mean: Option<f64>,
    pub squareness_mean: Option<f64>,
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    Some((m, var.sqrt()))
}

/// One row per non-empty bucket, in bucket order.
pub fn aggregate_report(records: &[EvalRecord], buckets: &[(usize, usize)]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for &(lo, hi) in buckets {
        let group: Vec<&EvalRecord> = records.iter().filter(|r| r.size >= lo && r.size <= hi).collect();
        if group.is_empty() {
            continue;
        }
        let valid: Vec<&&EvalRecord> = group.iter().filter(|r| r.valid).collect();
        let collect = |f: &dyn Fn(&EvalRecord) -> Option<f64>| valid.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let ratios = collect(&|r| r.ratio_vs_optimal);
        let primary = collect(&|r| r.primary_value);
        let squareness = collect(&|r| r.squareness);
        let known: Vec<bool> =
            group.iter().filter_map(|r| if r.valid { r.optimal_match } else { Some(false) }).collect();
        let rs = mean_std(&ratios);
        rows.push(ReportRow {
            bucket: (lo, hi),
            count: group.len(),
            valid_rate: valid.len() as f64 / group.len() as f64,
            ratio_mean: rs.map(|x| x.0),
            ratio_std: rs.map(|x| x.1),
            optimal_rate: (!known.is_empty() && group.iter().any(|r| r.optimal_match.is_some()))
                .then(|| known.iter().filter(|&&b| b).count() as f64 / group.len() as f64),
            primary_mean: mean_std(&primary).map(|x| x.0),
            squareness_mean: mean_std(&squareness).map(|x| x.0),
        })
    }
    rows
}

/// Every size seen, as one bucket each.
pub fn size_buckets(records: &[EvalRecord]) -> Vec<(usize, usize)> {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes.into_iter().map(|s| (s, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    // Independent point-to-segment distance via clamped projection.
    fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
        let (abx, aby) = (b.x - a.x, b.y - a.y);
        let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / (abx * abx + aby * aby)).clamp(0.0, 1.0);
        ((a.x + t * abx - p.x).powi(2) + (a.y + t * aby - p.y).powi(2)).sqrt()
    }

    fn rect(w: f64, h: f64) -> Quad {
        Quad::new([Point::new(0., 0.), Point::new(w, 0.), Point::new(w, h), Point::new(0., h)]).unwrap()
    }

    fn rec(valid: bool, v: f64) -> EvalRecord {
        EvalRecord { valid, primary_value: Some(v), ..EvalRecord::invalid("i", 0, 5) }
    }

    #[test]
    fn squareness_closed_forms() {
        assert_eq!(squareness_quad(&rect(3.0, 3.0)).unwrap(), 1.0);
        assert!((squareness_quad(&rect(2.0, 1.0)).unwrap() - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let curve = Polyline::new(rect(4.0, 4.0).vertices.to_vec(), true).unwrap();
        assert_eq!(alignment_score(&rect(4.0, 4.0), &curve), 0.0);
        let inner =
            Quad::new([Point::new(1., 1.), Point::new(3., 1.), Point::new(3., 3.), Point::new(1., 3.)]).unwrap();
        assert!((alignment_score(&inner, &curve) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_matches_segment_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let pts: Vec<Point> =
                (0..500).map(|_| Point::new(rng.gen_range(0.0..128.0), rng.gen_range(0.0..128.0))).collect();
            let curve = Polyline::new(pts.clone(), true).unwrap();
            let q = Quad::new([0, 1, 2, 3].map(|_| Point::new(rng.gen_range(0.0..128.0), rng.gen_range(0.0..128.0))))
                .unwrap();
            let oracle: f64 = q
                .vertices
                .iter()
                .map(|&c| (0..500).map(|i| seg_dist(c, pts[i], pts[(i + 1) % 500])).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
                / -4.0;
            assert!((alignment_score(&q, &curve) - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn best_of_k_examples() {
        let r = best_of_k(&[rec(true, 5.0), rec(true, 4.0), rec(false, 1.0)], Objective::MinLength).unwrap();
        assert_eq!(r.primary_value, Some(4.0));
        let r = best_of_k(&[rec(false, 5.0), rec(false, 4.0)], Objective::MinLength).unwrap();
        assert!(!r.valid);
        let r = best_of_k(&[rec(true, 0.8), rec(true, 0.9)], Objective::MaxArea).unwrap();
        assert_eq!(r.primary_value, Some(0.9));
        assert_eq!(best_of_k(&[], Objective::MaxArea).unwrap_err(), MetricError::NoRecords);
    }

    #[test]
    fn aggregate_examples() {
        let mut rs = vec![rec(true, 1.0), rec(true, 1.0), rec(false, 0.0), rec(false, 0.0)];
        rs[0].ratio_vs_optimal = Some(1.0);
        rs[1].ratio_vs_optimal = Some(1.1);
        rs[0].optimal_match = Some(true);
        rs[1].optimal_match = Some(false);
        let rows = aggregate_report(&rs, &[(5, 5), (6, 9)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].valid_rate, 0.5);
        assert!((rows[0].ratio_mean.unwrap() - 1.05).abs() < 1e-12);
        assert!((rows[0].ratio_std.unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(rows[0].optimal_rate, Some(0.25));
    }

    proptest! {
        #[test]
        fn squareness_rigid_and_scale_invariant(w in 0.5f64..5.0, h in 0.5f64..5.0, a in 0.0f64..6.3,
                                                 tx in -10.0f64..10.0, s in 0.1f64..10.0) {
            let base = rect(w, h);
            let moved = Quad::new(base.vertices.map(|p| p.rotate_about(Point::default(), a) * s + Point::new(tx, -tx))).unwrap();
            let (q0, q1) = (squareness_quad(&base).unwrap(), squareness_quad(&moved).unwrap());
            prop_assert!((q0 - q1).abs() < 1e-9);
        }

        #[test]
        fn alignment_rigid_invariant(a in 0.0f64..6.3, tx in -5.0f64..5.0, ty in -5.0f64..5.0, off in -2.0f64..2.0) {
            let curve_pts: Vec<Point> = (0..50).map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 50.0;
                Point::new(10.0 * t.cos(), 6.0 * t.sin())
            }).collect();
            let q = Quad::new([Point::new(off, 0.), Point::new(9., 1.), Point::new(0., 5.), Point::new(-8., off)]).unwrap();
            let f = |p: Point| p.rotate_about(Point::default(), a) + Point::new(tx, ty);
            let c0 = Polyline::new(curve_pts.clone(), true).unwrap();
            let c1 = c0.map(f);
            let q1 = Quad::new(q.vertices.map(f)).unwrap();
            prop_assert!((alignment_score(&q, &c0) - alignment_score(&q1, &c1)).abs() < 1e-9);
        }
    }
}
