//! Instance generation for all three tasks: geometry, oracle solution and the
//! rendered image pair.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curvegen::{generate_instance, CurveConfig, CurveError};
use crate::dataset::{instance_id, render, DatasetError, Geometry, InstanceManifest, ShardItem, Task};
use crate::geom::{PlaneGraph, Point};
use crate::maxap::{solve_exact_dfs, MaxapError, DFS_MAX_POINTS};
use crate::raster::{pixel_clearance, PixelMap, UNIT_MARGIN_PX};
use crate::sampling::{PointSampler, SampleError};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::steiner::{solve_exact, solve_heuristic, SteinerError, EXACT_MAX_TERMINALS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub task: Task,
    pub split: String,
    pub seed: u64,
    /// Point count range (inclusive); square count per curve for the square task.
    pub points: (usize, usize),
    pub resolution: u32,
    /// Steiner instances up to this size get the exact solver, larger ones the heuristic.
    pub exact_limit: usize,
    /// Redraw Steiner/MAXAP instances whose drawn solution has two features
    /// closer than this many pixels.
    pub min_clearance_px: Option<f64>,
    pub max_attempts: usize,
    pub curve: CurveConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            task: Task::Steiner,
            split: "train".into(),
            seed: 0,
            points: (10, 20),
            resolution: 128,
            exact_limit: EXACT_MAX_TERMINALS,
            min_clearance_px: None,
            max_attempts: 1000,
            curve: CurveConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Steiner(#[from] SteinerError),
    #[error(transparent)]
    Maxap(#[from] MaxapError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("no instance with {min_px}px clearance for seed {seed} after {attempts} attempts")]
    Clearance { seed: u64, min_px: f64, attempts: usize },
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let (lo, hi) = self.points;
        let bad = |m: String| Err(GenError::Config(m));
        if lo > hi {
            return bad(format!("empty point range {lo}..{hi}"));
        }
        match self.task {
            Task::Square if lo < 1 || hi > 5 => {
                bad(format!("square task takes 1..5 squares per curve, got {lo}..{hi}"))
            }
            Task::Steiner if lo < 2 => bad(format!("steiner task needs at least 2 points, got {lo}")),
            Task::Maxap if lo < 3 || hi > DFS_MAX_POINTS => {
                bad(format!("maxap task needs 3..{DFS_MAX_POINTS} points, got {lo}..{hi}"))
            }
            _ if self.resolution < 16 => bad(format!("resolution {} too small", self.resolution)),
            _ if self.split.is_empty() || !self.split.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') => {
                bad(format!("split name '{}' must be alphanumeric", self.split))
            }
            _ => Ok(()),
        }
    }

    pub fn pixel_map(&self) -> PixelMap {
        match self.task {
            Task::Square => PixelMap::square_task(self.resolution),
            _ => PixelMap::unit_square(self.resolution, UNIT_MARGIN_PX),
        }
    }

    /// Root of the per-instance seeds of this split.
    pub fn split_seed(&self) -> u64 {
        let h = Sha256::digest(self.split.as_bytes());
        derive_seed(self.seed, u64::from_le_bytes(h[..8].try_into().unwrap()))
    }

    pub fn instance_seed(&self, index: u64) -> u64 {
        derive_seed(self.split_seed(), index)
    }
}

fn clear_enough(cfg: &GenConfig, g: &PlaneGraph) -> bool {
    cfg.min_clearance_px.is_none_or(|px| pixel_clearance(g, &cfg.pixel_map()) >= px)
}

fn retry<T>(
    cfg: &GenConfig,
    seed: u64,
    mut make: impl FnMut(u64) -> Result<Option<T>, GenError>,
) -> Result<T, GenError> {
    for attempt in 0..cfg.max_attempts.max(1) {
        let s = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
        if let Some(t) = make(s)? {
            return Ok(t);
        }
    }
    Err(GenError::Clearance { seed, min_px: cfg.min_clearance_px.unwrap_or(0.0), attempts: cfg.max_attempts })
}

fn point_count(cfg: &GenConfig, seed: u64) -> usize {
    rng_from_seed(derive_seed(seed, u64::MAX)).gen_range(cfg.points.0..=cfg.points.1)
}

/// Geometries drawn from the `index`-th seed of the split: one per
/// constructed square for the square task, exactly one otherwise.
pub fn generate_geometry(cfg: &GenConfig, index: u64) -> Result<Vec<Geometry>, GenError> {
    let seed = cfg.instance_seed(index);
    match cfg.task {
        Task::Square => {
            let ccfg = CurveConfig { square_count: cfg.points, ..cfg.curve.clone() };
            let inst = generate_instance(seed, &ccfg)?;
            let curve = inst.curve.points().to_vec();
            Ok(inst
                .squares
                .iter()
                .map(|&square| Geometry::Square { curve: curve.clone(), square, squares: inst.squares.clone() })
                .collect())
        }
        Task::Steiner => {
            let n = point_count(cfg, seed);
            let g = retry(cfg, seed, |s| {
                let terminals = PointSampler::steiner().sample(s, n)?;
                let sol = if n <= cfg.exact_limit { solve_exact(&terminals)? } else { solve_heuristic(&terminals)? };
                Ok(clear_enough(cfg, &sol.graph).then_some(Geometry::Steiner {
                    length: sol.total_length,
                    exact: sol.exact,
                    solution: sol.graph,
                    terminals,
                }))
            })?;
            Ok(vec![g])
        }
        Task::Maxap => {
            let n = point_count(cfg, seed);
            let g = retry(cfg, seed, |s| {
                let points = PointSampler::maxap().sample(s, n)?;
                let best = solve_exact_dfs(&points)?;
                let mut poly = PlaneGraph::on_terminals(points.clone());
                for i in 0..n {
                    poly.add_edge(best.order[i], best.order[(i + 1) % n]).expect("cycle edges are distinct");
                }
                Ok(clear_enough(cfg, &poly).then_some(Geometry::Maxap { points, order: best.order, area: best.area }))
            })?;
            Ok(vec![g])
        }
    }
}

/// Manifest record and rendered images for one geometry.
pub fn make_item(cfg: &GenConfig, index: u64, seed: u64, geometry: Geometry) -> Result<ShardItem, GenError> {
    let id = instance_id(cfg.task, &cfg.split, index);
    let manifest = InstanceManifest {
        task: cfg.task,
        instance_id: id.clone(),
        split: cfg.split.clone(),
        index,
        seed,
        resolution: cfg.resolution,
        world_to_pixel: cfg.pixel_map().m,
        geometry,
        cond_path: format!("{id}_cond.png"),
        sol_path: format!("{id}_sol.png"),
    };
    let (cond, sol) = render(&manifest)?;
    Ok(ShardItem { manifest, cond, sol })
}

/// `count` items in index order. Square-task curves contribute one item per
/// square until the count is reached; `seed` records the curve's seed.
pub fn generate_items(cfg: &GenConfig, count: usize) -> Result<Vec<ShardItem>, GenError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(count);
    let mut source = 0u64;
    while out.len() < count {
        for g in generate_geometry(cfg, source)? {
            if out.len() == count {
                break;
            }
            out.push(make_item(cfg, out.len() as u64, cfg.instance_seed(source), g)?);
        }
        source += 1;
    }
    Ok(out)
}

/// Pixel-space copy of a point list under `map`.
pub fn to_pixels(map: &PixelMap, pts: &[Point]) -> Vec<Point> {
    pts.iter().map(|&p| map.apply(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_split_dependent() {
        let cfg = GenConfig { task: Task::Maxap, points: (5, 7), seed: 9, ..Default::default() };
        let a = generate_items(&cfg, 3).unwrap();
        assert_eq!(a, generate_items(&cfg, 3).unwrap());
        let b = generate_items(&GenConfig { split: "test".into(), ..cfg }, 3).unwrap();
        assert_ne!(a[0].manifest.seed, b[0].manifest.seed);
    }

    #[test]
    fn square_task_one_item_per_square() {
        let cfg = GenConfig { task: Task::Square, points: (3, 3), ..Default::default() };
        let items = generate_items(&cfg, 4).unwrap();
        assert_eq!(items.len(), 4);
        assert_eq!(items[0].manifest.seed, items[2].manifest.seed);
        assert_ne!(items[2].manifest.seed, items[3].manifest.seed);
        assert_eq!(items[3].manifest.instance_id, "square_train_00000003");
    }

    #[test]
    fn clearance_filter_applies() {
        let cfg = GenConfig { task: Task::Steiner, points: (5, 6), min_clearance_px: Some(7.0), ..Default::default() };
        for it in generate_items(&cfg, 5).unwrap() {
            let Geometry::Steiner { solution, .. } = &it.manifest.geometry else { panic!() };
            assert!(pixel_clearance(solution, &cfg.pixel_map()) >= 7.0);
        }
    }

    #[test]
    fn config_limits() {
        let bad = [
            GenConfig { task: Task::Square, points: (1, 6), ..Default::default() },
            GenConfig { task: Task::Steiner, points: (1, 4), ..Default::default() },
            GenConfig { task: Task::Maxap, points: (3, 16), ..Default::default() },
            GenConfig { split: "a/b".into(), ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
