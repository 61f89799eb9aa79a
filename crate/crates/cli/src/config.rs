use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use geopix_core::dataset::Task;
use geopix_core::evaluate::{EvalParams, SolveMode};
use geopix_core::extract::{ExtractionThresholds, SnapParams};
use serde::{Deserialize, Serialize};

/// Everything a command may need. Built from defaults, then the config file,
/// then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub split: String,
    pub count: usize,
    pub points: Option<(usize, usize)>,
    pub seed: u64,
    pub resolution: u32,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub workers: Option<usize>,
    pub mode: SolveMode,
    pub best_of: usize,
    pub min_clearance_px: Option<f64>,
    pub exact_limit: usize,
    pub thresholds: ExtractionThresholds,
    pub snap: SnapParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: None,
            split: "train".into(),
            count: 100,
            points: None,
            seed: 0,
            resolution: 128,
            out: None,
            data: None,
            images: None,
            workers: None,
            mode: SolveMode::Exact,
            best_of: 10,
            min_clearance_px: None,
            exact_limit: geopix_core::steiner::EXACT_MAX_TERMINALS,
            thresholds: ExtractionThresholds::default(),
            snap: SnapParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn task(&self) -> Result<Task> {
        self.task.context("no task given (use --task or set \"task\" in the config file)")
    }

    pub fn points(&self) -> Result<(usize, usize)> {
        Ok(self.points.unwrap_or(match self.task()? {
            Task::Square => (1, 5),
            Task::Steiner => (10, 20),
            Task::Maxap => (7, 12),
        }))
    }

    pub fn data(&self) -> Result<&Path> {
        self.data.as_deref().context("no dataset directory given (use --data)")
    }

    pub fn eval_params(&self) -> EvalParams {
        EvalParams { thresholds: self.thresholds, snap: self.snap }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if self.snap.theta_step <= 0.0 {
            bail!("snap.theta_step must be positive");
        }
        if self.best_of == 0 {
            bail!("--best-of must be at least 1");
        }
        if self.workers == Some(0) {
            bail!("--workers must be at least 1");
        }
        Ok(())
    }
}

/// `A..B`, `A..=B` or a single `N`.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad number '{t}' in range '{s}'"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(format!("empty range '{s}'"));
    }
    Ok((lo, hi))
}

/// Threshold overrides: extraction fields at the top level, snap fields
/// under `"snap"`. Inline JSON or a path to a JSON file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdPatch {
    binarize_white: Option<u8>,
    binarize_black: Option<u8>,
    edge_fraction: Option<f64>,
    snap_radius: Option<f64>,
    close_vertex_dist: Option<f64>,
    collinear_angle: Option<f64>,
    endpoint_exclusion: Option<f64>,
    snap: Option<SnapPatch>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapPatch {
    theta_min: Option<f64>,
    theta_max: Option<f64>,
    theta_step: Option<f64>,
    translation_radius: Option<u32>,
}

pub fn apply_thresholds(cfg: &mut RunConfig, arg: &str) -> Result<()> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .with_context(|| format!("--thresholds: '{arg}' is neither JSON nor a readable file"))?
    };
    let p: ThresholdPatch = serde_json::from_str(&text).context("--thresholds")?;
    let t = &mut cfg.thresholds;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(t.binarize_white, p.binarize_white);
    set!(t.binarize_black, p.binarize_black);
    set!(t.edge_fraction, p.edge_fraction);
    set!(t.snap_radius, p.snap_radius);
    set!(t.close_vertex_dist, p.close_vertex_dist);
    set!(t.collinear_angle, p.collinear_angle);
    set!(t.endpoint_exclusion, p.endpoint_exclusion);
    if let Some(s) = p.snap {
        set!(cfg.snap.theta_min, s.theta_min);
        set!(cfg.snap.theta_max, s.theta_max);
        set!(cfg.snap.theta_step, s.theta_step);
        set!(cfg.snap.translation_radius, s.translation_radius);
    }
    Ok(())
}
