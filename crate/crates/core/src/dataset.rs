//! Sharded datasets of (condition, solution) PNG pairs with a JSON-lines
//! manifest and a `SHA256SUMS` file per shard.
//!
//! Layout: `{root}/{task}/{split}/shard_{k:05}/manifest.jsonl`, images named
//! `{task}_{split}_{index:08}_{cond|sol}.png` next to it.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curvegen::InscribedSquare;
use crate::geom::{PlaneGraph, Point, Polyline, SimplePolygon, EPS};
use crate::raster::{
    rasterize_curve, rasterize_points, rasterize_polygon_pair, rasterize_square, rasterize_steiner_pair, GrayImage,
    PixelMap, RasterError,
};

pub const SHARD_SIZE: usize = 10_000;
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CHECKSUM_FILE: &str = "SHA256SUMS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Square,
    Steiner,
    Maxap,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Square => "square",
            Task::Steiner => "steiner",
            Task::Maxap => "maxap",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square" => Ok(Task::Square),
            "steiner" => Ok(Task::Steiner),
            "maxap" => Ok(Task::Maxap),
            other => Err(format!("unknown task '{other}' (expected square, steiner or maxap)")),
        }
    }
}

/// Exact world-coordinate geometry of one image pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Square {
        curve: Vec<Point>,
        /// The square drawn in the solution image.
        square: InscribedSquare,
        /// All constructed squares of the curve.
        squares: Vec<InscribedSquare>,
    },
    Steiner {
        terminals: Vec<Point>,
        solution: PlaneGraph,
        length: f64,
        exact: bool,
    },
    Maxap {
        points: Vec<Point>,
        /// Polygon as a cycle of point indices.
        order: Vec<usize>,
        area: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub task: Task,
    pub instance_id: String,
    pub split: String,
    pub index: u64,
    pub seed: u64,
    pub resolution: u32,
    pub world_to_pixel: [f64; 6],
    pub geometry: Geometry,
    /// Relative to the shard directory.
    pub cond_path: String,
    pub sol_path: String,
}

pub fn instance_id(task: Task, split: &str, index: u64) -> String {
    format!("{task}_{split}_{index:08}")
}

pub fn shard_dir(root: &Path, task: Task, split: &str, shard: usize) -> PathBuf {
    root.join(task.name()).join(split).join(format!("shard_{shard:05}"))
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("instance {instance_id}: missing file {path}")]
    MissingFile { instance_id: String, path: PathBuf },
    #[error("checksum mismatch for {path}")]
    Checksum { path: PathBuf },
    #[error("{path}: not listed in {CHECKSUM_FILE}")]
    Unlisted { path: PathBuf },
    #[error("instance {instance_id}: {source}")]
    Raster { instance_id: String, source: RasterError },
    #[error("instance {instance_id}: invalid geometry: {message}")]
    Geometry { instance_id: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// One record plus its two images, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardItem {
    pub manifest: InstanceManifest,
    pub cond: GrayImage,
    pub sol: GrayImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardSummary {
    pub dir: PathBuf,
    pub count: usize,
    pub files: usize,
    /// SHA-256 of the `SHA256SUMS` file.
    pub checksum: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes images, manifest and checksums, sorted by instance id, then reads
/// every file back and compares its digest.
pub fn write_shard(items: &[ShardItem], dir: &Path) -> Result<ShardSummary, DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut order: Vec<&ShardItem> = items.iter().collect();
    order.sort_by(|a, b| a.manifest.instance_id.cmp(&b.manifest.instance_id));

    let mut sums: Vec<(String, String)> = Vec::new();
    let mut manifest = String::new();
    for item in order {
        let m = &item.manifest;
        for (name, img) in [(&m.cond_path, &item.cond), (&m.sol_path, &item.sol)] {
            let bytes = img
                .encode_png()
                .map_err(|source| DatasetError::Raster { instance_id: m.instance_id.clone(), source })?;
            let path = dir.join(name);
            fs::write(&path, &bytes).map_err(io_err(&path))?;
            sums.push((sha256_hex(&bytes), name.clone()));
        }
        manifest.push_str(&serde_json::to_string(m).expect("manifest serializes"));
        manifest.push('\n');
    }
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.as_bytes()).map_err(io_err(&mpath))?;
    sums.push((sha256_hex(manifest.as_bytes()), MANIFEST_FILE.to_string()));

    let listing: String = sums.iter().map(|(h, n)| format!("{h}  {n}\n")).collect();
    let spath = dir.join(CHECKSUM_FILE);
    let mut f = fs::File::create(&spath).map_err(io_err(&spath))?;
    f.write_all(listing.as_bytes()).map_err(io_err(&spath))?;
    drop(f);

    for (h, n) in &sums {
        let path = dir.join(n);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if &sha256_hex(&bytes) != h {
            return Err(DatasetError::Checksum { path });
        }
    }
    Ok(ShardSummary {
        dir: dir.to_path_buf(),
        count: items.len(),
        files: sums.len(),
        checksum: sha256_hex(listing.as_bytes()),
    })
}

fn read_checksums(dir: &Path) -> Result<Vec<(String, String)>, DatasetError> {
    let path = dir.join(CHECKSUM_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some((h, n)) = line.split_once("  ") else {
            return Err(DatasetError::Parse {
                path: path.clone(),
                line: i + 1,
                message: "expected '<sha256>  <file>'".into(),
            });
        };
        out.push((h.to_string(), n.to_string()));
    }
    Ok(out)
}

/// Parses the manifest, checks that every referenced file exists and that
/// every listed file matches its digest. Records come back in stored order.
pub fn read_shard(dir: &Path) -> Result<Vec<InstanceManifest>, DatasetError> {
    let sums = read_checksums(dir)?;
    let mpath = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&mpath).map_err(io_err(&mpath))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&mpath))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: InstanceManifest = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: mpath.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        for name in [&m.cond_path, &m.sol_path] {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(DatasetError::MissingFile { instance_id: m.instance_id.clone(), path });
            }
            if !sums.iter().any(|(_, n)| n == name) {
                return Err(DatasetError::Unlisted { path });
            }
        }
        records.push(m);
    }
    for (h, n) in &sums {
        let path = dir.join(n);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if &sha256_hex(&bytes) != h {
            return Err(DatasetError::Checksum { path });
        }
    }
    Ok(records)
}

/// Shard directories under `{root}/{task}/{split}` in order.
pub fn list_shards(root: &Path, task: Task, split: &str) -> Result<Vec<PathBuf>, DatasetError> {
    let base = root.join(task.name()).join(split);
    let mut dirs: Vec<PathBuf> = fs::read_dir(&base)
        .map_err(io_err(&base))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("shard_")))
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Redraws both images of a record from its stored geometry.
pub fn render(m: &InstanceManifest) -> Result<(GrayImage, GrayImage), DatasetError> {
    let map = PixelMap { m: m.world_to_pixel };
    let res = m.resolution;
    let bad = |message: String| DatasetError::Geometry { instance_id: m.instance_id.clone(), message };
    match &m.geometry {
        Geometry::Square { curve, square, .. } => {
            let curve = Polyline::new(curve.clone(), true).map_err(|e| bad(e.to_string()))?;
            Ok((rasterize_curve(&curve, &map, res), rasterize_square(&square.vertices(), &map, res)))
        }
        Geometry::Steiner { terminals, solution, .. } => Ok(rasterize_steiner_pair(terminals, solution, &map, res)),
        Geometry::Maxap { points, order, .. } => {
            if order.iter().any(|&i| i >= points.len()) {
                return Err(bad("order index out of range".into()));
            }
            let poly =
                SimplePolygon::new(order.iter().map(|&i| points[i]).collect(), EPS).map_err(|e| bad(e.to_string()))?;
            Ok(rasterize_polygon_pair(points, &poly, &map, res))
        }
    }
}

/// Condition image alone (what a sampler is conditioned on).
pub fn render_condition(m: &InstanceManifest) -> Result<GrayImage, DatasetError> {
    let map = PixelMap { m: m.world_to_pixel };
    match &m.geometry {
        Geometry::Steiner { terminals: pts, .. } | Geometry::Maxap { points: pts, .. } => {
            Ok(rasterize_points(pts, &map, m.resolution))
        }
        Geometry::Square { .. } => render(m).map(|p| p.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(i: u64) -> ShardItem {
        let id = instance_id(Task::Steiner, "train", i);
        let terminals = vec![Point::new(0.2, 0.2), Point::new(0.8, 0.3 + 0.01 * i as f64)];
        let mut g = PlaneGraph::on_terminals(terminals.clone());
        g.add_edge(0, 1).unwrap();
        let manifest = InstanceManifest {
            task: Task::Steiner,
            instance_id: id.clone(),
            split: "train".into(),
            index: i,
            seed: i,
            resolution: 32,
            world_to_pixel: PixelMap::unit_square(32, 2.0).m,
            geometry: Geometry::Steiner { length: g.total_length(), terminals, solution: g, exact: true },
            cond_path: format!("{id}_cond.png"),
            sol_path: format!("{id}_sol.png"),
        };
        let (cond, sol) = render(&manifest).unwrap();
        ShardItem { manifest, cond, sol }
    }

    #[test]
    fn ten_items_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let items: Vec<ShardItem> = (0..10).rev().map(item).collect();
        let s = write_shard(&items, dir.path()).unwrap();
        assert_eq!((s.count, s.files), (10, 21));
        let pngs = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
            .count();
        assert_eq!(pngs, 20);
        let back = read_shard(dir.path()).unwrap();
        let mut want: Vec<InstanceManifest> = items.into_iter().map(|i| i.manifest).collect();
        want.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        assert_eq!(back, want);
    }

    #[test]
    fn empty_shard() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(write_shard(&[], dir.path()).unwrap().count, 0);
        assert!(read_shard(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn missing_png_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_shard(&[item(3)], dir.path()).unwrap();
        fs::remove_file(dir.path().join("steiner_train_00000003_sol.png")).unwrap();
        let msg = read_shard(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("steiner_train_00000003_sol.png") && msg.contains("steiner_train_00000003"), "{msg}");
    }

    #[test]
    fn truncated_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write_shard(&[item(0), item(1)], dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).unwrap();
        let cut = text.len() - 20;
        fs::write(&p, &text[..cut]).unwrap();
        match read_shard(dir.path()).unwrap_err() {
            DatasetError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn tampered_image_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let it = item(0);
        write_shard(std::slice::from_ref(&it), dir.path()).unwrap();
        let mut other = it.cond.clone();
        other.set(0, 0, 7);
        fs::write(dir.path().join(&it.manifest.cond_path), other.encode_png().unwrap()).unwrap();
        assert!(matches!(read_shard(dir.path()).unwrap_err(), DatasetError::Checksum { .. }));
    }
}
