use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use geopix_core::dataset::Task;
use geopix_core::raster::{GrayImage, RasterPalette};

/// Samples in `dir` keyed by instance id, seeds ascending. Names follow
/// `{task}_{split}_{index:08}_{seed}.png`; anything else is skipped.
pub fn index_samples(dir: &Path) -> Result<HashMap<String, Vec<(u64, PathBuf)>>> {
    let mut out: HashMap<String, Vec<(u64, PathBuf)>> = HashMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some((id, seed)) = parse_sample_name(name) {
            out.entry(id.to_string()).or_default().push((seed, path.clone()));
        }
    }
    for v in out.values_mut() {
        v.sort();
    }
    Ok(out)
}

fn parse_sample_name(name: &str) -> Option<(&str, u64)> {
    let stem = name.strip_suffix(".png")?;
    let (id, seed) = stem.rsplit_once('_')?;
    let seed = seed.parse().ok()?;
    let (_, index) = id.rsplit_once('_')?;
    (index.len() == 8 && index.bytes().all(|b| b.is_ascii_digit())).then_some((id, seed))
}

fn palette(task: Task) -> RasterPalette {
    match task {
        Task::Square => RasterPalette::SQUARE,
        Task::Steiner => RasterPalette::STEINER,
        Task::Maxap => RasterPalette::MAXAP,
    }
}

/// Drawn pixels: more than a quarter of the range away from the background.
fn ink(v: u8, bg: u8) -> bool {
    v.abs_diff(bg) > 64
}

/// RGB strip: optimal | produced | difference (red only in optimal, blue
/// only in produced, white in both).
pub fn comparison(optimal: &GrayImage, produced: &GrayImage, task: Task) -> Result<(u32, u32, Vec<u8>)> {
    let (w, h) = (optimal.width(), optimal.height());
    if (produced.width(), produced.height()) != (w, h) {
        bail!("size mismatch: optimal {w}x{h}, produced {}x{}", produced.width(), produced.height());
    }
    let bg = palette(task).background;
    let mut rgb = vec![0u8; (3 * w * h * 3) as usize];
    for y in 0..h as usize {
        for x in 0..w as usize {
            let i = y * w as usize + x;
            let (a, b) = (optimal.data()[i], produced.data()[i]);
            let diff = match (ink(a, bg), ink(b, bg)) {
                (true, true) => [255, 255, 255],
                (true, false) => [255, 0, 0],
                (false, true) => [0, 0, 255],
                (false, false) => [0, 0, 0],
            };
            let row = y * 3 * w as usize;
            for (panel, px) in [[a; 3], [b; 3], diff].into_iter().enumerate() {
                let at = (row + panel * w as usize + x) * 3;
                rgb[at..at + 3].copy_from_slice(&px);
            }
        }
    }
    Ok((3 * w, h, rgb))
}

pub fn save_comparison(optimal: &GrayImage, produced: &GrayImage, task: Task, path: &Path) -> Result<()> {
    let (w, h, rgb) = comparison(optimal, produced, task)?;
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w, h);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header()?.write_image_data(&rgb)?;
    Ok(())
}
