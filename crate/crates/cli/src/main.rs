//! `geopix`: generate datasets, run solvers, extract structures from images,
//! evaluate and render comparisons.

mod config;
mod images;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use geopix_core::dataset::{
    instance_id, list_shards, read_shard, shard_dir, write_shard, InstanceManifest, ShardItem, Task, SHARD_SIZE,
};
use geopix_core::evaluate::{evaluate_image, extract_structure, solve_record, Extracted, SolveMode};
use geopix_core::generate::{generate_geometry, make_item, GenConfig};
use geopix_core::metrics::{aggregate_report, best_of_k, size_buckets, EvalRecord, Objective, ReportRow};
use geopix_core::raster::GrayImage;
use geopix_core::seeds::derive_seed;

use config::{apply_thresholds, parse_range, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "geopix", version, about = "Inscribed squares, Steiner trees and max-area polygons as images")]
struct Cli {
    /// JSON config file (same fields as the run config); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a sharded dataset of (condition, solution) image pairs.
    Gen(GenArgs),
    /// Run a solver on every record of a dataset split.
    Solve(SolveArgs),
    /// Recover structures from solution images or samples.
    Extract(ImageArgs),
    /// Extract, score against the oracle and aggregate (best of k seeds).
    Eval(EvalArgs),
    /// Side-by-side optimal / produced / difference images.
    Render(ImageArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Thread count (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    count: Option<usize>,
    /// Point count range `A..B` (squares per curve for the square task).
    #[arg(long, value_parser = parse_range)]
    points: Option<(usize, usize)>,
    #[arg(long)]
    res: Option<u32>,
    /// Redraw Steiner/MAXAP instances whose drawn features come closer than this (pixels).
    #[arg(long)]
    min_clearance: Option<f64>,
    /// Largest Steiner instance solved exactly; bigger ones use the heuristic.
    #[arg(long)]
    exact_limit: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    mode: Option<SolveMode>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory of `{task}_{split}_{index:08}_{seed}.png` samples; defaults to the dataset's solution images.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Extraction threshold overrides, inline JSON or a file.
    #[arg(long)]
    thresholds: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    inner: ImageArgs,
    #[arg(long)]
    best_of: Option<usize>,
}

fn apply_common(cfg: &mut RunConfig, c: &Common) {
    if let Some(t) = c.task {
        cfg.task = Some(t);
    }
    if let Some(s) = &c.split {
        cfg.split = s.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
}

fn apply_images(cfg: &mut RunConfig, a: &ImageArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    if a.images.is_some() {
        cfg.images = a.images.clone();
    }
    if let Some(t) = &a.thresholds {
        apply_thresholds(cfg, t)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOPIX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("geopix: {failed} instance(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("geopix: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Number of failed instances.
fn run(cli: Cli) -> Result<usize> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.cmd {
        Cmd::Gen(a) => {
            apply_common(&mut cfg, &a.common);
            if let Some(c) = a.count {
                cfg.count = c;
            }
            if a.points.is_some() {
                cfg.points = a.points;
            }
            if let Some(r) = a.res {
                cfg.resolution = r;
            }
            if a.min_clearance.is_some() {
                cfg.min_clearance_px = a.min_clearance;
            }
            if let Some(e) = a.exact_limit {
                cfg.exact_limit = e;
            }
        }
        Cmd::Solve(a) => {
            apply_common(&mut cfg, &a.common);
            if a.data.is_some() {
                cfg.data = a.data.clone();
            }
            if let Some(m) = a.mode {
                cfg.mode = m;
            }
        }
        Cmd::Extract(a) | Cmd::Render(a) => apply_images(&mut cfg, a)?,
        Cmd::Eval(a) => {
            apply_images(&mut cfg, &a.inner)?;
            if let Some(k) = a.best_of {
                cfg.best_of = k;
            }
        }
    }
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.cmd {
        Cmd::Gen(_) => cmd_gen(&cfg),
        Cmd::Solve(_) => cmd_solve(&cfg),
        Cmd::Extract(_) => cmd_extract(&cfg),
        Cmd::Eval(_) => cmd_eval(&cfg),
        Cmd::Render(_) => cmd_render(&cfg),
    })
}

fn gen_config(cfg: &RunConfig) -> Result<GenConfig> {
    Ok(GenConfig {
        task: cfg.task()?,
        split: cfg.split.clone(),
        seed: cfg.seed,
        points: cfg.points()?,
        resolution: cfg.resolution,
        exact_limit: cfg.exact_limit,
        min_clearance_px: cfg.min_clearance_px,
        ..GenConfig::default()
    })
}

fn cmd_gen(cfg: &RunConfig) -> Result<usize> {
    let g = gen_config(cfg)?;
    g.validate()?;
    let root = cfg.out.as_deref().context("no output directory given (use --out)")?;

    let (items, failed) = match g.task {
        Task::Square => square_items(&g, cfg.count),
        _ => {
            let made: Vec<_> = (0..cfg.count as u64)
                .into_par_iter()
                .map(|i| {
                    let geom = generate_geometry(&g, i)?.pop().expect("one geometry per index");
                    make_item(&g, i, g.instance_seed(i), geom)
                })
                .collect();
            let mut items = Vec::with_capacity(made.len());
            let mut failed = 0;
            for (i, r) in made.into_iter().enumerate() {
                match r {
                    Ok(it) => items.push(it),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}: {e}", instance_id(g.task, &g.split, i as u64));
                    }
                }
            }
            (items, failed)
        }
    };

    let mut out = std::io::stdout().lock();
    for (k, chunk) in items.chunks(SHARD_SIZE).enumerate().chain(items.is_empty().then_some((0, &items[..]))) {
        let dir = shard_dir(root, g.task, &g.split, k);
        let summary = write_shard(chunk, &dir)?;
        writeln!(out, "{}", serde_json::to_string(&summary)?)?;
    }
    Ok(failed)
}

/// Same items as `generate_items`: curves in seed order, one item per square,
/// curves drawn in parallel batches.
fn square_items(g: &GenConfig, count: usize) -> (Vec<ShardItem>, usize) {
    let mut planned = Vec::with_capacity(count);
    let mut failed = 0;
    let mut source = 0u64;
    while planned.len() < count {
        let mean = ((g.points.0 + g.points.1) / 2).max(1);
        let batch = ((count - planned.len()) / mean + 8) as u64;
        let drawn: Vec<_> = (source..source + batch).into_par_iter().map(|i| (i, generate_geometry(g, i))).collect();
        source += batch;
        for (i, r) in drawn {
            match r {
                Ok(gs) => planned.extend(gs.into_iter().map(|geom| (i, geom))),
                Err(e) => {
                    failed += 1;
                    eprintln!("curve {i}: {e}");
                }
            }
        }
    }
    planned.truncate(count);
    let made: Vec<_> = planned
        .into_par_iter()
        .enumerate()
        .map(|(idx, (src, geom))| make_item(g, idx as u64, g.instance_seed(src), geom))
        .collect();
    let mut items = Vec::with_capacity(made.len());
    for (idx, r) in made.into_iter().enumerate() {
        match r {
            Ok(it) => items.push(it),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", instance_id(g.task, &g.split, idx as u64));
            }
        }
    }
    (items, failed)
}

fn load_records(cfg: &RunConfig) -> Result<Vec<(PathBuf, InstanceManifest)>> {
    let task = cfg.task()?;
    let data = cfg.data()?;
    let mut all = Vec::new();
    for dir in list_shards(data, task, &cfg.split)? {
        for m in read_shard(&dir)? {
            all.push((dir.clone(), m));
        }
    }
    Ok(all)
}

#[derive(Serialize)]
struct Report<'a> {
    task: Task,
    split: &'a str,
    /// Units of primary_value: world length, world area, or pixels (alignment).
    primary_unit: &'static str,
    best_of: Option<usize>,
    rows: Vec<ReportRow>,
}

fn primary_unit(task: Task) -> &'static str {
    match task {
        Task::Square => "pixels",
        Task::Steiner => "world length",
        Task::Maxap => "world area",
    }
}

fn write_outputs(cfg: &RunConfig, records: &[EvalRecord], best_of: Option<usize>) -> Result<()> {
    let task = cfg.task()?;
    let rows = aggregate_report(records, &size_buckets(records));
    let report = Report { task, split: &cfg.split, primary_unit: primary_unit(task), best_of, rows };
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut lines = String::new();
        for r in records {
            lines.push_str(&serde_json::to_string(r)?);
            lines.push('\n');
        }
        fs::write(dir.join("records.jsonl"), lines)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        w.write_record([
            "bucket_lo",
            "bucket_hi",
            "count",
            "valid_rate",
            "ratio_mean",
            "ratio_std",
            "optimal_rate",
            "primary_mean",
            "squareness_mean",
        ])?;
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &report.rows {
            w.write_record([
                r.bucket.0.to_string(),
                r.bucket.1.to_string(),
                r.count.to_string(),
                r.valid_rate.to_string(),
                f(r.ratio_mean),
                f(r.ratio_std),
                f(r.optimal_rate),
                f(r.primary_mean),
                f(r.squareness_mean),
            ])?;
        }
        w.flush()?;
    }
    writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn cmd_solve(cfg: &RunConfig) -> Result<usize> {
    let records = load_records(cfg)?;
    let results: Vec<_> =
        records.par_iter().map(|(_, m)| (m, solve_record(m, cfg.mode, derive_seed(cfg.seed, m.index)))).collect();
    let mut ok = Vec::new();
    let mut failed = 0;
    for (m, r) in results {
        match r {
            Ok(rec) => ok.push(rec),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", m.instance_id);
            }
        }
    }
    write_outputs(cfg, &ok, None)?;
    Ok(failed)
}

/// Images to score per record: the dataset's own solution image (seed =
/// record seed) or every matching sample in `--images`.
fn image_jobs(cfg: &RunConfig, records: &[(PathBuf, InstanceManifest)]) -> Result<Vec<(usize, u64, PathBuf)>> {
    let mut jobs = Vec::new();
    match &cfg.images {
        None => {
            for (k, (dir, m)) in records.iter().enumerate() {
                jobs.push((k, m.seed, dir.join(&m.sol_path)));
            }
        }
        Some(dir) => {
            let samples = images::index_samples(dir)?;
            let mut missing = 0;
            for (k, (_, m)) in records.iter().enumerate() {
                match samples.get(&m.instance_id) {
                    Some(list) => jobs.extend(list.iter().map(|(seed, p)| (k, *seed, p.clone()))),
                    None => missing += 1,
                }
            }
            if missing > 0 {
                log::warn!("{missing} of {} instances have no samples in {}; skipped", records.len(), dir.display());
            }
        }
    }
    Ok(jobs)
}

fn load_image(path: &Path) -> Result<GrayImage> {
    GrayImage::load_png(path).with_context(|| format!("loading {}", path.display()))
}

#[derive(Serialize)]
struct ExtractLine<'a> {
    instance_id: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    structure: Option<Extracted>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_extract(cfg: &RunConfig) -> Result<usize> {
    let records = load_records(cfg)?;
    let params = cfg.eval_params();
    let jobs = image_jobs(cfg, &records)?;
    let lines: Vec<(bool, String)> = jobs
        .par_iter()
        .map(|(k, seed, path)| {
            let m = &records[*k].1;
            let outcome = load_image(path).and_then(|img| Ok(extract_structure(m, &img, &params)?));
            let ok = outcome.is_ok();
            let (structure, error) = match outcome {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(format!("{e:#}"))),
            };
            let line = ExtractLine { instance_id: &m.instance_id, seed: *seed, structure, error };
            (ok, serde_json::to_string(&line).expect("serializable"))
        })
        .collect();
    let body: String = lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    match &cfg.out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    // Extraction failures are results, not errors of the run.
    let failed = lines.iter().filter(|(ok, _)| !ok).count();
    log::info!("{} images, {failed} without a structure", lines.len());
    Ok(0)
}

fn objective(task: Task) -> Objective {
    match task {
        Task::Steiner => Objective::MinLength,
        // Larger is better for both area and (non-positive) alignment.
        Task::Maxap | Task::Square => Objective::MaxArea,
    }
}

fn cmd_eval(cfg: &RunConfig) -> Result<usize> {
    let task = cfg.task()?;
    let records = load_records(cfg)?;
    let params = cfg.eval_params();
    let jobs = image_jobs(cfg, &records)?;
    let scored: Vec<Result<(usize, EvalRecord)>> = jobs
        .par_iter()
        .map(|(k, seed, path)| {
            let img = load_image(path)?;
            Ok((*k, evaluate_image(&records[*k].1, *seed, &img, &params).1))
        })
        .collect();
    let mut per: BTreeMap<usize, Vec<EvalRecord>> = BTreeMap::new();
    let mut failed = 0;
    for r in scored {
        match r {
            Ok((k, rec)) => per.entry(k).or_default().push(rec),
            Err(e) => {
                failed += 1;
                eprintln!("{e:#}");
            }
        }
    }
    let mut best = Vec::new();
    for (k, (_, m)) in records.iter().enumerate() {
        let Some(mut recs) = per.remove(&k) else {
            log::debug!("{}: nothing scored", m.instance_id);
            continue;
        };
        recs.sort_by_key(|r| r.seed);
        recs.truncate(cfg.best_of);
        best.push(best_of_k(&recs, objective(task))?);
    }
    write_outputs(cfg, &best, Some(cfg.best_of))?;
    Ok(failed)
}

fn cmd_render(cfg: &RunConfig) -> Result<usize> {
    let records = load_records(cfg)?;
    let out = cfg.out.as_deref().context("no output directory given (use --out)")?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let jobs = image_jobs(cfg, &records)?;
    let failed: usize = jobs
        .par_iter()
        .map(|(k, seed, path)| {
            let (dir, m) = &records[*k];
            let r = (|| -> Result<()> {
                let optimal = load_image(&dir.join(&m.sol_path))?;
                let produced = load_image(path)?;
                let name = format!("{}_{seed}_compare.png", m.instance_id);
                images::save_comparison(&optimal, &produced, m.task, &out.join(name))
            })();
            match r {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("{}: {e:#}", m.instance_id);
                    1
                }
            }
        })
        .sum();
    Ok(failed)
}
