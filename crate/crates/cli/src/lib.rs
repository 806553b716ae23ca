//! The `bicap` command-line tool: synthetic data generation, training,
//! fusion, scoring and bi-capacity inspection.
//!
//! Exit codes: `0` success, `2` input or validation error, `3` configuration
//! error.

pub mod config;
pub mod manifest;

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use bicap_core::grid::Grid;
use bicap_core::io::{self as bio, InstanceRows};
use bicap_core::metrics::{baseline_fuse, least_squares_weights_sum_to_one, unit_to_bipolar, Baseline, ScoreReport};
use bicap_core::mil::InstanceTable;
use bicap_core::optimizer::OptimizerError;
use bicap_core::synthgen::{self, SceneSpec};
use bicap_core::{fuse_rows, load_bags, train, BiCapacity, InputPolicy, Mode};
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ConfigFile};
use manifest::{digest_file, FileDigest, Outputs, RunManifest};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bicap", version, about = "Bi-capacity Choquet integral fusion with multiple-instance learning")]
pub struct Cli {
    /// `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic three-source letter scene.
    Synth(SynthArgs),
    /// Learn a bi-capacity from bag-labeled data.
    Train(TrainArgs),
    /// Fuse sources with a learned bi-capacity.
    Fuse(FuseArgs),
    /// Score a fused map (or a baseline) against ground truth.
    Eval(EvalArgs),
    /// Print a bi-capacity file as a matrix.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Square image edge; shorthand for equal --width and --height.
    #[arg(long, conflicts_with_all = ["width", "height"])]
    pub size: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub tile: usize,
    #[arg(long, default_value_t = 0.5)]
    pub blur: f64,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
}

/// Where per-instance source values come from.
#[derive(Debug, Args, Clone, Default)]
pub struct SourceArgs {
    /// Instance table CSV (`instance_id,src_1,...,src_m`).
    #[arg(long, conflicts_with = "grid")]
    pub instances: Option<PathBuf>,
    /// Co-registered source grid CSV; repeat once per source, in order.
    #[arg(long)]
    pub grid: Vec<PathBuf>,
    /// Clamp out-of-range source values into [-1, 1] instead of rejecting them.
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub sources: SourceArgs,
    /// Bag assignment CSV (`instance_id,bag_id`).
    #[arg(long, requires = "labels", conflicts_with = "rects")]
    pub bags: Option<PathBuf>,
    /// Bag label CSV (`bag_id,label`).
    #[arg(long, requires = "bags")]
    pub labels: Option<PathBuf>,
    /// Rectangle CSV (`top,left,bottom,right`); with --grid, tiles touching a
    /// rectangle become positive bags.
    #[arg(long, requires = "grid")]
    pub rects: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub tile: usize,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long = "population", short = 'P')]
    pub population: Option<usize>,
    #[arg(long = "iterations", short = 'I')]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Fitness threshold J_T.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Evaluate fitness on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Bi-capacity file written by `train`.
    #[arg(long)]
    pub bicap: PathBuf,
    #[command(flatten)]
    pub sources: SourceArgs,
    /// Keep the signed integral even for obj2 bi-capacities.
    #[arg(long, conflicts_with = "absolute")]
    pub raw: bool,
    /// Output the absolute value even for obj1 bi-capacities.
    #[arg(long)]
    pub absolute: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Fused map: grid CSV or `instance_id,value` CSV.
    #[arg(long, required_unless_present = "baseline")]
    pub fused: Option<PathBuf>,
    /// Ground truth in the same layout as the scores; targets are values > 0.
    #[arg(long)]
    pub gt: PathBuf,
    /// Label for the report row.
    #[arg(long)]
    pub method: Option<String>,
    /// Take absolute values of the scores first.
    #[arg(long)]
    pub abs: bool,
    /// Scores lie in [0, 1]; map them to [-1, 1] before scoring.
    #[arg(long)]
    pub unit: bool,
    /// Take absolute values of the ground truth, so every nonzero class is a target.
    #[arg(long)]
    pub gt_abs: bool,
    /// Score a simple aggregation of the sources instead of a fused map.
    #[arg(long, conflicts_with = "fused")]
    pub baseline: Option<Baseline>,
    #[command(flatten)]
    pub sources: SourceArgs,
    /// Comma-separated weights for weighted_mean.
    #[arg(long, conflicts_with = "fit_weights")]
    pub weights: Option<String>,
    /// Fit weighted_mean weights to the ground truth by least squares,
    /// constrained to sum to one.
    #[arg(long)]
    pub fit_weights: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub file: PathBuf,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || matches!(cause.downcast_ref(), Some(OptimizerError::Config(_))) {
            return EXIT_CONFIG;
        }
    }
    EXIT_INPUT
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let file_cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    let cfg = file_cfg.merged(&ConfigFile { seed: cli.seed, ..Default::default() });

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker threads")?;
    let mut buf = Vec::new();
    let result = pool.install(|| match &cli.command {
        Command::Synth(a) => synth(cli, &cfg, a, &mut buf),
        Command::Train(a) => cmd_train(cli, &cfg, a, &mut buf),
        Command::Fuse(a) => fuse(cli, &cfg, a, &mut buf),
        Command::Eval(a) => eval(cli, a, &mut buf),
        Command::Inspect(a) => inspect(a, &mut buf),
    });
    out.write_all(&buf)?;
    result
}

fn manifest(command: &str, seed: Option<u64>, config: serde_json::Value, inputs: Vec<FileDigest>) -> RunManifest {
    RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config,
        inputs,
        outputs: Vec::new(),
        wall_clock_secs: 0.0,
    }
}

fn grid_bytes(grid: &Grid) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    bio::write_grid(&mut buf, grid)?;
    Ok(buf)
}

fn pgm_bytes(grid: &Grid) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    bio::write_pgm(&mut buf, grid)?;
    Ok(buf)
}

fn synth(cli: &Cli, cfg: &ConfigFile, a: &SynthArgs, out: &mut Vec<u8>) -> Result<()> {
    let started = Instant::now();
    let d = SceneSpec::default();
    let spec = SceneSpec {
        width: a.size.or(a.width).unwrap_or(d.width),
        height: a.size.or(a.height).unwrap_or(d.height),
        tile: a.tile,
        blur_sigma: a.blur,
        noise_sigma: a.noise,
        seed: cfg.seed.unwrap_or(d.seed),
    };
    let scene = synthgen::generate(&spec)?;
    let mut outputs = Outputs::new(&cli.out_dir);
    for (i, source) in scene.sources.iter().enumerate() {
        outputs.write(&format!("source_{}.csv", i + 1), &grid_bytes(source)?)?;
        outputs.write(&format!("source_{}.pgm", i + 1), &pgm_bytes(source)?)?;
    }
    for (name, grid) in [("gt_bipolar", &scene.gt_bipolar), ("gt_neutral", &scene.gt_neutral)] {
        outputs.write(&format!("{name}.csv"), &grid_bytes(grid)?)?;
        outputs.write(&format!("{name}.pgm"), &pgm_bytes(grid)?)?;
    }
    let mut buf = Vec::new();
    bio::write_instance_table(&mut buf, &scene.instance_table())?;
    outputs.write("instances.csv", &buf)?;
    buf.clear();
    bio::write_assignment(&mut buf, &scene.bags)?;
    outputs.write("bags.csv", &buf)?;
    buf.clear();
    bio::write_labels(&mut buf, &scene.bags)?;
    outputs.write("labels.csv", &buf)?;

    let counts = scene.bags.counts();
    writeln!(
        out,
        "{}x{} scene, {} bags ({} positive, {} negative)",
        spec.width,
        spec.height,
        scene.bags.len(),
        counts.positive_bags,
        counts.negative_bags
    )?;
    let mut m = manifest("synth", Some(spec.seed), serde_json::to_value(&spec)?, Vec::new());
    m.wall_clock_secs = started.elapsed().as_secs_f64();
    outputs.finish(m)?;
    Ok(())
}

struct LoadedSources {
    rows: InstanceRows,
    shape: Option<(usize, usize)>,
    digests: Vec<FileDigest>,
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_sources(a: &SourceArgs) -> Result<LoadedSources> {
    if let Some(path) = &a.instances {
        let rows = bio::read_instance_rows(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        return Ok(LoadedSources { rows, shape: None, digests: vec![digest_file(path)?] });
    }
    ensure!(!a.grid.is_empty(), "no sources given: pass --instances or one --grid per source");
    let mut grids = Vec::with_capacity(a.grid.len());
    let mut digests = Vec::new();
    for path in &a.grid {
        grids.push(bio::read_grid(open(path)?).with_context(|| format!("reading {}", path.display()))?);
        digests.push(digest_file(path)?);
    }
    let shape = grids[0].shape();
    let rows = bio::grids_to_rows(&grids)?;
    Ok(LoadedSources { rows, shape: Some(shape), digests })
}

fn policy(a: &SourceArgs) -> InputPolicy {
    if a.clamp {
        InputPolicy::Clamp
    } else {
        InputPolicy::Strict
    }
}

fn cmd_train(cli: &Cli, file_cfg: &ConfigFile, a: &TrainArgs, out: &mut Vec<u8>) -> Result<()> {
    let started = Instant::now();
    let flags = ConfigFile {
        population: a.population,
        max_iterations: a.iterations,
        eta: a.eta,
        fitness_threshold: a.threshold,
        patience: a.patience,
        mode: a.mode,
        ..Default::default()
    };
    let merged = file_cfg.merged(&flags);
    let mut opt = merged.optimizer()?;
    opt.parallel = !a.sequential;

    let sources = load_sources(&a.sources)?;
    let mut inputs = sources.digests.clone();
    let table = sources.rows.into_table(policy(&a.sources))?;

    let bags = match (&a.bags, &a.labels, &a.rects) {
        (Some(bag_path), Some(label_path), _) => {
            let assignment =
                bio::read_assignment(open(bag_path)?).with_context(|| format!("reading {}", bag_path.display()))?;
            let labels =
                bio::read_labels(open(label_path)?).with_context(|| format!("reading {}", label_path.display()))?;
            inputs.push(digest_file(bag_path)?);
            inputs.push(digest_file(label_path)?);
            load_bags(&assignment, &labels)?
        }
        (_, _, Some(rect_path)) => {
            let (rows, cols) = sources.shape.context("--rects needs --grid sources")?;
            let rects =
                bio::read_rects(open(rect_path)?).with_context(|| format!("reading {}", rect_path.display()))?;
            inputs.push(digest_file(rect_path)?);
            let mask = synthgen::mask_from_rects(cols, rows, &rects);
            synthgen::grid_bags(&mask, cols, rows, a.tile)?
        }
        _ => bail!("no bags given: pass --bags and --labels, or --rects with --grid"),
    };

    let run = train(&opt, &bags, &table)?;
    let mut outputs = Outputs::new(&cli.out_dir);
    outputs.write("bicap.txt", run.best.to_file_text().as_bytes())?;
    let mut history = String::from("iteration,j_total\n");
    for (i, j) in run.history.iter().enumerate() {
        history.push_str(&format!("{i},{j}\n"));
    }
    outputs.write("history.csv", history.as_bytes())?;

    writeln!(
        out,
        "{}: j_total {} (neg {}, pos {}) after {} iterations, {}",
        opt.mode,
        run.best_fitness.j_total,
        run.best_fitness.j_neg,
        run.best_fitness.j_pos,
        run.iterations_run,
        serde_json::to_value(run.stop_reason)?.as_str().unwrap_or_default()
    )?;
    let config = serde_json::json!({
        "optimizer": opt,
        "tile": a.tile,
        "clamp": a.sources.clamp,
        "stop_reason": run.stop_reason,
        "iterations_run": run.iterations_run,
        "j_total": run.best_fitness.j_total,
    });
    let mut m = manifest("train", Some(opt.seed), config, inputs);
    m.wall_clock_secs = started.elapsed().as_secs_f64();
    outputs.finish(m)?;
    Ok(())
}

fn read_bicap(path: &Path) -> Result<BiCapacity> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BiCapacity::from_file_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn fuse(cli: &Cli, cfg: &ConfigFile, a: &FuseArgs, out: &mut Vec<u8>) -> Result<()> {
    let started = Instant::now();
    let g = read_bicap(&a.bicap)?;
    let sources = load_sources(&a.sources)?;
    let mut inputs = vec![digest_file(&a.bicap)?];
    inputs.extend(sources.digests.iter().cloned());
    if sources.rows.m != g.m() {
        return Err(bicap_core::ChoquetError::DimensionMismatch { expected: g.m(), found: sources.rows.m })
            .context("sources do not match the bi-capacity");
    }
    let absolute = if a.raw {
        false
    } else if a.absolute {
        true
    } else {
        cfg.absolute_output.unwrap_or(g.mode() == Mode::Obj2)
    };
    let rows = &sources.rows;
    let fused = fuse_rows(&g, &rows.ids, &rows.data, absolute, policy(&a.sources))?;

    let mut outputs = Outputs::new(&cli.out_dir);
    match sources.shape {
        Some((r, c)) => {
            let grid = Grid::new(r, c, fused.clone()).expect("one value per pixel");
            outputs.write("fused.csv", &grid_bytes(&grid)?)?;
            outputs.write("fused.pgm", &pgm_bytes(&grid)?)?;
        }
        None => {
            let mut buf = Vec::new();
            bio::write_values(&mut buf, &rows.ids, &fused)?;
            outputs.write("fused.csv", &buf)?;
        }
    }
    writeln!(out, "fused {} instances ({})", fused.len(), if absolute { "absolute" } else { "raw" })?;
    let config = serde_json::json!({ "mode": g.mode(), "absolute": absolute, "clamp": a.sources.clamp });
    let mut m = manifest("fuse", None, config, inputs);
    m.wall_clock_secs = started.elapsed().as_secs_f64();
    outputs.finish(m)?;
    Ok(())
}

/// Values in either grid or `instance_id,value` layout, with ids when known.
struct Values {
    ids: Option<Vec<String>>,
    values: Vec<f64>,
}

fn read_values(path: &Path) -> Result<Values> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if text.starts_with('#') {
        Values { ids: None, values: bio::read_grid(text.as_bytes())?.into_data() }
    } else {
        let (ids, values) = bio::read_values(text.as_bytes())?;
        Values { ids: Some(ids), values }
    };
    Ok(parsed)
}

fn eval(cli: &Cli, a: &EvalArgs, out: &mut Vec<u8>) -> Result<()> {
    let started = Instant::now();
    let mut gt = read_values(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?;
    if a.gt_abs {
        gt.values.iter_mut().for_each(|v| *v = v.abs());
    }
    let mut inputs = vec![digest_file(&a.gt)?];
    let mut config = serde_json::json!({ "abs": a.abs, "unit": a.unit, "gt_abs": a.gt_abs });

    let (method, scores) = if let Some(baseline) = a.baseline {
        let sources = load_sources(&a.sources)?;
        inputs.extend(sources.digests.iter().cloned());
        let table: InstanceTable = sources.rows.into_table(policy(&a.sources))?;
        let weights = if a.fit_weights {
            ensure!(table.len() == gt.values.len(), "sources and ground truth differ in length");
            Some(least_squares_weights_sum_to_one(table.data(), table.m(), &gt.values)?)
        } else {
            a.weights
                .as_deref()
                .map(|s| s.split(',').map(|w| w.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>())
                .transpose()
                .context("--weights must be comma-separated numbers")?
        };
        config["weights"] = serde_json::json!(weights);
        let fused = baseline_fuse(baseline, &table, weights.as_deref())?;
        (
            a.method.clone().unwrap_or_else(|| baseline.to_string()),
            Values { ids: Some(table.ids().to_vec()), values: fused },
        )
    } else {
        let path = a.fused.as_ref().expect("clap requires --fused without --baseline");
        inputs.push(digest_file(path)?);
        let method = a.method.clone().unwrap_or_else(|| "bicap".into());
        (method, read_values(path).with_context(|| format!("reading {}", path.display()))?)
    };

    if let (Some(si), Some(gi)) = (&scores.ids, &gt.ids) {
        ensure!(si == gi, "instance ids of scores and ground truth differ");
    }
    let transformed: Vec<f64> = scores
        .values
        .iter()
        .map(|&v| {
            let v = if a.abs { v.abs() } else { v };
            if a.unit {
                unit_to_bipolar(v)
            } else {
                v
            }
        })
        .collect();
    let report = ScoreReport::score(method, &transformed, &gt.values)?;
    writeln!(out, "{}\n{}", ScoreReport::CSV_HEADER, report.csv_line())?;

    let mut outputs = Outputs::new(&cli.out_dir);
    let safe: String = report
        .method
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    outputs.write(
        &format!("scores_{safe}.csv"),
        format!("{}\n{}\n", ScoreReport::CSV_HEADER, report.csv_line()).as_bytes(),
    )?;
    config["method"] = serde_json::json!(report.method);
    let mut m = manifest(&format!("eval_{safe}"), None, config, inputs);
    m.wall_clock_secs = started.elapsed().as_secs_f64();
    outputs.finish(m)?;
    Ok(())
}

fn inspect(a: &InspectArgs, out: &mut Vec<u8>) -> Result<()> {
    let g = read_bicap(&a.file)?;
    write!(out, "{}", g.to_matrix_text())?;
    Ok(())
}
