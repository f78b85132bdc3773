use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sitopo::adaptation::{adapt, train_source, AdaptConfig, TrainConfig, TrainLog};
use sitopo::bench::{
    evaluate, gen_dataset, load_dataset, load_unlabeled, run_ablation, save_dataset,
    AblationConfig, DomainShift, Manifest,
};
use sitopo::body::{rasterize, render_image, BodyParams, RenderStyle};
use sitopo::distance::{s2d_with, BorderPolicy, ErosionRule};
use sitopo::fitting::{fit, FitConfig, Objective};
use sitopo::losses::{chamfer_pointset, pixel_l2, spatial_chamfer};
use sitopo::mask::{save_pgm, BinaryMask, GrayMap};
use sitopo::regressor::RegressorWeights;
use sitopo::topology::{d2t, skeletonize};

#[derive(Parser)]
#[command(name = "sitopo", about = "Silhouette topology toolkit", disable_version_flag = true)]
struct Cli {
    /// Worker threads for batch work; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Erosion rule for `distmap` and `skeletonize`.
    #[arg(long, global = true, default_value = "strict")]
    erosion: ErosionRule,
    /// Print version and the erosion rule in effect.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Rasterize body parameters to a silhouette (and optionally an image).
    Render(RenderArgs),
    /// Distance map of a mask.
    Distmap(DistmapArgs),
    /// Ridge skeleton of a mask.
    Skeletonize(SkeletonizeArgs),
    /// Loss between two masks, printed as JSON.
    Loss(LossArgs),
    /// Fit body parameters to a silhouette.
    Fit(FitArgs),
    /// Train the regressor on a labelled dataset.
    Train(TrainArgs),
    /// Adapt a regressor on images and silhouettes only.
    Adapt(AdaptArgs),
    /// Evaluate a regressor on a labelled dataset.
    Eval(EvalArgs),
    /// Adapt once per objective and report pre/post metrics.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `clean`, `lowres:F` or `uap:E:SEED` with E in 1/255 units.
    #[arg(long)]
    shift: Option<String>,
    /// `WxH`.
    #[arg(long)]
    canvas: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GenConfig {
    n: usize,
    seed: u64,
    shift: DomainShift,
    canvas: (usize, usize),
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 100,
            seed: 0,
            shift: DomainShift::Clean,
            canvas: (128, 128),
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, default_value = "128x128")]
    canvas: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    In,
    Out,
}

#[derive(Args)]
struct DistmapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "in")]
    direction: Direction,
}

#[derive(Args)]
struct SkeletonizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossKind {
    Topo,
    Sil,
    L2,
    Chamfer,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long, value_enum)]
    kind: LossKind,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Report the normalised value as `value` (raw otherwise).
    #[arg(long)]
    normalized: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// `pixel_l2`, `chamfer`, `chamfer_skeleton_l2`, `chamfer_topology` or a row label.
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AdaptArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Labelled evaluation set; defaults to the target directory.
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
}

/// Failures that exit with the usage code rather than the data code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn parse_canvas(s: &str) -> anyhow::Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("canvas must look like 128x128, got {s:?}")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| usage(format!("bad canvas {s:?}")));
    Ok((parse(w)?, parse(h)?))
}

fn parse_shift(s: &str) -> anyhow::Result<DomainShift> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| usage(format!("bad shift {s:?}")));
    match parts.as_slice() {
        ["clean"] => Ok(DomainShift::Clean),
        ["lowres", f] => Ok(DomainShift::Lowres {
            factor: f.parse().map_err(|_| usage(format!("bad shift {s:?}")))?,
        }),
        ["uap", e, seed] => Ok(DomainShift::Uap {
            epsilon: num(e)? / 255.0,
            seed: seed.parse().map_err(|_| usage(format!("bad shift {s:?}")))?,
        }),
        _ => Err(usage(format!(
            "shift must be clean, lowres:F or uap:E:SEED, got {s:?}"
        ))),
    }
}

fn parse_objective(s: &str) -> anyhow::Result<Objective> {
    Objective::parse(s).ok_or_else(|| usage(format!("unknown objective {s:?}")))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

fn write_log(path: Option<&Path>, log: &TrainLog) -> anyhow::Result<()> {
    match path {
        Some(p) => write_csv(p, &log.records),
        None => Ok(()),
    }
}

fn load_mask(path: &Path) -> anyhow::Result<BinaryMask> {
    BinaryMask::load(path).with_context(|| format!("loading mask {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> anyhow::Result<()> {
    let mut cfg: GenConfig = read_config(a.config.as_deref())?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &a.shift {
        cfg.shift = parse_shift(s)?;
    }
    if let Some(c) = &a.canvas {
        cfg.canvas = parse_canvas(c)?;
    }
    let samples = gen_dataset(cfg.n, cfg.seed, &cfg.shift, cfg.canvas)?;
    let manifest = Manifest {
        seed: cfg.seed,
        shift: cfg.shift,
        canvas: cfg.canvas,
        count: samples.len(),
    };
    save_dataset(&a.out, &manifest, &samples)?;
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> anyhow::Result<()> {
    let params: BodyParams = read_json(&a.params)?;
    let canvas = parse_canvas(&a.canvas)?;
    save_pgm(&rasterize(&params, canvas), &a.out)?;
    if let Some(img) = &a.image {
        save_pgm(&render_image(&params, canvas, &RenderStyle::default()), img)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DistmapSidecar {
    width: usize,
    height: usize,
    direction: &'static str,
    erosion: &'static str,
    max: u32,
}

fn cmd_distmap(a: &DistmapArgs, rule: ErosionRule) -> anyhow::Result<()> {
    let mask = load_mask(&a.input)?;
    let (source, policy, direction) = match a.direction {
        Direction::In => (mask, BorderPolicy::BACKGROUND, "in"),
        Direction::Out => {
            if mask.is_empty() {
                return Err(sitopo::Error::EmptyMask("outwards distance target").into());
            }
            (mask.invert(), BorderPolicy::FOREGROUND, "out")
        }
    };
    let dist = s2d_with(&source, policy, rule)?;
    save_pgm(&dist.render(), &a.out)?;
    let sidecar = DistmapSidecar {
        width: dist.width(),
        height: dist.height(),
        direction,
        erosion: rule.name(),
        max: dist.max_value(),
    };
    write_json(&a.out.with_extension("json"), &sidecar)
}

fn cmd_skeletonize(a: &SkeletonizeArgs, rule: ErosionRule) -> anyhow::Result<()> {
    let mask = load_mask(&a.input)?;
    let skel = if rule == ErosionRule::Strict {
        skeletonize(&mask)
    } else {
        d2t(&s2d_with(&mask, BorderPolicy::BACKGROUND, rule)?, &mask)?
    };
    save_pgm(skel.mask(), &a.out)?;
    if let Some(path) = &a.overlay {
        let (w, h) = mask.dims();
        let values = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if skel.mask().get(x, y) {
                    1.0
                } else if mask.get(x, y) {
                    96.0 / 255.0
                } else {
                    0.0
                }
            })
            .collect();
        save_pgm(&GrayMap::from_vec(w, h, values)?, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LossOutput {
    raw: f64,
    normalized: f64,
    value: f64,
}

fn cmd_loss(a: &LossArgs) -> anyhow::Result<()> {
    let x = load_mask(&a.a)?;
    let y = load_mask(&a.b)?;
    let v = match a.kind {
        LossKind::Topo => spatial_chamfer(skeletonize(&x).mask(), skeletonize(&y).mask())?,
        LossKind::Sil => spatial_chamfer(&x, &y)?,
        LossKind::L2 => pixel_l2(&x, &y)?,
        LossKind::Chamfer => chamfer_pointset(&x.active_points(), &y.active_points())?,
    };
    print_json(&LossOutput {
        raw: v.raw,
        normalized: v.normalized,
        value: v.get(a.normalized),
    })
}

fn cmd_fit(a: &FitArgs) -> anyhow::Result<()> {
    let mut cfg: FitConfig = read_config(a.config.as_deref())?;
    if let Some(n) = a.iters {
        cfg.max_iters = n;
    }
    if let Some(o) = &a.objective {
        cfg.objective = parse_objective(o)?;
    }
    let target = load_mask(&a.target)?;
    let init = match &a.init {
        Some(p) => read_json(p)?,
        None => BodyParams::canonical(),
    };
    let result = fit(&target, &init, &cfg)?;
    write_json(&a.out, &result.params)?;
    if let Some(p) = &a.trace {
        write_csv(p, &result.trace)?;
    }
    #[derive(Serialize)]
    struct Summary {
        iterations: usize,
        converged: bool,
        initial: f64,
        final_loss: f64,
    }
    print_json(&Summary {
        iterations: result.iterations,
        converged: result.converged,
        initial: result.trace[0].total,
        final_loss: result.final_loss(),
    })
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let mut cfg: TrainConfig = read_config(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (_, samples) = load_dataset(&a.data)?;
    let labeled: Vec<_> = samples.iter().map(|s| s.labeled()).collect();
    let (w, log) = train_source(&labeled, &cfg)?;
    write_json(&a.out, &w)?;
    write_log(a.log.as_deref(), &log)
}

fn load_weights(path: &Path) -> anyhow::Result<RegressorWeights> {
    let w: RegressorWeights = read_json(path)?;
    w.validate()?;
    Ok(w)
}

fn cmd_adapt(a: &AdaptArgs) -> anyhow::Result<()> {
    let mut cfg: AdaptConfig = read_config(a.config.as_deref())?;
    if let Some(n) = a.max_iter {
        cfg.max_iter = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.objective {
        cfg.loss.objective = parse_objective(o)?;
    }
    let w = load_weights(&a.weights)?;
    let target = load_unlabeled(&a.target)?;
    let (adapted, log) = adapt(&w, &target, &cfg)?;
    write_json(&a.out, &adapted)?;
    write_log(a.log.as_deref(), &log)
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let w = load_weights(&a.weights)?;
    let (_, samples) = load_dataset(&a.data)?;
    let report = evaluate(&w, &samples)?;
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    #[derive(Serialize)]
    struct Summary {
        mpjpe: f64,
        pa_mpjpe: f64,
        n: usize,
    }
    print_json(&Summary {
        mpjpe: report.mpjpe,
        pa_mpjpe: report.pa_mpjpe,
        n: report.n,
    })
}

fn cmd_ablate(a: &AblateArgs) -> anyhow::Result<()> {
    let mut cfg: AblationConfig = read_config(a.config.as_deref())?;
    if let Some(n) = a.max_iter {
        cfg.adapt.max_iter = n;
    }
    let w = load_weights(&a.weights)?;
    let target = load_unlabeled(&a.target)?;
    let (_, eval) = load_dataset(a.eval.as_ref().unwrap_or(&a.target))?;
    let report = run_ablation(&w, &target, &eval, &cfg)?;
    report.save(&a.out)?;
    print_json(&report.rows)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.version {
        println!("sitopo {} (erosion: {})", env!("CARGO_PKG_VERSION"), cli.erosion.name());
        return Ok(());
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let rule = cli.erosion;
    match cli.command {
        None => {
            eprint!("{}", Cli::command().render_help());
            Err(usage("missing subcommand"))
        }
        Some(Command::Gen(a)) => cmd_gen(&a),
        Some(Command::Render(a)) => cmd_render(&a),
        Some(Command::Distmap(a)) => cmd_distmap(&a, rule),
        Some(Command::Skeletonize(a)) => cmd_skeletonize(&a, rule),
        Some(Command::Loss(a)) => cmd_loss(&a),
        Some(Command::Fit(a)) => cmd_fit(&a),
        Some(Command::Train(a)) => cmd_train(&a),
        Some(Command::Adapt(a)) => cmd_adapt(&a),
        Some(Command::Eval(a)) => cmd_eval(&a),
        Some(Command::Ablate(a)) => cmd_ablate(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run `sitopo --help` for usage");
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
