//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::board::{board_object_points, load_board, render_board, BoardSpec};
use crate::classical::{detect_classical, ChArUcoDetection, ClassicalParams, DetectionSource};
use crate::deepdetect::{detect_deep, DecodeThresholds, DeepConfig, RefineMode};
use crate::eval::{
    fmt6, gen_refine_patches, gen_test_frames, gen_training_frames, refine_error, rounding_baseline, sweep, train_refinenet,
    write_patch_dataset, ClassicalDetector, DeepDetector, Detector, FrameMix, PatchStyle, RefineTrainConfig, SweepEffect,
    ViewStyle,
};
use crate::image::{augment, read_pgm, write_pgm, AugmentConfig};
use crate::net::{build_charuconet, load_weights, run_gradcheck, save_weights, train, NetworkDef, TrainConfig};
use crate::pose::{solve_pnp_ransac, CameraIntrinsics, RansacParams};
use crate::IdPoint;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const THREADS_ENV: &str = "CHARUCO_FORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "charuco", version, about = "ChArUco rendering, detection, pose estimation and evaluation")]
pub struct Cli {
    /// Seed for every random choice of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker thread cap; falls back to CHARUCO_FORGE_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render the board as a binary PGM plus `<stem>_gt.csv`.
    RenderBoard {
        #[arg(long, default_value_t = 40)]
        pps: usize,
        #[arg(long, default_value_t = 0)]
        margin: usize,
        #[arg(long)]
        board: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Augmented training frames with corner labels.
    GenFrames {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 0.0)]
        negatives: f64,
        #[arg(long, default_value_t = 0.0)]
        foreign: f64,
        /// Skip the augmentation effects.
        #[arg(long)]
        clean: bool,
        #[arg(long)]
        board: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic 24x24 corner patches and `labels.csv`.
    GenPatches {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply the random augmentation to one image.
    Augment {
        #[arg(long)]
        image: PathBuf,
        /// Corner CSV (`id,x,y`) to carry through the warp.
        #[arg(long)]
        corners: Option<PathBuf>,
        /// Use the probabilities for frames without a board (no warp).
        #[arg(long)]
        negative: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect corners; CSV on stdout.
    Detect {
        #[arg(long, value_enum, default_value_t = Method::Classical)]
        method: Method,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        board: Option<PathBuf>,
        #[command(flatten)]
        deep: DeepArgs,
    },
    /// RANSAC PnP from a detection CSV; pose CSV on stdout.
    Pose {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long)]
        board: Option<PathBuf>,
        #[arg(long, default_value_t = 3.0)]
        inlier_thresh: f64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
    },
    /// Accuracy under increasing motion blur or darkness.
    Sweep {
        #[arg(long, value_enum)]
        effect: EffectArg,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        #[arg(long, default_value_t = 20)]
        images: usize,
        #[arg(long)]
        board: Option<PathBuf>,
        #[command(flatten)]
        deep: DeepArgs,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train RefineNet on synthetic patches and save its weights.
    TrainRefinenet {
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 10000)]
        patches: usize,
        #[arg(long, default_value_t = 0.2)]
        lr: f32,
        #[arg(long, default_value_t = 0.25)]
        width: f64,
        #[arg(long, default_value_t = 1000)]
        held_out: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train ChArUcoNet on augmented synthetic frames and save its weights.
    TrainCharuconet {
        #[arg(long, default_value_t = 64)]
        frames: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f32,
        #[arg(long, default_value_t = 0.25)]
        width: f64,
        #[arg(long, default_value_t = 128)]
        frame_width: usize,
        #[arg(long, default_value_t = 96)]
        frame_height: usize,
        #[arg(long)]
        board: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of every layer and both networks.
    Gradcheck {
        #[arg(long, default_value_t = 0.125)]
        width: f64,
        #[arg(long, default_value_t = 6)]
        per_tensor: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Classical,
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EffectArg {
    MotionBlur,
    Lighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefineArg {
    Refinenet,
    Cornersubpix,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct DeepArgs {
    /// ChArUcoNet weight file; enables the deep detector.
    #[arg(long)]
    pub charuconet: Option<PathBuf>,
    #[arg(long)]
    pub refinenet: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RefineArg::Refinenet)]
    pub refine: RefineArg,
    #[arg(long, default_value_t = 0.3)]
    pub kp_thresh: f64,
    #[arg(long, default_value_t = 0.3)]
    pub id_thresh: f64,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    /// Bad input: missing file, malformed data, invalid flag values.
    Usage(String),
    /// The pipeline ran but found nothing usable.
    NotFound(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn board_or_default(path: &Option<PathBuf>) -> Result<BoardSpec, Failure> {
    match path {
        Some(p) => load_board(p).map_err(usage),
        None => Ok(BoardSpec::default_5x5()),
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| usage(format!("{THREADS_ENV} must be a thread count, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn gt_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("board");
    out.with_file_name(format!("{stem}_gt.csv"))
}

pub fn points_csv(points: &[IdPoint]) -> String {
    let mut s = String::from("id,x,y\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.id, fmt6(p.x), fmt6(p.y)));
    }
    s
}

pub fn parse_points_csv(text: &str) -> Result<Vec<IdPoint>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("id")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || format!("line {}: expected id,x,y", i + 1);
        if f.len() < 3 {
            return Err(bad());
        }
        let id = f[0].parse().map_err(|_| bad())?;
        let (x, y) = (f[1].parse().map_err(|_| bad())?, f[2].parse().map_err(|_| bad())?);
        out.push(IdPoint::new(id, x, y));
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> Result<NetworkDef<f32>, Failure> {
    load_weights(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn deep_config(args: &DeepArgs) -> DeepConfig {
    DeepConfig {
        thresholds: DecodeThresholds { keypoint: args.kp_thresh, id: args.id_thresh },
        mode: match args.refine {
            RefineArg::Refinenet => RefineMode::RefineNet,
            RefineArg::Cornersubpix => RefineMode::CornerSubPix,
            RefineArg::None => RefineMode::None,
        },
        ..DeepConfig::default()
    }
}

fn deep_detector(args: &DeepArgs) -> Result<Option<DeepDetector>, Failure> {
    let Some(cpath) = &args.charuconet else { return Ok(None) };
    let refinenet = args.refinenet.as_deref().map(load_net).transpose()?;
    let config = deep_config(args);
    if config.mode == RefineMode::RefineNet && refinenet.is_none() {
        return Err(usage("--refine refinenet needs --refinenet weights"));
    }
    let name = match config.mode {
        RefineMode::RefineNet => "deep+refinenet",
        RefineMode::CornerSubPix => "deep+cornersubpix",
        RefineMode::None => "deep+norefine",
    };
    Ok(Some(DeepDetector { name: name.into(), charuconet: load_net(cpath)?, refinenet, config }))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut emit = |s: &str| out.write_all(s.as_bytes()).map_err(usage);
    match &cli.command {
        Command::RenderBoard { pps, margin, board, out: path } => {
            let spec = board_or_default(board)?;
            let (img, gt) = render_board(&spec, *pps, *margin).map_err(usage)?;
            write_pgm(&img, path).map_err(usage)?;
            write_file(&gt_path(path), &points_csv(&gt))
        }
        Command::GenFrames { n, width, height, negatives, foreign, clean, board, out: dir } => {
            let spec = board_or_default(board)?;
            let mix = FrameMix {
                style: ViewStyle { width: *width, height: *height, ..ViewStyle::default() },
                negative_fraction: *negatives,
                foreign_fraction: *foreign,
            };
            let cfg = if *clean { AugmentConfig::none() } else { AugmentConfig::positives() };
            let frames = gen_training_frames(&spec, *n, &mix, &cfg, &mut rng).map_err(usage)?;
            std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            let mut corners = String::from("filename,id,x,y\n");
            let mut index = String::from("filename,kind,effects\n");
            for (i, f) in frames.iter().enumerate() {
                let name = format!("frame_{i:05}.pgm");
                write_pgm(&f.image, dir.join(&name)).map_err(usage)?;
                for c in &f.corners {
                    corners.push_str(&format!("{name},{},{},{}\n", c.id, fmt6(c.x), fmt6(c.y)));
                }
                let effects: Vec<&str> = f.applied.iter().map(|e| e.name()).collect();
                index.push_str(&format!("{name},{:?},{}\n", f.kind, effects.join(";")));
            }
            write_file(&dir.join("corners.csv"), &corners)?;
            write_file(&dir.join("frames.csv"), &index)
        }
        Command::GenPatches { n, out: dir } => {
            let patches = gen_refine_patches(*n, &PatchStyle::default(), &mut rng);
            write_patch_dataset(&patches, dir).map_err(usage)
        }
        Command::Augment { image, corners, negative, out: path } => {
            let img = read_pgm(image).map_err(usage)?;
            let pts = match corners {
                Some(p) => parse_points_csv(&std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?)
                    .map_err(usage)?,
                None => Vec::new(),
            };
            let cfg = if *negative { AugmentConfig::negatives() } else { AugmentConfig::positives() };
            let aug = augment(&img, &pts, &cfg, &mut rng);
            write_pgm(&aug.image, path).map_err(usage)?;
            let effects: Vec<&str> = aug.applied.iter().map(|e| e.name()).collect();
            eprintln!("applied: {}", effects.join(","));
            emit(&points_csv(&aug.corners))
        }
        Command::Detect { method, image, board, deep } => {
            let spec = board_or_default(board)?;
            let img = read_pgm(image).map_err(usage)?;
            let det = match method {
                Method::Classical => detect_classical(&img, &spec, &ClassicalParams::default()),
                Method::Deep => {
                    let cpath = deep.charuconet.as_ref().ok_or_else(|| usage("--method deep needs --charuconet"))?;
                    let net = load_net(cpath)?;
                    let refinenet = deep.refinenet.as_deref().map(load_net).transpose()?;
                    detect_deep(&img, &net, refinenet.as_ref(), &deep_config(deep)).map_err(usage)?
                }
            };
            emit(&det.to_csv())?;
            if det.is_empty() {
                return Err(Failure::NotFound("no corners detected".into()));
            }
            Ok(())
        }
        Command::Pose { detections, intrinsics, board, inlier_thresh, max_iters } => {
            let spec = board_or_default(board)?;
            let k = CameraIntrinsics::load(intrinsics).map_err(usage)?;
            let det = ChArUcoDetection::read_csv(detections, DetectionSource::Classical).map_err(usage)?;
            let params = RansacParams { inlier_thresh: *inlier_thresh, max_iters: *max_iters };
            let pose = solve_pnp_ransac(&board_object_points(&spec), &det.points(), &k, &params, &mut rng)
                .map_err(|e| Failure::NotFound(e.to_string()))?;
            emit(&pose.to_csv())
        }
        Command::Sweep { effect, kmax, images, board, deep, out: path } => {
            let spec = board_or_default(board)?;
            let frames = gen_test_frames(&spec, *images, &ViewStyle::default(), &mut rng).map_err(usage)?;
            let classical = ClassicalDetector { spec: spec.clone(), params: ClassicalParams::default() };
            let deep_det = deep_detector(deep)?;
            let mut detectors: Vec<&dyn Detector> = vec![&classical];
            if let Some(d) = &deep_det {
                detectors.push(d);
            }
            let effect = match effect {
                EffectArg::MotionBlur => SweepEffect::MotionBlur,
                EffectArg::Lighting => SweepEffect::Lighting,
            };
            let csv = sweep(effect, &frames, &detectors, *kmax).to_csv();
            if let Some(p) = path {
                write_file(p, &csv)?;
            }
            emit(&csv)
        }
        Command::TrainRefinenet { steps, batch, patches, lr, width, held_out, out: path } => {
            let cfg = RefineTrainConfig {
                width_multiplier: *width,
                train_patches: *patches,
                steps: *steps,
                batch_size: *batch,
                lr: *lr,
                ..RefineTrainConfig::default()
            };
            let (net, log) = train_refinenet(&cfg, &mut rng).map_err(usage)?;
            let test = gen_refine_patches(*held_out, &cfg.style, &mut rng);
            let err = refine_error(&net, &test).map_err(usage)?;
            emit(&format!(
                "initial_loss,{}\nfinal_loss,{}\nbaseline_subpixel_error,{}\nrefined_subpixel_error,{}\n",
                fmt6(log.initial_loss().unwrap_or(f32::NAN) as f64),
                fmt6(log.final_loss().unwrap_or(f32::NAN) as f64),
                fmt6(rounding_baseline(&test)),
                fmt6(err)
            ))?;
            save_weights(&net, path).map_err(usage)
        }
        Command::TrainCharuconet { frames, steps, batch, lr, width, frame_width, frame_height, board, out: path } => {
            let spec = board_or_default(board)?;
            let mix = FrameMix {
                style: ViewStyle { width: *frame_width, height: *frame_height, ..ViewStyle::default() },
                ..FrameMix::default()
            };
            let data = gen_training_frames(&spec, *frames, &mix, &AugmentConfig::positives(), &mut rng).map_err(usage)?;
            let samples: Vec<_> = data.iter().map(|f| f.to_sample()).collect();
            let mut net = build_charuconet(*width).map_err(usage)?;
            net.init_he_uniform(&mut rng);
            let log = train(&mut net, &samples, &TrainConfig::new(*lr, *steps, *batch), &mut rng).map_err(usage)?;
            emit(&format!(
                "initial_loss,{}\nfinal_loss,{}\n",
                fmt6(log.initial_loss().unwrap_or(f32::NAN) as f64),
                fmt6(log.final_loss().unwrap_or(f32::NAN) as f64)
            ))?;
            save_weights(&net, path).map_err(usage)
        }
        Command::Gradcheck { width, per_tensor } => {
            let reports = run_gradcheck(*width, *per_tensor, &mut rng).map_err(usage)?;
            let mut text = String::from("name,checked,skipped,max_rel_error,passed\n");
            for r in &reports {
                text.push_str(&format!("{},{},{},{},{}\n", r.name, r.checked, r.skipped, fmt6(r.max_rel_error), r.passed()));
            }
            emit(&text)?;
            if reports.iter().all(|r| r.passed()) {
                Ok(())
            } else {
                Err(Failure::NotFound("gradient check failed".into()))
            }
        }
    }
}

/// Runs the command line `argv` (program name first), writing results to
/// `out` and diagnostics to stderr.
pub fn run_with_output<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(Failure::Usage(m) | Failure::NotFound(m)) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
    };
    if let Some(n) = threads {
        // A pool built earlier in the process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("run `charuco --help` for usage");
            EXIT_USAGE
        }
        Err(Failure::NotFound(m)) => {
            eprintln!("{m}");
            EXIT_FAILURE
        }
    }
}

pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with_output(argv, &mut lock)
}
