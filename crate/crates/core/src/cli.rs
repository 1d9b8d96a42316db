//! Command-line surface. Each subcommand prints `key=value` lines on stdout;
//! failures become one `error kind=<kind> message="<text>"` line on stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cfar::{cfar, cfar_score_field, detections_to_point_cloud, CfarAxis, CfarConfig, CfarError, EdgePolicy};
use crate::gt::{GtConfig, GtError, GtPipeline, IntensityThreshold};
use crate::io::{
    load_cloud, load_tensor, read_file, read_grid, read_tensor, save_cloud, save_grid, save_tensor, sniff,
    write_sequence, FileKind, IoError,
};
use crate::loss::{gradient_check_at, hybrid_loss, LossConfig, LossError, PredictionGrid};
use crate::metrics::{cells_above, evaluate, grid_to_point_cloud, threshold_sweep, MetricConfig, MetricError};
use crate::synth::{SceneSpec, SynthError, SyntheticScene};
use crate::{PointCloud, RadarTensor4D};

#[derive(Debug, Parser)]
#[command(name = "radarcloud", version, about = "Radar point cloud toolkit")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence directory from a scene file.
    Synth(SynthArgs),
    /// Run a CFAR detector on a tensor file.
    Cfar(CfarArgs),
    /// Build the occupancy ground truth of one frame of a sequence.
    GtBuild(GtBuildArgs),
    /// RPCD / RPCA of a radar cloud against ground truth.
    Metrics(MetricsArgs),
    /// Thresholds matching point budgets on a score field.
    Sweep(SweepArgs),
    /// Loss values and gradient checks for prediction/target pairs.
    LossCheck(LossCheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description (TOML).
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Keep the seeds written in the scene file instead of `--seed`.
    #[arg(long)]
    pub scene_seed: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Ca,
    Os,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Range,
    Doppler,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EdgeArg {
    Skip,
    Clamp,
}

#[derive(Debug, Args)]
pub struct CfarArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Ca)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value_t = AxisArg::Range)]
    pub axis: AxisArg,
    #[arg(long, default_value_t = 2)]
    pub guard: usize,
    #[arg(long, default_value_t = 4)]
    pub train: usize,
    /// Threshold scale δ.
    #[arg(long, default_value_t = 8.0)]
    pub delta: f64,
    /// Order statistic rank for OS-CFAR.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = EdgeArg::Skip)]
    pub edge: EdgeArg,
    /// Detections as a point cloud (`.csv` for text).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-cell score field `Z / Z_noise` as a tensor file.
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GtBuildArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub frame: usize,
    /// Frames stitched on each side; defaults to the sequence's own value.
    #[arg(long)]
    pub t: Option<usize>,
    /// Fixed radar intensity cut-off.
    #[arg(long, conflicts_with = "intensity_percentile")]
    pub intensity_threshold: Option<f64>,
    /// Cut-off as a percentile of the frame's intensities.
    #[arg(long, default_value_t = 65.0)]
    pub intensity_percentile: f64,
    #[arg(long)]
    pub keep_ground: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the stitched cloud.
    #[arg(long)]
    pub cloud_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Occupancy grid (voxel centers are used) or point cloud.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub radar: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub delta_d: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta_a: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Score tensor, or an occupancy grid read as 0/1 scores.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub targets: Vec<usize>,
    /// Write `budget_<N>.pcb` with the cells above each threshold.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossCheckArgs {
    /// Probability tensor; repeat once per layer, finest first.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Occupancy grid or 0/1 tensor, paired with each `--pred`.
    #[arg(long, required = true)]
    pub target: Vec<PathBuf>,
    #[arg(long, default_value_t = 700.0)]
    pub lambda_f: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub smooth: f64,
    /// Voxels probed by the finite-difference check per layer.
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Cfar(#[from] CfarError),
    #[error(transparent)]
    Gt(#[from] GtError),
    #[error(transparent)]
    Metrics(#[from] MetricError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(IoError::Io { .. }) => "io",
            CliError::Io(_) => "format",
            CliError::Cfar(_) => "cfar",
            CliError::Gt(_) => "gt",
            CliError::Metrics(_) => "metrics",
            CliError::Loss(_) => "loss",
            CliError::Synth(_) => "synth",
            CliError::Config(_) => "config",
        }
    }

    /// `error kind=<kind> message="<text>"` on one line.
    pub fn to_line(&self) -> String {
        error_line(self.kind(), &self.to_string())
    }
}

pub fn error_line(kind: &str, message: &str) -> String {
    let flat = message.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("error kind={kind} message={flat:?}")
}

/// Runs one parsed command and returns its stdout lines.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Cfar(a) => run_cfar(a),
        Command::GtBuild(a) => gt_build(a, cli.seed),
        Command::Metrics(a) => metrics(a),
        Command::Sweep(a) => sweep(a),
        Command::LossCheck(a) => loss_check(a, cli.seed),
    }
}

fn synth(a: &SynthArgs, seed: u64) -> Result<Vec<String>, CliError> {
    let text = read_file(&a.scene)?;
    let mut scene: SceneSpec = toml::from_str(&String::from_utf8_lossy(&text))
        .map_err(|e| CliError::Config(format!("{}: {e}", a.scene.display())))?;
    if !a.scene_seed {
        scene.seed = seed;
        if let Some(r) = &mut scene.radar {
            r.rng_seed = seed;
        }
    }
    let synthetic = SyntheticScene::new(scene)?;
    let seq = synthetic.sequence()?;
    write_sequence(&a.out_dir, &seq)?;
    let mut lines = vec![format!(
        "frames={} points={} labels={}",
        seq.len(),
        seq.frames.iter().map(|f| f.cloud.len()).sum::<usize>(),
        seq.frames.iter().map(|f| f.labels.len()).sum::<usize>()
    )];
    if let Some(radar) = &synthetic.spec().radar {
        let dir = a.out_dir.join("oracle");
        std::fs::create_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
        let spec = radar.grid.doubled();
        for k in 0..seq.len() {
            let field = synthetic.oracle_score_field(&radar.grid, k);
            let tensor = RadarTensor4D::new(spec, field).map_err(|e| CliError::Config(e.to_string()))?;
            save_tensor(&dir.join(format!("{k:06}.rdt")), &tensor)?;
        }
        lines.push(format!("oracle_fields={}", seq.len()));
    }
    Ok(lines)
}

fn cfar_config(a: &CfarArgs) -> CfarConfig {
    let base = match a.variant {
        VariantArg::Ca => CfarConfig::ca(a.guard, a.train, a.delta),
        VariantArg::Os => CfarConfig::os(a.guard, a.train, a.k, a.delta),
    };
    base.with_axis(match a.axis {
        AxisArg::Range => CfarAxis::Range,
        AxisArg::Doppler => CfarAxis::Doppler,
    })
    .with_edge_policy(match a.edge {
        EdgeArg::Skip => EdgePolicy::Skip,
        EdgeArg::Clamp => EdgePolicy::Clamp,
    })
}

fn run_cfar(a: &CfarArgs) -> Result<Vec<String>, CliError> {
    let tensor = load_tensor(&a.tensor)?;
    let cfg = cfar_config(a);
    let dets = cfar(&tensor, &cfg)?;
    save_cloud(&a.out, &detections_to_point_cloud(&dets, 0))?;
    if let Some(path) = &a.scores_out {
        let scores = cfar_score_field(&tensor, &cfg)?;
        let field = RadarTensor4D::new(*tensor.spec(), scores).map_err(|e| CliError::Config(e.to_string()))?;
        save_tensor(path, &field)?;
    }
    Ok(vec![format!("detections={} cells={}", dets.len(), tensor.data().len())])
}

fn gt_build(a: &GtBuildArgs, seed: u64) -> Result<Vec<String>, CliError> {
    let seq = crate::io::read_sequence(&a.seq)?;
    let mut config = GtConfig {
        stitch_window: a.t,
        remove_ground: !a.keep_ground,
        intensity_threshold: match a.intensity_threshold {
            Some(v) => IntensityThreshold::Fixed(v),
            None => IntensityThreshold::Percentile(a.intensity_percentile),
        },
        ..GtConfig::default()
    };
    config.ransac.rng_seed = seed;
    let out = GtPipeline::new(config).run(&seq, a.frame)?;
    save_grid(&a.out, &out.grid)?;
    if let Some(path) = &a.cloud_out {
        save_cloud(path, &out.stitched)?;
    }
    let [r, e, az] = out.grid.dims();
    Ok(vec![format!(
        "frame={} stitched_points={} voxelized={} occupied={} intensity_threshold={} dims={r}x{e}x{az}",
        out.frame,
        out.stitched.len(),
        out.voxelized.occupied_count(),
        out.grid.occupied_count(),
        out.intensity_threshold,
    )])
}

fn load_gt_cloud(path: &Path) -> Result<PointCloud, CliError> {
    let bytes = read_file(path)?;
    Ok(match sniff(&bytes) {
        FileKind::Grid => grid_to_point_cloud(&read_grid(&bytes)?),
        _ => load_cloud(path)?,
    })
}

fn metrics(a: &MetricsArgs) -> Result<Vec<String>, CliError> {
    let gt = load_gt_cloud(&a.gt)?;
    let radar = load_cloud(&a.radar)?;
    let cfg = MetricConfig {
        density_radius: a.delta_d,
        accuracy_radius: a.delta_a,
    };
    Ok(vec![evaluate(&gt, &radar, &cfg)?.to_line()])
}

/// Scores and their spec; a grid becomes 0/1 scores over its doubled spec.
fn load_scores(path: &Path) -> Result<RadarTensor4D, CliError> {
    let bytes = read_file(path)?;
    match sniff(&bytes) {
        FileKind::Tensor => Ok(read_tensor(&bytes)?),
        FileKind::Grid => {
            let grid = read_grid(&bytes)?;
            let data = grid.cells().iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
            RadarTensor4D::new(grid.spec().doubled(), data).map_err(|e| CliError::Config(e.to_string()))
        }
        _ => Err(CliError::Config(format!(
            "{}: expected a tensor (RDT4) or grid (OCG1) file",
            path.display()
        ))),
    }
}

fn sweep(a: &SweepArgs) -> Result<Vec<String>, CliError> {
    let scores = load_scores(&a.scores)?;
    let table = threshold_sweep(scores.data(), &a.targets)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    let mut lines = Vec::with_capacity(table.len());
    for e in &table {
        lines.push(format!(
            "target={} threshold={} count={} saturated={}",
            e.target, e.threshold, e.count, e.saturated
        ));
        if let Some(dir) = &a.out_dir {
            save_cloud(
                &dir.join(format!("budget_{}.pcb", e.target)),
                &cells_above(&scores, e.threshold),
            )?;
        }
    }
    Ok(lines)
}

fn load_targets(path: &Path) -> Result<Vec<bool>, CliError> {
    let bytes = read_file(path)?;
    match sniff(&bytes) {
        FileKind::Grid => Ok(read_grid(&bytes)?.cells().to_vec()),
        FileKind::Tensor => read_tensor(&bytes)?
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| match *v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                _ => Err(CliError::Config(format!(
                    "{}: target value {v} at cell {i} is not 0 or 1",
                    path.display()
                ))),
            })
            .collect(),
        _ => Err(CliError::Config(format!(
            "{}: expected a grid (OCG1) or tensor (RDT4) file",
            path.display()
        ))),
    }
}

fn loss_check(a: &LossCheckArgs, seed: u64) -> Result<Vec<String>, CliError> {
    if a.pred.len() != a.target.len() {
        return Err(CliError::Config(format!(
            "{} --pred files but {} --target files",
            a.pred.len(),
            a.target.len()
        )));
    }
    let layers = a
        .pred
        .iter()
        .zip(&a.target)
        .map(|(p, t)| Ok(PredictionGrid::new(load_tensor(p)?.into_data(), load_targets(t)?)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let default = LossConfig::default();
    let cfg = LossConfig {
        lambda_f: a.lambda_f,
        focal_gamma: a.gamma,
        focal_alpha: a.alpha,
        dice_smooth: a.smooth,
        layer_weights: match layers.len() {
            1 => vec![1.0],
            _ => default.layer_weights,
        },
    };
    let loss = hybrid_loss(&layers, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    for (i, (layer, l)) in layers.iter().zip(&loss.layers).enumerate() {
        let probes = sample(&mut rng, layer.len(), a.probes.min(layer.len())).into_vec();
        let check = gradient_check_at(layer, &cfg, 1e-5, &probes);
        lines.push(format!(
            "layer={i} voxels={} weight={} dice={} focal={} weighted={} grad_rel_err_dice={:e} grad_rel_err_focal={:e}",
            layer.len(),
            l.weight,
            l.dice,
            l.focal,
            l.weighted,
            check.dice,
            check.focal
        ));
    }
    lines.push(format!("total={} lambda_f={}", loss.value, cfg.lambda_f));
    Ok(lines)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            return 2;
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", e.to_line());
            1
        }
    }
}
