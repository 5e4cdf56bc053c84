mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reid_core::cluster::DbscanConfig;
use reid_core::data::{
    adjusted_rand_index, evaluate_map_cmc, generate_blobs, generate_road_lines, generate_synthetic,
    load_dataset, save_dataset, BlobConfig, CameraTaggedDataset, RoadLineConfig, SynthConfig,
};
use reid_core::memory::UpdateStrategy;
use reid_core::trainer::{
    cluster_entropies, cluster_features, embed_all, train_3c_with, ClusterSettings, Clustering, LinearEmbedder,
    TrainConfig,
};
use reid_core::Error;

use config::ConfigFile;

/// Exit status plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    /// Failure while running an algorithm.
    fn run(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) | Error::BadK { .. } => 2,
            Error::Io(_) => 3,
            Error::NoValidQuery => 5,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }

    /// Failure while reading or writing a file.
    fn file(path: &Path, e: Error) -> Self {
        Failure::io(format!("{}: {e}", path.display()))
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "reid", version, about = "Unsupervised re-identification toolkit on synthetic embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset file.
    GenData(GenDataArgs),
    /// Cluster a dataset and report the partition.
    Cluster(ClusterArgs),
    /// Train a linear embedder with pseudo-label contrastive learning.
    Train(TrainArgs),
    /// Evaluate a saved embedder on the query/gallery split.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Layout {
    Camera,
    Blobs,
    Roadlines,
}

impl std::str::FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Layout as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    layout: Option<Layout>,
    /// Identities (or blob count).
    #[arg(long)]
    ids: Option<usize>,
    #[arg(long)]
    cameras: Option<usize>,
    /// Samples per identity, blob or line.
    #[arg(long)]
    samples_per_id: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClusterOpts {
    /// Cluster count for hdc and kmeans.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// hdc, kmeans or dbscan.
    #[arg(long)]
    algorithm: Option<String>,
    /// Embed with this model before clustering.
    #[arg(long)]
    model: Option<PathBuf>,
    /// L2-normalise raw features before clustering.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    opts: ClusterOpts,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Where to write the trained embedder.
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    warmup_epochs: Option<usize>,
    #[arg(long)]
    iters_per_epoch: Option<usize>,
    /// Pseudo-labels per batch.
    #[arg(long)]
    p: Option<usize>,
    /// Instances per pseudo-label.
    #[arg(long)]
    k_inst: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    d_out: Option<usize>,
    /// Clustering after warm-up: hdc, kmeans or dbscan.
    #[arg(long)]
    clustering: Option<String>,
    /// Clustering during warm-up.
    #[arg(long)]
    warmup_clustering: Option<String>,
    /// vanilla, hard, tccl or chd.
    #[arg(long)]
    update: Option<String>,
    /// Disable camera-entropy loss weights.
    #[arg(long)]
    no_cie: bool,
    #[arg(long)]
    cie_base: Option<f64>,
    /// Keep same-camera matches in evaluation.
    #[arg(long)]
    no_camera_filter: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    opts: ClusterOpts,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep same-camera matches.
    #[arg(long)]
    no_camera_filter: bool,
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    record: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn emit<T: Serialize>(record: &'static str, body: &T) -> CliResult<()> {
    let line = serde_json::to_string(&Tagged { record, body }).expect("records serialize");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}")
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(format!("stdout: {e}")))
}

fn known_keys(sub: &str) -> Vec<String> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(sub).expect("subcommand exists");
    sub.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| *l != "config")
        .map(str::to_string)
        .collect()
}

fn load_config(path: &Option<PathBuf>, sub: &str) -> CliResult<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p, &known_keys(sub)),
        None => Ok(ConfigFile::default()),
    }
}

fn parse_named<T>(value: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<T> {
    parse(value).ok_or_else(|| Failure::usage(format!("unknown {what} `{value}`")))
}

fn cluster_settings(opts: &ClusterOpts, cfg: &ConfigFile) -> CliResult<ClusterSettings> {
    let d = ClusterSettings::default();
    Ok(ClusterSettings {
        k: cfg.pick(opts.k, "k", d.k)?,
        k1: cfg.pick(opts.k1, "k1", d.k1)?,
        k2: cfg.pick(opts.k2, "k2", d.k2)?,
        dbscan: DbscanConfig {
            eps: cfg.pick(opts.eps, "eps", d.dbscan.eps)?,
            min_samples: cfg.pick(opts.min_samples, "min-samples", d.dbscan.min_samples)?,
        },
        alpha_euler: cfg.pick(opts.alpha, "alpha", d.alpha_euler)?,
        max_iters: cfg.pick(opts.max_iters, "max-iters", d.max_iters)?,
        min_cluster_size: cfg.pick(opts.min_cluster_size, "min-cluster-size", d.min_cluster_size)?,
    })
}

fn load_data(path: &Path) -> CliResult<CameraTaggedDataset> {
    load_dataset(path).map_err(|e| Failure::file(path, e))
}

fn load_model(path: &Path) -> CliResult<LinearEmbedder> {
    LinearEmbedder::load(path).map_err(|e| Failure::file(path, e))
}

fn check_writable(path: &Path) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Failure::io(format!("{}: directory does not exist", parent.display())))
    }
}

#[derive(Serialize)]
struct DatasetRecord {
    layout: &'static str,
    n: usize,
    ids: usize,
    cameras: usize,
    dim: usize,
    bias: Option<f64>,
    seed: u64,
}

fn cmd_gen_data(args: GenDataArgs) -> CliResult<()> {
    let cfg = load_config(&args.config, "gen-data")?;
    let layout = cfg.pick(args.layout, "layout", Layout::Camera)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    check_writable(&args.out)?;
    let (ds, bias, name) = match layout {
        Layout::Camera => {
            let d = SynthConfig::default();
            let sc = SynthConfig {
                ids: cfg.pick(args.ids, "ids", d.ids)?,
                cameras: cfg.pick(args.cameras, "cameras", d.cameras)?,
                samples_per_id: cfg.pick(args.samples_per_id, "samples-per-id", d.samples_per_id)?,
                d_in: cfg.pick(args.dim, "dim", d.d_in)?,
                camera_bias: cfg.pick(args.bias, "bias", d.camera_bias)?,
                noise_sigma: cfg.pick(args.noise, "noise", d.noise_sigma)?,
                test_fraction: cfg.pick(args.test_fraction, "test-fraction", d.test_fraction)?,
                seed,
            };
            sc.validate().map_err(Failure::run)?;
            (generate_synthetic(&sc).map_err(Failure::run)?, Some(sc.camera_bias), "camera")
        }
        Layout::Blobs => {
            let d = BlobConfig::default();
            let bc = BlobConfig {
                clusters: cfg.pick(args.ids, "ids", d.clusters)?,
                per_cluster: cfg.pick(args.samples_per_id, "samples-per-id", d.per_cluster)?,
                dim: cfg.pick(args.dim, "dim", d.dim)?,
                seed,
                ..d
            };
            (generate_blobs(&bc).map_err(Failure::run)?, None, "blobs")
        }
        Layout::Roadlines => {
            let d = RoadLineConfig::default();
            let rc = RoadLineConfig {
                per_line: cfg.pick(args.samples_per_id, "samples-per-id", d.per_line)?,
                seed,
                ..d
            };
            (generate_road_lines(&rc).map_err(Failure::run)?, None, "roadlines")
        }
    };
    save_dataset(&ds, &args.out).map_err(|e| Failure::file(&args.out, e))?;
    let mut ids = ds.true_id.clone();
    ids.sort_unstable();
    ids.dedup();
    emit(
        "dataset",
        &DatasetRecord {
            layout: name,
            n: ds.len(),
            ids: ids.len(),
            cameras: ds.num_cameras(),
            dim: ds.dim(),
            bias,
            seed,
        },
    )
}

#[derive(Serialize)]
struct ClusterRecord {
    algorithm: &'static str,
    n: usize,
    clusters: usize,
    outliers: usize,
    sizes: Vec<usize>,
    mean_cie: Option<f64>,
    ari: Option<f64>,
}

fn cmd_cluster(args: ClusterArgs) -> CliResult<()> {
    let cfg = load_config(&args.config, "cluster")?;
    let algorithm = cfg.pick(args.algorithm.clone(), "algorithm", "hdc".to_string())?;
    let algorithm = parse_named(&algorithm, "algorithm", Clustering::parse)?;
    let settings = cluster_settings(&args.opts, &cfg)?;
    let seed = cfg.pick(args.seed, "seed", 0)?;
    let model = cfg.pick_opt(args.model.clone(), "model")?;
    let normalize = cfg.switch(args.normalize, "normalize")?;

    let ds = load_data(&args.data)?;
    let features = match model {
        Some(path) => {
            let m = load_model(&path)?;
            embed_all(&m, &ds.features).map_err(Failure::run)?
        }
        None if normalize => ds.features.l2_normalize_rows().map_err(Failure::run)?,
        None => ds.features.clone(),
    };
    let assignment = cluster_features(&features, algorithm, &settings, seed).map_err(Failure::run)?;
    let cies = cluster_entropies(&assignment, &ds.camera, std::f64::consts::E);
    let mean_cie = (!cies.is_empty()).then(|| cies.iter().sum::<f64>() / cies.len() as f64);
    let ari = if ds.true_id.iter().all(|&t| t >= 0) {
        Some(adjusted_rand_index(&assignment.labels, &ds.true_id).map_err(Failure::run)?)
    } else {
        None
    };
    emit(
        "cluster",
        &ClusterRecord {
            algorithm: algorithm.as_str(),
            n: assignment.len(),
            clusters: assignment.k,
            outliers: assignment.outlier_count(),
            sizes: assignment.sizes(),
            mean_cie,
            ari,
        },
    )
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let cfg = load_config(&args.config, "train")?;
    let d = TrainConfig::default();
    let clustering = cfg.pick(args.clustering.clone(), "clustering", d.clustering.as_str().to_string())?;
    let warmup = cfg.pick(
        args.warmup_clustering.clone(),
        "warmup-clustering",
        d.warmup_clustering.as_str().to_string(),
    )?;
    let update = cfg.pick(args.update.clone(), "update", d.update.as_str().to_string())?;
    let epochs = cfg.pick(args.epochs, "epochs", d.epochs)?;
    let config = TrainConfig {
        epochs,
        // An unset warm-up never outlasts the run.
        warmup_epochs: cfg.pick(args.warmup_epochs, "warmup-epochs", d.warmup_epochs.min(epochs))?,
        iters_per_epoch: cfg.pick(args.iters_per_epoch, "iters-per-epoch", d.iters_per_epoch)?,
        p: cfg.pick(args.p, "p", d.p)?,
        k_inst: cfg.pick(args.k_inst, "k-inst", d.k_inst)?,
        base_lr: cfg.pick(args.lr, "lr", d.base_lr)?,
        weight_decay: cfg.pick(args.weight_decay, "weight-decay", d.weight_decay)?,
        momentum: cfg.pick(args.momentum, "momentum", d.momentum)?,
        temperature: cfg.pick(args.temperature, "temperature", d.temperature)?,
        d_out: cfg.pick(args.d_out, "d-out", d.d_out)?,
        warmup_clustering: parse_named(&warmup, "clustering", Clustering::parse)?,
        clustering: parse_named(&clustering, "clustering", Clustering::parse)?,
        cluster: cluster_settings(&args.opts, &cfg)?,
        use_cie: !cfg.switch(args.no_cie, "no-cie")?,
        cie_base: cfg.pick(args.cie_base, "cie-base", d.cie_base)?,
        update: parse_named(&update, "update strategy", UpdateStrategy::parse)?,
        cross_camera_filter: !cfg.switch(args.no_camera_filter, "no-camera-filter")?,
        seed: cfg.pick(args.seed, "seed", d.seed)?,
    };
    config.validate().map_err(Failure::run)?;
    check_writable(&args.model_out)?;
    let ds = load_data(&args.data)?;

    let mut stream_error = None;
    let report = train_3c_with(&ds, &config, |record| {
        if stream_error.is_none() {
            stream_error = emit("epoch", record).err();
        }
    })
    .map_err(Failure::run)?;
    if let Some(e) = stream_error {
        return Err(e);
    }
    report
        .embedder
        .save(&args.model_out)
        .map_err(|e| Failure::file(&args.model_out, e))
}

#[derive(Serialize)]
struct EvalRecord {
    map: f64,
    rank1: Option<f64>,
    rank5: Option<f64>,
    rank10: Option<f64>,
    queries: usize,
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let cfg = load_config(&args.config, "eval")?;
    let filter = !cfg.switch(args.no_camera_filter, "no-camera-filter")?;
    let model = load_model(&args.model)?;
    let ds = load_data(&args.data)?;
    if model.d_in() != ds.dim() {
        return Err(Failure::run(Error::DimensionMismatch {
            expected: model.d_in(),
            found: ds.dim(),
        }));
    }
    let report = evaluate_map_cmc(&model, &ds, filter).map_err(Failure::run)?;
    emit(
        "eval",
        &EvalRecord {
            map: report.map,
            rank1: report.rank(1),
            rank5: report.rank(5),
            rank10: report.rank(10),
            queries: report.num_queries,
        },
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
