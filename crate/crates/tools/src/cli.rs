//! The `scsc` command line: train / code / reconstruct / inpaint / eval /
//! export-filters / sweep. Batch-oriented and deterministic: given a
//! seed, two runs emit identical CSV bytes (wall-clock column aside).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use scsc_core::classifier::LabelField;
use scsc_core::trainer::{fit, SolverConfig, TrainedModel, GAMMA_ACTIVE_EPS};
use scsc_core::Image2D;

use crate::csvout::{sweep_csv, trace_csv, write_bytes, SweepRow};
use crate::dataset::{load_images, load_label_fields};
use crate::error::ToolError;
use crate::mask::make_dropout_mask;
use crate::model::{load_model, save_maps, save_model};
use crate::mosaic::export_filter_mosaic;
use crate::pipeline::{
    code_image, evaluate_classification, inpaint_image, reconstruction_psnr, CodingBudget,
};
use crate::raster::{load_image, save_image};

#[derive(Parser)]
#[command(
    name = "scsc",
    version,
    about = "Convolutional sparse coding: joint dictionary and pixel-classifier training"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a dictionary (and, with --gamma > 0, a pixel classifier).
    Train(TrainArgs),
    /// Infer sparse maps for one image under a trained model.
    Code(CodeArgs),
    /// Code an image, reconstruct it, and report the PSNR.
    Reconstruct(ReconstructArgs),
    /// Reconstruct an image from partial observations.
    Inpaint(InpaintArgs),
    /// Score pixel classification on labelled images.
    Eval(EvalArgs),
    /// Render the dictionary as an image mosaic.
    ExportFilters(ExportFiltersArgs),
    /// Train and evaluate across a parameter range, emitting CSV.
    Sweep(SweepArgs),
}

/// Training knobs shared by `train` and `sweep`.
#[derive(Args, Clone)]
pub struct TrainKnobs {
    /// Image directory or comma-separated file list.
    #[arg(long)]
    pub images: String,
    /// Label directory or list (required when --gamma > 0).
    #[arg(long)]
    pub labels: Option<String>,
    /// Number of dictionary filters.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Filter side in pixels.
    #[arg(long = "filter-size", default_value_t = 11)]
    pub filter_size: usize,
    /// Sparsity tradeoff.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Classification tradeoff (0 = unsupervised).
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Classifier L2 regularization.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// ADMM penalty.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long = "outer-iters", default_value_t = 15)]
    pub outer_iters: usize,
    #[arg(long = "inner-iters", default_value_t = 10)]
    pub inner_iters: usize,
    /// ADMM relative residual tolerance.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-class cap for balanced label sampling.
    #[arg(long = "sample-cap", default_value_t = 10_000)]
    pub sample_cap: usize,
    /// Direct per-bin supervised solve (all pixels must be labelled).
    #[arg(long = "exact-fourier-solve")]
    pub exact_fourier_solve: bool,
}

#[derive(Args, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub knobs: TrainKnobs,
    /// Output model path.
    #[arg(long)]
    pub out: PathBuf,
    /// Objective trace CSV path (default: model path with .trace.csv).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct CodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Output sparse-map stack path.
    #[arg(long)]
    pub out: PathBuf,
    /// Coding ADMM iteration budget.
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Coding tolerance override (default: the model's).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Print the valid-region PSNR (always on; kept as an explicit flag).
    #[arg(long)]
    pub psnr: bool,
    /// Optional path for the reconstructed image.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct InpaintArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Fraction of pixels to drop before coding.
    #[arg(long = "drop-fraction", default_value_t = 0.5)]
    pub drop_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional path for the inpainted image.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional path for the dropout mask actually used.
    #[arg(long = "mask-out")]
    pub mask_out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub images: String,
    #[arg(long)]
    pub labels: String,
    /// Retrain a fresh logistic classifier on the coded maps instead of
    /// using the model's stored classifier.
    #[arg(long = "retrain-classifier")]
    pub retrain_classifier: bool,
    /// Report the mean of per-image APs instead of pooled-pixel AP.
    #[arg(long = "per-image-ap")]
    pub per_image_ap: bool,
    /// Directory for per-pixel score images (one per input).
    #[arg(long = "scores-out")]
    pub scores_out: Option<PathBuf>,
    /// Seed for the balanced retraining sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct ExportFiltersArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output image path (.pgm or .png).
    #[arg(long)]
    pub out: PathBuf,
    /// Integer upscaling per filter cell.
    #[arg(long = "cell-scale", default_value_t = 8)]
    pub cell_scale: usize,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Swept parameter: gamma, k, or n (training set size).
    #[arg(long)]
    pub param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long)]
    pub values: String,
    /// Evaluation images (default: the training images).
    #[arg(long = "eval-images")]
    pub eval_images: Option<String>,
    /// Evaluation labels (default: the training labels).
    #[arg(long = "eval-labels")]
    pub eval_labels: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[command(flatten)]
    pub train: TrainKnobs,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Gamma,
    K,
    N,
}

/// Errors split by exit code: usage problems exit 1, everything else
/// follows [`ToolError::exit_code`].
pub enum CliError {
    Usage(String),
    Tool(ToolError),
}

impl From<ToolError> for CliError {
    fn from(e: ToolError) -> Self {
        CliError::Tool(e)
    }
}

impl From<scsc_core::Error> for CliError {
    fn from(e: scsc_core::Error) -> Self {
        CliError::Tool(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Tool(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Tool(e) => e.exit_code(),
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(args) => run_train(&args),
        Command::Code(args) => run_code(&args),
        Command::Reconstruct(args) => run_reconstruct(&args),
        Command::Inpaint(args) => run_inpaint(&args),
        Command::Eval(args) => run_eval(&args),
        Command::ExportFilters(args) => run_export_filters(&args),
        Command::Sweep(args) => run_sweep(&args),
    }
}

fn config_from(args: &TrainKnobs) -> SolverConfig {
    SolverConfig {
        beta: args.beta,
        gamma: args.gamma,
        alpha: args.alpha,
        rho: args.rho,
        filter_count: args.k,
        filter_side: args.filter_size,
        outer_iters: args.outer_iters,
        inner_iters: args.inner_iters,
        tol: args.tol,
        seed: args.seed,
        sample_cap: args.sample_cap,
        exact_fourier_solve: args.exact_fourier_solve,
        ..Default::default()
    }
}

fn run_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = config_from(&args.knobs);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, images) = load_images(&args.knobs.images)?;
    let masks: Vec<Image2D> =
        images.iter().map(|x| Image2D::ones(x.height(), x.width())).collect();
    let labels: Vec<LabelField> = if cfg.gamma > GAMMA_ACTIVE_EPS {
        let spec = args.knobs.labels.as_deref().ok_or_else(|| {
            CliError::Usage("--labels is required when --gamma > 0".into())
        })?;
        load_label_fields(spec, images.len())?
    } else {
        Vec::new()
    };
    let outcome = fit(&images, &masks, &labels, &cfg).map_err(ToolError::from)?;
    let trace_path = args
        .trace
        .clone()
        .unwrap_or_else(|| args.out.with_extension("trace.csv"));
    write_bytes(&trace_csv(&outcome.trace), &trace_path)?;
    save_model(&outcome.model, &args.out)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

fn run_code(args: &CodeArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let image = load_image(&args.image)?;
    let budget = CodingBudget::for_model(&model, Some(args.iters), args.tol);
    let maps = code_image(&model, &image, None, &budget)?;
    save_maps(&maps, &args.out)?;
    println!("maps written to {}", args.out.display());
    Ok(())
}

fn run_reconstruct(args: &ReconstructArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let image = load_image(&args.image)?;
    let budget = CodingBudget::for_model(&model, Some(args.iters), args.tol);
    let (value, recon) = reconstruction_psnr(&model, &image, &budget)?;
    println!("psnr={value}");
    if let Some(out) = &args.out {
        save_image(&recon, out)?;
    }
    Ok(())
}

fn run_inpaint(args: &InpaintArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.drop_fraction) {
        return Err(CliError::Usage(format!(
            "--drop-fraction must lie in [0, 1], got {}",
            args.drop_fraction
        )));
    }
    let model = load_model(&args.model)?;
    let image = load_image(&args.image)?;
    let budget = CodingBudget::for_model(&model, Some(args.iters), args.tol);
    let (value, recon) =
        inpaint_image(&model, &image, args.drop_fraction, args.seed, &budget)?;
    println!("psnr={value}");
    if let Some(out) = &args.out {
        save_image(&recon, out)?;
    }
    if let Some(mask_out) = &args.mask_out {
        let mask =
            make_dropout_mask(image.height(), image.width(), args.drop_fraction, args.seed)?;
        save_image(&mask, mask_out)?;
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let (paths, images) = load_images(&args.images)?;
    let labels = load_label_fields(&args.labels, images.len())?;
    let budget = CodingBudget::for_model(&model, Some(args.iters), args.tol);
    let outcome = evaluate_classification(
        &model,
        &images,
        &labels,
        args.retrain_classifier,
        args.seed,
        &budget,
    )?;
    let reported = if args.per_image_ap { outcome.per_image_ap } else { outcome.pooled_ap };
    println!("ap={reported}");
    if let Some(dir) = &args.scores_out {
        std::fs::create_dir_all(dir).map_err(ToolError::from)?;
        for (path, score) in paths.iter().zip(&outcome.scores) {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image");
            save_image(score, &dir.join(format!("{stem}_scores.pgm")))?;
        }
    }
    Ok(())
}

fn run_export_filters(args: &ExportFiltersArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    export_filter_mosaic(&model.bank, &args.out, args.cell_scale)?;
    println!("mosaic written to {}", args.out.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let tokens: Vec<String> = args
        .values
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(CliError::Usage("--values must list at least one value".into()));
    }
    let (_, all_images) = load_images(&args.train.images)?;
    let label_spec = args.train.labels.as_deref();
    let eval_images_spec = args.eval_images.as_deref().unwrap_or(&args.train.images);
    let (_, eval_images) = load_images(eval_images_spec)?;
    let eval_label_spec = args
        .eval_labels
        .as_deref()
        .or(label_spec)
        .ok_or_else(|| CliError::Usage("sweep needs --labels or --eval-labels".into()))?;
    let eval_labels = load_label_fields(eval_label_spec, eval_images.len())?;

    let mut rows = Vec::with_capacity(tokens.len());
    for token in &tokens {
        let mut cfg = config_from(&args.train);
        let mut train_count = all_images.len();
        match args.param {
            SweepParam::Gamma => {
                cfg.gamma = token.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("gamma value '{token}' is not a number"))
                })?;
            }
            SweepParam::K => {
                cfg.filter_count = token.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("k value '{token}' is not a positive integer"))
                })?;
            }
            SweepParam::N => {
                train_count = token.parse::<usize>().map_err(|_| {
                    CliError::Usage(format!("n value '{token}' is not a positive integer"))
                })?;
                if train_count == 0 || train_count > all_images.len() {
                    return Err(CliError::Usage(format!(
                        "n={train_count} outside 1..={}",
                        all_images.len()
                    )));
                }
            }
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

        let started = Instant::now();
        let images = &all_images[..train_count];
        let masks: Vec<Image2D> =
            images.iter().map(|x| Image2D::ones(x.height(), x.width())).collect();
        let labels: Vec<LabelField> = if cfg.gamma > GAMMA_ACTIVE_EPS {
            let spec = label_spec.ok_or_else(|| {
                CliError::Usage("--labels is required when gamma > 0".into())
            })?;
            let mut fields = load_label_fields(spec, all_images.len())?;
            fields.truncate(train_count);
            fields
        } else {
            Vec::new()
        };
        let outcome = fit(images, &masks, &labels, &cfg).map_err(ToolError::from)?;
        let model = outcome.model;

        let budget = CodingBudget::for_model(&model, Some(args.iters), None);
        let eval =
            evaluate_classification(&model, &eval_images, &eval_labels, true, cfg.seed, &budget)?;
        let mut psnr_sum = 0.0;
        for img in &eval_images {
            let (v, _) = reconstruction_psnr(&model, img, &budget)?;
            psnr_sum += v;
        }
        rows.push(SweepRow {
            param_value: token.clone(),
            ap: eval.pooled_ap,
            psnr: psnr_sum / eval_images.len() as f64,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }
    write_bytes(&sweep_csv(&rows), &args.out)?;
    println!("sweep written to {}", args.out.display());
    Ok(())
}
