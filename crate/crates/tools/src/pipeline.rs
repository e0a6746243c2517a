//! Model-driven operations shared by the CLI subcommands: coding an
//! image against a trained dictionary, reconstruction and its PSNR,
//! inpainting with dropout masks, and pixel-classification evaluation.

use std::path::Path;

use scsc_core::admm::{solve_coding, AdmmOptions};
use scsc_core::classifier::{
    center_positives, predict_scores, sample_balanced, train_logistic, ClassifierParams,
    GdConfig, LabelField, SampleFeatures, SampleSet,
};
use scsc_core::metrics::{average_precision, psnr, RankedScores};
use scsc_core::spectral::{boundary_mask, crop_valid, embed_canvas, reconstruct};
use scsc_core::trainer::TrainedModel;
use scsc_core::{Image2D, SparseMapStack};

use crate::error::{ToolError, ToolResult};
use crate::mask::make_dropout_mask;
use crate::model::load_model;

/// ADMM budget for standalone (non-training) coding solves.
#[derive(Debug, Clone, Copy)]
pub struct CodingBudget {
    pub iters: usize,
    pub tol: f64,
}

impl CodingBudget {
    pub fn for_model(model: &TrainedModel, iters: Option<usize>, tol: Option<f64>) -> Self {
        Self { iters: iters.unwrap_or(200), tol: tol.unwrap_or(model.config.tol) }
    }

    fn options(&self, model: &TrainedModel) -> AdmmOptions {
        AdmmOptions { rho: model.config.rho, max_iter: self.iters, tol: self.tol }
    }
}

pub fn load_model_checked(path: &Path) -> ToolResult<TrainedModel> {
    load_model(path)
}

/// Infers the sparse maps of `img` under `model`'s dictionary. The image
/// is embedded into its working canvas; `observed` (image-sized, 1 =
/// observed) gates pixels out of the data term on top of the boundary
/// ring.
pub fn code_image(
    model: &TrainedModel,
    img: &Image2D,
    observed: Option<&Image2D>,
    budget: &CodingBudget,
) -> ToolResult<SparseMapStack> {
    let side = model.bank.side();
    let canvas = embed_canvas(img, side);
    let mask = match observed {
        Some(m) => {
            if !m.same_dims(img) {
                return Err(ToolError::Data(
                    "observation mask does not match the image".into(),
                ));
            }
            embed_canvas(m, side)
        }
        None => boundary_mask(img.height(), img.width(), side),
    };
    let sol = solve_coding(
        &canvas,
        &mask,
        &model.bank,
        model.config.beta,
        &budget.options(model),
        None,
    )?;
    Ok(sol.maps)
}

/// Reconstruction cropped back to the original image size.
pub fn reconstruct_valid(
    model: &TrainedModel,
    maps: &SparseMapStack,
    height: usize,
    width: usize,
) -> ToolResult<Image2D> {
    let canvas = reconstruct(&model.bank, maps)?;
    Ok(crop_valid(&canvas, height, width)?)
}

/// Codes and reconstructs `img`, returning the PSNR over the valid
/// region (peak 1) and the reconstruction itself.
pub fn reconstruction_psnr(
    model: &TrainedModel,
    img: &Image2D,
    budget: &CodingBudget,
) -> ToolResult<(f64, Image2D)> {
    let maps = code_image(model, img, None, budget)?;
    let recon = reconstruct_valid(model, &maps, img.height(), img.width())?;
    let region = Image2D::ones(img.height(), img.width());
    let value = psnr(img, &recon, &region, 1.0)?;
    Ok((value, recon))
}

/// Codes `img` with `fraction` of its pixels dropped (seeded), then
/// reconstructs and scores against the complete original over the full
/// valid region.
pub fn inpaint_image(
    model: &TrainedModel,
    img: &Image2D,
    fraction: f64,
    seed: u64,
    budget: &CodingBudget,
) -> ToolResult<(f64, Image2D)> {
    let dropout = make_dropout_mask(img.height(), img.width(), fraction, seed)?;
    let maps = code_image(model, img, Some(&dropout), budget)?;
    let recon = reconstruct_valid(model, &maps, img.height(), img.width())?;
    let region = Image2D::ones(img.height(), img.width());
    let value = psnr(img, &recon, &region, 1.0)?;
    Ok((value, recon))
}

/// Pixel-classification evaluation across a labelled image set.
pub struct EvalOutcome {
    /// AP over all labelled pixels pooled across images.
    pub pooled_ap: f64,
    /// Mean of per-image APs (images with at least one positive).
    pub per_image_ap: f64,
    /// Valid-region score image per input.
    pub scores: Vec<Image2D>,
    /// The classifier that produced the scores.
    pub theta: ClassifierParams,
}

/// Codes every image, optionally retrains a fresh logistic classifier on
/// the balanced samples of the provided labels, and ranks all labelled
/// pixels by their predicted scores.
pub fn evaluate_classification(
    model: &TrainedModel,
    images: &[Image2D],
    labels: &[LabelField],
    retrain: bool,
    seed: u64,
    budget: &CodingBudget,
) -> ToolResult<EvalOutcome> {
    if images.len() != labels.len() {
        return Err(ToolError::Data(format!(
            "{} label fields for {} images",
            labels.len(),
            images.len()
        )));
    }
    if images.is_empty() {
        return Err(ToolError::Data("evaluation needs at least one image".into()));
    }
    let side = model.bank.side();
    let mut maps = Vec::with_capacity(images.len());
    for img in images {
        maps.push(code_image(model, img, None, budget)?);
    }

    let theta = if retrain {
        let mut features = Vec::new();
        let mut pooled_labels = Vec::new();
        for ((img, field), z) in images.iter().zip(labels).zip(&maps) {
            if field.height() != img.height() || field.width() != img.width() {
                return Err(ToolError::Data("label field does not match its image".into()));
            }
            let embedded = field.embed(z.height(), z.width())?;
            let centered = center_positives(&embedded);
            let samples =
                sample_balanced(&centered, seed, model.config.sample_cap)?;
            features.push(SampleFeatures::from_maps(z, &samples)?);
            pooled_labels.extend_from_slice(samples.labels());
        }
        let joined = SampleFeatures::concat(&features)?;
        let total = pooled_labels.len();
        let pooled = SampleSet::new((0..total).collect(), pooled_labels, total.max(1))?;
        train_logistic(&joined, &pooled, model.config.alpha, &GdConfig::default())?.params
    } else {
        model.theta.clone()
    };

    let mut scores = Vec::with_capacity(images.len());
    let mut pooled_entries: Vec<(f64, i8)> = Vec::new();
    let mut per_image_aps: Vec<f64> = Vec::new();
    for (img, (field, z)) in images.iter().zip(labels.iter().zip(&maps)) {
        let score_canvas = predict_scores(&theta, z)?;
        let score = crop_valid(&score_canvas, img.height(), img.width())?;
        let mut entries = Vec::new();
        for r in 0..img.height() {
            for c in 0..img.width() {
                let l = field.get(r, c);
                if l != 0 {
                    entries.push((score.get(r, c), l));
                }
            }
        }
        if entries.iter().any(|&(_, l)| l == 1) {
            per_image_aps.push(average_precision(&RankedScores::new(entries.clone())?));
        }
        pooled_entries.extend(entries);
        scores.push(score);
    }
    let pooled_ap = average_precision(&RankedScores::new(pooled_entries)?);
    if per_image_aps.is_empty() {
        return Err(ToolError::Data("no image carries a positive label".into()));
    }
    let per_image_ap = per_image_aps.iter().sum::<f64>() / per_image_aps.len() as f64;
    let _ = side;
    Ok(EvalOutcome { pooled_ap, per_image_ap, scores, theta })
}
