//! Coordinate descent tying the three subproblems together: per-image
//! (supervised) coding, shared dictionary learning, and classifier
//! fitting, with full-objective bookkeeping per outer iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admm::{
    solve_coding, solve_coding_supervised, solve_learning, AdmmOptions, AdmmReport, AdmmState,
};
use crate::classifier::{
    center_positives, sample_balanced, train_logistic, ClassifierParams, GdConfig, LabelField,
    SampleFeatures, SampleSet,
};
use crate::error::{Error, Result};
use crate::image::{FilterBank, Image2D, SparseMapStack};
use crate::math;
use crate::proximal::ProxConfig;
use crate::spectral;

/// Below this value the classification tradeoff is treated as zero: the
/// term it would add to the objective sits under f64 round-off of the
/// data term, and dropping the block keeps the training trajectory
/// continuous at gamma = 0.
pub const GAMMA_ACTIVE_EPS: f64 = 1e-10;

/// Every knob of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sparsity tradeoff.
    pub beta: f64,
    /// Classification tradeoff.
    pub gamma: f64,
    /// Classifier L2 regularization.
    pub alpha: f64,
    /// ADMM penalty.
    pub rho: f64,
    pub filter_count: usize,
    pub filter_side: usize,
    pub outer_iters: usize,
    /// ADMM iterations per subproblem invocation.
    pub inner_iters: usize,
    /// ADMM relative residual tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Per-class cap for balanced label sampling.
    pub sample_cap: usize,
    /// Use the direct per-bin supervised solve (needs every pixel
    /// labelled) instead of preconditioned CG.
    pub exact_fourier_solve: bool,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            gamma: 0.0,
            alpha: 1.0,
            rho: 1.0,
            filter_count: 8,
            filter_side: 11,
            outer_iters: 15,
            inner_iters: 10,
            tol: 1e-4,
            seed: 0,
            sample_cap: 10_000,
            exact_fourier_solve: false,
            newton_tol: 1e-10,
            newton_max_iter: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.gamma >= 0.0) || !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(
                "beta, gamma, and alpha must be nonnegative".into(),
            ));
        }
        if !(self.rho > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("rho and tol must be positive".into()));
        }
        if self.filter_count == 0
            || self.filter_side == 0
            || self.outer_iters == 0
            || self.inner_iters == 0
            || self.sample_cap == 0
        {
            return Err(Error::InvalidParameter(
                "counts and iteration budgets must be at least 1".into(),
            ));
        }
        self.newton().validate()
    }

    pub fn admm_options(&self) -> AdmmOptions {
        AdmmOptions { rho: self.rho, max_iter: self.inner_iters, tol: self.tol }
    }

    pub fn newton(&self) -> ProxConfig {
        ProxConfig {
            rho: self.rho,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
        }
    }

    /// True when the classification term participates in training.
    pub fn is_supervised(&self) -> bool {
        self.gamma > GAMMA_ACTIVE_EPS
    }
}

/// The trained dictionary and classifier with the settings that produced
/// them. Sparse maps are per-image and returned separately.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub bank: FilterBank,
    pub theta: ClassifierParams,
    pub config: SolverConfig,
}

/// One evaluation of the full training objective, split into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub total: f64,
    pub reconstruction: f64,
    pub sparsity: f64,
    pub classification: f64,
    pub regularizer: f64,
}

/// Objective values after each subproblem update of one outer iteration,
/// plus the subproblem convergence records.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub after_coding: ObjectiveTerms,
    pub after_learning: ObjectiveTerms,
    pub after_classifier: ObjectiveTerms,
    pub coding_reports: Vec<AdmmReport>,
    pub learning_report: AdmmReport,
    pub classifier_converged: bool,
}

/// Per-outer-iteration objective history of a training run.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub iterations: Vec<IterationRecord>,
}

impl IterationTrace {
    /// End-of-iteration objective values, one per outer iteration.
    pub fn totals(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.after_classifier.total).collect()
    }
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: TrainedModel,
    pub maps: Vec<SparseMapStack>,
    pub trace: IterationTrace,
    /// The balanced label samples used for supervision (canvas indices),
    /// one per image; empty when training ran unsupervised.
    pub samples: Vec<SampleSet>,
}

/// K filters drawn i.i.d. uniform(-1, 1) from the seeded generator, each
/// scaled to unit L2 norm.
pub fn init_dictionary(cfg: &SolverConfig) -> Result<FilterBank> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cell = cfg.filter_side * cfg.filter_side;
    let mut data = Vec::with_capacity(cfg.filter_count * cell);
    for _ in 0..cfg.filter_count {
        let mut f: Vec<f64> = (0..cell).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = math::sqrt(f.iter().map(|v| v * v).sum());
        if norm > 0.0 {
            for v in f.iter_mut() {
                *v /= norm;
            }
        }
        data.extend(f);
    }
    FilterBank::new(cfg.filter_count, cfg.filter_side, data)
}

/// The full training objective
/// `0.5 sum_n ||x_n - M_n sum_k d_k * z_nk||^2 + beta sum ||z||_1
///  + gamma (sum_n C_n + alpha ||theta||^2)`,
/// evaluated on canvas-sized inputs. Pass an empty `samples` slice to
/// drop the classification term.
pub fn evaluate_objective(
    images: &[Image2D],
    masks: &[Image2D],
    maps: &[SparseMapStack],
    bank: &FilterBank,
    theta: &ClassifierParams,
    samples: &[SampleSet],
    cfg: &SolverConfig,
) -> Result<ObjectiveTerms> {
    if images.len() != masks.len() || images.len() != maps.len() {
        return Err(Error::InvalidDimension(
            "objective needs matching images, masks, and maps".into(),
        ));
    }
    if !samples.is_empty() && samples.len() != images.len() {
        return Err(Error::InvalidDimension(
            "sample sets must be empty or one per image".into(),
        ));
    }
    let mut reconstruction = 0.0;
    let mut sparsity = 0.0;
    let mut classification = 0.0;
    for (n, ((x, mask), z)) in images.iter().zip(masks).zip(maps).enumerate() {
        let recon = spectral::reconstruct(bank, z)?;
        if !x.same_dims(&recon) || !x.same_dims(mask) {
            return Err(Error::InvalidDimension("objective input dimensions differ".into()));
        }
        let mut acc = 0.0;
        for ((&xv, &mv), &rv) in
            x.as_slice().iter().zip(mask.as_slice()).zip(recon.as_slice())
        {
            if mv != 0.0 {
                let e = xv - rv;
                acc += e * e;
            }
        }
        reconstruction += 0.5 * acc;
        sparsity += cfg.beta * z.l1_norm();
        if let Some(set) = samples.get(n) {
            for (&idx, &label) in set.indices().iter().zip(set.labels()) {
                let mut margin = theta.bias;
                for (k, &w) in theta.weights.iter().enumerate() {
                    margin += w * z.value_at(k, idx);
                }
                classification += math::softplus(-(label as f64) * margin);
            }
        }
    }
    classification *= cfg.gamma;
    let regularizer = cfg.gamma * cfg.alpha * theta.squared_norm();
    let total = reconstruction + sparsity + classification + regularizer;
    Ok(ObjectiveTerms { total, reconstruction, sparsity, classification, regularizer })
}

fn embed_inputs(
    images: &[Image2D],
    masks: &[Image2D],
    side: usize,
) -> Result<(Vec<Image2D>, Vec<Image2D>)> {
    let (h, w) = (images[0].height(), images[0].width());
    let mut canvases = Vec::with_capacity(images.len());
    let mut canvas_masks = Vec::with_capacity(images.len());
    for (x, mask) in images.iter().zip(masks) {
        if x.height() != h || x.width() != w {
            return Err(Error::InvalidDimension(
                "all training images must share dimensions".into(),
            ));
        }
        if !x.same_dims(mask) {
            return Err(Error::InvalidDimension("mask does not match its image".into()));
        }
        if !mask.is_binary() {
            return Err(Error::InvalidParameter("observation masks must be 0/1 valued".into()));
        }
        canvases.push(spectral::embed_canvas(x, side));
        // Ring pixels embed as zeros, gating them out of the data term.
        canvas_masks.push(spectral::embed_canvas(mask, side));
    }
    Ok((canvases, canvas_masks))
}

/// Pools per-image sample features and labels into one training set for
/// the classifier subproblem.
fn pooled_features(
    maps: &[SparseMapStack],
    samples: &[SampleSet],
) -> Result<(SampleFeatures, SampleSet)> {
    let parts: Vec<SampleFeatures> = maps
        .iter()
        .zip(samples)
        .map(|(z, s)| SampleFeatures::from_maps(z, s))
        .collect::<Result<_>>()?;
    let features = SampleFeatures::concat(&parts)?;
    let mut labels = Vec::with_capacity(features.count());
    for s in samples {
        labels.extend_from_slice(s.labels());
    }
    let total = labels.len();
    let pooled = SampleSet::new((0..total).collect(), labels, total.max(1))?;
    Ok((features, pooled))
}

/// Runs the coordinate descent: supervised coding per image, dictionary
/// learning across images, classifier fitting on the pooled samples, for
/// `cfg.outer_iters` rounds from a seeded random dictionary and zero
/// maps, duals, and classifier.
///
/// `images` and `masks` are raw rasters; the trainer embeds them into the
/// working canvas and gates the padding ring out of the data term.
/// `labels` may be empty only when the classification tradeoff is zero.
pub fn fit(
    images: &[Image2D],
    masks: &[Image2D],
    labels: &[LabelField],
    cfg: &SolverConfig,
) -> Result<FitOutcome> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::InvalidDimension("training needs at least one image".into()));
    }
    if images.len() != masks.len() {
        return Err(Error::InvalidDimension("one mask per image required".into()));
    }
    let supervised = cfg.is_supervised();
    if supervised && labels.len() != images.len() {
        return Err(Error::InvalidParameter(
            "supervised training needs one label field per image".into(),
        ));
    }

    let (canvases, canvas_masks) = embed_inputs(images, masks, cfg.filter_side)?;
    let (ch, cw) = (canvases[0].height(), canvases[0].width());

    let mut samples: Vec<SampleSet> = Vec::new();
    if supervised {
        for (n, field) in labels.iter().enumerate() {
            if field.height() != images[n].height() || field.width() != images[n].width() {
                return Err(Error::InvalidDimension(format!(
                    "label field {n} does not match its image"
                )));
            }
            let embedded = field.embed(ch, cw)?;
            let centered = center_positives(&embedded);
            samples.push(sample_balanced(
                &centered,
                cfg.seed.wrapping_add(n as u64),
                cfg.sample_cap,
            )?);
        }
    }

    let mut bank = init_dictionary(cfg)?;
    let mut maps: Vec<SparseMapStack> =
        images.iter().map(|_| SparseMapStack::zeros(cfg.filter_count, ch, cw)).collect();
    let mut theta = ClassifierParams::zeros(cfg.filter_count);
    let mut coding_states: Vec<Option<AdmmState>> = vec![None; images.len()];
    let mut learning_state: Option<AdmmState> = None;
    let opts = cfg.admm_options();
    let newton = cfg.newton();
    let gd = GdConfig::default();

    let mut trace = IterationTrace::default();
    for _outer in 0..cfg.outer_iters {
        let mut coding_reports = Vec::with_capacity(images.len());
        for n in 0..images.len() {
            let warm = coding_states[n].take();
            let sol = if supervised {
                solve_coding_supervised(
                    &canvases[n],
                    &canvas_masks[n],
                    &bank,
                    &theta,
                    &samples[n],
                    cfg.beta,
                    cfg.gamma,
                    &newton,
                    cfg.exact_fourier_solve,
                    &opts,
                    warm,
                )?
            } else {
                solve_coding(&canvases[n], &canvas_masks[n], &bank, cfg.beta, &opts, warm)?
            };
            maps[n] = sol.maps;
            coding_states[n] = Some(sol.state);
            coding_reports.push(sol.report);
        }
        let after_coding =
            evaluate_objective(&canvases, &canvas_masks, &maps, &bank, &theta, &samples, cfg)?;

        let learn = solve_learning(
            &canvases,
            &canvas_masks,
            &maps,
            &bank,
            &opts,
            learning_state.take(),
        )?;
        bank = learn.bank;
        learning_state = Some(learn.state);
        let after_learning =
            evaluate_objective(&canvases, &canvas_masks, &maps, &bank, &theta, &samples, cfg)?;

        let mut classifier_converged = true;
        let after_classifier = if supervised {
            let (features, pooled) = pooled_features(&maps, &samples)?;
            let trained = train_logistic(&features, &pooled, cfg.alpha, &gd)?;
            theta = trained.params;
            classifier_converged = trained.converged;
            evaluate_objective(&canvases, &canvas_masks, &maps, &bank, &theta, &samples, cfg)?
        } else {
            after_learning
        };

        trace.iterations.push(IterationRecord {
            after_coding,
            after_learning,
            after_classifier,
            coding_reports,
            learning_report: learn.report,
            classifier_converged,
        });
    }

    Ok(FitOutcome {
        model: TrainedModel { bank, theta, config: cfg.clone() },
        maps,
        trace,
        samples,
    })
}
