//! Scaled ADMM for the three convex subproblems: sparse coding, supervised
//! sparse coding, and dictionary learning.
//!
//! Every subproblem has the shape `min_y sum_i f_i(K_i y)` with `K` a
//! stack of an image-forming convolution block, an identity block, and
//! optionally classifier rows. One loop serves them all: a Fourier-domain
//! least-squares update of `y`, per-block proximal updates of the
//! auxiliary variables, and a scaled dual ascent step.
//!
//! The least-squares step is solved exactly per frequency bin. With
//! classifier rows present the per-bin structure only survives when every
//! pixel is labelled; the partially labelled case runs preconditioned
//! conjugate gradient with the all-labelled per-bin inverse as the
//! preconditioner, which reproduces the direct solve when the label set
//! covers the canvas.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::{ClassifierParams, SampleSet};
use crate::error::{Error, Result};
use crate::image::{FilterBank, Image2D, SparseMapStack};
use crate::math;
use crate::proximal::{self, ProxConfig};
use crate::spectral::fft::{C64, CanvasFft};
use crate::spectral::{self, filter_spectra};

mod fourier;

pub use fourier::woodbury_block_inverse;
use fourier::{pcg, solve_identity_plus_gram};

/// Loop settings: penalty, iteration budget, and the relative residual
/// tolerance checked against both primal and dual residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self { rho: 1.0, max_iter: 100, tol: 1e-4 }
    }
}

impl AdmmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-invocation convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmReport {
    pub iterations: usize,
    pub primal_residual: Vec<f64>,
    pub dual_residual: Vec<f64>,
    pub converged: bool,
}

/// Primal, auxiliary, and scaled dual iterates, one slot per operator
/// block. Kept between invocations for warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// Current primal estimate (`filter_count` canvas maps, flat).
    pub y: Vec<f64>,
    pub u_conv: Vec<Vec<f64>>,
    pub lambda_conv: Vec<Vec<f64>>,
    pub u_identity: Vec<f64>,
    pub lambda_identity: Vec<f64>,
    pub u_classifier: Vec<f64>,
    pub lambda_classifier: Vec<f64>,
    /// Total iterations accumulated over all invocations.
    pub iter: usize,
}

impl AdmmState {
    /// Cold start: everything zero, dimensioned for `op`.
    pub fn zeros(op: &StackedOperator) -> Self {
        let d = op.canvas_len();
        let labelled = op.labeled_count();
        Self {
            y: vec![0.0; op.filter_count * d],
            u_conv: vec![vec![0.0; d]; op.conv_outputs],
            lambda_conv: vec![vec![0.0; d]; op.conv_outputs],
            u_identity: vec![0.0; op.filter_count * d],
            lambda_identity: vec![0.0; op.filter_count * d],
            u_classifier: vec![0.0; labelled],
            lambda_classifier: vec![0.0; labelled],
            iter: 0,
        }
    }

    fn check_shape(&self, op: &StackedOperator) -> Result<()> {
        let d = op.canvas_len();
        let ok = self.y.len() == op.filter_count * d
            && self.u_conv.len() == op.conv_outputs
            && self.lambda_conv.len() == op.conv_outputs
            && self.u_conv.iter().all(|u| u.len() == d)
            && self.lambda_conv.iter().all(|l| l.len() == d)
            && self.u_identity.len() == op.filter_count * d
            && self.lambda_identity.len() == op.filter_count * d
            && self.u_classifier.len() == op.labeled_count()
            && self.lambda_classifier.len() == op.labeled_count();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDimension(
                "warm-start state does not match the operator layout".into(),
            ))
        }
    }
}

struct ClassifierRows {
    weights: Vec<f64>,
    indices: Vec<usize>,
}

/// The stacked linear operator `K`: one convolution block (a dictionary
/// acting on maps, or fixed maps acting on a padded filter stack), one
/// identity block, and at most one block of classifier rows.
pub struct StackedOperator {
    filter_count: usize,
    height: usize,
    width: usize,
    conv_outputs: usize,
    /// Spectra of the convolution kernels, `[(out, filter), bin]`.
    conv_spectra: Vec<C64>,
    classifier: Option<ClassifierRows>,
    /// Per-bin `K x K` inverses of the all-labelled normal matrix; the
    /// exact solve and the CG preconditioner share them.
    bin_inverses: Option<Vec<C64>>,
    exact_fourier: bool,
    fft: CanvasFft,
}

impl StackedOperator {
    /// Coding operator `[D' I']'`: the dictionary maps a coefficient
    /// stack to one image.
    pub fn for_coding(bank: &FilterBank, height: usize, width: usize) -> Result<Self> {
        if bank.side() > height || bank.side() > width {
            return Err(Error::InvalidDimension(format!(
                "filter side {} exceeds the {height}x{width} canvas",
                bank.side()
            )));
        }
        let fft = CanvasFft::new(height, width);
        let conv_spectra = filter_spectra(bank, &fft)?;
        Ok(Self {
            filter_count: bank.count(),
            height,
            width,
            conv_outputs: 1,
            conv_spectra,
            classifier: None,
            bin_inverses: None,
            exact_fourier: false,
            fft,
        })
    }

    /// Supervised coding operator `[D' I' W']'` with one classifier row
    /// per labelled pixel. `exact_fourier` requests the direct per-bin
    /// solve, valid only when the samples cover every canvas pixel.
    pub fn for_supervised_coding(
        bank: &FilterBank,
        height: usize,
        width: usize,
        theta: &ClassifierParams,
        samples: &SampleSet,
        exact_fourier: bool,
    ) -> Result<Self> {
        let mut op = Self::for_coding(bank, height, width)?;
        if theta.weights.len() != bank.count() {
            return Err(Error::InvalidDimension(format!(
                "classifier has {} weights for {} filters",
                theta.weights.len(),
                bank.count()
            )));
        }
        let d = op.canvas_len();
        if samples.indices().iter().any(|&i| i >= d) {
            return Err(Error::InvalidDimension(
                "sample index outside the canvas".into(),
            ));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "supervised operator needs a nonempty sample set".into(),
            ));
        }
        if exact_fourier && samples.len() != d {
            return Err(Error::InvalidParameter(format!(
                "exact Fourier solve needs every pixel labelled ({} of {d})",
                samples.len()
            )));
        }
        let k = op.filter_count;
        let mut inverses = Vec::with_capacity(d * k * k);
        let mut dconj = vec![C64::new(0.0, 0.0); k];
        for bin in 0..d {
            for (ki, slot) in dconj.iter_mut().enumerate() {
                *slot = op.conv_spectra[ki * d + bin].conj();
            }
            inverses.extend(woodbury_block_inverse(&dconj, &theta.weights));
        }
        op.classifier = Some(ClassifierRows {
            weights: theta.weights.clone(),
            indices: samples.indices().to_vec(),
        });
        op.bin_inverses = Some(inverses);
        op.exact_fourier = exact_fourier;
        Ok(op)
    }

    /// Learning operator `[Z' I']'`: fixed sparse maps turn a stack of
    /// padded filters into one image per training image.
    pub fn for_learning(maps: &[SparseMapStack]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::InvalidDimension("learning needs at least one image".into()))?;
        let (k, height, width) = (first.count(), first.height(), first.width());
        if maps.iter().any(|m| m.count() != k || m.height() != height || m.width() != width) {
            return Err(Error::InvalidDimension(
                "sparse map stacks disagree on dimensions".into(),
            ));
        }
        let fft = CanvasFft::new(height, width);
        let d = height * width;
        let mut conv_spectra = Vec::with_capacity(maps.len() * k * d);
        for stack in maps {
            for ki in 0..k {
                conv_spectra.extend(fft.forward_real(stack.map(ki)));
            }
        }
        Ok(Self {
            filter_count: k,
            height,
            width,
            conv_outputs: maps.len(),
            conv_spectra,
            classifier: None,
            bin_inverses: None,
            exact_fourier: false,
            fft,
        })
    }

    pub fn filter_count(&self) -> usize {
        self.filter_count
    }

    pub fn canvas_height(&self) -> usize {
        self.height
    }

    pub fn canvas_width(&self) -> usize {
        self.width
    }

    pub fn canvas_len(&self) -> usize {
        self.height * self.width
    }

    pub fn conv_outputs(&self) -> usize {
        self.conv_outputs
    }

    pub fn has_classifier(&self) -> bool {
        self.classifier.is_some()
    }

    pub fn labeled_count(&self) -> usize {
        self.classifier.as_ref().map_or(0, |c| c.indices.len())
    }

    fn map_spectra(&self, y: &[f64]) -> Vec<C64> {
        let d = self.canvas_len();
        let mut out = Vec::with_capacity(self.filter_count * d);
        for k in 0..self.filter_count {
            out.extend(self.fft.forward_real(&y[k * d..(k + 1) * d]));
        }
        out
    }

    fn conv_from_spectra(&self, yspec: &[C64]) -> Vec<Vec<f64>> {
        let d = self.canvas_len();
        let mut outputs = Vec::with_capacity(self.conv_outputs);
        let mut acc = vec![C64::new(0.0, 0.0); d];
        for i in 0..self.conv_outputs {
            for v in acc.iter_mut() {
                *v = C64::new(0.0, 0.0);
            }
            for k in 0..self.filter_count {
                let kernel = &self.conv_spectra[(i * self.filter_count + k) * d..];
                let ys = &yspec[k * d..(k + 1) * d];
                for (a, (kv, yv)) in acc.iter_mut().zip(kernel.iter().zip(ys.iter())) {
                    *a += kv * yv;
                }
            }
            outputs.push(self.fft.inverse_real(&acc));
        }
        outputs
    }

    /// Applies the convolution block: one image per output.
    pub fn conv_apply(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.conv_from_spectra(&self.map_spectra(y))
    }

    /// Applies the classifier rows: per labelled pixel, the weighted sum
    /// of map values at that pixel.
    pub fn classifier_apply(&self, y: &[f64]) -> Vec<f64> {
        let Some(cls) = &self.classifier else {
            return Vec::new();
        };
        let d = self.canvas_len();
        cls.indices
            .iter()
            .map(|&idx| {
                cls.weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * y[k * d + idx])
                    .sum()
            })
            .collect()
    }

    /// Spectra of the adjoint applied to conv-block targets plus the
    /// identity target: the Fourier-domain right-hand side.
    fn rhs_spectra(&self, conv_targets: &[Vec<f64>], identity_target: &[f64]) -> Vec<C64> {
        let d = self.canvas_len();
        let mut rhs = Vec::with_capacity(self.filter_count * d);
        for k in 0..self.filter_count {
            rhs.extend(self.fft.forward_real(&identity_target[k * d..(k + 1) * d]));
        }
        for (i, target) in conv_targets.iter().enumerate() {
            let tspec = self.fft.forward_real(target);
            for k in 0..self.filter_count {
                let kernel = &self.conv_spectra[(i * self.filter_count + k) * d..];
                let slot = &mut rhs[k * d..(k + 1) * d];
                for (r, (kv, tv)) in slot.iter_mut().zip(kernel.iter().zip(tspec.iter())) {
                    *r += kv.conj() * tv;
                }
            }
        }
        rhs
    }
}

/// Per-block least-squares targets `u_i - lambda_i`.
pub struct BlockTargets<'a> {
    pub conv: &'a [Vec<f64>],
    pub identity: &'a [f64],
    pub classifier: Option<&'a [f64]>,
}

/// Exact minimizer of `sum_i ||K_i y - t_i||^2`, solved per frequency bin
/// (with conjugate gradient taking over when partial classifier rows
/// break the per-bin structure).
pub fn solve_y_fourier(op: &StackedOperator, targets: &BlockTargets) -> Result<Vec<f64>> {
    let d = op.canvas_len();
    let k = op.filter_count;
    if targets.conv.len() != op.conv_outputs
        || targets.conv.iter().any(|t| t.len() != d)
        || targets.identity.len() != k * d
    {
        return Err(Error::InvalidDimension("targets do not match the operator".into()));
    }
    match (&op.classifier, targets.classifier) {
        (None, None) => {}
        (Some(cls), Some(t)) if t.len() == cls.indices.len() => {}
        _ => {
            return Err(Error::InvalidDimension(
                "classifier target does not match the operator".into(),
            ))
        }
    }

    if let Some(cls) = &op.classifier {
        let t_cls = targets.classifier.expect("validated above");
        if op.exact_fourier {
            // All pixels labelled: fold W't into the spatial right-hand
            // side, then invert per bin with the precomputed inverses.
            let mut identity_plus = targets.identity.to_vec();
            for (k_i, &w) in cls.weights.iter().enumerate() {
                let slot = &mut identity_plus[k_i * d..(k_i + 1) * d];
                for (s, &idx) in cls.indices.iter().enumerate() {
                    slot[idx] += w * t_cls[s];
                }
            }
            let mut rhs = op.rhs_spectra(targets.conv, &identity_plus);
            let inverses = op.bin_inverses.as_ref().expect("built with classifier");
            let mut scratch = vec![C64::new(0.0, 0.0); k];
            for bin in 0..d {
                let binv = &inverses[bin * k * k..(bin + 1) * k * k];
                for (i, slot) in scratch.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..k {
                        acc += binv[i * k + j] * rhs[j * d + bin];
                    }
                    *slot = acc;
                }
                for (i, &v) in scratch.iter().enumerate() {
                    rhs[i * d + bin] = v;
                }
            }
            return spectra_to_maps(op, &rhs);
        }
        // Partial labels: preconditioned CG on the spatial normal system.
        let mut rhs = vec![0.0; k * d];
        {
            let spec = op.rhs_spectra(targets.conv, targets.identity);
            for ki in 0..k {
                let slice = op.fft.inverse_real(&spec[ki * d..(ki + 1) * d]);
                rhs[ki * d..(ki + 1) * d].copy_from_slice(&slice);
            }
            for (k_i, &w) in cls.weights.iter().enumerate() {
                let slot = &mut rhs[k_i * d..(k_i + 1) * d];
                for (s, &idx) in cls.indices.iter().enumerate() {
                    slot[idx] += w * t_cls[s];
                }
            }
        }
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut spec = op.map_spectra(v);
            // Per bin: (I + c c^H) v_hat with c the conjugate kernel column.
            let mut column = vec![C64::new(0.0, 0.0); k];
            for bin in 0..d {
                let mut dot = C64::new(0.0, 0.0);
                for (ki, slot) in column.iter_mut().enumerate() {
                    let c = op.conv_spectra[ki * d + bin].conj();
                    dot += c.conj() * spec[ki * d + bin];
                    *slot = c;
                }
                for (ki, c) in column.iter().enumerate() {
                    spec[ki * d + bin] += c * dot;
                }
            }
            let mut out = vec![0.0; k * d];
            for ki in 0..k {
                let slice = op.fft.inverse_real(&spec[ki * d..(ki + 1) * d]);
                out[ki * d..(ki + 1) * d].copy_from_slice(&slice);
            }
            for (s, &idx) in cls.indices.iter().enumerate() {
                let mut score = 0.0;
                for (ki, &w) in cls.weights.iter().enumerate() {
                    score += w * v[ki * d + idx];
                }
                let _ = s;
                for (ki, &w) in cls.weights.iter().enumerate() {
                    out[ki * d + idx] += w * score;
                }
            }
            out
        };
        let inverses = op.bin_inverses.as_ref().expect("built with classifier");
        let precondition = |v: &[f64]| -> Vec<f64> {
            let spec = op.map_spectra(v);
            let mut solved = vec![C64::new(0.0, 0.0); k * d];
            for bin in 0..d {
                let binv = &inverses[bin * k * k..(bin + 1) * k * k];
                for i in 0..k {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..k {
                        acc += binv[i * k + j] * spec[j * d + bin];
                    }
                    solved[i * d + bin] = acc;
                }
            }
            let mut out = vec![0.0; k * d];
            for ki in 0..k {
                let slice = op.fft.inverse_real(&solved[ki * d..(ki + 1) * d]);
                out[ki * d..(ki + 1) * d].copy_from_slice(&slice);
            }
            out
        };
        return pcg(apply, precondition, &rhs, 1e-12, 4 * k * d + 100);
    }

    // No classifier: pure per-bin low-rank solves.
    let mut rhs = op.rhs_spectra(targets.conv, targets.identity);
    let n = op.conv_outputs;
    let mut columns = vec![C64::new(0.0, 0.0); k * n];
    let mut bin_rhs = vec![C64::new(0.0, 0.0); k];
    let mut gram = vec![C64::new(0.0, 0.0); n * n];
    let mut beta = vec![C64::new(0.0, 0.0); n];
    for bin in 0..d {
        for i in 0..n {
            for ki in 0..k {
                columns[i * k + ki] = op.conv_spectra[(i * k + ki) * d + bin].conj();
            }
        }
        for ki in 0..k {
            bin_rhs[ki] = rhs[ki * d + bin];
        }
        solve_identity_plus_gram(k, &columns, n, &mut bin_rhs, &mut gram, &mut beta);
        for ki in 0..k {
            rhs[ki * d + bin] = bin_rhs[ki];
        }
    }
    spectra_to_maps(op, &rhs)
}

fn spectra_to_maps(op: &StackedOperator, spec: &[C64]) -> Result<Vec<f64>> {
    let d = op.canvas_len();
    let mut y = vec![0.0; op.filter_count * d];
    for k in 0..op.filter_count {
        let slice = op.fft.inverse_real(&spec[k * d..(k + 1) * d]);
        y[k * d..(k + 1) * d].copy_from_slice(&slice);
    }
    Ok(y)
}

/// The masked quadratic data prox attached to one convolution output.
pub struct DataProx<'a> {
    pub x: &'a Image2D,
    pub mask: &'a Image2D,
}

/// The prox applied to the identity block.
pub enum IdentityProx {
    /// Soft thresholding with threshold `beta / rho` (sparse coding).
    SoftThreshold { beta: f64 },
    /// Support crop plus unit-ball projection (dictionary learning).
    SupportBall { side: usize },
}

/// The logistic prox attached to the classifier rows.
pub struct LogisticProx<'a> {
    pub labels: &'a [i8],
    pub bias: f64,
    pub gamma: f64,
    pub newton: ProxConfig,
}

/// Prox functions aligned with the operator blocks.
pub struct Proxes<'a> {
    pub data: Vec<DataProx<'a>>,
    pub identity: IdentityProx,
    pub logistic: Option<LogisticProx<'a>>,
}

fn validate_proxes(op: &StackedOperator, proxes: &Proxes<'_>) -> Result<()> {
    if proxes.data.len() != op.conv_outputs {
        return Err(Error::InvalidDimension(format!(
            "{} data proxes for {} convolution outputs",
            proxes.data.len(),
            op.conv_outputs
        )));
    }
    for p in &proxes.data {
        if p.x.height() != op.height || p.x.width() != op.width || !p.x.same_dims(p.mask) {
            return Err(Error::InvalidDimension(
                "data prox images do not match the canvas".into(),
            ));
        }
        if !p.mask.is_binary() {
            return Err(Error::InvalidParameter("data prox mask must be 0/1 valued".into()));
        }
    }
    match &proxes.identity {
        IdentityProx::SoftThreshold { beta } => {
            if !(*beta >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "beta must be nonnegative, got {beta}"
                )));
            }
        }
        IdentityProx::SupportBall { side } => {
            if *side == 0 || *side > op.height || *side > op.width {
                return Err(Error::InvalidDimension(format!(
                    "support side {side} does not fit the canvas"
                )));
            }
        }
    }
    match (&op.classifier, &proxes.logistic) {
        (None, None) => {}
        (Some(cls), Some(lp)) => {
            if lp.labels.len() != cls.indices.len() {
                return Err(Error::InvalidDimension(
                    "logistic labels do not match the classifier rows".into(),
                ));
            }
            if !(lp.gamma >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma must be nonnegative, got {}",
                    lp.gamma
                )));
            }
            lp.newton.validate()?;
        }
        _ => {
            return Err(Error::InvalidDimension(
                "logistic prox presence must match the classifier block".into(),
            ))
        }
    }
    Ok(())
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn diff_norm_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs the scaled ADMM iteration until both relative residuals fall
/// below `opts.tol` or the iteration budget is exhausted.
///
/// When `objective` is given, it is evaluated at the initial point and at
/// every primal iterate; the best-scoring iterate becomes the returned
/// primal (and the state's `y`), which makes the subproblem objective at
/// the returned point never worse than at the warm start. Without an
/// objective the last iterate is returned.
///
/// The identity block keeps every per-bin system nonsingular, so the
/// least-squares step cannot fail; non-finite iterates abort with a
/// divergence error.
pub fn admm_solve(
    op: &StackedOperator,
    proxes: &Proxes<'_>,
    init: AdmmState,
    opts: &AdmmOptions,
    objective: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<(Vec<f64>, AdmmState, AdmmReport)> {
    opts.validate()?;
    init.check_shape(op)?;
    validate_proxes(op, proxes)?;

    let d = op.canvas_len();
    let mut state = init;
    let mut best_y = state.y.clone();
    let mut best_val = objective.map(|f| f(&state.y));

    let mut primal_hist = Vec::new();
    let mut dual_hist = Vec::new();
    let mut converged = false;
    let mut iterations = 0usize;

    let mut conv_targets: Vec<Vec<f64>> = vec![vec![0.0; d]; op.conv_outputs];
    let mut identity_target = vec![0.0; op.filter_count * d];
    let mut cls_target = vec![0.0; op.labeled_count()];

    for _ in 0..opts.max_iter {
        // Targets u - lambda.
        for ((t, u), l) in conv_targets
            .iter_mut()
            .zip(state.u_conv.iter())
            .zip(state.lambda_conv.iter())
        {
            for ((tv, &uv), &lv) in t.iter_mut().zip(u.iter()).zip(l.iter()) {
                *tv = uv - lv;
            }
        }
        for ((tv, &uv), &lv) in identity_target
            .iter_mut()
            .zip(state.u_identity.iter())
            .zip(state.lambda_identity.iter())
        {
            *tv = uv - lv;
        }
        for ((tv, &uv), &lv) in cls_target
            .iter_mut()
            .zip(state.u_classifier.iter())
            .zip(state.lambda_classifier.iter())
        {
            *tv = uv - lv;
        }

        let targets = BlockTargets {
            conv: &conv_targets,
            identity: &identity_target,
            classifier: op.classifier.as_ref().map(|_| cls_target.as_slice()),
        };
        let y = solve_y_fourier(op, &targets)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalDivergence(
                "non-finite primal iterate in the ADMM loop".into(),
            ));
        }

        let yspec = op.map_spectra(&y);
        let ky_conv = op.conv_from_spectra(&yspec);
        let ky_cls = op.classifier_apply(&y);

        // Auxiliary updates through the proxes of f_i / rho.
        let mut dual_sq = 0.0;
        for (i, prox) in proxes.data.iter().enumerate() {
            let mut v: Vec<f64> = ky_conv[i]
                .iter()
                .zip(state.lambda_conv[i].iter())
                .map(|(a, b)| a + b)
                .collect();
            proximal::data_prox_inplace(
                &mut v,
                prox.x.as_slice(),
                prox.mask.as_slice(),
                opts.rho,
            );
            dual_sq += diff_norm_sq(&v, &state.u_conv[i]);
            state.u_conv[i] = v;
        }
        {
            let mut v: Vec<f64> = y
                .iter()
                .zip(state.lambda_identity.iter())
                .map(|(a, b)| a + b)
                .collect();
            match &proxes.identity {
                IdentityProx::SoftThreshold { beta } => {
                    let tau = beta / opts.rho;
                    for x in v.iter_mut() {
                        *x = proximal::soft_threshold(*x, tau);
                    }
                }
                IdentityProx::SupportBall { side } => {
                    let mut projected = vec![0.0; v.len()];
                    for k in 0..op.filter_count {
                        proximal::unit_ball_project(
                            &v[k * d..(k + 1) * d],
                            &mut projected[k * d..(k + 1) * d],
                            op.width,
                            op.height,
                            *side,
                        );
                    }
                    v = projected;
                }
            }
            dual_sq += diff_norm_sq(&v, &state.u_identity);
            state.u_identity = v;
        }
        if let Some(lp) = &proxes.logistic {
            let mut v = vec![0.0; ky_cls.len()];
            for (s, slot) in v.iter_mut().enumerate() {
                let q = ky_cls[s] + state.lambda_classifier[s];
                *slot = proximal::prox_logistic(
                    q,
                    lp.labels[s],
                    lp.bias,
                    lp.gamma,
                    opts.rho,
                    &lp.newton,
                )?;
            }
            dual_sq += diff_norm_sq(&v, &state.u_classifier);
            state.u_classifier = v;
        }

        // Dual ascent and residuals.
        let mut primal_sq = 0.0;
        let mut ky_sq = 0.0;
        let mut u_sq = 0.0;
        let mut lambda_sq = 0.0;
        for i in 0..op.conv_outputs {
            for ((l, &kv), &uv) in state.lambda_conv[i]
                .iter_mut()
                .zip(ky_conv[i].iter())
                .zip(state.u_conv[i].iter())
            {
                let r = kv - uv;
                *l += r;
                primal_sq += r * r;
                lambda_sq += *l * *l;
            }
            ky_sq += norm_sq(&ky_conv[i]);
            u_sq += norm_sq(&state.u_conv[i]);
        }
        for ((l, &kv), &uv) in state
            .lambda_identity
            .iter_mut()
            .zip(y.iter())
            .zip(state.u_identity.iter())
        {
            let r = kv - uv;
            *l += r;
            primal_sq += r * r;
            lambda_sq += *l * *l;
        }
        ky_sq += norm_sq(&y);
        u_sq += norm_sq(&state.u_identity);
        for ((l, &kv), &uv) in state
            .lambda_classifier
            .iter_mut()
            .zip(ky_cls.iter())
            .zip(state.u_classifier.iter())
        {
            let r = kv - uv;
            *l += r;
            primal_sq += r * r;
            lambda_sq += *l * *l;
        }
        ky_sq += norm_sq(&ky_cls);
        u_sq += norm_sq(&state.u_classifier);

        let primal = math::sqrt(primal_sq)
            / math::sqrt(ky_sq).max(math::sqrt(u_sq)).max(1.0);
        let dual = opts.rho * math::sqrt(dual_sq) / math::sqrt(lambda_sq).max(1.0);
        primal_hist.push(primal);
        dual_hist.push(dual);

        if let (Some(f), Some(best)) = (objective, best_val.as_mut()) {
            let val = f(&y);
            if val < *best {
                *best = val;
                best_y.copy_from_slice(&y);
            }
        }

        state.y = y;
        state.iter += 1;
        iterations += 1;

        if primal < opts.tol && dual < opts.tol {
            converged = true;
            break;
        }
    }

    let result = if best_val.is_some() {
        state.y.copy_from_slice(&best_y);
        best_y
    } else {
        state.y.clone()
    };
    let report = AdmmReport {
        iterations,
        primal_residual: primal_hist,
        dual_residual: dual_hist,
        converged,
    };
    Ok((result, state, report))
}

/// Sparse maps, continuation state, and convergence record of a coding
/// solve.
pub struct CodingSolution {
    pub maps: SparseMapStack,
    pub state: AdmmState,
    pub report: AdmmReport,
}

/// Dictionary, continuation state, and convergence record of a learning
/// solve.
pub struct LearningSolution {
    pub bank: FilterBank,
    pub state: AdmmState,
    pub report: AdmmReport,
}

fn check_canvas_pair(x: &Image2D, mask: &Image2D) -> Result<()> {
    if !x.same_dims(mask) {
        return Err(Error::InvalidDimension("image and mask differ in size".into()));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidParameter("mask must be 0/1 valued".into()));
    }
    Ok(())
}

fn masked_residual_sq(x: &[f64], mask: &[f64], recon: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((&xv, &mv), &rv) in x.iter().zip(mask.iter()).zip(recon.iter()) {
        if mv != 0.0 {
            let e = xv - rv;
            acc += e * e;
        }
    }
    acc
}

/// Approximately minimizes
/// `0.5 ||x - M D z||^2 + beta ||z||_1` over the map stack `z`.
pub fn solve_coding(
    x: &Image2D,
    mask: &Image2D,
    bank: &FilterBank,
    beta: f64,
    opts: &AdmmOptions,
    warm: Option<AdmmState>,
) -> Result<CodingSolution> {
    check_canvas_pair(x, mask)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    let op = StackedOperator::for_coding(bank, x.height(), x.width())?;
    let proxes = Proxes {
        data: vec![DataProx { x, mask }],
        identity: IdentityProx::SoftThreshold { beta },
        logistic: None,
    };
    let init = warm.unwrap_or_else(|| AdmmState::zeros(&op));
    let objective = |y: &[f64]| -> f64 {
        let recon = op.conv_apply(y);
        0.5 * masked_residual_sq(x.as_slice(), mask.as_slice(), &recon[0])
            + beta * y.iter().map(|v| v.abs()).sum::<f64>()
    };
    let (y, state, report) = admm_solve(&op, &proxes, init, opts, Some(&objective))?;
    let maps = SparseMapStack::new(bank.count(), x.height(), x.width(), y)?;
    Ok(CodingSolution { maps, state, report })
}

/// Approximately minimizes the supervised coding objective
/// `0.5 ||x - M D z||^2 + beta ||z||_1
///  + gamma sum_d log(1 + e^{-y_d (w' z_d + b)})`.
///
/// With `gamma == 0` (or no samples) the classifier block vanishes and
/// the solve delegates to [`solve_coding`], reproducing its iterates
/// exactly.
#[allow(clippy::too_many_arguments)]
pub fn solve_coding_supervised(
    x: &Image2D,
    mask: &Image2D,
    bank: &FilterBank,
    theta: &ClassifierParams,
    samples: &SampleSet,
    beta: f64,
    gamma: f64,
    newton: &ProxConfig,
    exact_fourier: bool,
    opts: &AdmmOptions,
    warm: Option<AdmmState>,
) -> Result<CodingSolution> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    if gamma == 0.0 || samples.is_empty() {
        return solve_coding(x, mask, bank, beta, opts, warm);
    }
    check_canvas_pair(x, mask)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    let op = StackedOperator::for_supervised_coding(
        bank,
        x.height(),
        x.width(),
        theta,
        samples,
        exact_fourier,
    )?;
    let proxes = Proxes {
        data: vec![DataProx { x, mask }],
        identity: IdentityProx::SoftThreshold { beta },
        logistic: Some(LogisticProx {
            labels: samples.labels(),
            bias: theta.bias,
            gamma,
            newton: *newton,
        }),
    };
    let init = warm.unwrap_or_else(|| AdmmState::zeros(&op));
    let labels = samples.labels();
    let objective = |y: &[f64]| -> f64 {
        let recon = op.conv_apply(y);
        let scores = op.classifier_apply(y);
        let mut obj = 0.5 * masked_residual_sq(x.as_slice(), mask.as_slice(), &recon[0])
            + beta * y.iter().map(|v| v.abs()).sum::<f64>();
        for (s, &label) in labels.iter().enumerate() {
            obj += gamma * math::softplus(-(label as f64) * (scores[s] + theta.bias));
        }
        obj
    };
    let (y, state, report) = admm_solve(&op, &proxes, init, opts, Some(&objective))?;
    let maps = SparseMapStack::new(bank.count(), x.height(), x.width(), y)?;
    Ok(CodingSolution { maps, state, report })
}

/// Approximately minimizes
/// `sum_n 0.5 ||x_n - M_n Z_n S' d||^2` subject to `||d_k||_2 <= 1`
/// over the shared dictionary, for fixed per-image sparse maps.
pub fn solve_learning(
    images: &[Image2D],
    masks: &[Image2D],
    maps: &[SparseMapStack],
    init_bank: &FilterBank,
    opts: &AdmmOptions,
    warm: Option<AdmmState>,
) -> Result<LearningSolution> {
    if images.is_empty() || images.len() != masks.len() || images.len() != maps.len() {
        return Err(Error::InvalidDimension(
            "learning needs matching images, masks, and map stacks".into(),
        ));
    }
    for ((x, mask), stack) in images.iter().zip(masks).zip(maps) {
        check_canvas_pair(x, mask)?;
        if x.height() != stack.height() || x.width() != stack.width() {
            return Err(Error::InvalidDimension(
                "map stack does not match its image".into(),
            ));
        }
        if stack.count() != init_bank.count() {
            return Err(Error::InvalidDimension(
                "map stack count differs from the bank".into(),
            ));
        }
    }
    let side = init_bank.side();
    let op = StackedOperator::for_learning(maps)?;
    if side > op.height || side > op.width {
        return Err(Error::InvalidDimension("filter side exceeds the canvas".into()));
    }
    let proxes = Proxes {
        data: images
            .iter()
            .zip(masks)
            .map(|(x, mask)| DataProx { x, mask })
            .collect(),
        identity: IdentityProx::SupportBall { side },
        logistic: None,
    };
    let d = op.canvas_len();
    let init = match warm {
        Some(state) => state,
        None => {
            let mut state = AdmmState::zeros(&op);
            for k in 0..init_bank.count() {
                let padded =
                    spectral::pad_filter(init_bank.filter(k), side, op.height, op.width)?;
                state.y[k * d..(k + 1) * d].copy_from_slice(padded.as_slice());
            }
            state
        }
    };
    let project = |y: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for k in 0..op.filter_count {
            proximal::unit_ball_project(
                &y[k * d..(k + 1) * d],
                &mut out[k * d..(k + 1) * d],
                op.width,
                op.height,
                side,
            );
        }
        out
    };
    let objective = |y: &[f64]| -> f64 {
        let feasible = project(y);
        let recon = op.conv_apply(&feasible);
        images
            .iter()
            .zip(masks)
            .zip(recon.iter())
            .map(|((x, m), r)| 0.5 * masked_residual_sq(x.as_slice(), m.as_slice(), r))
            .sum()
    };
    let (y, state, report) = admm_solve(&op, &proxes, init, opts, Some(&objective))?;
    let feasible = project(&y);
    let mut filters = Vec::with_capacity(init_bank.count() * side * side);
    for k in 0..op.filter_count {
        let img =
            Image2D::from_vec_unchecked(op.height, op.width, feasible[k * d..(k + 1) * d].to_vec());
        filters.extend(spectral::crop_filter(&img, side)?);
    }
    let bank = FilterBank::new(init_bank.count(), side, filters)?;
    Ok(LearningSolution { bank, state, report })
}
