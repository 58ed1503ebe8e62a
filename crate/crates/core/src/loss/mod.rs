//! The semi-supervised scene-flow loss family: supervised multi-scale terms,
//! occlusion and segmentation distillation, occlusion-modulated photometric
//! and semantic consistency, structural similarity, and the occlusion
//! regularizer, plus the weighted totals that combine them.
//!
//! All pixel losses are sums (not means) over pixels; the optional
//! `per_pixel_normalization` flag in [`LossWeights`] divides the
//! self-supervised consistency and regularization terms by the pixel count.

mod consistency;
mod ssim;

pub use consistency::{
    photometric_consistency, photometric_consistency_grad, semantic_consistency,
    semantic_consistency_grad, ConsistencyGrad, FieldRef,
};
pub use ssim::{ssim_branch_disparity, ssim_branch_flow, ssim_loss, ssim_scalar};

use crate::error::{Error, Result};
use crate::map::{DenseMap, DisparityMap, FlowField, OcclusionMask, SegPosterior, ValidityMask};
use crate::pyramid::{build_pyramid, PyramidScaling};

const LOG_CLAMP: f64 = 1e-7;

/// Robust penalty applied to a per-pixel residual vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// Euclidean norm of the residual vector.
    L2Norm,
    /// Squared Euclidean norm (flag alternative to [`PenaltyKind::L2Norm`]).
    L2NormSquared,
    /// Per-component `0.5 r^2` for `|r| < 1`, else `|r| - 0.5`, summed.
    SmoothL1,
}

pub fn robust_penalty(residual: &[f64], kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::L2Norm => residual.iter().map(|r| r * r).sum::<f64>().sqrt(),
        PenaltyKind::L2NormSquared => residual.iter().map(|r| r * r).sum(),
        PenaltyKind::SmoothL1 => residual
            .iter()
            .map(|r| {
                let a = r.abs();
                if a < 1.0 {
                    0.5 * r * r
                } else {
                    a - 0.5
                }
            })
            .sum(),
    }
}

/// Every coefficient of the loss family. `omega` runs finest to coarsest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub omega: Vec<f64>,
    /// Weight of the occlusion distillation terms.
    pub alpha_occ: f64,
    /// Weight of the segmentation distillation term.
    pub alpha_seg: f64,
    /// Weight of the photometric consistency term.
    pub alpha_photo: f64,
    /// Weight of the semantic consistency term.
    pub alpha_semantic: f64,
    pub beta_flow: f64,
    pub beta_disp: f64,
    pub gamma_flow: f64,
    pub gamma_disp: f64,
    /// Distillation softmax temperature.
    pub temperature: f64,
    /// Scale of the disparity branch in the pre-training loss.
    pub pretrain_disp_scale: f64,
    /// Divide consistency and regularization sums by the pixel count.
    pub per_pixel_normalization: bool,
    /// Use the squared L2 norm for the flow penalty.
    pub squared_flow_penalty: bool,
    /// Soften teacher logits as `softmax(-z / T)` instead of `softmax(z / T)`.
    pub negate_teacher_logits: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            omega: vec![0.32, 0.08, 0.02, 0.01, 0.005],
            alpha_occ: 0.05,
            alpha_seg: 1.0,
            alpha_photo: 0.5,
            alpha_semantic: 0.5,
            beta_flow: 0.5,
            beta_disp: 0.5,
            gamma_flow: 0.01,
            gamma_disp: 0.005,
            temperature: 1.0,
            pretrain_disp_scale: 0.25,
            per_pixel_normalization: false,
            squared_flow_penalty: false,
            negate_teacher_logits: false,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let nonneg = self
            .omega
            .iter()
            .chain([
                &self.alpha_occ,
                &self.alpha_seg,
                &self.alpha_photo,
                &self.alpha_semantic,
                &self.beta_flow,
                &self.beta_disp,
                &self.gamma_flow,
                &self.gamma_disp,
                &self.pretrain_disp_scale,
            ])
            .all(|&v| v >= 0.0 && v.is_finite());
        if !nonneg {
            return Err(Error::InvalidArgument("loss weights must be >= 0".into()));
        }
        if self.omega.is_empty() {
            return Err(Error::InvalidArgument(
                "omega must have at least one level".into(),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidArgument("temperature must be > 0".into()));
        }
        Ok(())
    }

    /// Scales the SSIM gammas by the crop area, matching their usual
    /// per-crop definition (`gamma = coefficient * height * width`).
    pub fn with_crop_scaled_gammas(mut self, height: usize, width: usize) -> Self {
        let area = (height * width) as f64;
        self.gamma_flow *= area;
        self.gamma_disp *= area;
        self
    }

    fn flow_penalty(&self) -> PenaltyKind {
        if self.squared_flow_penalty {
            PenaltyKind::L2NormSquared
        } else {
            PenaltyKind::L2Norm
        }
    }
}

/// Which total a [`LossReport`] was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LossMode {
    SemiSupervised,
    Pretrain,
}

/// Named breakdown of every computed term plus the weighted total. Terms
/// whose inputs were absent are `None`, not zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossReport {
    pub mode: LossMode,
    pub flow: Option<f64>,
    pub disparity: Option<f64>,
    pub flow_occlusion: Option<f64>,
    pub disp_occlusion: Option<f64>,
    pub flow_occ_distill: Option<f64>,
    pub disp_occ_distill: Option<f64>,
    pub seg_distill: Option<f64>,
    pub photometric: Option<f64>,
    pub semantic: Option<f64>,
    pub ssim: Option<f64>,
    pub regularization: Option<f64>,
    pub total: f64,
}

impl LossReport {
    fn empty(mode: LossMode) -> Self {
        Self {
            mode,
            flow: None,
            disparity: None,
            flow_occlusion: None,
            disp_occlusion: None,
            flow_occ_distill: None,
            disp_occ_distill: None,
            seg_distill: None,
            photometric: None,
            semantic: None,
            ssim: None,
            regularization: None,
            total: 0.0,
        }
    }

    pub fn term_count(&self) -> usize {
        [
            self.flow,
            self.disparity,
            self.flow_occlusion,
            self.disp_occlusion,
            self.flow_occ_distill,
            self.disp_occ_distill,
            self.seg_distill,
            self.photometric,
            self.semantic,
            self.ssim,
            self.regularization,
        ]
        .iter()
        .filter(|t| t.is_some())
        .count()
    }

    /// Recomputes the weighted total from the stored terms; used to check
    /// the report's internal consistency.
    pub fn recompute_total(&self, weights: &LossWeights) -> f64 {
        let g = |t: Option<f64>| t.unwrap_or(0.0);
        match self.mode {
            LossMode::SemiSupervised => {
                g(self.flow)
                    + g(self.disparity)
                    + weights.alpha_occ * (g(self.flow_occ_distill) + g(self.disp_occ_distill))
                    + weights.alpha_seg * g(self.seg_distill)
                    + weights.alpha_photo * g(self.photometric)
                    + weights.alpha_semantic * g(self.semantic)
                    + g(self.ssim)
                    + g(self.regularization)
            }
            LossMode::Pretrain => {
                g(self.flow)
                    + g(self.flow_occlusion)
                    + weights.pretrain_disp_scale * (g(self.disparity) + g(self.disp_occlusion))
            }
        }
    }
}

/// Downsamples a validity mask through the pyramid: a coarse pixel stays
/// valid only when all four children are, so pooled ground truth never mixes
/// invalid values into the residual.
fn downsample_validity(valid: &ValidityMask, levels: usize) -> Result<Vec<ValidityMask>> {
    let pooled = build_pyramid(valid.map(), levels, PyramidScaling::Intensity)?;
    pooled
        .into_iter()
        .map(|m| {
            let (h, w) = (m.height(), m.width());
            ValidityMask::new(DenseMap::from_fn(h, w, 1, |x, y, _| {
                // Averages of {0, 0.25, ..., 1} are exact in binary floating
                // point, so the all-children-valid test is an equality.
                (m.get(x, y, 0) == 1.0) as u8 as f64
            }))
        })
        .collect()
}

fn check_level_dims(pred: &DenseMap, gt: &DenseMap, level: usize) -> Result<()> {
    if !pred.same_shape(gt) || pred.channels() != gt.channels() {
        return Err(Error::ShapeMismatch(format!(
            "prediction at level {level} is {}x{}x{}, expected {}x{}x{}",
            pred.height(),
            pred.width(),
            pred.channels(),
            gt.height(),
            gt.width(),
            gt.channels()
        )));
    }
    Ok(())
}

fn multiscale_sum(
    pred_pyramid: &[&DenseMap],
    gt: &DenseMap,
    valid: &ValidityMask,
    weights: &LossWeights,
    scaling: PyramidScaling,
    mut per_pixel: impl FnMut(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    if pred_pyramid.is_empty() {
        return Err(Error::InvalidArgument("prediction pyramid is empty".into()));
    }
    if pred_pyramid.len() > weights.omega.len() {
        return Err(Error::InvalidArgument(format!(
            "{} pyramid levels but only {} omega weights",
            pred_pyramid.len(),
            weights.omega.len()
        )));
    }
    gt.check_same_shape(valid.map(), "ground truth vs validity")?;
    let levels = pred_pyramid.len();
    let gt_pyramid = build_pyramid(gt, levels, scaling)?;
    let valid_pyramid = downsample_validity(valid, levels)?;

    let mut total = 0.0;
    let mut any_valid = false;
    for level in 0..levels {
        let pred = pred_pyramid[level];
        let gt_l = &gt_pyramid[level];
        let valid_l = &valid_pyramid[level];
        check_level_dims(pred, gt_l, level)?;
        let mut level_sum = 0.0;
        for y in 0..gt_l.height() {
            for x in 0..gt_l.width() {
                if !valid_l.is_set(x, y) {
                    continue;
                }
                any_valid = true;
                level_sum += per_pixel(pred.pixel(x, y), gt_l.pixel(x, y));
            }
        }
        total += weights.omega[level] * level_sum;
    }
    if !any_valid {
        return Err(Error::InsufficientData(
            "no valid ground-truth pixels at any pyramid level".into(),
        ));
    }
    Ok(total)
}

/// Supervised multi-scale task loss (flow or disparity):
/// `sum_i omega_i sum_{p valid} rho(pred_i(p), gt_i(p))`, with ground truth
/// and validity downsampled per the pyramid rules.
pub fn multiscale_task_loss(
    pred_pyramid: &[DenseMap],
    gt: &DenseMap,
    valid: &ValidityMask,
    weights: &LossWeights,
    kind: PenaltyKind,
) -> Result<f64> {
    let refs: Vec<&DenseMap> = pred_pyramid.iter().collect();
    let mut residual = vec![0.0; gt.channels()];
    multiscale_sum(
        &refs,
        gt,
        valid,
        weights,
        PyramidScaling::Displacement,
        move |pred, gt| {
            for (i, v) in residual.iter_mut().enumerate() {
                *v = pred[i] - gt[i];
            }
            robust_penalty(&residual, kind)
        },
    )
}

/// Summed binary cross entropy over valid pixels; predictions clamped to
/// `[1e-7, 1 - 1e-7]` before the logs.
pub fn occlusion_bce(
    pred: &OcclusionMask,
    gt: &OcclusionMask,
    valid: &ValidityMask,
) -> Result<f64> {
    pred.map().check_same_shape(gt.map(), "occlusion bce")?;
    pred.map()
        .check_same_shape(valid.map(), "occlusion bce validity")?;
    let mut total = 0.0;
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            total += bce_term(pred.value(x, y), gt.value(x, y));
        }
    }
    Ok(total)
}

#[inline]
fn bce_term(pred: f64, target: f64) -> f64 {
    let p = pred.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Multi-scale BCE against downsampled occlusion ground truth, used by the
/// supervised occlusion terms of the pre-training loss.
pub fn multiscale_occlusion_bce(
    pred_pyramid: &[OcclusionMask],
    gt: &OcclusionMask,
    valid: &ValidityMask,
    weights: &LossWeights,
) -> Result<f64> {
    let refs: Vec<&DenseMap> = pred_pyramid.iter().map(|m| m.map()).collect();
    multiscale_sum(
        &refs,
        gt.map(),
        valid,
        weights,
        PyramidScaling::Intensity,
        |pred, gt| bce_term(pred[0], gt[0]),
    )
}

/// Occlusion distillation: multi-level smooth-L1 between predictions and the
/// downsampled pseudo ground truth, omega-weighted.
pub fn occlusion_distillation(
    pred_pyramid: &[OcclusionMask],
    pseudo_gt: &OcclusionMask,
    weights: &LossWeights,
) -> Result<f64> {
    let refs: Vec<&DenseMap> = pred_pyramid.iter().map(|m| m.map()).collect();
    let valid = ValidityMask::all_ones(pseudo_gt.height(), pseudo_gt.width());
    multiscale_sum(
        &refs,
        pseudo_gt.map(),
        &valid,
        weights,
        PyramidScaling::Intensity,
        |pred, gt| robust_penalty(&[pred[0] - gt[0]], PenaltyKind::SmoothL1),
    )
}

/// Segmentation distillation against temperature-softened teacher logits:
/// per valid pixel `-T * sum_i softened_i * log(student_i)`, student
/// posteriors clamped at `1e-7`. The softening uses `softmax(z / T)` unless
/// `negate_logits` flips the exponent's sign.
pub fn seg_distillation(
    student: &SegPosterior,
    teacher_logits: &DenseMap,
    temperature: f64,
    valid: &ValidityMask,
    negate_logits: bool,
) -> Result<f64> {
    if student.categories() != teacher_logits.channels() {
        return Err(Error::ShapeMismatch(format!(
            "student has {} categories, teacher logits {}",
            student.categories(),
            teacher_logits.channels()
        )));
    }
    student
        .map()
        .check_same_shape(teacher_logits, "seg distillation")?;
    student
        .map()
        .check_same_shape(valid.map(), "seg distillation validity")?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    let c = student.categories();
    let sign = if negate_logits { -1.0 } else { 1.0 };
    let mut softened = vec![0.0; c];
    let mut total = 0.0;
    for y in 0..student.height() {
        for x in 0..student.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            let logits = teacher_logits.pixel(x, y);
            let mut max = f64::NEG_INFINITY;
            for i in 0..c {
                softened[i] = sign * logits[i] / temperature;
                max = max.max(softened[i]);
            }
            let mut norm = 0.0;
            for v in softened.iter_mut() {
                *v = (*v - max).exp();
                norm += *v;
            }
            let pred = student.map().pixel(x, y);
            let mut cross = 0.0;
            for i in 0..c {
                cross -= softened[i] / norm * pred[i].max(LOG_CLAMP).ln();
            }
            total += temperature * cross;
        }
    }
    Ok(total)
}

/// Occlusion-area regularizer `beta_D sum O_D + beta_F sum O_F`, the
/// counterweight that keeps the consistency terms from switching every pixel
/// to occluded.
pub fn occlusion_regularization(
    occ_flow: &OcclusionMask,
    occ_disp: &OcclusionMask,
    weights: &LossWeights,
) -> f64 {
    let sum_f: f64 = occ_flow.map().data().iter().sum();
    let sum_d: f64 = occ_disp.map().data().iter().sum();
    weights.beta_disp * sum_d + weights.beta_flow * sum_f
}

/// One supervised branch: per-level predictions plus full-resolution ground
/// truth and its validity.
#[derive(Debug, Clone, Copy)]
pub struct Supervision<'a> {
    pub pred_pyramid: &'a [DenseMap],
    pub gt: &'a DenseMap,
    pub valid: &'a ValidityMask,
}

/// Inputs of [`total_semi_supervised`]; every group is optional and absent
/// groups simply disable their loss terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemiSupervisedInputs<'a> {
    pub flow_supervision: Option<Supervision<'a>>,
    pub disp_supervision: Option<Supervision<'a>>,
    pub flow_occ_pyramid: Option<&'a [OcclusionMask]>,
    pub flow_occ_pseudo_gt: Option<&'a OcclusionMask>,
    pub disp_occ_pyramid: Option<&'a [OcclusionMask]>,
    pub disp_occ_pseudo_gt: Option<&'a OcclusionMask>,
    pub student_seg: Option<&'a SegPosterior>,
    pub teacher_logits: Option<&'a DenseMap>,
    pub seg_valid: Option<&'a ValidityMask>,
    pub image1: Option<&'a DenseMap>,
    pub image2: Option<&'a DenseMap>,
    pub image_left: Option<&'a DenseMap>,
    pub image_right: Option<&'a DenseMap>,
    pub flow: Option<&'a FlowField>,
    pub disparity: Option<&'a DisparityMap>,
    pub occ_flow: Option<&'a OcclusionMask>,
    pub occ_disp: Option<&'a OcclusionMask>,
    pub seg1: Option<&'a SegPosterior>,
    pub seg2: Option<&'a SegPosterior>,
    pub seg_left: Option<&'a SegPosterior>,
    pub seg_right: Option<&'a SegPosterior>,
}

/// Inputs of [`pretrain_supervised`]. At least one of the flow/disparity
/// branches must be present; occlusion ground truth is optional.
#[derive(Debug, Clone, Copy, Default)]
pub struct PretrainInputs<'a> {
    pub flow_supervision: Option<Supervision<'a>>,
    pub disp_supervision: Option<Supervision<'a>>,
    pub flow_occ_pyramid: Option<&'a [OcclusionMask]>,
    pub flow_occ_gt: Option<&'a OcclusionMask>,
    pub flow_occ_valid: Option<&'a ValidityMask>,
    pub disp_occ_pyramid: Option<&'a [OcclusionMask]>,
    pub disp_occ_gt: Option<&'a OcclusionMask>,
    pub disp_occ_valid: Option<&'a ValidityMask>,
}

fn pixel_norm(map: &DenseMap) -> f64 {
    (map.height() * map.width()) as f64
}

/// The full semi-supervised total
/// `L_F + L_D + alpha_O (L_OFd + L_ODd) + alpha_Sd L_Sd + alpha_PC L_PC +
/// alpha_SC L_SC + L_SS + L_REG` over whichever terms have inputs.
pub fn total_semi_supervised(
    inputs: &SemiSupervisedInputs,
    weights: &LossWeights,
) -> Result<LossReport> {
    weights.validate()?;
    let mut report = LossReport::empty(LossMode::SemiSupervised);

    if let Some(s) = &inputs.flow_supervision {
        report.flow = Some(multiscale_task_loss(
            s.pred_pyramid,
            s.gt,
            s.valid,
            weights,
            weights.flow_penalty(),
        )?);
    }
    if let Some(s) = &inputs.disp_supervision {
        report.disparity = Some(multiscale_task_loss(
            s.pred_pyramid,
            s.gt,
            s.valid,
            weights,
            PenaltyKind::SmoothL1,
        )?);
    }
    if let (Some(pyr), Some(gt)) = (inputs.flow_occ_pyramid, inputs.flow_occ_pseudo_gt) {
        report.flow_occ_distill = Some(occlusion_distillation(pyr, gt, weights)?);
    }
    if let (Some(pyr), Some(gt)) = (inputs.disp_occ_pyramid, inputs.disp_occ_pseudo_gt) {
        report.disp_occ_distill = Some(occlusion_distillation(pyr, gt, weights)?);
    }
    if let (Some(student), Some(logits)) = (inputs.student_seg, inputs.teacher_logits) {
        let all = ValidityMask::all_ones(student.height(), student.width());
        let valid = inputs.seg_valid.unwrap_or(&all);
        report.seg_distill = Some(seg_distillation(
            student,
            logits,
            weights.temperature,
            valid,
            weights.negate_teacher_logits,
        )?);
    }

    let norm = |value: f64, map: &DenseMap| {
        if weights.per_pixel_normalization {
            value / pixel_norm(map)
        } else {
            value
        }
    };

    // Photometric and semantic consistency: stereo and temporal branches
    // both land in the same term when present.
    let mut photo: Option<f64> = None;
    if let (Some(il), Some(ir), Some(d), Some(od)) = (
        inputs.image_left,
        inputs.image_right,
        inputs.disparity,
        inputs.occ_disp,
    ) {
        let v = photometric_consistency(il, ir, FieldRef::Disparity(d), od)?;
        photo = Some(photo.unwrap_or(0.0) + norm(v, il));
    }
    if let (Some(i1), Some(i2), Some(f), Some(of)) =
        (inputs.image1, inputs.image2, inputs.flow, inputs.occ_flow)
    {
        let v = photometric_consistency(i1, i2, FieldRef::Flow(f), of)?;
        photo = Some(photo.unwrap_or(0.0) + norm(v, i1));
    }
    report.photometric = photo;

    let mut semantic: Option<f64> = None;
    if let (Some(sl), Some(sr), Some(d), Some(od)) = (
        inputs.seg_left,
        inputs.seg_right,
        inputs.disparity,
        inputs.occ_disp,
    ) {
        let v = semantic_consistency(sl, sr, FieldRef::Disparity(d), od)?;
        semantic = Some(semantic.unwrap_or(0.0) + norm(v, sl.map()));
    }
    if let (Some(s1), Some(s2), Some(f), Some(of)) =
        (inputs.seg1, inputs.seg2, inputs.flow, inputs.occ_flow)
    {
        let v = semantic_consistency(s1, s2, FieldRef::Flow(f), of)?;
        semantic = Some(semantic.unwrap_or(0.0) + norm(v, s1.map()));
    }
    report.semantic = semantic;

    let mut ssim_total: Option<f64> = None;
    if let (Some(il), Some(ir), Some(d), Some(od)) = (
        inputs.image_left,
        inputs.image_right,
        inputs.disparity,
        inputs.occ_disp,
    ) {
        let v = ssim_branch_disparity(il, ir, d, od)?;
        ssim_total = Some(ssim_total.unwrap_or(0.0) + weights.gamma_disp * v);
    }
    if let (Some(i1), Some(i2), Some(f), Some(of)) =
        (inputs.image1, inputs.image2, inputs.flow, inputs.occ_flow)
    {
        let v = ssim_branch_flow(i1, i2, f, of)?;
        ssim_total = Some(ssim_total.unwrap_or(0.0) + weights.gamma_flow * v);
    }
    report.ssim = ssim_total;

    let mut reg: Option<f64> = None;
    if let Some(od) = inputs.occ_disp {
        let v = weights.beta_disp * od.map().data().iter().sum::<f64>();
        reg = Some(reg.unwrap_or(0.0) + norm(v, od.map()));
    }
    if let Some(of) = inputs.occ_flow {
        let v = weights.beta_flow * of.map().data().iter().sum::<f64>();
        reg = Some(reg.unwrap_or(0.0) + norm(v, of.map()));
    }
    report.regularization = reg;

    if report.term_count() == 0 {
        return Err(Error::InsufficientData(
            "no loss term has its inputs present".into(),
        ));
    }
    report.total = report.recompute_total(weights);
    Ok(report)
}

/// The pre-training supervised total
/// `(L_F + L_OF) + pretrain_disp_scale * (L_D + L_OD)`. Occlusion terms
/// require ground truth; they are recorded absent when it is missing.
pub fn pretrain_supervised(inputs: &PretrainInputs, weights: &LossWeights) -> Result<LossReport> {
    weights.validate()?;
    if inputs.flow_supervision.is_none() && inputs.disp_supervision.is_none() {
        return Err(Error::InsufficientData(
            "pre-training needs flow or disparity ground truth".into(),
        ));
    }
    let mut report = LossReport::empty(LossMode::Pretrain);
    if let Some(s) = &inputs.flow_supervision {
        report.flow = Some(multiscale_task_loss(
            s.pred_pyramid,
            s.gt,
            s.valid,
            weights,
            weights.flow_penalty(),
        )?);
    }
    if let Some(s) = &inputs.disp_supervision {
        report.disparity = Some(multiscale_task_loss(
            s.pred_pyramid,
            s.gt,
            s.valid,
            weights,
            PenaltyKind::SmoothL1,
        )?);
    }
    if let (Some(pyr), Some(gt)) = (inputs.flow_occ_pyramid, inputs.flow_occ_gt) {
        let all = ValidityMask::all_ones(gt.height(), gt.width());
        let valid = inputs.flow_occ_valid.unwrap_or(&all);
        report.flow_occlusion = Some(multiscale_occlusion_bce(pyr, gt, valid, weights)?);
    }
    if let (Some(pyr), Some(gt)) = (inputs.disp_occ_pyramid, inputs.disp_occ_gt) {
        let all = ValidityMask::all_ones(gt.height(), gt.width());
        let valid = inputs.disp_occ_valid.unwrap_or(&all);
        report.disp_occlusion = Some(multiscale_occlusion_bce(pyr, gt, valid, weights)?);
    }
    report.total = report.recompute_total(weights);
    Ok(report)
}

#[cfg(test)]
mod tests;
