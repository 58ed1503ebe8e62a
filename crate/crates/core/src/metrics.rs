//! KITTI-convention error metrics: endpoint error and the 3 px / 5%
//! outlier rates for flow, disparity, and their scene-flow union.
//!
//! Everything is evaluated only where the validity mask is set, since KITTI
//! ground truth is sparse.

use crate::error::{Error, Result};
use crate::map::{DisparityMap, FlowField, ValidityMask};

/// Outlier thresholds: a pixel is an outlier iff its error exceeds 3 px AND
/// 5% of the ground-truth magnitude.
const ABS_THRESHOLD: f64 = 3.0;
const REL_THRESHOLD: f64 = 0.05;

/// Error summary over the valid pixels of one prediction, with an optional
/// foreground/background split.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub epe: f64,
    pub outlier_rate: f64,
    pub evaluated: usize,
    pub fg: Option<SplitMetrics>,
    pub bg: Option<SplitMetrics>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SplitMetrics {
    pub epe: f64,
    pub outlier_rate: f64,
    pub evaluated: usize,
}

fn check_nonempty(valid: &ValidityMask) -> Result<()> {
    if valid.count() == 0 {
        return Err(Error::InsufficientData("no valid pixels to evaluate".into()));
    }
    Ok(())
}

/// Mean endpoint error `||pred - gt||` over valid pixels.
pub fn flow_epe(pred: &FlowField, gt: &FlowField, valid: &ValidityMask) -> Result<f64> {
    pred.map().check_same_shape(gt.map(), "flow epe")?;
    pred.map().check_same_shape(valid.map(), "flow epe validity")?;
    check_nonempty(valid)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            let (pu, pv) = pred.uv(x, y);
            let (gu, gv) = gt.uv(x, y);
            sum += ((pu - gu).powi(2) + (pv - gv).powi(2)).sqrt();
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

/// Per-pixel flow outlier flags (EPE > 3 px AND > 5% of `||gt||`).
pub fn flow_outlier_flags(
    pred: &FlowField,
    gt: &FlowField,
    valid: &ValidityMask,
) -> Result<ValidityMask> {
    pred.map().check_same_shape(gt.map(), "flow outliers")?;
    pred.map().check_same_shape(valid.map(), "flow outliers validity")?;
    let mut flags = ValidityMask::all_zeros(pred.height(), pred.width());
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            let (pu, pv) = pred.uv(x, y);
            let (gu, gv) = gt.uv(x, y);
            let err = ((pu - gu).powi(2) + (pv - gv).powi(2)).sqrt();
            let mag = (gu * gu + gv * gv).sqrt();
            flags.set_flag(x, y, err > ABS_THRESHOLD && err > REL_THRESHOLD * mag);
        }
    }
    Ok(flags)
}

/// KITTI Fl: fraction of valid pixels failing both outlier thresholds.
pub fn flow_outlier_rate(pred: &FlowField, gt: &FlowField, valid: &ValidityMask) -> Result<f64> {
    check_nonempty(valid)?;
    let flags = flow_outlier_flags(pred, gt, valid)?;
    Ok(flags.count() as f64 / valid.count() as f64)
}

/// Per-pixel disparity outlier flags (|err| > 3 px AND > 5% of gt).
pub fn disparity_outlier_flags(
    pred: &DisparityMap,
    gt: &DisparityMap,
    valid: &ValidityMask,
) -> Result<ValidityMask> {
    pred.map().check_same_shape(gt.map(), "disparity outliers")?;
    pred.map()
        .check_same_shape(valid.map(), "disparity outliers validity")?;
    let mut flags = ValidityMask::all_zeros(pred.height(), pred.width());
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            let err = (pred.value(x, y) - gt.value(x, y)).abs();
            flags.set_flag(
                x,
                y,
                err > ABS_THRESHOLD && err > REL_THRESHOLD * gt.value(x, y).abs(),
            );
        }
    }
    Ok(flags)
}

/// KITTI D1/D2: fraction of valid pixels failing both disparity thresholds.
pub fn disparity_outlier_rate(
    pred: &DisparityMap,
    gt: &DisparityMap,
    valid: &ValidityMask,
) -> Result<f64> {
    check_nonempty(valid)?;
    let flags = disparity_outlier_flags(pred, gt, valid)?;
    Ok(flags.count() as f64 / valid.count() as f64)
}

/// Mean absolute disparity error over valid pixels.
pub fn disparity_epe(pred: &DisparityMap, gt: &DisparityMap, valid: &ValidityMask) -> Result<f64> {
    pred.map().check_same_shape(gt.map(), "disparity epe")?;
    pred.map().check_same_shape(valid.map(), "disparity epe validity")?;
    check_nonempty(valid)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            if valid.is_set(x, y) {
                sum += (pred.value(x, y) - gt.value(x, y)).abs();
                n += 1;
            }
        }
    }
    Ok(sum / n as f64)
}

/// KITTI SF: a pixel is a scene-flow outlier iff it is an outlier in any of
/// D1, D2, or Fl. Flags maps must be co-registered with the validity mask.
pub fn scene_flow_outlier_rate(
    d1_flags: &ValidityMask,
    d2_flags: &ValidityMask,
    fl_flags: &ValidityMask,
    valid: &ValidityMask,
) -> Result<f64> {
    d1_flags.map().check_same_shape(d2_flags.map(), "sf flags")?;
    d1_flags.map().check_same_shape(fl_flags.map(), "sf flags")?;
    d1_flags.map().check_same_shape(valid.map(), "sf validity")?;
    check_nonempty(valid)?;
    let mut outliers = 0usize;
    for y in 0..valid.height() {
        for x in 0..valid.width() {
            if !valid.is_set(x, y) {
                continue;
            }
            if d1_flags.is_set(x, y) || d2_flags.is_set(x, y) || fl_flags.is_set(x, y) {
                outliers += 1;
            }
        }
    }
    Ok(outliers as f64 / valid.count() as f64)
}

/// Flow report with optional fg/bg split from an object mask (1 = fg).
pub fn flow_report(
    pred: &FlowField,
    gt: &FlowField,
    valid: &ValidityMask,
    fg_mask: Option<&ValidityMask>,
) -> Result<MetricReport> {
    let epe = flow_epe(pred, gt, valid)?;
    let outlier_rate = flow_outlier_rate(pred, gt, valid)?;
    let (fg, bg) = match fg_mask {
        None => (None, None),
        Some(m) => {
            let fg_valid = valid.and(m)?;
            let bg_valid = valid.and(&complement(m))?;
            (split(pred, gt, &fg_valid)?, split(pred, gt, &bg_valid)?)
        }
    };
    Ok(MetricReport {
        epe,
        outlier_rate,
        evaluated: valid.count(),
        fg,
        bg,
    })
}

fn complement(mask: &ValidityMask) -> ValidityMask {
    let mut out = ValidityMask::all_zeros(mask.height(), mask.width());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            out.set_flag(x, y, !mask.is_set(x, y));
        }
    }
    out
}

fn split(
    pred: &FlowField,
    gt: &FlowField,
    valid: &ValidityMask,
) -> Result<Option<SplitMetrics>> {
    if valid.count() == 0 {
        return Ok(None);
    }
    Ok(Some(SplitMetrics {
        epe: flow_epe(pred, gt, valid)?,
        outlier_rate: flow_outlier_rate(pred, gt, valid)?,
        evaluated: valid.count(),
    }))
}
