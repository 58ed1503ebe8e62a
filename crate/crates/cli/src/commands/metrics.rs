//! `senseflow metrics`: KITTI-convention metric CSV from prediction/GT pairs.

use std::path::PathBuf;

use clap::Args;
use senseflow_core::map::ValidityMask;
use senseflow_core::metrics::{
    disparity_epe, disparity_outlier_flags, disparity_outlier_rate, flow_epe, flow_outlier_flags,
    flow_outlier_rate, scene_flow_outlier_rate,
};

use super::{csv_cell, load_disparity, load_flow, load_mask, CliError};

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long, requires = "gt_flow")]
    pred_flow: Option<PathBuf>,
    #[arg(long, requires = "pred_flow")]
    gt_flow: Option<PathBuf>,
    #[arg(long, requires = "gt_disp1")]
    pred_disp1: Option<PathBuf>,
    #[arg(long, requires = "pred_disp1")]
    gt_disp1: Option<PathBuf>,
    #[arg(long, requires = "gt_disp2")]
    pred_disp2: Option<PathBuf>,
    #[arg(long, requires = "pred_disp2")]
    gt_disp2: Option<PathBuf>,
    /// Foreground object mask (nonzero = foreground) for the fg/bg split.
    #[arg(long)]
    fg_mask: Option<PathBuf>,
    /// Skip the header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Default)]
struct Row {
    flow_epe: Option<f64>,
    fl_all: Option<f64>,
    fl_fg: Option<f64>,
    fl_bg: Option<f64>,
    d1_epe: Option<f64>,
    d1_all: Option<f64>,
    d2_epe: Option<f64>,
    d2_all: Option<f64>,
    sf_all: Option<f64>,
    flow_px: Option<f64>,
    d1_px: Option<f64>,
    d2_px: Option<f64>,
    sf_px: Option<f64>,
}

pub fn run(args: &MetricsArgs) -> Result<(), CliError> {
    if args.pred_flow.is_none() && args.pred_disp1.is_none() && args.pred_disp2.is_none() {
        return Err(CliError::usage(
            "nothing to evaluate: pass at least one pred/gt pair",
        ));
    }
    let mut row = Row::default();

    let flow_pair = match (&args.pred_flow, &args.gt_flow) {
        (Some(p), Some(g)) => {
            let (pred, pred_valid) = load_flow(p)?;
            let (gt, gt_valid) = load_flow(g)?;
            let valid = pred_valid.and(&gt_valid)?;
            row.flow_epe = Some(flow_epe(&pred, &gt, &valid)?);
            row.fl_all = Some(flow_outlier_rate(&pred, &gt, &valid)?);
            row.flow_px = Some(valid.count() as f64);
            if let Some(mask_path) = &args.fg_mask {
                let fg = load_mask(mask_path)?;
                let fg_valid = valid.and(&fg)?;
                let bg_valid = valid.and(&complement(&fg))?;
                if fg_valid.count() > 0 {
                    row.fl_fg = Some(flow_outlier_rate(&pred, &gt, &fg_valid)?);
                }
                if bg_valid.count() > 0 {
                    row.fl_bg = Some(flow_outlier_rate(&pred, &gt, &bg_valid)?);
                }
            }
            Some((pred, gt, valid))
        }
        _ => None,
    };

    let d1_pair = match (&args.pred_disp1, &args.gt_disp1) {
        (Some(p), Some(g)) => {
            let (pred, pred_valid) = load_disparity(p)?;
            let (gt, gt_valid) = load_disparity(g)?;
            let valid = pred_valid.and(&gt_valid)?;
            row.d1_epe = Some(disparity_epe(&pred, &gt, &valid)?);
            row.d1_all = Some(disparity_outlier_rate(&pred, &gt, &valid)?);
            row.d1_px = Some(valid.count() as f64);
            Some((pred, gt, valid))
        }
        _ => None,
    };

    let d2_pair = match (&args.pred_disp2, &args.gt_disp2) {
        (Some(p), Some(g)) => {
            let (pred, pred_valid) = load_disparity(p)?;
            let (gt, gt_valid) = load_disparity(g)?;
            let valid = pred_valid.and(&gt_valid)?;
            row.d2_epe = Some(disparity_epe(&pred, &gt, &valid)?);
            row.d2_all = Some(disparity_outlier_rate(&pred, &gt, &valid)?);
            row.d2_px = Some(valid.count() as f64);
            Some((pred, gt, valid))
        }
        _ => None,
    };

    // SF-all when all three are present: union of outliers on the common
    // valid set.
    if let (Some((pf, gf, vf)), Some((p1, g1, v1)), Some((p2, g2, v2))) =
        (&flow_pair, &d1_pair, &d2_pair)
    {
        let valid = vf.and(v1)?.and(v2)?;
        if valid.count() > 0 {
            let fl = flow_outlier_flags(pf, gf, &valid)?;
            let d1 = disparity_outlier_flags(p1, g1, &valid)?;
            let d2 = disparity_outlier_flags(p2, g2, &valid)?;
            row.sf_all = Some(scene_flow_outlier_rate(&d1, &d2, &fl, &valid)?);
            row.sf_px = Some(valid.count() as f64);
        }
    }

    if !args.no_header {
        println!(
            "flow_epe,fl_all,fl_bg,fl_fg,d1_epe,d1_all,d2_epe,d2_all,sf_all,\
             flow_px,d1_px,d2_px,sf_px"
        );
    }
    println!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        csv_cell(row.flow_epe),
        csv_cell(row.fl_all),
        csv_cell(row.fl_bg),
        csv_cell(row.fl_fg),
        csv_cell(row.d1_epe),
        csv_cell(row.d1_all),
        csv_cell(row.d2_epe),
        csv_cell(row.d2_all),
        csv_cell(row.sf_all),
        csv_cell(row.flow_px),
        csv_cell(row.d1_px),
        csv_cell(row.d2_px),
        csv_cell(row.sf_px),
    );
    Ok(())
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
