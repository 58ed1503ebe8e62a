//! `senseflow loss`: evaluate the loss family on files and emit a report.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use senseflow_core::loss::{
    pretrain_supervised, total_semi_supervised, LossReport, LossWeights, PretrainInputs,
    SemiSupervisedInputs, Supervision,
};
use senseflow_core::map::{DenseMap, OcclusionMask, SegPosterior, ValidityMask};

use super::{csv_cell, load_disparity, load_flow, load_pfm, CliError};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Semi-supervised total (supervised + distillation + self-supervised).
    Semi,
    /// Pre-training supervised total.
    Pretrain,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct LossArgs {
    #[arg(long, value_enum, default_value_t = Mode::Semi)]
    mode: Mode,
    /// Loss weights (TOML key-value file mirroring the LossWeights fields);
    /// omitted keys use the defaults.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Per-level flow predictions, finest first (comma-separated PFMs).
    #[arg(long, value_delimiter = ',')]
    pred_flow: Option<Vec<PathBuf>>,
    /// Flow ground truth (KITTI PNG carries its validity; PFM = all valid).
    #[arg(long)]
    gt_flow: Option<PathBuf>,
    /// Per-level disparity predictions (comma-separated PFMs).
    #[arg(long, value_delimiter = ',')]
    pred_disp: Option<Vec<PathBuf>>,
    #[arg(long)]
    gt_disp: Option<PathBuf>,

    /// Per-level flow-occlusion predictions (comma-separated PFMs).
    #[arg(long, value_delimiter = ',')]
    pred_occ_flow: Option<Vec<PathBuf>>,
    /// Per-level disparity-occlusion predictions.
    #[arg(long, value_delimiter = ',')]
    pred_occ_disp: Option<Vec<PathBuf>>,
    /// Pseudo (semi) or true (pretrain) flow-occlusion ground truth, PFM.
    #[arg(long)]
    gt_occ_flow: Option<PathBuf>,
    #[arg(long)]
    gt_occ_disp: Option<PathBuf>,

    /// Student posterior (multi-channel PFM).
    #[arg(long)]
    student_seg: Option<PathBuf>,
    /// Teacher logits (multi-channel PFM).
    #[arg(long)]
    teacher_logits: Option<PathBuf>,

    /// Images for the self-supervised terms (PFM).
    #[arg(long)]
    image1: Option<PathBuf>,
    #[arg(long)]
    image2: Option<PathBuf>,
    #[arg(long)]
    image_left: Option<PathBuf>,
    #[arg(long)]
    image_right: Option<PathBuf>,
    /// Full-resolution flow driving the self-supervised terms.
    #[arg(long)]
    flow: Option<PathBuf>,
    /// Full-resolution disparity driving the self-supervised terms.
    #[arg(long)]
    disparity: Option<PathBuf>,
    /// Occlusion masks modulating the self-supervised terms (PFM).
    #[arg(long)]
    occ_flow: Option<PathBuf>,
    #[arg(long)]
    occ_disp: Option<PathBuf>,
    /// Teacher posteriors for semantic consistency (PFM).
    #[arg(long)]
    seg1: Option<PathBuf>,
    #[arg(long)]
    seg2: Option<PathBuf>,
    #[arg(long)]
    seg_left: Option<PathBuf>,
    #[arg(long)]
    seg_right: Option<PathBuf>,
}

fn load_pyramid(paths: &[PathBuf]) -> Result<Vec<DenseMap>, CliError> {
    paths.iter().map(|p| load_pfm(p)).collect()
}

fn load_occ_pyramid(paths: &[PathBuf]) -> Result<Vec<OcclusionMask>, CliError> {
    paths
        .iter()
        .map(|p| Ok(OcclusionMask::new(load_pfm(p)?)?))
        .collect()
}

fn load_occ(path: &PathBuf) -> Result<OcclusionMask, CliError> {
    Ok(OcclusionMask::new(load_pfm(path)?)?)
}

fn load_posterior(path: &PathBuf) -> Result<SegPosterior, CliError> {
    Ok(SegPosterior::new(load_pfm(path)?)?)
}

struct Loaded {
    flow_sup: Option<(Vec<DenseMap>, DenseMap, ValidityMask)>,
    disp_sup: Option<(Vec<DenseMap>, DenseMap, ValidityMask)>,
    occ_flow_pyr: Option<Vec<OcclusionMask>>,
    occ_disp_pyr: Option<Vec<OcclusionMask>>,
    gt_occ_flow: Option<OcclusionMask>,
    gt_occ_disp: Option<OcclusionMask>,
    student: Option<SegPosterior>,
    logits: Option<DenseMap>,
    image1: Option<DenseMap>,
    image2: Option<DenseMap>,
    image_left: Option<DenseMap>,
    image_right: Option<DenseMap>,
    flow: Option<senseflow_core::FlowField>,
    disparity: Option<senseflow_core::DisparityMap>,
    occ_flow: Option<OcclusionMask>,
    occ_disp: Option<OcclusionMask>,
    seg1: Option<SegPosterior>,
    seg2: Option<SegPosterior>,
    seg_left: Option<SegPosterior>,
    seg_right: Option<SegPosterior>,
}

fn load_all(args: &LossArgs) -> Result<Loaded, CliError> {
    let flow_sup = match (&args.pred_flow, &args.gt_flow) {
        (Some(pyr), Some(gt)) => {
            let (gt_flow, valid) = load_flow(gt)?;
            Some((load_pyramid(pyr)?, gt_flow.into_map(), valid))
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::usage("--pred-flow and --gt-flow go together"))
        }
        _ => None,
    };
    let disp_sup = match (&args.pred_disp, &args.gt_disp) {
        (Some(pyr), Some(gt)) => {
            let (gt_disp, valid) = load_disparity(gt)?;
            Some((load_pyramid(pyr)?, gt_disp.into_map(), valid))
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(CliError::usage("--pred-disp and --gt-disp go together"))
        }
        _ => None,
    };
    Ok(Loaded {
        flow_sup,
        disp_sup,
        occ_flow_pyr: args.pred_occ_flow.as_deref().map(load_occ_pyramid).transpose()?,
        occ_disp_pyr: args.pred_occ_disp.as_deref().map(load_occ_pyramid).transpose()?,
        gt_occ_flow: args.gt_occ_flow.as_ref().map(load_occ).transpose()?,
        gt_occ_disp: args.gt_occ_disp.as_ref().map(load_occ).transpose()?,
        student: args.student_seg.as_ref().map(load_posterior).transpose()?,
        logits: args.teacher_logits.as_ref().map(|p| load_pfm(p)).transpose()?,
        image1: args.image1.as_ref().map(|p| load_pfm(p)).transpose()?,
        image2: args.image2.as_ref().map(|p| load_pfm(p)).transpose()?,
        image_left: args.image_left.as_ref().map(|p| load_pfm(p)).transpose()?,
        image_right: args.image_right.as_ref().map(|p| load_pfm(p)).transpose()?,
        flow: args
            .flow
            .as_ref()
            .map(|p| load_flow(p).map(|f| f.0))
            .transpose()?,
        disparity: args
            .disparity
            .as_ref()
            .map(|p| load_disparity(p).map(|d| d.0))
            .transpose()?,
        occ_flow: args.occ_flow.as_ref().map(load_occ).transpose()?,
        occ_disp: args.occ_disp.as_ref().map(load_occ).transpose()?,
        seg1: args.seg1.as_ref().map(load_posterior).transpose()?,
        seg2: args.seg2.as_ref().map(load_posterior).transpose()?,
        seg_left: args.seg_left.as_ref().map(load_posterior).transpose()?,
        seg_right: args.seg_right.as_ref().map(load_posterior).transpose()?,
    })
}

pub fn run(args: &LossArgs) -> Result<(), CliError> {
    let weights = match &args.weights {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let w: LossWeights = toml::from_str(&text)
                .map_err(|e| senseflow_core::Error::Format(format!("{}: {e}", path.display())))?;
            w.validate()?;
            w
        }
        None => LossWeights::default(),
    };
    let loaded = load_all(args)?;

    let report = match args.mode {
        Mode::Semi => {
            let inputs = SemiSupervisedInputs {
                flow_supervision: loaded.flow_sup.as_ref().map(|(p, gt, v)| Supervision {
                    pred_pyramid: p,
                    gt,
                    valid: v,
                }),
                disp_supervision: loaded.disp_sup.as_ref().map(|(p, gt, v)| Supervision {
                    pred_pyramid: p,
                    gt,
                    valid: v,
                }),
                flow_occ_pyramid: loaded.occ_flow_pyr.as_deref(),
                flow_occ_pseudo_gt: loaded.gt_occ_flow.as_ref(),
                disp_occ_pyramid: loaded.occ_disp_pyr.as_deref(),
                disp_occ_pseudo_gt: loaded.gt_occ_disp.as_ref(),
                student_seg: loaded.student.as_ref(),
                teacher_logits: loaded.logits.as_ref(),
                seg_valid: None,
                image1: loaded.image1.as_ref(),
                image2: loaded.image2.as_ref(),
                image_left: loaded.image_left.as_ref(),
                image_right: loaded.image_right.as_ref(),
                flow: loaded.flow.as_ref(),
                disparity: loaded.disparity.as_ref(),
                occ_flow: loaded.occ_flow.as_ref(),
                occ_disp: loaded.occ_disp.as_ref(),
                seg1: loaded.seg1.as_ref(),
                seg2: loaded.seg2.as_ref(),
                seg_left: loaded.seg_left.as_ref(),
                seg_right: loaded.seg_right.as_ref(),
            };
            total_semi_supervised(&inputs, &weights)?
        }
        Mode::Pretrain => {
            let inputs = PretrainInputs {
                flow_supervision: loaded.flow_sup.as_ref().map(|(p, gt, v)| Supervision {
                    pred_pyramid: p,
                    gt,
                    valid: v,
                }),
                disp_supervision: loaded.disp_sup.as_ref().map(|(p, gt, v)| Supervision {
                    pred_pyramid: p,
                    gt,
                    valid: v,
                }),
                flow_occ_pyramid: loaded.occ_flow_pyr.as_deref(),
                flow_occ_gt: loaded.gt_occ_flow.as_ref(),
                flow_occ_valid: None,
                disp_occ_pyramid: loaded.occ_disp_pyr.as_deref(),
                disp_occ_gt: loaded.gt_occ_disp.as_ref(),
                disp_occ_valid: None,
            };
            pretrain_supervised(&inputs, &weights)?
        }
    };

    emit(&report, args.format)?;
    Ok(())
}

fn emit(report: &LossReport, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let line = serde_json::to_string(report)
                .map_err(|e| senseflow_core::Error::Format(e.to_string()))?;
            println!("{line}");
        }
        Format::Csv => {
            println!(
                "flow,disparity,flow_occlusion,disp_occlusion,flow_occ_distill,\
                 disp_occ_distill,seg_distill,photometric,semantic,ssim,\
                 regularization,total"
            );
            println!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_cell(report.flow),
                csv_cell(report.disparity),
                csv_cell(report.flow_occlusion),
                csv_cell(report.disp_occlusion),
                csv_cell(report.flow_occ_distill),
                csv_cell(report.disp_occ_distill),
                csv_cell(report.seg_distill),
                csv_cell(report.photometric),
                csv_cell(report.semantic),
                csv_cell(report.ssim),
                csv_cell(report.regularization),
                report.total,
            );
        }
    }
    Ok(())
}
