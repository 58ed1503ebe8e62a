//! Subcommand implementations and the shared file-loading helpers.

mod costvol;
mod loss;
mod metrics;
mod refine;
mod synth;
mod warp;

use std::fmt;
use std::path::Path;

use clap::Subcommand;
use senseflow_core::map::{DisparityMap, FlowField, ValidityMask};
use senseflow_core::{io, DenseMap};

#[derive(Subcommand)]
pub enum Command {
    /// Render a synthetic rigid scene with exact ground truth.
    Synth(synth::SynthArgs),
    /// Rigidity-based scene-flow refinement (ego-motion + compositions).
    Refine(refine::RefineArgs),
    /// KITTI-style flow / disparity / scene-flow metrics.
    Metrics(metrics::MetricsArgs),
    /// Evaluate the semi-supervised or pre-training loss on dense maps.
    Loss(loss::LossArgs),
    /// Warp a dense map along a flow field or disparity map.
    Warp(warp::WarpArgs),
    /// Correlation cost volume between two feature maps.
    Costvol(costvol::CostvolArgs),
}

impl Command {
    pub fn run(&self) -> Result<(), CliError> {
        match self {
            Command::Synth(args) => synth::run(args),
            Command::Refine(args) => refine::run(args),
            Command::Metrics(args) => metrics::run(args),
            Command::Loss(args) => loss::run(args),
            Command::Warp(args) => warp::run(args),
            Command::Costvol(args) => costvol::run(args),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(senseflow_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => e.exit_code(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<senseflow_core::Error> for CliError {
    fn from(e: senseflow_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(senseflow_core::Error::Io(e))
    }
}

/// Worker cap from `SENSEFLOW_THREADS` (0 or unset = auto).
pub fn worker_count() -> usize {
    let auto = || {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    };
    match std::env::var("SENSEFLOW_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => auto(),
            Ok(n) => n,
        },
        Err(_) => auto(),
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case(ext))
        .unwrap_or(false)
}

/// Loads a flow field from a KITTI PNG (with its validity) or a 2-channel
/// PFM (all pixels valid).
pub fn load_flow(path: &Path) -> Result<(FlowField, ValidityMask), CliError> {
    if has_extension(path, "png") {
        Ok(io::read_kitti_flow_png(path)?)
    } else {
        let map = io::read_pfm(path)?;
        let valid = ValidityMask::all_ones(map.height(), map.width());
        Ok((FlowField::new(map)?, valid))
    }
}

/// Loads a disparity map from a KITTI PNG or a 1-channel PFM.
pub fn load_disparity(path: &Path) -> Result<(DisparityMap, ValidityMask), CliError> {
    if has_extension(path, "png") {
        Ok(io::read_kitti_disp_png(path)?)
    } else {
        let map = io::read_pfm(path)?;
        let valid = ValidityMask::all_ones(map.height(), map.width());
        Ok((DisparityMap::new(map)?, valid))
    }
}

/// Loads a binary mask from an 8-bit PNG (nonzero = set) or a 1-channel PFM.
pub fn load_mask(path: &Path) -> Result<ValidityMask, CliError> {
    let map = if has_extension(path, "png") {
        io::read_label_png(path)?
    } else {
        io::read_pfm(path)?
    };
    let mut mask = ValidityMask::all_zeros(map.height(), map.width());
    for y in 0..map.height() {
        for x in 0..map.width() {
            mask.set_flag(x, y, map.get(x, y, 0) != 0.0);
        }
    }
    Ok(mask)
}

pub fn load_pfm(path: &Path) -> Result<DenseMap, CliError> {
    Ok(io::read_pfm(path)?)
}

/// Formats a float for CSV output; empty string for absent values.
pub fn csv_cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}
