//! `senseflow costvol`: correlation cost volume between two feature maps.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use senseflow_core::costvol::{correlation_1d, correlation_2d};
use senseflow_core::io;

use super::{load_pfm, CliError};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Horizontal-only search, 2k+1 channels (rectified stereo).
    #[value(name = "1d")]
    OneD,
    /// Full-window search, (2k+1)^2 channels (optical flow).
    #[value(name = "2d")]
    TwoD,
}

#[derive(Args)]
pub struct CostvolArgs {
    /// First / left feature map (multi-channel PFM).
    #[arg(long)]
    left: PathBuf,
    /// Second / right feature map (multi-channel PFM).
    #[arg(long)]
    right: PathBuf,
    /// Search radius k in pixels.
    #[arg(long, default_value_t = 4)]
    radius: usize,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Output cost volume (multi-channel PFM).
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: &CostvolArgs) -> Result<(), CliError> {
    let left = load_pfm(&args.left)?;
    let right = load_pfm(&args.right)?;
    let volume = match args.mode {
        Mode::OneD => correlation_1d(&left, &right, args.radius)?,
        Mode::TwoD => correlation_2d(&left, &right, args.radius)?,
    };
    io::write_pfm(&args.out, volume.map())?;
    Ok(())
}
