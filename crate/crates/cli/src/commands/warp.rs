//! `senseflow warp`: apply a dense warp operator to a map.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use senseflow_core::io;
use senseflow_core::map::DenseMap;
use senseflow_core::warp::{
    inverse_warp_disparity, inverse_warp_disparity_via_flow, inverse_warp_flow,
};

use super::{load_disparity, load_flow, load_pfm, CliError};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WarpMode {
    /// Inverse warp along a flow field: out(x) = src(x + F(x)).
    Flow,
    /// Inverse warp along a disparity map: out(x) = src(x - d(x), y).
    Disparity,
    /// Warp a second-frame disparity onto the first frame along the flow.
    ViaFlow,
}

#[derive(Args)]
pub struct WarpArgs {
    #[arg(long, value_enum)]
    mode: WarpMode,
    /// Source map to sample (PFM; for via-flow this is the second-frame
    /// disparity, PFM or KITTI PNG).
    #[arg(long)]
    src: PathBuf,
    /// Warping field: flow (PNG/PFM) for flow and via-flow modes, disparity
    /// (PNG/PFM) for disparity mode.
    #[arg(long)]
    field: PathBuf,
    /// Output PFM for the warped map.
    #[arg(long)]
    out: PathBuf,
    /// Optional output PFM for the in-bounds mask.
    #[arg(long)]
    out_mask: Option<PathBuf>,
}

pub fn run(args: &WarpArgs) -> Result<(), CliError> {
    let result = match args.mode {
        WarpMode::Flow => {
            let src = load_pfm(&args.src)?;
            let (flow, _) = load_flow(&args.field)?;
            inverse_warp_flow(&src, &flow)?
        }
        WarpMode::Disparity => {
            let src = load_pfm(&args.src)?;
            let (disp, _) = load_disparity(&args.field)?;
            inverse_warp_disparity(&src, &disp)?
        }
        WarpMode::ViaFlow => {
            let (disp2, _) = load_disparity(&args.src)?;
            let (flow, _) = load_flow(&args.field)?;
            inverse_warp_disparity_via_flow(&flow, &disp2)?
        }
    };
    io::write_pfm(&args.out, &result.warped)?;
    if let Some(mask_path) = &args.out_mask {
        let mask = DenseMap::from_fn(
            result.inbounds.height(),
            result.inbounds.width(),
            1,
            |x, y, _| result.inbounds.is_set(x, y) as u8 as f64,
        );
        io::write_pfm(mask_path, &mask)?;
    }
    Ok(())
}
