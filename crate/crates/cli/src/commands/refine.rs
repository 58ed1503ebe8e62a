//! `senseflow refine`: rigid-mask + Gauss-Newton ego-motion + compositions.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use senseflow_core::io::{self, FileBundleManifest};
use senseflow_core::map::{DenseMap, DisparityMap, FlowField, ValidityMask};
use senseflow_core::rigid::{refine_scene_flow, GnOptions, RefineOptions};

use super::{load_disparity, load_flow, worker_count, CliError};

#[derive(Args)]
pub struct RefineArgs {
    /// Bundle manifest; individual path flags override its entries.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Measured optical flow (KITTI PNG or 2-channel PFM).
    #[arg(long)]
    flow: Option<PathBuf>,
    /// First-frame disparity (KITTI PNG or PFM).
    #[arg(long)]
    disp1: Option<PathBuf>,
    /// Second-frame disparity on its own grid (KITTI PNG or PFM).
    #[arg(long)]
    disp2: Option<PathBuf>,
    /// Semantic label map (8-bit PNG).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Intrinsics text file: fx fy cx cy baseline.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Maximum Gauss-Newton iterations.
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    /// Stop once the mean weighted residual (or its change) drops here.
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    /// Huber threshold on residual norms, pixels.
    #[arg(long, default_value_t = 1.345)]
    huber_delta: f64,
    /// Levenberg damping (0 = pure Gauss-Newton).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    /// Erosion size applied to the rigid mask.
    #[arg(long, default_value_t = 10)]
    erosion: usize,
    /// Comma-separated label ids excluded from the rigid mask.
    #[arg(long, value_delimiter = ',')]
    dynamic_ids: Option<Vec<u32>>,
}

fn resolve(
    flag: &Option<PathBuf>,
    manifest: Option<&FileBundleManifest>,
    role: &str,
) -> Result<PathBuf, CliError> {
    if let Some(p) = flag {
        return Ok(p.clone());
    }
    if let Some(m) = manifest {
        if let Some(p) = m.path_for(role) {
            return Ok(p.to_path_buf());
        }
        if role == "intrinsics" {
            if let Some(p) = &m.intrinsics {
                return Ok(p.clone());
            }
        }
    }
    Err(CliError::usage(format!(
        "missing input: pass --{role} or a manifest that names it"
    )))
}

struct Inputs {
    flow: FlowField,
    disp1: DisparityMap,
    disp2: DisparityMap,
    labels: DenseMap,
}

/// Loads the four dense inputs, concurrently when the worker cap allows.
fn load_inputs(
    flow: &Path,
    disp1: &Path,
    disp2: &Path,
    labels: &Path,
) -> Result<Inputs, CliError> {
    if worker_count() > 1 {
        std::thread::scope(|scope| {
            let flow = scope.spawn(|| load_flow(flow));
            let disp1 = scope.spawn(|| load_disparity(disp1));
            let disp2 = scope.spawn(|| load_disparity(disp2));
            let labels = scope.spawn(|| io::read_label_png(labels));
            Ok(Inputs {
                flow: flow.join().expect("loader panicked")?.0,
                disp1: disp1.join().expect("loader panicked")?.0,
                disp2: disp2.join().expect("loader panicked")?.0,
                labels: labels.join().expect("loader panicked")?,
            })
        })
    } else {
        Ok(Inputs {
            flow: load_flow(flow)?.0,
            disp1: load_disparity(disp1)?.0,
            disp2: load_disparity(disp2)?.0,
            labels: io::read_label_png(labels)?,
        })
    }
}

pub fn run(args: &RefineArgs) -> Result<(), CliError> {
    let manifest = match &args.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let m: FileBundleManifest = toml::from_str(&text)
                .map_err(|e| senseflow_core::Error::Format(format!("{}: {e}", path.display())))?;
            m.validate()?;
            Some(m)
        }
        None => None,
    };
    let m = manifest.as_ref();
    let inputs = load_inputs(
        &resolve(&args.flow, m, "flow")?,
        &resolve(&args.disp1, m, "disp1")?,
        &resolve(&args.disp2, m, "disp2")?,
        &resolve(&args.labels, m, "labels")?,
    )?;
    let cam = io::read_intrinsics(resolve(&args.intrinsics, m, "intrinsics")?)?;

    let mut opts = RefineOptions {
        gn: GnOptions {
            max_iters: args.max_iters,
            residual_tol: args.residual_tol,
            huber_delta: args.huber_delta,
            damping: args.damping,
        },
        erosion: args.erosion,
        ..RefineOptions::default()
    };
    if let Some(ids) = &args.dynamic_ids {
        opts.dynamic_ids = ids.clone();
    }

    let result = refine_scene_flow(
        &inputs.flow,
        &inputs.disp1,
        &inputs.disp2,
        &inputs.labels,
        &cam,
        &opts,
    )?;

    std::fs::create_dir_all(&args.out_dir)?;
    let all_valid = ValidityMask::all_ones(inputs.flow.height(), inputs.flow.width());
    io::write_kitti_flow_png(args.out_dir.join("refined_flow.png"), &result.flow, &all_valid)?;
    io::write_kitti_disp_png(
        args.out_dir.join("warped_disp2.png"),
        &result.warped_disp2,
        &all_valid,
    )?;
    let mask_labels = DenseMap::from_fn(
        result.rigid_mask.height(),
        result.rigid_mask.width(),
        1,
        |x, y, _| result.rigid_mask.is_set(x, y) as u8 as f64,
    );
    io::write_label_png(args.out_dir.join("rigid_mask.png"), &mask_labels)?;

    let mut trace_file = std::fs::File::create(args.out_dir.join("trace.jsonl"))?;
    if let Some(trace) = &result.trace {
        for i in 0..trace.energies.len() {
            let line = serde_json::json!({
                "iteration": i,
                "energy": trace.energies[i],
                "condition": trace.conditions[i],
                "step_norm": trace.step_norms.get(i),
            });
            writeln!(trace_file, "{line}")?;
        }
    }
    let summary = match (&result.ego, &result.trace) {
        (Some(ego), Some(trace)) => {
            let r = ego.rotation();
            serde_json::json!({
                "ego": "estimated",
                "converged": trace.converged,
                "iterations": trace.iterations,
                "rotation": [
                    [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                    [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                    [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
                ],
                "translation": [
                    ego.translation().x,
                    ego.translation().y,
                    ego.translation().z,
                ],
            })
        }
        _ => serde_json::json!({ "ego": "absent" }),
    };
    writeln!(trace_file, "{summary}")?;

    println!("wrote refined maps to {}", args.out_dir.display());
    Ok(())
}
