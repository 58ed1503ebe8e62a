//! `senseflow synth`: render a scene config into a full file bundle.

use std::path::PathBuf;

use clap::Args;
use senseflow_core::io::{self, FileBundleManifest, MapFormat};
use senseflow_core::map::ValidityMask;
use senseflow_core::synth::{render_scene, SceneSpec};

use super::CliError;

const EXAMPLE_SPEC: &str = r#"# Synthetic rigid scene description.
# Units: meters for geometry, pixels for intrinsics.
width = 320
height = 240
seed = 7

# Ego-motion twist [wx, wy, wz, vx, vy, vz] applied to static points:
# X2 = exp(ego) * X1 in second-frame camera coordinates.
ego = [0.002, -0.004, 0.001, 0.05, 0.0, 0.1]

[camera]
fx = 400.0
fy = 400.0
cx = 159.5
cy = 119.5
baseline = 0.5

# Planes n . X = offset in first-frame left-camera coordinates.
[[planes]]
normal = [0.02, 0.01, 1.0]
offset = 9.0
label = 0
texture_seed = 1
texture_scale = 6.0

[[planes]]
normal = [0.25, 0.0, 1.0]
offset = 9.0
label = 13           # CityScapes car: excluded from the rigid mask
motion = [0.0, 0.0, 0.0, -0.08, 0.0, 0.0]
texture_seed = 2
texture_scale = 6.0
"#;

#[derive(Args)]
pub struct SynthArgs {
    /// Scene description (TOML).
    #[arg(long, required_unless_present = "print_example")]
    config: Option<PathBuf>,
    /// Output directory for the rendered bundle.
    #[arg(long, required_unless_present = "print_example")]
    out_dir: Option<PathBuf>,
    /// Print a documented example scene config and exit.
    #[arg(long)]
    print_example: bool,
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    if args.print_example {
        print!("{EXAMPLE_SPEC}");
        return Ok(());
    }
    let config = args.config.as_ref().expect("clap enforces --config");
    let out_dir = args.out_dir.as_ref().expect("clap enforces --out-dir");

    let text = std::fs::read_to_string(config)?;
    let spec: SceneSpec = toml::from_str(&text)
        .map_err(|e| senseflow_core::Error::Format(format!("{}: {e}", config.display())))?;
    let bundle = render_scene(&spec)?;
    std::fs::create_dir_all(out_dir)?;

    let all_valid = ValidityMask::all_ones(spec.height, spec.width);
    let mut manifest = FileBundleManifest::default();
    let add = |manifest: &mut FileBundleManifest, role: &str, name: &str, fmt: MapFormat| {
        manifest.push(role, out_dir.join(name), fmt);
    };

    io::write_pfm(out_dir.join("image1_left.pfm"), &bundle.image1_left)?;
    add(&mut manifest, "image1_left", "image1_left.pfm", MapFormat::Pfm);
    io::write_pfm(out_dir.join("image2_left.pfm"), &bundle.image2_left)?;
    add(&mut manifest, "image2_left", "image2_left.pfm", MapFormat::Pfm);
    io::write_pfm(out_dir.join("image1_right.pfm"), &bundle.image1_right)?;
    add(&mut manifest, "image1_right", "image1_right.pfm", MapFormat::Pfm);

    io::write_kitti_disp_png(out_dir.join("disp1.png"), &bundle.disp1, &all_valid)?;
    add(&mut manifest, "disp1", "disp1.png", MapFormat::KittiDispPng);
    io::write_kitti_disp_png(out_dir.join("disp2.png"), &bundle.disp2, &all_valid)?;
    add(&mut manifest, "disp2", "disp2.png", MapFormat::KittiDispPng);
    io::write_kitti_disp_png(
        out_dir.join("disp2_warped.png"),
        &bundle.disp2_warped,
        &all_valid,
    )?;
    add(
        &mut manifest,
        "disp2_warped",
        "disp2_warped.png",
        MapFormat::KittiDispPng,
    );

    io::write_kitti_flow_png(out_dir.join("flow.png"), &bundle.flow, &all_valid)?;
    add(&mut manifest, "flow", "flow.png", MapFormat::KittiFlowPng);

    io::write_pfm(out_dir.join("occ_flow.pfm"), bundle.occ_flow.map())?;
    add(&mut manifest, "occ_flow", "occ_flow.pfm", MapFormat::Pfm);
    io::write_pfm(out_dir.join("occ_disp.pfm"), bundle.occ_disp.map())?;
    add(&mut manifest, "occ_disp", "occ_disp.pfm", MapFormat::Pfm);

    io::write_label_png(out_dir.join("labels.png"), &bundle.labels)?;
    add(&mut manifest, "labels", "labels.png", MapFormat::LabelPng);

    io::write_intrinsics(out_dir.join("intrinsics.txt"), &spec.camera)?;
    manifest.intrinsics = Some(out_dir.join("intrinsics.txt"));

    let manifest_text = toml::to_string_pretty(&manifest)
        .map_err(|e| senseflow_core::Error::Format(format!("manifest: {e}")))?;
    std::fs::write(out_dir.join("manifest.toml"), manifest_text)?;
    manifest.validate()?;

    println!("wrote bundle to {}", out_dir.display());
    Ok(())
}
