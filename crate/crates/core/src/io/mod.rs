//! File interchange: PFM dense maps, KITTI 16-bit PNG flow/disparity, 8-bit
//! label PNGs, the plain-text intrinsics file, and the bundle manifest that
//! names which file plays which role.

mod kitti;
mod pfm;

pub use kitti::{
    read_kitti_disp_png, read_kitti_flow_png, read_label_png, write_kitti_disp_png,
    write_kitti_flow_png, write_label_png,
};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};

use std::path::{Path, PathBuf};

use crate::camera::StereoCamera;
use crate::error::{Error, Result};

/// Reads the 5-number intrinsics line `fx fy cx cy baseline`.
pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<StereoCamera> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad intrinsics token {t:?}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != 5 {
        return Err(Error::Format(format!(
            "intrinsics file must hold exactly 5 numbers, got {}",
            values.len()
        )));
    }
    StereoCamera::new(values[0], values[1], values[2], values[3], values[4])
}

pub fn write_intrinsics(path: impl AsRef<Path>, cam: &StereoCamera) -> Result<()> {
    std::fs::write(
        path,
        format!("{} {} {} {} {}\n", cam.fx, cam.fy, cam.cx, cam.cy, cam.baseline),
    )?;
    Ok(())
}

/// On-disk format of one manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFormat {
    Pfm,
    KittiFlowPng,
    KittiDispPng,
    LabelPng,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub role: String,
    pub path: PathBuf,
    pub format: MapFormat,
}

/// Named map roles to file paths for a rendered or captured bundle.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FileBundleManifest {
    pub entries: Vec<ManifestEntry>,
    pub intrinsics: Option<PathBuf>,
}

impl FileBundleManifest {
    pub fn push(&mut self, role: &str, path: PathBuf, format: MapFormat) {
        self.entries.push(ManifestEntry {
            role: role.to_string(),
            path,
            format,
        });
    }

    pub fn path_for(&self, role: &str) -> Option<&Path> {
        self.entries
            .iter()
            .find(|e| e.role == role)
            .map(|e| e.path.as_path())
    }

    /// Errors unless every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        for entry in &self.entries {
            if !entry.path.is_file() {
                return Err(Error::Format(format!(
                    "manifest role {:?} points to missing file {}",
                    entry.role,
                    entry.path.display()
                )));
            }
        }
        if let Some(p) = &self.intrinsics {
            if !p.is_file() {
                return Err(Error::Format(format!(
                    "manifest intrinsics file {} is missing",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}
