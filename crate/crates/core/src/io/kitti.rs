//! KITTI PNG interchange: 16-bit flow and disparity maps and 8-bit label
//! maps.
//!
//! Flow: 16-bit RGB with `u = (R - 2^15) / 64`, `v = (G - 2^15) / 64`,
//! valid where `B != 0`. Disparity: 16-bit grayscale with `d = pixel / 256`,
//! pixel 0 meaning invalid. Writers invert the formulas exactly, so round
//! trips are bit-identical for representable values; invalid pixels are
//! normalized to the zero encoding.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageReader, Luma, Rgb};

use crate::error::{Error, Result};
use crate::map::{DenseMap, DisparityMap, FlowField, ValidityMask};

const FLOW_OFFSET: f64 = 32768.0;
const FLOW_SCALE: f64 = 64.0;
const DISP_SCALE: f64 = 256.0;

fn open(path: &Path) -> Result<DynamicImage> {
    ImageReader::open(path)?
        .decode()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_kitti_flow_png(path: impl AsRef<Path>) -> Result<(FlowField, ValidityMask)> {
    let path = path.as_ref();
    let img = match open(path)? {
        DynamicImage::ImageRgb16(img) => img,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 16-bit 3-channel PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut flow = FlowField::zeros(h, w);
    let mut valid = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let Rgb([r, g, b]) = *img.get_pixel(x as u32, y as u32);
            if b != 0 {
                flow.set_uv(
                    x,
                    y,
                    (r as f64 - FLOW_OFFSET) / FLOW_SCALE,
                    (g as f64 - FLOW_OFFSET) / FLOW_SCALE,
                );
                valid.set_flag(x, y, true);
            }
        }
    }
    Ok((flow, valid))
}

pub fn write_kitti_flow_png(
    path: impl AsRef<Path>,
    flow: &FlowField,
    valid: &ValidityMask,
) -> Result<()> {
    flow.map().check_same_shape(valid.map(), "flow vs validity")?;
    let (w, h) = (flow.width(), flow.height());
    let mut img: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let px = if valid.is_set(x, y) {
                let (u, v) = flow.uv(x, y);
                let r = (u * FLOW_SCALE + FLOW_OFFSET).round().clamp(0.0, 65535.0);
                let g = (v * FLOW_SCALE + FLOW_OFFSET).round().clamp(0.0, 65535.0);
                Rgb([r as u16, g as u16, 1])
            } else {
                Rgb([FLOW_OFFSET as u16, FLOW_OFFSET as u16, 0])
            };
            img.put_pixel(x as u32, y as u32, px);
        }
    }
    DynamicImage::ImageRgb16(img)
        .save(path.as_ref())
        .map_err(|e| Error::Format(format!("{}: {e}", path.as_ref().display())))
}

pub fn read_kitti_disp_png(path: impl AsRef<Path>) -> Result<(DisparityMap, ValidityMask)> {
    let path = path.as_ref();
    let img = match open(path)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 16-bit single-channel PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut disp = DisparityMap::zeros(h, w);
    let mut valid = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let Luma([raw]) = *img.get_pixel(x as u32, y as u32);
            if raw != 0 {
                disp.set_value(x, y, raw as f64 / DISP_SCALE);
                valid.set_flag(x, y, true);
            }
        }
    }
    Ok((disp, valid))
}

pub fn write_kitti_disp_png(
    path: impl AsRef<Path>,
    disp: &DisparityMap,
    valid: &ValidityMask,
) -> Result<()> {
    disp.map().check_same_shape(valid.map(), "disparity vs validity")?;
    let (w, h) = (disp.width(), disp.height());
    let mut img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let raw = if valid.is_set(x, y) {
                (disp.value(x, y) * DISP_SCALE).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            img.put_pixel(x as u32, y as u32, Luma([raw]));
        }
    }
    DynamicImage::ImageLuma16(img)
        .save(path.as_ref())
        .map_err(|e| Error::Format(format!("{}: {e}", path.as_ref().display())))
}

/// Reads an 8-bit grayscale label map into a single-channel map of ids.
pub fn read_label_png(path: impl AsRef<Path>) -> Result<DenseMap> {
    let path = path.as_ref();
    let img = match open(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 8-bit single-channel PNG, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(DenseMap::from_fn(h, w, 1, |x, y, _| {
        img.get_pixel(x as u32, y as u32).0[0] as f64
    }))
}

/// Writes a single-channel map of integral ids in `0..=255`.
pub fn write_label_png(path: impl AsRef<Path>, labels: &DenseMap) -> Result<()> {
    if labels.channels() != 1 {
        return Err(Error::InvalidArgument("label map needs 1 channel".into()));
    }
    let (w, h) = (labels.width(), labels.height());
    let mut img = GrayImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let v = labels.get(x, y, 0);
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "label at ({x}, {y}) is not an 8-bit id: {v}"
                )));
            }
            img.put_pixel(x as u32, y as u32, Luma([v as u8]));
        }
    }
    img.save(path.as_ref())
        .map_err(|e| Error::Format(format!("{}: {e}", path.as_ref().display())))
}
