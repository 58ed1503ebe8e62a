//! Rectified pinhole stereo geometry.
//!
//! Depth and disparity are linked by `z = fx * b / d`; the inverse depth
//! used by the rigid solver is `p_d = d / (fx * b)`.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Pinhole intrinsics plus stereo baseline. Focal lengths, principal point,
/// and baseline are in pixels, pixels, and meters respectively.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StereoCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub baseline: f64,
}

impl StereoCamera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, baseline: f64) -> Result<Self> {
        if fx <= 0.0 || fy <= 0.0 || baseline <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "focal lengths and baseline must be positive: fx={fx}, fy={fy}, b={baseline}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            baseline,
        })
    }

    /// Product `fx * baseline`, the depth-disparity conversion constant.
    #[inline]
    pub fn fxb(&self) -> f64 {
        self.fx * self.baseline
    }

    /// Lifts pixel `(x, y)` with disparity `d > 0` to a 3D point with depth
    /// `z = fx * b / d`.
    pub fn backproject(&self, x: f64, y: f64, d: f64) -> Result<Vector3<f64>> {
        if d <= 0.0 {
            return Err(Error::Domain(format!("disparity must be positive, got {d}")));
        }
        let z = self.fxb() / d;
        Ok(Vector3::new(
            (x - self.cx) / self.fx * z,
            (y - self.cy) / self.fy * z,
            z,
        ))
    }

    /// Inverse depth `p_d = d / (fx * b)` of a disparity.
    #[inline]
    pub fn inverse_depth(&self, d: f64) -> f64 {
        d / self.fxb()
    }

    /// Projects a point with `z > 0` to `(pixel_x, pixel_y, disparity)`.
    pub fn project(&self, p: &Vector3<f64>) -> Result<(f64, f64, f64)> {
        if p.z <= 0.0 {
            return Err(Error::Domain(format!(
                "point behind camera: z = {}",
                p.z
            )));
        }
        Ok((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            self.fxb() / p.z,
        ))
    }

    /// Normalized image coordinates `((x - cx) / fx, (y - cy) / fy)`.
    #[inline]
    pub fn normalized(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.cx) / self.fx, (y - self.cy) / self.fy)
    }
}
