//! Occlusion-modulated warped-L1 consistency terms and their analytic
//! gradients with respect to the warping field.

use crate::error::Result;
use crate::map::{DenseMap, DisparityMap, FlowField, OcclusionMask, SegPosterior};
use crate::warp::{sample_bilinear, sample_bilinear_grad};

/// The correspondence field driving a consistency term: temporal flow or
/// stereo disparity (sampled at `(x - d, y)`).
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Flow(&'a FlowField),
    Disparity(&'a DisparityMap),
}

impl<'a> FieldRef<'a> {
    pub(crate) fn map(&self) -> &'a DenseMap {
        match self {
            FieldRef::Flow(f) => f.map(),
            FieldRef::Disparity(d) => d.map(),
        }
    }

    #[inline]
    fn sample_pos(&self, x: usize, y: usize) -> (f64, f64) {
        match self {
            FieldRef::Flow(f) => {
                let (u, v) = f.uv(x, y);
                (x as f64 + u, y as f64 + v)
            }
            FieldRef::Disparity(d) => (x as f64 - d.value(x, y), y as f64),
        }
    }

    fn channels(&self) -> usize {
        match self {
            FieldRef::Flow(_) => 2,
            FieldRef::Disparity(_) => 1,
        }
    }
}

/// Loss value plus gradients with respect to the field (same channel count
/// as the field) and the occlusion mask.
#[derive(Debug, Clone)]
pub struct ConsistencyGrad {
    pub loss: f64,
    pub field_grad: DenseMap,
    pub occlusion_grad: DenseMap,
}

fn check_shapes(
    reference: &DenseMap,
    other: &DenseMap,
    field: &FieldRef,
    occlusion: &OcclusionMask,
) -> Result<()> {
    reference.check_same_shape(other, "consistency images")?;
    reference.check_same_shape(field.map(), "consistency field")?;
    reference.check_same_shape(occlusion.map(), "consistency occlusion")?;
    Ok(())
}

/// `sum_p (1 - O(p)) * inbounds(p) * sum_c |ref(p, c) - other(p + field)(c)|`.
fn warped_l1(
    reference: &DenseMap,
    other: &DenseMap,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<f64> {
    check_shapes(reference, other, &field, occlusion)?;
    let (h, w, c) = (reference.height(), reference.width(), reference.channels());
    let mut buf = vec![0.0; c];
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let weight = 1.0 - occlusion.value(x, y);
            if weight == 0.0 {
                continue;
            }
            let (sx, sy) = field.sample_pos(x, y);
            if !sample_bilinear(other, sx, sy, &mut buf) {
                continue;
            }
            let r = reference.pixel(x, y);
            let mut l1 = 0.0;
            for ch in 0..c {
                l1 += (r[ch] - buf[ch]).abs();
            }
            total += weight * l1;
        }
    }
    Ok(total)
}

fn warped_l1_grad(
    reference: &DenseMap,
    other: &DenseMap,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<ConsistencyGrad> {
    check_shapes(reference, other, &field, occlusion)?;
    let (h, w, c) = (reference.height(), reference.width(), reference.channels());
    let mut vals = vec![0.0; c];
    let mut ddx = vec![0.0; c];
    let mut ddy = vec![0.0; c];
    let mut loss = 0.0;
    let mut field_grad = DenseMap::new(h, w, field.channels());
    let mut occlusion_grad = DenseMap::new(h, w, 1);
    for y in 0..h {
        for x in 0..w {
            let weight = 1.0 - occlusion.value(x, y);
            let (sx, sy) = field.sample_pos(x, y);
            if !sample_bilinear_grad(other, sx, sy, &mut vals, &mut ddx, &mut ddy) {
                continue;
            }
            let r = reference.pixel(x, y);
            let mut l1 = 0.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for ch in 0..c {
                let res = r[ch] - vals[ch];
                l1 += res.abs();
                // d|res|/d(sample) = -sign(res) * dS/d(sample); sign(0) = 0.
                let s = if res > 0.0 {
                    1.0
                } else if res < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                gx -= s * ddx[ch];
                gy -= s * ddy[ch];
            }
            loss += weight * l1;
            occlusion_grad.set(x, y, 0, -l1);
            match field {
                FieldRef::Flow(_) => {
                    field_grad.set(x, y, 0, weight * gx);
                    field_grad.set(x, y, 1, weight * gy);
                }
                FieldRef::Disparity(_) => {
                    // sx = x - d, so d(loss)/dd = -d(loss)/dsx.
                    field_grad.set(x, y, 0, -weight * gx);
                }
            }
        }
    }
    Ok(ConsistencyGrad {
        loss,
        field_grad,
        occlusion_grad,
    })
}

/// Photometric consistency (one branch): warps `other` onto `reference`
/// along the field and sums occlusion-weighted per-pixel L1 color error.
pub fn photometric_consistency(
    reference: &DenseMap,
    other: &DenseMap,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<f64> {
    warped_l1(reference, other, field, occlusion)
}

/// As [`photometric_consistency`], also returning analytic gradients via the
/// bilinear-warp derivatives.
pub fn photometric_consistency_grad(
    reference: &DenseMap,
    other: &DenseMap,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<ConsistencyGrad> {
    warped_l1_grad(reference, other, field, occlusion)
}

/// Semantic consistency (one branch): identical structure with teacher
/// posterior maps as the payload.
pub fn semantic_consistency(
    reference: &SegPosterior,
    other: &SegPosterior,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<f64> {
    warped_l1(reference.map(), other.map(), field, occlusion)
}

pub fn semantic_consistency_grad(
    reference: &SegPosterior,
    other: &SegPosterior,
    field: FieldRef,
    occlusion: &OcclusionMask,
) -> Result<ConsistencyGrad> {
    warped_l1_grad(reference.map(), other.map(), field, occlusion)
}
