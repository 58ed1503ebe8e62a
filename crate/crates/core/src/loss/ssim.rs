//! Structural-similarity scalar and the occlusion-composited SSIM loss.

use crate::error::{Error, Result};
use crate::map::{DenseMap, DisparityMap, FlowField, OcclusionMask};
use crate::warp::{inverse_warp_disparity, inverse_warp_flow};

use super::LossWeights;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
// Stabilizers for unit dynamic range.
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn gaussian_window() -> [f64; WINDOW * WINDOW] {
    let mut w = [0.0; WINDOW * WINDOW];
    let half = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for i in 0..WINDOW {
        for j in 0..WINDOW {
            let dy = i as f64 - half;
            let dx = j as f64 - half;
            let v = (-(dx * dx + dy * dy) / (2.0 * SIGMA * SIGMA)).exp();
            w[i * WINDOW + j] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean SSIM over all fully supported 11x11 Gaussian windows (sigma 1.5) and
/// all channels, for images in unit dynamic range. Lies in `[-1, 1]`.
pub fn ssim_scalar(a: &DenseMap, b: &DenseMap) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::ShapeMismatch(format!(
            "ssim inputs differ: {}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    if a.height() < WINDOW || a.width() < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} is smaller than the {WINDOW}x{WINDOW} SSIM window",
            a.height(),
            a.width()
        )));
    }
    let weights = gaussian_window();
    let (h, w, c) = (a.height(), a.width(), a.channels());
    let half = WINDOW / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for cy in half..h - half {
        for cx in half..w - half {
            for ch in 0..c {
                let mut mu_a = 0.0;
                let mut mu_b = 0.0;
                let mut aa = 0.0;
                let mut bb = 0.0;
                let mut ab = 0.0;
                for i in 0..WINDOW {
                    for j in 0..WINDOW {
                        let wgt = weights[i * WINDOW + j];
                        let va = a.get(cx + j - half, cy + i - half, ch);
                        let vb = b.get(cx + j - half, cy + i - half, ch);
                        mu_a += wgt * va;
                        mu_b += wgt * vb;
                        aa += wgt * va * va;
                        bb += wgt * vb * vb;
                        ab += wgt * va * vb;
                    }
                }
                let var_a = aa - mu_a * mu_a;
                let var_b = bb - mu_b * mu_b;
                let cov = ab - mu_a * mu_b;
                let ssim = ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
                    / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
                total += ssim;
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// Composite used by the SSIM loss: reference where occluded, warped source
/// elsewhere (element-wise multiplications only).
fn occlusion_composite(
    reference: &DenseMap,
    warped: &DenseMap,
    occlusion: &OcclusionMask,
) -> DenseMap {
    DenseMap::from_fn(
        reference.height(),
        reference.width(),
        reference.channels(),
        |x, y, c| {
            let o = occlusion.value(x, y);
            o * reference.get(x, y, c) + (1.0 - o) * warped.get(x, y, c)
        },
    )
}

/// One branch of the SSIM loss: `1 - SS(reference, composite)`.
pub fn ssim_branch_flow(
    image1: &DenseMap,
    image2: &DenseMap,
    flow: &FlowField,
    occ_flow: &OcclusionMask,
) -> Result<f64> {
    image1.check_same_shape(occ_flow.map(), "ssim occlusion")?;
    let warped = inverse_warp_flow(image2, flow)?;
    let composite = occlusion_composite(image1, &warped.warped, occ_flow);
    Ok(1.0 - ssim_scalar(image1, &composite)?)
}

pub fn ssim_branch_disparity(
    image_left: &DenseMap,
    image_right: &DenseMap,
    disp: &DisparityMap,
    occ_disp: &OcclusionMask,
) -> Result<f64> {
    image_left.check_same_shape(occ_disp.map(), "ssim occlusion")?;
    let warped = inverse_warp_disparity(image_right, disp)?;
    let composite = occlusion_composite(image_left, &warped.warped, occ_disp);
    Ok(1.0 - ssim_scalar(image_left, &composite)?)
}

/// Full SSIM loss, both branches weighted:
/// `gamma_D (1 - SS(I_l, comp_D)) + gamma_F (1 - SS(I_1, comp_F))`.
#[allow(clippy::too_many_arguments)]
pub fn ssim_loss(
    image1: &DenseMap,
    image2: &DenseMap,
    flow: &FlowField,
    occ_flow: &OcclusionMask,
    image_left: &DenseMap,
    image_right: &DenseMap,
    disp: &DisparityMap,
    occ_disp: &OcclusionMask,
    weights: &LossWeights,
) -> Result<f64> {
    let flow_term = ssim_branch_flow(image1, image2, flow, occ_flow)?;
    let disp_term = ssim_branch_disparity(image_left, image_right, disp, occ_disp)?;
    Ok(weights.gamma_disp * disp_term + weights.gamma_flow * flow_term)
}
