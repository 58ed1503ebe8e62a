//! Dense warping operators.
//!
//! All inverse warps share one bilinear sampler with clamp-to-edge border
//! handling plus an in-bounds mask, so downstream losses can exclude border
//! pixels without ever seeing NaNs. The forward disparity warp splats to the
//! nearest integer pixel and resolves collisions by keeping the largest
//! disparity (nearest surface wins).

use crate::camera::StereoCamera;
use crate::error::Result;
use crate::map::{DenseMap, DisparityMap, FlowField, ValidityMask};
use crate::se3::RigidTransform;

/// A warped map plus the mask of pixels whose sample position stayed inside
/// the source image.
#[derive(Debug, Clone)]
pub struct WarpResult {
    pub warped: DenseMap,
    pub inbounds: ValidityMask,
}

/// Rigid flow induced by a camera transform, with the transformed disparity
/// and the mask of pixels where the chain was defined (positive source
/// disparity, transformed point in front of the camera).
#[derive(Debug, Clone)]
pub struct RigidFlowResult {
    pub flow: FlowField,
    pub disparity: DisparityMap,
    pub valid: ValidityMask,
}

/// Bilinear sample of every channel at `(sx, sy)`, clamped to the image
/// border. Returns whether the sample position lies inside
/// `[0, w-1] x [0, h-1]`, i.e. all contributing taps are real pixels.
#[inline]
pub(crate) fn sample_bilinear(src: &DenseMap, sx: f64, sy: f64, out: &mut [f64]) -> bool {
    let (w, h) = (src.width(), src.height());
    let inbounds = sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64;
    let cx = sx.clamp(0.0, (w - 1) as f64);
    let cy = sy.clamp(0.0, (h - 1) as f64);
    let x0 = if w >= 2 { (cx.floor() as usize).min(w - 2) } else { 0 };
    let y0 = if h >= 2 { (cy.floor() as usize).min(h - 2) } else { 0 };
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = cx - x0 as f64;
    let fy = cy - y0 as f64;

    let p00 = src.pixel(x0, y0);
    let p01 = src.pixel(x1, y0);
    let p10 = src.pixel(x0, y1);
    let p11 = src.pixel(x1, y1);
    for c in 0..src.channels() {
        out[c] = (1.0 - fy) * ((1.0 - fx) * p00[c] + fx * p01[c])
            + fy * ((1.0 - fx) * p10[c] + fx * p11[c]);
    }
    inbounds
}

/// As [`sample_bilinear`], additionally writing the derivative of each
/// channel with respect to the sample coordinates. Derivatives are the
/// in-cell bilinear ones; they are zeroed when the position is clamped.
#[inline]
pub(crate) fn sample_bilinear_grad(
    src: &DenseMap,
    sx: f64,
    sy: f64,
    out: &mut [f64],
    d_dx: &mut [f64],
    d_dy: &mut [f64],
) -> bool {
    let (w, h) = (src.width(), src.height());
    let inbounds = sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64;
    let cx = sx.clamp(0.0, (w - 1) as f64);
    let cy = sy.clamp(0.0, (h - 1) as f64);
    let x0 = if w >= 2 { (cx.floor() as usize).min(w - 2) } else { 0 };
    let y0 = if h >= 2 { (cy.floor() as usize).min(h - 2) } else { 0 };
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = cx - x0 as f64;
    let fy = cy - y0 as f64;
    let clamped_x = sx != cx;
    let clamped_y = sy != cy;

    let p00 = src.pixel(x0, y0);
    let p01 = src.pixel(x1, y0);
    let p10 = src.pixel(x0, y1);
    let p11 = src.pixel(x1, y1);
    for c in 0..src.channels() {
        out[c] = (1.0 - fy) * ((1.0 - fx) * p00[c] + fx * p01[c])
            + fy * ((1.0 - fx) * p10[c] + fx * p11[c]);
        d_dx[c] = if clamped_x {
            0.0
        } else {
            (1.0 - fy) * (p01[c] - p00[c]) + fy * (p11[c] - p10[c])
        };
        d_dy[c] = if clamped_y {
            0.0
        } else {
            (1.0 - fx) * (p10[c] - p00[c]) + fx * (p11[c] - p01[c])
        };
    }
    inbounds
}

/// Inverse warp: `warped(x, y) = src(x + u, y + v)` with bilinear sampling.
pub fn inverse_warp_flow(src: &DenseMap, flow: &FlowField) -> Result<WarpResult> {
    src.check_same_shape(flow.map(), "inverse_warp_flow")?;
    let (h, w, c) = (src.height(), src.width(), src.channels());
    let mut warped = DenseMap::new(h, w, c);
    let mut inbounds = ValidityMask::all_zeros(h, w);
    let mut buf = vec![0.0; c];
    for y in 0..h {
        for x in 0..w {
            let (u, v) = flow.uv(x, y);
            let inside = sample_bilinear(src, x as f64 + u, y as f64 + v, &mut buf);
            for (ch, &val) in buf.iter().enumerate() {
                warped.set(x, y, ch, val);
            }
            inbounds.set_flag(x, y, inside);
        }
    }
    Ok(WarpResult { warped, inbounds })
}

/// Inverse warp of the right image onto the left grid: flow `(-d, 0)`.
pub fn inverse_warp_disparity(right: &DenseMap, disp: &DisparityMap) -> Result<WarpResult> {
    right.check_same_shape(disp.map(), "inverse_warp_disparity")?;
    let flow = disparity_as_flow(disp);
    inverse_warp_flow(right, &flow)
}

/// Warps the second-frame disparity onto the first frame along the flow:
/// `D2_W(x) = D2(x + F(x))`.
pub fn inverse_warp_disparity_via_flow(
    flow1: &FlowField,
    disp2: &DisparityMap,
) -> Result<WarpResult> {
    disp2.map().check_same_shape(flow1.map(), "inverse_warp_disparity_via_flow")?;
    inverse_warp_flow(disp2.map(), flow1)
}

/// The flow equivalent of a disparity map: `(-d, 0)` per pixel.
pub fn disparity_as_flow(disp: &DisparityMap) -> FlowField {
    let (h, w) = (disp.height(), disp.width());
    let mut flow = FlowField::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            flow.set_uv(x, y, -disp.value(x, y), 0.0);
        }
    }
    flow
}

/// Flow induced on every pixel by a rigid camera transform:
/// backproject with `disp1`, transform by `xi`, project, subtract the pixel.
/// The second output is the transformed point's disparity.
pub fn rigid_flow(
    xi: &RigidTransform,
    disp1: &DisparityMap,
    cam: &StereoCamera,
) -> RigidFlowResult {
    let (h, w) = (disp1.height(), disp1.width());
    let mut flow = FlowField::zeros(h, w);
    let mut disparity = DisparityMap::zeros(h, w);
    let mut valid = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let d = disp1.value(x, y);
            if d <= 0.0 {
                continue;
            }
            let p = match cam.backproject(x as f64, y as f64, d) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let q = xi.apply(&p);
            match cam.project(&q) {
                Ok((px, py, pd)) => {
                    flow.set_uv(x, y, px - x as f64, py - y as f64);
                    disparity.set_value(x, y, pd);
                    valid.set_flag(x, y, true);
                }
                Err(_) => {
                    // Behind the camera: leave the pixel invalid.
                }
            }
        }
    }
    RigidFlowResult {
        flow,
        disparity,
        valid,
    }
}

/// Forward-warps the first-frame disparity into the second frame: each
/// source pixel's transformed disparity is splatted onto the nearest integer
/// target pixel; collisions keep the largest disparity, unhit pixels stay
/// invalid.
pub fn forward_warp_disparity(
    disp1: &DisparityMap,
    xi: &RigidTransform,
    cam: &StereoCamera,
) -> (DisparityMap, ValidityMask) {
    let (h, w) = (disp1.height(), disp1.width());
    let mut out = DisparityMap::zeros(h, w);
    let mut valid = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let d = disp1.value(x, y);
            if d <= 0.0 {
                continue;
            }
            let p = match cam.backproject(x as f64, y as f64, d) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let q = xi.apply(&p);
            let (px, py, pd) = match cam.project(&q) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let tx = px.round();
            let ty = py.round();
            if tx < 0.0 || ty < 0.0 || tx > (w - 1) as f64 || ty > (h - 1) as f64 {
                continue;
            }
            let (tx, ty) = (tx as usize, ty as usize);
            if !valid.is_set(tx, ty) || pd > out.value(tx, ty) {
                out.set_value(tx, ty, pd);
                valid.set_flag(tx, ty, true);
            }
        }
    }
    (out, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{se3_exp, Twist};
    use nalgebra::Vector3;

    fn ramp(h: usize, w: usize) -> DenseMap {
        DenseMap::from_fn(h, w, 1, |x, _, _| x as f64)
    }

    #[test]
    fn zero_flow_is_identity() {
        let src = DenseMap::from_fn(4, 5, 2, |x, y, c| (x * 10 + y + c) as f64);
        let res = inverse_warp_flow(&src, &FlowField::zeros(4, 5)).unwrap();
        assert_eq!(res.warped, src);
        assert_eq!(res.inbounds.count(), 20);
    }

    #[test]
    fn unit_flow_on_ramp() {
        // Closed-form ramp oracle: I(x, y) = x warped by (1, 0) gives x + 1.
        let src = ramp(3, 6);
        let res = inverse_warp_flow(&src, &FlowField::constant(3, 6, 1.0, 0.0)).unwrap();
        for y in 0..3 {
            for x in 0..5 {
                assert!((res.warped.get(x, y, 0) - (x as f64 + 1.0)).abs() < 1e-12);
                assert!(res.inbounds.is_set(x, y));
            }
            assert!(!res.inbounds.is_set(5, y));
        }
    }

    #[test]
    fn constant_source_stays_constant() {
        let src = DenseMap::constant(4, 4, 1, 3.5);
        let res = inverse_warp_flow(&src, &FlowField::constant(4, 4, 0.7, -0.3)).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert!((res.warped.get(x, y, 0) - 3.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_errors() {
        let src = DenseMap::new(4, 4, 1);
        assert!(inverse_warp_flow(&src, &FlowField::zeros(4, 5)).is_err());
    }

    #[test]
    fn disparity_warp_matches_flow_warp_bitwise() {
        let src = DenseMap::from_fn(4, 6, 1, |x, y, _| ((x * 7 + y * 3) % 11) as f64);
        let disp = {
            let mut d = DisparityMap::zeros(4, 6);
            for y in 0..4 {
                for x in 0..6 {
                    d.set_value(x, y, 0.5 + 0.25 * (x + y) as f64);
                }
            }
            d
        };
        let via_disp = inverse_warp_disparity(&src, &disp).unwrap();
        let via_flow = inverse_warp_flow(&src, &disparity_as_flow(&disp)).unwrap();
        assert_eq!(via_disp.warped, via_flow.warped);
        assert_eq!(via_disp.inbounds.map(), via_flow.inbounds.map());
    }

    #[test]
    fn unit_disparity_on_ramp() {
        let src = ramp(3, 6);
        let disp = DisparityMap::constant(3, 6, 1.0).unwrap();
        let res = inverse_warp_disparity(&src, &disp).unwrap();
        for x in 1..6 {
            assert!((res.warped.get(x, 1, 0) - (x as f64 - 1.0)).abs() < 1e-12);
        }
        assert!(!res.inbounds.is_set(0, 1));
    }

    fn test_cam() -> StereoCamera {
        StereoCamera::new(500.0, 480.0, 32.0, 24.0, 0.5).unwrap()
    }

    #[test]
    fn rigid_flow_identity_is_zero() {
        let cam = test_cam();
        let disp = DisparityMap::constant(48, 64, 20.0).unwrap();
        let res = rigid_flow(&RigidTransform::identity(), &disp, &cam);
        for y in 0..48 {
            for x in 0..64 {
                let (u, v) = res.flow.uv(x, y);
                assert!(u.abs() < 1e-12 && v.abs() < 1e-12);
                assert!((res.disparity.value(x, y) - 20.0).abs() < 1e-12);
                assert!(res.valid.is_set(x, y));
            }
        }
    }

    #[test]
    fn rigid_flow_baseline_translation_gives_negative_disparity_flow() {
        // Moving the camera to the right camera's pose maps each pixel to its
        // stereo correspondence: flow (-d, 0).
        let cam = test_cam();
        let disp = DisparityMap::constant(48, 64, 12.5).unwrap();
        let xi = se3_exp(&Twist::new(
            Vector3::zeros(),
            Vector3::new(-cam.baseline, 0.0, 0.0),
        ));
        let res = rigid_flow(&xi, &disp, &cam);
        for y in (0..48).step_by(7) {
            for x in (0..64).step_by(9) {
                let (u, v) = res.flow.uv(x, y);
                assert!((u + 12.5).abs() < 1e-9, "u = {u}");
                assert!(v.abs() < 1e-9);
                assert!((res.disparity.value(x, y) - 12.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rigid_flow_matches_pointwise_chain() {
        let cam = test_cam();
        let xi = se3_exp(&Twist::new(
            Vector3::new(0.01, -0.02, 0.005),
            Vector3::new(0.1, 0.05, -0.2),
        ));
        let disp = {
            let mut d = DisparityMap::zeros(24, 32);
            for y in 0..24 {
                for x in 0..32 {
                    d.set_value(x, y, 8.0 + ((x * 13 + y * 5) % 17) as f64);
                }
            }
            d
        };
        let res = rigid_flow(&xi, &disp, &cam);
        for y in (0..24).step_by(5) {
            for x in (0..32).step_by(7) {
                let p = cam.backproject(x as f64, y as f64, disp.value(x, y)).unwrap();
                let (px, py, pd) = cam.project(&xi.apply(&p)).unwrap();
                let (u, v) = res.flow.uv(x, y);
                assert!((u - (px - x as f64)).abs() < 1e-9);
                assert!((v - (py - y as f64)).abs() < 1e-9);
                assert!((res.disparity.value(x, y) - pd).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rigid_flow_marks_invalid_disparity() {
        let cam = test_cam();
        let mut disp = DisparityMap::constant(4, 4, 5.0).unwrap();
        disp.set_value(2, 2, 0.0);
        let res = rigid_flow(&RigidTransform::identity(), &disp, &cam);
        assert!(!res.valid.is_set(2, 2));
        assert_eq!(res.valid.count(), 15);
    }

    #[test]
    fn forward_warp_identity_copies() {
        let cam = test_cam();
        let mut disp = DisparityMap::zeros(6, 8);
        for y in 0..6 {
            for x in 0..8 {
                disp.set_value(x, y, 4.0 + (x + y) as f64 * 0.5);
            }
        }
        let (out, valid) = forward_warp_disparity(&disp, &RigidTransform::identity(), &cam);
        assert_eq!(valid.count(), 48);
        for y in 0..6 {
            for x in 0..8 {
                assert!((out.value(x, y) - disp.value(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_warp_keeps_largest_disparity_on_collision() {
        // Receding translation makes pixel (3,2) converge onto the principal
        // pixel (2,2): q_A = (0,0,17) projects to (2,2); q_B = (0.05,0,12)
        // projects to (2.4167, 2) which rounds to (2,2) as well. The nearer
        // surface (larger transformed disparity, 100/12) must win.
        let cam = StereoCamera::new(100.0, 100.0, 2.0, 2.0, 1.0).unwrap();
        let mut disp = DisparityMap::zeros(5, 5);
        disp.set_value(2, 2, 10.0);
        disp.set_value(3, 2, 20.0);
        let xi = se3_exp(&Twist::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 7.0)));
        let (out, valid) = forward_warp_disparity(&disp, &xi, &cam);
        assert_eq!(valid.count(), 1);
        assert!(valid.is_set(2, 2));
        assert!((out.value(2, 2) - 100.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn via_flow_warp_is_definitionally_flow_warp() {
        let mut disp2 = DisparityMap::zeros(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                disp2.set_value(x, y, (x + 4 * y) as f64);
            }
        }
        let flow = FlowField::constant(4, 4, 0.5, 0.25);
        let a = inverse_warp_disparity_via_flow(&flow, &disp2).unwrap();
        let b = inverse_warp_flow(disp2.map(), &flow).unwrap();
        assert_eq!(a.warped, b.warped);
    }

    #[test]
    fn zero_flow_copies_disparity() {
        let disp2 = DisparityMap::constant(3, 3, 7.0).unwrap();
        let res = inverse_warp_disparity_via_flow(&FlowField::zeros(3, 3), &disp2).unwrap();
        assert_eq!(res.warped, *disp2.map());
    }
}
