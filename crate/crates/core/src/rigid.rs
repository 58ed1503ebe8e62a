//! Rigidity-based scene-flow refinement: rigid-mask construction from
//! semantic labels, Huber-IRLS Gauss-Newton ego-motion estimation from dense
//! flow and disparity, and the rigid/non-rigid flow and warped-disparity
//! compositions.
//!
//! The solver minimizes `r^T W r` with `r(xi; x) = F(x) - F_R(xi; x)` over
//! the masked pixels, where `F_R` is the flow induced by backprojecting with
//! the first-frame disparity, transforming by `xi`, and reprojecting. Updates
//! are right-composed twists `xi <- xi o exp(delta)` with
//! `delta = (J^T W J)^-1 J^T W r` and Huber weights on the residual norms.

use std::collections::VecDeque;

use nalgebra::{Matrix2x6, Matrix6, Vector2, Vector3, Vector6};

use crate::camera::StereoCamera;
use crate::error::{Error, Result};
use crate::map::{DenseMap, DisparityMap, FlowField, ValidityMask};
use crate::se3::{se3_compose, RigidTransform, Twist};
use crate::warp::{forward_warp_disparity, inverse_warp_disparity_via_flow, rigid_flow, WarpResult};

/// Gauss-Newton solver knobs. The defaults mirror the refinement procedure:
/// at most 20 iterations, stopping once the mean absolute weighted residual
/// (or its change between iterations) drops to 1e-6.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GnOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Huber threshold on the per-pixel residual norm, in pixels. 1.345 is
    /// the classical 95%-efficiency constant.
    pub huber_delta: f64,
    /// Levenberg damping on the normal equations (0 = pure Gauss-Newton).
    pub damping: f64,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self {
            max_iters: 20,
            residual_tol: 1e-6,
            huber_delta: 1.345,
            damping: 0.0,
        }
    }
}

impl GnOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0) || !(self.huber_delta > 0.0) {
            return Err(Error::InvalidArgument(
                "residual_tol and huber_delta must be > 0".into(),
            ));
        }
        if self.damping < 0.0 {
            return Err(Error::InvalidArgument("damping must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-iteration solver diagnostics.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct GnTrace {
    /// Weighted residual energy `sum w ||r||^2` at the start of each iteration.
    pub energies: Vec<f64>,
    /// Norm of each applied twist update.
    pub step_norms: Vec<f64>,
    /// Condition estimate of `J^T W J` per iteration.
    pub conditions: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Condition number above which the normal equations count as singular.
const CONDITION_LIMIT: f64 = 1e12;
/// Minimum number of masked pixels for a well-posed 6-DoF solve.
const MIN_PIXELS: usize = 6;

/// CityScapes train ids treated as non-rigid or at infinity: sky plus every
/// vehicle, pedestrian, and cyclist class.
pub const DEFAULT_DYNAMIC_IDS: [u32; 9] = [10, 11, 12, 13, 14, 15, 16, 17, 18];

/// Marks static rigid pixels: 1 where the label is not dynamic, then a
/// binary erosion with a square structuring element of `erosion` pixels
/// (anchor at `erosion / 2`) to pull the mask away from unreliable label
/// boundaries. Erosion sizes 0 and 1 are no-ops; neighbors outside the image
/// do not erode.
pub fn build_rigid_mask(
    labels: &DenseMap,
    dynamic_ids: &[u32],
    erosion: usize,
) -> Result<ValidityMask> {
    if labels.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "label map needs 1 channel, got {}",
            labels.channels()
        )));
    }
    let (h, w) = (labels.height(), labels.width());
    let mut mask = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let label = labels.get(x, y, 0);
            if label.fract() != 0.0 || label < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "label at ({x}, {y}) is not a non-negative integer: {label}"
                )));
            }
            let id = label as u32;
            mask.set_flag(x, y, !dynamic_ids.contains(&id));
        }
    }
    if erosion <= 1 {
        return Ok(mask);
    }

    let anchor = (erosion / 2) as i64;
    let size = erosion as i64;
    let mut eroded = ValidityMask::all_zeros(h, w);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask.is_set(x as usize, y as usize) {
                continue;
            }
            let mut keep = true;
            'window: for dy in -anchor..size - anchor {
                for dx in -anchor..size - anchor {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    if !mask.is_set(nx as usize, ny as usize) {
                        keep = false;
                        break 'window;
                    }
                }
            }
            eroded.set_flag(x as usize, y as usize, keep);
        }
    }
    Ok(eroded)
}

/// Jacobian of the rigid flow with respect to the twist at a pixel, in
/// inverse-depth parameterization: `p_u = (x - cx) / fx`, `p_v = (y - cy) / fy`
/// normalized coordinates and `p_d = d / (fx b)` inverse depth. Columns are
/// ordered rotation-first to match [`Twist`].
///
/// Each row is the chain of the projection derivative with the point
/// derivative `d(exp(delta) p)/d delta = [-[p]x | I]`; central finite
/// differences of the projective warp pin every entry (in particular the
/// last translation entry of each row carries that row's own normalized
/// coordinate).
pub fn gn_jacobian(p_u: f64, p_v: f64, p_d: f64, cam: &StereoCamera) -> Result<Matrix2x6<f64>> {
    if p_d <= 0.0 {
        return Err(Error::Domain(format!(
            "inverse depth must be positive, got {p_d}"
        )));
    }
    let (fx, fy) = (cam.fx, cam.fy);
    Ok(Matrix2x6::new(
        -p_u * p_v * fx,
        (1.0 + p_u * p_u) * fx,
        -p_v * fx,
        p_d * fx,
        0.0,
        -p_u * p_d * fx,
        -(1.0 + p_v * p_v) * fy,
        p_u * p_v * fy,
        p_u * fy,
        0.0,
        p_d * fy,
        -p_v * p_d * fy,
    ))
}

struct SolverPixel {
    x: f64,
    y: f64,
    point: Vector3<f64>,
    measured: Vector2<f64>,
    jacobian: Matrix2x6<f64>,
}

/// Estimates the ego-motion that best explains the measured flow on the
/// masked pixels, by iteratively reweighted Gauss-Newton from the identity.
pub fn gn_solve(
    flow: &FlowField,
    disp: &DisparityMap,
    mask: &ValidityMask,
    cam: &StereoCamera,
    opts: &GnOptions,
) -> Result<(RigidTransform, GnTrace)> {
    opts.validate()?;
    flow.map().check_same_shape(disp.map(), "gn_solve flow vs disparity")?;
    flow.map().check_same_shape(mask.map(), "gn_solve flow vs mask")?;

    let mut pixels = Vec::new();
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            if !mask.is_set(x, y) {
                continue;
            }
            let d = disp.value(x, y);
            if d <= 0.0 {
                continue;
            }
            let point = cam.backproject(x as f64, y as f64, d)?;
            let (p_u, p_v) = cam.normalized(x as f64, y as f64);
            let jacobian = gn_jacobian(p_u, p_v, cam.inverse_depth(d), cam)?;
            let (u, v) = flow.uv(x, y);
            pixels.push(SolverPixel {
                x: x as f64,
                y: y as f64,
                point,
                measured: Vector2::new(u, v),
                jacobian,
            });
        }
    }
    if pixels.len() < MIN_PIXELS {
        return Err(Error::InsufficientData(format!(
            "{} masked pixels with positive disparity; need at least {MIN_PIXELS}",
            pixels.len()
        )));
    }

    let mut xi = RigidTransform::identity();
    let mut trace = GnTrace::default();
    let mut prev_mean: Option<f64> = None;

    for _ in 0..opts.max_iters {
        let mut normal = Matrix6::<f64>::zeros();
        let mut rhs = Vector6::<f64>::zeros();
        let mut energy = 0.0;
        let mut residual_sum = 0.0;
        let mut count = 0usize;

        for px in &pixels {
            let q = xi.apply(&px.point);
            if q.z <= 0.0 {
                continue;
            }
            let proj_x = cam.fx * q.x / q.z + cam.cx;
            let proj_y = cam.fy * q.y / q.z + cam.cy;
            let r = px.measured - Vector2::new(proj_x - px.x, proj_y - px.y);
            let rn = r.norm();
            let w = if rn <= opts.huber_delta {
                1.0
            } else {
                opts.huber_delta / rn
            };
            energy += w * rn * rn;
            residual_sum += w * rn;
            count += 1;
            let jt = px.jacobian.transpose();
            normal += w * (jt * px.jacobian);
            rhs += w * (jt * r);
        }
        if count < MIN_PIXELS {
            return Err(Error::InsufficientData(
                "fewer than 6 pixels remain in front of the camera".into(),
            ));
        }

        let mean_residual = residual_sum / count as f64;
        let eigen = normal.symmetric_eigenvalues();
        let (min_ev, max_ev) = (eigen.min(), eigen.max());
        let condition = if min_ev <= 0.0 {
            f64::INFINITY
        } else {
            max_ev / min_ev
        };
        trace.energies.push(energy);
        trace.conditions.push(condition);
        trace.iterations += 1;

        // Stop when the absolute residual is already at tolerance, or when
        // it stopped changing between iterations.
        if mean_residual <= opts.residual_tol {
            trace.converged = true;
            break;
        }
        if let Some(prev) = prev_mean {
            if (prev - mean_residual).abs() <= opts.residual_tol {
                trace.converged = true;
                break;
            }
        }
        prev_mean = Some(mean_residual);

        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(Error::DegenerateGeometry(format!(
                "normal equations are singular (condition {condition:.3e})"
            )));
        }
        let mut damped = normal;
        if opts.damping > 0.0 {
            for i in 0..6 {
                damped[(i, i)] += opts.damping * normal[(i, i)];
            }
        }
        let delta = nalgebra::Cholesky::new(damped)
            .ok_or_else(|| {
                Error::DegenerateGeometry("Cholesky factorization failed".into())
            })?
            .solve(&rhs);
        trace.step_norms.push(delta.norm());
        xi = se3_compose(&xi, &Twist::from_vector(&delta));
    }

    Ok((xi, trace))
}

/// Element-wise selection `F = (1 - B) raw + B rigid`.
pub fn compose_flow(
    raw: &FlowField,
    rigid: &FlowField,
    mask: &ValidityMask,
) -> Result<FlowField> {
    raw.map().check_same_shape(rigid.map(), "compose_flow")?;
    raw.map().check_same_shape(mask.map(), "compose_flow mask")?;
    let mut out = raw.clone();
    for y in 0..raw.height() {
        for x in 0..raw.width() {
            if mask.is_set(x, y) {
                let (u, v) = rigid.uv(x, y);
                out.set_uv(x, y, u, v);
            }
        }
    }
    Ok(out)
}

/// Composition of the two warped second-frame disparities: the rigid forward
/// warp inside the mask, the flow-based inverse warp outside. A pixel whose
/// selected source is invalid falls back to the other source, and remaining
/// holes take the value of the nearest resolved pixel (multi-source BFS,
/// deterministic row-major seeding).
pub fn compose_warped_disparity(
    flow_warped: &WarpResult,
    rigid_warped: (&DisparityMap, &ValidityMask),
    mask: &ValidityMask,
) -> Result<DisparityMap> {
    let (fwd, fwd_valid) = rigid_warped;
    let inv = &flow_warped.warped;
    if inv.channels() != 1 {
        return Err(Error::InvalidArgument(
            "flow-warped disparity must have 1 channel".into(),
        ));
    }
    inv.check_same_shape(fwd.map(), "compose_warped_disparity")?;
    inv.check_same_shape(mask.map(), "compose_warped_disparity mask")?;
    inv.check_same_shape(fwd_valid.map(), "compose_warped_disparity validity")?;

    let (h, w) = (inv.height(), inv.width());
    let mut out = DisparityMap::zeros(h, w);
    let mut resolved = ValidityMask::all_zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let inv_ok = flow_warped.inbounds.is_set(x, y);
            let fwd_ok = fwd_valid.is_set(x, y);
            let value = if mask.is_set(x, y) {
                if fwd_ok {
                    Some(fwd.value(x, y))
                } else if inv_ok {
                    Some(inv.get(x, y, 0))
                } else {
                    None
                }
            } else if inv_ok {
                Some(inv.get(x, y, 0))
            } else if fwd_ok {
                Some(fwd.value(x, y))
            } else {
                None
            };
            if let Some(v) = value {
                out.set_value(x, y, v.max(0.0));
                resolved.set_flag(x, y, true);
            }
        }
    }

    // Nearest-valid fill for the remaining holes.
    if resolved.count() < h * w && resolved.count() > 0 {
        let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
        for y in 0..h {
            for x in 0..w {
                if resolved.is_set(x, y) {
                    queue.push_back((x, y));
                }
            }
        }
        while let Some((x, y)) = queue.pop_front() {
            let value = out.value(x, y);
            let neighbors = [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < w && ny < h && !resolved.is_set(nx, ny) {
                    out.set_value(nx, ny, value);
                    resolved.set_flag(nx, ny, true);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    Ok(out)
}

/// Options of the full refinement pipeline.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    pub gn: GnOptions,
    /// Labels excluded from the rigid mask.
    pub dynamic_ids: Vec<u32>,
    /// Structuring-element size of the mask erosion.
    pub erosion: usize,
    /// Below this many usable rigid pixels the refinement degrades to a
    /// pass-through and reports no ego-motion.
    pub min_rigid_pixels: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            gn: GnOptions::default(),
            dynamic_ids: DEFAULT_DYNAMIC_IDS.to_vec(),
            erosion: 10,
            min_rigid_pixels: MIN_PIXELS,
        }
    }
}

/// Outputs of [`refine_scene_flow`].
#[derive(Debug, Clone)]
pub struct RefineResult {
    pub flow: FlowField,
    pub warped_disp2: DisparityMap,
    /// Absent when the scene had no usable rigid region.
    pub ego: Option<RigidTransform>,
    pub trace: Option<GnTrace>,
    pub rigid_mask: ValidityMask,
}

/// Full rigidity-based refinement: build the rigid mask from semantics,
/// solve for ego-motion, substitute the induced rigid flow inside the mask,
/// and compose the warped second-frame disparity from the forward (rigid)
/// and inverse (flow) warps.
pub fn refine_scene_flow(
    flow: &FlowField,
    disp1: &DisparityMap,
    disp2: &DisparityMap,
    labels: &DenseMap,
    cam: &StereoCamera,
    opts: &RefineOptions,
) -> Result<RefineResult> {
    flow.map().check_same_shape(disp1.map(), "refine flow vs disp1")?;
    flow.map().check_same_shape(disp2.map(), "refine flow vs disp2")?;
    flow.map().check_same_shape(labels, "refine flow vs labels")?;

    let rigid_mask = build_rigid_mask(labels, &opts.dynamic_ids, opts.erosion)?;
    let usable = (0..flow.height())
        .flat_map(|y| (0..flow.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| rigid_mask.is_set(x, y) && disp1.value(x, y) > 0.0)
        .count();

    let flow_warped = inverse_warp_disparity_via_flow(flow, disp2)?;

    if usable < opts.min_rigid_pixels.max(MIN_PIXELS) {
        let empty = ValidityMask::all_zeros(flow.height(), flow.width());
        let none_fwd = DisparityMap::zeros(flow.height(), flow.width());
        let warped_disp2 =
            compose_warped_disparity(&flow_warped, (&none_fwd, &empty), &empty)?;
        return Ok(RefineResult {
            flow: flow.clone(),
            warped_disp2,
            ego: None,
            trace: None,
            rigid_mask,
        });
    }

    let (ego, trace) = gn_solve(flow, disp1, &rigid_mask, cam, &opts.gn)?;
    let rigid = rigid_flow(&ego, disp1, cam);
    // Substitute rigid flow only where it is defined.
    let substitution = rigid_mask.and(&rigid.valid)?;
    let refined_flow = compose_flow(flow, &rigid.flow, &substitution)?;

    let forward = forward_warp_disparity(disp1, &ego, cam);
    let warped_disp2 =
        compose_warped_disparity(&flow_warped, (&forward.0, &forward.1), &rigid_mask)?;

    Ok(RefineResult {
        flow: refined_flow,
        warped_disp2,
        ego: Some(ego),
        trace: Some(trace),
        rigid_mask,
    })
}
