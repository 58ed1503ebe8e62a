//! Deterministic synthetic rigid scenes with exact ground truth.
//!
//! Scenes are textured infinite planes ray-cast from a rectified stereo rig
//! at two time steps. Every output map is closed-form: disparity from plane
//! depth, flow from the per-plane rigid motion (ego composed with the object
//! motion), and occlusion from analytic depth tests, so the renderer can
//! serve as the independent oracle for the warp and rigid solvers.
//!
//! Textures are band-limited sums of sinusoids anchored to each plane, which
//! keeps bilinear resampling error below the tolerances of the photometric
//! cross-checks as long as `texture_scale` is chosen a couple hundred pixels
//! wide at the plane's depth.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::StereoCamera;
use crate::error::{Error, Result};
use crate::map::{DenseMap, DisparityMap, FlowField, OcclusionMask};
use crate::se3::{se3_exp, RigidTransform, Twist};

/// One textured plane `n . X = offset` in first-frame left-camera
/// coordinates, with an optional rigid object motion applied on top of the
/// scene's ego-motion.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PlaneSpec {
    pub normal: [f64; 3],
    pub offset: f64,
    pub label: u32,
    /// Twist `[wx, wy, wz, vx, vy, vz]` of the object's own motion, if any.
    #[serde(default)]
    pub motion: Option<[f64; 6]>,
    #[serde(default)]
    pub texture_seed: u64,
    /// Dominant texture wavelength in meters.
    #[serde(default = "default_texture_scale")]
    pub texture_scale: f64,
}

fn default_texture_scale() -> f64 {
    1.0
}

/// Full scene description; a fixed seed renders byte-identical bundles.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub camera: StereoCamera,
    /// Ego-motion twist `[wx, wy, wz, vx, vy, vz]`; static points move to
    /// `exp(ego)(X)` in second-frame camera coordinates.
    pub ego: [f64; 6],
    pub planes: Vec<PlaneSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn ego_transform(&self) -> RigidTransform {
        se3_exp(&twist_from(&self.ego))
    }
}

fn twist_from(v: &[f64; 6]) -> Twist {
    Twist::new(
        Vector3::new(v[0], v[1], v[2]),
        Vector3::new(v[3], v[4], v[5]),
    )
}

/// Everything the renderer produces. Images are single-channel in `[0, 1]`;
/// `d2_warped` is the second-frame disparity carried back onto first-frame
/// pixels (the scene-flow ground-truth convention), while `d2` lives on the
/// second frame's own grid.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub image1_left: DenseMap,
    pub image2_left: DenseMap,
    pub image1_right: DenseMap,
    pub disp1: DisparityMap,
    pub disp2: DisparityMap,
    pub disp2_warped: DisparityMap,
    pub flow: FlowField,
    pub occ_flow: OcclusionMask,
    pub occ_disp: OcclusionMask,
    pub labels: DenseMap,
}

struct Texture {
    origin: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    // (amplitude, freq_u, freq_v, phase)
    waves: Vec<(f64, f64, f64, f64)>,
    amp_sum: f64,
}

impl Texture {
    fn eval(&self, point_t1_left: &Vector3<f64>) -> f64 {
        let rel = point_t1_left - self.origin;
        let u = rel.dot(&self.e1);
        let v = rel.dot(&self.e2);
        let mut s = 0.0;
        for &(a, fu, fv, phase) in &self.waves {
            s += a * (fu * u + fv * v + phase).sin();
        }
        0.5 + 0.45 * s / self.amp_sum
    }
}

struct CompiledPlane {
    // Plane in t1 left-camera coordinates.
    n1: Vector3<f64>,
    c1: f64,
    // Plane carried to t2 left-camera coordinates by the total motion.
    n2: Vector3<f64>,
    c2: f64,
    motion: RigidTransform,
    motion_inv: RigidTransform,
    label: u32,
    texture: Texture,
}

const WAVE_COUNT: usize = 6;
const MIN_HIT_DEPTH: f64 = 1e-9;
// Relative slack for analytic depth tests; hits of the same plane re-agree
// to ~1e-15, other surfaces must be meaningfully nearer to occlude.
const DEPTH_TEST_REL_EPS: f64 = 1e-6;

fn compile_plane(spec: &SceneSpec, plane: &PlaneSpec) -> Result<CompiledPlane> {
    let n = Vector3::new(plane.normal[0], plane.normal[1], plane.normal[2]);
    let norm = n.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("plane normal must be nonzero".into()));
    }
    let mut n1 = n / norm;
    let mut c1 = plane.offset / norm;
    // Orient the normal toward the camera so that offsets are positive.
    if c1 < 0.0 {
        n1 = -n1;
        c1 = -c1;
    }
    if c1 <= 0.0 {
        return Err(Error::InvalidArgument(
            "plane must not pass through the camera center".into(),
        ));
    }
    if plane.texture_scale <= 0.0 {
        return Err(Error::InvalidArgument("texture_scale must be positive".into()));
    }

    let motion = match &plane.motion {
        Some(m) => spec.ego_transform().compose(&se3_exp(&twist_from(m))),
        None => spec.ego_transform(),
    };
    let motion_inv = motion.inverse();
    // Transporting n . X = c by X' = R X + t gives (R n) . X' = c + (R n) . t.
    let n2 = motion.rotation() * n1;
    let c2 = c1 + n2.dot(motion.translation());

    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed
            .wrapping_add(plane.texture_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let base_freq = std::f64::consts::TAU / plane.texture_scale;
    let mut waves = Vec::with_capacity(WAVE_COUNT);
    let mut amp_sum = 0.0;
    for _ in 0..WAVE_COUNT {
        let rho = base_freq * rng.gen_range(0.3..1.0);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let amp = rng.gen_range(0.5..1.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        amp_sum += amp;
        waves.push((amp, rho * theta.cos(), rho * theta.sin(), phase));
    }

    let origin = c1 * n1;
    let helper = if n1.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = helper.cross(&n1).normalize();
    let e2 = n1.cross(&e1);

    Ok(CompiledPlane {
        n1,
        c1,
        n2,
        c2,
        motion,
        motion_inv,
        label: plane.label,
        texture: Texture {
            origin,
            e1,
            e2,
            waves,
            amp_sum,
        },
    })
}

/// Nearest positive-depth plane hit along the ray through normalized
/// direction `r` (with `r.z = 1`), as `(plane index, depth)`.
fn raycast(planes: &[(Vector3<f64>, f64)], r: &Vector3<f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (n, c)) in planes.iter().enumerate() {
        let denom = n.dot(r);
        if denom.abs() < 1e-12 {
            continue;
        }
        let s = c / denom;
        if s > MIN_HIT_DEPTH && best.map_or(true, |(_, bs)| s < bs) {
            best = Some((i, s));
        }
    }
    best
}

fn ray(cam: &StereoCamera, x: f64, y: f64) -> Vector3<f64> {
    let (nx, ny) = cam.normalized(x, y);
    Vector3::new(nx, ny, 1.0)
}

fn check_front_facing(
    planes: &[(Vector3<f64>, f64)],
    cam: &StereoCamera,
    width: usize,
    height: usize,
    what: &str,
) -> Result<()> {
    // n . r is linear in the pixel, so the four corners bound the interior.
    let corners = [
        (0.0, 0.0),
        ((width - 1) as f64, 0.0),
        (0.0, (height - 1) as f64),
        ((width - 1) as f64, (height - 1) as f64),
    ];
    for (i, (n, _)) in planes.iter().enumerate() {
        for &(x, y) in &corners {
            if n.dot(&ray(cam, x, y)) <= 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "plane {i} is parallel to or behind the {what} ray bundle"
                )));
            }
        }
    }
    Ok(())
}

/// Ray-casts the scene into the full ground-truth bundle.
pub fn render_scene(spec: &SceneSpec) -> Result<SceneBundle> {
    if spec.planes.is_empty() {
        return Err(Error::InvalidArgument("scene needs at least one plane".into()));
    }
    if spec.width < 2 || spec.height < 2 {
        return Err(Error::InvalidArgument("image size must be at least 2x2".into()));
    }
    let cam = &spec.camera;
    let (w, h) = (spec.width, spec.height);
    let planes: Vec<CompiledPlane> = spec
        .planes
        .iter()
        .map(|p| compile_plane(spec, p))
        .collect::<Result<_>>()?;

    let b = Vector3::new(cam.baseline, 0.0, 0.0);
    let planes_t1: Vec<_> = planes.iter().map(|p| (p.n1, p.c1)).collect();
    // Right camera frame: X_r = X_l - b.
    let planes_t1_right: Vec<_> = planes.iter().map(|p| (p.n1, p.c1 - p.n1.dot(&b))).collect();
    let planes_t2: Vec<_> = planes.iter().map(|p| (p.n2, p.c2)).collect();

    check_front_facing(&planes_t1, cam, w, h, "first-frame left")?;
    check_front_facing(&planes_t1_right, cam, w, h, "first-frame right")?;
    check_front_facing(&planes_t2, cam, w, h, "second-frame left")?;

    let mut image1_left = DenseMap::new(h, w, 1);
    let mut image2_left = DenseMap::new(h, w, 1);
    let mut image1_right = DenseMap::new(h, w, 1);
    let mut disp1 = DisparityMap::zeros(h, w);
    let mut disp2 = DisparityMap::zeros(h, w);
    let mut disp2_warped = DisparityMap::zeros(h, w);
    let mut flow = FlowField::zeros(h, w);
    let mut occ_flow = DenseMap::new(h, w, 1);
    let mut occ_disp = DenseMap::new(h, w, 1);
    let mut labels = DenseMap::new(h, w, 1);

    let inside = |px: f64, py: f64| {
        px >= 0.0 && py >= 0.0 && px <= (w - 1) as f64 && py <= (h - 1) as f64
    };

    for y in 0..h {
        for x in 0..w {
            let r = ray(cam, x as f64, y as f64);

            // First-frame left view: geometry, texture, label.
            let (idx, z1) = raycast(&planes_t1, &r).ok_or_else(|| {
                Error::InvalidArgument(format!("scene does not cover pixel ({x}, {y})"))
            })?;
            let plane = &planes[idx];
            let point1 = z1 * r;
            image1_left.set(x, y, 0, plane.texture.eval(&point1));
            disp1.set_value(x, y, cam.fxb() / z1);
            labels.set(x, y, 0, plane.label as f64);

            // Ground-truth flow and warped second-frame disparity.
            let point2 = plane.motion.apply(&point1);
            let (px, py, pd) = cam.project(&point2).map_err(|_| {
                Error::InvalidArgument(format!(
                    "pixel ({x}, {y}) moves behind the camera at the second frame"
                ))
            })?;
            flow.set_uv(x, y, px - x as f64, py - y as f64);
            disp2_warped.set_value(x, y, pd);

            // Flow occlusion: out of frame, or covered by a nearer surface
            // in the second frame.
            let occluded_f = if !inside(px, py) {
                true
            } else {
                match raycast(&planes_t2, &ray(cam, px, py)) {
                    Some((_, s2)) => s2 < point2.z * (1.0 - DEPTH_TEST_REL_EPS),
                    None => true,
                }
            };
            occ_flow.set(x, y, 0, occluded_f as u8 as f64);

            // Disparity occlusion: visibility of the point in the right view.
            let xr = x as f64 - cam.fxb() / z1;
            let occluded_d = if !inside(xr, y as f64) {
                true
            } else {
                match raycast(&planes_t1_right, &ray(cam, xr, y as f64)) {
                    Some((_, sr)) => sr < z1 * (1.0 - DEPTH_TEST_REL_EPS),
                    None => true,
                }
            };
            occ_disp.set(x, y, 0, occluded_d as u8 as f64);

            // Second-frame left view on its own grid.
            let (jdx, z2) = raycast(&planes_t2, &r).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "second frame does not cover pixel ({x}, {y})"
                ))
            })?;
            let hit2 = &planes[jdx];
            let back = hit2.motion_inv.apply(&(z2 * r));
            image2_left.set(x, y, 0, hit2.texture.eval(&back));
            disp2.set_value(x, y, cam.fxb() / z2);

            // First-frame right view.
            let (kdx, zr) = raycast(&planes_t1_right, &r).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "right view does not cover pixel ({x}, {y})"
                ))
            })?;
            let hit_r = &planes[kdx];
            let left_point = zr * r + b;
            image1_right.set(x, y, 0, hit_r.texture.eval(&left_point));
        }
    }

    Ok(SceneBundle {
        image1_left,
        image2_left,
        image1_right,
        disp1,
        disp2,
        disp2_warped,
        flow,
        occ_flow: OcclusionMask::new(occ_flow)?,
        occ_disp: OcclusionMask::new(occ_disp)?,
        labels,
    })
}
