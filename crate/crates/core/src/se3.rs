//! SE(3) rigid transforms with twist-vector updates.
//!
//! The twist ordering is rotation-first, `[omega_x, omega_y, omega_z, v_x,
//! v_y, v_z]`, which is also the column order of the rigid-flow Jacobian in
//! [`crate::rigid`]. This is the single canonical ordering in this crate.

use nalgebra::{Matrix3, Vector3, Vector6};

use crate::error::{Error, Result};

/// Tolerance on `R^T R - I` and `det(R) - 1` accepted at construction.
const ORTHONORMAL_TOL: f64 = 1e-9;
/// Composition re-orthonormalizes when drift exceeds this.
const DRIFT_TOL: f64 = 1e-12;
/// Below this rotation angle the exponential/log use their series forms.
const SMALL_ANGLE: f64 = 1e-8;

/// Element of SE(3): orthonormal rotation plus translation in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// se(3) tangent vector, rotation components first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub omega: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl Twist {
    pub fn new(omega: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Self { omega, linear }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// `[omega; v]` as the canonical 6-vector.
    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.linear.x,
            self.linear.y,
            self.linear.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]))
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.omega, -self.linear)
    }

    pub fn is_finite(&self) -> bool {
        self.as_vector().iter().all(|v| v.is_finite())
    }
}

#[inline]
fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates orthonormality (`R^T R = I` and `det R = +1` within 1e-9).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let drift = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if drift > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a rotation: orthonormality drift {drift:.3e}, det {det}"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Applies the transform to a point: `R p + t`.
    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Right-multiplies by another transform: `(self ∘ rhs)(p) = self(rhs(p))`.
    pub fn compose(&self, rhs: &RigidTransform) -> Self {
        let mut out = Self {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        };
        out.reorthonormalize_if_needed();
        out
    }

    /// Max-norm of `R^T R - I`.
    pub fn orthonormality_drift(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity())
            .abs()
            .max()
    }

    fn reorthonormalize_if_needed(&mut self) {
        if self.orthonormality_drift() > DRIFT_TOL {
            // Nearest rotation in Frobenius norm via polar decomposition.
            let svd = self.rotation.svd(true, true);
            let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut r = u * v_t;
            if r.determinant() < 0.0 {
                let mut u = u;
                u.column_mut(2).neg_mut();
                r = u * v_t;
            }
            self.rotation = r;
        }
    }
}

/// Closed-form SE(3) exponential; series expansion below `1e-8` rotation.
pub fn se3_exp(delta: &Twist) -> RigidTransform {
    let w = delta.omega;
    let v = delta.linear;
    let theta = w.norm();
    let wx = skew(&w);
    let wx2 = wx * wx;

    let (rotation, v_mat) = if theta < SMALL_ANGLE {
        (
            Matrix3::identity() + wx + 0.5 * wx2,
            Matrix3::identity() + 0.5 * wx + wx2 / 6.0,
        )
    } else {
        let t2 = theta * theta;
        let a = theta.sin() / theta;
        let b = (1.0 - theta.cos()) / t2;
        let c = (theta - theta.sin()) / (t2 * theta);
        (
            Matrix3::identity() + a * wx + b * wx2,
            Matrix3::identity() + b * wx + c * wx2,
        )
    };

    RigidTransform {
        rotation,
        translation: v_mat * v,
    }
}

/// SE(3) logarithm, the inverse of [`se3_exp`] for rotation angles below pi.
pub fn se3_log(t: &RigidTransform) -> Twist {
    let r = t.rotation;
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let axial = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );

    let w = if theta < SMALL_ANGLE {
        0.5 * axial
    } else {
        (theta / (2.0 * theta.sin())) * axial
    };

    let wx = skew(&w);
    let wx2 = wx * wx;
    let v_inv = if theta < SMALL_ANGLE {
        Matrix3::identity() - 0.5 * wx + wx2 / 12.0
    } else {
        let coeff = (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / (theta * theta);
        Matrix3::identity() - 0.5 * wx + coeff * wx2
    };

    Twist::new(w, v_inv * t.translation)
}

/// Right composition `a ∘ exp(delta)` used by the Gauss-Newton update.
pub fn se3_compose(a: &RigidTransform, delta: &Twist) -> RigidTransform {
    a.compose(&se3_exp(delta))
}
