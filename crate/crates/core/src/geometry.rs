//! Rigid-body and pinhole primitives.
//!
//! Camera frame convention: right-handed, `x` right, `y` up, `z` forward into
//! the scene. Image rows grow downward, so vertical pixel offsets flip sign
//! when moving between the image plane and camera space.
//!
//! Extrinsics are world-to-camera: a point `p` in the world (source camera)
//! frame maps to `R p + t` in the target camera frame.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-6;
const LOOK_AT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    /// Canonical up direction.
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    /// Canonical forward direction.
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Angle between two non-zero vectors, in radians.
    pub fn angle_to(self, o: Vec3) -> f64 {
        // atan2 form stays accurate near 0 and pi.
        self.cross(o).norm().atan2(self.dot(o))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion, scalar first. Canonical form has `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Validates the norm but does not renormalize.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NonUnitQuaternion { norm });
        }
        Ok(UnitQuaternion { w, x, y, z })
    }

    /// Normalizes an arbitrary non-zero quaternion.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonUnitQuaternion { norm });
        }
        Ok(UnitQuaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let a = axis.normalized().ok_or(Error::NonUnitQuaternion { norm: 0.0 })?;
        let (s, c) = (angle * 0.5).sin_cos();
        Ok(UnitQuaternion {
            w: c,
            x: a.x * s,
            y: a.y * s,
            z: a.z * s,
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Picks the representative of `{q, -q}` with `w > 0`; when `w == 0`, the
    /// first non-zero vector component is made positive.
    pub fn canonical(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            UnitQuaternion {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }

    /// Hamilton product `self * o`.
    pub fn mul(self, o: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

/// 3x3 rotation, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix {
    m: [[f64; 3]; 3],
}

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Validates orthonormality and `det = +1` within 1e-6.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = RotationMatrix { m };
        let ortho_err = r.orthonormality_error();
        let det = r.determinant();
        if !(ortho_err <= ROTATION_TOL) || !((det - 1.0).abs() <= ROTATION_TOL) {
            return Err(Error::NotARotation { ortho_err, det });
        }
        Ok(r)
    }

    /// Rows are the images of the camera axes. Callers guarantee validity.
    pub(crate) fn from_rows_unchecked(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        RotationMatrix {
            m: [r0.to_array(), r1.to_array(), r2.to_array()],
        }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.m[i])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    #[inline]
    pub fn mul_vec(&self, p: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    pub fn mul_mat(&self, o: &RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        RotationMatrix { m: out }
    }

    pub fn transpose(&self) -> RotationMatrix {
        let m = &self.m;
        RotationMatrix {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max absolute entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.transpose().mul_mat(self);
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (rtr.m[i][j] - target).abs();
                // NaN must register as a failure.
                err = if d.is_nan() { f64::INFINITY } else { err.max(d) };
            }
        }
        err
    }

    pub fn max_abs_diff(&self, o: &RotationMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }
}

pub fn quat_to_matrix(q: UnitQuaternion) -> Result<RotationMatrix> {
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > ROTATION_TOL {
        return Err(Error::NonUnitQuaternion { norm });
    }
    let UnitQuaternion { w, x, y, z } = q;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, xz, yz) = (x * y, x * z, y * z);
    let (wx, wy, wz) = (w * x, w * y, w * z);
    Ok(RotationMatrix {
        m: [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ],
    })
}

/// Shepperd's method: branch on the largest of `w, x, y, z` for stability.
/// Output is canonical (`w >= 0`).
pub fn matrix_to_quat(r: &RotationMatrix) -> Result<UnitQuaternion> {
    let ortho_err = r.orthonormality_error();
    let det = r.determinant();
    if !(ortho_err <= ROTATION_TOL) || !((det - 1.0).abs() <= ROTATION_TOL) {
        return Err(Error::NotARotation { ortho_err, det });
    }
    let m = &r.m;
    let trace = m[0][0] + m[1][1] + m[2][2];
    let (w, x, y, z);
    if trace >= m[0][0] && trace >= m[1][1] && trace >= m[2][2] {
        let s = (1.0 + trace).sqrt() * 2.0;
        w = 0.25 * s;
        x = (m[2][1] - m[1][2]) / s;
        y = (m[0][2] - m[2][0]) / s;
        z = (m[1][0] - m[0][1]) / s;
    } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        w = (m[2][1] - m[1][2]) / s;
        x = 0.25 * s;
        y = (m[0][1] + m[1][0]) / s;
        z = (m[0][2] + m[2][0]) / s;
    } else if m[1][1] >= m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        w = (m[0][2] - m[2][0]) / s;
        x = (m[0][1] + m[1][0]) / s;
        y = 0.25 * s;
        z = (m[1][2] + m[2][1]) / s;
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        w = (m[1][0] - m[0][1]) / s;
        x = (m[0][2] + m[2][0]) / s;
        y = (m[1][2] + m[2][1]) / s;
        z = 0.25 * s;
    }
    Ok(UnitQuaternion::normalize(w, x, y, z)?.canonical())
}

/// World-to-camera extrinsic `[R | t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: RotationMatrix::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: RotationMatrix, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform::new(RotationMatrix::IDENTITY, t)
    }

    pub fn from_rotation(r: RotationMatrix) -> Self {
        RigidTransform::new(r, Vec3::ZERO)
    }

    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }

    /// Camera center in world coordinates, `c = -R^T t`.
    pub fn camera_center(&self) -> Vec3 {
        -self.rotation.transpose().mul_vec(self.translation)
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == RotationMatrix::IDENTITY && self.translation == Vec3::ZERO
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

pub fn apply(t: &RigidTransform, p: Vec3) -> Vec3 {
    t.apply(p)
}

pub fn camera_center(t: &RigidTransform) -> Vec3 {
    t.camera_center()
}

/// Camera-to-world basis `[right | up | forward]` for a viewing direction.
///
/// `right = normalize(y × forward)`, `up = forward × right`.
pub fn look_basis(forward: Vec3) -> Result<(Vec3, Vec3, Vec3)> {
    let f = forward.normalized().ok_or(Error::DegenerateLookAt)?;
    let r_raw = Vec3::Y.cross(f);
    let r_norm = r_raw.norm();
    if !(r_norm > LOOK_AT_TOL) {
        return Err(Error::DegenerateLookAt);
    }
    let r = r_raw * (1.0 / r_norm);
    let u = f.cross(r);
    Ok((r, u, f))
}

/// Extrinsic for a camera at `camera_pos` looking at `target` with `+y` up.
///
/// The basis `[r | u | f]` maps camera axes to world axes; the extrinsic
/// stores its transpose so that `target` lands on the camera's `+z` axis.
pub fn look_at(camera_pos: Vec3, target: Vec3) -> Result<RigidTransform> {
    let delta = target - camera_pos;
    if !(delta.norm() > 1e-9) {
        return Err(Error::DegenerateLookAt);
    }
    let (r, u, f) = look_basis(delta)?;
    let rotation = RotationMatrix::from_rows_unchecked(r, u, f);
    let translation = -rotation.mul_vec(camera_pos);
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    /// Square pixels, principal point at the image center.
    pub fn from_hfov(width: usize, height: usize, hfov: f64) -> Result<Self> {
        if !(hfov > 0.0 && hfov < std::f64::consts::PI) {
            return Err(Error::InvalidFov(hfov));
        }
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        let f = (width as f64 / 2.0) / (hfov / 2.0).tan();
        Ok(CameraIntrinsics {
            width,
            height,
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        })
    }

    pub fn hfov(&self) -> f64 {
        2.0 * ((self.width as f64 / 2.0) / self.fx).atan()
    }
}

pub fn intrinsics_from_hfov(width: usize, height: usize, hfov: f64) -> Result<CameraIntrinsics> {
    CameraIntrinsics::from_hfov(width, height, hfov)
}

/// Translation plus unit quaternion: the 7D pose encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseVector7 {
    pub translation: Vec3,
    pub rotation: UnitQuaternion,
}

impl PoseVector7 {
    pub fn from_transform(t: &RigidTransform) -> Result<Self> {
        Ok(PoseVector7 {
            translation: t.translation,
            rotation: matrix_to_quat(&t.rotation)?,
        })
    }

    pub fn to_transform(&self) -> Result<RigidTransform> {
        Ok(RigidTransform::new(
            quat_to_matrix(self.rotation)?,
            self.translation,
        ))
    }

    /// `[tx, ty, tz, qw, qx, qy, qz]`.
    pub fn to_array(&self) -> [f64; 7] {
        let t = self.translation;
        let q = self.rotation;
        [t.x, t.y, t.z, q.w, q.x, q.y, q.z]
    }

    pub fn from_array(a: [f64; 7]) -> Result<Self> {
        Ok(PoseVector7 {
            translation: Vec3::new(a[0], a[1], a[2]),
            rotation: UnitQuaternion::new(a[3], a[4], a[5], a[6])?,
        })
    }
}
