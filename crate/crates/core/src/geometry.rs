//! Gaze-ray geometry: yaw/pitch to 3D direction, and ray/screen-plane
//! intersection in screen coordinates.
//!
//! Conventions used throughout the crate:
//!
//! * positions are millimetres, angles are radians;
//! * the screen plane is `z = 0` in the screen frame and the user sits at
//!   positive `z`;
//! * with identity poses the camera frame coincides with the screen frame.
//!
//! Rotation inverses are transposes; [`RigidPose::new`] rejects anything that
//! is not a proper rotation.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `R Rᵀ = I` and `det R = 1` at pose construction.
pub const ROTATION_TOLERANCE: f64 = 1e-6;
/// `|g · n|` below this is treated as a ray parallel to the screen.
pub const PARALLEL_TOLERANCE: f64 = 1e-9;
/// Maximum out-of-plane residual (mm) accepted for a projected point.
pub const PLANE_RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Minimum distance (mm) between the gaze origin and the screen plane.
pub const MIN_ORIGIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid gaze angle: yaw={yaw}, pitch={pitch}")]
    InvalidAngle { yaw: f64, pitch: f64 },
    #[error("rotation is not orthonormal with determinant +1 (deviation {deviation:.3e})")]
    NotARotation { deviation: f64 },
    #[error("non-finite component in {what}")]
    NonFinite { what: &'static str },
    #[error("gaze origin lies {distance:.3} mm from the screen plane (minimum {MIN_ORIGIN_DISTANCE} mm)")]
    OriginOnPlane { distance: f64 },
    #[error("gaze ray is parallel to the screen plane")]
    NoIntersection,
    #[error("gaze ray points away from the screen (t = {t:.3})")]
    BehindScreen { t: f64 },
    #[error("projected point leaves the screen plane by {residual:.3e} mm")]
    Residual { residual: f64 },
}

/// Estimated gaze angles. Positive pitch looks down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerGaze {
    yaw: f64,
    pitch: f64,
}

impl EulerGaze {
    pub fn new(yaw: f64, pitch: f64) -> Result<Self, GeometryError> {
        let ok = yaw.is_finite()
            && pitch.is_finite()
            && (-PI..=PI).contains(&yaw)
            && (-FRAC_PI_2..=FRAC_PI_2).contains(&pitch);
        if ok {
            Ok(Self { yaw, pitch })
        } else {
            Err(GeometryError::InvalidAngle { yaw, pitch })
        }
    }

    pub fn from_degrees(yaw_deg: f64, pitch_deg: f64) -> Result<Self, GeometryError> {
        Self::new(yaw_deg.to_radians(), pitch_deg.to_radians())
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn yaw_degrees(&self) -> f64 {
        self.yaw.to_degrees()
    }

    pub fn pitch_degrees(&self) -> f64 {
        self.pitch.to_degrees()
    }
}

/// Unit gaze direction in eye coordinates.
pub fn gaze_vector(gaze: &EulerGaze) -> Vec3 {
    let (sin_yaw, cos_yaw) = gaze.yaw.sin_cos();
    let (sin_pitch, cos_pitch) = gaze.pitch.sin_cos();
    Vec3::new(cos_pitch * sin_yaw, -sin_pitch, cos_pitch * cos_yaw)
}

/// Inverse of [`gaze_vector`] for a unit (or at least non-zero) direction.
pub fn angles_of(direction: &Vec3) -> Result<EulerGaze, GeometryError> {
    let d = direction.normalize();
    if !d.iter().all(|c| c.is_finite()) {
        return Err(GeometryError::NonFinite { what: "direction" });
    }
    let pitch = (-d.y).clamp(-1.0, 1.0).asin();
    let yaw = d.x.atan2(d.z);
    EulerGaze::new(yaw, pitch)
}

/// A rotation plus translation, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidPose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        if !rotation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite { what: "rotation" });
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite { what: "translation" });
        }
        let orthogonality = (rotation * rotation.transpose() - Mat3::identity()).amax();
        let determinant = (rotation.determinant() - 1.0).abs();
        let deviation = orthogonality.max(determinant);
        if deviation > ROTATION_TOLERANCE {
            return Err(GeometryError::NotARotation { deviation });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Rotation about the y axis by `angle` radians, zero translation.
    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            translation: Vec3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn with_translation(mut self, translation: Vec3) -> Result<Self, GeometryError> {
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite { what: "translation" });
        }
        self.translation = translation;
        Ok(self)
    }

    /// `R⁻¹`, computed as `Rᵀ`.
    pub fn inverse_rotation(&self) -> Mat3 {
        self.rotation.transpose()
    }
}

/// Screen plane `n · x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenPlane {
    pub normal: Vec3,
    pub offset: f64,
}

impl ScreenPlane {
    pub fn signed_distance(&self, point: &Vec3) -> f64 {
        self.normal.dot(point) - self.offset
    }
}

/// A 2D point in screen-plane coordinates, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeRay {
    pub origin: Vec3,
    pub direction: Vec3,
}

/// Screen and camera poses plus an optional fixed eye position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneCalibration {
    screen: RigidPose,
    camera: RigidPose,
    eye_origin: Option<Vec3>,
}

impl SceneCalibration {
    pub fn new(
        screen: RigidPose,
        camera: RigidPose,
        eye_origin: Option<Vec3>,
    ) -> Result<Self, GeometryError> {
        if let Some(eye) = &eye_origin {
            if !eye.iter().all(|c| c.is_finite()) {
                return Err(GeometryError::NonFinite { what: "eye_origin" });
            }
        }
        let calib = Self {
            screen,
            camera,
            eye_origin,
        };
        let distance = calib.screen_plane().signed_distance(&calib.gaze_origin()).abs();
        if distance <= MIN_ORIGIN_DISTANCE {
            return Err(GeometryError::OriginOnPlane { distance });
        }
        Ok(calib)
    }

    /// Fixed-seat setup: screen and camera origins coincide, the camera
    /// looks out of the screen towards the user, and the eye sits
    /// `distance_mm` in front of the screen at height `eye_height_mm`
    /// relative to the screen origin.
    pub fn fixed_seat(eye_height_mm: f64, distance_mm: f64) -> Result<Self, GeometryError> {
        Self::new(
            RigidPose::identity(),
            RigidPose::about_y(PI),
            Some(Vec3::new(0.0, eye_height_mm, distance_mm)),
        )
    }

    pub fn screen_pose(&self) -> &RigidPose {
        &self.screen
    }

    pub fn camera_pose(&self) -> &RigidPose {
        &self.camera
    }

    pub fn eye_origin_override(&self) -> Option<&Vec3> {
        self.eye_origin.as_ref()
    }

    /// Normal is the third column of the screen rotation.
    pub fn screen_plane(&self) -> ScreenPlane {
        let normal: Vec3 = self.screen.rotation.column(2).into_owned();
        ScreenPlane {
            normal,
            offset: normal.dot(&self.screen.translation),
        }
    }

    /// `-R_c⁻¹ T_c` unless an eye position is fixed in the calibration.
    pub fn gaze_origin(&self) -> Vec3 {
        match self.eye_origin {
            Some(eye) => eye,
            None => -(self.camera.inverse_rotation() * self.camera.translation),
        }
    }

    pub fn gaze_ray(&self, eye_direction: &Vec3) -> GazeRay {
        GazeRay {
            origin: self.gaze_origin(),
            direction: self.camera.inverse_rotation() * eye_direction,
        }
    }

    pub fn intersect(&self, ray: &GazeRay) -> Result<Point2D, GeometryError> {
        let plane = self.screen_plane();
        let denom = ray.direction.dot(&plane.normal);
        if denom.abs() < PARALLEL_TOLERANCE {
            return Err(GeometryError::NoIntersection);
        }
        let t = (plane.offset - plane.normal.dot(&ray.origin)) / denom;
        if t <= 0.0 {
            return Err(GeometryError::BehindScreen { t });
        }
        let hit = ray.origin + ray.direction * t;
        let local = self.screen.inverse_rotation() * (hit - self.screen.translation);
        if local.z.abs() > PLANE_RESIDUAL_TOLERANCE {
            return Err(GeometryError::Residual {
                residual: local.z.abs(),
            });
        }
        Ok(Point2D::new(local.x, local.y))
    }

    /// Full projection: angles to eye vector, to camera-frame ray, to screen point.
    pub fn project(&self, gaze: &EulerGaze) -> Result<Point2D, GeometryError> {
        self.intersect(&self.gaze_ray(&gaze_vector(gaze)))
    }

    /// Angles whose ray from the gaze origin passes through `target`.
    pub fn aim_at(&self, target: Point2D) -> Result<EulerGaze, GeometryError> {
        let world = self.screen.rotation * Vec3::new(target.x, target.y, 0.0)
            + self.screen.translation;
        let direction = world - self.gaze_origin();
        angles_of(&(self.camera.rotation * direction))
    }
}

impl Default for SceneCalibration {
    fn default() -> Self {
        Self::fixed_seat(0.0, 1000.0).expect("default calibration is valid")
    }
}
