//! Eye model, camera model and the forward projection of the limbus.
//!
//! Conventions used throughout the crate:
//!
//! * Camera frame: camera centre at the origin, `+z` into the scene, image
//!   `x` to the right and image `y` down. Pixel centres sit on integer
//!   coordinates.
//! * Gaze direction for in-plane rotation `phi` and tilt `tau` is
//!   `g = (sin tau sin phi, -sin tau cos phi, -cos tau)`, i.e. it points back
//!   toward the camera half-space.
//! * The projected limbus ellipse has its major axis along
//!   `(cos phi, sin phi)` in pixel coordinates, so the foreshortened minor
//!   axis lies along the projected tilt direction `(sin phi, -cos phi)`.
//!   Ellipse orientation is stored modulo `pi`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Vector2, Vector3};

use crate::error::{domain, geometry, Result};

pub type Vec3 = Vector3<f64>;

/// Two-sphere eye model constants, in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnatomicalEye {
    /// Corneal sphere radius.
    pub r_corneal: f64,
    /// Distance from the limbus centre to the corneal sphere centre.
    pub d_limbus_corneal: f64,
    /// Limbus radius.
    pub r_limbus: f64,
}

impl Default for AnatomicalEye {
    fn default() -> Self {
        AnatomicalEye {
            r_corneal: 7.7,
            d_limbus_corneal: 5.6,
            r_limbus: 5.6,
        }
    }
}

impl AnatomicalEye {
    pub fn new(r_corneal: f64, d_limbus_corneal: f64, r_limbus: f64) -> Result<Self> {
        let eye = AnatomicalEye {
            r_corneal,
            d_limbus_corneal,
            r_limbus,
        };
        eye.validate()?;
        Ok(eye)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r_corneal, self.d_limbus_corneal, self.r_limbus];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return domain(format!("eye model constants must be positive: {self:?}"));
        }
        if self.r_limbus >= self.r_corneal {
            return domain("limbus radius must be smaller than the corneal radius");
        }
        Ok(())
    }

    /// Cosine of the half-angle of the visible corneal cap, seen from the
    /// corneal centre.
    pub fn cap_cos(&self) -> f64 {
        (self.d_limbus_corneal / self.r_corneal).min(1.0)
    }
}

/// A point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImagePoint {
    pub x: f64,
    pub y: f64,
}

impl ImagePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        ImagePoint { x, y }
    }

    pub fn distance(&self, other: &ImagePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Pinhole camera with focal length in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub principal_point: ImagePoint,
    pub width: u32,
    pub height: u32,
    /// Physical pixel size in mm, when known.
    pub pixel_pitch: Option<f64>,
}

impl CameraIntrinsics {
    /// Camera with the principal point at the image centre.
    pub fn new(focal_px: f64, width: u32, height: u32) -> Result<Self> {
        Self::with_principal_point(
            focal_px,
            ImagePoint::new(width as f64 / 2.0, height as f64 / 2.0),
            width,
            height,
        )
    }

    pub fn with_principal_point(
        focal_px: f64,
        principal_point: ImagePoint,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let cam = CameraIntrinsics {
            focal_px,
            principal_point,
            width,
            height,
            pixel_pitch: None,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Builds the camera from a lens focal length and sensor pixel pitch.
    pub fn from_lens(focal_mm: f64, pixel_pitch_mm: f64, width: u32, height: u32) -> Result<Self> {
        if !(pixel_pitch_mm > 0.0) {
            return domain("pixel pitch must be positive");
        }
        let mut cam = Self::new(focal_mm / pixel_pitch_mm, width, height)?;
        cam.pixel_pitch = Some(pixel_pitch_mm);
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px > 0.0) || !self.focal_px.is_finite() {
            return domain("focal length in pixels must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return domain("image size must be nonzero");
        }
        let pp = self.principal_point;
        if !pp.is_finite() {
            return domain("principal point must be finite");
        }
        Ok(())
    }

    /// The same camera viewed through a crop window whose top-left pixel is
    /// `origin` in the original image. The principal point may fall outside
    /// the crop.
    pub fn cropped(&self, origin: (i64, i64), width: u32, height: u32) -> Self {
        CameraIntrinsics {
            principal_point: ImagePoint::new(
                self.principal_point.x - origin.0 as f64,
                self.principal_point.y - origin.1 as f64,
            ),
            width,
            height,
            ..*self
        }
    }

    /// Perspective projection of a camera-frame point.
    pub fn project(&self, p: &Vec3) -> Result<ImagePoint> {
        if !(p.z > 0.0) {
            return geometry(format!("point {:?} is not in front of the camera", p.as_slice()));
        }
        Ok(ImagePoint::new(
            self.principal_point.x + self.focal_px * p.x / p.z,
            self.principal_point.y + self.focal_px * p.y / p.z,
        ))
    }

    /// The camera-frame point at depth `z` seen at pixel `pt`.
    pub fn backproject(&self, pt: &ImagePoint, z: f64) -> Vec3 {
        Vec3::new(
            (pt.x - self.principal_point.x) * z / self.focal_px,
            (pt.y - self.principal_point.y) * z / self.focal_px,
            z,
        )
    }

    /// Unit direction of the camera ray through a pixel.
    pub fn ray(&self, pt: &ImagePoint) -> Vec3 {
        self.backproject(pt, 1.0).normalize()
    }

    pub fn contains(&self, pt: &ImagePoint) -> bool {
        pt.x >= 0.0
            && pt.y >= 0.0
            && pt.x <= (self.width - 1) as f64
            && pt.y <= (self.height - 1) as f64
    }
}

/// Optical-axis direction for in-plane rotation `phi` and tilt `tau`.
pub fn gaze_direction(phi: f64, tau: f64) -> Result<Vec3> {
    if !(0.0..FRAC_PI_2).contains(&tau) {
        return domain(format!("tilt {tau} outside [0, pi/2)"));
    }
    if !phi.is_finite() {
        return domain("rotation angle must be finite");
    }
    Ok(direction_unchecked(phi, tau))
}

pub(crate) fn direction_unchecked(phi: f64, tau: f64) -> Vec3 {
    let (st, ct) = tau.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * sp, -st * cp, -ct)
}

/// Inverse of [`gaze_direction`] for a unit vector with negative `z`.
/// At zero tilt the rotation is undefined and `phi_hint` is returned.
pub(crate) fn angles_from_direction(g: &Vec3, phi_hint: f64) -> (f64, f64) {
    let g = g.normalize();
    let lateral = g.x.hypot(g.y);
    let tau = lateral.atan2(-g.z);
    let phi = if lateral < 1e-15 {
        phi_hint
    } else {
        wrap_two_pi(g.x.atan2(-g.y))
    };
    (phi, tau)
}

pub(crate) fn wrap_two_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

pub(crate) fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(PI);
    if w >= PI {
        0.0
    } else {
        w
    }
}

/// 3D state of one eye in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePose {
    /// Limbus centre, mm.
    pub limbus_center: Vec3,
    /// In-plane rotation, radians in `[0, 2pi)`.
    pub phi: f64,
    /// Tilt of the limbus plane, radians in `[0, pi/2)`.
    pub tau: f64,
    /// Corneal sphere centre, mm.
    pub corneal_center: Vec3,
}

impl EyePose {
    /// Pose from the limbus centre; the corneal centre sits `d_LC` behind
    /// the limbus along the optical axis.
    pub fn new(limbus_center: Vec3, phi: f64, tau: f64, eye: &AnatomicalEye) -> Result<Self> {
        let g = gaze_direction(phi, tau)?;
        if !(limbus_center.z > 0.0) {
            return geometry("limbus centre must be in front of the camera");
        }
        Ok(EyePose {
            limbus_center,
            phi: wrap_two_pi(phi),
            tau,
            corneal_center: limbus_center - eye.d_limbus_corneal * g,
        })
    }

    /// Pose from the corneal sphere centre.
    pub fn from_corneal_center(
        corneal_center: Vec3,
        phi: f64,
        tau: f64,
        eye: &AnatomicalEye,
    ) -> Result<Self> {
        let g = gaze_direction(phi, tau)?;
        let limbus_center = corneal_center + eye.d_limbus_corneal * g;
        if !(limbus_center.z > 0.0) {
            return geometry("limbus centre must be in front of the camera");
        }
        Ok(EyePose {
            limbus_center,
            phi: wrap_two_pi(phi),
            tau,
            corneal_center,
        })
    }

    /// Unit direction given by `(phi, tau)`.
    pub fn gaze(&self) -> Vec3 {
        direction_unchecked(self.phi, self.tau)
    }

    pub fn depth(&self) -> f64 {
        self.limbus_center.z
    }
}

/// Projected limbus `p = (r_max, r_min, x, y, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub r_max: f64,
    pub r_min: f64,
    pub center: ImagePoint,
    /// Major-axis orientation in `[0, pi)`.
    pub phi: f64,
}

impl Ellipse {
    pub fn new(r_max: f64, r_min: f64, center: ImagePoint, phi: f64) -> Result<Self> {
        if !(r_min > 0.0) || !(r_min <= r_max) || !r_max.is_finite() {
            return domain(format!("ellipse radii must satisfy 0 < r_min <= r_max (got {r_max}, {r_min})"));
        }
        if !center.is_finite() || !phi.is_finite() {
            return domain("ellipse centre and orientation must be finite");
        }
        Ok(Ellipse {
            r_max,
            r_min,
            center,
            phi: wrap_pi(phi),
        })
    }

    /// Builds an ellipse from two semi-axes in any order; `theta` is the
    /// direction of the first axis.
    pub fn from_axes(a: f64, b: f64, center: ImagePoint, theta: f64) -> Result<Self> {
        if a >= b {
            Self::new(a, b, center, theta)
        } else {
            Self::new(b, a, center, theta + FRAC_PI_2)
        }
    }

    pub fn circle(r: f64, center: ImagePoint) -> Result<Self> {
        Self::new(r, r, center, 0.0)
    }

    pub fn axis_ratio(&self) -> f64 {
        self.r_min / self.r_max
    }

    /// Coordinates of `(x, y)` in the ellipse frame (major axis first).
    #[inline]
    pub fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.phi.sin_cos();
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Implicit value `u^2/a^2 + v^2/b^2 - 1`; negative inside.
    #[inline]
    pub fn implicit(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.local(x, y);
        let a = self.r_max;
        let b = self.r_min;
        u * u / (a * a) + v * v / (b * b) - 1.0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.implicit(x, y) < 0.0
    }

    /// First-order (Sampson) signed distance to the contour; positive
    /// outside.
    #[inline]
    pub fn contour_distance(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.local(x, y);
        let a2 = self.r_max * self.r_max;
        let b2 = self.r_min * self.r_min;
        let f = u * u / a2 + v * v / b2 - 1.0;
        let gu = 2.0 * u / a2;
        let gv = 2.0 * v / b2;
        let gn = gu.hypot(gv);
        if gn < 1e-12 {
            // At the centre: distance to the nearest contour point.
            -self.r_min
        } else {
            f / gn
        }
    }

    /// Horizontal interval of the interior on image row `y`.
    pub fn row_span(&self, y: f64) -> Option<(f64, f64)> {
        let (s, c) = self.phi.sin_cos();
        let ia = 1.0 / (self.r_max * self.r_max);
        let ib = 1.0 / (self.r_min * self.r_min);
        let dy = y - self.center.y;
        let qa = c * c * ia + s * s * ib;
        let qb = 2.0 * dy * c * s * (ia - ib);
        let qc = dy * dy * (s * s * ia + c * c * ib) - 1.0;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let x0 = (-qb - sq) / (2.0 * qa);
        let x1 = (-qb + sq) / (2.0 * qa);
        Some((self.center.x + x0, self.center.x + x1))
    }

    /// Half extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> (f64, f64) {
        let (s, c) = self.phi.sin_cos();
        let a = self.r_max;
        let b = self.r_min;
        ((a * c).hypot(b * s), (a * s).hypot(b * c))
    }

    /// Point on the contour at parametric angle `t`.
    pub fn point_at(&self, t: f64) -> ImagePoint {
        let (s, c) = self.phi.sin_cos();
        let u = self.r_max * t.cos();
        let v = self.r_min * t.sin();
        ImagePoint::new(self.center.x + c * u - s * v, self.center.y + s * u + c * v)
    }

    /// Ramanujan's perimeter approximation.
    pub fn perimeter(&self) -> f64 {
        let a = self.r_max;
        let b = self.r_min;
        let h = ((a - b) / (a + b)).powi(2);
        PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
    }

    pub fn area(&self) -> f64 {
        PI * self.r_max * self.r_min
    }

    /// Same ellipse with both semi-axes grown by `delta`.
    pub fn inflated(&self, delta: f64) -> Ellipse {
        Ellipse {
            r_max: self.r_max + delta,
            r_min: (self.r_min + delta).max(1e-9),
            ..*self
        }
    }

    /// Whether the bounding box lies inside an image of the given size.
    pub fn inside_image(&self, width: u32, height: u32) -> bool {
        let (hx, hy) = self.half_extents();
        self.center.x - hx >= 0.0
            && self.center.y - hy >= 0.0
            && self.center.x + hx <= (width as f64 - 1.0)
            && self.center.y + hy <= (height as f64 - 1.0)
    }
}

/// Projects the limbus circle under weak perspective: the shape uses the
/// limbus depth, the centre uses full perspective.
pub fn project_limbus(pose: &EyePose, cam: &CameraIntrinsics, eye: &AnatomicalEye) -> Result<Ellipse> {
    let g = gaze_direction(pose.phi, pose.tau)?;
    if !(g.z < 0.0) {
        return geometry("limbus does not face the camera");
    }
    let depth = pose.limbus_center.z;
    if !(depth > 0.0) {
        return geometry("limbus behind the camera");
    }
    let center = cam.project(&pose.limbus_center)?;
    let r_max = cam.focal_px * eye.r_limbus / depth;
    Ellipse::new(r_max, r_max * pose.tau.cos(), center, pose.phi)
}

/// Signed displacement in mm (at eye depth) from the projected limbus
/// centre to the gaze reflection point, measured along the projected tilt
/// direction `(sin phi, -cos phi)`.
///
/// The reflecting surface normal bisects the optical axis and the viewing
/// direction, so it is tilted by `tau / 2`; the offset is
/// `r_C sin(tau/2) - d_LC sin(tau)`.
pub fn grp_offset_mm(tau: f64, eye: &AnatomicalEye) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&tau) {
        return domain(format!("tilt {tau} outside [0, pi/2)"));
    }
    Ok(eye.r_corneal * (tau / 2.0).sin() - eye.d_limbus_corneal * tau.sin())
}

/// Unit vector of the projected tilt direction for rotation `phi`.
pub fn tilt_direction(phi: f64) -> Vector2<f64> {
    Vector2::new(phi.sin(), -phi.cos())
}
