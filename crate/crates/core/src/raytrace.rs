//! Exact mirror reflection on the corneal sphere.
//!
//! These routines solve the reflection geometry numerically under full
//! perspective. They are deliberately independent of the closed-form
//! gaze-reflection-point formula in [`crate::gaze`], which is checked
//! against them.

use crate::error::{geometry, GazeError, Result};
use crate::geometry::{AnatomicalEye, CameraIntrinsics, EyePose, ImagePoint, Vec3};

const SCAN_STEPS: usize = 64;
const MAX_BISECTIONS: usize = 200;

/// Gaze reflection point for the optical axis of `pose`.
pub fn grp_raytrace_oracle(
    pose: &EyePose,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
) -> Result<ImagePoint> {
    grp_raytrace_along(pose, &pose.gaze(), cam, eye)
}

/// Image location where a scene ray travelling along `-axis` reflects off
/// the cornea into the camera centre.
///
/// The reflection point lies on the great circle through the camera-facing
/// pole and `axis`; it is bracketed by a coarse scan of that meridian and
/// then bisected on the equal-angle condition `n.v = n.axis`.
pub fn grp_raytrace_along(
    pose: &EyePose,
    axis: &Vec3,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
) -> Result<ImagePoint> {
    let c = pose.corneal_center;
    let r = eye.r_corneal;
    let a = axis.normalize();
    let to_cam = -c;
    if to_cam.norm() <= r {
        return geometry("camera centre inside the corneal sphere");
    }
    let u = to_cam.normalize();
    let cos_gamma = a.dot(&u).clamp(-1.0, 1.0);
    let perp = a - cos_gamma * u;
    let surface = if perp.norm() < 1e-14 {
        c + r * u
    } else {
        let w = perp.normalize();
        let gamma = perp.norm().atan2(cos_gamma);
        let normal = |beta: f64| beta.cos() * u + beta.sin() * w;
        let residual = |beta: f64| {
            let n = normal(beta);
            let s = c + r * n;
            let v = (-s).normalize();
            n.dot(&v) - n.dot(&a)
        };

        let mut lo = 0.0;
        let mut f_lo = residual(lo);
        let mut hi = None;
        for i in 1..=SCAN_STEPS {
            let b = gamma * i as f64 / SCAN_STEPS as f64;
            let f = residual(b);
            if f == 0.0 {
                hi = Some(b);
                lo = b;
                break;
            }
            if f.signum() != f_lo.signum() {
                hi = Some(b);
                break;
            }
            lo = b;
            f_lo = f;
        }
        let mut hi = hi.ok_or_else(|| GazeError::Geometry("no reflection on the meridian".into()))?;
        let mut converged = false;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                converged = true;
                break;
            }
            let f = residual(mid);
            if f.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GazeError::Numeric("reflection bisection did not converge".into()));
        }
        c + r * normal(0.5 * (lo + hi))
    };

    let n = (surface - c) / r;
    let optical = pose.gaze();
    if n.dot(&optical) < eye.cap_cos() {
        return geometry("reflection point lies outside the visible corneal cap");
    }
    if n.dot(&(-surface).normalize()) <= 0.0 {
        return geometry("reflection point faces away from the camera");
    }
    cam.project(&surface)
}

/// Scene direction seen at pixel `pt` by reflection on the corneal sphere
/// of `pose`.
pub fn corneal_reflection_direction(
    pt: &ImagePoint,
    pose: &EyePose,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
) -> Result<Vec3> {
    let d = cam.ray(pt);
    let c = pose.corneal_center;
    // |t d - c|^2 = r^2
    let b = d.dot(&c);
    let disc = b * b - (c.norm_squared() - eye.r_corneal * eye.r_corneal);
    if disc < 0.0 {
        return geometry("camera ray misses the cornea");
    }
    let t = b - disc.sqrt();
    let s = t * d;
    let n = (s - c) / eye.r_corneal;
    Ok(d - 2.0 * d.dot(&n) * n)
}
