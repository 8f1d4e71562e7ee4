//! Rig design arithmetic: corneal resolution, camera coverage and the
//! Newtonian thin-lens autofocus map.

use crate::error::{config, domain, Result};
use crate::geometry::AnatomicalEye;

/// Capture rig parameters. Lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigSpec {
    /// Distance between the observed subject and the person they look at.
    pub interpersonal_distance: f64,
    pub camera_subject_distance: f64,
    pub focal_length: f64,
    /// mm per pixel.
    pub pixel_pitch: f64,
    pub sensor_width: u32,
    pub sensor_height: u32,
    /// Head movement range to cover, horizontal.
    pub coverage_width: f64,
    /// Head movement range to cover, vertical.
    pub coverage_height: f64,
    /// Overlap between neighbouring camera footprints.
    pub overlap_margin: f64,
    /// Smallest face the face detector accepts, pixels.
    pub required_face_px: f64,
}

impl Default for RigSpec {
    fn default() -> Self {
        RigSpec {
            interpersonal_distance: 550.0,
            camera_subject_distance: 500.0,
            focal_length: 35.0,
            pixel_pitch: 0.0025,
            sensor_width: 2048,
            sensor_height: 2048,
            coverage_width: 250.0,
            coverage_height: 150.0,
            overlap_margin: 0.0,
            required_face_px: 45.0,
        }
    }
}

impl RigSpec {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            self.interpersonal_distance,
            self.camera_subject_distance,
            self.focal_length,
            self.pixel_pitch,
            self.coverage_width,
            self.coverage_height,
        ];
        if lengths.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return config("rig lengths must be positive");
        }
        if self.sensor_width == 0 || self.sensor_height == 0 {
            return config("sensor size must be positive");
        }
        if !(self.overlap_margin >= 0.0) {
            return config("rig.overlap must be nonnegative");
        }
        if !(self.required_face_px >= 0.0) {
            return config("rig.face_px must be nonnegative");
        }
        if self.focal_length >= self.camera_subject_distance {
            return config("focal length must be shorter than the subject distance");
        }
        Ok(())
    }

    /// Subject-plane footprint of one camera, `(width, height)` in mm.
    pub fn footprint(&self) -> (f64, f64) {
        let scale = self.pixel_pitch * (self.camera_subject_distance - self.focal_length) / self.focal_length;
        (self.sensor_width as f64 * scale, self.sensor_height as f64 * scale)
    }
}

/// Pixels per cm on the cornea needed for a face of `required_face_px`
/// pixels to appear in the corneal reflection, where the face spans
/// `face_fraction` of the limbus diameter.
pub fn corneal_resolution_requirement(spec: &RigSpec, eye: &AnatomicalEye, face_fraction: f64) -> Result<f64> {
    if !(face_fraction > 0.0 && face_fraction <= 1.0) {
        return domain("face fraction must be in (0, 1]");
    }
    let limbus_cm = 2.0 * eye.r_limbus / 10.0;
    Ok(spec.required_face_px / (limbus_cm * face_fraction))
}

/// Pixels per cm in the subject plane, from the magnification `f / (D - f)`.
pub fn achieved_resolution(spec: &RigSpec) -> Result<f64> {
    spec.validate()?;
    let magnification = spec.focal_length / (spec.camera_subject_distance - spec.focal_length);
    Ok(magnification / spec.pixel_pitch * 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraLayout {
    pub columns: u32,
    pub rows: u32,
    /// Footprint of one camera, mm.
    pub footprint: (f64, f64),
}

impl CameraLayout {
    pub fn count(&self) -> u32 {
        self.columns * self.rows
    }
}

fn cameras_along(cover: f64, footprint: f64, margin: f64) -> Result<u32> {
    if footprint >= cover {
        return Ok(1);
    }
    if footprint <= margin {
        return config("camera footprint does not exceed the overlap margin");
    }
    let n = ((cover - margin) / (footprint - margin) - 1e-12).ceil();
    Ok(n.max(1.0) as u32)
}

/// Smallest camera grid whose footprints cover the coverage box.
pub fn camera_count(spec: &RigSpec) -> Result<CameraLayout> {
    spec.validate()?;
    let footprint = spec.footprint();
    Ok(CameraLayout {
        columns: cameras_along(spec.coverage_width, footprint.0, spec.overlap_margin)?,
        rows: cameras_along(spec.coverage_height, footprint.1, spec.overlap_margin)?,
        footprint,
    })
}

/// Newtonian thin-lens relation `f^2 = s S`, solved for `s`.
pub fn back_focal_distance(f: f64, subject_depth: f64) -> Result<f64> {
    if !(f > 0.0) || !(subject_depth > 0.0) {
        return domain("focal length and subject depth must be positive");
    }
    Ok(f * f / subject_depth)
}

/// Focal length, subject depth and back focal distance of a focused lens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinLens {
    pub focal_length: f64,
    pub subject_depth: f64,
    pub back_focal_distance: f64,
}

impl ThinLens {
    pub fn focused(focal_length: f64, subject_depth: f64) -> Result<Self> {
        Ok(ThinLens {
            focal_length,
            subject_depth,
            back_focal_distance: back_focal_distance(focal_length, subject_depth)?,
        })
    }

    pub fn is_consistent(&self) -> bool {
        let lhs = self.focal_length * self.focal_length;
        let rhs = self.back_focal_distance * self.subject_depth;
        (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs())
    }
}

/// Linear map from back focal distance to motor units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorMap {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit, motor units.
    pub rms: f64,
}

impl MotorMap {
    pub fn apply(&self, s: f64) -> f64 {
        self.slope * s + self.intercept
    }
}

/// Least-squares fit of `motor = slope * s + intercept` to
/// `(subject depth, motor)` pairs, with `s = f^2 / S`.
pub fn calibrate_motor_map(pairs: &[(f64, f64)], f: f64) -> Result<MotorMap> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(depth, motor)| Ok((back_focal_distance(f, depth)?, motor)))
        .collect::<Result<_>>()?;
    if pts.len() < 2 {
        return config("motor map needs at least two calibration pairs");
    }
    let n = pts.len() as f64;
    let mean_s = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_m = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_s).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_s) * (p.1 - mean_m)).sum();
    if !(sxx > 1e-24 * mean_s.abs().max(1.0).powi(2)) {
        return config("motor map needs at least two distinct subject depths");
    }
    let slope = sxy / sxx;
    let intercept = mean_m - slope * mean_s;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !slope.is_finite() || !intercept.is_finite() {
        return config("motor map fit is not finite");
    }
    Ok(MotorMap { slope, intercept, rms })
}

/// Motor units for a subject at `depth`, rounded half to even.
pub fn motor_command(depth: f64, f: f64, map: &MotorMap) -> Result<i64> {
    if !(depth > 0.0) {
        return domain("depth must be positive");
    }
    let v = map.apply(back_focal_distance(f, depth)?).round_ties_even();
    if !v.is_finite() || v.abs() > i64::MAX as f64 {
        return domain("motor command out of range");
    }
    Ok(v as i64)
}

/// Summary of a rig design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub required_px_per_cm: f64,
    pub achieved_px_per_cm: f64,
    pub layout: CameraLayout,
    pub back_focal_distance: f64,
}

impl DesignReport {
    pub fn meets_requirement(&self) -> bool {
        self.achieved_px_per_cm >= self.required_px_per_cm
    }
}

pub fn design_report(spec: &RigSpec, eye: &AnatomicalEye, face_fraction: f64) -> Result<DesignReport> {
    Ok(DesignReport {
        required_px_per_cm: corneal_resolution_requirement(spec, eye, face_fraction)?,
        achieved_px_per_cm: achieved_resolution(spec)?,
        layout: camera_count(spec)?,
        back_focal_distance: back_focal_distance(spec.focal_length, spec.camera_subject_distance)?,
    })
}
