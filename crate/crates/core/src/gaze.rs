//! Point of gaze: the gaze reflection point (GRP), the kappa offset between
//! optical and visual axes, and its calibration from fixations.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Rotation3;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::config::Config;
use crate::detect::{fit_limbus, HoughConfig};
use crate::error::{config, geometry, GazeError, Result};
use crate::geometry::{
    angles_from_direction, project_limbus, tilt_direction, AnatomicalEye, CameraIntrinsics, Ellipse, EyePose,
    ImagePoint, Vec3,
};
use crate::image::GrayImage;
use crate::pose::{ellipse_to_pose, resolve_ambiguity, AmbiguityPolicy, Branch};
use crate::rng;
use crate::tracker::{init_tracker, track_frame, TrackerConfig, TrackerState};

/// Largest accepted kappa component.
pub const KAPPA_LIMIT_DEG: f64 = 15.0;

const GRID_STEP_DEG: f64 = 0.5;

/// Offset of the visual axis from the optical axis, as two rotations about
/// eye-centred axes parallel to the camera axes.
///
/// A positive horizontal offset turns a frontal visual axis toward image
/// `+x`; a positive vertical offset turns it toward image `-y` (up).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kappa {
    pub horizontal_offset: f64,
    pub vertical_offset: f64,
}

impl Kappa {
    pub fn new(horizontal_offset: f64, vertical_offset: f64) -> Result<Self> {
        let k = Kappa {
            horizontal_offset,
            vertical_offset,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn from_degrees(h_deg: f64, v_deg: f64) -> Result<Self> {
        Kappa::new(h_deg.to_radians(), v_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        let limit = KAPPA_LIMIT_DEG.to_radians() + 1e-12;
        for v in [self.horizontal_offset, self.vertical_offset] {
            if !v.is_finite() || v.abs() > limit {
                return config(format!("kappa component {:.4} deg outside +-15 deg", v.to_degrees()));
            }
        }
        Ok(())
    }

    pub fn negated(&self) -> Kappa {
        Kappa {
            horizontal_offset: -self.horizontal_offset,
            vertical_offset: -self.vertical_offset,
        }
    }

    pub fn degrees(&self) -> (f64, f64) {
        (self.horizontal_offset.to_degrees(), self.vertical_offset.to_degrees())
    }

    /// Rotation taking the optical axis to the visual axis.
    ///
    /// Both offsets form one rotation vector, so negating the kappa gives
    /// the exact inverse rotation.
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::new(Vec3::new(-self.vertical_offset, -self.horizontal_offset, 0.0))
    }

    /// Reads a subject profile with keys `kappa.h_deg` and `kappa.v_deg`.
    pub fn load(path: impl AsRef<Path>) -> Result<Kappa> {
        let cfg = Config::load(path)?;
        Kappa::from_config(&cfg)
    }

    pub fn from_config(cfg: &Config) -> Result<Kappa> {
        let h = cfg.get_f64("kappa.h_deg")?.unwrap_or(0.0);
        let v = cfg.get_f64("kappa.v_deg")?.unwrap_or(0.0);
        Kappa::from_degrees(h, v)
    }

    pub fn to_profile(&self) -> String {
        let (h, v) = self.degrees();
        let mut s = String::new();
        let _ = writeln!(s, "kappa.h_deg = {h}");
        let _ = writeln!(s, "kappa.v_deg = {v}");
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_profile())?;
        Ok(())
    }
}

/// Angle between two vectors, accurate for nearly parallel inputs.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Visual-axis pose: the optical axis rotated by `kappa`. Limbus and
/// corneal centres are left where they are.
pub fn apply_kappa(pose: &EyePose, kappa: &Kappa) -> EyePose {
    let g = kappa.rotation() * pose.gaze();
    let (phi, tau) = angles_from_direction(&g, pose.phi);
    EyePose { phi, tau, ..*pose }
}

/// Gaze reflection point in pixels.
///
/// Under weak perspective the viewing direction is `-z`, so the reflecting
/// normal bisects the (visual) axis and `-z`. Its surface point, taken
/// relative to the limbus centre and scaled by `f / L_z`, is added to the
/// projected limbus centre. Without kappa this is the offset of
/// [`crate::geometry::grp_offset_mm`] along the tilt direction.
pub fn compute_grp(
    pose: &EyePose,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    kappa: Option<&Kappa>,
) -> Result<ImagePoint> {
    let visual = match kappa {
        Some(k) => apply_kappa(pose, k),
        None => *pose,
    };
    if !(visual.tau < FRAC_PI_2) {
        return geometry("visual axis does not face the camera");
    }
    let a = visual.gaze();
    let normal = (a + Vec3::new(0.0, 0.0, -1.0)).normalize();
    if normal.dot(&pose.gaze()) < eye.cap_cos() {
        return geometry("reflection point lies outside the visible corneal cap");
    }
    let t = tilt_direction(visual.phi);
    let lateral = eye.r_corneal * (visual.tau / 2.0).sin();
    let back = pose.corneal_center - pose.limbus_center;
    let scale = cam.focal_px / pose.depth();
    let center = cam.project(&pose.limbus_center)?;
    Ok(ImagePoint::new(
        center.x + scale * (lateral * t.x + back.x),
        center.y + scale * (lateral * t.y + back.y),
    ))
}

/// One fixation: an eye pose and the marker it looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationSample {
    pub pose: EyePose,
    pub target_position: Vec3,
}

impl FixationSample {
    /// The marker must lie on the gaze side of the eye.
    pub fn new(pose: EyePose, target_position: Vec3) -> Result<Self> {
        let s = FixationSample { pose, target_position };
        if s.line_of_sight().dot(&Vec3::new(0.0, 0.0, -1.0)) <= 0.0 {
            return config("fixation target is behind the eye");
        }
        Ok(s)
    }

    /// Unit direction from the corneal centre to the target.
    pub fn line_of_sight(&self) -> Vec3 {
        (self.target_position - self.pose.corneal_center).normalize()
    }

    /// Angle between the kappa-corrected axis and the line of sight.
    pub fn error(&self, kappa: &Kappa) -> f64 {
        angle_between(&(kappa.rotation() * self.pose.gaze()), &self.line_of_sight())
    }
}

/// Optical-axis pose of an eye with corneal centre `corneal_center` whose
/// visual axis passes through `target`.
pub fn fixating_pose(corneal_center: Vec3, target: Vec3, kappa: &Kappa, eye: &AnatomicalEye) -> Result<EyePose> {
    let los = (target - corneal_center).normalize();
    let g = kappa.rotation().inverse() * los;
    if !(g.z < 0.0) {
        return geometry("optical axis does not face the camera");
    }
    let (phi, tau) = angles_from_direction(&g, 0.0);
    EyePose::from_corneal_center(corneal_center, phi, tau, eye)
}

fn mean_error(samples: &[FixationSample], h: f64, v: f64) -> f64 {
    let rot = Kappa {
        horizontal_offset: h,
        vertical_offset: v,
    }
    .rotation();
    let sum: f64 = samples
        .iter()
        .map(|s| angle_between(&(rot * s.pose.gaze()), &s.line_of_sight()))
        .sum();
    sum / samples.len() as f64
}

/// Grid search over the kappa bounds, one quadratic step on the 3x3
/// neighbourhood of the grid optimum, then a compass search.
fn minimize_kappa(f: &dyn Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let limit = KAPPA_LIMIT_DEG.to_radians();
    let step = GRID_STEP_DEG.to_radians();
    let half = (KAPPA_LIMIT_DEG / GRID_STEP_DEG).round() as i64;

    let mut best = (0.0, 0.0, f(0.0, 0.0));
    for i in -half..=half {
        for j in -half..=half {
            let (h, v) = (i as f64 * step, j as f64 * step);
            let e = f(h, v);
            if e < best.2 {
                best = (h, v, e);
            }
        }
    }

    let (h0, v0) = (best.0, best.1);
    let at = |di: f64, dj: f64| f(h0 + di * step, v0 + dj * step);
    let gh = (at(1.0, 0.0) - at(-1.0, 0.0)) / 2.0;
    let gv = (at(0.0, 1.0) - at(0.0, -1.0)) / 2.0;
    let hhh = at(1.0, 0.0) - 2.0 * best.2 + at(-1.0, 0.0);
    let hvv = at(0.0, 1.0) - 2.0 * best.2 + at(0.0, -1.0);
    let hhv = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / 4.0;
    let det = hhh * hvv - hhv * hhv;
    if hhh > 0.0 && det > 0.0 {
        let dh = -(hvv * gh - hhv * gv) / det;
        let dv = -(hhh * gv - hhv * gh) / det;
        if dh.abs() <= 1.0 && dv.abs() <= 1.0 {
            let (h, v) = (h0 + dh * step, v0 + dv * step);
            let e = f(h, v);
            if e < best.2 {
                best = (h, v, e);
            }
        }
    }

    let mut delta = step / 2.0;
    while delta > 1e-10 {
        let mut moved = false;
        for (dh, dv) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let h = (best.0 + dh * delta).clamp(-limit, limit);
            let v = (best.1 + dv * delta).clamp(-limit, limit);
            let e = f(h, v);
            if e < best.2 {
                best = (h, v, e);
                moved = true;
                break;
            }
        }
        if !moved {
            delta /= 2.0;
        }
    }
    best
}

/// Estimates kappa from fixations by minimising the mean angle between the
/// corrected visual axis and the line of sight to each target.
///
/// Returns the kappa and the remaining mean error in degrees.
pub fn calibrate_kappa(samples: &[FixationSample]) -> Result<(Kappa, f64)> {
    if samples.is_empty() {
        return config("kappa calibration needs at least one fixation");
    }
    let (h, v, e) = minimize_kappa(&|h, v| mean_error(samples, h, v));
    let kappa = Kappa {
        horizontal_offset: h,
        vertical_offset: v,
    };
    Ok((kappa, e.to_degrees()))
}

/// Marker set for the calibration-convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationPool {
    pub corneal_center: Vec3,
    pub targets: Vec<Vec3>,
    pub cam: CameraIntrinsics,
    pub eye: AnatomicalEye,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// Largest calibration set size.
    pub max_points: usize,
    /// Gaussian noise on the ellipse centre and axes, pixels.
    pub noise_px: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Mean held-out gaze error against the number of calibration points.
///
/// Each trial draws `k` pool markers, calibrates on poses re-estimated from
/// noisy ellipses and scores the remaining markers with their true optical
/// axes, so the curve isolates the calibration error.
pub fn kappa_convergence_curve(
    true_kappa: &Kappa,
    pool: &FixationPool,
    opts: &ConvergenceOptions,
) -> Result<Vec<(usize, f64)>> {
    if opts.trials == 0 {
        return Ok(Vec::new());
    }
    let n = pool.targets.len();
    if opts.max_points == 0 || opts.max_points >= n {
        return config(format!(
            "pool of {n} markers cannot hold out points for {} calibration points",
            opts.max_points
        ));
    }
    let truth: Vec<FixationSample> = pool
        .targets
        .iter()
        .map(|t| {
            let pose = fixating_pose(pool.corneal_center, *t, true_kappa, &pool.eye)?;
            FixationSample::new(pose, *t)
        })
        .collect::<Result<_>>()?;
    let noise = Normal::new(0.0, opts.noise_px.max(0.0)).map_err(|e| GazeError::Config(e.to_string()))?;

    let mut curve = Vec::with_capacity(opts.max_points);
    for k in 1..=opts.max_points {
        let mut total = 0.0;
        for trial in 0..opts.trials {
            let mut r = rng::seeded(rng::derive(opts.seed, (k as u64) << 32 | trial as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut r);
            let (train_idx, test_idx) = order.split_at(k);
            let train: Vec<FixationSample> = train_idx
                .iter()
                .map(|&i| {
                    let s = &truth[i];
                    let pose = if opts.noise_px > 0.0 {
                        noisy_pose(&s.pose, &s.target_position, pool, &mut || noise.sample(&mut r))?
                    } else {
                        s.pose
                    };
                    Ok(FixationSample {
                        pose,
                        target_position: s.target_position,
                    })
                })
                .collect::<Result<_>>()?;
            let (kappa, _) = calibrate_kappa(&train)?;
            let err: f64 = test_idx.iter().map(|&i| truth[i].error(&kappa)).sum::<f64>() / test_idx.len() as f64;
            total += err.to_degrees();
        }
        curve.push((k, total / opts.trials as f64));
    }
    Ok(curve)
}

fn noisy_pose(
    pose: &EyePose,
    target: &Vec3,
    pool: &FixationPool,
    draw: &mut dyn FnMut() -> f64,
) -> Result<EyePose> {
    let e = project_limbus(pose, &pool.cam, &pool.eye)?;
    let a = (e.r_max + draw()).max(1.0);
    let b = (e.r_min + draw()).max(1.0);
    let center = ImagePoint::new(e.center.x + draw(), e.center.y + draw());
    let noisy = Ellipse::from_axes(a, b, center, e.phi)?;
    let pair = ellipse_to_pose(&noisy, &pool.cam, &pool.eye)?;
    let resolved = resolve_ambiguity(&pair, &AmbiguityPolicy::Hemisphere { roi: *target }, None);
    Ok(resolved.pose)
}

/// Per-frame diagnostics attached to a [`GazeEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateFlags {
    pub low_confidence: bool,
    pub ambiguity_fallback: bool,
    pub no_ellipse: bool,
    pub tracking_lost: bool,
    pub grp_invalid: bool,
}

impl EstimateFlags {
    pub fn is_empty(&self) -> bool {
        *self == EstimateFlags::default()
    }

    /// `|`-separated flag names, empty when no flag is set.
    pub fn label(&self) -> String {
        let names = [
            (self.low_confidence, "low_confidence"),
            (self.ambiguity_fallback, "ambiguity_fallback"),
            (self.no_ellipse, "no_ellipse"),
            (self.tracking_lost, "tracking_lost"),
            (self.grp_invalid, "grp_invalid"),
        ];
        names
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Output for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeEstimate {
    pub ellipse: Option<Ellipse>,
    /// Optical-axis pose.
    pub pose: Option<EyePose>,
    /// Gaze reflection point in pixels.
    pub grp: Option<ImagePoint>,
    /// Visual-axis direction in the camera frame, from the corneal centre.
    pub visual_axis: Option<Vec3>,
    pub confidence: f64,
    pub flags: EstimateFlags,
}

impl GazeEstimate {
    pub fn failed(flags: EstimateFlags) -> Self {
        GazeEstimate {
            flags,
            ..Default::default()
        }
    }
}

/// Settings for [`pog_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub hough: HoughConfig,
    pub tracker: TrackerConfig,
    pub ambiguity: AmbiguityPolicy,
    /// Limbus depth assumed for detection when no hint is given, mm.
    pub default_depth: f64,
    /// Keep the tracker between frames; otherwise detect every frame.
    pub track: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hough: HoughConfig::default(),
            tracker: TrackerConfig::default(),
            ambiguity: AmbiguityPolicy::default(),
            default_depth: 500.0,
            track: true,
        }
    }
}

/// Detection of a single frame followed by pose recovery.
pub fn detect_pose(
    image: &GrayImage,
    depth_mm: f64,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    cfg: &PipelineConfig,
    previous: Option<&EyePose>,
    seed: u64,
) -> Result<GazeEstimate> {
    let fit = fit_limbus(image, depth_mm, cam, eye, &cfg.hough, seed)?;
    let pair = ellipse_to_pose(&fit.ellipse, cam, eye)?;
    let resolved = resolve_ambiguity(&pair, &cfg.ambiguity, previous);
    let confidence = crate::detect::score_confidence(fit.score, &fit.ellipse, &cfg.hough);
    Ok(GazeEstimate {
        ellipse: Some(fit.ellipse),
        pose: Some(resolved.pose),
        grp: None,
        visual_axis: None,
        confidence,
        flags: EstimateFlags {
            ambiguity_fallback: resolved.fallback,
            ..Default::default()
        },
    })
}

/// Adds the kappa-corrected GRP and visual axis to an estimate.
pub fn finish_estimate(
    mut est: GazeEstimate,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    kappa: &Kappa,
) -> GazeEstimate {
    if let Some(pose) = est.pose {
        est.visual_axis = Some(kappa.rotation() * pose.gaze());
        match compute_grp(&pose, cam, eye, Some(kappa)) {
            Ok(p) => est.grp = Some(p),
            Err(e) => {
                log::debug!("no gaze reflection point: {e}");
                est.grp = None;
                est.flags.grp_invalid = true;
            }
        }
        if let Some(g) = est.grp {
            if !cam.contains(&g) {
                est.flags.grp_invalid = true;
            }
        }
    }
    est
}

/// Full per-frame chain from an eye image to the point of gaze.
///
/// Without tracker state the limbus is detected from scratch and a tracker
/// is started on the result; with state the frame is tracked. Failures are
/// reported through the estimate flags and drop the tracker state so the
/// next frame re-detects.
#[allow(clippy::too_many_arguments)]
pub fn pog_pipeline(
    image: &GrayImage,
    state: Option<TrackerState>,
    depth_hint: Option<f64>,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    kappa: &Kappa,
    cfg: &PipelineConfig,
    seed: u64,
) -> (Option<TrackerState>, GazeEstimate) {
    match state {
        Some(st) if cfg.track => match track_frame(st, image, depth_hint, cam, eye, &cfg.hough, &cfg.tracker, seed) {
            Ok((st, est)) => (Some(st), finish_estimate(est, cam, eye, kappa)),
            Err(GazeError::TrackingLost { frames }) => {
                log::info!("tracking lost after {frames} frames");
                (
                    None,
                    GazeEstimate::failed(EstimateFlags {
                        tracking_lost: true,
                        low_confidence: true,
                        ..Default::default()
                    }),
                )
            }
            Err(e) => {
                log::warn!("tracking failed: {e}");
                (None, GazeEstimate::failed(EstimateFlags { low_confidence: true, ..Default::default() }))
            }
        },
        previous => {
            let depth = depth_hint.unwrap_or(cfg.default_depth);
            let prev_pose = previous.as_ref().map(|s| s.last_estimate);
            match detect_pose(image, depth, cam, eye, cfg, prev_pose.as_ref(), seed) {
                Ok(est) => {
                    let est = finish_estimate(est, cam, eye, kappa);
                    let next = if cfg.track {
                        est.pose.and_then(|p| {
                            init_tracker(&p, cfg.tracker.count, &cfg.tracker.noise, rng::derive(seed, 1)).ok()
                        })
                    } else {
                        None
                    };
                    (next, est)
                }
                Err(e) => {
                    log::debug!("detection failed: {e}");
                    (
                        None,
                        GazeEstimate::failed(EstimateFlags {
                            no_ellipse: true,
                            low_confidence: true,
                            ..Default::default()
                        }),
                    )
                }
            }
        }
    }
}

/// Picks the branch of `pair`-style ambiguity closest to `reference`.
pub(crate) fn closest_branch(e: &Ellipse, cam: &CameraIntrinsics, eye: &AnatomicalEye, reference: &Vec3) -> Result<EyePose> {
    let pair = ellipse_to_pose(e, cam, eye)?;
    let ap = angle_between(&pair.pose_plus.gaze(), reference);
    let am = angle_between(&pair.pose_minus.gaze(), reference);
    Ok(*pair.get(if am < ap { Branch::Minus } else { Branch::Plus }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grp_offset_mm;
    use crate::raytrace::grp_raytrace_oracle;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(14000.0, 2000, 2000).unwrap()
    }

    #[test]
    fn zero_kappa_is_identity() {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(1.0, 2.0, 500.0), 0.7, 0.3, &eye).unwrap();
        let out = apply_kappa(&pose, &Kappa::default());
        assert!((out.phi - pose.phi).abs() < 1e-12 && (out.tau - pose.tau).abs() < 1e-12);
        assert_eq!(out.limbus_center, pose.limbus_center);
    }

    #[test]
    fn negated_kappa_inverts() {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(1.0, 2.0, 500.0), 2.2, 0.4, &eye).unwrap();
        let k = Kappa::from_degrees(4.0, -3.0).unwrap();
        let back = apply_kappa(&apply_kappa(&pose, &k), &k.negated());
        assert!((back.gaze() - pose.gaze()).norm() < 1e-12);
        assert!((back.phi - pose.phi).abs() < 1e-12 && (back.tau - pose.tau).abs() < 1e-12);
    }

    #[test]
    fn kappa_angle_is_offset_norm() {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.0, 0.0, &eye).unwrap();
        let k = Kappa::from_degrees(3.0, -2.0).unwrap();
        let a = angle_between(&pose.gaze(), &apply_kappa(&pose, &k).gaze()).to_degrees();
        assert!((a - 13f64.sqrt()).abs() < 0.01);
        let tilted = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 1.0, 0.3, &eye).unwrap();
        let out = apply_kappa(&tilted, &k);
        assert!((out.gaze().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_bounds() {
        assert!(Kappa::from_degrees(15.0, -15.0).is_ok());
        assert!(Kappa::from_degrees(15.5, 0.0).is_err());
        assert!(Kappa::from_degrees(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn grp_without_kappa_matches_offset_formula() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let tau = 30f64.to_radians();
        let phi = 0.9;
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), phi, tau, &eye).unwrap();
        let grp = compute_grp(&pose, &cam, &eye, None).unwrap();
        let c = cam.project(&pose.limbus_center).unwrap();
        let off = grp_offset_mm(tau, &eye).unwrap() * 14000.0 / 500.0;
        let t = tilt_direction(phi);
        assert!((grp.x - (c.x + off * t.x)).abs() < 1e-9);
        assert!((grp.y - (c.y + off * t.y)).abs() < 1e-9);
    }

    #[test]
    fn frontal_grp_is_limbus_center() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.0, 0.0, &eye).unwrap();
        let grp = compute_grp(&pose, &cam, &eye, Some(&Kappa::default())).unwrap();
        assert!(grp.distance(&cam.principal_point) < 1e-12);
    }

    #[test]
    fn grp_matches_oracle() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        for tau_deg in [0.0, 5.0, 10.0, 20.0, 30.0, 40.0] {
            for phi in [0.0, 1.0, 2.5, 4.0] {
                let pose = EyePose::new(Vec3::new(1.0, -0.5, 500.0), phi, f64::to_radians(tau_deg), &eye).unwrap();
                let a = compute_grp(&pose, &cam, &eye, None).unwrap();
                let b = grp_raytrace_oracle(&pose, &cam, &eye).unwrap();
                let tol = 0.005 * eye.r_corneal * cam.focal_px / pose.depth();
                assert!(a.distance(&b) < tol, "tau {tau_deg} phi {phi}: {}", a.distance(&b));
            }
        }
    }

    #[test]
    fn kappa_grp_follows_visual_axis_oracle() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.5, 0.35, &eye).unwrap();
        let k = Kappa::from_degrees(4.0, 2.0).unwrap();
        let a = compute_grp(&pose, &cam, &eye, Some(&k)).unwrap();
        let axis = k.rotation() * pose.gaze();
        let b = crate::raytrace::grp_raytrace_along(&pose, &axis, &cam, &eye).unwrap();
        let tol = 0.005 * eye.r_corneal * cam.focal_px / pose.depth();
        assert!(a.distance(&b) < tol, "{}", a.distance(&b));
    }

    #[test]
    fn larger_kappa_moves_grp_further() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.3, 0.2, &eye).unwrap();
        let base = compute_grp(&pose, &cam, &eye, None).unwrap();
        let two = compute_grp(&pose, &cam, &eye, Some(&Kappa::from_degrees(2.0, 0.0).unwrap())).unwrap();
        let five = compute_grp(&pose, &cam, &eye, Some(&Kappa::from_degrees(5.0, 0.0).unwrap())).unwrap();
        assert!((five.x - base.x).abs() > (two.x - base.x).abs());
    }

    #[test]
    fn grp_is_continuous_in_tau() {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let mut prev: Option<ImagePoint> = None;
        for i in 0..=400 {
            let tau = f64::to_radians(i as f64 * 0.1);
            let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 1.3, tau, &eye).unwrap();
            let g = compute_grp(&pose, &cam, &eye, None).unwrap();
            if let Some(p) = prev {
                assert!(g.distance(&p) < 0.5);
            }
            prev = Some(g);
        }
    }

    fn samples(kappa: &Kappa, n: usize) -> Vec<FixationSample> {
        let eye = AnatomicalEye::default();
        let c = Vec3::new(0.0, 0.0, 505.0);
        (0..n)
            .map(|i| {
                let a = i as f64 * 1.3;
                let t = Vec3::new(250.0 * a.cos() + 60.0, 200.0 * a.sin() - 40.0, -300.0);
                FixationSample::new(fixating_pose(c, t, kappa, &eye).unwrap(), t).unwrap()
            })
            .collect()
    }

    #[test]
    fn calibration_recovers_zero_kappa() {
        let (k, res) = calibrate_kappa(&samples(&Kappa::default(), 5)).unwrap();
        let (h, v) = k.degrees();
        assert!(h.abs() < 0.01 && v.abs() < 0.01 && res < 0.01);
    }

    #[test]
    fn calibration_recovers_kappa() {
        let truth = Kappa::from_degrees(3.0, -2.0).unwrap();
        let (k, res) = calibrate_kappa(&samples(&truth, 5)).unwrap();
        let (h, v) = k.degrees();
        assert!((h - 3.0).abs() < 0.05 && (v + 2.0).abs() < 0.05, "{h} {v}");
        assert!(res < 1e-3);
    }

    #[test]
    fn single_sample_is_fit_exactly() {
        let truth = Kappa::from_degrees(-4.0, 6.0).unwrap();
        let (_, res) = calibrate_kappa(&samples(&truth, 1)).unwrap();
        assert!(res < 1e-6, "{res}");
    }

    #[test]
    fn empty_calibration_is_config_error() {
        assert!(matches!(calibrate_kappa(&[]), Err(GazeError::Config(_))));
    }

    #[test]
    fn calibration_never_worse_than_identity() {
        let truth = Kappa::from_degrees(1.0, 2.0).unwrap();
        let mut s = samples(&truth, 6);
        for (i, x) in s.iter_mut().enumerate() {
            x.target_position.x += 15.0 * (i as f64 - 2.5);
        }
        let (k, res) = calibrate_kappa(&s).unwrap();
        let identity = s.iter().map(|x| x.error(&Kappa::default())).sum::<f64>() / s.len() as f64;
        assert!(res <= identity.to_degrees() + 1e-12);
        k.validate().unwrap();
    }

    #[test]
    fn profile_round_trip() {
        let k = Kappa::from_degrees(2.5, -1.25).unwrap();
        let cfg = Config::parse(&k.to_profile()).unwrap();
        let back = Kappa::from_config(&cfg).unwrap();
        assert!((back.horizontal_offset - k.horizontal_offset).abs() < 1e-15);
        assert!((back.vertical_offset - k.vertical_offset).abs() < 1e-15);
    }

    fn pool() -> FixationPool {
        let mut targets = Vec::new();
        for i in 0..5 {
            for j in 0..3 {
                targets.push(Vec3::new(-200.0 + 100.0 * i as f64 + 150.0, -100.0 + 100.0 * j as f64 - 120.0, -300.0));
            }
        }
        FixationPool {
            corneal_center: Vec3::new(0.0, 0.0, 505.0),
            targets,
            cam: cam(),
            eye: AnatomicalEye::default(),
        }
    }

    #[test]
    fn noiseless_curve_converges() {
        let truth = Kappa::from_degrees(3.0, -2.0).unwrap();
        let opts = ConvergenceOptions { max_points: 6, noise_px: 0.0, trials: 10, seed: 4 };
        let curve = kappa_convergence_curve(&truth, &pool(), &opts).unwrap();
        assert_eq!(curve.len(), 6);
        assert!(curve[4].1 <= 0.1, "{curve:?}");
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 + 0.05, "{curve:?}");
        }
    }

    #[test]
    fn zero_trials_is_empty() {
        let opts = ConvergenceOptions { max_points: 3, noise_px: 0.0, trials: 0, seed: 0 };
        assert!(kappa_convergence_curve(&Kappa::default(), &pool(), &opts).unwrap().is_empty());
    }
}
