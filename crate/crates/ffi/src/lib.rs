//! C interface to `gaze-core`.
//!
//! Every fallible function returns a [`GazeStatus`]. On failure the output
//! arguments are left untouched and [`gaze_last_error`] describes the
//! problem for the calling thread. Trackers are opaque handles owned by the
//! caller and released with [`gaze_tracker_free`].

#![allow(clippy::missing_safety_doc, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gaze_core::detect::{fit_limbus, HoughConfig};
use gaze_core::gaze::{self, calibrate_kappa, compute_grp, pog_pipeline, FixationSample, Kappa, PipelineConfig};
use gaze_core::geometry::{
    self, grp_offset_mm, project_limbus, AnatomicalEye, CameraIntrinsics, Ellipse, EyePose, ImagePoint, Vec3,
};
use gaze_core::image::GrayImage;
use gaze_core::optics::{self, MotorMap};
use gaze_core::pose::{ellipse_to_pose, AmbiguityPolicy};
use gaze_core::raytrace::grp_raytrace_oracle;
use gaze_core::tracker::TrackerState;
use gaze_core::{rng, GazeError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GazeStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Geometry = 3,
    Numeric = 4,
    Config = 5,
    NoEllipse = 6,
    TrackingLost = 7,
    CropNotFound = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

pub const GAZE_FLAG_LOW_CONFIDENCE: u32 = 1;
pub const GAZE_FLAG_AMBIGUITY_FALLBACK: u32 = 1 << 1;
pub const GAZE_FLAG_NO_ELLIPSE: u32 = 1 << 2;
pub const GAZE_FLAG_TRACKING_LOST: u32 = 1 << 3;
pub const GAZE_FLAG_GRP_INVALID: u32 = 1 << 4;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazePoint {
    pub x: f64,
    pub y: f64,
}

/// Eye model constants, mm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeEye {
    pub r_corneal: f64,
    pub d_limbus_corneal: f64,
    pub r_limbus: f64,
}

/// Pinhole camera; `cx`, `cy` is the principal point in pixels.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeCamera {
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

/// Eye pose in the camera frame. `corneal_center` is an output only; on
/// input it is recomputed from the limbus centre and the angles.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazePose {
    pub limbus_center: GazeVec3,
    pub corneal_center: GazeVec3,
    pub phi: f64,
    pub tau: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeEllipse {
    pub r_max: f64,
    pub r_min: f64,
    pub center: GazePoint,
    pub phi: f64,
}

/// Angular offsets between optical and visual axis, radians.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeKappa {
    pub horizontal: f64,
    pub vertical: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeMotorMap {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GazeAmbiguity {
    Hemisphere = 0,
    Continuity = 1,
    ForcedPlus = 2,
    ForcedMinus = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeTrackerOptions {
    pub camera: GazeCamera,
    pub eye: GazeEye,
    pub kappa: GazeKappa,
    pub seed: u64,
    pub particles: u32,
    /// Track between frames; otherwise every frame is detected afresh.
    pub track: bool,
    /// Limbus depth used when a frame comes without a hint, mm.
    pub default_depth: f64,
    pub ambiguity: GazeAmbiguity,
    /// Region of interest for the hemisphere prior, camera frame, mm.
    pub roi: GazeVec3,
}

/// Per-frame result. Fields guarded by a `has_` flag are zero when unset.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeEstimate {
    pub has_ellipse: bool,
    pub ellipse: GazeEllipse,
    pub has_pose: bool,
    pub pose: GazePose,
    pub has_grp: bool,
    pub grp: GazePoint,
    pub has_visual_axis: bool,
    pub visual_axis: GazeVec3,
    pub confidence: f64,
    /// Bitwise or of the `GAZE_FLAG_` constants.
    pub flags: u32,
}

/// Frame-to-frame tracker.
pub struct GazeTracker {
    cam: CameraIntrinsics,
    eye: AnatomicalEye,
    kappa: Kappa,
    cfg: PipelineConfig,
    seed: u64,
    frame: u64,
    state: Option<TrackerState>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: GazeStatus,
    message: String,
}

impl From<GazeError> for Failure {
    fn from(e: GazeError) -> Self {
        let status = match &e {
            GazeError::Domain(_) => GazeStatus::Domain,
            GazeError::Geometry(_) => GazeStatus::Geometry,
            GazeError::Numeric(_) => GazeStatus::Numeric,
            GazeError::Config(_) => GazeStatus::Config,
            GazeError::NoEllipseFound(_) => GazeStatus::NoEllipse,
            GazeError::TrackingLost { .. } => GazeStatus::TrackingLost,
            GazeError::CropNotFound { .. } => GazeStatus::CropNotFound,
            GazeError::Parse { .. } => GazeStatus::Parse,
            GazeError::Io(_) => GazeStatus::Io,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure {
        status: GazeStatus::NullPointer,
        message: format!("{what} is null"),
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GazeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GazeStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.message);
            e.status
        }
        Err(_) => {
            set_error("internal panic".into());
            GazeStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn output<T>(p: *mut T, what: &str, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

impl From<Vec3> for GazeVec3 {
    fn from(v: Vec3) -> Self {
        GazeVec3 { x: v.x, y: v.y, z: v.z }
    }
}

impl From<GazeVec3> for Vec3 {
    fn from(v: GazeVec3) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl From<ImagePoint> for GazePoint {
    fn from(p: ImagePoint) -> Self {
        GazePoint { x: p.x, y: p.y }
    }
}

impl From<AnatomicalEye> for GazeEye {
    fn from(e: AnatomicalEye) -> Self {
        GazeEye {
            r_corneal: e.r_corneal,
            d_limbus_corneal: e.d_limbus_corneal,
            r_limbus: e.r_limbus,
        }
    }
}

impl From<EyePose> for GazePose {
    fn from(p: EyePose) -> Self {
        GazePose {
            limbus_center: p.limbus_center.into(),
            corneal_center: p.corneal_center.into(),
            phi: p.phi,
            tau: p.tau,
        }
    }
}

impl From<Ellipse> for GazeEllipse {
    fn from(e: Ellipse) -> Self {
        GazeEllipse {
            r_max: e.r_max,
            r_min: e.r_min,
            center: e.center.into(),
            phi: e.phi,
        }
    }
}

impl From<MotorMap> for GazeMotorMap {
    fn from(m: MotorMap) -> Self {
        GazeMotorMap {
            slope: m.slope,
            intercept: m.intercept,
            rms: m.rms,
        }
    }
}

fn camera_of(c: &GazeCamera) -> Result<CameraIntrinsics, Failure> {
    Ok(CameraIntrinsics::with_principal_point(
        c.focal_px,
        ImagePoint::new(c.cx, c.cy),
        c.width,
        c.height,
    )?)
}

fn eye_of(e: &GazeEye) -> Result<AnatomicalEye, Failure> {
    Ok(AnatomicalEye::new(e.r_corneal, e.d_limbus_corneal, e.r_limbus)?)
}

fn pose_of(p: &GazePose, eye: &AnatomicalEye) -> Result<EyePose, Failure> {
    Ok(EyePose::new(p.limbus_center.into(), p.phi, p.tau, eye)?)
}

fn ellipse_of(e: &GazeEllipse) -> Result<Ellipse, Failure> {
    Ok(Ellipse::new(e.r_max, e.r_min, ImagePoint::new(e.center.x, e.center.y), e.phi)?)
}

fn kappa_of(k: &GazeKappa) -> Result<Kappa, Failure> {
    Ok(Kappa::new(k.horizontal, k.vertical)?)
}

unsafe fn image_of(pixels: *const u8, width: u32, height: u32, stride: usize) -> Result<GrayImage, Failure> {
    if pixels.is_null() {
        return Err(null("pixels"));
    }
    let w = width as usize;
    if stride < w {
        return Err(GazeError::Domain(format!("stride {stride} shorter than width {width}")).into());
    }
    if w == 0 || height == 0 {
        return Err(GazeError::Domain("image dimensions must be nonzero".into()).into());
    }
    let len = stride * (height as usize - 1) + w;
    let src = slice::from_raw_parts(pixels, len);
    let mut data = Vec::with_capacity(w * height as usize);
    for y in 0..height as usize {
        data.extend_from_slice(&src[y * stride..y * stride + w]);
    }
    Ok(GrayImage::from_raw(width, height, data)?)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gaze_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gaze_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn gaze_eye_default(out: *mut GazeEye) -> GazeStatus {
    guard(|| output(out, "out", AnatomicalEye::default().into()))
}

/// Camera with the principal point at the image centre.
#[no_mangle]
pub unsafe extern "C" fn gaze_camera_new(focal_px: f64, width: u32, height: u32, out: *mut GazeCamera) -> GazeStatus {
    guard(|| {
        let c = CameraIntrinsics::new(focal_px, width, height)?;
        output(
            out,
            "out",
            GazeCamera {
                focal_px: c.focal_px,
                cx: c.principal_point.x,
                cy: c.principal_point.y,
                width,
                height,
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn gaze_direction(phi: f64, tau: f64, out: *mut GazeVec3) -> GazeStatus {
    guard(|| output(out, "out", geometry::gaze_direction(phi, tau)?.into()))
}

#[no_mangle]
pub unsafe extern "C" fn gaze_pose_new(
    limbus_center: GazeVec3,
    phi: f64,
    tau: f64,
    eye: *const GazeEye,
    out: *mut GazePose,
) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        output(out, "out", EyePose::new(limbus_center.into(), phi, tau, &eye)?.into())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gaze_project_limbus(
    pose: *const GazePose,
    camera: *const GazeCamera,
    eye: *const GazeEye,
    out: *mut GazeEllipse,
) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        let cam = camera_of(input(camera, "camera")?)?;
        let pose = pose_of(input(pose, "pose")?, &eye)?;
        output(out, "out", project_limbus(&pose, &cam, &eye)?.into())
    })
}

/// Both poses consistent with `ellipse`: `plus` keeps the ellipse
/// orientation, `minus` turns it by half a revolution.
#[no_mangle]
pub unsafe extern "C" fn gaze_ellipse_to_pose(
    ellipse: *const GazeEllipse,
    camera: *const GazeCamera,
    eye: *const GazeEye,
    plus: *mut GazePose,
    minus: *mut GazePose,
) -> GazeStatus {
    guard(|| {
        if plus.is_null() || minus.is_null() {
            return Err(null("output pose"));
        }
        let eye = eye_of(input(eye, "eye")?)?;
        let cam = camera_of(input(camera, "camera")?)?;
        let e = ellipse_of(input(ellipse, "ellipse")?)?;
        let pair = ellipse_to_pose(&e, &cam, &eye)?;
        output(plus, "plus", pair.pose_plus.into())?;
        output(minus, "minus", pair.pose_minus.into())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gaze_grp_offset_mm(tau: f64, eye: *const GazeEye, out: *mut f64) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        output(out, "out", grp_offset_mm(tau, &eye)?)
    })
}

/// Gaze reflection point in pixels; `kappa` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaze_compute_grp(
    pose: *const GazePose,
    camera: *const GazeCamera,
    eye: *const GazeEye,
    kappa: *const GazeKappa,
    out: *mut GazePoint,
) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        let cam = camera_of(input(camera, "camera")?)?;
        let pose = pose_of(input(pose, "pose")?, &eye)?;
        let kappa = match kappa.as_ref() {
            Some(k) => Some(kappa_of(k)?),
            None => None,
        };
        output(out, "out", compute_grp(&pose, &cam, &eye, kappa.as_ref())?.into())
    })
}

/// Gaze reflection point found by tracing the reflection numerically.
#[no_mangle]
pub unsafe extern "C" fn gaze_grp_raytrace(
    pose: *const GazePose,
    camera: *const GazeCamera,
    eye: *const GazeEye,
    out: *mut GazePoint,
) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        let cam = camera_of(input(camera, "camera")?)?;
        let pose = pose_of(input(pose, "pose")?, &eye)?;
        output(out, "out", grp_raytrace_oracle(&pose, &cam, &eye)?.into())
    })
}

/// Detects the limbus in an 8-bit grayscale image of `height` rows spaced
/// `stride` bytes apart. `score` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaze_fit_limbus(
    pixels: *const u8,
    width: u32,
    height: u32,
    stride: usize,
    depth_mm: f64,
    camera: *const GazeCamera,
    eye: *const GazeEye,
    seed: u64,
    out: *mut GazeEllipse,
    score: *mut f64,
) -> GazeStatus {
    guard(|| {
        let eye = eye_of(input(eye, "eye")?)?;
        let cam = camera_of(input(camera, "camera")?)?;
        let img = image_of(pixels, width, height, stride)?;
        let fit = fit_limbus(&img, depth_mm, &cam, &eye, &HoughConfig::default(), seed)?;
        output(out, "out", fit.ellipse.into())?;
        if !score.is_null() {
            score.write(fit.score);
        }
        Ok(())
    })
}

/// Fits kappa to `n` fixations: eye poses and the marker positions they
/// look at. `residual_deg` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaze_calibrate_kappa(
    poses: *const GazePose,
    targets: *const GazeVec3,
    n: usize,
    eye: *const GazeEye,
    out: *mut GazeKappa,
    residual_deg: *mut f64,
) -> GazeStatus {
    guard(|| {
        if n > 0 && (poses.is_null() || targets.is_null()) {
            return Err(null("fixation arrays"));
        }
        let eye = eye_of(input(eye, "eye")?)?;
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let pose = pose_of(&*poses.add(i), &eye)?;
            samples.push(FixationSample::new(pose, (*targets.add(i)).into())?);
        }
        let (k, residual) = calibrate_kappa(&samples)?;
        output(
            out,
            "out",
            GazeKappa {
                horizontal: k.horizontal_offset,
                vertical: k.vertical_offset,
            },
        )?;
        if !residual_deg.is_null() {
            residual_deg.write(residual);
        }
        Ok(())
    })
}

/// Angle between two directions, radians.
#[no_mangle]
pub extern "C" fn gaze_angle_between(a: GazeVec3, b: GazeVec3) -> f64 {
    gaze::angle_between(&a.into(), &b.into())
}

#[no_mangle]
pub unsafe extern "C" fn gaze_back_focal_distance(focal_mm: f64, subject_depth_mm: f64, out: *mut f64) -> GazeStatus {
    guard(|| output(out, "out", optics::back_focal_distance(focal_mm, subject_depth_mm)?))
}

/// Least-squares motor map from `n` measured `(depth, motor)` pairs.
#[no_mangle]
pub unsafe extern "C" fn gaze_calibrate_motor_map(
    depths_mm: *const f64,
    motors: *const f64,
    n: usize,
    focal_mm: f64,
    out: *mut GazeMotorMap,
) -> GazeStatus {
    guard(|| {
        if n > 0 && (depths_mm.is_null() || motors.is_null()) {
            return Err(null("calibration arrays"));
        }
        let pairs: Vec<(f64, f64)> = (0..n).map(|i| (*depths_mm.add(i), *motors.add(i))).collect();
        output(out, "out", optics::calibrate_motor_map(&pairs, focal_mm)?.into())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gaze_motor_command(
    depth_mm: f64,
    focal_mm: f64,
    map: *const GazeMotorMap,
    out: *mut i64,
) -> GazeStatus {
    guard(|| {
        let m = input(map, "map")?;
        let map = MotorMap {
            slope: m.slope,
            intercept: m.intercept,
            rms: m.rms,
        };
        output(out, "out", optics::motor_command(depth_mm, focal_mm, &map)?)
    })
}

/// Defaults for a 401 x 401 eye crop at 14000 px focal length.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_options_default(out: *mut GazeTrackerOptions) -> GazeStatus {
    guard(|| {
        let cam = CameraIntrinsics::new(14000.0, 401, 401)?;
        let cfg = PipelineConfig::default();
        output(
            out,
            "out",
            GazeTrackerOptions {
                camera: GazeCamera {
                    focal_px: cam.focal_px,
                    cx: cam.principal_point.x,
                    cy: cam.principal_point.y,
                    width: cam.width,
                    height: cam.height,
                },
                eye: AnatomicalEye::default().into(),
                kappa: GazeKappa::default(),
                seed: 0,
                particles: cfg.tracker.count as u32,
                track: cfg.track,
                default_depth: cfg.default_depth,
                ambiguity: GazeAmbiguity::Hemisphere,
                roi: GazeVec3::default(),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_new(options: *const GazeTrackerOptions, out: *mut *mut GazeTracker) -> GazeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let o = input(options, "options")?;
        let mut cfg = PipelineConfig::default();
        cfg.tracker.count = o.particles as usize;
        cfg.tracker.validate()?;
        cfg.track = o.track;
        if !(o.default_depth > 0.0) {
            return Err(GazeError::Config("default_depth must be positive".into()).into());
        }
        cfg.default_depth = o.default_depth;
        let roi: Vec3 = o.roi.into();
        cfg.ambiguity = match o.ambiguity {
            GazeAmbiguity::Hemisphere => AmbiguityPolicy::Hemisphere { roi },
            GazeAmbiguity::Continuity => AmbiguityPolicy::Continuity { roi },
            GazeAmbiguity::ForcedPlus => AmbiguityPolicy::ForcedPlus,
            GazeAmbiguity::ForcedMinus => AmbiguityPolicy::ForcedMinus,
        };
        let tracker = GazeTracker {
            cam: camera_of(&o.camera)?,
            eye: eye_of(&o.eye)?,
            kappa: kappa_of(&o.kappa)?,
            cfg,
            seed: o.seed,
            frame: 0,
            state: None,
        };
        out.write(Box::into_raw(Box::new(tracker)));
        Ok(())
    })
}

/// Releases a tracker; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_free(tracker: *mut GazeTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Forgets the tracker state so the next frame is detected afresh.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_reset(tracker: *mut GazeTracker) -> GazeStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        t.state = None;
        Ok(())
    })
}

/// Replaces the intrinsics used for subsequent frames, e.g. after the eye
/// crop moved.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_set_camera(tracker: *mut GazeTracker, camera: *const GazeCamera) -> GazeStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        t.cam = camera_of(input(camera, "camera")?)?;
        Ok(())
    })
}

/// Number of frames processed so far.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_frames(tracker: *const GazeTracker) -> u64 {
    tracker.as_ref().map_or(0, |t| t.frame)
}

/// Processes one frame. A failed detection or a lost track is not an error:
/// it is reported through `out->flags`. `depth_hint_mm` is ignored unless
/// positive.
#[no_mangle]
pub unsafe extern "C" fn gaze_tracker_process(
    tracker: *mut GazeTracker,
    pixels: *const u8,
    width: u32,
    height: u32,
    stride: usize,
    depth_hint_mm: f64,
    out: *mut GazeEstimate,
) -> GazeStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let img = image_of(pixels, width, height, stride)?;
        let hint = (depth_hint_mm > 0.0 && depth_hint_mm.is_finite()).then_some(depth_hint_mm);
        let seed = rng::derive(t.seed, t.frame);
        let (state, est) = pog_pipeline(&img, t.state.take(), hint, &t.cam, &t.eye, &t.kappa, &t.cfg, seed);
        t.state = state;
        t.frame += 1;
        let f = est.flags;
        let flags = [
            (f.low_confidence, GAZE_FLAG_LOW_CONFIDENCE),
            (f.ambiguity_fallback, GAZE_FLAG_AMBIGUITY_FALLBACK),
            (f.no_ellipse, GAZE_FLAG_NO_ELLIPSE),
            (f.tracking_lost, GAZE_FLAG_TRACKING_LOST),
            (f.grp_invalid, GAZE_FLAG_GRP_INVALID),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .fold(0, |acc, (_, bit)| acc | bit);
        out.write(GazeEstimate {
            has_ellipse: est.ellipse.is_some(),
            ellipse: est.ellipse.map(Into::into).unwrap_or_default(),
            has_pose: est.pose.is_some(),
            pose: est.pose.map(Into::into).unwrap_or_default(),
            has_grp: est.grp.is_some(),
            grp: est.grp.map(Into::into).unwrap_or_default(),
            has_visual_axis: est.visual_axis.is_some(),
            visual_axis: est.visual_axis.map(Into::into).unwrap_or_default(),
            confidence: est.confidence,
            flags,
        });
        Ok(())
    })
}
