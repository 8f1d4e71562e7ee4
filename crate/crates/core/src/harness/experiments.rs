//! Desk-scale experiments: ellipse sensitivity, kappa calibration
//! convergence, marker-board accuracy and rig design tables.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::csv::{format_g, CsvTable};
use crate::error::{config, GazeError, Result};
use crate::gaze::{
    angle_between, calibrate_kappa, closest_branch, compute_grp, detect_pose, fixating_pose,
    kappa_convergence_curve, ConvergenceOptions, FixationPool, FixationSample, GazeEstimate, Kappa, PipelineConfig,
};
use crate::geometry::{project_limbus, Ellipse, EyePose, ImagePoint, Vec3};
use crate::optics::{back_focal_distance, calibrate_motor_map, design_report, motor_command, RigSpec};
use crate::pose::AmbiguityPolicy;
use crate::raytrace::corneal_reflection_direction;
use crate::render::{render_eye_image, RenderStyle};
use crate::rng;

use super::settings::BoardSpec;
use super::{RunConfig, AUTOFOCUS_CALIB_HEADER, AUTOFOCUS_COMMANDS_HEADER, DESIGN_HEADER};

/// One point of a sensitivity curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRow {
    /// `axes`, `center` or `tilt`.
    pub parameter: &'static str,
    /// Pixels for `axes` and `center`, degrees for `tilt`.
    pub perturbation: f64,
    pub gaze_error_deg: f64,
}

/// Gaze error caused by perturbing the reference ellipse.
///
/// Each perturbed ellipse is inverted to the pose branch nearest the
/// reference gaze and its gaze reflection point is recomputed. The error is
/// the angle between the scene directions reflected at the reference and
/// perturbed points on the reference cornea, i.e. the error of the point of
/// gaze looked up in the corneal image.
pub fn sensitivity_table(rc: &RunConfig) -> Result<Vec<SensitivityRow>> {
    let s = &rc.sensitivity;
    let cam = rc.camera.intrinsics(rc.camera.width, rc.camera.height)?;
    let eye = &rc.eye;
    let truth = EyePose::new(
        Vec3::new(0.0, 0.0, s.depth),
        s.phi_deg.to_radians(),
        s.tau_deg.to_radians(),
        eye,
    )?;
    let reference_ellipse = project_limbus(&truth, &cam, eye)?;
    let reference = closest_branch(&reference_ellipse, &cam, eye, &truth.gaze())?;
    let reference_grp = compute_grp(&reference, &cam, eye, None)?;
    let reference_dir = corneal_reflection_direction(&reference_grp, &reference, &cam, eye)?;

    let error_of = |e: &Ellipse| -> Result<f64> {
        let pose = closest_branch(e, &cam, eye, &reference.gaze())?;
        let grp = compute_grp(&pose, &cam, eye, None)?;
        let dir = corneal_reflection_direction(&grp, &reference, &cam, eye)?;
        Ok(angle_between(&dir, &reference_dir).to_degrees())
    };

    let e0 = reference_ellipse;
    let mut rows = Vec::new();
    for &d in &s.px {
        let e = Ellipse::new(e0.r_max + d, e0.r_min + d, e0.center, e0.phi)?;
        rows.push(SensitivityRow {
            parameter: "axes",
            perturbation: d,
            gaze_error_deg: error_of(&e)?,
        });
    }
    for &d in &s.px {
        let e = Ellipse::new(e0.r_max, e0.r_min, ImagePoint::new(e0.center.x + d, e0.center.y), e0.phi)?;
        rows.push(SensitivityRow {
            parameter: "center",
            perturbation: d,
            gaze_error_deg: error_of(&e)?,
        });
    }
    for &d in &s.tilt_deg {
        let e = Ellipse::new(e0.r_max, e0.r_min, e0.center, e0.phi + d.to_radians())?;
        rows.push(SensitivityRow {
            parameter: "tilt",
            perturbation: d,
            gaze_error_deg: error_of(&e)?,
        });
    }
    Ok(rows)
}

/// The 5 x 3 marker grid at distance `depth` in front of an eye with
/// corneal centre `c`, ordered row by row.
pub fn board_targets(c: Vec3, board: &BoardSpec, depth: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(15);
    for j in -1..=1 {
        for i in -2..=2 {
            let az = (board.az_deg + i as f64 * board.spacing_deg).to_radians();
            let el = (board.el_deg + j as f64 * board.spacing_deg).to_radians();
            out.push(c + depth * Vec3::new(az.tan(), el.tan(), -1.0));
        }
    }
    out
}

fn board_center(c: Vec3, board: &BoardSpec, depth: f64) -> Vec3 {
    let az = board.az_deg.to_radians();
    let el = board.el_deg.to_radians();
    c + depth * Vec3::new(az.tan(), el.tan(), -1.0)
}

/// Held-out calibration error against the number of calibration points.
pub fn kappa_convergence_table(rc: &RunConfig) -> Result<Vec<(usize, f64)>> {
    let c = Vec3::new(0.0, 0.0, rc.board.eye_depth);
    let conv = &rc.convergence;
    let pool = FixationPool {
        corneal_center: c,
        targets: board_targets(c, &rc.board, conv.depth),
        cam: rc.camera.intrinsics(rc.camera.width, rc.camera.height)?,
        eye: rc.eye,
    };
    let opts = ConvergenceOptions {
        max_points: conv.max_points,
        noise_px: conv.noise_px,
        trials: conv.trials,
        seed: rc.seed,
    };
    kappa_convergence_curve(&rc.kappa, &pool, &opts)
}

/// One subject at one board distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRow {
    pub subject: usize,
    pub depth_mm: f64,
    /// Injected kappa.
    pub kappa: Kappa,
    /// Mean angle between the estimated optical axis and the line of sight.
    pub error_without_deg: f64,
    /// Same after kappa calibration on the board fixations.
    pub error_with_deg: f64,
    pub kappa_estimate: Kappa,
    /// Markers with a successful detection.
    pub markers: usize,
}

fn subject_kappa(rc: &RunConfig, subject: usize) -> Result<Kappa> {
    if rc.kappa != Kappa::default() {
        return Ok(rc.kappa);
    }
    let m = rc.accuracy.kappa_max_deg;
    if m == 0.0 {
        return Ok(Kappa::default());
    }
    let mut r = rng::seeded(rng::derive(rc.seed, 0xACC0_0000 + subject as u64));
    Kappa::from_degrees(r.random_range(-m..=m), r.random_range(-m..=m))
}

/// Marker-board fixation experiment run through rendering, limbus
/// detection and pose recovery.
pub fn accuracy_table(rc: &RunConfig) -> Result<Vec<AccuracyRow>> {
    let c = Vec3::new(0.0, 0.0, rc.board.eye_depth);
    let (w, h) = (rc.camera.width, rc.camera.height);
    let base_cam = rc.camera.intrinsics(w, h)?;
    let mut rows = Vec::new();
    for subject in 0..rc.accuracy.subjects {
        let kappa = subject_kappa(rc, subject)?;
        for (di, &depth) in rc.accuracy.depths.iter().enumerate() {
            if !(depth > 0.0) {
                return config("accuracy.depths must be positive");
            }
            let pipeline = PipelineConfig {
                ambiguity: AmbiguityPolicy::Hemisphere {
                    roi: board_center(c, &rc.board, depth),
                },
                track: false,
                ..rc.pipeline.clone()
            };
            let mut samples = Vec::new();
            for (mi, target) in board_targets(c, &rc.board, depth).into_iter().enumerate() {
                let stream = ((subject as u64) << 32) | ((di as u64) << 16) | mi as u64;
                let truth = fixating_pose(c, target, &kappa, &rc.eye)?;
                let centre = base_cam.project(&truth.limbus_center)?;
                let origin = (
                    centre.x.round() as i64 - (w / 2) as i64,
                    centre.y.round() as i64 - (h / 2) as i64,
                );
                let cam = base_cam.cropped(origin, w, h);
                let style = RenderStyle {
                    seed: rng::derive(rc.seed, stream),
                    ..rc.render
                };
                let image = render_eye_image(&truth, &cam, &rc.eye, &style)?;
                let est = detect_pose(
                    &image,
                    truth.depth(),
                    &cam,
                    &rc.eye,
                    &pipeline,
                    None,
                    rng::derive(rc.seed ^ 0xD7EC, stream),
                );
                match est {
                    Ok(GazeEstimate { pose: Some(pose), .. }) => samples.push(FixationSample::new(pose, target)?),
                    Ok(_) => {}
                    Err(e) => log::warn!("subject {subject} depth {depth} marker {mi}: {e}"),
                }
            }
            if samples.is_empty() {
                return Err(GazeError::NoEllipseFound(format!(
                    "no marker detected for subject {subject} at {depth} mm"
                )));
            }
            let zero = Kappa::default();
            let without =
                samples.iter().map(|s| s.error(&zero)).sum::<f64>() / samples.len() as f64;
            let (estimate, with_deg) = calibrate_kappa(&samples)?;
            rows.push(AccuracyRow {
                subject,
                depth_mm: depth,
                kappa,
                error_without_deg: without.to_degrees(),
                error_with_deg: with_deg,
                kappa_estimate: estimate,
                markers: samples.len(),
            });
        }
    }
    Ok(rows)
}

/// Resolution and layout across camera-subject distances, plus a text
/// report for the configured rig.
pub fn design_table(rc: &RunConfig) -> Result<(CsvTable, String)> {
    let d = &rc.design;
    let mut table = CsvTable::new(DESIGN_HEADER);
    let steps = ((d.max_distance - d.min_distance) / d.step + 1e-9).floor() as usize;
    for i in 0..=steps {
        let distance = d.min_distance + i as f64 * d.step;
        let spec = RigSpec {
            camera_subject_distance: distance,
            ..rc.rig
        };
        let r = design_report(&spec, &rc.eye, d.face_fraction)?;
        table.push(vec![
            format_g(distance),
            format_g(r.required_px_per_cm),
            format_g(r.achieved_px_per_cm),
            (r.meets_requirement() as u8).to_string(),
            r.layout.columns.to_string(),
            r.layout.rows.to_string(),
            r.layout.count().to_string(),
            format_g(r.back_focal_distance),
        ])?;
    }
    let r = design_report(&rc.rig, &rc.eye, d.face_fraction)?;
    let report = format!(
        "camera_subject_distance_mm {}\nfocal_length_mm {}\nrequired_px_per_cm {}\nachieved_px_per_cm {}\nmeets_requirement {}\nfootprint_mm {} x {}\ncameras {} x {} = {}\nback_focal_mm {}\n",
        format_g(rc.rig.camera_subject_distance),
        format_g(rc.rig.focal_length),
        format_g(r.required_px_per_cm),
        format_g(r.achieved_px_per_cm),
        r.meets_requirement(),
        format_g(r.layout.footprint.0),
        format_g(r.layout.footprint.1),
        r.layout.columns,
        r.layout.rows,
        r.layout.count(),
        format_g(r.back_focal_distance),
    );
    Ok((table, report))
}

/// Fits the focus motor map and tabulates commands for the query depths.
pub fn motor_calibration(rc: &RunConfig) -> Result<(CsvTable, CsvTable, String)> {
    let af = &rc.autofocus;
    let motors = match &af.motors {
        Some(m) => m.clone(),
        None => {
            let noise = Normal::new(0.0, af.noise.max(0.0)).map_err(|e| GazeError::Config(e.to_string()))?;
            let mut r = rng::seeded(rng::derive(rc.seed, 0xAF));
            af.depths
                .iter()
                .map(|&d| {
                    let s = back_focal_distance(af.focal, d)?;
                    let n = if af.noise > 0.0 { noise.sample(&mut r) } else { 0.0 };
                    Ok(af.slope * s + af.intercept + n)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let pairs: Vec<(f64, f64)> = af.depths.iter().copied().zip(motors.iter().copied()).collect();
    let map = calibrate_motor_map(&pairs, af.focal)?;

    let mut calib = CsvTable::new(AUTOFOCUS_CALIB_HEADER);
    for &(d, m) in &pairs {
        let s = back_focal_distance(af.focal, d)?;
        calib.push(vec![format_g(d), format_g(s), format_g(m), format_g(map.apply(s))])?;
    }
    let mut commands = CsvTable::new(AUTOFOCUS_COMMANDS_HEADER);
    for &d in &af.query {
        commands.push(vec![
            format_g(d),
            format_g(back_focal_distance(af.focal, d)?),
            motor_command(d, af.focal, &map)?.to_string(),
        ])?;
    }
    let report = format!(
        "focal_length_mm {}\nslope {}\nintercept {}\nrms {}\n",
        format_g(af.focal),
        format_g(map.slope),
        format_g(map.intercept),
        format_g(map.rms)
    );
    Ok((calib, commands, report))
}
