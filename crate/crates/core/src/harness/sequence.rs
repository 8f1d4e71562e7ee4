//! Synthetic eye sequences.

use crate::error::Result;
use crate::gaze::compute_grp;
use crate::geometry::{project_limbus, Ellipse, EyePose, ImagePoint};
use crate::image::GrayImage;
use crate::render::{render_eye_image, RenderStyle};
use crate::rng;

use super::RunConfig;

/// Rendered frame with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub image: GrayImage,
    pub pose: EyePose,
    pub ellipse: Ellipse,
    /// Optical-axis gaze reflection point.
    pub grp: Option<ImagePoint>,
    pub blank: bool,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Frame `index` of the configured sequence. Blank frames keep their truth
/// pose but show only sclera.
pub fn synthetic_frame(rc: &RunConfig, index: usize) -> Result<SyntheticFrame> {
    let seq = &rc.sequence;
    let t = if seq.frames > 1 {
        index as f64 / (seq.frames - 1) as f64
    } else {
        0.0
    };
    let limbus = seq.start.lerp(&seq.end, t);
    let phi = lerp(seq.phi_deg.0, seq.phi_deg.1, t).to_radians();
    let tau = lerp(seq.tau_deg.0, seq.tau_deg.1, t).to_radians();
    let pose = EyePose::new(limbus, phi, tau, &rc.eye)?;
    let cam = rc.camera.intrinsics(rc.camera.width, rc.camera.height)?;
    let style = RenderStyle {
        seed: rng::derive(rc.seed, 0x5EED_0000 + index as u64),
        ..rc.render
    };
    let blank = seq.blank.contains(&index);
    let image = if blank {
        GrayImage::filled(cam.width, cam.height, style.sclera.round().clamp(0.0, 255.0) as u8)?
    } else {
        render_eye_image(&pose, &cam, &rc.eye, &style)?
    };
    Ok(SyntheticFrame {
        image,
        pose,
        ellipse: project_limbus(&pose, &cam, &rc.eye)?,
        grp: compute_grp(&pose, &cam, &rc.eye, None).ok(),
        blank,
    })
}
