//! Frame overlays: limbus outline plus a square marker at the gaze
//! reflection point.

use std::f64::consts::TAU;

use crate::gaze::GazeEstimate;
use crate::image::{GrayImage, RgbImage};

const ELLIPSE_COLOR: [u8; 3] = [0, 255, 0];
const GRP_COLOR: [u8; 3] = [255, 255, 0];
/// Side of the gaze marker, pixels.
pub const GRP_MARKER_SIZE: i64 = 9;

/// Colour copy of `frame` with the estimate drawn on it.
pub fn draw_overlay(frame: &GrayImage, est: &GazeEstimate) -> RgbImage {
    let mut out = frame.to_rgb();
    if let Some(e) = est.ellipse {
        let steps = ((e.perimeter() * 2.0).ceil() as usize).clamp(16, 20_000);
        for i in 0..steps {
            let p = e.point_at(TAU * i as f64 / steps as f64);
            if p.is_finite() {
                out.put(p.x.round() as i64, p.y.round() as i64, ELLIPSE_COLOR);
            }
        }
    }
    if let Some(g) = est.grp {
        if g.is_finite() && g.x.abs() < 1e9 && g.y.abs() < 1e9 {
            let half = GRP_MARKER_SIZE / 2;
            let (cx, cy) = (g.x.round() as i64, g.y.round() as i64);
            for d in -half..=half {
                out.put(cx + d, cy - half, GRP_COLOR);
                out.put(cx + d, cy + half, GRP_COLOR);
                out.put(cx - half, cy + d, GRP_COLOR);
                out.put(cx + half, cy + d, GRP_COLOR);
            }
        }
    }
    out
}
