//! Synthetic eye images with known ground truth.

use rand_distr::{Distribution, Normal};

use crate::error::{domain, geometry, Result};
use crate::geometry::{project_limbus, AnatomicalEye, CameraIntrinsics, Ellipse, EyePose};
use crate::image::GrayImage;
use crate::rng;

const SUPERSAMPLE: usize = 8;

/// Appearance of a rendered eye.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    /// Iris intensity, 0-255.
    pub iris: f64,
    /// Sclera (background) intensity, 0-255.
    pub sclera: f64,
    /// Area-weighted boundary pixels instead of a hard step.
    pub antialias: bool,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    /// Fraction of the ellipse height hidden by an upper eyelid, 0-1.
    pub occlusion: f64,
    /// Eyelid intensity.
    pub lid: f64,
    pub seed: u64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            iris: 60.0,
            sclera: 200.0,
            antialias: true,
            noise_sigma: 0.0,
            occlusion: 0.0,
            lid: 150.0,
            seed: 0,
        }
    }
}

/// Renders the projected limbus of `pose` as a flat iris disk on a bright
/// sclera background.
pub fn render_eye_image(
    pose: &EyePose,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    style: &RenderStyle,
) -> Result<GrayImage> {
    if cam.width == 0 || cam.height == 0 {
        return domain("image dimensions must be nonzero");
    }
    let ellipse = project_limbus(pose, cam, eye)?;
    if !ellipse.inside_image(cam.width, cam.height) {
        return geometry("projected limbus does not fit inside the image");
    }
    render_ellipses(&[ellipse], cam.width, cam.height, style)
}

/// Renders any number of iris-coloured ellipses. The eyelid, when enabled,
/// is placed relative to the first ellipse.
pub fn render_ellipses(
    ellipses: &[Ellipse],
    width: u32,
    height: u32,
    style: &RenderStyle,
) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return domain("image dimensions must be nonzero");
    }
    if !(0.0..=1.0).contains(&style.occlusion) {
        return domain("occlusion must be within [0, 1]");
    }
    let mut coverage = vec![0.0f64; width as usize * height as usize];
    for e in ellipses {
        accumulate_coverage(e, width, height, style.antialias, &mut coverage);
    }

    let lid_line = ellipses.first().filter(|_| style.occlusion > 0.0).map(|e| {
        let (_, hy) = e.half_extents();
        e.center.y - hy + style.occlusion * 2.0 * hy
    });

    let mut rng = rng::seeded(style.seed);
    let noise = if style.noise_sigma > 0.0 {
        Some(Normal::new(0.0, style.noise_sigma).map_err(|e| crate::GazeError::Domain(e.to_string()))?)
    } else {
        None
    };

    let mut data = Vec::with_capacity(coverage.len());
    for y in 0..height {
        let lid_cov = lid_line
            .map(|line| (line - (y as f64 - 0.5)).clamp(0.0, 1.0))
            .unwrap_or(0.0);
        for x in 0..width {
            let cov = coverage[y as usize * width as usize + x as usize].min(1.0);
            let eye_val = style.iris * cov + style.sclera * (1.0 - cov);
            let mut v = style.lid * lid_cov + eye_val * (1.0 - lid_cov);
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::from_raw(width, height, data)
}

fn accumulate_coverage(e: &Ellipse, width: u32, height: u32, antialias: bool, out: &mut [f64]) {
    let (hx, hy) = e.half_extents();
    let x0 = ((e.center.x - hx - 2.0).floor().max(0.0)) as u32;
    let y0 = ((e.center.y - hy - 2.0).floor().max(0.0)) as u32;
    let x1 = ((e.center.x + hx + 2.0).ceil().min(width as f64 - 1.0)).max(0.0) as u32;
    let y1 = ((e.center.y + hy + 2.0).ceil().min(height as f64 - 1.0)).max(0.0) as u32;
    let step = 1.0 / SUPERSAMPLE as f64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (fx, fy) = (x as f64, y as f64);
            let d = e.contour_distance(fx, fy);
            let cov = if !antialias || d.abs() > 1.5 {
                if e.contains(fx, fy) {
                    1.0
                } else {
                    0.0
                }
            } else {
                let mut inside = 0usize;
                for sy in 0..SUPERSAMPLE {
                    let py = fy - 0.5 + (sy as f64 + 0.5) * step;
                    for sx in 0..SUPERSAMPLE {
                        let px = fx - 0.5 + (sx as f64 + 0.5) * step;
                        if e.contains(px, py) {
                            inside += 1;
                        }
                    }
                }
                inside as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
            };
            out[y as usize * width as usize + x as usize] += cov;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ImagePoint, Vec3};

    #[test]
    fn interior_darker_than_exterior() {
        let eye = AnatomicalEye::default();
        let cam = CameraIntrinsics::new(14000.0, 400, 400).unwrap();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.5, 0.3, &eye).unwrap();
        let img = render_eye_image(&pose, &cam, &eye, &RenderStyle::default()).unwrap();
        let e = project_limbus(&pose, &cam, &eye).unwrap();
        let (mut si, mut ni, mut so, mut no) = (0.0, 0, 0.0, 0);
        for y in 0..400 {
            for x in 0..400 {
                let v = img.get(x, y) as f64;
                if e.contains(x as f64, y as f64) {
                    si += v;
                    ni += 1;
                } else {
                    so += v;
                    no += 1;
                }
            }
        }
        assert!(si / (ni as f64) < so / (no as f64));
    }

    #[test]
    fn out_of_bounds_ellipse_is_an_error() {
        let eye = AnatomicalEye::default();
        let cam = CameraIntrinsics::new(14000.0, 200, 200).unwrap();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.0, 0.0, &eye).unwrap();
        assert!(render_eye_image(&pose, &cam, &eye, &RenderStyle::default()).is_err());
    }

    #[test]
    fn zero_size_is_an_error() {
        let e = Ellipse::circle(5.0, ImagePoint::new(1.0, 1.0)).unwrap();
        assert!(render_ellipses(&[e], 0, 10, &RenderStyle::default()).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let e = Ellipse::circle(20.0, ImagePoint::new(32.0, 32.0)).unwrap();
        let style = RenderStyle {
            noise_sigma: 8.0,
            seed: 11,
            ..Default::default()
        };
        let a = render_ellipses(&[e], 64, 64, &style).unwrap();
        let b = render_ellipses(&[e], 64, 64, &style).unwrap();
        assert_eq!(a, b);
        let c = render_ellipses(&[e], 64, 64, &RenderStyle { seed: 12, ..style }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn eyelid_covers_top() {
        let e = Ellipse::circle(20.0, ImagePoint::new(32.0, 32.0)).unwrap();
        let style = RenderStyle {
            occlusion: 0.25,
            ..Default::default()
        };
        let img = render_ellipses(&[e], 64, 64, &style).unwrap();
        assert_eq!(img.get(32, 2), 150);
        assert_eq!(img.get(32, 32), 60);
    }
}
