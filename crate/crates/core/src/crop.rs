//! Eye cropping by zero-mean normalized cross-correlation.

use crate::error::{domain, GazeError, Result};
use crate::image::GrayImage;

/// Axis-aligned pixel rectangle; the origin may lie outside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: i64,
    pub y: i64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropMatch {
    /// Top-left corner of the best template placement.
    pub x: u32,
    pub y: u32,
    pub score: f64,
    /// Crop window centred on the match.
    pub rect: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropConfig {
    /// Minimum accepted correlation.
    pub threshold: f64,
    /// Extra pixels on each side of the template-sized window.
    pub margin: u32,
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig {
            threshold: 0.5,
            margin: 0,
        }
    }
}

struct Integral {
    width: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Integral {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let stride = w + 1;
        let mut sum = vec![0.0; stride * (h + 1)];
        let mut sq = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let row = img.row(y as u32);
            let (mut rs, mut rq) = (0.0, 0.0);
            for x in 0..w {
                let v = row[x] as f64;
                rs += v;
                rq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + rs;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + rq;
            }
        }
        Integral { width: stride, sum, sq }
    }

    fn window(&self, table: &[f64], x: usize, y: usize, w: usize, h: usize) -> f64 {
        let s = self.width;
        table[(y + h) * s + x + w] - table[y * s + x + w] - table[(y + h) * s + x] + table[y * s + x]
    }
}

/// Finds `template` in `frame` and returns the placement with the highest
/// zero-mean NCC.
pub fn crop_eye_ncc(template: &GrayImage, frame: &GrayImage, cfg: &CropConfig) -> Result<CropMatch> {
    let (tw, th) = (template.width() as usize, template.height() as usize);
    let (fw, fh) = (frame.width() as usize, frame.height() as usize);
    if tw > fw || th > fh {
        return domain("template larger than frame");
    }
    let n = (tw * th) as f64;
    let t_mean = template.mean();
    let zero_mean: Vec<f64> = template.as_raw().iter().map(|&v| v as f64 - t_mean).collect();
    let t_energy: f64 = zero_mean.iter().map(|v| v * v).sum();
    if t_energy <= 0.0 {
        return domain("template has no intensity variation");
    }
    let integral = Integral::new(frame);

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for y in 0..=fh - th {
        for x in 0..=fw - tw {
            let s = integral.window(&integral.sum, x, y, tw, th);
            let q = integral.window(&integral.sq, x, y, tw, th);
            let var = q - s * s / n;
            if var <= 1e-9 * n {
                continue;
            }
            let mut num = 0.0;
            for ty in 0..th {
                let frow = &frame.row((y + ty) as u32)[x..x + tw];
                let trow = &zero_mean[ty * tw..(ty + 1) * tw];
                num += frow.iter().zip(trow).map(|(&f, &t)| f as f64 * t).sum::<f64>();
            }
            let score = num / (t_energy * var).sqrt();
            if score > best.2 {
                best = (x, y, score);
            }
        }
    }

    if !(best.2 >= cfg.threshold) {
        return Err(GazeError::CropNotFound {
            score: if best.2.is_finite() { best.2 } else { 0.0 },
            threshold: cfg.threshold,
        });
    }
    let m = cfg.margin as i64;
    Ok(CropMatch {
        x: best.0 as u32,
        y: best.1 as u32,
        score: best.2.min(1.0),
        rect: Rect {
            x: best.0 as i64 - m,
            y: best.1 as i64 - m,
            width: tw as u32 + 2 * cfg.margin,
            height: th as u32 + 2 * cfg.margin,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn textured(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut r = crate::rng::seeded(seed);
        let data = (0..w * h).map(|_| r.random_range(20..230)).collect();
        GrayImage::from_raw(w, h, data).unwrap()
    }

    #[test]
    fn finds_exact_subimage() {
        let frame = textured(80, 60, 1);
        let template = frame.crop(31, 17, 15, 11, 0).unwrap();
        let m = crop_eye_ncc(&template, &frame, &CropConfig::default()).unwrap();
        assert_eq!((m.x, m.y), (31, 17));
        assert!((m.score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gain_invariant() {
        let frame = textured(80, 60, 2);
        let template = frame.crop(10, 40, 12, 12, 0).unwrap();
        let scaled: Vec<u8> = template.as_raw().iter().map(|&v| (v as f64 * 1.5).min(255.0) as u8).collect();
        let scaled = GrayImage::from_raw(12, 12, scaled).unwrap();
        let m = crop_eye_ncc(&scaled, &frame, &CropConfig::default()).unwrap();
        assert_eq!((m.x, m.y), (10, 40));
    }

    #[test]
    fn uniform_frame_is_not_found() {
        let frame = GrayImage::filled(50, 50, 90).unwrap();
        let template = textured(10, 10, 3);
        assert!(matches!(
            crop_eye_ncc(&template, &frame, &CropConfig::default()),
            Err(GazeError::CropNotFound { .. })
        ));
    }

    #[test]
    fn margin_widens_rect() {
        let frame = textured(60, 60, 4);
        let template = frame.crop(20, 20, 10, 10, 0).unwrap();
        let m = crop_eye_ncc(&template, &frame, &CropConfig { threshold: 0.5, margin: 5 }).unwrap();
        assert_eq!(m.rect, Rect { x: 15, y: 15, width: 20, height: 20 });
    }

    #[test]
    fn oversized_template_is_rejected() {
        let frame = textured(10, 10, 5);
        let template = textured(11, 4, 6);
        assert!(crop_eye_ncc(&template, &frame, &CropConfig::default()).is_err());
    }
}
