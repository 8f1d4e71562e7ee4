//! Ellipse Hough voting over a fixed centre set and a 1 px radius ladder.

use std::f64::consts::PI;

use super::{EdgeMap, HoughConfig};
use crate::error::{GazeError, Result};
use crate::geometry::{Ellipse, ImagePoint};

/// Tilt bins: axis ratios `cos(tau)` for `tau` in 0, 5, ..., 45 degrees.
pub const TILT_BINS: usize = 10;
const TILT_STEP_DEG: f64 = 5.0;
/// Orientation bins of 10 degrees over the half turn.
pub const ORIENTATION_BINS: usize = 18;

#[derive(Debug, Clone, Copy)]
struct Shape {
    ratio: f64,
    tilt_bin: usize,
    orient_bin: usize,
    cos: f64,
    sin: f64,
}

fn shapes() -> Vec<Shape> {
    let mut out = vec![Shape {
        ratio: 1.0,
        tilt_bin: 0,
        orient_bin: 0,
        cos: 1.0,
        sin: 0.0,
    }];
    for t in 1..TILT_BINS {
        let ratio = (t as f64 * TILT_STEP_DEG).to_radians().cos();
        for o in 0..ORIENTATION_BINS {
            let theta = o as f64 * PI / ORIENTATION_BINS as f64;
            out.push(Shape {
                ratio,
                tilt_bin: t,
                orient_bin: o,
                cos: theta.cos(),
                sin: theta.sin(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Bin {
    votes: u32,
    center: usize,
    radius: usize,
    shape: usize,
}

/// Top-voted ellipses, strongest first, at most `cfg.candidate_count`.
///
/// Every edge point votes once per (centre, shape) for the radius bin at its
/// elliptic radius. Selected bins suppress their immediate neighbours at the
/// same centre so the list spans distinct hypotheses.
pub fn hough_candidates(
    edges: &EdgeMap,
    radii: &[f64],
    centers: &[ImagePoint],
    cfg: &HoughConfig,
) -> Result<Vec<Ellipse>> {
    if radii.is_empty() || centers.is_empty() {
        return Err(GazeError::Domain("empty candidate set".into()));
    }
    let shapes = shapes();
    let n_r = radii.len();
    let n_s = shapes.len();
    let r0 = radii[0];
    let mut acc = vec![0u32; centers.len() * n_s * n_r];

    let r_hi = radii[n_r - 1] + 1.0;
    let r_hi2 = r_hi * r_hi;
    let r_lo = (r0 - 1.0) * (TILT_BINS as f64 * TILT_STEP_DEG).to_radians().cos();
    let r_lo2 = r_lo.max(0.0).powi(2);
    for e in &edges.points {
        for (ci, c) in centers.iter().enumerate() {
            let dx = e.pos.x - c.x;
            let dy = e.pos.y - c.y;
            let d2 = dx * dx + dy * dy;
            if d2 > r_hi2 || d2 < r_lo2 {
                continue;
            }
            let base = ci * n_s * n_r;
            for (si, s) in shapes.iter().enumerate() {
                let u = s.cos * dx + s.sin * dy;
                let v = (-s.sin * dx + s.cos * dy) / s.ratio;
                let rho = (u * u + v * v).sqrt();
                let k = (rho - r0).round();
                if k >= 0.0 && (k as usize) < n_r {
                    acc[base + si * n_r + k as usize] += 1;
                }
            }
        }
    }

    let min_votes = (cfg.min_support * 2.0 * PI * radii[n_r / 2]).ceil().max(1.0) as u32;
    let mut bins: Vec<Bin> = acc
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= min_votes)
        .map(|(i, &votes)| Bin {
            votes,
            center: i / (n_s * n_r),
            shape: (i / n_r) % n_s,
            radius: i % n_r,
        })
        .collect();
    if bins.is_empty() {
        let best = acc.iter().copied().max().unwrap_or(0);
        return Err(GazeError::NoEllipseFound(format!(
            "best Hough bin has {best} votes, need {min_votes}"
        )));
    }
    // Stable order: votes, then lowest index.
    bins.sort_by_key(|b| std::cmp::Reverse(b.votes));

    let near = |a: &Bin, b: &Bin| {
        if a.center != b.center || a.radius.abs_diff(b.radius) > 1 {
            return false;
        }
        let sa = &shapes[a.shape];
        let sb = &shapes[b.shape];
        if sa.tilt_bin.abs_diff(sb.tilt_bin) > 1 {
            return false;
        }
        // Orientation is meaningless for the circular bin.
        if sa.tilt_bin == 0 || sb.tilt_bin == 0 {
            return true;
        }
        let d = sa.orient_bin.abs_diff(sb.orient_bin);
        d.min(ORIENTATION_BINS - d) <= 1
    };

    let mut chosen: Vec<Bin> = Vec::with_capacity(cfg.candidate_count);
    for b in bins {
        if chosen.len() >= cfg.candidate_count {
            break;
        }
        if chosen.iter().any(|c| near(c, &b)) {
            continue;
        }
        chosen.push(b);
    }

    chosen
        .iter()
        .map(|b| {
            let s = &shapes[b.shape];
            let r = radii[b.radius];
            let theta = s.orient_bin as f64 * PI / ORIENTATION_BINS as f64;
            Ellipse::new(r, r * s.ratio, centers[b.center], theta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::detect_edges;
    use crate::render::{render_ellipses, RenderStyle};

    fn ladder(center: f64, m: usize) -> Vec<f64> {
        (0..2 * m).map(|i| center - m as f64 + 1.0 + i as f64).collect()
    }

    #[test]
    fn exact_bin_ranks_first() {
        let c = ImagePoint::new(100.0, 100.0);
        let truth = Ellipse::new(60.0, 60.0 * 20f64.to_radians().cos(), c, 50f64.to_radians()).unwrap();
        let img = render_ellipses(&[truth], 200, 200, &RenderStyle::default()).unwrap();
        let cfg = HoughConfig::default();
        let edges = detect_edges(&img, cfg.edge_threshold);
        let centers = [ImagePoint::new(95.0, 100.0), c, ImagePoint::new(100.0, 106.0)];
        let cands = hough_candidates(&edges, &ladder(60.0, 3), &centers, &cfg).unwrap();
        let top = cands[0];
        assert_eq!(top.center, c);
        assert_eq!(top.r_max, 60.0);
        assert!((top.axis_ratio() - truth.axis_ratio()).abs() < 1e-12);
        assert!((top.phi - truth.phi).abs() < 1e-9);
    }

    #[test]
    fn blank_image_finds_nothing() {
        let img = crate::image::GrayImage::filled(100, 100, 200).unwrap();
        let edges = detect_edges(&img, 20.0);
        let r = hough_candidates(&edges, &ladder(30.0, 3), &[ImagePoint::new(50.0, 50.0)], &HoughConfig::default());
        assert!(matches!(r, Err(GazeError::NoEllipseFound(_))));
    }

    #[test]
    fn two_ellipses_both_reported() {
        let a = Ellipse::new(40.0, 40.0 * 0.9, ImagePoint::new(60.0, 60.0), 0.2).unwrap();
        let b = Ellipse::new(41.0, 41.0, ImagePoint::new(170.0, 64.0), 0.0).unwrap();
        let img = render_ellipses(&[a, b], 240, 130, &RenderStyle::default()).unwrap();
        let cfg = HoughConfig::default();
        let edges = detect_edges(&img, cfg.edge_threshold);
        let cands = hough_candidates(&edges, &ladder(40.5, 3), &[a.center, b.center], &cfg).unwrap();
        assert!(cands.iter().any(|c| c.center == a.center));
        assert!(cands.iter().any(|c| c.center == b.center));
        assert!(cands.len() <= cfg.candidate_count);
    }
}
