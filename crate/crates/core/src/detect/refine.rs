//! Sub-pixel ellipse refinement on edge points near a coarse detection.

use nalgebra::{SMatrix, SVector};

use super::EdgeMap;
use crate::geometry::{Ellipse, ImagePoint};

type Params = SVector<f64, 5>;

const BANDS: [f64; 3] = [5.0, 2.5, 1.5];
const MIN_POINTS: usize = 24;
const MAX_ITERS: usize = 30;

fn to_params(e: &Ellipse) -> Params {
    Params::from([e.center.x, e.center.y, e.r_max, e.r_min, e.phi])
}

fn from_params(p: &Params) -> Option<Ellipse> {
    if !(p[2] > 1.0 && p[3] > 1.0) {
        return None;
    }
    Ellipse::from_axes(p[2], p[3], ImagePoint::new(p[0], p[1]), p[4]).ok()
}

/// Sampson residual without canonicalizing the axes, so the parameter
/// vector stays smooth through `a = b`.
fn residual(p: &Params, x: f64, y: f64) -> f64 {
    let (s, c) = p[4].sin_cos();
    let dx = x - p[0];
    let dy = y - p[1];
    let u = c * dx + s * dy;
    let v = -s * dx + c * dy;
    let a2 = p[2] * p[2];
    let b2 = p[3] * p[3];
    let f = u * u / a2 + v * v / b2 - 1.0;
    let g = (2.0 * u / a2).hypot(2.0 * v / b2);
    if g < 1e-12 {
        0.0
    } else {
        f / g
    }
}

fn cost(p: &Params, pts: &[ImagePoint]) -> f64 {
    pts.iter().map(|q| residual(p, q.x, q.y).powi(2)).sum()
}

/// Levenberg-Marquardt on Sampson distances with a numeric Jacobian.
fn levenberg_marquardt(init: Params, pts: &[ImagePoint]) -> Params {
    let mut p = init;
    let mut lambda = 1e-3;
    let mut current = cost(&p, pts);
    for _ in 0..MAX_ITERS {
        let mut jtj = SMatrix::<f64, 5, 5>::zeros();
        let mut jtr = Params::zeros();
        for q in pts {
            let r = residual(&p, q.x, q.y);
            let mut row = Params::zeros();
            for k in 0..5 {
                let h = 1e-6 * p[k].abs().max(1.0);
                let mut hi = p;
                let mut lo = p;
                hi[k] += h;
                lo[k] -= h;
                row[k] = (residual(&hi, q.x, q.y) - residual(&lo, q.x, q.y)) / (2.0 * h);
            }
            jtj += row * row.transpose();
            jtr += row * r;
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut damped = jtj;
            for k in 0..5 {
                damped[(k, k)] += lambda * (jtj[(k, k)] + 1e-9);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let cand = p + step;
            let c = cost(&cand, pts);
            if c.is_finite() && c < current {
                let rel = (current - c) / current.max(1e-300);
                p = cand;
                current = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-12 || step.norm() < 1e-10 {
                    return p;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Fits an ellipse to the edge points around `init`, tightening the
/// selection band in stages. Returns `None` when too few points support
/// the fit or the fit wanders away from `init`.
pub fn refine_ellipse(edges: &EdgeMap, init: &Ellipse) -> Option<Ellipse> {
    let mut current = *init;
    let (hx, hy) = init.half_extents();
    for band in BANDS {
        let (bx, by) = (hx + band + 10.0, hy + band + 10.0);
        let pts: Vec<ImagePoint> = edges
            .points
            .iter()
            .filter(|e| {
                (e.pos.x - current.center.x).abs() <= bx
                    && (e.pos.y - current.center.y).abs() <= by
                    && current.contour_distance(e.pos.x, e.pos.y).abs() < band
            })
            .map(|e| e.pos)
            .collect();
        if pts.len() < MIN_POINTS.max((0.15 * current.perimeter()) as usize) {
            return None;
        }
        let p = levenberg_marquardt(to_params(&current), &pts);
        current = from_params(&p)?;
    }
    let moved = current.center.distance(&init.center);
    let grew = (current.r_max / init.r_max - 1.0).abs();
    if moved > 12.0 || grew > 0.25 {
        return None;
    }
    Some(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::detect_edges;
    use crate::render::{render_ellipses, RenderStyle};

    #[test]
    fn recovers_subpixel_ellipse() {
        let truth = Ellipse::new(70.3, 61.8, ImagePoint::new(100.4, 97.7), 0.61).unwrap();
        let img = render_ellipses(&[truth], 200, 200, &RenderStyle::default()).unwrap();
        let edges = detect_edges(&img, 20.0);
        let coarse = Ellipse::new(71.0, 63.0, ImagePoint::new(102.0, 96.0), 0.5).unwrap();
        let fit = refine_ellipse(&edges, &coarse).unwrap();
        assert!(fit.center.distance(&truth.center) < 0.05, "{fit:?}");
        assert!((fit.r_max - truth.r_max).abs() < 0.05, "{fit:?}");
        assert!((fit.r_min - truth.r_min).abs() < 0.05, "{fit:?}");
        assert!((fit.phi - truth.phi).abs() < 0.01, "{fit:?}");
    }

    #[test]
    fn circle_fit_is_stable() {
        let truth = Ellipse::circle(50.0, ImagePoint::new(80.2, 79.9)).unwrap();
        let img = render_ellipses(&[truth], 160, 160, &RenderStyle::default()).unwrap();
        let edges = detect_edges(&img, 20.0);
        let coarse = Ellipse::new(51.0, 50.0, ImagePoint::new(79.0, 81.0), 1.0).unwrap();
        let fit = refine_ellipse(&edges, &coarse).unwrap();
        assert!(fit.center.distance(&truth.center) < 0.05);
        assert!((fit.r_max - 50.0).abs() < 0.05 && (fit.r_min - 50.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn no_support_returns_none() {
        let coarse = Ellipse::circle(50.0, ImagePoint::new(80.0, 80.0)).unwrap();
        assert!(refine_ellipse(&EdgeMap::default(), &coarse).is_none());
    }
}
