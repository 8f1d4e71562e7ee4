//! Region/edge score of a candidate limbus ellipse.
//!
//! `A * |inside < N| / |band < N| + B * |edges near contour|` where the band
//! is the annulus between `p` and `p` grown by `delta` on both semi-axes.

use super::{EdgeMap, EdgeTerm, HoughConfig, IrisThreshold, Polarity};
use crate::geometry::Ellipse;
use crate::image::GrayImage;

/// Position of the automatic threshold between the iris and sclera medians.
pub const AUTO_THRESHOLD_FRACTION: f64 = 0.25;

/// Per-image lookup tables for fast repeated scoring.
pub struct ScoreContext {
    width: usize,
    height: usize,
    threshold: f64,
    /// Row-wise prefix counts of iris-classified pixels, `width + 1` per row.
    prefix: Vec<u32>,
}

impl ScoreContext {
    pub fn new(image: &GrayImage, threshold: f64, polarity: Polarity) -> Self {
        let width = image.width() as usize;
        let height = image.height() as usize;
        let mut prefix = Vec::with_capacity((width + 1) * height);
        for y in 0..height as u32 {
            let mut acc = 0u32;
            prefix.push(0);
            for &v in image.row(y) {
                if polarity.is_iris(v as f64, threshold) {
                    acc += 1;
                }
                prefix.push(acc);
            }
        }
        ScoreContext {
            width,
            height,
            threshold,
            prefix,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn count_range(&self, y: usize, lo: f64, hi: f64) -> (u64, u64) {
        // Pixel centres strictly inside (lo, hi).
        let mut a = lo.floor() as i64 + 1;
        let mut b = hi.ceil() as i64 - 1;
        a = a.max(0);
        b = b.min(self.width as i64 - 1);
        if b < a {
            return (0, 0);
        }
        let row = &self.prefix[y * (self.width + 1)..(y + 1) * (self.width + 1)];
        let hits = (row[b as usize + 1] - row[a as usize]) as u64;
        (hits, (b - a + 1) as u64)
    }

    /// Iris-classified pixel counts `(inside, band)` and the inside pixel
    /// total.
    pub fn region_counts(&self, p: &Ellipse, delta: f64) -> (u64, u64, u64) {
        let outer = p.inflated(delta);
        let (_, hy) = outer.half_extents();
        let y0 = ((p.center.y - hy).floor().max(0.0)) as usize;
        let y1 = ((p.center.y + hy).ceil().min(self.height as f64 - 1.0)).max(-1.0);
        if y1 < 0.0 {
            return (0, 0, 0);
        }
        let y1 = y1 as usize;
        let (mut inside, mut band, mut total) = (0u64, 0u64, 0u64);
        for y in y0..=y1 {
            let fy = y as f64;
            let Some((o0, o1)) = outer.row_span(fy) else {
                continue;
            };
            match p.row_span(fy) {
                Some((i0, i1)) => {
                    let (hits, n) = self.count_range(y, i0, i1);
                    inside += hits;
                    total += n;
                    // Band segments exclude the interior and its boundary pixels.
                    let left_hi = i0.floor() + 1.0;
                    let right_lo = i1.ceil() - 1.0;
                    band += self.count_range(y, o0, left_hi).0;
                    band += self.count_range(y, right_lo, o1).0;
                }
                None => band += self.count_range(y, o0, o1).0,
            }
        }
        (inside, band, total)
    }

    pub fn score(&self, p: &Ellipse, edges: &EdgeMap, cfg: &HoughConfig) -> f64 {
        let region = if cfg.weight_region > 0.0 {
            let (inside, band, _) = self.region_counts(p, cfg.edge_band);
            cfg.weight_region * inside as f64 / (band.max(1)) as f64
        } else {
            0.0
        };
        let edge = if cfg.weight_edge > 0.0 {
            cfg.weight_edge * edge_support(p, edges, cfg) as f64
        } else {
            0.0
        };
        region + edge
    }
}

/// Number of edge points counted by the edge term.
pub fn edge_support(p: &Ellipse, edges: &EdgeMap, cfg: &HoughConfig) -> usize {
    let delta = cfg.edge_band;
    match cfg.edge_term {
        EdgeTerm::Contour => {
            let (hx, hy) = p.half_extents();
            let (bx, by) = (hx + delta, hy + delta);
            edges
                .points
                .iter()
                .filter(|e| {
                    (e.pos.x - p.center.x).abs() <= bx
                        && (e.pos.y - p.center.y).abs() <= by
                        && p.contour_distance(e.pos.x, e.pos.y).abs() < delta
                })
                .count()
        }
        EdgeTerm::Center => edges
            .points
            .iter()
            .filter(|e| e.pos.distance(&p.center) < delta)
            .count(),
    }
}

/// Score of an ideal detection of `p`, used to map scores into `[0, 1]`.
pub fn ideal_score(p: &Ellipse, cfg: &HoughConfig) -> f64 {
    cfg.weight_region * p.area() + cfg.weight_edge * p.perimeter()
}

/// Score divided by the ideal score of `p`, clamped to `[0, 1]`.
pub fn score_confidence(score: f64, p: &Ellipse, cfg: &HoughConfig) -> f64 {
    let ideal = ideal_score(p, cfg);
    if !(ideal > 0.0) || !score.is_finite() {
        return 0.0;
    }
    (score / ideal).clamp(0.0, 1.0)
}

/// Resolves the iris threshold `N` for an image, using `reference` as the
/// current best ellipse when the threshold is automatic.
///
/// The automatic threshold lies a quarter of the way from the median
/// intensity inside `reference` to the median of a ring just outside it, so
/// partially covered boundary pixels under noise stay on the sclera side.
pub fn resolve_threshold(image: &GrayImage, reference: &Ellipse, cfg: &HoughConfig) -> f64 {
    match cfg.iris_threshold {
        IrisThreshold::Fixed(n) => n,
        IrisThreshold::Auto => {
            let ring = (4.0 * cfg.edge_band).max(4.0);
            let outer = reference.inflated(ring);
            let mut inner_hist = [0u64; 256];
            let mut outer_hist = [0u64; 256];
            let (hx, hy) = outer.half_extents();
            let x0 = (reference.center.x - hx).floor().max(0.0) as u32;
            let y0 = (reference.center.y - hy).floor().max(0.0) as u32;
            let x1 = (reference.center.x + hx).ceil().min(image.width() as f64 - 1.0).max(0.0) as u32;
            let y1 = (reference.center.y + hy).ceil().min(image.height() as f64 - 1.0).max(0.0) as u32;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (fx, fy) = (x as f64, y as f64);
                    let v = image.get(x, y) as usize;
                    // Skip a one pixel guard on each side of the contour.
                    let d = reference.contour_distance(fx, fy);
                    if d < -1.0 {
                        inner_hist[v] += 1;
                    } else if d > 1.0 && outer.contains(fx, fy) {
                        outer_hist[v] += 1;
                    }
                }
            }
            match (median(&inner_hist), median(&outer_hist)) {
                (Some(a), Some(b)) => a + AUTO_THRESHOLD_FRACTION * (b - a),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => 128.0,
            }
        }
    }
}

fn median(hist: &[u64; 256]) -> Option<f64> {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return None;
    }
    let half = n.div_ceil(2);
    let mut acc = 0;
    for (v, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= half {
            return Some(v as f64);
        }
    }
    None
}

/// Scores `p` on `image`, resolving an automatic threshold against `p`
/// itself.
pub fn score_candidate(image: &GrayImage, p: &Ellipse, edges: &EdgeMap, cfg: &HoughConfig) -> f64 {
    let n = resolve_threshold(image, p, cfg);
    ScoreContext::new(image, n, cfg.polarity).score(p, edges, cfg)
}
