//! Limbus detection: edges, Hough candidates over a radius ladder and a
//! centre set, and selection by the region/edge score.

mod edges;
mod hough;
mod refine;
mod score;

use std::f64::consts::TAU;

use rand::Rng as _;

pub use edges::{detect_edges, EdgeMap, EdgePoint};
pub use hough::{hough_candidates, ORIENTATION_BINS, TILT_BINS};
pub use refine::refine_ellipse;
pub use score::{edge_support, ideal_score, resolve_threshold, score_candidate, score_confidence, ScoreContext};

use crate::error::{config, domain, Result};
use crate::geometry::{AnatomicalEye, CameraIntrinsics, Ellipse, ImagePoint};
use crate::image::GrayImage;
use crate::rng;

/// How the iris threshold `N` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrisThreshold {
    Auto,
    Fixed(f64),
}

/// Which side of `N` counts as iris.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Iris pixels are darker than `N`.
    DarkIris,
    /// Iris pixels are brighter than `N`.
    BrightIris,
}

impl Polarity {
    #[inline]
    pub fn is_iris(self, v: f64, n: f64) -> bool {
        match self {
            Polarity::DarkIris => v < n,
            Polarity::BrightIris => v > n,
        }
    }
}

/// Reading of the edge term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTerm {
    /// Edge points within `delta` of the ellipse contour.
    Contour,
    /// Edge points within `delta` of the ellipse centre (literal reading).
    Center,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoughConfig {
    /// Half-width of the radius ladder; the ladder has `2m` entries.
    pub m: usize,
    /// Number of candidate centres.
    pub n: usize,
    pub center_jitter_px: f64,
    pub candidate_count: usize,
    /// Region term weight `A`.
    pub weight_region: f64,
    /// Edge term weight `B`.
    pub weight_edge: f64,
    pub iris_threshold: IrisThreshold,
    pub polarity: Polarity,
    /// Band width `delta`, pixels.
    pub edge_band: f64,
    pub edge_threshold: f64,
    pub edge_term: EdgeTerm,
    /// Minimum Hough votes as a fraction of the mid-ladder circumference.
    pub min_support: f64,
    /// Sub-pixel refinement of the selected candidate.
    pub refine: bool,
    pub seed: u64,
}

impl Default for HoughConfig {
    fn default() -> Self {
        HoughConfig {
            m: 4,
            n: 12,
            center_jitter_px: 10.0,
            candidate_count: 12,
            weight_region: 1.0,
            weight_edge: 1.0,
            iris_threshold: IrisThreshold::Auto,
            polarity: Polarity::DarkIris,
            edge_band: 2.0,
            edge_threshold: 20.0,
            edge_term: EdgeTerm::Contour,
            min_support: 0.2,
            refine: true,
            seed: 0,
        }
    }
}

impl HoughConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= 20 {
            return config(format!("hough.m must be in 1..20, got {}", self.m));
        }
        if self.n == 0 || self.n >= 20 {
            return config(format!("hough.n must be in 1..20, got {}", self.n));
        }
        if self.candidate_count == 0 {
            return config("hough.candidates must be positive");
        }
        if !(self.weight_region >= 0.0 && self.weight_edge >= 0.0) {
            return config("hough.A and hough.B must be nonnegative");
        }
        if !(self.edge_band > 0.0) {
            return config("hough.delta must be positive");
        }
        if !(self.center_jitter_px >= 0.0) {
            return config("hough.jitter must be nonnegative");
        }
        Ok(())
    }

    /// Temperature used by the tracker likelihood by default.
    pub fn default_temperature(&self) -> f64 {
        ((self.weight_region + self.weight_edge) / 10.0).max(1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEllipse {
    pub ellipse: Ellipse,
    pub score: f64,
}

/// The `2m` radius hypotheses `f RL / D + i` for `i = -m+1 ..= m`.
pub fn radius_candidates(
    depth_mm: f64,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    cfg: &HoughConfig,
) -> Result<Vec<f64>> {
    if !(depth_mm > 0.0) || !depth_mm.is_finite() {
        return domain("depth must be positive");
    }
    let base = cam.focal_px * eye.r_limbus / depth_mm;
    let m = cfg.m as i64;
    let radii: Vec<f64> = (-m + 1..=m).map(|i| base + i as f64).collect();
    if radii[0] <= 0.0 {
        return domain(format!("radius ladder reaches nonpositive values at base {base}"));
    }
    Ok(radii)
}

/// The crop centre followed by `n - 1` points uniform in the jitter disk.
pub fn center_candidates(crop_center: ImagePoint, cfg: &HoughConfig, rng_seed: u64) -> Result<Vec<ImagePoint>> {
    if cfg.n == 0 {
        return domain("need at least one centre");
    }
    let mut rng = rng::seeded(rng_seed);
    let mut out = Vec::with_capacity(cfg.n);
    out.push(crop_center);
    for _ in 1..cfg.n {
        let r = cfg.center_jitter_px * rng.random::<f64>().sqrt();
        let t = TAU * rng.random::<f64>();
        out.push(ImagePoint::new(crop_center.x + r * t.cos(), crop_center.y + r * t.sin()));
    }
    Ok(out)
}

/// Geometric centre of an image.
pub fn image_center(image: &GrayImage) -> ImagePoint {
    ImagePoint::new(
        (image.width() as f64 - 1.0) / 2.0,
        (image.height() as f64 - 1.0) / 2.0,
    )
}

/// Detects the limbus in a cropped eye image.
///
/// Hough candidates are ranked by the region/edge score and the best one is
/// returned, refined to sub-pixel precision on its supporting edges when
/// `cfg.refine` is set.
pub fn fit_limbus(
    image: &GrayImage,
    depth_mm: f64,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    cfg: &HoughConfig,
    rng_seed: u64,
) -> Result<ScoredEllipse> {
    cfg.validate()?;
    let edges = detect_edges(image, cfg.edge_threshold);
    fit_limbus_with_edges(image, &edges, depth_mm, cam, eye, cfg, rng_seed)
}

pub(crate) fn fit_limbus_with_edges(
    image: &GrayImage,
    edges: &EdgeMap,
    depth_mm: f64,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    cfg: &HoughConfig,
    rng_seed: u64,
) -> Result<ScoredEllipse> {
    let radii = radius_candidates(depth_mm, cam, eye, cfg)?;
    let centers = center_candidates(image_center(image), cfg, rng_seed)?;
    let candidates = hough_candidates(edges, &radii, &centers, cfg)?;

    let n = resolve_threshold(image, &candidates[0], cfg);
    let ctx = ScoreContext::new(image, n, cfg.polarity);
    let mut best = ScoredEllipse {
        ellipse: candidates[0],
        score: f64::NEG_INFINITY,
    };
    for c in &candidates {
        let s = ctx.score(c, edges, cfg);
        if s > best.score {
            best = ScoredEllipse { ellipse: *c, score: s };
        }
    }

    if cfg.refine {
        if let Some(refined) = refine_ellipse(edges, &best.ellipse) {
            return Ok(ScoredEllipse {
                ellipse: refined,
                score: ctx.score(&refined, edges, cfg),
            });
        }
        log::debug!("refinement rejected; keeping coarse candidate");
    }
    Ok(best)
}
