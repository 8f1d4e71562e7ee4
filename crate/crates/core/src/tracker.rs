//! Particle-filter tracking of the eye model over a frame sequence.
//!
//! Each particle is a full eye state (corneal centre, `phi`, `tau`). Its
//! projected limbus is scored with the detector's region/edge score and the
//! weight is `exp((s - s_max) / T)`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::detect::{detect_edges, refine_ellipse, resolve_threshold, score_confidence, EdgeMap, HoughConfig, ScoreContext};
use crate::error::{config, GazeError, Result};
use crate::gaze::{closest_branch, compute_grp, EstimateFlags, GazeEstimate};
use crate::geometry::{
    angles_from_direction, direction_unchecked, project_limbus, wrap_two_pi, AnatomicalEye, CameraIntrinsics, Ellipse,
    EyePose, Vec3,
};
use crate::image::GrayImage;
use crate::rng;

const TAU_CEILING: f64 = FRAC_PI_2 - 1e-6;
const MIN_DEPTH_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub corneal_center: Vec3,
    pub phi: f64,
    pub tau: f64,
    pub weight: f64,
}

impl Particle {
    /// Distance parameter of the state; an alias of the corneal centre `z`.
    pub fn depth(&self) -> f64 {
        self.corneal_center.z
    }

    pub fn pose(&self, eye: &AnatomicalEye) -> Result<EyePose> {
        EyePose::from_corneal_center(self.corneal_center, self.phi, self.tau, eye)
    }

    fn gaze(&self) -> Vec3 {
        direction_unchecked(self.phi, self.tau)
    }
}

/// Per-step random-walk scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNoise {
    /// Corneal centre `x` and `y`, mm.
    pub sigma_center: f64,
    pub sigma_phi: f64,
    pub sigma_tau: f64,
    /// Corneal centre `z`, mm.
    pub sigma_depth: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        MotionNoise {
            sigma_center: 0.5,
            sigma_phi: 3f64.to_radians(),
            sigma_tau: 1.5f64.to_radians(),
            sigma_depth: 2.0,
        }
    }
}

impl MotionNoise {
    pub fn zero() -> Self {
        MotionNoise {
            sigma_center: 0.0,
            sigma_phi: 0.0,
            sigma_tau: 0.0,
            sigma_depth: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma_center, self.sigma_phi, self.sigma_tau, self.sigma_depth];
        if all.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return config("motion noise scales must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub count: usize,
    pub noise: MotionNoise,
    /// Likelihood temperature; `None` uses `(A + B) / 10`.
    pub temperature: Option<f64>,
    /// Resample when `ess < ess_ratio * count`.
    pub ess_ratio: f64,
    /// Consecutive uniform-weight frames before tracking is declared lost.
    pub lost_after: usize,
    /// Refine the weighted estimate on the frame's edges and add it as a
    /// particle.
    pub refine: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            count: 500,
            noise: MotionNoise::default(),
            temperature: None,
            ess_ratio: 0.5,
            lost_after: 10,
            refine: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return config("pf.count must be at least 2");
        }
        self.noise.validate()?;
        if let Some(t) = self.temperature {
            if !(t > 0.0) {
                return config("pf.temperature must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.ess_ratio) {
            return config("pf.ess_ratio must be in [0, 1]");
        }
        if self.lost_after == 0 {
            return config("pf.lost_after must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub particles: Vec<Particle>,
    pub frame_index: u64,
    pub last_estimate: EyePose,
    pub ess: f64,
    /// Consecutive frames that ended with uniform weights.
    pub uniform_run: usize,
    /// The last weighting found no informative score.
    pub low_confidence: bool,
}

impl TrackerState {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

fn gauss(r: &mut rng::Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(r);
    sigma * z
}

/// Keeps `tau` in `[0, pi/2)`. A step through zero tilt continues on the
/// opposite side, which is the same gaze with `phi` turned by `pi`.
fn fold_tilt(phi: f64, tau: f64) -> (f64, f64) {
    let (phi, tau) = if tau < 0.0 { (phi + PI, -tau) } else { (phi, tau) };
    (wrap_two_pi(phi), tau.min(TAU_CEILING))
}

/// Samples `count` particles around `pose`.
pub fn init_tracker(pose: &EyePose, count: usize, noise: &MotionNoise, seed: u64) -> Result<TrackerState> {
    if count < 2 {
        return config("particle count must be at least 2");
    }
    noise.validate()?;
    let mut r = rng::seeded(seed);
    let w = 1.0 / count as f64;
    let particles = (0..count)
        .map(|_| jitter(&mut r, pose.corneal_center, pose.phi, pose.tau, noise, w))
        .collect();
    Ok(TrackerState {
        particles,
        frame_index: 0,
        last_estimate: *pose,
        ess: count as f64,
        uniform_run: 0,
        low_confidence: false,
    })
}

fn jitter(r: &mut rng::Rng, c: Vec3, phi: f64, tau: f64, noise: &MotionNoise, weight: f64) -> Particle {
    let c = Vec3::new(
        c.x + gauss(r, noise.sigma_center),
        c.y + gauss(r, noise.sigma_center),
        (c.z + gauss(r, noise.sigma_depth)).max(MIN_DEPTH_MM),
    );
    let (phi, tau) = fold_tilt(phi + gauss(r, noise.sigma_phi), tau + gauss(r, noise.sigma_tau));
    Particle {
        corneal_center: c,
        phi,
        tau,
        weight,
    }
}

/// Random-walk prediction.
pub fn predict(state: &TrackerState, noise: &MotionNoise, seed: u64) -> TrackerState {
    let mut r = rng::seeded(seed);
    let particles = state
        .particles
        .iter()
        .map(|p| jitter(&mut r, p.corneal_center, p.phi, p.tau, noise, p.weight))
        .collect();
    TrackerState {
        particles,
        ..state.clone()
    }
}

fn normalize(weights: &mut [f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    ess.clamp(1.0, weights.len() as f64)
}

fn particle_ellipse(p: &Particle, cam: &CameraIntrinsics, eye: &AnatomicalEye) -> Option<Ellipse> {
    let pose = p.pose(eye).ok()?;
    project_limbus(&pose, cam, eye).ok()
}

/// Per-frame scoring context shared by all particles.
struct FrameScorer<'a> {
    ctx: ScoreContext,
    edges: EdgeMap,
    cfg: &'a HoughConfig,
}

impl<'a> FrameScorer<'a> {
    fn new(image: &GrayImage, reference: Option<&Ellipse>, cfg: &'a HoughConfig) -> Self {
        let edges = detect_edges(image, cfg.edge_threshold);
        let n = match reference {
            Some(e) => resolve_threshold(image, e, cfg),
            None => resolve_threshold(image, &Ellipse::circle(1.0, crate::detect::image_center(image)).unwrap(), cfg),
        };
        FrameScorer {
            ctx: ScoreContext::new(image, n, cfg.polarity),
            edges,
            cfg,
        }
    }

    fn score(&self, e: &Ellipse) -> f64 {
        self.ctx.score(e, &self.edges, self.cfg)
    }
}

fn apply_scores(state: &TrackerState, scores: &[f64], temperature: f64) -> TrackerState {
    let max = scores.iter().cloned().filter(|s| s.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let informative = max.is_finite() && max > 0.0;
    let mut weights: Vec<f64> = if informative {
        scores
            .iter()
            .map(|s| if s.is_finite() { ((s - max) / temperature).exp() } else { 0.0 })
            .collect()
    } else {
        vec![1.0; scores.len()]
    };
    let ess = normalize(&mut weights);
    let particles = state
        .particles
        .iter()
        .zip(&weights)
        .map(|(p, &weight)| Particle { weight, ..*p })
        .collect();
    TrackerState {
        particles,
        ess,
        low_confidence: !informative,
        ..state.clone()
    }
}

/// Weights every particle by the score of its projected limbus on `image`.
pub fn weight_particles(
    state: &TrackerState,
    image: &GrayImage,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    hough: &HoughConfig,
    temperature: f64,
) -> TrackerState {
    let reference = project_limbus(&state.last_estimate, cam, eye).ok();
    let scorer = FrameScorer::new(image, reference.as_ref(), hough);
    let scores = score_particles(state, &scorer, cam, eye);
    apply_scores(state, &scores, temperature)
}

fn score_particles(state: &TrackerState, scorer: &FrameScorer, cam: &CameraIntrinsics, eye: &AnatomicalEye) -> Vec<f64> {
    state
        .particles
        .iter()
        .map(|p| match particle_ellipse(p, cam, eye) {
            Some(e) => scorer.score(&e),
            None => f64::NEG_INFINITY,
        })
        .collect()
}

/// Systematic resampling when the effective sample size falls below
/// `ess_ratio * count`.
pub fn resample(state: &TrackerState, ess_ratio: f64, seed: u64) -> TrackerState {
    let n = state.particles.len();
    if state.ess >= ess_ratio * n as f64 {
        return state.clone();
    }
    let mut r = rng::seeded(seed);
    let u0: f64 = r.random::<f64>() / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = state.particles[0].weight;
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 / n as f64;
        while u > cumulative && i + 1 < n {
            i += 1;
            cumulative += state.particles[i].weight;
        }
        out.push(Particle {
            weight: 1.0 / n as f64,
            ..state.particles[i]
        });
    }
    TrackerState {
        particles: out,
        ess: n as f64,
        ..state.clone()
    }
}

/// Weighted mean state. Directions are averaged as unit vectors, which is
/// the circular mean of `phi` weighted by the tilt.
pub fn estimate(state: &TrackerState, eye: &AnatomicalEye) -> Result<EyePose> {
    let mut c = Vec3::zeros();
    let mut g = Vec3::zeros();
    for p in &state.particles {
        c += p.weight * p.corneal_center;
        g += p.weight * p.gaze();
    }
    if !(g.norm() > 1e-12) {
        return Err(GazeError::Numeric("degenerate particle directions".into()));
    }
    let (phi, tau) = angles_from_direction(&g, state.last_estimate.phi);
    let (phi, tau) = fold_tilt(phi, tau);
    EyePose::from_corneal_center(c, phi, tau, eye)
}

/// One tracking step: predict, weight, estimate, resample.
///
/// `depth_hint` is an external limbus depth measurement; when given, the
/// particle cloud is shifted in `z` so its mean limbus depth matches it.
#[allow(clippy::too_many_arguments)]
pub fn track_frame(
    state: TrackerState,
    image: &GrayImage,
    depth_hint: Option<f64>,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
    hough: &HoughConfig,
    cfg: &TrackerConfig,
    seed: u64,
) -> Result<(TrackerState, GazeEstimate)> {
    cfg.validate()?;
    if state.particles.len() != cfg.count {
        return config(format!(
            "tracker holds {} particles but pf.count is {}",
            state.particles.len(),
            cfg.count
        ));
    }
    let temperature = cfg.temperature.unwrap_or_else(|| hough.default_temperature());
    let mut st = predict(&state, &cfg.noise, rng::derive(seed, 0));
    if let Some(hint) = depth_hint {
        if !(hint > 0.0) {
            return config("depth hint must be positive");
        }
        let mean_l: f64 = st
            .particles
            .iter()
            .map(|p| p.corneal_center.z + eye.d_limbus_corneal * p.gaze().z)
            .sum::<f64>()
            / st.particles.len() as f64;
        let shift = hint - mean_l;
        for p in &mut st.particles {
            p.corneal_center.z = (p.corneal_center.z + shift).max(MIN_DEPTH_MM);
        }
    }

    let reference = project_limbus(&state.last_estimate, cam, eye).ok();
    let scorer = FrameScorer::new(image, reference.as_ref(), hough);
    let mut scores = score_particles(&st, &scorer, cam, eye);
    let mut weighted = apply_scores(&st, &scores, temperature);

    if cfg.refine && !weighted.low_confidence {
        if let Some(injected) = refined_particle(&weighted, &scorer, cam, eye) {
            let (slot, _) = weighted
                .particles
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.weight.total_cmp(&b.1.weight))
                .expect("nonempty particle set");
            st.particles[slot] = injected.0;
            scores[slot] = injected.1;
            weighted = apply_scores(&st, &scores, temperature);
        }
    }

    let flags = EstimateFlags {
        low_confidence: weighted.low_confidence,
        ..Default::default()
    };
    weighted.uniform_run = if weighted.low_confidence { state.uniform_run + 1 } else { 0 };
    if weighted.uniform_run >= cfg.lost_after {
        return Err(GazeError::TrackingLost {
            frames: weighted.uniform_run,
        });
    }

    let pose = if weighted.low_confidence {
        state.last_estimate
    } else {
        estimate(&weighted, eye)?
    };
    let ellipse = project_limbus(&pose, cam, eye).ok();
    let best = scores.iter().cloned().filter(|s| s.is_finite()).fold(0.0, f64::max);
    let confidence = ellipse.map(|e| score_confidence(best, &e, hough)).unwrap_or(0.0);
    let grp = compute_grp(&pose, cam, eye, None).ok();

    weighted.last_estimate = pose;
    weighted.frame_index = state.frame_index + 1;
    let next = resample(&weighted, cfg.ess_ratio, rng::derive(seed, 1));
    let est = GazeEstimate {
        ellipse,
        pose: Some(pose),
        grp,
        visual_axis: None,
        confidence,
        flags,
    };
    Ok((next, est))
}

/// Fits the edges around the weighted estimate and returns that fit as a
/// particle together with its score.
fn refined_particle(
    weighted: &TrackerState,
    scorer: &FrameScorer,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
) -> Option<(Particle, f64)> {
    let mean = estimate(weighted, eye).ok()?;
    let coarse = project_limbus(&mean, cam, eye).ok()?;
    let fit = refine_ellipse(&scorer.edges, &coarse)?;
    let pose = closest_branch(&fit, cam, eye, &mean.gaze()).ok()?;
    let (phi, tau) = fold_tilt(pose.phi, pose.tau);
    let p = Particle {
        corneal_center: pose.corneal_center,
        phi,
        tau,
        weight: 0.0,
    };
    let e = particle_ellipse(&p, cam, eye)?;
    Some((p, scorer.score(&e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render_eye_image, RenderStyle};

    fn setup() -> (EyePose, CameraIntrinsics, AnatomicalEye) {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.6, 0.3, &eye).unwrap();
        let cam = CameraIntrinsics::new(14000.0, 401, 401).unwrap();
        (pose, cam, eye)
    }

    #[test]
    fn zero_noise_init_copies_pose() {
        let (pose, _, _) = setup();
        let st = init_tracker(&pose, 20, &MotionNoise::zero(), 1).unwrap();
        assert_eq!(st.len(), 20);
        for p in &st.particles {
            assert_eq!(p.corneal_center, pose.corneal_center);
            assert!((p.phi - pose.phi).abs() < 1e-15 && p.tau == pose.tau);
            assert!((p.weight - 0.05).abs() < 1e-15);
        }
        assert!(init_tracker(&pose, 1, &MotionNoise::zero(), 1).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let (pose, _, _) = setup();
        let a = init_tracker(&pose, 500, &MotionNoise::default(), 3).unwrap();
        let b = init_tracker(&pose, 500, &MotionNoise::default(), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
    }

    #[test]
    fn zero_noise_predict_is_identity() {
        let (pose, _, _) = setup();
        let st = init_tracker(&pose, 30, &MotionNoise::default(), 3).unwrap();
        assert_eq!(predict(&st, &MotionNoise::zero(), 9), st);
    }

    #[test]
    fn tilt_stays_nonnegative() {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.6, 0.01, &eye).unwrap();
        let noise = MotionNoise {
            sigma_tau: 0.5,
            ..MotionNoise::zero()
        };
        let mut st = init_tracker(&pose, 200, &MotionNoise::zero(), 1).unwrap();
        for k in 0..20 {
            st = predict(&st, &noise, k);
            assert!(st.particles.iter().all(|p| (0.0..FRAC_PI_2).contains(&p.tau)));
            assert!(st.particles.iter().all(|p| (0.0..2.0 * PI).contains(&p.phi)));
        }
    }

    #[test]
    fn random_walk_has_no_drift() {
        let (pose, _, _) = setup();
        let n = 400;
        let steps = 1000;
        let noise = MotionNoise::default();
        let mut st = init_tracker(&pose, n, &MotionNoise::zero(), 1).unwrap();
        for k in 0..steps {
            st = predict(&st, &noise, rng::derive(11, k));
        }
        let mean: Vec3 = st.particles.iter().map(|p| p.corneal_center).sum::<Vec3>() / n as f64;
        let spread = (steps as f64).sqrt() / (n as f64).sqrt();
        let d = mean - pose.corneal_center;
        assert!(d.x.abs() < 3.0 * noise.sigma_center * spread);
        assert!(d.y.abs() < 3.0 * noise.sigma_center * spread);
        assert!(d.z.abs() < 3.0 * noise.sigma_depth * spread);
    }

    #[test]
    fn truth_outweighs_offset() {
        let (pose, cam, eye) = setup();
        let img = render_eye_image(&pose, &cam, &eye, &RenderStyle::default()).unwrap();
        let mut st = init_tracker(&pose, 2, &MotionNoise::zero(), 1).unwrap();
        // 5 px at 500 mm and f = 14000 is 5 * 500 / 14000 mm.
        st.particles[1].corneal_center.x += 5.0 * 500.0 / 14000.0;
        let w = weight_particles(&st, &img, &cam, &eye, &HoughConfig::default(), 0.2);
        assert!(w.particles[0].weight > w.particles[1].weight);
        let total: f64 = w.particles.iter().map(|p| p.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(w.ess >= 1.0 && w.ess <= 2.0);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let (pose, cam, eye) = setup();
        let img = render_eye_image(&pose, &cam, &eye, &RenderStyle::default()).unwrap();
        let st = init_tracker(&pose, 10, &MotionNoise::default(), 1).unwrap();
        let w = weight_particles(&st, &img, &cam, &eye, &HoughConfig::default(), f64::INFINITY);
        assert!(w.particles.iter().all(|p| (p.weight - 0.1).abs() < 1e-12));
        assert!((w.ess - 10.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_weights_do_not_resample() {
        let (pose, _, _) = setup();
        let st = init_tracker(&pose, 10, &MotionNoise::default(), 1).unwrap();
        assert_eq!(resample(&st, 0.5, 3), st);
    }

    #[test]
    fn dominant_weight_collapses() {
        let (pose, _, _) = setup();
        let mut st = init_tracker(&pose, 10, &MotionNoise::default(), 1).unwrap();
        for (i, p) in st.particles.iter_mut().enumerate() {
            p.weight = if i == 4 { 1.0 } else { 0.0 };
        }
        st.ess = 1.0;
        let target = st.particles[4];
        let out = resample(&st, 0.5, 3);
        assert!(out.particles.iter().all(|p| p.corneal_center == target.corneal_center && p.phi == target.phi));
    }

    #[test]
    fn resampling_counts_follow_weights() {
        let (pose, _, _) = setup();
        let n = 1000;
        let mut st = init_tracker(&pose, n, &MotionNoise::zero(), 1).unwrap();
        for (i, p) in st.particles.iter_mut().enumerate() {
            p.phi = i as f64 * 1e-3;
            p.weight = if i < 10 { 0.07 } else { 0.3 / (n - 10) as f64 };
        }
        st.ess = 1.0;
        let out = resample(&st, 0.5, 5);
        for i in 0..10 {
            let count = out.particles.iter().filter(|p| p.phi == i as f64 * 1e-3).count() as f64;
            let expect = 0.07 * n as f64;
            let sd = (n as f64 * 0.07 * 0.93).sqrt();
            assert!((count - expect).abs() <= 3.0 * sd, "{count}");
        }
    }

    #[test]
    fn blank_frames_lose_track() {
        let (pose, cam, eye) = setup();
        let cfg = TrackerConfig {
            count: 50,
            ..Default::default()
        };
        let blank = GrayImage::filled(401, 401, 200).unwrap();
        let mut st = init_tracker(&pose, cfg.count, &cfg.noise, 1).unwrap();
        let hough = HoughConfig::default();
        let mut lost_at = None;
        for k in 0..20 {
            match track_frame(st.clone(), &blank, None, &cam, &eye, &hough, &cfg, k) {
                Ok((next, est)) => {
                    assert!(est.flags.low_confidence);
                    st = next;
                }
                Err(GazeError::TrackingLost { frames }) => {
                    lost_at = Some((k, frames));
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(lost_at, Some((9, 10)));
    }

    #[test]
    fn static_sequence_holds_tilt() {
        let (pose, cam, eye) = setup();
        let img = render_eye_image(&pose, &cam, &eye, &RenderStyle::default()).unwrap();
        let cfg = TrackerConfig {
            count: 100,
            ..Default::default()
        };
        let start = EyePose::new(pose.limbus_center + Vec3::new(0.05, -0.05, 2.0), 0.65, 0.27, &eye).unwrap();
        let mut st = init_tracker(&start, cfg.count, &cfg.noise, 1).unwrap();
        let mut errs = Vec::new();
        for k in 0..15 {
            let (next, est) = track_frame(st, &img, None, &cam, &eye, &HoughConfig::default(), &cfg, k).unwrap();
            st = next;
            errs.push((est.pose.unwrap().tau - pose.tau).abs().to_degrees());
        }
        let tail = &errs[5..];
        assert!(tail.iter().sum::<f64>() / (tail.len() as f64) < 0.5, "{errs:?}");
    }
}
