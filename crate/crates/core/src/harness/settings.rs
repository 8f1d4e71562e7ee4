//! Typed run settings read from a flat [`Config`].

use std::path::PathBuf;
use std::str::FromStr;

use crate::config::Config;
use crate::crop::CropConfig;
use crate::detect::{EdgeTerm, HoughConfig, IrisThreshold, Polarity};
use crate::error::{config, GazeError, Result};
use crate::gaze::{Kappa, PipelineConfig};
use crate::geometry::{AnatomicalEye, CameraIntrinsics, ImagePoint, Vec3};
use crate::optics::RigSpec;
use crate::pose::AmbiguityPolicy;
use crate::render::RenderStyle;
use crate::tracker::{MotionNoise, TrackerConfig};

/// Every key the harness understands.
pub const KNOWN_KEYS: &[&str] = &[
    "run.seed",
    "run.input",
    "run.overlays",
    "camera.focal_px",
    "camera.width",
    "camera.height",
    "camera.cx",
    "camera.cy",
    "eye.r_corneal",
    "eye.d_lc",
    "eye.r_limbus",
    "hough.m",
    "hough.n",
    "hough.A",
    "hough.B",
    "hough.N",
    "hough.delta",
    "hough.edge_threshold",
    "hough.seed",
    "hough.jitter",
    "hough.candidates",
    "hough.edge_term",
    "hough.polarity",
    "hough.min_support",
    "hough.refine",
    "pf.count",
    "pf.sigma_center",
    "pf.sigma_phi",
    "pf.sigma_tau",
    "pf.sigma_depth",
    "pf.sigma_d",
    "pf.temperature",
    "pf.ess_ratio",
    "pf.lost_after",
    "pf.refine",
    "pose.ambiguity",
    "pose.roi",
    "pose.depth",
    "pose.depth_hint",
    "render.iris",
    "render.sclera",
    "render.antialias",
    "render.noise",
    "render.occlusion",
    "render.lid",
    "sim.frames",
    "sim.x",
    "sim.y",
    "sim.depth",
    "sim.x_end",
    "sim.y_end",
    "sim.depth_end",
    "sim.phi_deg",
    "sim.phi_end_deg",
    "sim.tau_deg",
    "sim.tau_end_deg",
    "sim.blank",
    "kappa.h_deg",
    "kappa.v_deg",
    "kappa.profile",
    "crop.template",
    "crop.threshold",
    "crop.margin",
    "sensitivity.tau_deg",
    "sensitivity.phi_deg",
    "sensitivity.depth",
    "sensitivity.px",
    "sensitivity.tilt_deg",
    "board.eye_depth",
    "board.az_deg",
    "board.el_deg",
    "board.spacing_deg",
    "conv.max_points",
    "conv.noise_px",
    "conv.trials",
    "conv.depth",
    "accuracy.subjects",
    "accuracy.depths",
    "accuracy.kappa_max_deg",
    "rig.interpersonal",
    "rig.distance",
    "rig.focal",
    "rig.pitch",
    "rig.sensor_w",
    "rig.sensor_h",
    "rig.coverage_w",
    "rig.coverage_h",
    "rig.overlap",
    "rig.face_px",
    "rig.face_fraction",
    "design.min_distance",
    "design.max_distance",
    "design.step",
    "autofocus.focal",
    "autofocus.depths",
    "autofocus.motors",
    "autofocus.slope",
    "autofocus.intercept",
    "autofocus.noise",
    "autofocus.query",
];

/// Experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Detect,
    Track,
    Simulate,
    Sensitivity,
    KappaConv,
    Accuracy,
    Design,
    AutofocusCalib,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Detect,
        Mode::Track,
        Mode::Simulate,
        Mode::Sensitivity,
        Mode::KappaConv,
        Mode::Accuracy,
        Mode::Design,
        Mode::AutofocusCalib,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Detect => "detect",
            Mode::Track => "track",
            Mode::Simulate => "simulate",
            Mode::Sensitivity => "sensitivity",
            Mode::KappaConv => "kappa-conv",
            Mode::Accuracy => "accuracy",
            Mode::Design => "design",
            Mode::AutofocusCalib => "autofocus-calib",
        }
    }
}

impl FromStr for Mode {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| GazeError::Config(format!("unknown mode '{s}'")))
    }
}

/// Camera used for synthetic frames and for interpreting input frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSettings {
    pub focal_px: f64,
    pub width: u32,
    pub height: u32,
    pub principal_point: Option<ImagePoint>,
}

impl CameraSettings {
    /// Intrinsics for an image of the given size.
    pub fn intrinsics(&self, width: u32, height: u32) -> Result<CameraIntrinsics> {
        match self.principal_point {
            Some(pp) => CameraIntrinsics::with_principal_point(self.focal_px, pp, width, height),
            None => CameraIntrinsics::new(self.focal_px, width, height),
        }
    }
}

/// Synthetic eye sequence: pose parameters interpolated linearly from the
/// start to the end values.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub frames: usize,
    pub start: Vec3,
    pub end: Vec3,
    pub phi_deg: (f64, f64),
    pub tau_deg: (f64, f64),
    /// Frames replaced by a uniform sclera image.
    pub blank: Vec<usize>,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec {
            frames: 100,
            start: Vec3::new(0.0, 0.0, 500.0),
            end: Vec3::new(0.0, 0.0, 500.0),
            phi_deg: (35.0, 35.0),
            tau_deg: (15.0, 15.0),
            blank: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySpec {
    pub tau_deg: f64,
    pub phi_deg: f64,
    pub depth: f64,
    /// Perturbations for the axes and centre groups, pixels.
    pub px: Vec<f64>,
    /// Perturbations for the orientation group, degrees.
    pub tilt_deg: Vec<f64>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        SensitivitySpec {
            tau_deg: 20.0,
            phi_deg: 30.0,
            depth: 500.0,
            px: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0],
            tilt_deg: vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

/// 5 x 3 marker board seen by an eye at `eye_depth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardSpec {
    /// Corneal centre depth of the eye, mm.
    pub eye_depth: f64,
    /// Direction of the board centre from the eye, degrees.
    pub az_deg: f64,
    pub el_deg: f64,
    /// Angular marker spacing, degrees.
    pub spacing_deg: f64,
}

impl Default for BoardSpec {
    fn default() -> Self {
        BoardSpec {
            eye_depth: 505.0,
            az_deg: 20.0,
            el_deg: -10.0,
            spacing_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSpec {
    pub max_points: usize,
    pub noise_px: f64,
    pub trials: usize,
    /// Board distance from the eye, mm.
    pub depth: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec {
            max_points: 10,
            noise_px: 0.0,
            trials: 50,
            depth: 800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySpec {
    pub subjects: usize,
    /// Board distances from the eye, mm.
    pub depths: Vec<f64>,
    /// Subject kappas are drawn uniformly within this bound, degrees.
    pub kappa_max_deg: f64,
}

impl Default for AccuracySpec {
    fn default() -> Self {
        AccuracySpec {
            subjects: 3,
            depths: vec![800.0, 1600.0],
            kappa_max_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSweep {
    pub face_fraction: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub step: f64,
}

impl Default for DesignSweep {
    fn default() -> Self {
        DesignSweep {
            face_fraction: 0.2,
            min_distance: 300.0,
            max_distance: 1500.0,
            step: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutofocusSpec {
    pub focal: f64,
    /// Calibration depths, mm.
    pub depths: Vec<f64>,
    /// Measured motor values; synthesized from the line below when absent.
    pub motors: Option<Vec<f64>>,
    pub slope: f64,
    pub intercept: f64,
    pub noise: f64,
    /// Depths for the command table, mm.
    pub query: Vec<f64>,
}

impl Default for AutofocusSpec {
    fn default() -> Self {
        AutofocusSpec {
            focal: 35.0,
            depths: vec![400.0, 500.0, 600.0, 800.0, 1000.0],
            motors: None,
            slope: 400.0,
            intercept: -200.0,
            noise: 0.0,
            query: vec![400.0, 450.0, 500.0, 550.0, 600.0, 700.0, 800.0, 1000.0],
        }
    }
}

/// Fully parsed run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub overlays: bool,
    pub camera: CameraSettings,
    pub eye: AnatomicalEye,
    pub pipeline: PipelineConfig,
    /// Use the true limbus depth of synthetic frames as the depth hint.
    pub depth_hint: bool,
    pub render: RenderStyle,
    pub sequence: SequenceSpec,
    pub kappa: Kappa,
    pub crop: Option<(PathBuf, CropConfig)>,
    pub sensitivity: SensitivitySpec,
    pub board: BoardSpec,
    pub convergence: ConvergenceSpec,
    pub accuracy: AccuracySpec,
    pub rig: RigSpec,
    pub design: DesignSweep,
    pub autofocus: AutofocusSpec,
    /// Source configuration after overrides, for the manifest.
    pub source: Config,
}

fn u32_or(cfg: &Config, key: &str, default: u32) -> Result<u32> {
    let v = cfg.u64_or(key, default as u64)?;
    u32::try_from(v).map_err(|_| GazeError::Config(format!("{key}: value too large")))
}

fn list_or(cfg: &Config, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    Ok(cfg.get_f64_list(key)?.unwrap_or(default))
}

fn parse_hough(cfg: &Config) -> Result<HoughConfig> {
    let d = HoughConfig::default();
    let iris_threshold = match cfg.get_str("hough.N") {
        None | Some("auto") => IrisThreshold::Auto,
        Some(v) => IrisThreshold::Fixed(
            v.parse::<f64>()
                .ok()
                .filter(|x| (0.0..=255.0).contains(x))
                .ok_or_else(|| GazeError::Config(format!("hough.N: expected auto or 0-255, got '{v}'")))?,
        ),
    };
    let edge_term = match cfg.get_str("hough.edge_term") {
        None | Some("contour") => EdgeTerm::Contour,
        Some("center") => EdgeTerm::Center,
        Some(v) => return config(format!("hough.edge_term: expected contour or center, got '{v}'")),
    };
    let polarity = match cfg.get_str("hough.polarity") {
        None | Some("dark_iris") => Polarity::DarkIris,
        Some("bright_iris") => Polarity::BrightIris,
        Some(v) => return config(format!("hough.polarity: expected dark_iris or bright_iris, got '{v}'")),
    };
    let h = HoughConfig {
        m: cfg.usize_or("hough.m", d.m)?,
        n: cfg.usize_or("hough.n", d.n)?,
        center_jitter_px: cfg.f64_or("hough.jitter", d.center_jitter_px)?,
        candidate_count: cfg.usize_or("hough.candidates", d.candidate_count)?,
        weight_region: cfg.f64_or("hough.A", d.weight_region)?,
        weight_edge: cfg.f64_or("hough.B", d.weight_edge)?,
        iris_threshold,
        polarity,
        edge_band: cfg.f64_or("hough.delta", d.edge_band)?,
        edge_threshold: cfg.f64_or("hough.edge_threshold", d.edge_threshold)?,
        edge_term,
        min_support: cfg.f64_or("hough.min_support", d.min_support)?,
        refine: cfg.bool_or("hough.refine", d.refine)?,
        seed: cfg.u64_or("hough.seed", d.seed)?,
    };
    h.validate()?;
    Ok(h)
}

fn parse_tracker(cfg: &Config) -> Result<TrackerConfig> {
    let d = TrackerConfig::default();
    let n = MotionNoise::default();
    if cfg.contains("pf.sigma_depth") && cfg.contains("pf.sigma_d") {
        return config("pf.sigma_depth and its alias pf.sigma_d are both set");
    }
    let sigma_depth = match cfg.get_f64("pf.sigma_d")? {
        Some(v) => v,
        None => cfg.f64_or("pf.sigma_depth", n.sigma_depth)?,
    };
    let t = TrackerConfig {
        count: cfg.usize_or("pf.count", d.count)?,
        noise: MotionNoise {
            sigma_center: cfg.f64_or("pf.sigma_center", n.sigma_center)?,
            sigma_phi: cfg.f64_or("pf.sigma_phi", n.sigma_phi.to_degrees())?.to_radians(),
            sigma_tau: cfg.f64_or("pf.sigma_tau", n.sigma_tau.to_degrees())?.to_radians(),
            sigma_depth,
        },
        temperature: cfg.get_f64("pf.temperature")?,
        ess_ratio: cfg.f64_or("pf.ess_ratio", d.ess_ratio)?,
        lost_after: cfg.usize_or("pf.lost_after", d.lost_after)?,
        refine: cfg.bool_or("pf.refine", d.refine)?,
    };
    t.validate()?;
    Ok(t)
}

fn parse_vec3(cfg: &Config, key: &str) -> Result<Option<Vec3>> {
    match cfg.get_f64_list(key)? {
        None => Ok(None),
        Some(v) if v.len() == 3 => Ok(Some(Vec3::new(v[0], v[1], v[2]))),
        Some(_) => config(format!("{key}: expected three comma-separated numbers")),
    }
}

impl RunConfig {
    /// Parses and validates `cfg` for `mode`.
    pub fn from_config(mode: Mode, cfg: &Config, output_dir: impl Into<PathBuf>) -> Result<RunConfig> {
        cfg.check_known(KNOWN_KEYS)?;
        let seed = cfg
            .get_u64("run.seed")?
            .ok_or_else(|| GazeError::Config("run.seed is required".into()))?;

        let camera = CameraSettings {
            focal_px: cfg.f64_or("camera.focal_px", 14000.0)?,
            width: u32_or(cfg, "camera.width", 401)?,
            height: u32_or(cfg, "camera.height", 401)?,
            principal_point: match (cfg.get_f64("camera.cx")?, cfg.get_f64("camera.cy")?) {
                (Some(x), Some(y)) => Some(ImagePoint::new(x, y)),
                (None, None) => None,
                _ => return config("camera.cx and camera.cy must be given together"),
            },
        };
        camera.intrinsics(camera.width, camera.height)?;

        let de = AnatomicalEye::default();
        let eye = AnatomicalEye::new(
            cfg.f64_or("eye.r_corneal", de.r_corneal)?,
            cfg.f64_or("eye.d_lc", de.d_limbus_corneal)?,
            cfg.f64_or("eye.r_limbus", de.r_limbus)?,
        )
        .map_err(|e| GazeError::Config(e.to_string()))?;

        let roi = parse_vec3(cfg, "pose.roi")?.unwrap_or_else(Vec3::zeros);
        let ambiguity = cfg
            .get_str("pose.ambiguity")
            .map(AmbiguityPolicy::from_str)
            .transpose()?
            .unwrap_or_default()
            .with_roi(roi);
        let pipeline = PipelineConfig {
            hough: parse_hough(cfg)?,
            tracker: parse_tracker(cfg)?,
            ambiguity,
            default_depth: cfg.f64_or("pose.depth", 500.0)?,
            track: mode == Mode::Track,
        };
        if !(pipeline.default_depth > 0.0) {
            return config("pose.depth must be positive");
        }

        let dr = RenderStyle::default();
        let render = RenderStyle {
            iris: cfg.f64_or("render.iris", dr.iris)?,
            sclera: cfg.f64_or("render.sclera", dr.sclera)?,
            antialias: cfg.bool_or("render.antialias", dr.antialias)?,
            noise_sigma: cfg.f64_or("render.noise", dr.noise_sigma)?,
            occlusion: cfg.f64_or("render.occlusion", dr.occlusion)?,
            lid: cfg.f64_or("render.lid", dr.lid)?,
            seed,
        };
        if !(render.noise_sigma >= 0.0) || !(0.0..=1.0).contains(&render.occlusion) {
            return config("render.noise must be nonnegative and render.occlusion within [0, 1]");
        }

        let ds = SequenceSpec::default();
        let start = Vec3::new(
            cfg.f64_or("sim.x", ds.start.x)?,
            cfg.f64_or("sim.y", ds.start.y)?,
            cfg.f64_or("sim.depth", ds.start.z)?,
        );
        let end = Vec3::new(
            cfg.f64_or("sim.x_end", start.x)?,
            cfg.f64_or("sim.y_end", start.y)?,
            cfg.f64_or("sim.depth_end", start.z)?,
        );
        let phi0 = cfg.f64_or("sim.phi_deg", ds.phi_deg.0)?;
        let tau0 = cfg.f64_or("sim.tau_deg", ds.tau_deg.0)?;
        let blank = match cfg.get_f64_list("sim.blank")? {
            None => Vec::new(),
            Some(v) => v
                .iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        config(format!("sim.blank: '{x}' is not a frame index"))
                    }
                })
                .collect::<Result<_>>()?,
        };
        let sequence = SequenceSpec {
            frames: cfg.usize_or("sim.frames", ds.frames)?,
            start,
            end,
            phi_deg: (phi0, cfg.f64_or("sim.phi_end_deg", phi0)?),
            tau_deg: (tau0, cfg.f64_or("sim.tau_end_deg", tau0)?),
            blank,
        };
        if !(start.z > 0.0 && end.z > 0.0) {
            return config("sim.depth must be positive");
        }
        for t in [sequence.tau_deg.0, sequence.tau_deg.1] {
            if !(0.0..90.0).contains(&t) {
                return config("sim.tau_deg must be in [0, 90)");
            }
        }

        let kappa = match cfg.get_str("kappa.profile") {
            Some(path) => {
                if cfg.contains("kappa.h_deg") || cfg.contains("kappa.v_deg") {
                    return config("kappa.profile cannot be combined with kappa.h_deg / kappa.v_deg");
                }
                Kappa::load(path)?
            }
            None => Kappa::from_config(cfg)?,
        };

        let crop = match cfg.get_str("crop.template") {
            None => None,
            Some(p) => Some((
                PathBuf::from(p),
                CropConfig {
                    threshold: cfg.f64_or("crop.threshold", CropConfig::default().threshold)?,
                    margin: u32_or(cfg, "crop.margin", 40)?,
                },
            )),
        };

        let dsens = SensitivitySpec::default();
        let sensitivity = SensitivitySpec {
            tau_deg: cfg.f64_or("sensitivity.tau_deg", dsens.tau_deg)?,
            phi_deg: cfg.f64_or("sensitivity.phi_deg", dsens.phi_deg)?,
            depth: cfg.f64_or("sensitivity.depth", dsens.depth)?,
            px: list_or(cfg, "sensitivity.px", dsens.px)?,
            tilt_deg: list_or(cfg, "sensitivity.tilt_deg", dsens.tilt_deg)?,
        };

        let db = BoardSpec::default();
        let board = BoardSpec {
            eye_depth: cfg.f64_or("board.eye_depth", db.eye_depth)?,
            az_deg: cfg.f64_or("board.az_deg", db.az_deg)?,
            el_deg: cfg.f64_or("board.el_deg", db.el_deg)?,
            spacing_deg: cfg.f64_or("board.spacing_deg", db.spacing_deg)?,
        };

        let dc = ConvergenceSpec::default();
        let convergence = ConvergenceSpec {
            max_points: cfg.usize_or("conv.max_points", dc.max_points)?,
            noise_px: cfg.f64_or("conv.noise_px", dc.noise_px)?,
            trials: cfg.usize_or("conv.trials", dc.trials)?,
            depth: cfg.f64_or("conv.depth", dc.depth)?,
        };

        let da = AccuracySpec::default();
        let accuracy = AccuracySpec {
            subjects: cfg.usize_or("accuracy.subjects", da.subjects)?,
            depths: list_or(cfg, "accuracy.depths", da.depths)?,
            kappa_max_deg: cfg.f64_or("accuracy.kappa_max_deg", da.kappa_max_deg)?,
        };
        if !(0.0..=crate::gaze::KAPPA_LIMIT_DEG).contains(&accuracy.kappa_max_deg) {
            return config("accuracy.kappa_max_deg must be within [0, 15]");
        }

        let drig = RigSpec::default();
        let rig = RigSpec {
            interpersonal_distance: cfg.f64_or("rig.interpersonal", drig.interpersonal_distance)?,
            camera_subject_distance: cfg.f64_or("rig.distance", drig.camera_subject_distance)?,
            focal_length: cfg.f64_or("rig.focal", drig.focal_length)?,
            pixel_pitch: cfg.f64_or("rig.pitch", drig.pixel_pitch)?,
            sensor_width: u32_or(cfg, "rig.sensor_w", drig.sensor_width)?,
            sensor_height: u32_or(cfg, "rig.sensor_h", drig.sensor_height)?,
            coverage_width: cfg.f64_or("rig.coverage_w", drig.coverage_width)?,
            coverage_height: cfg.f64_or("rig.coverage_h", drig.coverage_height)?,
            overlap_margin: cfg.f64_or("rig.overlap", drig.overlap_margin)?,
            required_face_px: cfg.f64_or("rig.face_px", drig.required_face_px)?,
        };
        rig.validate()?;
        let dd = DesignSweep::default();
        let design = DesignSweep {
            face_fraction: cfg.f64_or("rig.face_fraction", dd.face_fraction)?,
            min_distance: cfg.f64_or("design.min_distance", dd.min_distance)?,
            max_distance: cfg.f64_or("design.max_distance", dd.max_distance)?,
            step: cfg.f64_or("design.step", dd.step)?,
        };
        if !(design.step > 0.0) || !(design.min_distance > 0.0) || design.max_distance < design.min_distance {
            return config("design sweep needs 0 < min_distance <= max_distance and step > 0");
        }

        let daf = AutofocusSpec::default();
        let autofocus = AutofocusSpec {
            focal: cfg.f64_or("autofocus.focal", daf.focal)?,
            depths: list_or(cfg, "autofocus.depths", daf.depths)?,
            motors: cfg.get_f64_list("autofocus.motors")?,
            slope: cfg.f64_or("autofocus.slope", daf.slope)?,
            intercept: cfg.f64_or("autofocus.intercept", daf.intercept)?,
            noise: cfg.f64_or("autofocus.noise", daf.noise)?,
            query: list_or(cfg, "autofocus.query", daf.query)?,
        };
        if let Some(m) = &autofocus.motors {
            if m.len() != autofocus.depths.len() {
                return config("autofocus.motors must have one value per autofocus.depths entry");
            }
        }

        Ok(RunConfig {
            mode,
            seed,
            input: cfg.get_str("run.input").map(PathBuf::from),
            output_dir: output_dir.into(),
            overlays: cfg.bool_or("run.overlays", true)?,
            camera,
            eye,
            pipeline,
            depth_hint: cfg.bool_or("pose.depth_hint", true)?,
            render,
            sequence,
            kappa,
            crop,
            sensitivity,
            board,
            convergence,
            accuracy,
            rig,
            design,
            autofocus,
            source: cfg.clone(),
        })
    }
}
