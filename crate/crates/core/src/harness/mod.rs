//! Experiment driver behind the `gaze` binary.
//!
//! A run reads a [`RunConfig`], writes its CSV tables (and optionally frame
//! overlays) into the output directory, and finishes with `config.txt` and
//! `manifest.txt`. Identical configuration and seed reproduce byte-identical
//! CSV files.

mod experiments;
mod overlay;
mod sequence;
pub mod settings;

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::crop::crop_eye_ncc;
use crate::csv::{format_g, opt_g, CsvTable};
use crate::error::{GazeError, Result};
use crate::gaze::{pog_pipeline, GazeEstimate};
use crate::image::GrayImage;
use crate::pnm;
use crate::rng;

pub use experiments::{
    accuracy_table, board_targets, design_table, kappa_convergence_table, motor_calibration, sensitivity_table,
    AccuracyRow, SensitivityRow,
};
pub use overlay::draw_overlay;
pub use sequence::{synthetic_frame, SyntheticFrame};
pub use settings::{Mode, RunConfig, KNOWN_KEYS};

/// Column sets of every CSV the harness writes, by file name.
pub const RECORDS_HEADER: &[&str] = &[
    "frame",
    "source",
    "status",
    "center_x",
    "center_y",
    "r_max",
    "r_min",
    "ellipse_phi_deg",
    "phi_deg",
    "tau_deg",
    "depth_mm",
    "grp_x",
    "grp_y",
    "confidence",
    "flags",
];
pub const TRUTH_HEADER: &[&str] = &[
    "frame",
    "source",
    "center_x",
    "center_y",
    "r_max",
    "r_min",
    "ellipse_phi_deg",
    "phi_deg",
    "tau_deg",
    "depth_mm",
    "grp_x",
    "grp_y",
];
pub const SENSITIVITY_HEADER: &[&str] = &["parameter", "perturbation", "gaze_error_deg"];
pub const KAPPA_CONV_HEADER: &[&str] = &["k", "mean_error_deg"];
pub const ACCURACY_HEADER: &[&str] = &[
    "subject",
    "depth_mm",
    "kappa_h_deg",
    "kappa_v_deg",
    "error_without_deg",
    "error_with_deg",
    "kappa_est_h_deg",
    "kappa_est_v_deg",
    "markers",
];
pub const DESIGN_HEADER: &[&str] = &[
    "distance_mm",
    "required_px_per_cm",
    "achieved_px_per_cm",
    "meets",
    "columns",
    "rows",
    "cameras",
    "back_focal_mm",
];
pub const AUTOFOCUS_CALIB_HEADER: &[&str] = &["depth_mm", "s_mm", "motor", "fitted"];
pub const AUTOFOCUS_COMMANDS_HEADER: &[&str] = &["depth_mm", "back_focal_mm", "motor_command"];

/// Outcome of one processed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    /// A pose was estimated.
    Ok,
    /// The frame was read but no pose came out of it.
    Failed,
    /// The frame could not be read or cropped.
    Error,
}

impl FrameStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameStatus::Ok => "ok",
            FrameStatus::Failed => "failed",
            FrameStatus::Error => "error",
        }
    }
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub source: String,
    pub status: FrameStatus,
    pub estimate: GazeEstimate,
    /// Extra flag names beyond the estimate's own flags.
    pub extra_flags: Vec<&'static str>,
}

impl FrameRecord {
    pub fn flags(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let own = self.estimate.flags.label();
        if !own.is_empty() {
            parts.push(own);
        }
        parts.extend(self.extra_flags.iter().map(|s| s.to_string()));
        parts.join("|")
    }

    fn row(&self) -> Vec<String> {
        let e = &self.estimate;
        let el = e.ellipse;
        let pose = e.pose;
        vec![
            self.frame_index.to_string(),
            self.source.clone(),
            self.status.as_str().to_string(),
            opt_g(el.map(|e| e.center.x)),
            opt_g(el.map(|e| e.center.y)),
            opt_g(el.map(|e| e.r_max)),
            opt_g(el.map(|e| e.r_min)),
            opt_g(el.map(|e| e.phi.to_degrees())),
            opt_g(pose.map(|p| p.phi.to_degrees())),
            opt_g(pose.map(|p| p.tau.to_degrees())),
            opt_g(pose.map(|p| p.depth())),
            opt_g(e.grp.map(|g| g.x)),
            opt_g(e.grp.map(|g| g.y)),
            format_g(e.confidence),
            self.flags(),
        ]
    }
}

/// Files produced by a run, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub records: usize,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn table(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        table.write(self.dir.join(name))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    fn created(&mut self, rel: PathBuf) {
        self.files.push(rel);
    }
}

/// Executes the configured experiment.
pub fn run(rc: &RunConfig) -> Result<RunSummary> {
    fs::create_dir_all(&rc.output_dir)?;
    let mut out = Outputs {
        dir: &rc.output_dir,
        files: Vec::new(),
    };
    let records;
    match rc.mode {
        Mode::Detect | Mode::Track => {
            let recs = run_frames(rc, &mut out)?;
            records = recs.len();
            let mut table = CsvTable::new(RECORDS_HEADER);
            for r in &recs {
                table.push(r.row())?;
            }
            out.table("records.csv", &table)?;
        }
        Mode::Simulate => {
            let (truth, n) = simulate(rc, &mut out)?;
            records = n;
            out.table("truth.csv", &truth)?;
        }
        Mode::Sensitivity => {
            let rows = sensitivity_table(rc)?;
            let mut table = CsvTable::new(SENSITIVITY_HEADER);
            for r in &rows {
                table.push(vec![
                    r.parameter.to_string(),
                    format_g(r.perturbation),
                    format_g(r.gaze_error_deg),
                ])?;
            }
            records = rows.len();
            out.table("sensitivity.csv", &table)?;
        }
        Mode::KappaConv => {
            let curve = kappa_convergence_table(rc)?;
            let mut table = CsvTable::new(KAPPA_CONV_HEADER);
            for (k, e) in &curve {
                table.push(vec![k.to_string(), format_g(*e)])?;
            }
            records = curve.len();
            out.table("kappa_conv.csv", &table)?;
        }
        Mode::Accuracy => {
            let rows = accuracy_table(rc)?;
            let mut table = CsvTable::new(ACCURACY_HEADER);
            for r in &rows {
                table.push(vec![
                    r.subject.to_string(),
                    format_g(r.depth_mm),
                    format_g(r.kappa.degrees().0),
                    format_g(r.kappa.degrees().1),
                    format_g(r.error_without_deg),
                    format_g(r.error_with_deg),
                    format_g(r.kappa_estimate.degrees().0),
                    format_g(r.kappa_estimate.degrees().1),
                    r.markers.to_string(),
                ])?;
            }
            records = rows.len();
            out.table("accuracy.csv", &table)?;
        }
        Mode::Design => {
            let (table, report) = design_table(rc)?;
            records = table.len();
            out.table("design.csv", &table)?;
            out.text("design_report.txt", &report)?;
        }
        Mode::AutofocusCalib => {
            let (calib, commands, report) = motor_calibration(rc)?;
            records = calib.len();
            out.table("autofocus_calibration.csv", &calib)?;
            out.table("autofocus_commands.csv", &commands)?;
            out.text("autofocus_map.txt", &report)?;
        }
    }
    let canonical = rc.source.canonical();
    out.text("config.txt", &canonical)?;
    let manifest = manifest(rc, &canonical, &out.files)?;
    fs::write(rc.output_dir.join("manifest.txt"), manifest)?;
    out.files.push(PathBuf::from("manifest.txt"));
    Ok(RunSummary {
        files: out.files,
        records,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn manifest(rc: &RunConfig, canonical: &str, files: &[PathBuf]) -> Result<String> {
    let mut text = format!(
        "tool gaze {}\nmode {}\nseed {}\nconfig_sha256 {}\n",
        env!("CARGO_PKG_VERSION"),
        rc.mode.name(),
        rc.seed,
        sha256_hex(canonical.as_bytes())
    );
    let mut sorted: Vec<&PathBuf> = files.iter().collect();
    sorted.sort();
    for f in sorted {
        let bytes = fs::read(rc.output_dir.join(f))?;
        text.push_str(&format!("file {} {}\n", f.display(), sha256_hex(&bytes)));
    }
    Ok(text)
}

/// Input frame before processing.
enum FrameInput {
    Image {
        image: GrayImage,
        depth_hint: Option<f64>,
    },
    Unreadable(GazeError),
}

fn input_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn run_frames(rc: &RunConfig, out: &mut Outputs) -> Result<Vec<FrameRecord>> {
    let template = match &rc.crop {
        Some((path, _)) => Some(pnm::read_gray(path)?),
        None => None,
    };
    let inputs = match &rc.input {
        Some(dir) => input_frames(dir)?,
        None => Vec::new(),
    };
    let count = if rc.input.is_some() { inputs.len() } else { rc.sequence.frames };
    if rc.overlays {
        fs::create_dir_all(rc.output_dir.join("overlays"))?;
    }

    let mut state = None;
    let mut records = Vec::with_capacity(count);
    #[allow(clippy::needless_range_loop)]
    for i in 0..count {
        let (source, input) = if rc.input.is_some() {
            let path = &inputs[i];
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let input = match pnm::read(path) {
                Ok(p) => FrameInput::Image {
                    image: p.into_gray(),
                    depth_hint: None,
                },
                Err(e) => FrameInput::Unreadable(e),
            };
            (name, input)
        } else {
            let frame = synthetic_frame(rc, i)?;
            let hint = rc.depth_hint.then_some(frame.pose.depth());
            (
                format!("synthetic:{i}"),
                FrameInput::Image {
                    image: frame.image,
                    depth_hint: hint,
                },
            )
        };
        let seed = rng::derive(rc.seed, i as u64);
        let record = match input {
            FrameInput::Unreadable(e) => {
                log::warn!("frame {i} ({source}) unreadable: {e}");
                state = None;
                FrameRecord {
                    frame_index: i,
                    source,
                    status: FrameStatus::Error,
                    estimate: GazeEstimate::default(),
                    extra_flags: vec!["unreadable"],
                }
            }
            FrameInput::Image { image, depth_hint } => {
                let full_cam = rc.camera.intrinsics(image.width(), image.height())?;
                let cropped = match (&template, &rc.crop) {
                    (Some(t), Some((_, ccfg))) => crop_eye_ncc(t, &image, ccfg).and_then(|m| {
                        let r = m.rect;
                        let pad = image.mean().round() as u8;
                        Ok((image.crop(r.x, r.y, r.width, r.height, pad)?, full_cam.cropped((r.x, r.y), r.width, r.height)))
                    }),
                    _ => Ok((image, full_cam)),
                };
                match cropped {
                    Err(e) => {
                        log::warn!("frame {i} ({source}): {e}");
                        state = None;
                        FrameRecord {
                            frame_index: i,
                            source,
                            status: FrameStatus::Error,
                            estimate: GazeEstimate::default(),
                            extra_flags: vec!["crop_not_found"],
                        }
                    }
                    Ok((image, cam)) => {
                        let prior = if rc.pipeline.track { state.take() } else { None };
                        let (next, est) =
                            pog_pipeline(&image, prior, depth_hint, &cam, &rc.eye, &rc.kappa, &rc.pipeline, seed);
                        state = next;
                        if rc.overlays {
                            let rel = PathBuf::from("overlays").join(format!("frame_{i:05}.ppm"));
                            pnm::write_rgb(rc.output_dir.join(&rel), &draw_overlay(&image, &est))?;
                            out.created(rel);
                        }
                        FrameRecord {
                            frame_index: i,
                            source,
                            status: if est.pose.is_some() { FrameStatus::Ok } else { FrameStatus::Failed },
                            estimate: est,
                            extra_flags: Vec::new(),
                        }
                    }
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}

fn simulate(rc: &RunConfig, out: &mut Outputs) -> Result<(CsvTable, usize)> {
    fs::create_dir_all(rc.output_dir.join("frames"))?;
    let mut truth = CsvTable::new(TRUTH_HEADER);
    for i in 0..rc.sequence.frames {
        let frame = synthetic_frame(rc, i)?;
        let rel = PathBuf::from("frames").join(format!("frame_{i:05}.pgm"));
        pnm::write_gray(rc.output_dir.join(&rel), &frame.image)?;
        out.created(rel.clone());
        let e = frame.ellipse;
        let p = frame.pose;
        truth.push(vec![
            i.to_string(),
            rel.display().to_string(),
            format_g(e.center.x),
            format_g(e.center.y),
            format_g(e.r_max),
            format_g(e.r_min),
            format_g(e.phi.to_degrees()),
            format_g(p.phi.to_degrees()),
            format_g(p.tau.to_degrees()),
            format_g(p.depth()),
            opt_g(frame.grp.map(|g| g.x)),
            opt_g(frame.grp.map(|g| g.y)),
        ])?;
    }
    Ok((truth, rc.sequence.frames))
}
