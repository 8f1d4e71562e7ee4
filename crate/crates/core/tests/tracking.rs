use std::fs;
use std::path::Path;

use proptest::prelude::*;

use gaze_core::config::Config;
use gaze_core::detect::HoughConfig;
use gaze_core::geometry::{AnatomicalEye, CameraIntrinsics, EyePose, Vec3};
use gaze_core::harness::{self, Mode, RunConfig};
use gaze_core::render::{render_eye_image, RenderStyle};
use gaze_core::tracker::{init_tracker, predict, weight_particles, MotionNoise};

fn run(mode: Mode, sets: &[&str], out: &Path) -> String {
    let mut cfg = Config::new();
    for kv in sets {
        cfg.set(kv).unwrap();
    }
    harness::run(&RunConfig::from_config(mode, &cfg, out).unwrap()).unwrap();
    let file = if mode == Mode::Simulate { "truth.csv" } else { "records.csv" };
    fs::read_to_string(out.join(file)).unwrap()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn static_noiseless_sequence_holds_tilt() {
    let sets = ["run.seed=21", "sim.frames=100", "sim.tau_deg=18", "sim.tau_end_deg=18", "run.overlays=false"];
    let truth = run(Mode::Simulate, &sets, tempfile::tempdir().unwrap().path());
    let tracked = run(Mode::Track, &sets, tempfile::tempdir().unwrap().path());
    let err: Vec<f64> = column(&truth, "tau_deg")
        .iter()
        .zip(column(&tracked, "tau_deg"))
        .map(|(t, e)| e - t)
        .collect();
    let mean = err.iter().map(|e| e.abs()).sum::<f64>() / err.len() as f64;
    let rms = (err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt();
    assert_eq!(err.len(), 100);
    assert!(mean < 0.5 && rms < 0.5, "mean {mean} rms {rms}");
}

#[test]
fn tracker_stays_within_two_pixels_of_detection() {
    let sets = [
        "run.seed=22",
        "sim.frames=100",
        "sim.tau_deg=8",
        "sim.tau_end_deg=30",
        "sim.phi_deg=20",
        "sim.phi_end_deg=70",
        "run.overlays=false",
    ];
    let detected = run(Mode::Detect, &sets, tempfile::tempdir().unwrap().path());
    let tracked = run(Mode::Track, &sets, tempfile::tempdir().unwrap().path());
    let (dx, dy) = (column(&detected, "center_x"), column(&detected, "center_y"));
    let (tx, ty) = (column(&tracked, "center_x"), column(&tracked, "center_y"));
    let worst = (0..100).map(|i| (dx[i] - tx[i]).hypot(dy[i] - ty[i])).fold(0.0, f64::max);
    assert!(worst <= 2.0, "{worst}");
}

#[test]
fn tracker_follows_gaze_through_frontal() {
    let sets = [
        "run.seed=23",
        "sim.frames=40",
        "sim.tau_deg=12",
        "sim.tau_end_deg=0",
        "sim.phi_deg=40",
        "sim.phi_end_deg=40",
        "run.overlays=false",
    ];
    let truth = run(Mode::Simulate, &sets, tempfile::tempdir().unwrap().path());
    let tracked = run(Mode::Track, &sets, tempfile::tempdir().unwrap().path());
    let worst = column(&truth, "tau_deg")
        .iter()
        .zip(column(&tracked, "tau_deg"))
        .map(|(t, e)| (e - t).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1.5, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_normalized_and_ess_bounded(
        seed in any::<u64>(),
        count in 2usize..120,
        temperature in 0.01f64..50.0,
        dx in -1.0f64..1.0,
    ) {
        let eye = AnatomicalEye::default();
        let cam = CameraIntrinsics::new(14000.0, 401, 401).unwrap();
        let truth = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.9, 0.3, &eye).unwrap();
        let img = render_eye_image(&truth, &cam, &eye, &RenderStyle::default()).unwrap();
        let start = EyePose::new(Vec3::new(dx, 0.0, 500.0), 0.9, 0.3, &eye).unwrap();
        let st = init_tracker(&start, count, &MotionNoise::default(), seed).unwrap();
        let st = predict(&st, &MotionNoise::default(), seed ^ 1);
        let w = weight_particles(&st, &img, &cam, &eye, &HoughConfig::default(), temperature);
        let sum: f64 = w.particles.iter().map(|p| p.weight).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(w.ess >= 1.0 - 1e-9 && w.ess <= count as f64 + 1e-9);
    }
}
