use proptest::prelude::*;

use gaze_core::csv::format_g;
use gaze_core::gaze::{angle_between, apply_kappa, calibrate_kappa, compute_grp, fixating_pose, FixationSample, Kappa};
use gaze_core::geometry::{
    gaze_direction, grp_offset_mm, project_limbus, AnatomicalEye, CameraIntrinsics, Ellipse, EyePose, ImagePoint, Vec3,
};
use gaze_core::image::{GrayImage, RgbImage};
use gaze_core::optics::{back_focal_distance, calibrate_motor_map, corneal_resolution_requirement, RigSpec};
use gaze_core::pnm;
use gaze_core::pose::{ellipse_to_pose, Branch};
use gaze_core::tracker::{init_tracker, resample, MotionNoise};

fn cam() -> CameraIntrinsics {
    CameraIntrinsics::new(14000.0, 4000, 4000).unwrap()
}

fn matching_branch(truth: &EyePose, e: &Ellipse) -> EyePose {
    let pair = ellipse_to_pose(e, &cam(), &AnatomicalEye::default()).unwrap();
    let plus = pair.get(Branch::Plus);
    let minus = pair.get(Branch::Minus);
    if angle_between(&plus.gaze(), &truth.gaze()) <= angle_between(&minus.gaze(), &truth.gaze()) {
        *plus
    } else {
        *minus
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_inverts(
        tau in 1.0f64..40.0,
        phi in 0.0f64..360.0,
        depth in 300.0f64..900.0,
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
    ) {
        let eye = AnatomicalEye::default();
        let truth = EyePose::new(Vec3::new(x, y, depth), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let e = project_limbus(&truth, &cam(), &eye).unwrap();
        let p = matching_branch(&truth, &e);
        prop_assert!((p.tau - truth.tau).abs() < 1e-9);
        prop_assert!(angle_between(&p.gaze(), &truth.gaze()) < 1e-9);
        prop_assert!((p.limbus_center - truth.limbus_center).norm() < 1e-9 * depth);
        prop_assert!((p.corneal_center - truth.corneal_center).norm() < 1e-9 * depth);
    }

    #[test]
    fn branches_differ_by_twice_the_tilt(tau in 1.0f64..40.0, phi in 0.0f64..360.0, depth in 300.0f64..900.0) {
        let eye = AnatomicalEye::default();
        let truth = EyePose::new(Vec3::new(0.0, 0.0, depth), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let e = project_limbus(&truth, &cam(), &eye).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        let between = angle_between(&pair.pose_plus.gaze(), &pair.pose_minus.gaze());
        prop_assert!((between - 2.0 * truth.tau).abs() < 1e-9);
    }

    #[test]
    fn doubling_depth_halves_radius(tau in 0.0f64..40.0, phi in 0.0f64..360.0, depth in 300.0f64..900.0) {
        let eye = AnatomicalEye::default();
        let near = EyePose::new(Vec3::new(0.0, 0.0, depth), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let far = EyePose::new(Vec3::new(0.0, 0.0, 2.0 * depth), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let a = project_limbus(&near, &cam(), &eye).unwrap();
        let b = project_limbus(&far, &cam(), &eye).unwrap();
        prop_assert!((a.r_max - 2.0 * b.r_max).abs() <= 1e-12 * a.r_max);
    }

    #[test]
    fn scaled_camera_keeps_pose(tau in 1.0f64..40.0, phi in 0.0f64..180.0, scale in 0.5f64..3.0) {
        let eye = AnatomicalEye::default();
        let base = CameraIntrinsics::with_principal_point(14000.0, ImagePoint::new(0.0, 0.0), 4000, 4000).unwrap();
        let scaled = CameraIntrinsics::with_principal_point(14000.0 * scale, ImagePoint::new(0.0, 0.0), 4000, 4000).unwrap();
        let e = Ellipse::new(150.0, 150.0 * tau.to_radians().cos(), ImagePoint::new(30.0, -20.0), phi.to_radians()).unwrap();
        let es = Ellipse::new(e.r_max * scale, e.r_min * scale, ImagePoint::new(30.0 * scale, -20.0 * scale), e.phi).unwrap();
        let a = ellipse_to_pose(&e, &base, &eye).unwrap().pose_plus;
        let b = ellipse_to_pose(&es, &scaled, &eye).unwrap().pose_plus;
        prop_assert!((a.phi - b.phi).abs() < 1e-9 && (a.tau - b.tau).abs() < 1e-9);
        prop_assert!((a.limbus_center - b.limbus_center).norm() < 1e-9 * a.depth());
    }

    #[test]
    fn gaze_direction_is_unit(phi in -10.0f64..10.0, tau in 0.0f64..1.5) {
        let g = gaze_direction(phi, tau).unwrap();
        prop_assert!((g.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grp_offset_flips_with_phi(tau in 0.0f64..40.0, phi in 0.0f64..180.0, depth in 300.0f64..900.0) {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let a = EyePose::new(Vec3::new(0.0, 0.0, depth), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let b = EyePose::new(Vec3::new(0.0, 0.0, depth), (phi + 180.0).to_radians(), tau.to_radians(), &eye).unwrap();
        let ca = cam.project(&a.limbus_center).unwrap();
        let ga = compute_grp(&a, &cam, &eye, None).unwrap();
        let gb = compute_grp(&b, &cam, &eye, None).unwrap();
        let (dax, day) = (ga.x - ca.x, ga.y - ca.y);
        let (dbx, dby) = (gb.x - ca.x, gb.y - ca.y);
        prop_assert!((dax + dbx).abs() < 1e-9 && (day + dby).abs() < 1e-9);
        prop_assert_eq!(grp_offset_mm(0.0, &eye).unwrap(), 0.0);
    }

    #[test]
    fn grp_is_continuous_in_tilt(tau in 0.0f64..39.9, phi in 0.0f64..360.0) {
        let eye = AnatomicalEye::default();
        let cam = cam();
        let at = |t: f64| {
            let p = EyePose::new(Vec3::new(0.0, 0.0, 500.0), phi.to_radians(), t.to_radians(), &eye).unwrap();
            compute_grp(&p, &cam, &eye, None).unwrap()
        };
        prop_assert!(at(tau).distance(&at(tau + 0.1)) < 0.5);
    }

    #[test]
    fn kappa_keeps_unit_gaze(h in -15.0f64..15.0, v in -15.0f64..15.0, tau in 0.0f64..40.0, phi in 0.0f64..360.0) {
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), phi.to_radians(), tau.to_radians(), &eye).unwrap();
        let k = Kappa::from_degrees(h, v).unwrap();
        let corrected = apply_kappa(&pose, &k);
        prop_assert!((corrected.gaze().norm() - 1.0).abs() < 1e-12);
        let back = k.negated().rotation() * (k.rotation() * pose.gaze());
        prop_assert!((back - pose.gaze()).norm() < 1e-12);
    }

    #[test]
    fn calibration_never_worse_than_identity(
        h in -5.0f64..5.0,
        v in -5.0f64..5.0,
        jitter in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6),
    ) {
        let eye = AnatomicalEye::default();
        let c = Vec3::new(0.0, 0.0, 505.0);
        let k = Kappa::from_degrees(h, v).unwrap();
        let samples: Vec<FixationSample> = jitter
            .iter()
            .enumerate()
            .map(|(i, (dx, dy))| {
                let target = c + Vec3::new(200.0 + 60.0 * i as f64, -100.0 + 40.0 * i as f64, -800.0);
                let mut pose = fixating_pose(c, target, &k, &eye).unwrap();
                pose.phi += dx.to_radians();
                pose.tau += dy.to_radians();
                let pose = EyePose::from_corneal_center(c, pose.phi, pose.tau, &eye).unwrap();
                FixationSample::new(pose, target).unwrap()
            })
            .collect();
        let (_, residual) = calibrate_kappa(&samples).unwrap();
        let identity = samples.iter().map(|s| s.error(&Kappa::default())).sum::<f64>() / samples.len() as f64;
        prop_assert!(residual <= identity.to_degrees() + 1e-12);
    }

    #[test]
    fn back_focal_distance_inverts(f in 5.0f64..100.0, s in 0.01f64..20.0) {
        let depth = f * f / s;
        prop_assert!((back_focal_distance(f, depth).unwrap() - s).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn motor_map_refit_is_fixed_point(
        depths in proptest::collection::vec(300.0f64..2000.0, 2..10),
        motors in proptest::collection::vec(-500.0f64..1500.0, 10),
    ) {
        let mut ds = depths.clone();
        ds.sort_by(f64::total_cmp);
        ds.dedup_by(|a, b| (*a - *b).abs() < 1.0);
        prop_assume!(ds.len() >= 2);
        let pairs: Vec<(f64, f64)> = ds.iter().zip(&motors).map(|(&d, &m)| (d, m)).collect();
        let map = calibrate_motor_map(&pairs, 35.0).unwrap();
        let predicted: Vec<(f64, f64)> = ds
            .iter()
            .map(|&d| (d, map.apply(back_focal_distance(35.0, d).unwrap())))
            .collect();
        let again = calibrate_motor_map(&predicted, 35.0).unwrap();
        prop_assert!((again.slope - map.slope).abs() <= 1e-9 * map.slope.abs().max(1.0));
        prop_assert!((again.intercept - map.intercept).abs() <= 1e-9 * map.intercept.abs().max(1.0));
    }

    #[test]
    fn resolution_requirement_scales_inversely(fraction in 0.05f64..1.0, r_limbus in 4.0f64..7.0) {
        let spec = RigSpec::default();
        let eye = AnatomicalEye::new(r_limbus + 2.5, 5.6, r_limbus).unwrap();
        let eye2 = AnatomicalEye { r_limbus: 2.0 * eye.r_limbus, r_corneal: 2.0 * eye.r_corneal, ..eye };
        let a = corneal_resolution_requirement(&spec, &eye, fraction).unwrap();
        let b = corneal_resolution_requirement(&spec, &eye, 2.0 * fraction.min(0.5)).unwrap();
        let c = corneal_resolution_requirement(&spec, &eye2, fraction).unwrap();
        prop_assert!((a * fraction - b * 2.0 * fraction.min(0.5)).abs() < 1e-9 * a * fraction);
        prop_assert!((a - 2.0 * c).abs() < 1e-9 * a);
    }

    #[test]
    fn resampled_particles_come_from_the_set(weights in proptest::collection::vec(0.0f64..1.0, 2..40), seed in any::<u64>()) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let eye = AnatomicalEye::default();
        let pose = EyePose::new(Vec3::new(0.0, 0.0, 500.0), 0.4, 0.3, &eye).unwrap();
        let mut st = init_tracker(&pose, weights.len(), &MotionNoise::default(), seed).unwrap();
        for (p, w) in st.particles.iter_mut().zip(&weights) {
            p.weight = w / total;
        }
        st.ess = (1.0 / st.particles.iter().map(|p| p.weight * p.weight).sum::<f64>()).clamp(1.0, weights.len() as f64);
        let out = resample(&st, 1.01, seed);
        prop_assert_eq!(out.particles.len(), st.particles.len());
        let sum: f64 = out.particles.iter().map(|p| p.weight).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        for p in &out.particles {
            let src = st.particles.iter().find(|q| q.corneal_center == p.corneal_center && q.phi == p.phi && q.tau == p.tau);
            prop_assert!(src.is_some_and(|q| q.weight > 0.0));
        }
    }

    #[test]
    fn gray_images_round_trip(w in 1u32..40, h in 1u32..40, data in proptest::collection::vec(any::<u8>(), 1600)) {
        let img = GrayImage::from_raw(w, h, data[..(w * h) as usize].to_vec()).unwrap();
        let bytes = pnm::encode_gray(&img);
        let back = pnm::decode(&bytes).unwrap().into_gray();
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(pnm::encode_gray(&back), bytes);
    }

    #[test]
    fn rgb_images_round_trip(w in 1u32..30, h in 1u32..30, data in proptest::collection::vec(any::<u8>(), 2700)) {
        let n = (w * h * 3) as usize;
        let img = RgbImage::from_raw(w, h, data[..n].to_vec()).unwrap();
        let bytes = pnm::encode_rgb(&img);
        prop_assert_eq!(pnm::encode_rgb(&match pnm::decode(&bytes).unwrap() {
            pnm::Pnm::Rgb(i) => i,
            pnm::Pnm::Gray(_) => panic!("decoded as gray"),
        }), bytes);
    }

    #[test]
    fn format_g_keeps_six_digits(x in -1e12f64..1e12) {
        let s = format_g(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs() + 1e-300);
        let digits = s.trim_start_matches('-').split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 6);
    }
}
