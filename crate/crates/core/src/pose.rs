//! Inversion of the limbus ellipse to a 3D eye pose.
//!
//! A circle seen under weak perspective fixes the tilt magnitude
//! `tau = acos(r_min / r_max)` but not its sign. The two solutions are kept
//! as a pair; the negative-tilt branch is stored as `(phi + pi, tau)`.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{config, domain, GazeError, Result};
use crate::geometry::{AnatomicalEye, CameraIntrinsics, Ellipse, EyePose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Why a branch was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Continuity,
    HemispherePrior,
    Forced,
}

/// The two poses that project to the same ellipse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseHypothesisPair {
    pub pose_plus: EyePose,
    pub pose_minus: EyePose,
    pub selected: Option<(Branch, Selection)>,
}

impl PoseHypothesisPair {
    pub fn get(&self, branch: Branch) -> &EyePose {
        match branch {
            Branch::Plus => &self.pose_plus,
            Branch::Minus => &self.pose_minus,
        }
    }
}

/// Rule used to pick one branch of a [`PoseHypothesisPair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmbiguityPolicy {
    /// Branch whose gaze points most directly at a region of interest
    /// (camera-frame point, mm).
    Hemisphere { roi: Vec3 },
    /// Branch closest in angle to the previous frame's gaze.
    Continuity { roi: Vec3 },
    ForcedPlus,
    ForcedMinus,
}

impl Default for AmbiguityPolicy {
    fn default() -> Self {
        AmbiguityPolicy::Hemisphere { roi: Vec3::zeros() }
    }
}

impl AmbiguityPolicy {
    pub fn with_roi(self, roi: Vec3) -> Self {
        match self {
            AmbiguityPolicy::Hemisphere { .. } => AmbiguityPolicy::Hemisphere { roi },
            AmbiguityPolicy::Continuity { .. } => AmbiguityPolicy::Continuity { roi },
            other => other,
        }
    }
}

impl FromStr for AmbiguityPolicy {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self> {
        let roi = Vec3::zeros();
        match s.trim() {
            "hemisphere" => Ok(AmbiguityPolicy::Hemisphere { roi }),
            "continuity" => Ok(AmbiguityPolicy::Continuity { roi }),
            "forced_plus" => Ok(AmbiguityPolicy::ForcedPlus),
            "forced_minus" => Ok(AmbiguityPolicy::ForcedMinus),
            other => config(format!("unknown pose.ambiguity '{other}'")),
        }
    }
}

/// A resolved pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPose {
    pub pose: EyePose,
    pub branch: Branch,
    pub selection: Selection,
    /// Continuity was requested without a previous pose.
    pub fallback: bool,
}

/// Both eye poses consistent with a limbus ellipse.
pub fn ellipse_to_pose(
    e: &Ellipse,
    cam: &CameraIntrinsics,
    eye: &AnatomicalEye,
) -> Result<PoseHypothesisPair> {
    if !(e.r_max > 0.0) {
        return domain("r_max must be positive");
    }
    if !(e.r_min > 0.0) || e.r_min > e.r_max {
        return domain("ellipse radii must satisfy 0 < r_min <= r_max");
    }
    let tau = (e.r_min / e.r_max).clamp(0.0, 1.0).acos();
    let depth = cam.focal_px * eye.r_limbus / e.r_max;
    let limbus = cam.backproject(&e.center, depth);
    Ok(PoseHypothesisPair {
        pose_plus: EyePose::new(limbus, e.phi, tau, eye)?,
        pose_minus: EyePose::new(limbus, e.phi + PI, tau, eye)?,
        selected: None,
    })
}

fn hemisphere_choice(pair: &PoseHypothesisPair, roi: &Vec3) -> Branch {
    let plus = &pair.pose_plus;
    let to_roi = roi - plus.limbus_center;
    if to_roi.norm() < 1e-12 {
        return Branch::Plus;
    }
    let to_roi = to_roi.normalize();
    let sp = plus.gaze().dot(&to_roi);
    let sm = pair.pose_minus.gaze().dot(&to_roi);
    if sm > sp {
        Branch::Minus
    } else {
        Branch::Plus
    }
}

/// Selects one branch according to `policy`.
pub fn resolve_ambiguity(
    pair: &PoseHypothesisPair,
    policy: &AmbiguityPolicy,
    previous: Option<&EyePose>,
) -> ResolvedPose {
    let (branch, selection, fallback) = match (policy, previous) {
        (AmbiguityPolicy::ForcedPlus, _) => (Branch::Plus, Selection::Forced, false),
        (AmbiguityPolicy::ForcedMinus, _) => (Branch::Minus, Selection::Forced, false),
        (AmbiguityPolicy::Hemisphere { roi }, _) => {
            (hemisphere_choice(pair, roi), Selection::HemispherePrior, false)
        }
        (AmbiguityPolicy::Continuity { .. }, Some(prev)) => {
            let g = prev.gaze();
            let ap = pair.pose_plus.gaze().angle(&g);
            let am = pair.pose_minus.gaze().angle(&g);
            let b = if am < ap { Branch::Minus } else { Branch::Plus };
            (b, Selection::Continuity, false)
        }
        (AmbiguityPolicy::Continuity { roi }, None) => {
            (hemisphere_choice(pair, roi), Selection::HemispherePrior, true)
        }
    };
    ResolvedPose {
        pose: *pair.get(branch),
        branch,
        selection,
        fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_limbus, ImagePoint};

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(14000.0, 640, 480).unwrap()
    }

    #[test]
    fn circle_gives_frontal_pose() {
        let eye = AnatomicalEye::default();
        let e = Ellipse::circle(156.8, ImagePoint::new(320.0, 240.0)).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        assert_eq!(pair.pose_plus.tau, 0.0);
        assert!((pair.pose_plus.gaze() - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        assert!((pair.pose_plus.gaze() - pair.pose_minus.gaze()).norm() < 1e-15);
        assert!((pair.pose_plus.depth() - 500.0).abs() < 1e-9);
    }

    #[test]
    fn axis_ratio_gives_tilt() {
        let eye = AnatomicalEye::default();
        let r = 150.0;
        let e = Ellipse::new(r, r * 25f64.to_radians().cos(), ImagePoint::new(300.0, 200.0), 0.3).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        assert!((pair.pose_plus.tau - 25f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn invalid_radii() {
        let eye = AnatomicalEye::default();
        let bad = Ellipse {
            r_max: 10.0,
            r_min: 12.0,
            center: ImagePoint::new(0.0, 0.0),
            phi: 0.0,
        };
        assert!(ellipse_to_pose(&bad, &cam(), &eye).is_err());
        let zero = Ellipse { r_max: 0.0, r_min: 0.0, ..bad };
        assert!(ellipse_to_pose(&zero, &cam(), &eye).is_err());
    }

    #[test]
    fn round_trip_design_point() {
        let eye = AnatomicalEye::default();
        let tau = 20f64.to_radians();
        let phi = 40f64.to_radians();
        let truth = EyePose::new(Vec3::new(2.0, -1.5, 500.0), phi, tau, &eye).unwrap();
        let e = project_limbus(&truth, &cam(), &eye).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        let p = pair.pose_plus;
        assert!((p.phi - phi).abs() < 1e-9 && (p.tau - tau).abs() < 1e-9);
        assert!((p.limbus_center - truth.limbus_center).norm() < 1e-9);
        assert!((p.corneal_center - truth.corneal_center).norm() < 1e-9);
        let angle = pair.pose_plus.gaze().angle(&pair.pose_minus.gaze());
        assert!((angle - 2.0 * tau).abs() < 1e-9);
    }

    #[test]
    fn continuity_prefers_previous() {
        let eye = AnatomicalEye::default();
        let e = Ellipse::new(150.0, 130.0, ImagePoint::new(320.0, 240.0), 1.0).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        let policy = AmbiguityPolicy::Continuity { roi: Vec3::zeros() };
        let r = resolve_ambiguity(&pair, &policy, Some(&pair.pose_plus));
        assert_eq!(r.branch, Branch::Plus);
        let r = resolve_ambiguity(&pair, &policy, Some(&pair.pose_minus));
        assert_eq!(r.branch, Branch::Minus);
        let r = resolve_ambiguity(&pair, &policy, None);
        assert!(r.fallback);
        assert_eq!(r.selection, Selection::HemispherePrior);
    }

    #[test]
    fn hemisphere_follows_roi() {
        let eye = AnatomicalEye::default();
        // Plus branch tilts along (sin phi, -cos phi) = (1, 0) for phi = pi/2.
        let e = Ellipse::new(150.0, 130.0, ImagePoint::new(320.0, 240.0), std::f64::consts::FRAC_PI_2).unwrap();
        let pair = ellipse_to_pose(&e, &cam(), &eye).unwrap();
        let right = AmbiguityPolicy::Hemisphere { roi: Vec3::new(500.0, 0.0, 0.0) };
        let left = AmbiguityPolicy::Hemisphere { roi: Vec3::new(-500.0, 0.0, 0.0) };
        assert_eq!(resolve_ambiguity(&pair, &right, None).branch, Branch::Plus);
        assert_eq!(resolve_ambiguity(&pair, &left, None).branch, Branch::Minus);
        assert_eq!(resolve_ambiguity(&pair, &AmbiguityPolicy::ForcedMinus, None).branch, Branch::Minus);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("forced_plus".parse::<AmbiguityPolicy>().unwrap(), AmbiguityPolicy::ForcedPlus);
        assert!(matches!("continuity".parse::<AmbiguityPolicy>().unwrap(), AmbiguityPolicy::Continuity { .. }));
        assert!("sideways".parse::<AmbiguityPolicy>().is_err());
    }
}
