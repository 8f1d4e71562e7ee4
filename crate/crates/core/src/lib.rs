//! Gaze measurement from corneal images.
//!
//! The crate covers the full chain from a cropped eye image to a point of
//! gaze: limbus ellipse detection ([`detect`]), inversion of the ellipse to
//! a 3D eye pose ([`pose`]), particle-filter tracking ([`tracker`]), the gaze
//! reflection point and kappa calibration ([`gaze`]), plus the rig design
//! arithmetic ([`optics`]) and the experiment harness ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod crop;
pub mod csv;
pub mod detect;
pub mod error;
pub mod gaze;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod optics;
pub mod pnm;
pub mod pose;
pub mod raytrace;
pub mod render;
pub mod rng;
pub mod tracker;

pub use error::{GazeError, Result};
pub use geometry::{
    gaze_direction, grp_offset_mm, project_limbus, AnatomicalEye, CameraIntrinsics, Ellipse, EyePose,
    ImagePoint, Vec3,
};
