/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef GAZE_H
#define GAZE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GAZE_FLAG_LOW_CONFIDENCE 1

#define GAZE_FLAG_AMBIGUITY_FALLBACK (1 << 1)

#define GAZE_FLAG_NO_ELLIPSE (1 << 2)

#define GAZE_FLAG_TRACKING_LOST (1 << 3)

#define GAZE_FLAG_GRP_INVALID (1 << 4)

typedef enum GazeStatus {
  GAZE_STATUS_OK = 0,
  GAZE_STATUS_NULL_POINTER = 1,
  GAZE_STATUS_DOMAIN = 2,
  GAZE_STATUS_GEOMETRY = 3,
  GAZE_STATUS_NUMERIC = 4,
  GAZE_STATUS_CONFIG = 5,
  GAZE_STATUS_NO_ELLIPSE = 6,
  GAZE_STATUS_TRACKING_LOST = 7,
  GAZE_STATUS_CROP_NOT_FOUND = 8,
  GAZE_STATUS_PARSE = 9,
  GAZE_STATUS_IO = 10,
  GAZE_STATUS_PANIC = 11,
} GazeStatus;

typedef enum GazeAmbiguity {
  GAZE_AMBIGUITY_HEMISPHERE = 0,
  GAZE_AMBIGUITY_CONTINUITY = 1,
  GAZE_AMBIGUITY_FORCED_PLUS = 2,
  GAZE_AMBIGUITY_FORCED_MINUS = 3,
} GazeAmbiguity;

/**
 * Frame-to-frame tracker.
 */
typedef struct GazeTracker GazeTracker;

/**
 * Eye model constants, mm.
 */
typedef struct GazeEye {
  double r_corneal;
  double d_limbus_corneal;
  double r_limbus;
} GazeEye;

/**
 * Pinhole camera; `cx`, `cy` is the principal point in pixels.
 */
typedef struct GazeCamera {
  double focal_px;
  double cx;
  double cy;
  uint32_t width;
  uint32_t height;
} GazeCamera;

typedef struct GazeVec3 {
  double x;
  double y;
  double z;
} GazeVec3;

/**
 * Eye pose in the camera frame. `corneal_center` is an output only; on
 * input it is recomputed from the limbus centre and the angles.
 */
typedef struct GazePose {
  struct GazeVec3 limbus_center;
  struct GazeVec3 corneal_center;
  double phi;
  double tau;
} GazePose;

typedef struct GazePoint {
  double x;
  double y;
} GazePoint;

typedef struct GazeEllipse {
  double r_max;
  double r_min;
  struct GazePoint center;
  double phi;
} GazeEllipse;

/**
 * Angular offsets between optical and visual axis, radians.
 */
typedef struct GazeKappa {
  double horizontal;
  double vertical;
} GazeKappa;

typedef struct GazeMotorMap {
  double slope;
  double intercept;
  double rms;
} GazeMotorMap;

typedef struct GazeTrackerOptions {
  struct GazeCamera camera;
  struct GazeEye eye;
  struct GazeKappa kappa;
  uint64_t seed;
  uint32_t particles;
  /**
   * Track between frames; otherwise every frame is detected afresh.
   */
  bool track;
  /**
   * Limbus depth used when a frame comes without a hint, mm.
   */
  double default_depth;
  enum GazeAmbiguity ambiguity;
  /**
   * Region of interest for the hemisphere prior, camera frame, mm.
   */
  struct GazeVec3 roi;
} GazeTrackerOptions;

/**
 * Per-frame result. Fields guarded by a `has_` flag are zero when unset.
 */
typedef struct GazeEstimate {
  bool has_ellipse;
  struct GazeEllipse ellipse;
  bool has_pose;
  struct GazePose pose;
  bool has_grp;
  struct GazePoint grp;
  bool has_visual_axis;
  struct GazeVec3 visual_axis;
  double confidence;
  /**
   * Bitwise or of the `GAZE_FLAG_` constants.
   */
  uint32_t flags;
} GazeEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *gaze_version(void);

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gaze_last_error(void);

enum GazeStatus gaze_eye_default(struct GazeEye *out);

/**
 * Camera with the principal point at the image centre.
 */
enum GazeStatus gaze_camera_new(double focal_px,
                                uint32_t width,
                                uint32_t height,
                                struct GazeCamera *out);

enum GazeStatus gaze_direction(double phi, double tau, struct GazeVec3 *out);

enum GazeStatus gaze_pose_new(struct GazeVec3 limbus_center,
                              double phi,
                              double tau,
                              const struct GazeEye *eye,
                              struct GazePose *out);

enum GazeStatus gaze_project_limbus(const struct GazePose *pose,
                                    const struct GazeCamera *camera,
                                    const struct GazeEye *eye,
                                    struct GazeEllipse *out);

/**
 * Both poses consistent with `ellipse`: `plus` keeps the ellipse
 * orientation, `minus` turns it by half a revolution.
 */
enum GazeStatus gaze_ellipse_to_pose(const struct GazeEllipse *ellipse,
                                     const struct GazeCamera *camera,
                                     const struct GazeEye *eye,
                                     struct GazePose *plus,
                                     struct GazePose *minus);

enum GazeStatus gaze_grp_offset_mm(double tau, const struct GazeEye *eye, double *out);

/**
 * Gaze reflection point in pixels; `kappa` may be NULL.
 */
enum GazeStatus gaze_compute_grp(const struct GazePose *pose,
                                 const struct GazeCamera *camera,
                                 const struct GazeEye *eye,
                                 const struct GazeKappa *kappa,
                                 struct GazePoint *out);

/**
 * Gaze reflection point found by tracing the reflection numerically.
 */
enum GazeStatus gaze_grp_raytrace(const struct GazePose *pose,
                                  const struct GazeCamera *camera,
                                  const struct GazeEye *eye,
                                  struct GazePoint *out);

/**
 * Detects the limbus in an 8-bit grayscale image of `height` rows spaced
 * `stride` bytes apart. `score` may be NULL.
 */
enum GazeStatus gaze_fit_limbus(const uint8_t *pixels,
                                uint32_t width,
                                uint32_t height,
                                size_t stride,
                                double depth_mm,
                                const struct GazeCamera *camera,
                                const struct GazeEye *eye,
                                uint64_t seed,
                                struct GazeEllipse *out,
                                double *score);

/**
 * Fits kappa to `n` fixations: eye poses and the marker positions they
 * look at. `residual_deg` may be NULL.
 */
enum GazeStatus gaze_calibrate_kappa(const struct GazePose *poses,
                                     const struct GazeVec3 *targets,
                                     size_t n,
                                     const struct GazeEye *eye,
                                     struct GazeKappa *out,
                                     double *residual_deg);

/**
 * Angle between two directions, radians.
 */
double gaze_angle_between(struct GazeVec3 a, struct GazeVec3 b);

enum GazeStatus gaze_back_focal_distance(double focal_mm, double subject_depth_mm, double *out);

/**
 * Least-squares motor map from `n` measured `(depth, motor)` pairs.
 */
enum GazeStatus gaze_calibrate_motor_map(const double *depths_mm,
                                         const double *motors,
                                         size_t n,
                                         double focal_mm,
                                         struct GazeMotorMap *out);

enum GazeStatus gaze_motor_command(double depth_mm,
                                   double focal_mm,
                                   const struct GazeMotorMap *map,
                                   int64_t *out);

/**
 * Defaults for a 401 x 401 eye crop at 14000 px focal length.
 */
enum GazeStatus gaze_tracker_options_default(struct GazeTrackerOptions *out);

enum GazeStatus gaze_tracker_new(const struct GazeTrackerOptions *options,
                                 struct GazeTracker **out);

/**
 * Releases a tracker; NULL is ignored.
 */
void gaze_tracker_free(struct GazeTracker *tracker);

/**
 * Forgets the tracker state so the next frame is detected afresh.
 */
enum GazeStatus gaze_tracker_reset(struct GazeTracker *tracker);

/**
 * Replaces the intrinsics used for subsequent frames, e.g. after the eye
 * crop moved.
 */
enum GazeStatus gaze_tracker_set_camera(struct GazeTracker *tracker,
                                        const struct GazeCamera *camera);

/**
 * Number of frames processed so far.
 */
uint64_t gaze_tracker_frames(const struct GazeTracker *tracker);

/**
 * Processes one frame. A failed detection or a lost track is not an error:
 * it is reported through `out->flags`. `depth_hint_mm` is ignored unless
 * positive.
 */
enum GazeStatus gaze_tracker_process(struct GazeTracker *tracker,
                                     const uint8_t *pixels,
                                     uint32_t width,
                                     uint32_t height,
                                     size_t stride,
                                     double depth_hint_mm,
                                     struct GazeEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZE_H */
