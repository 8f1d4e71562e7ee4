#include <math.h>
#include <stdio.h>
#include <string.h>

#include "gaze.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    GazeEye eye;
    GazeCamera cam;
    GazePose pose, plus, minus;
    GazeEllipse ell;
    GazePoint grp;
    GazeVec3 limbus = {0.0, 0.0, 500.0};
    double s = 0.0;

    CHECK(strlen(gaze_version()) > 0);
    CHECK(gaze_eye_default(&eye) == GAZE_STATUS_OK);
    CHECK(gaze_camera_new(14000.0, 401, 401, &cam) == GAZE_STATUS_OK);
    CHECK(gaze_pose_new(limbus, 0.5, 0.3, &eye, &pose) == GAZE_STATUS_OK);
    CHECK(gaze_project_limbus(&pose, &cam, &eye, &ell) == GAZE_STATUS_OK);
    CHECK(fabs(ell.r_max - 156.8) < 1e-9);
    CHECK(gaze_ellipse_to_pose(&ell, &cam, &eye, &plus, &minus) == GAZE_STATUS_OK);
    CHECK(fabs(plus.tau - 0.3) < 1e-9);
    CHECK(gaze_compute_grp(&pose, &cam, &eye, NULL, &grp) == GAZE_STATUS_OK);
    CHECK(gaze_back_focal_distance(35.0, 500.0, &s) == GAZE_STATUS_OK && s == 2.45);

    CHECK(gaze_project_limbus(NULL, &cam, &eye, &ell) == GAZE_STATUS_NULL_POINTER);
    CHECK(gaze_last_error() != NULL && strstr(gaze_last_error(), "null") != NULL);

    GazeTrackerOptions opts;
    GazeTracker *tracker = NULL;
    GazeEstimate est;
    static unsigned char blank[401 * 401];
    memset(blank, 200, sizeof blank);
    CHECK(gaze_tracker_options_default(&opts) == GAZE_STATUS_OK);
    opts.particles = 50;
    CHECK(gaze_tracker_new(&opts, &tracker) == GAZE_STATUS_OK && tracker != NULL);
    CHECK(gaze_tracker_process(tracker, blank, 401, 401, 401, 0.0, &est) == GAZE_STATUS_OK);
    CHECK((est.flags & GAZE_FLAG_NO_ELLIPSE) != 0 && !est.has_pose);
    CHECK(gaze_tracker_frames(tracker) == 1);
    gaze_tracker_free(tracker);

    printf("ok\n");
    return 0;
}
