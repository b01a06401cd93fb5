"""Deterministic underwater tracking simulator and sensor-fusion library.

Two trackers around a shared world model:

* marker tracking: fiducial observations plus IMU through an error-state
  Kalman filter (`eskf`, `marker_tracker`);
* hybrid tracking: sparse, lossy acoustic fixes bridged by visual-inertial
  odometry with pressure depth (`hybrid_tracker`).

`simworld` builds ground-truth courses and synthesizes every sensor stream
from a single seed; `harness` evaluates estimates against the truth and
writes deterministic run logs and SVG plots.
"""

from .core import (
    GRAVITY,
    Pose,
    Trajectory,
    quat_error,
    quat_from_rotvec,
    quat_identity,
    quat_mul,
    quat_slerp,
    quat_to_matrix,
    quat_to_rotvec,
    rotate_vector,
)
from .eskf import (
    EskfState,
    FilterParams,
    ImuSample,
    PoseMeasurement,
    estimate_static_noise,
    init_from_pose,
    predict,
    update_pose,
)
from .harness import RunMetrics, evaluate, plot_timeseries, plot_trajectory, write_run_log
from .hybrid_tracker import HybridState, hybrid_step, run_hybrid_tracking
from .marker_tracker import MarkerMap, observation_to_pose, run_marker_tracking
from .simworld import (
    Scenario,
    SensorParams,
    SensorStreams,
    build_course,
    load_scenario,
    preset,
    save_scenario,
    simulate,
    solve_quadrilateral,
)

__version__ = "0.1.0"
