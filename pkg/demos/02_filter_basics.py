# The error-state Kalman filter on its own: static noise calibration,
# covariance growth under dead reckoning, and pose corrections.

import numpy as np

from divetrack import (
    FilterParams,
    GRAVITY,
    ImuSample,
    PoseMeasurement,
    estimate_static_noise,
    init_from_pose,
    predict,
    quat_from_rotvec,
    quat_identity,
    update_pose,
)

rng = np.random.default_rng(12)
dt = 1.0 / 60.0

# --- 1. calibrate noise from a static log --------------------------------
# Leave the device at rest; biases fall out of the means and the white
# noise densities out of the residual standard deviations.
bias_a = np.array([0.05, -0.02, 0.03])
bias_g = np.array([0.002, -0.001, 0.0015])
log = [
    ImuSample(
        k * dt,
        -GRAVITY + bias_a + rng.normal(0.0, 0.02 / np.sqrt(dt), 3),
        bias_g + rng.normal(0.0, 0.002 / np.sqrt(dt), 3),
    )
    for k in range(int(60.0 / dt))
]
cal = estimate_static_noise(log)
print("recovered accel bias:", cal.accel_bias.round(4), " true:", bias_a)
print("recovered gyro bias: ", cal.gyro_bias.round(4), " true:", bias_g)
print("recovered sigma_a:   ", cal.sigma_a.round(4), " true: 0.02 per axis")
print("recovered sigma_g:   ", cal.sigma_g.round(5), " true: 0.002 per axis")

# --- 2. dead reckoning drifts, updates pull it back -----------------------
params = FilterParams(sigma_a=0.02, sigma_g=0.002)
z0 = PoseMeasurement(
    0.0, np.zeros(3), quat_identity(), np.diag([0.05**2] * 3 + [0.02**2] * 3)
)
state = init_from_pose(z0, params)

# constant-velocity truth along +x; the filter only sees noisy IMU data
v_true = np.array([0.5, 0.0, 0.0])
print("\n  t      position error [m]   trace(P)")
for k in range(1, int(10.0 / dt) + 1):
    t = k * dt
    a_m = -GRAVITY + rng.normal(0.0, 0.02 / np.sqrt(dt), 3)
    w_m = rng.normal(0.0, 0.002 / np.sqrt(dt), 3)
    state = predict(state, ImuSample(t, a_m, w_m), params)
    # a pose fix once per second, e.g. from a surveyed marker
    if k % 60 == 0:
        z = PoseMeasurement(
            t,
            v_true * t + rng.normal(0.0, 0.05, 3),
            quat_from_rotvec(rng.normal(0.0, 0.02, 3)),
            np.diag([0.05**2] * 3 + [0.02**2] * 3),
        )
        state, accepted = update_pose(state, z, gate=params.gate)
        err = np.linalg.norm(state.p - v_true * t)
        print(f"  {t:5.2f}  {err:18.3f}   {np.trace(state.P):.4f}"
              + ("" if accepted else "  (rejected)"))

# Between fixes the covariance trace grows (honest uncertainty about an
# unobserved state); each accepted update shrinks it again.
