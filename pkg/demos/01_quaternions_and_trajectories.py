# Quaternion algebra and trajectory containers: the building blocks every
# other demo relies on. Quaternions are Hamilton, scalar-first [w,x,y,z],
# body-to-world; the world frame is ENU with z up.

import numpy as np

from divetrack import (
    Pose,
    Trajectory,
    quat_error,
    quat_from_rotvec,
    quat_identity,
    quat_mul,
    quat_to_matrix,
    rotate_vector,
)

# A rotation vector maps to a unit quaternion through the exponential map.
quarter_turn = quat_from_rotvec([0.0, 0.0, np.pi / 2.0])
print("90 deg about z:", quarter_turn.round(6))
print("east rotated to north:", rotate_vector(quarter_turn, [1.0, 0.0, 0.0]).round(9))

# Composition is the Hamilton product; the angle between two orientations
# comes straight out of the relative rotation's log map.
half_turn = quat_mul(quarter_turn, quarter_turn)
print("two quarter turns vs pi:", quat_error(half_turn, quat_from_rotvec([0, 0, np.pi])))

# Rotation matrices are available whenever a 3x3 form is handier.
print("R(90 deg about z):\n", quat_to_matrix(quarter_turn).round(9))

# Trajectories hold strictly time-ordered poses and interpolate between
# them: linear in position, geodesic (slerp) in orientation.
ts = np.array([0.0, 1.0, 2.0])
ps = np.array([[0.0, 0.0, -6.0], [2.0, 0.0, -6.0], [2.0, 2.0, -6.0]])
qs = np.array([quat_identity(), quarter_turn, quarter_turn])
traj = Trajectory(ts, ps, qs)

mid = traj.sample_at(0.5)
print("\npose halfway through the first leg:")
print("  position:", mid.p.round(6), "(linear midpoint)")
print("  yaw:", np.degrees(quat_error(mid.q, quat_identity())).round(3), "deg (slerp)")

# The CSV form is the interchange format used by every run log:
# t,x,y,z,qw,qx,qy,qz with fixed 9-decimal formatting, so identical
# trajectories serialize to identical bytes.
print("\nCSV serialization:")
print(traj.to_csv())
