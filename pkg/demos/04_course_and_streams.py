# World construction: solving the surveyed quadrilateral from its five
# rope lengths, building the constant-depth course, and synthesizing all
# five sensor streams from a single seed.

from pathlib import Path

import numpy as np

from divetrack import plot_timeseries, preset, simulate, solve_quadrilateral
from divetrack.simworld import BAIAE_LENGTHS, course_length, world_vertices

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# Five measured distances pin the four vertices (A at origin, B on +x).
verts = solve_quadrilateral(BAIAE_LENGTHS)
print("solved vertices [m]:")
for name, v in zip("ABCD", verts):
    print(f"  {name}: ({v[0]:8.3f}, {v[1]:8.3f})")

sc = preset("baiae-square")
wv = world_vertices(sc)
ca = wv[2] - wv[0]
print(f"\nside AC bearing after tilt: {np.degrees(np.arctan2(ca[0], ca[1])):.1f} deg from north")
print(f"course length over {sc.laps} laps: {course_length(sc):.1f} m "
      f"-> {course_length(sc) / sc.speed:.0f} s at {sc.speed} m/s")

truth, streams = simulate(sc)
print(f"\nstreams from seed {sc.seed}:")
print(f"  imu      {len(streams.imu):6d} samples @ {streams.rates.imu:g} Hz")
# the 3x3 grid sits mid-course, beyond the 5 m visibility of the perimeter
# path, so this course produces no detections (see demo 03 for markers)
print(f"  markers  {len(streams.markers):6d} observations @ {streams.rates.camera:g} Hz frames")
print(f"  acoustic {len(streams.acoustic):6d} slots @ {streams.rates.acoustic:g} Hz "
      f"({sum(f.delivered for f in streams.acoustic)} delivered)")
print(f"  depth    {len(streams.depth):6d} samples")
print(f"  vio      {len(streams.vio):6d} poses @ {streams.rates.vio:g} Hz")

# A few stream views: specific force magnitude, measured depth, acoustic x.
imu_t = np.array([s.t for s in streams.imu])
accel = np.array([np.linalg.norm(s.a_m) for s in streams.imu])
plot_timeseries(
    {"|specific force| [m/s^2]": (imu_t, accel)},
    path=OUT / "imu-accel.svg", ylabel="m/s^2",
    title="gravity reaction plus turn transients",
)

depth_t = np.array([d.t for d in streams.depth])
depth_v = np.array([d.z_depth for d in streams.depth])
fix_t = np.array([f.t for f in streams.acoustic if f.delivered])
fix_x = np.array([f.x for f in streams.acoustic if f.delivered])
plot_timeseries(
    {
        "pressure depth [m]": (depth_t, depth_v),
        "delivered fix x [m]": (fix_t, fix_x, "points"),
    },
    path=OUT / "depth-and-fixes.svg", ylabel="m",
    title="a 6 m dive seen by the pressure and acoustic channels",
)
print(f"\nplots in {OUT}")
