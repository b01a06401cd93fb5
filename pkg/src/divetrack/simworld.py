"""Ground-truth course construction and seeded synthesis of sensor streams.

A Scenario describes the world (quadrilateral course, marker grid, acoustic
beacon, multipath zones) plus sensor noise parameters and a single 64-bit
seed. Every stream draws from its own generator, split from that seed by
stream name, so changing one stream's parameters never perturbs the others.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .core import (
    GRAVITY,
    Pose,
    Trajectory,
    quat_conj,
    quat_conj_many,
    quat_from_rotvec,
    quat_from_rotvec_many,
    quat_mul,
    quat_mul_many,
    quat_to_rotvec_many,
    rotate_vector,
    rotate_vector_many,
)
from .eskf import ImuSample

# ---------------------------------------------------------------------------
# sensor parameter records


@dataclass(frozen=True)
class ImuSensor:
    """IMU noise; sigmas are continuous-time densities (per sqrt(Hz))."""

    sigma_a: float = 0.02
    sigma_g: float = 0.002
    bias_a: tuple = (0.0, 0.0, 0.0)
    bias_g: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MarkerSensor:
    visibility_range: float = 5.0  # m, detection cut-off
    fov_half_angle_deg: float = 45.0
    sigma_pos: float = 0.05  # m, per axis on the relative position
    sigma_rot: float = 0.06  # rad, per axis on the relative orientation
    p_outlier: float = 0.0
    outlier_scale: float = 1.0  # m, max magnitude of an outlier displacement


@dataclass(frozen=True)
class AcousticSensor:
    sigma_xy: float = 0.3  # m, horizontal fix noise per axis
    range_resolution: float = 0.05  # m, +- uniform resolution error per axis
    p_loss: float = 0.15
    p_loss_occluded: float = 0.8


@dataclass(frozen=True)
class DepthSensor:
    sigma_z: float = 0.02


@dataclass(frozen=True)
class VioSensor:
    drift_rate: float = 0.03  # m/sqrt(s) position random walk per axis
    scale_error: float = 0.01
    sigma_rot_walk: float = 0.002  # rad/sqrt(s)
    rot_walk_tau: float = 20.0  # s, relaxation that keeps the walk bounded


@dataclass(frozen=True)
class SensorParams:
    imu_rate: float = 60.0
    camera_rate: float = 30.0
    acoustic_rate: float = 0.2
    vio_rate: float = 60.0
    imu: ImuSensor = field(default_factory=ImuSensor)
    marker: MarkerSensor = field(default_factory=MarkerSensor)
    acoustic: AcousticSensor = field(default_factory=AcousticSensor)
    depth: DepthSensor = field(default_factory=DepthSensor)
    vio: VioSensor = field(default_factory=VioSensor)

    def __post_init__(self):
        for name in ("imu_rate", "camera_rate", "acoustic_rate", "vio_rate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        for name, p in (
            ("marker.p_outlier", self.marker.p_outlier),
            ("acoustic.p_loss", self.acoustic.p_loss),
            ("acoustic.p_loss_occluded", self.acoustic.p_loss_occluded),
        ):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


# ---------------------------------------------------------------------------
# world geometry records


@dataclass(frozen=True)
class MarkerGrid:
    rows: int = 3
    cols: int = 3
    marker_size: float = 0.19
    spacing: float = 0.25  # center-to-center pitch
    center_pose: Pose = field(
        default_factory=lambda: Pose(0.0, np.zeros(3), [1.0, 0.0, 0.0, 0.0])
    )

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("marker grid needs rows, cols >= 1")
        if self.marker_size <= 0.0:
            raise ValueError("marker_size must be > 0")

    @property
    def ids(self) -> tuple:
        return tuple(range(self.rows * self.cols))

    def marker_poses(self) -> dict:
        """World pose of each marker, ids row-major from the +y row down."""
        out = {}
        cq, cp = self.center_pose.q, self.center_pose.p
        for r in range(self.rows):
            for c in range(self.cols):
                off = np.array(
                    [
                        (c - (self.cols - 1) / 2.0) * self.spacing,
                        ((self.rows - 1) / 2.0 - r) * self.spacing,
                        0.0,
                    ]
                )
                out[r * self.cols + c] = (cp + rotate_vector(cq, off), cq)
        return out


@dataclass(frozen=True)
class MultipathZone:
    center: tuple  # 2-D point, m
    radius: float
    bias: tuple  # 2-D offset added to fixes inside the zone, m

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("zone radius must be > 0")

    def contains(self, xy: np.ndarray) -> np.ndarray:
        d = np.asarray(xy, dtype=float) - np.asarray(self.center, dtype=float)
        return np.einsum("...i,...i->...", d, d) <= self.radius**2


@dataclass(frozen=True)
class Beacon:
    xy: tuple = (0.0, 0.0)
    height_above_seabed: float = 3.0


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    vertices: tuple = ()  # four 2-D points A, B, C, D before any tilt
    course_depth: float = 6.0  # m below the surface; course z = -course_depth
    heading_offset_deg: float | None = None  # bearing of side AC from north
    corner_radius: float = 1.0
    speed: float = 0.5
    laps: int = 3
    seed: int = 0
    marker_grid: MarkerGrid = field(default_factory=MarkerGrid)
    beacon: Beacon = field(default_factory=Beacon)
    zones: tuple = ()
    occlusions: tuple = ()  # (t0, t1) intervals of degraded acoustic delivery
    sensors: SensorParams = field(default_factory=SensorParams)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (4, 2):
            raise ValueError("scenario needs four 2-D vertices")
        d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)
        if np.any(d[~np.eye(4, dtype=bool)] <= 0.0):
            raise ValueError("vertices must be pairwise distinct")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))


QUAD_SIDES = ("AB", "CD", "AD", "BD", "AC")


def solve_quadrilateral(lengths: dict) -> np.ndarray:
    """Place A, B, C, D in the plane from the five given distances.

    A sits at the origin, B on the +x axis, C and D in the upper half-plane
    (C picked on the far side of AD so A-B-C-D runs counterclockwise).
    Raises ValueError when the lengths admit no real solution.
    """
    missing = [k for k in QUAD_SIDES if k not in lengths]
    if missing:
        raise ValueError(f"missing side lengths: {missing}")
    ab, cd, ad, bd, ac = (float(lengths[k]) for k in QUAD_SIDES)
    if min(ab, cd, ad, bd, ac) <= 0.0:
        raise ValueError("side lengths must be > 0")

    A = np.array([0.0, 0.0])
    B = np.array([ab, 0.0])
    dx = (ab**2 + ad**2 - bd**2) / (2.0 * ab)
    h2 = ad**2 - dx**2
    if h2 < 0.0:
        raise ValueError("infeasible lengths: triangle ABD does not close")
    D = np.array([dx, np.sqrt(h2)])

    # C = intersection of circles (A, |AC|) and (D, |CD|)
    u = D - A
    d = np.linalg.norm(u)
    u = u / d
    along = (ac**2 - cd**2 + d**2) / (2.0 * d)
    h2 = ac**2 - along**2
    if h2 < 0.0:
        raise ValueError("infeasible lengths: circles AC and DC do not intersect")
    base = A + along * u
    off = np.sqrt(h2) * np.array([-u[1], u[0]])
    c1, c2 = base + off, base - off
    C = c1 if c1[0] >= c2[0] else c2

    verts = np.array([A, B, C, D])
    got = {
        "AB": np.linalg.norm(B - A),
        "CD": np.linalg.norm(D - C),
        "AD": np.linalg.norm(D - A),
        "BD": np.linalg.norm(D - B),
        "AC": np.linalg.norm(C - A),
    }
    for k in QUAD_SIDES:
        if abs(got[k] - float(lengths[k])) > 1e-6:
            raise ValueError(f"constructed quadrilateral violates |{k}|")
    return verts


def world_vertices(scenario: Scenario) -> np.ndarray:
    """Course vertices after the heading tilt, rotated about vertex A."""
    v = np.asarray(scenario.vertices, dtype=float)
    if scenario.heading_offset_deg is None:
        return v
    ca = v[2] - v[0]
    bearing = np.degrees(np.arctan2(ca[0], ca[1]))  # clockwise from north
    phi = np.radians(bearing - scenario.heading_offset_deg)
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    return (v - v[0]) @ rot.T + v[0]


# --- course construction ---------------------------------------------------


def _course_pieces(waypoints: np.ndarray, radius: float):
    """Polyline with tangent arcs at interior corners; start/end stay exact."""
    pieces = []
    cur = waypoints[0]
    for i in range(1, len(waypoints) - 1):
        v, nxt, prv = waypoints[i], waypoints[i + 1], waypoints[i - 1]
        d1 = (v - prv) / np.linalg.norm(v - prv)
        d2 = (nxt - v) / np.linalg.norm(nxt - v)
        turn = np.arccos(np.clip(d1 @ d2, -1.0, 1.0))
        if turn < 1e-12:
            continue
        tau = radius * np.tan(turn / 2.0)
        entry, exit_ = v - d1 * tau, v + d2 * tau
        leg = np.linalg.norm(entry - cur)
        if (entry - cur) @ d1 < -1e-9:
            raise ValueError("corner radius too large for the course legs")
        if leg > 1e-12:
            pieces.append(("line", cur, d1, leg))
        side = 1.0 if d1[0] * d2[1] - d1[1] * d2[0] >= 0.0 else -1.0
        center = entry + side * radius * np.array([-d1[1], d1[0]])
        a0 = np.arctan2(entry[1] - center[1], entry[0] - center[0])
        pieces.append(("arc", center, radius, a0, side, radius * turn))
        cur = exit_
    end = waypoints[-1]
    leg = np.linalg.norm(end - cur)
    if leg > 1e-12:
        pieces.append(("line", cur, (end - cur) / leg, leg))
    if not pieces:
        raise ValueError("course has zero length")
    return pieces


def course_length(scenario: Scenario) -> float:
    """Arc length of the rounded course over all laps."""
    v = world_vertices(scenario)
    waypoints = np.concatenate([np.tile(v, (scenario.laps, 1)), v[:1]])
    pieces = _course_pieces(waypoints, scenario.corner_radius)
    return float(sum(p[-1] for p in pieces))


def build_course(scenario: Scenario) -> Trajectory:
    """Constant-speed, constant-depth truth trajectory around the course.

    The path runs A->B->C->D->A for `laps` laps with corners rounded at
    `corner_radius`; heading stays tangent to the path and the body z axis
    stays up (camera axis -z faces the seafloor).
    """
    if scenario.speed <= 0.0:
        raise ValueError("speed must be > 0")
    if scenario.laps < 1:
        raise ValueError("laps must be >= 1")
    v = world_vertices(scenario)
    waypoints = np.concatenate([np.tile(v, (scenario.laps, 1)), v[:1]])
    pieces = _course_pieces(waypoints, scenario.corner_radius)
    lengths = np.array([p[-1] for p in pieces])
    starts = np.concatenate([[0.0], np.cumsum(lengths)])
    total = starts[-1]

    rate = max(scenario.sensors.imu_rate, scenario.sensors.vio_rate)
    period = 1.0 / rate
    n = int(np.floor(total / scenario.speed / period + 1e-9)) + 1
    ts = np.arange(n) * period
    s = np.minimum(scenario.speed * ts, total)

    xy = np.empty((n, 2))
    tang = np.empty((n, 2))
    idx = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(pieces) - 1)
    for k, piece in enumerate(pieces):
        sel = idx == k
        if not np.any(sel):
            continue
        ds = s[sel] - starts[k]
        if piece[0] == "line":
            _, p0, d, _ = piece
            xy[sel] = p0 + ds[:, None] * d
            tang[sel] = d
        else:
            _, center, radius, a0, side, _ = piece
            a = a0 + side * ds / radius
            xy[sel] = center + radius * np.stack([np.cos(a), np.sin(a)], axis=1)
            tang[sel] = side * np.stack([-np.sin(a), np.cos(a)], axis=1)

    ps = np.concatenate([xy, np.full((n, 1), -scenario.course_depth)], axis=1)
    yaw = np.arctan2(tang[:, 1], tang[:, 0])
    qs = quat_from_rotvec_many(np.concatenate([np.zeros((n, 2)), yaw[:, None]], axis=1))
    return Trajectory(ts, ps, qs)


# ---------------------------------------------------------------------------
# stream records


@dataclass(frozen=True)
class MarkerObservation:
    t: float
    marker_id: int
    p: np.ndarray  # marker position in the camera (= body) frame
    q: np.ndarray  # marker orientation in the camera frame
    detected: bool = True


@dataclass(frozen=True)
class AcousticFix:
    t: float
    x: float
    y: float
    delivered: bool

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class DepthSample:
    t: float
    z_depth: float  # meters below the surface (positive down)


@dataclass(frozen=True)
class Rates:
    imu: float
    camera: float
    acoustic: float
    vio: float


@dataclass(frozen=True)
class SensorStreams:
    imu: tuple
    markers: tuple
    acoustic: tuple
    depth: tuple
    vio: tuple
    rates: Rates


def _stream_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])


def _stream_times(truth: Trajectory, rate: float) -> np.ndarray:
    period = 1.0 / rate
    span = truth.t_last - truth.t_first
    n = int(np.floor(span / period + 1e-9)) + 1
    return truth.t_first + np.arange(n) * period


# --- IMU ---------------------------------------------------------------------


def synth_imu(truth: Trajectory, params: SensorParams, seed: int) -> tuple:
    """Accelerometer/gyro stream from finite differences of the truth."""
    if len(truth) < 2:
        raise ValueError("truth trajectory needs at least two samples")
    ts = _stream_times(truth, params.imu_rate)
    ps, qs = truth.sample_many(ts)
    dt = 1.0 / params.imu_rate
    n = len(ts)

    acc = np.zeros((n, 3))
    if n > 2:
        acc[1:-1] = (ps[2:] - 2.0 * ps[1:-1] + ps[:-2]) / dt**2
        acc[0] = acc[1]
        acc[-1] = acc[-2]

    # delta-angle convention: sample k reports the mean rate over the
    # preceding interval, so exact stepwise integration reproduces q_k
    omega = np.zeros((n, 3))
    if n > 1:
        dq = quat_mul_many(quat_conj_many(qs[:-1]), qs[1:])
        omega[1:] = quat_to_rotvec_many(dq) / dt
        omega[0] = omega[1]

    a_body = rotate_vector_many(quat_conj_many(qs), acc - GRAVITY)

    cfg = params.imu
    rng = _stream_rng(seed, "imu")
    noise_a = rng.normal(size=(n, 3)) * (cfg.sigma_a / np.sqrt(dt))
    noise_g = rng.normal(size=(n, 3)) * (cfg.sigma_g / np.sqrt(dt))
    a_m = a_body + np.asarray(cfg.bias_a, dtype=float) + noise_a
    w_m = omega + np.asarray(cfg.bias_g, dtype=float) + noise_g
    return tuple(ImuSample(t, a, w) for t, a, w in zip(ts, a_m, w_m))


# --- markers -----------------------------------------------------------------


def synth_markers(
    truth: Trajectory, grid: MarkerGrid, params: SensorParams, seed: int
) -> tuple:
    """Camera-frame marker observations with range/FOV cuts and outliers."""
    cfg = params.marker
    ts = _stream_times(truth, params.camera_rate)
    ps, qs = truth.sample_many(ts)
    rng = _stream_rng(seed, "markers")

    ids = sorted(grid.marker_poses())
    poses = grid.marker_poses()
    marker_p = np.array([poses[i][0] for i in ids])
    marker_q = np.array([poses[i][1] for i in ids])
    cos_fov = np.cos(np.radians(cfg.fov_half_angle_deg))

    out = []
    for t, p_b, q_b in zip(ts, ps, qs):
        qc = quat_conj(q_b)
        rel = rotate_vector_many(np.tile(qc, (len(ids), 1)), marker_p - p_b)
        dist = np.linalg.norm(rel, axis=1)
        ok = dist > 1e-9
        cos_axis = np.where(ok, -rel[:, 2] / np.where(ok, dist, 1.0), 1.0)
        visible = (dist <= cfg.visibility_range) & (cos_axis >= cos_fov) & ok
        for j in np.flatnonzero(visible):
            dp = rng.normal(size=3) * cfg.sigma_pos
            dr = rng.normal(size=3) * cfg.sigma_rot
            p_obs = rel[j] + dp
            if cfg.sigma_rot > 0.0:
                q_obs = quat_mul(quat_mul(qc, marker_q[j]), quat_from_rotvec(dr))
            else:
                q_obs = quat_mul(qc, marker_q[j])
            if rng.random() < cfg.p_outlier:
                direction = rng.normal(size=3)
                direction /= np.linalg.norm(direction)
                p_obs = p_obs + direction * rng.uniform(0.0, cfg.outlier_scale)
            out.append(MarkerObservation(t, int(ids[j]), p_obs, q_obs))
    return tuple(out)


# --- acoustic ----------------------------------------------------------------


def synth_acoustic(truth: Trajectory, scenario: Scenario, seed: int) -> tuple:
    """USBL-style 2-D fixes: noise, resolution error, zone bias, packet loss."""
    cfg = scenario.sensors.acoustic
    ts = _stream_times(truth, scenario.sensors.acoustic_rate)
    ps, _ = truth.sample_many(ts)
    rng = _stream_rng(seed, "acoustic")

    out = []
    for t, p in zip(ts, ps):
        xy = p[:2] + rng.normal(size=2) * cfg.sigma_xy
        xy = xy + rng.uniform(-1.0, 1.0, size=2) * cfg.range_resolution
        for zone in scenario.zones:
            if zone.contains(p[:2]):
                xy = xy + np.asarray(zone.bias, dtype=float)
        occluded = any(t0 <= t <= t1 for t0, t1 in scenario.occlusions)
        p_loss = cfg.p_loss_occluded if occluded else cfg.p_loss
        delivered = bool(rng.random() >= p_loss)
        out.append(AcousticFix(t, float(xy[0]), float(xy[1]), delivered))
    return tuple(out)


# --- depth -------------------------------------------------------------------


def synth_depth(truth: Trajectory, params: SensorParams, seed: int) -> tuple:
    """Pressure-sensor depth (positive down), emitted at the VIO rate."""
    ts = _stream_times(truth, params.vio_rate)
    ps, _ = truth.sample_many(ts)
    rng = _stream_rng(seed, "depth")
    noise = rng.normal(size=len(ts)) * params.depth.sigma_z
    return tuple(
        DepthSample(t, -z + e) for t, z, e in zip(ts, ps[:, 2], noise)
    )


# --- VIO ---------------------------------------------------------------------


def synth_vio(truth: Trajectory, params: SensorParams, seed: int) -> tuple:
    """World-aligned VIO poses: scaled relative position plus drift.

    Position is the true displacement from the start scaled by
    (1 + scale_error) plus a per-axis random walk of intensity drift_rate.
    Orientation is the truth perturbed by a leaky rotation random walk, which
    stays bounded the way a gravity-referenced odometry stack does.
    """
    cfg = params.vio
    ts = _stream_times(truth, params.vio_rate)
    ps, qs = truth.sample_many(ts)
    dt = 1.0 / params.vio_rate
    n = len(ts)
    rng = _stream_rng(seed, "vio")

    walk = np.zeros((n, 3))
    walk[1:] = np.cumsum(
        rng.normal(size=(n - 1, 3)) * (cfg.drift_rate * np.sqrt(dt)), axis=0
    )
    pos = (ps - ps[0]) * (1.0 + cfg.scale_error) + walk

    if cfg.sigma_rot_walk > 0.0:
        steps = rng.normal(size=(n, 3)) * (cfg.sigma_rot_walk * np.sqrt(dt))
        steps[0] = 0.0
        lam = max(0.0, 1.0 - dt / cfg.rot_walk_tau)
        rw = lfilter([1.0], [1.0, -lam], steps, axis=0)
        q_out = quat_mul_many(qs, quat_from_rotvec_many(rw))
    else:
        q_out = qs
    return tuple(Pose(t, p, q) for t, p, q in zip(ts, pos, q_out))


# --- scenario files and presets ----------------------------------------------

SCENARIO_KEY_DOCS = {
    "name": "free-form scenario label",
    "seed": "64-bit integer; fixes every stream's randomness",
    "course.vertices": "four [x, y] points A, B, C, D in meters",
    "course.lengths": "alternative to vertices: {AB, CD, AD, BD, AC} in meters",
    "course.depth": "meters below the surface; course z = -depth",
    "course.heading_offset_deg": "bearing of side AC from north (null = keep as built)",
    "course.corner_radius": "corner rounding radius, m",
    "course.speed": "traversal speed, m/s",
    "course.laps": "number of counterclockwise laps",
    "marker_grid.rows / cols": "grid layout (ids row-major)",
    "marker_grid.marker_size": "marker edge length, m",
    "marker_grid.spacing": "center-to-center pitch, m",
    "marker_grid.center": "[x, y, z] of the grid center",
    "marker_grid.yaw_deg": "grid rotation about +z",
    "beacon.xy": "acoustic beacon position, usually vertex A",
    "beacon.height_above_seabed": "meters",
    "zones[].center / radius / bias": "multipath circles: fixes inside get bias added",
    "occlusions": "list of [t0, t1] windows with degraded acoustic delivery",
    "sensors.imu_rate / camera_rate / acoustic_rate / vio_rate": "Hz",
    "sensors.imu.sigma_a / sigma_g": "white-noise densities (per sqrt(Hz))",
    "sensors.imu.bias_a / bias_g": "constant biases, 3-vectors",
    "sensors.marker.visibility_range": "detection range cut-off, m",
    "sensors.marker.fov_half_angle_deg": "camera cone half-angle",
    "sensors.marker.sigma_pos / sigma_rot": "detection noise (m, rad per axis)",
    "sensors.marker.p_outlier / outlier_scale": "spike probability and max size, m",
    "sensors.acoustic.sigma_xy": "fix noise per axis, m",
    "sensors.acoustic.range_resolution": "+- uniform resolution error, m",
    "sensors.acoustic.p_loss / p_loss_occluded": "packet-loss probabilities",
    "sensors.depth.sigma_z": "pressure-depth noise, m",
    "sensors.vio.drift_rate": "position random walk, m/sqrt(s)",
    "sensors.vio.scale_error": "odometry scale factor error",
    "sensors.vio.sigma_rot_walk / rot_walk_tau": "orientation walk (rad/sqrt(s), s)",
}


def scenario_to_dict(s: Scenario) -> dict:
    grid = s.marker_grid
    yaw = float(
        np.degrees(2.0 * np.arctan2(grid.center_pose.q[3], grid.center_pose.q[0]))
    )
    return {
        "name": s.name,
        "seed": int(s.seed),
        "course": {
            "vertices": [[float(x), float(y)] for x, y in s.vertices],
            "depth": float(s.course_depth),
            "heading_offset_deg": None
            if s.heading_offset_deg is None
            else float(s.heading_offset_deg),
            "corner_radius": float(s.corner_radius),
            "speed": float(s.speed),
            "laps": int(s.laps),
        },
        "marker_grid": {
            "rows": grid.rows,
            "cols": grid.cols,
            "marker_size": float(grid.marker_size),
            "spacing": float(grid.spacing),
            "center": [float(x) for x in grid.center_pose.p],
            "yaw_deg": yaw,
        },
        "beacon": {
            "xy": [float(x) for x in s.beacon.xy],
            "height_above_seabed": float(s.beacon.height_above_seabed),
        },
        "zones": [
            {
                "center": [float(x) for x in z.center],
                "radius": float(z.radius),
                "bias": [float(x) for x in z.bias],
            }
            for z in s.zones
        ],
        "occlusions": [[float(a), float(b)] for a, b in s.occlusions],
        "sensors": {
            "imu_rate": s.sensors.imu_rate,
            "camera_rate": s.sensors.camera_rate,
            "acoustic_rate": s.sensors.acoustic_rate,
            "vio_rate": s.sensors.vio_rate,
            "imu": {
                "sigma_a": s.sensors.imu.sigma_a,
                "sigma_g": s.sensors.imu.sigma_g,
                "bias_a": list(s.sensors.imu.bias_a),
                "bias_g": list(s.sensors.imu.bias_g),
            },
            "marker": {
                "visibility_range": s.sensors.marker.visibility_range,
                "fov_half_angle_deg": s.sensors.marker.fov_half_angle_deg,
                "sigma_pos": s.sensors.marker.sigma_pos,
                "sigma_rot": s.sensors.marker.sigma_rot,
                "p_outlier": s.sensors.marker.p_outlier,
                "outlier_scale": s.sensors.marker.outlier_scale,
            },
            "acoustic": {
                "sigma_xy": s.sensors.acoustic.sigma_xy,
                "range_resolution": s.sensors.acoustic.range_resolution,
                "p_loss": s.sensors.acoustic.p_loss,
                "p_loss_occluded": s.sensors.acoustic.p_loss_occluded,
            },
            "depth": {"sigma_z": s.sensors.depth.sigma_z},
            "vio": {
                "drift_rate": s.sensors.vio.drift_rate,
                "scale_error": s.sensors.vio.scale_error,
                "sigma_rot_walk": s.sensors.vio.sigma_rot_walk,
                "rot_walk_tau": s.sensors.vio.rot_walk_tau,
            },
        },
    }


def scenario_from_dict(d: dict) -> Scenario:
    course = d.get("course", {})
    if "vertices" in course:
        vertices = tuple(map(tuple, course["vertices"]))
    elif "lengths" in course:
        vertices = tuple(map(tuple, solve_quadrilateral(course["lengths"])))
    else:
        raise ValueError("scenario course needs 'vertices' or 'lengths'")

    g = d.get("marker_grid", {})
    yaw = np.radians(g.get("yaw_deg", 0.0))
    grid = MarkerGrid(
        rows=int(g.get("rows", 3)),
        cols=int(g.get("cols", 3)),
        marker_size=float(g.get("marker_size", 0.19)),
        spacing=float(g.get("spacing", 0.25)),
        center_pose=Pose(
            0.0, g.get("center", [0.0, 0.0, 0.0]), quat_from_rotvec([0.0, 0.0, yaw])
        ),
    )
    b = d.get("beacon", {})
    sens = d.get("sensors", {})
    sensors = SensorParams(
        imu_rate=float(sens.get("imu_rate", 60.0)),
        camera_rate=float(sens.get("camera_rate", 30.0)),
        acoustic_rate=float(sens.get("acoustic_rate", 0.2)),
        vio_rate=float(sens.get("vio_rate", 60.0)),
        imu=ImuSensor(
            **{
                **sens.get("imu", {}),
                "bias_a": tuple(sens.get("imu", {}).get("bias_a", (0.0, 0.0, 0.0))),
                "bias_g": tuple(sens.get("imu", {}).get("bias_g", (0.0, 0.0, 0.0))),
            }
        ),
        marker=MarkerSensor(**sens.get("marker", {})),
        acoustic=AcousticSensor(**sens.get("acoustic", {})),
        depth=DepthSensor(**sens.get("depth", {})),
        vio=VioSensor(**sens.get("vio", {})),
    )
    return Scenario(
        name=str(d.get("name", "custom")),
        vertices=vertices,
        course_depth=float(course.get("depth", 6.0)),
        heading_offset_deg=(
            None
            if course.get("heading_offset_deg") is None
            else float(course["heading_offset_deg"])
        ),
        corner_radius=float(course.get("corner_radius", 1.0)),
        speed=float(course.get("speed", 0.5)),
        laps=int(course.get("laps", 3)),
        seed=int(d.get("seed", 0)),
        marker_grid=grid,
        beacon=Beacon(
            xy=tuple(b.get("xy", (0.0, 0.0))),
            height_above_seabed=float(b.get("height_above_seabed", 3.0)),
        ),
        zones=tuple(
            MultipathZone(tuple(z["center"]), float(z["radius"]), tuple(z["bias"]))
            for z in d.get("zones", [])
        ),
        occlusions=tuple((float(a), float(b_)) for a, b_ in d.get("occlusions", [])),
        sensors=sensors,
    )


def save_scenario(scenario: Scenario, path) -> None:
    import yaml

    with open(path, "w", newline="") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=True)


def load_scenario(path) -> Scenario:
    import yaml

    with open(path) as fh:
        return scenario_from_dict(yaml.safe_load(fh))


BAIAE_LENGTHS = {"AB": 30.0, "CD": 30.0, "AD": 29.26, "BD": 43.3, "AC": 41.0}


def _baiae_square() -> Scenario:
    verts = solve_quadrilateral(BAIAE_LENGTHS)
    base = Scenario(
        name="baiae-square",
        vertices=tuple(map(tuple, verts)),
        course_depth=6.0,
        heading_offset_deg=11.0,
        corner_radius=1.0,
        speed=0.5,
        laps=3,
        seed=1906,
    )
    wv = world_vertices(base)
    centroid = wv.mean(axis=0)
    grid = MarkerGrid(
        center_pose=Pose(0.0, [centroid[0], centroid[1], -7.5], [1.0, 0.0, 0.0, 0.0])
    )
    return replace(
        base,
        marker_grid=grid,
        beacon=Beacon(xy=tuple(wv[0]), height_above_seabed=3.0),
        zones=(MultipathZone(center=tuple(wv[2]), radius=6.0, bias=(5.5, 0.0)),),
        sensors=SensorParams(),
    )


# Calibrated so detector-only tracking on this course averages ~52 mm
# position and ~1.9 deg orientation error; see tests/test_acceptance.py.
LAB_SIGMA_POS = 0.05
LAB_SIGMA_ROT = 0.062


def _marker_lab() -> Scenario:
    return Scenario(
        name="marker-lab",
        vertices=((0.0, 0.0), (1.2, 0.0), (1.2, 0.8), (0.0, 0.8)),
        course_depth=0.0,
        heading_offset_deg=None,
        corner_radius=0.2,
        speed=0.3,
        laps=3,
        seed=7,
        marker_grid=MarkerGrid(
            center_pose=Pose(0.0, [0.6, 0.4, -1.5], [1.0, 0.0, 0.0, 0.0])
        ),
        beacon=Beacon(xy=(0.0, 0.0), height_above_seabed=0.0),
        zones=(),
        sensors=SensorParams(
            marker=MarkerSensor(
                visibility_range=5.0,
                fov_half_angle_deg=50.0,
                sigma_pos=LAB_SIGMA_POS,
                sigma_rot=LAB_SIGMA_ROT,
                p_outlier=0.0,
            ),
        ),
    )


PRESETS = {"baiae-square": _baiae_square, "marker-lab": _marker_lab}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[name]()


# --- orchestration -----------------------------------------------------------


def simulate(scenario: Scenario) -> tuple[Trajectory, SensorStreams]:
    """Build the truth trajectory and all five streams for one scenario."""
    truth = build_course(scenario)
    streams = SensorStreams(
        imu=synth_imu(truth, scenario.sensors, scenario.seed),
        markers=synth_markers(truth, scenario.marker_grid, scenario.sensors, scenario.seed),
        acoustic=synth_acoustic(truth, scenario, scenario.seed),
        depth=synth_depth(truth, scenario.sensors, scenario.seed),
        vio=synth_vio(truth, scenario.sensors, scenario.seed),
        rates=Rates(
            imu=scenario.sensors.imu_rate,
            camera=scenario.sensors.camera_rate,
            acoustic=scenario.sensors.acoustic_rate,
            vio=scenario.sensors.vio_rate,
        ),
    )
    return truth, streams
