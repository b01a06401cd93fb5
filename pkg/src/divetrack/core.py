"""World frame, quaternion algebra, poses and trajectories.

Conventions used throughout the package:

* World frame is ENU (x east, y north, z up). Depth below the sea
  surface is ``-p[2]``.
* Quaternions are Hamilton, scalar-first ``[w, x, y, z]``, and represent
  body-to-world rotations. ``q`` and ``-q`` encode the same rotation;
  operations that produce quaternions return the canonical representative
  with ``w >= 0``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-6  # how far from unit norm an input quaternion may be

GRAVITY = np.array([0.0, 0.0, -9.81])
GRAVITY.flags.writeable = False


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Scale to unit norm and pick the representative with w >= 0."""
    q = np.asarray(q, dtype=float)
    n = np.sqrt(q @ q)
    if n == 0.0:
        raise ValueError("zero quaternion cannot be normalized")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_conj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b, renormalized."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return quat_normalize(
        np.array(
            [
                aw * bw - ax * bx - ay * by - az * bz,
                aw * bx + ax * bw + ay * bz - az * by,
                aw * by - ax * bz + ay * bw + az * bx,
                aw * bz + ax * by - ay * bx + az * bw,
            ]
        )
    )


def quat_from_rotvec(r: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (radians) to unit quaternion."""
    r = np.asarray(r, dtype=float)
    angle = np.sqrt(r @ r)
    half = 0.5 * angle
    if angle < 1e-8:
        # second-order series of sin(angle/2)/angle keeps full precision
        k = 0.5 - angle * angle / 48.0
    else:
        k = np.sin(half) / angle
    return quat_normalize(np.array([np.cos(half), k * r[0], k * r[1], k * r[2]]))


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Logarithmic map; result magnitude is in [0, pi]."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0.0:
        q = -q
    s = np.sqrt(q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    if s < 1e-12:
        return 2.0 * q[1:4]
    angle = 2.0 * np.arctan2(s, q[0])
    return (angle / s) * q[1:4]


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotate_vector(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the body-to-world rotation R(q) to a 3-vector."""
    q = np.asarray(q, dtype=float)
    n = np.sqrt(q @ q)
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"rotate_vector needs a unit quaternion, got norm {n}")
    return quat_to_matrix(q) @ np.asarray(v, dtype=float)


def quat_error(q_est: np.ndarray, q_true: np.ndarray) -> float:
    """Angle in radians between two orientations, in [0, pi]."""
    return float(np.linalg.norm(quat_to_rotvec(quat_mul(quat_conj(q_true), q_est))))


def quat_slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Geodesic interpolation with shortest-path sign fix, u in [0, 1]."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = float(q0 @ q1)
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-12:
        return quat_normalize(q0 + u * (q1 - q0))
    th = np.arccos(min(d, 1.0))
    return quat_normalize(
        (np.sin((1.0 - u) * th) * q0 + np.sin(u * th) * q1) / np.sin(th)
    )


def quat_mean(qs: np.ndarray) -> np.ndarray:
    """Normalized component mean with signs aligned to the first entry."""
    qs = np.asarray(qs, dtype=float)
    if qs.ndim != 2 or qs.shape[0] == 0:
        raise ValueError("quat_mean needs a non-empty (n, 4) array")
    signs = np.where(qs @ qs[0] < 0.0, -1.0, 1.0)
    return quat_normalize((qs * signs[:, None]).sum(axis=0))


# Batch helpers used by the stream synthesizers and the evaluator.
# They mirror the scalar routines above, one row per sample.


def quat_from_rotvec_many(rs: np.ndarray) -> np.ndarray:
    rs = np.asarray(rs, dtype=float)
    angle = np.linalg.norm(rs, axis=1)
    half = 0.5 * angle
    small = angle < 1e-8
    k = np.where(
        small, 0.5 - angle * angle / 48.0, np.sin(half) / np.where(small, 1.0, angle)
    )
    out = np.concatenate([np.cos(half)[:, None], k[:, None] * rs], axis=1)
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    out[out[:, 0] < 0.0] *= -1.0
    return out


def quat_mul_many(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    out = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=1,
    )
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    out[out[:, 0] < 0.0] *= -1.0
    return out


def quat_conj_many(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float)
    out[:, 1:] *= -1.0
    return out


def quat_to_rotvec_many(q: np.ndarray) -> np.ndarray:
    q = np.where(q[:, :1] < 0.0, -q, q)
    s = np.linalg.norm(q[:, 1:4], axis=1)
    angle = 2.0 * np.arctan2(s, q[:, 0])
    k = np.where(s < 1e-12, 2.0, angle / np.where(s < 1e-12, 1.0, s))
    return q[:, 1:4] * k[:, None]


def rotate_vector_many(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    u = q[:, 1:4]
    t = 2.0 * np.cross(u, v)
    return v + q[:, 0:1] * t + np.cross(u, t)


@dataclass(frozen=True)
class Pose:
    """Timestamped position and unit-quaternion orientation in the world frame."""

    t: float
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if self.t < 0.0:
            raise ValueError(f"pose timestamp must be >= 0, got {self.t}")
        if p.shape != (3,) or q.shape != (4,):
            raise ValueError("pose needs a 3-vector position and 4-vector quaternion")
        if abs(np.sqrt(q @ q) - 1.0) > UNIT_TOL:
            raise ValueError("pose quaternion is not unit norm")
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


CSV_HEADER = "t,x,y,z,qw,qx,qy,qz"


class Trajectory:
    """Immutable, strictly time-ordered pose sequence with interpolation."""

    def __init__(self, ts: np.ndarray, ps: np.ndarray, qs: np.ndarray):
        ts = np.asarray(ts, dtype=float)
        ps = np.asarray(ps, dtype=float)
        qs = np.asarray(qs, dtype=float)
        if ts.ndim != 1 or len(ts) == 0:
            raise ValueError("trajectory needs at least one sample")
        if ps.shape != (len(ts), 3) or qs.shape != (len(ts), 4):
            raise ValueError("trajectory arrays have inconsistent shapes")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0.0):
            raise ValueError("trajectory timestamps must be strictly increasing")
        for a in (ts, ps, qs):
            a.flags.writeable = False
        self.ts = ts
        self.ps = ps
        self.qs = qs

    @classmethod
    def from_poses(cls, poses) -> "Trajectory":
        poses = list(poses)
        return cls(
            np.array([s.t for s in poses]),
            np.array([s.p for s in poses]),
            np.array([s.q for s in poses]),
        )

    def __len__(self) -> int:
        return len(self.ts)

    def __getitem__(self, i: int) -> Pose:
        return Pose(self.ts[i], self.ps[i], self.qs[i])

    @property
    def t_first(self) -> float:
        return float(self.ts[0])

    @property
    def t_last(self) -> float:
        return float(self.ts[-1])

    def sample_at(self, t: float) -> Pose:
        """Interpolated pose at time t; linear in position, slerp in orientation."""
        t = float(t)
        if t < self.ts[0] or t > self.ts[-1]:
            raise ValueError(
                f"t={t} outside trajectory span [{self.ts[0]}, {self.ts[-1]}]"
            )
        i = int(np.searchsorted(self.ts, t, side="right"))
        if i > 0 and self.ts[i - 1] == t:
            return self[i - 1]  # stored samples are returned bit-exact
        lo, hi = i - 1, i
        u = (t - self.ts[lo]) / (self.ts[hi] - self.ts[lo])
        p = self.ps[lo] + u * (self.ps[hi] - self.ps[lo])
        return Pose(t, p, quat_slerp(self.qs[lo], self.qs[hi], u))

    def sample_many(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized sample_at; returns (positions, quaternions)."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < self.ts[0]) or np.any(ts > self.ts[-1]):
            raise ValueError("query times outside trajectory span")
        if len(self.ts) == 1:
            return (
                np.repeat(self.ps, len(ts), axis=0),
                np.repeat(self.qs, len(ts), axis=0),
            )
        hi = np.clip(np.searchsorted(self.ts, ts, side="right"), 1, len(self.ts) - 1)
        lo = hi - 1
        u = (ts - self.ts[lo]) / (self.ts[hi] - self.ts[lo])
        ps = self.ps[lo] + u[:, None] * (self.ps[hi] - self.ps[lo])

        q0 = self.qs[lo]
        q1 = np.array(self.qs[hi])
        d = np.sum(q0 * q1, axis=1)
        q1[d < 0.0] *= -1.0
        d = np.abs(d)
        th = np.arccos(np.clip(d, -1.0, 1.0))
        near = d > 1.0 - 1e-12
        sin_th = np.where(near, 1.0, np.sin(th))
        w0 = np.where(near, 1.0 - u, np.sin((1.0 - u) * th) / sin_th)
        w1 = np.where(near, u, np.sin(u * th) / sin_th)
        qs = w0[:, None] * q0 + w1[:, None] * q1
        qs /= np.linalg.norm(qs, axis=1, keepdims=True)
        qs[qs[:, 0] < 0.0] *= -1.0

        # queries that land on stored timestamps return the stored rows bit-exact
        for idx, stored in ((lo, self.ts[lo] == ts), (hi, self.ts[hi] == ts)):
            if np.any(stored):
                ps[stored] = self.ps[idx[stored]]
                qs[stored] = self.qs[idx[stored]]
        return ps, qs

    def to_csv(self, path=None) -> str | None:
        """Serialize as `t,x,y,z,qw,qx,qy,qz` rows with 9-decimal formatting."""
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for t, p, q in zip(self.ts, self.ps, self.qs):
            buf.write(
                f"{t:.9f},{p[0]:.9f},{p[1]:.9f},{p[2]:.9f},"
                f"{q[0]:.9f},{q[1]:.9f},{q[2]:.9f},{q[3]:.9f}\n"
            )
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(
            path, delimiter=",", skiprows=1, ndmin=2, usecols=range(8)
        )
        qs = data[:, 4:8]
        qs = qs / np.linalg.norm(qs, axis=1, keepdims=True)
        return cls(data[:, 0], data[:, 1:4], qs)
