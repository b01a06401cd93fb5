"""Error-state extended Kalman filter over a 15-dimensional state.

The nominal state (position, velocity, orientation quaternion, accel bias,
gyro bias) is integrated from IMU samples with a first-order Euler step;
the error state (delta-p, delta-v, delta-theta, delta-ba, delta-bg) carries
the covariance and is corrected by 6-DOF pose measurements. The transition
Jacobian is the exact linearization of the implemented propagation, so it
also passes finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .core import (
    GRAVITY,
    quat_conj,
    quat_from_rotvec,
    quat_mul,
    quat_to_matrix,
    quat_to_rotvec,
)

MAX_PREDICT_DT = 0.1  # larger gaps signal dropped samples; the caller decides

# default innovation gate: chi-square 0.999 quantile, 6 degrees of freedom
GATE_CHI2_999 = float(chi2.ppf(0.999, df=6))


def _vec3(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    return v


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def _so3_right_jacobian(phi: np.ndarray) -> np.ndarray:
    th = np.linalg.norm(phi)
    K = _skew(phi)
    if th < 1e-6:
        return np.eye(3) - 0.5 * K + (K @ K) / 6.0
    return (
        np.eye(3)
        - (1.0 - np.cos(th)) / th**2 * K
        + (th - np.sin(th)) / th**3 * (K @ K)
    )


@dataclass(frozen=True)
class ImuSample:
    """One accelerometer/gyroscope reading in the body frame."""

    t: float
    a_m: np.ndarray  # specific force, m/s^2
    w_m: np.ndarray  # angular rate, rad/s

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        a = _vec3(self.a_m, "a_m")
        w = _vec3(self.w_m, "w_m")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(w))):
            raise ValueError("IMU sample has non-finite components")
        object.__setattr__(self, "a_m", a)
        object.__setattr__(self, "w_m", w)


@dataclass(frozen=True)
class PoseMeasurement:
    """World-frame 6-DOF pose with a 6x6 covariance.

    Covariance ordering is [position (m^2) | rotation vector (rad^2)].
    """

    t: float
    p_meas: np.ndarray
    q_meas: np.ndarray
    R_meas: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        p = _vec3(self.p_meas, "p_meas")
        q = np.asarray(self.q_meas, dtype=float)
        R = np.asarray(self.R_meas, dtype=float)
        if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise ValueError("q_meas must be a unit quaternion")
        if R.shape != (6, 6):
            raise ValueError("R_meas must be 6x6")
        if np.max(np.abs(R - R.T)) > 1e-9:
            raise ValueError("R_meas must be symmetric")
        diag = R.diagonal()
        off_diagonal = np.any(R != np.diag(diag))
        low = np.linalg.eigvalsh(R).min() if off_diagonal else diag.min()
        if low < -1e-12:
            raise ValueError("R_meas must be positive semidefinite")
        object.__setattr__(self, "p_meas", p)
        object.__setattr__(self, "q_meas", q)
        object.__setattr__(self, "R_meas", R)


def _default_p0() -> np.ndarray:
    return np.concatenate(
        [
            np.full(3, 0.1**2),  # position, m^2
            np.full(3, 0.5**2),  # velocity, (m/s)^2
            np.full(3, np.deg2rad(5.0) ** 2),  # orientation, rad^2
            np.full(3, 0.1**2),  # accel bias
            np.full(3, 0.01**2),  # gyro bias
        ]
    )


@dataclass(frozen=True)
class FilterParams:
    """Gravity, continuous-time noise densities and initial covariance."""

    g: np.ndarray = GRAVITY
    sigma_a: float = 0.05  # accel white noise, m/s^2/sqrt(Hz)
    sigma_g: float = 0.002  # gyro white noise, rad/s/sqrt(Hz)
    sigma_ba: float = 1e-4  # accel bias random walk
    sigma_bg: float = 1e-5  # gyro bias random walk
    p0_diag: np.ndarray = field(default_factory=_default_p0)
    gate: float = GATE_CHI2_999

    def __post_init__(self):
        object.__setattr__(self, "g", _vec3(self.g, "g"))
        p0 = np.asarray(self.p0_diag, dtype=float)
        if p0.shape != (15,):
            raise ValueError("p0_diag must have 15 entries")
        object.__setattr__(self, "p0_diag", p0)
        for name in ("sigma_a", "sigma_g", "sigma_ba", "sigma_bg"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class EskfState:
    """Nominal state plus error-state covariance at time t."""

    t: float
    p: np.ndarray
    v: np.ndarray
    q: np.ndarray
    ba: np.ndarray
    bg: np.ndarray
    P: np.ndarray


def init_from_pose(z: PoseMeasurement, params: FilterParams) -> EskfState:
    """Start the filter at the first accepted pose measurement."""
    return EskfState(
        t=z.t,
        p=z.p_meas,
        v=np.zeros(3),
        q=z.q_meas,
        ba=np.zeros(3),
        bg=np.zeros(3),
        P=np.diag(params.p0_diag),
    )


def predict(state: EskfState, imu: ImuSample, params: FilterParams) -> EskfState:
    """Propagate nominal state and covariance through one IMU sample."""
    dt = imu.t - state.t
    if dt <= 0.0:
        raise ValueError(f"IMU timestamp {imu.t} is not after state time {state.t}")
    if dt > MAX_PREDICT_DT:
        raise ValueError(f"IMU gap dt={dt:.4f}s exceeds {MAX_PREDICT_DT}s cap")

    R = quat_to_matrix(state.q)
    a = imu.a_m - state.ba
    w = imu.w_m - state.bg
    a_world = R @ a + params.g

    p = state.p + state.v * dt + 0.5 * a_world * dt * dt
    v = state.v + a_world * dt
    q = quat_mul(state.q, quat_from_rotvec(w * dt))

    F = transition_matrix(state, imu)

    Q = np.zeros((15, 15))
    Q[3:6, 3:6] = np.eye(3) * params.sigma_a**2 * dt
    Q[6:9, 6:9] = np.eye(3) * params.sigma_g**2 * dt
    Q[9:12, 9:12] = np.eye(3) * params.sigma_ba**2 * dt
    Q[12:15, 12:15] = np.eye(3) * params.sigma_bg**2 * dt

    P = F @ state.P @ F.T + Q
    P = 0.5 * (P + P.T)
    return EskfState(t=imu.t, p=p, v=v, q=q, ba=state.ba, bg=state.bg, P=P)


def transition_matrix(state: EskfState, imu: ImuSample) -> np.ndarray:
    """Error-state transition F: the exact Jacobian of the nominal Euler step."""
    dt = imu.t - state.t
    R = quat_to_matrix(state.q)
    Ra = R @ _skew(imu.a_m - state.ba)
    phi = (imu.w_m - state.bg) * dt
    F = np.eye(15)
    F[0:3, 3:6] = np.eye(3) * dt
    F[0:3, 6:9] = -0.5 * Ra * dt * dt
    F[0:3, 9:12] = -0.5 * R * dt * dt
    F[3:6, 6:9] = -Ra * dt
    F[3:6, 9:12] = -R * dt
    F[6:9, 6:9] = quat_to_matrix(quat_from_rotvec(phi)).T
    F[6:9, 12:15] = -_so3_right_jacobian(phi) * dt
    return F


_H_IDX = np.array([0, 1, 2, 6, 7, 8])  # measurement selects delta-p and delta-theta


def update_pose(
    state: EskfState, z: PoseMeasurement, gate: float | None = GATE_CHI2_999
) -> tuple[EskfState, bool]:
    """Correct the state with a pose measurement.

    Returns the posterior state and an acceptance flag; a measurement whose
    squared Mahalanobis distance exceeds ``gate`` is rejected and the state
    is returned unchanged.
    """
    y = np.concatenate(
        [
            z.p_meas - state.p,
            quat_to_rotvec(quat_mul(quat_conj(state.q), z.q_meas)),
        ]
    )
    PHt = state.P[:, _H_IDX]
    S = PHt[_H_IDX, :] + z.R_meas
    solved = np.linalg.solve(S, np.concatenate([y[:, None], PHt.T], axis=1))
    if gate is not None and float(y @ solved[:, 0]) > gate:
        return state, False
    K = solved[:, 1:].T
    dx = K @ y

    A = np.eye(15)
    A[:, _H_IDX] -= K
    P = A @ state.P @ A.T + K @ z.R_meas @ K.T
    P = 0.5 * (P + P.T)

    # error reset with identity reset Jacobian (small-angle assumption)
    return (
        EskfState(
            t=state.t,
            p=state.p + dx[0:3],
            v=state.v + dx[3:6],
            q=quat_mul(state.q, quat_from_rotvec(dx[6:9])),
            ba=state.ba + dx[9:12],
            bg=state.bg + dx[12:15],
            P=P,
        ),
        True,
    )


@dataclass(frozen=True)
class StaticNoiseEstimate:
    """Per-axis biases and noise densities measured from a no-motion log."""

    accel_bias: np.ndarray
    gyro_bias: np.ndarray
    sigma_a: np.ndarray  # m/s^2/sqrt(Hz), per axis
    sigma_g: np.ndarray  # rad/s/sqrt(Hz), per axis


def estimate_static_noise(
    log, g=GRAVITY, min_duration: float = 10.0
) -> StaticNoiseEstimate:
    """Calibrate IMU noise from a log recorded with the device at rest.

    The device is assumed level, so the expected specific force is the
    gravity reaction -g. Sample standard deviations are scaled by sqrt(dt)
    into continuous-time noise densities.
    """
    log = list(log)
    if len(log) < 2:
        raise ValueError("log too short")
    ts = np.array([s.t for s in log])
    if ts[-1] - ts[0] < min_duration:
        raise ValueError(
            f"log too short: {ts[-1] - ts[0]:.2f}s < {min_duration}s required"
        )
    dts = np.diff(ts)
    dt = float(np.mean(dts))
    if np.max(np.abs(dts - dt)) > 0.1 * dt:
        raise ValueError("sampling jitter exceeds 10% of the nominal period")

    acc = np.array([s.a_m for s in log])
    gyr = np.array([s.w_m for s in log])
    gravity_reaction = -_vec3(g, "g")
    accel_bias = acc.mean(axis=0) - gravity_reaction
    gyro_bias = gyr.mean(axis=0)
    sqrt_dt = np.sqrt(dt)
    return StaticNoiseEstimate(
        accel_bias=accel_bias,
        gyro_bias=gyro_bias,
        sigma_a=acc.std(axis=0, ddof=1) * sqrt_dt,
        sigma_g=gyr.std(axis=0, ddof=1) * sqrt_dt,
    )
