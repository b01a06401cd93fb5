"""Markerless hybrid tracking: lossy acoustic fixes bridged by VIO.

Whenever a delivered acoustic fix arrives, the anchor moves to it and the
horizontal estimate snaps to the fix; between fixes the estimate is the
anchor plus the VIO displacement since the anchor. Depth always comes from
the pressure channel and orientation always from VIO.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Pose, Trajectory
from .simworld import AcousticFix, DepthSample, SensorStreams

SOURCE_ACOUSTIC = "acoustic"
SOURCE_VIO_FILL = "vio-fill"


@dataclass(frozen=True)
class HybridState:
    """Anchor bookkeeping for the reset-and-offset fusion."""

    anchor_xy: np.ndarray | None = None  # last delivered fix
    anchor_vio_xy: np.ndarray | None = None  # VIO xy at the anchor instant
    anchor_t: float = -np.inf
    latest: Pose | None = None

    @property
    def localized(self) -> bool:
        return self.anchor_xy is not None


def hybrid_step(
    state: HybridState,
    vio: Pose,
    depth: DepthSample,
    fix: AcousticFix | None = None,
) -> tuple[HybridState, Pose | None]:
    """Advance the tracker by one VIO sample.

    Returns the new state and the pose estimate, or None while no acoustic
    fix has ever been delivered (not yet localized). An undelivered fix
    must not be passed in; skip it upstream.
    """
    if abs(vio.t - depth.t) > 1e-9:
        raise ValueError("vio and depth samples must share a timestamp")
    if vio.t < state.anchor_t:
        raise ValueError("vio sample predates the current anchor")
    if fix is not None:
        if not fix.delivered:
            raise ValueError("undelivered fixes are dropped, not applied")
        if fix.t > vio.t + 1e-9:
            raise ValueError("a fix is applied at its arrival slot, not early")

    if fix is not None:
        anchor_xy = fix.xy
        anchor_vio_xy = vio.p[:2].copy()
        anchor_t = fix.t
        xy = anchor_xy
    elif state.localized:
        anchor_xy = state.anchor_xy
        anchor_vio_xy = state.anchor_vio_xy
        anchor_t = state.anchor_t
        xy = anchor_xy + (vio.p[:2] - anchor_vio_xy)
    else:
        return state, None

    est = Pose(vio.t, np.array([xy[0], xy[1], -depth.z_depth]), vio.q)
    new = HybridState(
        anchor_xy=anchor_xy,
        anchor_vio_xy=anchor_vio_xy,
        anchor_t=anchor_t,
        latest=est,
    )
    return new, est


def run_hybrid_tracking(streams: SensorStreams) -> tuple[Trajectory, tuple]:
    """Fold hybrid_step over the time-merged streams.

    Emits one pose per VIO sample from the first delivered fix onward,
    paired with a per-sample source label ('acoustic' at reset samples,
    'vio-fill' in between). Undelivered fixes are skipped.
    """
    if not streams.vio:
        raise ValueError("hybrid tracking needs a non-empty VIO stream")
    if len(streams.depth) != len(streams.vio):
        raise ValueError("depth and VIO streams must be sampled together")

    fixes = [f for f in streams.acoustic if f.delivered]
    state = HybridState()
    ts, ps, qs, sources = [], [], [], []
    j = 0
    for vio, depth in zip(streams.vio, streams.depth):
        fix = None
        if j < len(fixes) and fixes[j].t <= vio.t + 1e-12:
            fix = fixes[j]
            j += 1
        state, est = hybrid_step(state, vio, depth, fix)
        if est is None:
            continue
        ts.append(est.t)
        ps.append(est.p)
        qs.append(est.q)
        sources.append(SOURCE_ACOUSTIC if fix is not None else SOURCE_VIO_FILL)
    if not ts:
        raise ValueError("no acoustic fix was ever delivered; never localized")
    return (
        Trajectory(np.array(ts), np.array(ps), np.array(qs)),
        tuple(sources),
    )
