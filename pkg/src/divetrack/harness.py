"""Run evaluation, deterministic run logging, and vector-graphic plots.

Summaries report positions in millimeters and orientations in degrees;
all CSV files stay in SI units with fixed 9-decimal formatting so that a
repeated run writes byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import CSV_HEADER, Trajectory, quat_conj_many, quat_mul_many, quat_to_rotvec_many
from .eskf import ImuSample
from .simworld import (
    AcousticFix,
    DepthSample,
    MarkerObservation,
    Rates,
    Scenario,
    SensorStreams,
    load_scenario,
    save_scenario,
)

MIN_OVERLAP = 1.0  # s of common time span required for an evaluation


@dataclass(frozen=True)
class ContinuityStats:
    """Error at delivered-fix instants vs. midway between fixes, in mm."""

    err_at_fixes_mm: float
    err_at_midpoints_mm: float
    max_at_midpoints_mm: float
    n_gaps: int


@dataclass(frozen=True)
class RunMetrics:
    """Aggregate comparison of an estimate against the truth trajectory."""

    mean_pos_err_mm: float
    p50_pos_err_mm: float
    p90_pos_err_mm: float
    p99_pos_err_mm: float
    max_pos_err_mm: float
    mean_ori_err_deg: float
    max_ori_err_deg: float
    max_step_mm: float
    rate_hz: float
    n_samples: int
    rejections: int | None = None
    losses: int | None = None
    continuity: ContinuityStats | None = None
    # per-frame series; kept out of the JSON summary
    t: np.ndarray | None = None
    pos_err_m: np.ndarray | None = None
    ori_err_deg: np.ndarray | None = None


def evaluate(
    est: Trajectory,
    truth: Trajectory,
    fix_times=None,
    rejections: int | None = None,
    losses: int | None = None,
) -> RunMetrics:
    """Per-frame and aggregate error statistics over the overlapping span."""
    t0 = max(est.t_first, truth.t_first)
    t1 = min(est.t_last, truth.t_last)
    if t1 - t0 < MIN_OVERLAP - 1e-9:
        raise ValueError(
            f"estimate and truth overlap for {max(t1 - t0, 0.0):.3f}s; "
            f"need at least {MIN_OVERLAP}s"
        )
    sel = (est.ts >= t0) & (est.ts <= t1)
    ts = est.ts[sel]
    true_p, true_q = truth.sample_many(ts)
    pos_err = np.linalg.norm(est.ps[sel] - true_p, axis=1)
    rel = quat_mul_many(quat_conj_many(true_q), est.qs[sel])
    ori_err = np.degrees(np.linalg.norm(quat_to_rotvec_many(rel), axis=1))
    steps = np.linalg.norm(np.diff(est.ps[sel], axis=0), axis=1)

    continuity = None
    if fix_times is not None and len(fix_times) >= 2:
        fix_times = np.asarray(fix_times, dtype=float)
        fix_times = fix_times[(fix_times >= ts[0]) & (fix_times <= ts[-1])]
        if len(fix_times) >= 2:
            mids = 0.5 * (fix_times[:-1] + fix_times[1:])
            at_fix = pos_err[np.searchsorted(ts, fix_times)]
            at_mid = pos_err[np.searchsorted(ts, mids)]
            continuity = ContinuityStats(
                err_at_fixes_mm=float(at_fix.mean() * 1e3),
                err_at_midpoints_mm=float(at_mid.mean() * 1e3),
                max_at_midpoints_mm=float(at_mid.max() * 1e3),
                n_gaps=len(mids),
            )

    p50, p90, p99 = np.percentile(pos_err, [50.0, 90.0, 99.0])
    return RunMetrics(
        mean_pos_err_mm=float(pos_err.mean() * 1e3),
        p50_pos_err_mm=float(p50 * 1e3),
        p90_pos_err_mm=float(p90 * 1e3),
        p99_pos_err_mm=float(p99 * 1e3),
        max_pos_err_mm=float(pos_err.max() * 1e3),
        mean_ori_err_deg=float(ori_err.mean()),
        max_ori_err_deg=float(ori_err.max()),
        max_step_mm=float(steps.max() * 1e3) if len(steps) else 0.0,
        rate_hz=float((len(ts) - 1) / (ts[-1] - ts[0])) if len(ts) > 1 else 0.0,
        n_samples=int(len(ts)),
        rejections=rejections,
        losses=losses,
        continuity=continuity,
        t=ts,
        pos_err_m=pos_err,
        ori_err_deg=ori_err,
    )


def metrics_to_dict(m: RunMetrics) -> dict:
    d = asdict(m)
    for series in ("t", "pos_err_m", "ori_err_deg"):
        d.pop(series)
    return d


def metrics_from_dict(d: dict) -> RunMetrics:
    d = dict(d)
    cont = d.pop("continuity", None)
    return RunMetrics(
        **d, continuity=ContinuityStats(**cont) if cont is not None else None
    )


# ---------------------------------------------------------------------------
# run logging


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_trajectory_csv(traj: Trajectory, path, sources=None) -> None:
    header = CSV_HEADER + (",source" if sources is not None else "")

    def rows():
        for i, (t, p, q) in enumerate(zip(traj.ts, traj.ps, traj.qs)):
            row = [_fmt(t), *map(_fmt, p), *map(_fmt, q)]
            if sources is not None:
                row.append(sources[i])
            yield row

    _write_rows(Path(path), header, rows())


def write_streams_csv(streams: SensorStreams, out_dir: Path) -> None:
    _write_rows(
        out_dir / "imu.csv",
        "t,ax,ay,az,wx,wy,wz",
        ([_fmt(s.t), *map(_fmt, s.a_m), *map(_fmt, s.w_m)] for s in streams.imu),
    )
    _write_rows(
        out_dir / "markers.csv",
        "t,marker_id,px,py,pz,qw,qx,qy,qz,detected",
        (
            [_fmt(o.t), str(o.marker_id), *map(_fmt, o.p), *map(_fmt, o.q),
             str(int(o.detected))]
            for o in streams.markers
        ),
    )
    _write_rows(
        out_dir / "acoustic.csv",
        "t,x,y,delivered",
        ([_fmt(f.t), _fmt(f.x), _fmt(f.y), str(int(f.delivered))] for f in streams.acoustic),
    )
    _write_rows(
        out_dir / "depth.csv",
        "t,z_depth",
        ([_fmt(d.t), _fmt(d.z_depth)] for d in streams.depth),
    )
    _write_rows(
        out_dir / "vio.csv",
        CSV_HEADER,
        ([_fmt(p.t), *map(_fmt, p.p), *map(_fmt, p.q)] for p in streams.vio),
    )


def write_run_log(
    streams: SensorStreams,
    est: Trajectory | None,
    metrics: RunMetrics | None,
    path,
    truth: Trajectory | None = None,
    scenario: Scenario | None = None,
    sources=None,
) -> Path:
    """Write one run directory with fixed file names and formatting."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    write_streams_csv(streams, out)
    if truth is not None:
        write_trajectory_csv(truth, out / "truth.csv")
    if est is not None:
        write_trajectory_csv(est, out / "estimate.csv", sources=sources)
    if metrics is not None:
        save_metrics(metrics, out / "metrics.json")
        if metrics.t is not None:
            _write_rows(
                out / "errors.csv",
                "t,pos_err,ori_err_deg",
                (
                    [_fmt(t), _fmt(pe), _fmt(oe)]
                    for t, pe, oe in zip(metrics.t, metrics.pos_err_m, metrics.ori_err_deg)
                ),
            )
    if scenario is not None:
        save_scenario(scenario, out / "scenario.yaml")
    return out


def save_metrics(metrics: RunMetrics, path) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(metrics_to_dict(metrics), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_metrics(path) -> RunMetrics:
    with open(path) as fh:
        return metrics_from_dict(json.load(fh))


def _load_rows(path: Path) -> np.ndarray:
    with open(path) as fh:
        fh.readline()
        if not fh.readline():
            return np.empty((0, 0))
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def read_streams(run_dir) -> SensorStreams:
    """Rebuild SensorStreams from a run directory (rates from scenario.yaml)."""
    run_dir = Path(run_dir)
    scenario = load_scenario(run_dir / "scenario.yaml")
    imu_rows = _load_rows(run_dir / "imu.csv")
    marker_rows = _load_rows(run_dir / "markers.csv")
    acoustic_rows = _load_rows(run_dir / "acoustic.csv")
    depth_rows = _load_rows(run_dir / "depth.csv")
    vio = Trajectory.from_csv(run_dir / "vio.csv")
    from .core import Pose

    return SensorStreams(
        imu=tuple(ImuSample(r[0], r[1:4], r[4:7]) for r in imu_rows if imu_rows.size),
        markers=tuple(
            MarkerObservation(r[0], int(r[1]), r[2:5], r[5:9] / np.linalg.norm(r[5:9]),
                              bool(r[9]))
            for r in marker_rows
            if marker_rows.size
        ),
        acoustic=tuple(
            AcousticFix(r[0], r[1], r[2], bool(r[3]))
            for r in acoustic_rows
            if acoustic_rows.size
        ),
        depth=tuple(DepthSample(r[0], r[1]) for r in depth_rows if depth_rows.size),
        vio=tuple(Pose(t, p, q) for t, p, q in zip(vio.ts, vio.ps, vio.qs)),
        rates=Rates(
            imu=scenario.sensors.imu_rate,
            camera=scenario.sensors.camera_rate,
            acoustic=scenario.sensors.acoustic_rate,
            vio=scenario.sensors.vio_rate,
        ),
    )


# ---------------------------------------------------------------------------
# plots


def _pyplot():
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "divetrack"
    import matplotlib.pyplot as plt

    return plt


def plot_trajectory(
    est: Trajectory,
    truth: Trajectory,
    fixes=(),
    path="trajectory.svg",
    title="top-down trajectory",
):
    """Top-down overlay: dashed truth, estimate polyline, time-colored fixes."""
    if len(est) == 0 or len(truth) == 0:
        raise ValueError("plot needs non-empty trajectories")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 7))
    ax.plot(truth.ps[:, 0], truth.ps[:, 1], "r--", lw=1.2, label="truth")
    ax.plot(est.ps[:, 0], est.ps[:, 1], "k-", lw=0.9, label="estimate")
    delivered = [f for f in fixes if f.delivered]
    if delivered:
        fx = np.array([[f.t, f.x, f.y] for f in delivered])
        ax.plot(fx[:, 1], fx[:, 2], "b-", lw=0.6, alpha=0.6, label="fix-to-fix")
        sc = ax.scatter(
            fx[:, 1], fx[:, 2], c=fx[:, 0], cmap="viridis", s=14, zorder=3,
            label="acoustic fixes",
        )
        fig.colorbar(sc, ax=ax, label="time [s] (viridis, monotone)")
    ax.set_xlabel("x east [m]")
    ax.set_ylabel("y north [m]")
    ax.set_title(title)
    ax.legend(loc="best")
    ax.set_aspect("equal")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def plot_timeseries(series: dict, path="timeseries.svg", ylabel="value", title=""):
    """Labeled {t, value} sets; third tuple element 'points' plots markers."""
    if not series:
        raise ValueError("plot needs at least one series")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(9, 4))
    for label, data in series.items():
        t, v = np.asarray(data[0]), np.asarray(data[1])
        style = data[2] if len(data) > 2 else "line"
        if style == "points":
            ax.plot(t, v, "o", ms=4, label=label)
        else:
            ax.plot(t, v, lw=1.0, label=label)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)
