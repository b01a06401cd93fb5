"""Command-line front end: simulate, track, evaluate, reproduce."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .core import Trajectory
from .eskf import FilterParams
from .hybrid_tracker import run_hybrid_tracking
from .marker_tracker import MarkerMap, run_marker_tracking
from .simworld import (
    PRESETS,
    SCENARIO_KEY_DOCS,
    Scenario,
    load_scenario,
    preset,
    simulate,
)


def resolve_scenario(name_or_path: str, seed: int | None = None) -> Scenario:
    if name_or_path in PRESETS:
        sc = preset(name_or_path)
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise FileNotFoundError(
                f"'{name_or_path}' is neither a preset {sorted(PRESETS)} nor a file"
            )
        sc = load_scenario(path)
    if seed is not None:
        sc = replace(sc, seed=seed)
    return sc


def filter_params_for(scenario: Scenario) -> FilterParams:
    imu = scenario.sensors.imu
    return FilterParams(
        sigma_a=max(imu.sigma_a, 1e-3), sigma_g=max(imu.sigma_g, 1e-4)
    )


def track_marker(scenario: Scenario, streams, mode: str):
    rejections: list = []
    est = run_marker_tracking(
        streams,
        MarkerMap.from_grid(scenario.marker_grid),
        params=filter_params_for(scenario),
        mode=mode,
        meas_noise=scenario.sensors.marker,
        rejections=rejections,
    )
    return est, len(rejections)


def _print_metrics(m) -> None:
    line = (
        f"pos_err_mm mean={m.mean_pos_err_mm:.2f} p50={m.p50_pos_err_mm:.2f} "
        f"p90={m.p90_pos_err_mm:.2f} p99={m.p99_pos_err_mm:.2f} "
        f"max={m.max_pos_err_mm:.2f} | ori_err_deg mean={m.mean_ori_err_deg:.3f} "
        f"max={m.max_ori_err_deg:.3f} | rate_hz={m.rate_hz:.2f} n={m.n_samples}"
    )
    if m.rejections is not None:
        line += f" rejections={m.rejections}"
    if m.losses is not None:
        line += f" losses={m.losses}"
    print(line)
    if m.continuity is not None:
        c = m.continuity
        print(
            f"continuity: err_at_fixes_mm={c.err_at_fixes_mm:.1f} "
            f"err_at_midpoints_mm={c.err_at_midpoints_mm:.1f} "
            f"max_at_midpoints_mm={c.max_at_midpoints_mm:.1f} gaps={c.n_gaps}"
        )


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    sc = resolve_scenario(args.scenario, args.seed)
    truth, streams = simulate(sc)
    out = harness.write_run_log(
        streams, est=None, metrics=None, path=args.out, truth=truth, scenario=sc
    )
    print(f"wrote {out} ({len(truth)} truth samples, {len(streams.imu)} imu samples)")
    return 0


def cmd_track(args) -> int:
    run_dir = Path(args.in_dir)
    sc = load_scenario(run_dir / "scenario.yaml")
    streams = harness.read_streams(run_dir)
    out_dir = Path(args.out) if args.out else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.tracker == "marker":
        est, n_rej = track_marker(sc, streams, args.mode)
        harness.write_trajectory_csv(est, out_dir / "estimate.csv")
        print(f"wrote {out_dir / 'estimate.csv'} ({len(est)} samples, mode={args.mode}, "
              f"rejections={n_rej})")
    else:
        est, sources = run_hybrid_tracking(streams)
        harness.write_trajectory_csv(est, out_dir / "estimate.csv", sources=sources)
        print(f"wrote {out_dir / 'estimate.csv'} ({len(est)} samples)")
    return 0


def cmd_evaluate(args) -> int:
    run_dir = Path(args.in_dir)
    truth = Trajectory.from_csv(run_dir / "truth.csv")
    est_path = run_dir / "estimate.csv"
    est = Trajectory.from_csv(est_path)

    fix_times = None
    losses = None
    with open(est_path) as fh:
        hybrid = fh.readline().strip().endswith(",source")
    acoustic_path = run_dir / "acoustic.csv"
    if acoustic_path.exists():
        rows = np.loadtxt(acoustic_path, delimiter=",", skiprows=1, ndmin=2)
        if rows.size:
            losses = int((rows[:, 3] == 0).sum())
            if hybrid:
                fix_times = rows[rows[:, 3] == 1, 0]

    metrics = harness.evaluate(est, truth, fix_times=fix_times, losses=losses)
    harness.save_metrics(metrics, run_dir / "metrics.json")
    _print_metrics(metrics)
    print(f"wrote {run_dir / 'metrics.json'}")
    return 0


def reproduce_marker_lab(out_dir: Path, n_seeds: int) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    plots_done = False
    for seed in range(n_seeds):
        sc = replace(preset("marker-lab"), seed=seed)
        truth, streams = simulate(sc)
        raw, _ = track_marker(sc, streams, "raw")
        fused, _ = track_marker(sc, streams, "fused")
        m_raw = harness.evaluate(raw, truth)
        m_fused = harness.evaluate(fused, truth)
        rows.append(
            {
                "seed": seed,
                "raw_pos_mm": m_raw.mean_pos_err_mm,
                "raw_ori_deg": m_raw.mean_ori_err_deg,
                "fused_pos_mm": m_fused.mean_pos_err_mm,
                "fused_ori_deg": m_fused.mean_ori_err_deg,
            }
        )
        if not plots_done:
            harness.plot_trajectory(
                raw, truth, path=out_dir / "marker-raw.svg",
                title="detector-only trajectory (seed 0)",
            )
            harness.plot_trajectory(
                fused, truth, path=out_dir / "marker-fused.svg",
                title="fused trajectory (seed 0)",
            )
            plots_done = True
    summary = {
        "preset": "marker-lab",
        "seeds": n_seeds,
        "raw": {
            "mean_pos_err_mm": float(np.mean([r["raw_pos_mm"] for r in rows])),
            "mean_ori_err_deg": float(np.mean([r["raw_ori_deg"] for r in rows])),
        },
        "fused": {
            "mean_pos_err_mm": float(np.mean([r["fused_pos_mm"] for r in rows])),
            "mean_ori_err_deg": float(np.mean([r["fused_ori_deg"] for r in rows])),
        },
        "per_seed": rows,
    }
    with open(out_dir / "summary.json", "w", newline="") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _near_segment_mask(xy, a, b, tol=1.5):
    ab = b - a
    tt = np.clip((xy - a) @ ab / (ab @ ab), 0.0, 1.0)
    proj = a + tt[:, None] * ab
    return np.linalg.norm(xy - proj, axis=1) < tol


def reproduce_baiae(out_dir: Path) -> dict:
    from .simworld import world_vertices

    out_dir.mkdir(parents=True, exist_ok=True)
    sc = preset("baiae-square")
    truth, streams = simulate(sc)
    est, sources = run_hybrid_tracking(streams)
    fixes = [f for f in streams.acoustic if f.delivered]
    losses = sum(1 for f in streams.acoustic if not f.delivered)
    metrics = harness.evaluate(
        est, truth, fix_times=[f.t for f in fixes], losses=losses
    )
    harness.write_run_log(
        streams, est, metrics, out_dir / "run", truth=truth, scenario=sc,
        sources=sources,
    )
    harness.plot_trajectory(
        est, truth, fixes=streams.acoustic, path=out_dir / "course-xy.svg",
        title="hybrid tracking vs. ground truth",
    )
    # y coordinate over the C-D side, per lap
    wv = world_vertices(sc)
    mask_truth = _near_segment_mask(truth.ps[:, :2], wv[2], wv[3])
    est_truth_p, _ = truth.sample_many(est.ts)
    mask_est = _near_segment_mask(est_truth_p[:, :2], wv[2], wv[3])
    fix_sel = [
        f for f in fixes
        if _near_segment_mask(np.array([[f.x, f.y]]), wv[2], wv[3])[0]
    ]
    series = {
        "hybrid estimate y": (est.ts[mask_est], est.ps[mask_est, 1]),
        "truth y": (truth.ts[mask_truth], truth.ps[mask_truth, 1]),
        "acoustic fixes y": (
            np.array([f.t for f in fix_sel]),
            np.array([f.y for f in fix_sel]),
            "points",
        ),
    }
    harness.plot_timeseries(
        series, path=out_dir / "cd-side-y.svg", ylabel="y north [m]",
        title="y coordinate along the C-D side",
    )
    return {"metrics": harness.metrics_to_dict(metrics), "out": str(out_dir)}


def cmd_reproduce(args) -> int:
    out_dir = Path(args.out)
    if args.preset == "marker-lab":
        summary = reproduce_marker_lab(out_dir, args.seeds)
        raw, fused = summary["raw"], summary["fused"]
        print(
            f"marker-lab over {args.seeds} seeds: "
            f"raw {raw['mean_pos_err_mm']:.1f} mm / {raw['mean_ori_err_deg']:.2f} deg, "
            f"fused {fused['mean_pos_err_mm']:.1f} mm / {fused['mean_ori_err_deg']:.2f} deg"
        )
    else:
        result = reproduce_baiae(out_dir)
        m = harness.metrics_from_dict(result["metrics"])
        _print_metrics(m)
    print(f"wrote {out_dir}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    scenario_help = "\n".join(f"  {k}: {v}" for k, v in SCENARIO_KEY_DOCS.items())
    parser = argparse.ArgumentParser(
        prog="divetrack",
        description="Deterministic underwater tracking simulator and evaluator.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser(
        "simulate",
        help="synthesize sensor streams for a scenario",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="scenario file keys:\n" + scenario_help,
    )
    p_sim.add_argument("scenario", help=f"preset {sorted(PRESETS)} or a YAML scenario file")
    p_sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_sim.add_argument("--out", required=True, help="output run directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_track = sub.add_parser("track", help="run a tracker over a simulated run directory")
    p_track.add_argument("tracker", choices=["marker", "hybrid"])
    p_track.add_argument("--in", dest="in_dir", required=True, help="run directory from 'simulate'")
    p_track.add_argument("--mode", choices=["raw", "fused"], default="fused",
                         help="marker tracker mode (ignored for hybrid)")
    p_track.add_argument("--out", default=None, help="directory for estimate.csv (default: --in)")
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("evaluate", help="compare estimate.csv against truth.csv")
    p_eval.add_argument("--in", dest="in_dir", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_rep = sub.add_parser("reproduce", help="run a bundled end-to-end study")
    p_rep.add_argument("preset", choices=sorted(PRESETS))
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--seeds", type=int, default=20,
                       help="number of seeds for marker-lab (default 20)")
    p_rep.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single machine-readable error line
        print(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
