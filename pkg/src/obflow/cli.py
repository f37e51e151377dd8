"""Command-line driver: simulate, monitor stored snapshots, calibrate constants.

Exit codes: 0 success, 1 configuration error, 2 blow-up termination (the
report is still written, so scripted sweeps can tell "solver failed" from
"solution escaped").
"""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from . import config as cfgmod
from . import monitor as mon
from . import storage, synth
from .config import ConfigError, RunConfig
from .dynamics import REASON_COMPLETED, TrajectoryRecorder, run
from .monitor import (
    CalibrationProvenance,
    CalibratedConstants,
    PairValidationError,
    TrajectoryError,
)


def _calibration_provenance(cfg: RunConfig, grid) -> CalibrationProvenance:
    _, seed, count = cfg.calibration
    return CalibrationProvenance(
        method="empirical-max",
        seed=seed,
        family_size=count,
        safety=1.5,
        grid=(grid.dim, grid.n, grid.length),
    )


def _constants_for(cfg: RunConfig, grid, pairs) -> dict:
    """Per-pair constants: calibrated fresh from a seeded family, or from file."""
    if cfg.calibration[0] == "file":
        doc = storage.read_json_document(cfg.calibration[1])
        loaded = {}
        for entry in doc["pairs"]:
            constants = CalibratedConstants.from_dict(entry)
            loaded[(constants.pair.r, constants.pair.s)] = constants
        out = {}
        for pair in pairs:
            key = (pair.r, pair.s)
            if key not in loaded:
                raise ConfigError(
                    f"[monitor] calibration: file has no constants for pair"
                    f" ({pair.r}, {pair.s})"
                )
            out[key] = loaded[key]
        return out
    _, seed, count = cfg.calibration
    family = synth.calibration_family(grid, count, seed)
    provenance = _calibration_provenance(cfg, grid)
    return {
        (pair.r, pair.s): mon.calibrate(
            family, pair, eps_values=cfg.eps_list, provenance=provenance
        )
        for pair in pairs
    }


def _write_pair_outputs(outdir: Path, report: mon.MonitorReport) -> None:
    pair = report.pair
    r_tag = "inf" if pair.r == float("inf") else format(pair.r, "g")
    tag = f"r{r_tag}_s{pair.s:g}".replace(".", "p")
    from .norms import TimeSeries

    ks = TimeSeries.from_times(report.k_times, report.k_values)
    storage.export_timeseries(ks, outdir / f"k_series_{tag}.csv")
    storage.export_envelope(report.envelope_u, outdir / f"envelope_u_{tag}.csv")
    storage.export_envelope(report.envelope_theta, outdir / f"envelope_theta_{tag}.csv")
    storage.export_envelope(report.envelope_phi, outdir / f"envelope_phi_{tag}.csv")


def _build_document(cfg: RunConfig, termination: dict, reports, constants) -> dict:
    return {
        "format": "obflow-report",
        "version": 1,
        "config_hash": cfg.config_hash,
        "grid": {"dim": cfg.grid_dim, "n": cfg.grid_n, "L": cfg.grid_length},
        "physics": {
            "mu": cfg.mu,
            "kappa1": cfg.kappa1,
            "kappa2": cfg.kappa2,
            "alpha": cfg.alpha,
            "g": list(cfg.gravity),
        },
        "termination": termination,
        "calibration": {
            "mode": list(cfg.calibration),
            "provenance": (
                next(iter(constants.values())).provenance.to_dict() if constants else None
            ),
        },
        "pairs": [mon.report_to_dict(r) for r in reports],
    }


def _analyze(cfg: RunConfig, grid, trajectory, params, forcing, constants):
    reports = []
    for pair in cfgmod.build_pairs(cfg):
        reports.append(
            mon.build_report(
                trajectory,
                pair,
                constants[(pair.r, pair.s)],
                params,
                forcing,
                eps_values=cfg.eps_list,
                delta_values=cfg.delta_list,
            )
        )
    return reports


def cmd_simulate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.initial_seed = args.seed
    grid = cfgmod.build_grid(cfg)
    params = cfgmod.build_params(cfg)
    forcing = cfgmod.build_forcing(cfg, grid)
    initial = cfgmod.build_initial(cfg, grid)
    pairs = cfgmod.build_pairs(cfg)
    constants = _constants_for(cfg, grid, pairs)

    outdir = Path(cfg.output_dir)
    snapdir = outdir / "snapshots"
    snapdir.mkdir(parents=True, exist_ok=True)

    recorder = TrajectoryRecorder()
    counter = {"n": 0}

    def observer(state) -> None:
        recorder(state)
        storage.write_snapshot(state, snapdir / f"snap_{counter['n']:06d}.obrg")
        counter["n"] += 1

    result = run(
        initial,
        params,
        forcing,
        cfg.T,
        observer=observer,
        options=cfgmod.build_solver_options(cfg),
    )

    termination = {
        "reason": result.reason,
        "steps": result.steps,
        "final_t": result.state.t,
        "last_finite": result.last_finite,
    }
    reports = []
    if len(recorder.states) >= 3:
        reports = _analyze(cfg, grid, recorder.states, params, forcing, constants)
        for report in reports:
            _write_pair_outputs(outdir, report)
    doc = _build_document(cfg, termination, reports, constants)
    storage.write_json_document(doc, outdir / "report.json")
    return 0 if result.reason == REASON_COMPLETED else 2


def cmd_monitor(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    paths = sorted(glob.glob(args.snapshots))
    if len(paths) < 3:
        raise TrajectoryError(
            f"insufficient snapshots: need at least 3, matched {len(paths)}"
        )
    states = [storage.read_snapshot(p) for p in paths]
    grids = {s.grid for s in states}
    if len(grids) != 1:
        raise TrajectoryError(f"grid mismatch across frames: {sorted(map(str, grids))}")
    times = [s.t for s in states]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise TrajectoryError(f"non-monotone snapshot times: {times}")

    grid = states[0].grid
    params = cfgmod.build_params(cfg)
    forcing = cfgmod.build_forcing(cfg, grid)
    pairs = cfgmod.build_pairs(cfg)
    constants = _constants_for(cfg, grid, pairs)
    reports = _analyze(cfg, grid, states, params, forcing, constants)

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for report in reports:
        _write_pair_outputs(outdir, report)
    termination = {
        "reason": "monitor-only",
        "steps": 0,
        "final_t": states[-1].t,
        "last_finite": {},
    }
    doc = _build_document(cfg, termination, reports, constants)
    storage.write_json_document(doc, outdir / "report.json")
    return 0


def cmd_calibrate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        if cfg.calibration[0] != "fresh":
            raise ConfigError("[monitor] calibration: --seed needs a fresh calibration")
        cfg.calibration = ("fresh", args.seed, cfg.calibration[2])
    if cfg.calibration[0] != "fresh":
        raise ConfigError("[monitor] calibration: calibrate requires 'fresh:SEED:COUNT'")
    grid = cfgmod.build_grid(cfg)
    pairs = cfgmod.build_pairs(cfg)
    constants = _constants_for(cfg, grid, pairs)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": "obflow-constants",
        "version": 1,
        "config_hash": cfg.config_hash,
        "pairs": [constants[(p.r, p.s)].to_dict() for p in pairs],
    }
    storage.write_json_document(doc, outdir / "constants.json")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="obflow",
        description=(
            "Pseudo-spectral coupled-convection solver with a weak-Lebesgue"
            " regularity monitor"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a simulation and monitor it")
    p_sim.add_argument("config")
    p_sim.add_argument("--output-dir", default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_mon = sub.add_parser("monitor", help="monitor stored snapshot frames")
    p_mon.add_argument("snapshots", help="glob pattern of snapshot files")
    p_mon.add_argument("config")
    p_mon.add_argument("--output-dir", default=None)
    p_mon.set_defaults(func=cmd_monitor)

    p_cal = sub.add_parser("calibrate", help="calibrate inequality constants")
    p_cal.add_argument("config")
    p_cal.add_argument("--output-dir", default=None)
    p_cal.add_argument("--seed", type=int, default=None)
    p_cal.set_defaults(func=cmd_calibrate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PairValidationError, TrajectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (storage.SnapshotError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
