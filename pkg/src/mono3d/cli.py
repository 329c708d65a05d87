"""Command-line entry point: ``mono3d {simulate,replay,bench,validate}``.

Exit codes: 0 success, 1 algorithm failure, 2 configuration error.
Log verbosity comes from the ``MONO3D_LOG`` environment variable
(``DEBUG``, ``INFO``, ``WARNING``...; default ``WARNING``).
"""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from . import __version__
from .bench import run_bench, write_bench_csv
from .detection import NoiseModel, load_detections
from .errors import AlgorithmError, ConfigError, CountMismatch
from .filter import KernelSpec, write_trace_csv
from .metrics import compute_errors, match_estimates, write_metrics_csv, write_per_object_csv
from .pipeline import DEFAULT_RESOLUTION_M, DEFAULT_THRESHOLD, estimate, scenario_grid, simulate_all
from .scene import load_scene

log = logging.getLogger("mono3d")

EXIT_OK, EXIT_ALGORITHM, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    scenario: Path
    kernel: KernelSpec
    resolution: float
    threshold: float
    center: str
    noise: Optional[NoiseModel]
    seed: int
    out: Path
    trace: bool
    permute: bool


def _setup_logging():
    level = os.environ.get("MONO3D_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--kernel", choices=("square", "gaussian"))
    p.add_argument("--sigma-divisor", type=float, help="Gaussian sigma = box size / divisor (default 2)")
    p.add_argument("--resolution", type=float, help="grid cell size in metres (default 0.01)")
    p.add_argument("--threshold", type=float, help="extraction threshold (default 0.5)")
    p.add_argument("--center", choices=("geometric", "weighted"), default="weighted")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mono3d", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate detections and estimate object positions")
    _common(sim)
    sim.add_argument("--noise-center-sigma", type=float)
    sim.add_argument("--noise-size-sigma", type=float)
    sim.add_argument("--dropout", type=float)
    sim.add_argument("--no-permute", action="store_true", help="single run in schedule order")
    sim.add_argument("--trace", action="store_true", help="export per-viewpoint point clouds")

    rep = sub.add_parser("replay", help="estimate positions from recorded detections")
    _common(rep)
    rep.add_argument("--detections", type=Path, required=True)
    rep.add_argument("--trace", action="store_true")

    bench = sub.add_parser("bench", help="time the filter for 1..N workers")
    _common(bench)
    bench.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    bench.add_argument("--repetitions", type=int, default=3)

    val = sub.add_parser("validate", help="check scenario / detection files")
    val.add_argument("--scenario", type=Path)
    val.add_argument("--detections", type=Path)
    return parser


def _pick(flag, from_file, default):
    if flag is not None:
        return flag
    if from_file is not None:
        return from_file
    return default


def _config(args, scenario) -> RunConfig:
    fs = scenario.filter
    kind = _pick(args.kernel, fs.kernel, "square")
    divisor = _pick(args.sigma_divisor, fs.sigma_divisor, 2.0)
    resolution = _pick(args.resolution, fs.resolution, DEFAULT_RESOLUTION_M)
    threshold = _pick(args.threshold, fs.threshold, DEFAULT_THRESHOLD)
    if not resolution > 0:
        raise ConfigError("--resolution must be > 0")
    if not 0 <= threshold < 1:
        raise ConfigError("--threshold must lie in [0, 1)")
    try:
        kernel = KernelSpec(kind, divisor)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    base = scenario.noise
    cs = getattr(args, "noise_center_sigma", None)
    ss = getattr(args, "noise_size_sigma", None)
    dp = getattr(args, "dropout", None)
    seed = _pick(args.seed, base.rng_seed if base else None, 0)
    noise = None
    if base is not None or any(v is not None for v in (cs, ss, dp)):
        noise = NoiseModel(
            center_sigma=_pick(cs, base.center_sigma if base else None, 0.0),
            size_sigma=_pick(ss, base.size_sigma if base else None, 0.0),
            dropout_prob=_pick(dp, base.dropout_prob if base else None, 0.0),
            rng_seed=seed,
        )
    return RunConfig(args.scenario, kernel, resolution, threshold, args.center, noise, seed,
                     args.out, getattr(args, "trace", False), not getattr(args, "no_permute", True))


def _fmt(x: float) -> str:
    return repr(float(x))


class _Writer:
    """Collects per-run estimates and writes the CSV artifacts."""

    def __init__(self, out: Path):
        self.out = out
        self.rows: List[list] = []
        self.pairs = []

    def add(self, run: int, order, ids, centers, truths=None):
        order_s = "-".join(str(k) for k in order)
        if truths is not None:
            pairs = match_estimates(truths, centers, ids)
            self.pairs.extend(pairs)
            for p in pairs:
                err = float(((p.truth - p.estimate) ** 2).sum() ** 0.5)
                self.rows.append([run, order_s, p.object_id, *map(_fmt, p.estimate),
                                  *map(_fmt, p.truth), _fmt(err)])
        else:
            for j, c in enumerate(centers):
                self.rows.append([run, order_s, f"c{j}", *map(_fmt, c), "", "", "", ""])

    def write(self):
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / "estimates.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "order", "object_id", "x_m", "y_m", "z_m",
                        "truth_x_m", "truth_y_m", "truth_z_m", "euclidean_error_m"])
            w.writerows(self.rows)
        report = None
        if self.pairs:
            report = compute_errors(self.pairs)
            write_metrics_csv(report, self.out / "metrics.csv")
            write_per_object_csv(self.pairs, self.out / "per_object.csv")
        return report


def _print_report(report, runs: int, failures: int):
    print(f"runs: {runs}  failed: {failures}")
    if report is None:
        return
    print(f"{'metric':<26}{'value':>14}  unit")
    for name, value, unit in report.rows():
        print(f"{name:<26}{value:>14.6g}  {unit}")


def _write_traces(cfg: RunConfig, run: int, trace: list):
    tdir = cfg.out / "trace"
    tdir.mkdir(parents=True, exist_ok=True)
    for step, (k, state) in enumerate(trace):
        write_trace_csv(state, tdir / f"run{run:02d}_step{step}_view{k}.csv", cfg.threshold)


def cmd_simulate(args) -> int:
    scenario = load_scene(args.scenario)
    cfg = _config(args, scenario)
    n = len(scenario.schedule)
    orders = list(itertools.permutations(range(n))) if cfg.permute else [tuple(range(n))]
    grid = scenario_grid(scenario, cfg.resolution)
    ids = [o.id for o in scenario.scene.objects]
    truths = scenario.scene.centers()
    writer = _Writer(cfg.out)
    failures = 0
    for run, order in enumerate(orders):
        dets = simulate_all(scenario, cfg.noise, run=run)
        trace = [] if cfg.trace else None
        try:
            est = estimate(scenario, dets, cfg.kernel, grid, cfg.threshold, cfg.center,
                           seed=cfg.seed, order=order, trace=trace)
            writer.add(run, order, ids, est.centers, truths)
        except AlgorithmError as exc:
            failures += 1
            print(f"run {run} (order {order}) failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        if trace:
            _write_traces(cfg, run, trace)
    report = writer.write()
    _print_report(report, len(orders), failures)
    return EXIT_ALGORITHM if failures else EXIT_OK


def cmd_replay(args) -> int:
    scenario = load_scene(args.scenario)
    cfg = _config(args, scenario)
    dets = load_detections(args.detections, num_viewpoints=len(scenario.schedule))
    grid = scenario_grid(scenario, cfg.resolution)
    trace = [] if cfg.trace else None
    est = estimate(scenario, dets, cfg.kernel, grid, cfg.threshold, cfg.center,
                   seed=cfg.seed, trace=trace)
    writer = _Writer(cfg.out)
    order = range(len(scenario.schedule))
    if scenario.scene.objects:
        if len(scenario.scene.objects) != est.k:
            raise CountMismatch(f"{len(scenario.scene.objects)} ground-truth objects "
                                f"but {est.k} detected")
        writer.add(0, order, [o.id for o in scenario.scene.objects], est.centers,
                   scenario.scene.centers())
    else:
        writer.add(0, order, None, est.centers)
    if trace:
        _write_traces(cfg, 0, trace)
    _print_report(writer.write(), 1, 0)
    return EXIT_OK


def cmd_bench(args) -> int:
    scenario = load_scene(args.scenario)
    cfg = _config(args, scenario)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    counts = sorted({1, args.workers} | {2**i for i in range(args.workers.bit_length()) if 2**i <= args.workers})
    result = run_bench(scenario, cfg.kernel, counts, args.repetitions, cfg.resolution)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_bench_csv(result, cfg.out / "bench.csv")
    print(f"{'workers':>8}{'median_s':>12}{'speedup':>10}")
    for p, t, s in zip(result.worker_counts, result.wall_times, result.speedups()):
        print(f"{p:>8}{t:>12.4f}{s:>10.3f}")
    print(f"fit: sigma={result.sigma_n:.4g}s phi={result.phi_n:.4g}s "
          f"max speedup={result.max_speedup:.4g}")
    print(f"profiled: sigma={result.profiled_sigma:.4g}s phi={result.profiled_phi:.4g}s")
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.scenario is None and args.detections is None:
        raise ConfigError("give --scenario and/or --detections")
    n_views = None
    if args.scenario is not None:
        sc = load_scene(args.scenario)
        n_views = len(sc.schedule)
        print(f"{args.scenario}: OK ({len(sc.scene.objects)} objects, {n_views} viewpoints)")
    if args.detections is not None:
        sets = load_detections(args.detections, num_viewpoints=n_views)
        print(f"{args.detections}: OK ({len(sets)} viewpoints, "
              f"{sum(len(d.boxes) for d in sets)} boxes)")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "replay": cmd_replay, "bench": cmd_bench,
            "validate": cmd_validate}


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AlgorithmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
