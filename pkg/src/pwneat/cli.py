"""Command-line entry point.

Subcommands: run (one preset, instances x runs), sweep (several presets),
tabulate (piecewise curve to CSV+PNG), census (pool pair sampling), and
validate (fast property suite). Seeds are mandatory wherever evolution
happens; repeated invocations with the same flags produce byte-identical
CSV/JSON. Timestamps go only to the run_metadata.txt sidecar.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import plots
from .activation import parse_function, parse_pool, sample_pair, tabulate
from .cartpole import PhysicsParams
from .experiment import (
    ExperimentPreset,
    PRESETS,
    activation_census,
    aggregate,
    custom_preset,
    derive_seed,
    format_aggregate_table,
    format_instance_json,
    format_runs_csv,
    instance_stats,
    pair_label,
    preset,
    run_experiment,
)
from .speciation import parse_params
from .validate import format_results, run_validation


def _load_preset(args) -> ExperimentPreset:
    if getattr(args, "pool_file", None):
        text = Path(args.pool_file).read_text()
        exp = custom_preset(Path(args.pool_file).stem, parse_pool(text))
    else:
        exp = preset(args.preset)
    if getattr(args, "params_file", None):
        text = Path(args.params_file).read_text()
        params = parse_params(text, defaults=exp.params)
        exp = dataclasses.replace(exp, params=params)
    return exp


def _run_one(task):
    """Worker: one evolution run, census attached on the final run."""
    exp, seed, instance, run, want_census = task
    record, genomes = run_experiment(exp, seed, instance=instance, run=run,
                                     keep_population=want_census)
    census = activation_census(genomes) if want_census else None
    return record, census


def _execute_instances(exp: ExperimentPreset, root_seed: int, instances: int,
                       runs: int, jobs: int):
    """All runs of all instances, in parallel; deterministic ordering.

    Returns (records, rows): records in (instance, run) order and one
    (InstanceStats, instance, first-run-seed) row per instance.
    """
    tasks = []
    for inst in range(instances):
        for r in range(runs):
            seed = derive_seed(root_seed, inst, r)
            tasks.append((exp, seed, inst, r, r == runs - 1))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_run_one, tasks, chunksize=1))
    else:
        outcomes = [_run_one(t) for t in tasks]

    records = [rec for rec, _ in outcomes]
    rows = []
    for inst in range(instances):
        chunk = records[inst * runs:(inst + 1) * runs]
        census = outcomes[inst * runs + runs - 1][1] or {}
        stats = dataclasses.replace(instance_stats(chunk),
                                    activation_distribution=census)
        rows.append((stats, inst, derive_seed(root_seed, inst, 0)))
    return records, rows


def _write_run_outputs(outdir: Path, exp: ExperimentPreset, records,
                       instance_rows) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "runs.csv").write_text(format_runs_csv(records))
    for stats, inst, seed in instance_rows:
        text = format_instance_json(stats, exp, inst, seed)
        (outdir / f"instance_{inst}.json").write_text(text)
    rows = [(exp.name, aggregate(records, include_failed=True)),
            (exp.name, aggregate(records, include_failed=False))]
    (outdir / "aggregate.txt").write_text(format_aggregate_table(rows))
    plots.plot_run_summary(records, str(outdir / "run_summary.png"))


def _write_metadata(outdir: Path, started: float, args_text: str) -> None:
    stamp = datetime.now(timezone.utc).isoformat()
    lines = [f"finished {stamp}",
             f"wall_seconds {time.perf_counter() - started:.1f}",
             f"invocation {args_text}"]
    (outdir / "run_metadata.txt").write_text("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    started = time.perf_counter()
    exp = _load_preset(args)
    outdir = Path(args.outdir)
    records, rows = _execute_instances(exp, args.seed, args.instances,
                                       args.runs, args.jobs)
    _write_run_outputs(outdir, exp, records, rows)
    _write_metadata(outdir, started, f"run {exp.name} seed {args.seed}")
    solved = sum(1 for r in records if r.solution)
    print(f"{exp.name}: {solved}/{len(records)} runs found a solution; "
          f"outputs in {outdir}")
    return 0


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    agg_rows = []
    sweep_rows = []
    for name in args.presets:
        sub_args = argparse.Namespace(
            preset=name, pool_file=None, params_file=args.params_file)
        exp = _load_preset(sub_args)
        records, rows = _execute_instances(exp, args.seed, args.instances,
                                           args.runs, args.jobs)
        _write_run_outputs(outdir / exp.name, exp, records, rows)
        agg_rows.append((exp.name, aggregate(records, include_failed=True)))
        agg_rows.append((exp.name, aggregate(records, include_failed=False)))
        sweep_rows.append((exp.name, aggregate(records, include_failed=True)))
        solved = sum(1 for r in records if r.solution)
        print(f"{exp.name}: {solved}/{len(records)} runs found a solution")
    (outdir / "aggregate.txt").write_text(format_aggregate_table(agg_rows))
    plots.plot_sweep(sweep_rows, str(outdir / "sweep.png"))
    _write_metadata(outdir, started,
                    f"sweep {' '.join(args.presets)} seed {args.seed}")
    print(f"outputs in {outdir}")
    return 0


def cmd_tabulate(args) -> int:
    if args.n < 2:
        print("tabulate: need at least two sample points", file=sys.stderr)
        return 2
    resting = parse_function(args.resting, args.resting_slope,
                             args.resting_shift)
    active = parse_function(args.active, args.active_slope, args.active_shift)
    from .activation import PiecewiseActivation
    pair = PiecewiseActivation(resting=resting, active=active)
    lo, hi = args.range
    rows = tabulate(pair, lo, hi, args.n)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["x,y"] + [f"{x:.12g},{y:.12g}" for x, y in rows]
    out.write_text("\n".join(lines) + "\n")
    plots.plot_piecewise(pair, str(out.with_suffix(".png")), lo, hi, args.n)
    print(f"{len(rows)} rows -> {out}, curve -> {out.with_suffix('.png')}")
    return 0


def cmd_census(args) -> int:
    if args.pool_file:
        pool = parse_pool(Path(args.pool_file).read_text())
        name = Path(args.pool_file).stem
    else:
        exp = preset(args.preset)
        pool = exp.pool
        name = exp.name
    rng = random.Random(args.seed)
    counts: dict[str, int] = {}
    for _ in range(args.draws):
        label = pair_label(sample_pair(pool, rng))
        counts[label] = counts.get(label, 0) + 1
    print(f"# {name}: {args.draws} sampled (resting, active) pairs")
    for label in sorted(counts, key=lambda k: (-counts[k], k)):
        share = counts[label] / args.draws
        print(f"{label:<40} {counts[label]:>8} {100 * share:6.2f}%")
    return 0


def cmd_validate(args) -> int:
    results = run_validation(corrupt=args.corrupt)
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwneat",
        description="Neuroevolution with piecewise activations on the "
                    "double pole balancing benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_seed=True):
        p.add_argument("--params-file", help="key value lines overriding "
                       "the preset's evolution parameters")
        p.add_argument("--seed", type=int, required=need_seed,
                       help="root seed; per-run seeds derive from it")
        p.add_argument("--runs", type=int, default=100,
                       help="runs per instance (default 100)")
        p.add_argument("--instances", type=int, default=1,
                       help="independent instances (default 1)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel worker processes")
        p.add_argument("--outdir", default="out",
                       help="output directory (created if absent)")

    p_run = sub.add_parser("run", help="run one preset")
    group = p_run.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", help="preset name, e.g. BASELINE or SA1")
    group.add_argument("--pool-file", help="custom activation pool file")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run several presets")
    p_sweep.add_argument("--presets", nargs="+", required=True,
                         help="preset names in report order")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_tab = sub.add_parser("tabulate", help="sample a piecewise pair to CSV")
    p_tab.add_argument("--resting", required=True, help="resting branch kind")
    p_tab.add_argument("--active", required=True, help="active branch kind")
    p_tab.add_argument("--resting-slope", type=float, default=1.0)
    p_tab.add_argument("--resting-shift", type=float, default=0.0)
    p_tab.add_argument("--active-slope", type=float, default=1.0)
    p_tab.add_argument("--active-shift", type=float, default=0.0)
    p_tab.add_argument("--range", type=float, nargs=2, default=(-3.0, 3.0),
                       metavar=("LO", "HI"))
    p_tab.add_argument("--n", type=int, default=601, help="sample count")
    p_tab.add_argument("--out", default="pair.csv", help="CSV path; the "
                       "curve PNG lands next to it")
    p_tab.set_defaults(func=cmd_tabulate)

    p_cen = sub.add_parser("census", help="sample pool pair frequencies")
    group = p_cen.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", help="preset whose pool to sample")
    group.add_argument("--pool-file", help="pool file to sample")
    p_cen.add_argument("--seed", type=int, required=True)
    p_cen.add_argument("--draws", type=int, default=100_000)
    p_cen.set_defaults(func=cmd_census)

    p_val = sub.add_parser("validate", help="fast property self-check")
    p_val.add_argument("--corrupt", action="store_true",
                       help="negative control: corrupt a physics constant "
                       "and expect the oracle property to fail")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KeyError, ValueError, OSError) as exc:
        print(f"pwneat: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
