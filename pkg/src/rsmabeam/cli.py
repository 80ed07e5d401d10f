"""Command-line front end: sweep runner, scenario validation, single-run
convergence traces.

Exit codes: 0 success, 1 validation error, 2 sweep finished with at least
one failed run.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness, optimizer
from .channel import assemble
from .csit import build_stats
from .geometry import drop_users, hex_layout
from .scenario import (
    Scenario,
    ScenarioFormatError,
    default_scenario,
    desk_scenario,
    load_scenario,
    validate,
)


def _load_base(args) -> Scenario | None:
    """Scenario file wins over the profile; report problems and return None."""
    if getattr(args, "scenario", None):
        try:
            sc = load_scenario(args.scenario)
        except (OSError, ScenarioFormatError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return None
    else:
        sc = default_scenario() if args.profile == "paper" else desk_scenario()
    errs = validate(sc)
    if errs:
        for e in errs:
            print(f"invalid scenario: {e}", file=sys.stderr)
        return None
    return sc


def _cmd_run(args) -> int:
    base = _load_base(args)
    if base is None:
        return 1
    if args.seed is not None:
        import dataclasses

        base = dataclasses.replace(base, rng_seed=args.seed)
    spec = harness.SweepSpec(
        axis=args.sweep,
        values=tuple(float(v) for v in args.values.split(",")),
        modes=tuple(args.modes.split(",")),
        realizations=args.realizations,
        base=base,
        fixed_geometry=args.fixed_geometry,
    )
    errs = harness.validate_spec(spec)
    if errs:
        for e in errs:
            print(f"invalid sweep: {e}", file=sys.stderr)
        return 1
    result = harness.run_sweep(spec, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, f"sweep_{spec.axis}.csv")
    harness.emit_csv(result, out_path)
    print(f"wrote {out_path}")
    for row in result.rows:
        print(
            f"{row.axis}={row.value:g} {row.mode}: mean_ee={row.mean_ee:.6g} "
            f"converged={row.n_converged}/{spec.realizations} failed={row.n_failed}"
        )
    failed = sum(row.n_failed for row in result.rows)
    return 2 if failed else 0


def _cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (OSError, ScenarioFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    errs = validate(sc)
    if errs:
        for e in errs:
            print(f"invalid: {e}")
        return 1
    print("ok")
    return 0


def _cmd_trace(args) -> int:
    base = _load_base(args)
    if base is None:
        return 1
    import dataclasses

    if args.seed is not None:
        base = dataclasses.replace(base, rng_seed=args.seed)
    layout = hex_layout(base)
    drop = drop_users(base, layout, harness.derive_rng(base.rng_seed, "geom"))
    chan = assemble(base, drop, harness.derive_rng(base.rng_seed, "chan", 0))
    stats = build_stats(base, chan)
    result = optimizer.solve(base, stats, harness.derive_rng(base.rng_seed, "opt", 0))
    text = optimizer.format_trace(result.state)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    print(
        f"converged={result.converged} iters={result.n_iters} "
        f"final_objective={result.state.z:.8g}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsmabeam",
        description="Energy-efficiency sweeps for rate-splitting multibeam "
        "satellite beamforming",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and emit CSV")
    run.add_argument("--scenario", help="scenario file (key = value text)")
    run.add_argument("--sweep", required=True, choices=sorted(harness.AXES))
    run.add_argument("--values", required=True,
                     help="comma-separated axis values")
    run.add_argument("--modes", default="rsma-ee",
                     help=f"comma-separated subset of {','.join(harness.MODES)}")
    run.add_argument("--realizations", type=int, default=20)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--profile", choices=("desk", "paper"), default="desk")
    run.add_argument("--fixed-geometry", action="store_true")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="validate a scenario file")
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=_cmd_validate)

    trace = sub.add_parser("trace", help="dump a single-run convergence trace")
    trace.add_argument("--scenario")
    trace.add_argument("--seed", type=int, default=None)
    trace.add_argument("--out")
    trace.add_argument("--profile", choices=("desk", "paper"), default="desk")
    trace.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
