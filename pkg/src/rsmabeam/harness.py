"""Monte-Carlo experiment driver: seeded sweeps over SNR, phase-error
variance, rate-power coefficient, or circuit power, for RSMA/SDMA in EE or
sum-rate mode, aggregated into figure-ready CSV.

Seeding: one master seed; geometry and channel streams are derived from
(master, tag, realization) only, so every axis value and every mode sees the
same channel draw for a given realization index (common random numbers).
Aggregation order is fixed, so parallel and serial execution produce
identical results.
"""

from __future__ import annotations

import dataclasses
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import optimizer, rates
from .channel import assemble
from .csit import build_stats
from .geometry import UserDrop, drop_users, hex_layout
from .scenario import Scenario

MODES = ("rsma-ee", "sdma-ee", "rsma-wsr", "sdma-wsr")
AXES = {
    "snr_db": "snr_db",
    "delta2": "phase_err_var",
    "xi": "rate_power_coeff",
    "pc_w": "circuit_power_w",
}

CSV_HEADER = "axis,value,mode,mean_ee,mean_rate,mean_power,n_converged,n_failed,mean_iters"


@dataclass
class SweepSpec:
    axis: str                   # one of AXES
    values: tuple[float, ...]   # strictly monotone, non-empty
    modes: tuple[str, ...]      # subset of MODES
    realizations: int
    base: Scenario
    fixed_geometry: bool = True


@dataclass
class RunRecord:
    value: float
    mode: str
    realization: int
    status: str                # "converged" | "max-iters" | "failed"
    ee: float = float("nan")
    rate: float = float("nan")
    power: float = float("nan")
    iters: int = 0
    error: str = ""


@dataclass
class SweepRow:
    axis: str
    value: float
    mode: str
    mean_ee: float
    mean_rate: float
    mean_power: float
    n_converged: int
    n_failed: int
    mean_iters: float


@dataclass
class SweepResult:
    axis: str
    rows: list[SweepRow]
    runs: list[RunRecord] = field(default_factory=list)


def validate_spec(spec: SweepSpec) -> list[str]:
    errs = []
    if spec.axis not in AXES:
        errs.append(f"axis must be one of {sorted(AXES)}")
    if not spec.values:
        errs.append("values must be non-empty")
    else:
        diffs = np.diff(spec.values)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            errs.append("values must be strictly monotone")
    for m in spec.modes:
        if m not in MODES:
            errs.append(f"unknown mode '{m}'")
    if spec.realizations < 1:
        errs.append("realizations must be >= 1")
    return errs


def derive_rng(master_seed: int, *tags) -> np.random.Generator:
    """Deterministic, platform-independent stream per (seed, tags)."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
            entropy.append(int.from_bytes(digest, "little"))
        else:
            entropy.append(int(tag) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _mode_scenario(base: Scenario, axis: str, value: float, mode: str) -> Scenario:
    sic, objective = mode.split("-")
    return dataclasses.replace(
        base,
        **{AXES[axis]: value},
        sic_mode=sic,
        objective_mode=objective,
    )


def run_one(base: Scenario, axis: str, value: float, mode: str,
            realization: int, drop: UserDrop) -> RunRecord:
    """Solve one (axis value, mode, realization) cell; failures are recorded,
    never raised."""
    sc = _mode_scenario(base, axis, value, mode)
    try:
        chan = assemble(sc, drop, derive_rng(base.rng_seed, "chan", realization))
        stats = build_stats(sc, chan)
        result = optimizer.solve(
            sc, stats, derive_rng(base.rng_seed, "opt", realization)
        )
        report = rates.evaluate(result.beamformers, result.c_alloc, stats, sc)
        return RunRecord(
            value=value, mode=mode, realization=realization,
            status="converged" if result.converged else "max-iters",
            ee=report.ee, rate=report.total_rate, power=report.total_power,
            iters=result.n_iters,
        )
    except (optimizer.InitializationInfeasible, optimizer.SubproblemError) as exc:
        return RunRecord(
            value=value, mode=mode, realization=realization,
            status="failed", error=str(exc),
        )


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run the full grid. Means are taken over converged runs only, in fixed
    realization order, so aggregates do not depend on scheduling."""
    errs = validate_spec(spec)
    if errs:
        raise ValueError("invalid sweep spec: " + "; ".join(errs))
    base = spec.base
    layout = hex_layout(base)
    shared_drop = (
        drop_users(base, layout, derive_rng(base.rng_seed, "geom"))
        if spec.fixed_geometry else None
    )

    def drop_for(realization: int) -> UserDrop:
        if shared_drop is not None:
            return shared_drop
        return drop_users(
            base, layout, derive_rng(base.rng_seed, "geom", realization)
        )

    tasks = [
        (value, mode, r)
        for value in spec.values
        for mode in spec.modes
        for r in range(spec.realizations)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda t: run_one(base, spec.axis, t[0], t[1], t[2], drop_for(t[2])),
                tasks,
            ))
    else:
        records = [
            run_one(base, spec.axis, value, mode, r, drop_for(r))
            for value, mode, r in tasks
        ]

    rows = []
    for value in spec.values:
        for mode in spec.modes:
            cell = [
                rec for rec in records
                if rec.value == value and rec.mode == mode
            ]
            cell.sort(key=lambda rec: rec.realization)
            conv = [rec for rec in cell if rec.status == "converged"]
            n_failed = sum(1 for rec in cell if rec.status == "failed")
            if conv:
                mean_ee = float(np.mean([rec.ee for rec in conv]))
                mean_rate = float(np.mean([rec.rate for rec in conv]))
                mean_power = float(np.mean([rec.power for rec in conv]))
                mean_iters = float(np.mean([rec.iters for rec in conv]))
            else:
                mean_ee = mean_rate = mean_power = mean_iters = float("nan")
            rows.append(SweepRow(
                axis=spec.axis, value=value, mode=mode,
                mean_ee=mean_ee, mean_rate=mean_rate, mean_power=mean_power,
                n_converged=len(conv), n_failed=n_failed,
                mean_iters=mean_iters,
            ))
    return SweepResult(axis=spec.axis, rows=rows, runs=records)


def result_to_csv(result: SweepResult) -> str:
    """Deterministic CSV: rows in axis-then-mode order, 10 significant digits."""
    lines = [CSV_HEADER]
    for row in result.rows:
        lines.append(
            f"{row.axis},{row.value:.10g},{row.mode},{row.mean_ee:.10g},"
            f"{row.mean_rate:.10g},{row.mean_power:.10g},{row.n_converged},"
            f"{row.n_failed},{row.mean_iters:.10g}"
        )
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(result_to_csv(result))
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc}") from exc
