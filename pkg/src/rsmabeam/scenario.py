"""Experiment configuration: system parameters, unit conventions, seeding.

A Scenario is immutable after construction and owns every knob of an
experiment, so that (Scenario, seed) fully determines all downstream
randomness. Units are fixed by field-name convention (_hz, _m, _db, _k,
_w, _deg); there is no unit-conversion layer.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


class ScenarioFormatError(ValueError):
    """Raised when a scenario file cannot be parsed against the schema."""


@dataclass(frozen=True)
class Scenario:
    # array / grouping
    n_antennas: int = 7                 # transmit feeds, one per beam (SFPB)
    n_groups: int = 7                   # multicast groups
    users_per_group: int = 2
    group_map: tuple[int, ...] = tuple(k // 2 for k in range(14))  # user -> group

    # link budget
    carrier_freq_hz: float = 20e9
    altitude_m: float = 35786e3
    bandwidth_hz: float = 500e6
    max_beam_gain_db: float = 52.0
    user_antenna_gain_db: float = 41.7
    noise_temp_k: float = 517.0
    boltzmann: float = 1.38e-23
    light_speed: float = 299792458.0

    # fading / beam pattern
    rain_mu: float = -3.125             # ln-domain mean of the dB attenuation
    rain_sigma2: float = 1.591          # ln-domain variance
    angle_3db_deg: float = 0.4

    # power / noise. The channel coefficients are noise-normalized (the
    # thermal-noise factor is folded into the link budget), so noise_var
    # stays at 1 and the transmit budget is 10^(snr_db/10) * noise_var.
    snr_db: float = 20.0
    noise_var: float = 1.0
    amp_efficiency: float = 1.0         # power-amplifier efficiency, (0, 1]
    circuit_power_w: float = 10.0       # rate-independent consumption
    rate_power_coeff: float = 0.1       # W per bit/s/Hz of served rate
    qos_threshold: float = 0.1          # minimum per-group rate, bit/s/Hz

    # CSIT / mode
    phase_err_var: float = 0.1
    sic_mode: str = "rsma"              # "rsma" | "sdma"
    objective_mode: str = "ee"          # "ee" | "wsr"

    # algorithm. A small initial penalty keeps the rank-one term from acting
    # as a proximal drag on beam rotations; the growth schedule takes over
    # whenever an iterate actually leaves the rank-one manifold.
    penalty_init: float = 0.01
    penalty_growth: float = 5.0
    penalty_max: float = 1e6
    sca_eps: float = 1e-4
    max_iters: int = 100
    mc_realizations: int = 500
    rng_seed: int = 1

    @property
    def n_users(self) -> int:
        return len(self.group_map)

    @property
    def total_power_w(self) -> float:
        """Transmit power budget implied by the SNR definition P_t / sigma_n^2."""
        return 10.0 ** (self.snr_db / 10.0) * self.noise_var

    @property
    def max_beam_gain(self) -> float:
        return 10.0 ** (self.max_beam_gain_db / 10.0)

    @property
    def user_antenna_gain(self) -> float:
        return 10.0 ** (self.user_antenna_gain_db / 10.0)

    def group_members(self, m: int) -> tuple[int, ...]:
        return tuple(k for k, g in enumerate(self.group_map) if g == m)


def _default_group_map(n_groups: int, users_per_group: int) -> tuple[int, ...]:
    return tuple(k // users_per_group for k in range(n_groups * users_per_group))


def default_scenario(**overrides) -> Scenario:
    """Full-size GEO configuration: 7 feeds / 7 groups / 14 users, Ka band."""
    base = dict(
        n_antennas=7,
        n_groups=7,
        users_per_group=2,
        group_map=_default_group_map(7, 2),
        mc_realizations=500,
    )
    base.update(overrides)
    if "group_map" not in overrides and (
        "n_groups" in overrides or "users_per_group" in overrides
    ):
        base["group_map"] = _default_group_map(
            base["n_groups"], base["users_per_group"]
        )
    return Scenario(**base)


def desk_scenario(**overrides) -> Scenario:
    """Small profile (3 feeds / 3 groups / 6 users, 20 realizations) that keeps
    full sweeps tractable on a workstation; physics identical to the default."""
    merged = dict(n_groups=3, users_per_group=2, mc_realizations=20)
    merged.update(overrides)
    merged.setdefault("n_antennas", merged["n_groups"])
    return default_scenario(**merged)


def validate(s: Scenario) -> list[str]:
    """Return every violated invariant; an empty list means the scenario is valid."""
    errs: list[str] = []
    if s.n_antennas != s.n_groups:
        errs.append("SFPB requires n_antennas == n_groups")
    if s.n_antennas < 1:
        errs.append("n_antennas must be >= 1")
    if s.users_per_group < 1:
        errs.append("users_per_group must be >= 1")
    if len(s.group_map) != s.n_groups * s.users_per_group:
        errs.append("group_map length must equal n_groups * users_per_group")
    if s.group_map:
        groups = set(s.group_map)
        if not all(0 <= g < s.n_groups for g in groups):
            errs.append("group_map entries must lie in [0, n_groups)")
        elif groups != set(range(s.n_groups)):
            errs.append("group_map must be surjective: every group needs a user")
    if not (0.0 < s.amp_efficiency <= 1.0):
        errs.append("amp_efficiency must be in (0,1]")
    if s.rate_power_coeff < 0:
        errs.append("rate_power_coeff must be >= 0")
    for name in (
        "carrier_freq_hz",
        "altitude_m",
        "bandwidth_hz",
        "noise_temp_k",
        "boltzmann",
        "light_speed",
        "angle_3db_deg",
        "noise_var",
    ):
        if getattr(s, name) <= 0:
            errs.append(f"{name} must be > 0")
    for name in (
        "max_beam_gain_db",
        "user_antenna_gain_db",
        "rain_sigma2",
        "circuit_power_w",
        "qos_threshold",
        "phase_err_var",
    ):
        if getattr(s, name) < 0:
            errs.append(f"{name} must be >= 0")
    if s.sic_mode not in ("rsma", "sdma"):
        errs.append("sic_mode must be 'rsma' or 'sdma'")
    if s.objective_mode not in ("ee", "wsr"):
        errs.append("objective_mode must be 'ee' or 'wsr'")
    if s.penalty_init <= 0:
        errs.append("penalty_init must be > 0")
    if s.penalty_growth < 1.0:
        errs.append("penalty_growth must be >= 1")
    if s.penalty_max < s.penalty_init:
        errs.append("penalty_max must be >= penalty_init")
    if s.sca_eps <= 0:
        errs.append("sca_eps must be > 0")
    if s.max_iters < 1:
        errs.append("max_iters must be >= 1")
    if s.mc_realizations < 1:
        errs.append("mc_realizations must be >= 1")
    return errs


# ---------------------------------------------------------------------------
# flat key/value scenario files


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, ftype):
    if ftype is int:
        return int(raw)
    if ftype is float:
        return float(raw)
    if ftype is str:
        return raw
    # group_map tuple
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(int(v) for v in raw.split(","))


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Scenario)}
_PY_TYPES = {
    "int": int,
    "float": float,
    "str": str,
    "tuple[int, ...]": tuple,
}


def to_text(s: Scenario) -> str:
    """Serialize to the flat `key = value` document; field order is fixed."""
    lines = ["# rsmabeam scenario"]
    for f in dataclasses.fields(Scenario):
        lines.append(f"{f.name} = {_format_value(getattr(s, f.name))}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Scenario:
    """Parse a scenario document; unknown or missing keys are errors."""
    seen: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioFormatError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_TYPES:
            raise ScenarioFormatError(f"line {lineno}: unknown key '{key}'")
        if key in seen:
            raise ScenarioFormatError(f"line {lineno}: duplicate key '{key}'")
        ftype = _PY_TYPES[str(_FIELD_TYPES[key])]
        try:
            seen[key] = _parse_value(raw, ftype)
        except ValueError as exc:
            raise ScenarioFormatError(f"line {lineno}: bad value for '{key}': {exc}")
    missing = sorted(set(_FIELD_TYPES) - set(seen))
    if missing:
        raise ScenarioFormatError(f"missing keys: {', '.join(missing)}")
    return Scenario(**seen)


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(s))


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return from_text(fh.read())
