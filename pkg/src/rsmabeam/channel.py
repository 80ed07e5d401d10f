"""Satellite downlink channel synthesis.

Per user k and feed n the channel element is r * exp(j*theta) * b: a
log-normal rain-attenuation amplitude, a uniform phase, and a deterministic
large-scale coefficient combining free-space loss, antenna gains, the
tapered-aperture beam pattern, and noise normalization. Phase-only CSIT
error: the estimated channel shares the exact amplitudes and differs by a
Gaussian phase rotation per element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j1, jv

from .geometry import UserDrop
from .scenario import Scenario

OFFAXIS_3DB_CONSTANT = 2.07123  # u at the half-gain point of the pattern

# below this argument the direct Bessel ratio hits 0/0; use the ascending series
_SMALL_U = 1e-3


@dataclass
class ChannelRealization:
    h_true: np.ndarray       # (K, Nt) complex
    h_est: np.ndarray        # (K, Nt) complex, same magnitudes as h_true
    rain_amp: np.ndarray     # (K, Nt) amplitude factors r
    phase: np.ndarray        # (K, Nt) true phases theta in [0, 2*pi)
    phase_err: np.ndarray    # (K, Nt) phase-estimation errors e
    large_scale: np.ndarray  # (K, Nt) coefficients b


def beam_gain(u) -> np.ndarray | float:
    """Normalized radiation pattern [J1(u)/(2u) + 36*J3(u)/u^3]^2.

    Equals 1 at boresight (u=0, handled by its series limit) and 0.5 at
    u = 2.07123. Multiply by the linear peak gain elsewhere.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("beam_gain argument must be >= 0")
    small = u < _SMALL_U
    us = np.where(small, u, 1.0)
    u2 = us * us
    # series of the bracket: 1 - 5/64 u^2 + 19/7680 u^4 + O(u^6)
    series = 1.0 - 0.078125 * u2 + (19.0 / 7680.0) * u2 * u2
    ub = np.where(small, 1.0, u)
    direct = j1(ub) / (2.0 * ub) + 36.0 * jv(3, ub) / ub**3
    bracket = np.where(small, series, direct)
    out = bracket * bracket
    return float(out) if out.ndim == 0 else out


def offaxis_param(phi_deg, phi3db_deg: float) -> np.ndarray | float:
    """Map an off-axis angle to the pattern argument u = 2.07123*sin(phi)/sin(phi_3dB)."""
    if phi3db_deg <= 0:
        raise ValueError("phi3db_deg must be > 0")
    phi = np.deg2rad(np.asarray(phi_deg, dtype=float))
    out = OFFAXIS_3DB_CONSTANT * np.sin(phi) / np.sin(np.deg2rad(phi3db_deg))
    return float(out) if out.ndim == 0 else out


def large_scale_coeff(s: Scenario, d_m, gain_linear) -> np.ndarray | float:
    """Noise-normalized amplitude coefficient of the link budget.

    b = v * sqrt(G_R * G) / (4*pi*f*d * sqrt(kappa*T_sys*B_w)); the thermal
    noise floor is folded in here, which is why noise_var stays at 1.
    """
    d = np.asarray(d_m, dtype=float)
    g = np.asarray(gain_linear, dtype=float)
    noise_floor = np.sqrt(s.boltzmann * s.noise_temp_k * s.bandwidth_hz)
    out = (
        s.light_speed
        * np.sqrt(s.user_antenna_gain * g)
        / (4.0 * np.pi * s.carrier_freq_hz * d * noise_floor)
    )
    return float(out) if out.ndim == 0 else out


def sample_rain(s: Scenario, rng: np.random.Generator, n_users: int,
                n_feeds: int, per_feed: bool = False) -> np.ndarray:
    """Rain-attenuation amplitudes r = psi^(1/2), psi_dB = 20*log10(psi),
    ln(psi_dB) ~ N(mu, sigma^2).

    One draw per user shared by all feeds by default (co-located feeds see
    the same troposphere); per_feed=True draws independently per element.
    """
    shape = (n_users, n_feeds) if per_feed else (n_users, 1)
    ln_psi_db = rng.normal(s.rain_mu, np.sqrt(s.rain_sigma2), size=shape)
    psi_db = np.exp(ln_psi_db)
    r = 10.0 ** (psi_db / 40.0)  # psi^(1/2) with psi = 10^(psi_db/20)
    if not per_feed:
        r = np.repeat(r, n_feeds, axis=1)
    return r


def assemble(s: Scenario, drop: UserDrop, rng: np.random.Generator,
             rain_per_feed: bool = False) -> ChannelRealization:
    """Draw one channel realization for a user drop.

    Draw order is fixed (rain, phases, phase errors) so a seed fully
    determines the realization.
    """
    k, nt = drop.offaxis_deg.shape
    if nt != s.n_antennas:
        raise ValueError("user drop feed count does not match scenario")
    rain = sample_rain(s, rng, k, nt, per_feed=rain_per_feed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(k, nt))
    err = rng.normal(0.0, np.sqrt(s.phase_err_var), size=(k, nt))

    u = offaxis_param(drop.offaxis_deg, s.angle_3db_deg)
    gain = s.max_beam_gain * beam_gain(u)
    b = large_scale_coeff(s, drop.distance_m[:, None], gain)

    h_true = rain * np.exp(1j * theta) * b
    h_est = h_true * np.exp(-1j * err)
    return ChannelRealization(
        h_true=h_true, h_est=h_est, rain_amp=rain, phase=theta,
        phase_err=err, large_scale=b,
    )


# ---------------------------------------------------------------------------
# full-precision dump for replay / cross-language comparison


def channel_to_text(ch: ChannelRealization) -> str:
    k, nt = ch.h_true.shape
    lines = ["# rsmabeam channel realization", f"n_users = {k}", f"n_feeds = {nt}"]
    for i in range(k):
        for n in range(nt):
            vals = [
                repr(float(ch.rain_amp[i, n])),
                repr(float(ch.phase[i, n])),
                repr(float(ch.phase_err[i, n])),
                repr(float(ch.large_scale[i, n])),
            ]
            lines.append(f"elem{i}_{n} = " + ",".join(vals))
    return "\n".join(lines) + "\n"


def channel_from_text(text: str) -> ChannelRealization:
    header: dict[str, int] = {}
    rows: dict[tuple[int, int], list[str]] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in ("n_users", "n_feeds"):
            header[key] = int(raw.strip())
        elif key.startswith("elem"):
            i, n = key[4:].split("_")
            rows[(int(i), int(n))] = raw.strip().split(",")
        else:
            raise ValueError(f"unknown key '{key}' in channel text")
    k, nt = header["n_users"], header["n_feeds"]
    rain = np.empty((k, nt))
    theta = np.empty((k, nt))
    err = np.empty((k, nt))
    b = np.empty((k, nt))
    for (i, n), vals in rows.items():
        rain[i, n], theta[i, n], err[i, n], b[i, n] = (float(v) for v in vals)
    h_true = rain * np.exp(1j * theta) * b
    h_est = h_true * np.exp(-1j * err)
    return ChannelRealization(h_true, h_est, rain, theta, err, b)


def save_channel(ch: ChannelRealization, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(channel_to_text(ch))


def load_channel(path) -> ChannelRealization:
    with open(path, "r", encoding="utf-8") as fh:
        return channel_from_text(fh.read())
