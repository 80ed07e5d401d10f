"""SINRs, ergodic rates, the power model, and energy efficiency.

Two evaluation routes share one report format: the instantaneous route works
on channel vectors (exact SINRs for a given realization, or Monte-Carlo
averages over phase-error draws), the statistical route works on effective
channel matrices and lifted beamformers (expected powers as traces). Rates
are bandwidth-normalized (bit/s/Hz).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .csit import CsitStatistics
from .scenario import Scenario

QOS_SLACK = 1e-9


@dataclass
class BeamformerSet:
    w_common: np.ndarray        # (Nt,) complex; all-zero when there is no common stream
    w_private: np.ndarray       # (M, Nt) complex
    lifted_common: np.ndarray   # (Nt, Nt) Hermitian PSD
    lifted_private: np.ndarray  # (M, Nt, Nt) Hermitian PSD

    @classmethod
    def from_vectors(cls, w_common: np.ndarray, w_private: np.ndarray) -> "BeamformerSet":
        w_c = np.asarray(w_common, dtype=complex)
        w_p = np.asarray(w_private, dtype=complex)
        return cls(
            w_common=w_c,
            w_private=w_p,
            lifted_common=np.outer(w_c, w_c.conj()),
            lifted_private=np.stack([np.outer(w, w.conj()) for w in w_p]),
        )

    @property
    def total_trace(self) -> float:
        return float(
            np.real(np.trace(self.lifted_common))
            + sum(np.real(np.trace(w)) for w in self.lifted_private)
        )


def check_beamformer_set(bf: BeamformerSet, p_total: float) -> list[str]:
    """Structural checks: lifted forms match vector outer products and the
    total trace respects the power budget."""
    errs = []
    tr_c = max(float(np.real(np.trace(bf.lifted_common))), 0.0)
    if np.linalg.norm(bf.lifted_common - np.outer(bf.w_common, bf.w_common.conj()),
                      "fro") > 1e-6 * max(tr_c, 1e-12):
        errs.append("lifted_common does not match outer(w_common)")
    for m, (wm, lw) in enumerate(zip(bf.w_private, bf.lifted_private)):
        tr_m = max(float(np.real(np.trace(lw))), 0.0)
        if np.linalg.norm(lw - np.outer(wm, wm.conj()), "fro") > 1e-6 * max(tr_m, 1e-12):
            errs.append(f"lifted_private[{m}] does not match outer(w_private[{m}])")
    if bf.total_trace > p_total + 1e-9:
        errs.append("total beamformer power exceeds the budget")
    return errs


@dataclass
class RateReport:
    common_sinr: np.ndarray    # (K,)
    private_sinr: np.ndarray   # (K,)
    common_rate: float         # min over users of the common-stream rate
    common_alloc: np.ndarray   # (M,) rate credited to each group
    group_rates: np.ndarray    # (M,) min private rate inside each group
    total_rate: float
    total_power: float
    ee: float
    alloc_feasible: bool       # sum of common_alloc fits under common_rate
    qos_violations: list[int] = field(default_factory=list)  # groups below R_th


def _htrace(hmat: np.ndarray, w: np.ndarray) -> float:
    """Re tr(H @ W) for Hermitian H, W."""
    return float(np.real(np.sum(hmat * w.T)))


def sinr_common(h_k: np.ndarray, bf: BeamformerSet, noise_var: float) -> float:
    """Common-stream SINR: every private beam interferes."""
    sig = abs(np.vdot(h_k, bf.w_common)) ** 2
    interf = sum(abs(np.vdot(h_k, w)) ** 2 for w in bf.w_private)
    return sig / (interf + noise_var)


def sinr_private(h_k: np.ndarray, bf: BeamformerSet, noise_var: float,
                 group: int) -> float:
    """Private-stream SINR after ideal removal of the common stream."""
    sig = abs(np.vdot(h_k, bf.w_private[group])) ** 2
    interf = sum(
        abs(np.vdot(h_k, w)) ** 2
        for m, w in enumerate(bf.w_private)
        if m != group
    )
    return sig / (interf + noise_var)


def ergodic_rate_mc(h_est_k: np.ndarray, bf: BeamformerSet, delta2: float,
                    group: int, noise_var: float, n_samples: int,
                    rng: np.random.Generator, return_stderr: bool = False):
    """Monte-Carlo ergodic rates: average log2(1+SINR) over phase-error draws
    applied to the estimated channel."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    err = rng.normal(0.0, np.sqrt(delta2), size=(n_samples, h_est_k.size))
    h = h_est_k[None, :] * np.exp(1j * err)
    sig_c = np.abs(h.conj() @ bf.w_common) ** 2
    per_beam = np.abs(h.conj() @ bf.w_private.T) ** 2  # (S, M)
    interf_all = per_beam.sum(axis=1)
    interf_other = interf_all - per_beam[:, group]
    rate_c = np.log2(1.0 + sig_c / (interf_all + noise_var))
    rate_p = np.log2(1.0 + per_beam[:, group] / (interf_other + noise_var))
    if return_stderr:
        se_c = float(rate_c.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
        se_p = float(rate_p.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
        return float(rate_c.mean()), float(rate_p.mean()), se_c, se_p
    return float(rate_c.mean()), float(rate_p.mean())


def approx_rate(hbar_k: np.ndarray, bf: BeamformerSet, noise_var: float,
                group: int) -> tuple[float, float]:
    """Expectation-based rates: log of expected powers, with expectations
    reduced to traces against the effective channel matrix."""
    sig_c = _htrace(hbar_k, bf.lifted_common)
    per_beam = np.array([_htrace(hbar_k, w) for w in bf.lifted_private])
    interf_all = float(per_beam.sum())
    interf_other = interf_all - float(per_beam[group])
    rate_c = np.log2(1.0 + sig_c / (interf_all + noise_var))
    rate_p = np.log2(1.0 + per_beam[group] / (interf_other + noise_var))
    return float(rate_c), float(rate_p)


def power_total(bf: BeamformerSet, s: Scenario, total_rate: float) -> float:
    """Consumed power: transmit over amplifier efficiency, circuit floor,
    and the rate-dependent term."""
    if total_rate < 0:
        raise ValueError("total_rate must be >= 0")
    return (
        bf.total_trace / s.amp_efficiency
        + s.circuit_power_w
        + s.rate_power_coeff * total_rate
    )


def evaluate(bf: BeamformerSet, c_alloc: np.ndarray,
             channel_or_stats, s: Scenario) -> RateReport:
    """Full report for a beamformer set and common-rate split.

    Accepts either a ChannelRealization (instantaneous rates from the true
    channel vectors) or CsitStatistics (expected rates from traces). QoS or
    allocation violations are flagged, never raised.
    """
    k_users = s.n_users
    group_of = np.asarray(s.group_map, dtype=int)
    c_alloc = np.asarray(c_alloc, dtype=float)
    nv = s.noise_var

    rate_c = np.empty(k_users)
    rate_p = np.empty(k_users)
    sinr_c = np.empty(k_users)
    sinr_p = np.empty(k_users)
    if isinstance(channel_or_stats, ChannelRealization):
        for k in range(k_users):
            h = channel_or_stats.h_true[k]
            sinr_c[k] = sinr_common(h, bf, nv)
            sinr_p[k] = sinr_private(h, bf, nv, group_of[k])
        rate_c = np.log2(1.0 + sinr_c)
        rate_p = np.log2(1.0 + sinr_p)
    elif isinstance(channel_or_stats, CsitStatistics):
        for k in range(k_users):
            hbar = channel_or_stats.hbar_mat[k]
            rate_c[k], rate_p[k] = approx_rate(hbar, bf, nv, group_of[k])
        sinr_c = 2.0 ** rate_c - 1.0
        sinr_p = 2.0 ** rate_p - 1.0
    else:
        raise TypeError("expected ChannelRealization or CsitStatistics")

    common_rate = float(rate_c.min())
    group_rates = np.array(
        [rate_p[group_of == m].min() for m in range(s.n_groups)]
    )
    total_rate = float(np.sum(c_alloc + group_rates))
    power = power_total(bf, s, max(total_rate, 0.0))
    qos = [
        m for m in range(s.n_groups)
        if c_alloc[m] + group_rates[m] < s.qos_threshold - QOS_SLACK
    ]
    return RateReport(
        common_sinr=sinr_c,
        private_sinr=sinr_p,
        common_rate=common_rate,
        common_alloc=c_alloc,
        group_rates=group_rates,
        total_rate=total_rate,
        total_power=power,
        ee=total_rate / power if power > 0 else 0.0,
        alloc_feasible=bool(c_alloc.sum() <= common_rate + QOS_SLACK),
        qos_violations=qos,
    )
