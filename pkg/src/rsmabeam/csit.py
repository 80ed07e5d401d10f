"""Statistical CSIT objects consumed by the optimizer.

With per-element Gaussian phase errors of variance delta^2, the phase
coherence matrix E[q q^H] has unit diagonal and off-diagonal exp(-delta^2)
(characteristic function of e_i - e_j, whose variance is 2*delta^2). The
effective channel matrix diag(h_est) Qbar diag(h_est)^H turns expected
quadratic forms E|h^H w|^2 into traces against lifted beamformers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .scenario import Scenario


@dataclass
class CsitStatistics:
    qbar: np.ndarray      # (Nt, Nt) phase coherence, shared by all users
    hbar_mat: np.ndarray  # (K, Nt, Nt) Hermitian PSD effective channels
    group_of: np.ndarray  # (K,) serving group per user


def qbar_closed_form(delta2: float, n: int) -> np.ndarray:
    """Phase coherence matrix: ones on the diagonal, exp(-delta2) elsewhere."""
    if delta2 < 0:
        raise ValueError("delta2 must be >= 0")
    rho = np.exp(-delta2)
    q = np.full((n, n), rho)
    np.fill_diagonal(q, 1.0)
    return q


def effective_channel(h_est_k: np.ndarray, qbar: np.ndarray) -> np.ndarray:
    """diag(h_est) @ Qbar @ diag(h_est)^H, symmetrized to exact Hermitian."""
    h = np.asarray(h_est_k)
    if h.ndim != 1 or qbar.shape != (h.size, h.size):
        raise ValueError("dimension mismatch between h_est_k and qbar")
    m = (h[:, None] * qbar) * h.conj()[None, :]
    return 0.5 * (m + m.conj().T)


def build_stats(s: Scenario, ch: ChannelRealization) -> CsitStatistics:
    """Assemble the per-realization statistics from estimated channels."""
    qbar = qbar_closed_form(s.phase_err_var, s.n_antennas)
    hbar = np.stack([effective_channel(h, qbar) for h in ch.h_est])
    return CsitStatistics(
        qbar=qbar, hbar_mat=hbar, group_of=np.asarray(s.group_map, dtype=int)
    )
