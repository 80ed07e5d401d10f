"""Iterative convex-restriction solver for the beamforming design.

Each outer iteration lifts the beamformers to Hermitian matrices, replaces
every nonconvex piece by a convex inner approximation tangent at the current
iterate (fractional objective via a first-order bound, log-rates via an
exp/log slack chain with tangent and second-order-cone surrogates), adds a
linearized trace-minus-largest-eigenvalue penalty that drives the lifted
matrices back to rank one, and solves the resulting conic subproblem. The
previous iterate is always feasible for the next subproblem, so the
objective proxy ascends monotonically; an explicit guard constraint makes
that a structural property rather than a numerical accident.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import conic, rates
from .conic import ConicProgram, LinExpr
from .csit import CsitStatistics
from .scenario import Scenario

LN2 = math.log(2.0)
GUARD_SLACK = 1e-9     # allowed per-step decrease of the objective proxy
RANK_TOL = 1e-4        # relative trace-minus-top-eigenvalue residual target
RETRY_LIMIT = 5        # subproblem retries with halved linearization steps
REBALANCE_TRIES = 20   # attempts to find a QoS-feasible starting point
T_FLOOR = 1e-12
CHI_CLIP = 60.0


class InitializationInfeasible(RuntimeError):
    """No QoS-feasible starting point was found for this channel draw."""


class SubproblemError(RuntimeError):
    """Conic subproblem failed even after step-halving retries."""

    def __init__(self, message: str, state: "ScaState", status: str):
        super().__init__(message)
        self.state = state
        self.status = status


@dataclass
class ScaState:
    """Everything the iteration carries: slack values double as the next
    linearization point."""

    iter: int
    x: float                   # sqrt of the served-rate proxy (ee mode)
    y: float                   # consumed-power proxy (ee mode)
    z: float                   # objective proxy: EE bound (ee) or sum rate (wsr)
    eta_c: np.ndarray          # (K,) signal-side log slacks, common stream
    chi_c: np.ndarray          # (K,) interference-side log slacks, common
    eta_p: np.ndarray          # (K,) same for private streams
    chi_p: np.ndarray
    t_c: np.ndarray            # (K,) SOC slacks bounding exp(eta) from above
    t_p: np.ndarray
    c_alloc: np.ndarray        # (M,) common-rate split
    group_rates: np.ndarray    # (M,) private group-rate variables
    w_common: np.ndarray | None  # (Nt, Nt) lifted common beamformer
    w_private: np.ndarray      # (M, Nt, Nt) lifted private beamformers
    rho: float                 # current penalty weight
    v_common: np.ndarray | None  # top eigenvector used by the penalty
    v_private: np.ndarray      # (M, Nt)
    objective_trace: list[float] = field(default_factory=list)
    penalty_trace: list[float] = field(default_factory=list)   # max relative residual
    qos_slack_trace: list[float] = field(default_factory=list)
    power_slack_trace: list[float] = field(default_factory=list)
    prev: "ScaState | None" = field(default=None, repr=False)


@dataclass
class ScaResult:
    beamformers: rates.BeamformerSet
    c_alloc: np.ndarray
    state: ScaState
    converged: bool
    n_iters: int


def _principal_eig(w_mat: np.ndarray) -> tuple[float, np.ndarray]:
    herm = 0.5 * (w_mat + w_mat.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    return float(vals[-1]), vecs[:, -1]


def extract_rank_one(w_mat: np.ndarray) -> np.ndarray:
    """sqrt(lambda_max) * v_max with the largest-magnitude entry rotated to
    the nonnegative real axis; the zero matrix maps to the zero vector."""
    if np.linalg.norm(w_mat) < 1e-300:
        return np.zeros(w_mat.shape[0], dtype=complex)
    lam, v = _principal_eig(w_mat)
    lam = max(lam, 0.0)
    idx = int(np.argmax(np.abs(v)))
    pivot = v[idx]
    if abs(pivot) > 0:
        v = v * (pivot.conjugate() / abs(pivot))
    return np.sqrt(lam) * v


def rank_residuals(state: ScaState) -> np.ndarray:
    """Relative trace-minus-top-eigenvalue residual per lifted matrix."""
    mats = list(state.w_private)
    if state.w_common is not None:
        mats.append(state.w_common)
    out = []
    for w_mat in mats:
        tr = float(np.real(np.trace(w_mat)))
        lam, _ = _principal_eig(w_mat)
        out.append((tr - lam) / max(tr, 1e-12))
    return np.array(out)


def rebalance_common(budget: float, group_rates: np.ndarray,
                     r_th: float) -> np.ndarray:
    """Split a common-rate budget: cover QoS deficits first, spread the rest
    equally. If deficits exceed the budget, allocate proportionally (the rate
    report will flag the QoS violation)."""
    m = group_rates.size
    budget = max(float(budget), 0.0)
    need = np.clip(r_th - group_rates, 0.0, None)
    total_need = float(need.sum())
    if total_need <= budget + 1e-12:
        return need + (budget - total_need) / m
    if total_need == 0.0:
        return np.full(m, budget / m)
    return budget * need / total_need


# ---------------------------------------------------------------------------
# initialization


def _init_slacks(sig: np.ndarray, interf: np.ndarray, noise_var: float):
    chi = np.log(interf + noise_var)
    eta = np.log(sig + interf + noise_var)
    return eta, chi, np.exp(eta)


def _trace_profile(hbar: np.ndarray, w_common, w_private, group_of):
    """Per-user expected signal/interference traces for the current lift."""
    k_users = hbar.shape[0]
    per_beam = np.empty((k_users, w_private.shape[0]))
    for k in range(k_users):
        for m in range(w_private.shape[0]):
            per_beam[k, m] = np.real(np.sum(hbar[k] * w_private[m].T))
    sig_p = per_beam[np.arange(k_users), group_of]
    interf_p = per_beam.sum(axis=1) - sig_p
    if w_common is None:
        sig_c = np.zeros(k_users)
    else:
        sig_c = np.array(
            [np.real(np.sum(hbar[k] * w_common.T)) for k in range(k_users)]
        )
    interf_c = per_beam.sum(axis=1)
    return sig_c, interf_c, sig_p, interf_p


def _profile_rates(sig_c, interf_c, sig_p, interf_p, noise_var, group_of,
                   m_groups, rsma):
    """Common-rate budget and per-group rates for a (possibly scaled) profile."""
    rate_p = np.log2(1.0 + sig_p / (interf_p + noise_var))
    group_rates = np.array(
        [rate_p[group_of == m].min() for m in range(m_groups)]
    )
    if not rsma:
        return 0.0, group_rates
    rate_c = np.log2(
        (sig_c + interf_c + noise_var) / (interf_c + noise_var)
    )
    return float(rate_c.min()), group_rates


def _efficiency_scale(sig_c, interf_c, sig_p, interf_p, s: Scenario,
                      group_of, rsma: bool) -> float:
    """Fraction of the power budget at which the matched profile itself is
    most efficient. Starting the iteration there keeps it out of the poor
    interference-limited basin that a full-power start falls into at high
    SNR; only QoS-feasible scalings are considered (1.0 is the fallback)."""
    best_t, best_ee = 1.0, -np.inf
    for t in np.geomspace(0.01, 1.0, 60):
        budget, group_rates = _profile_rates(
            t * sig_c, t * interf_c, t * sig_p, t * interf_p,
            s.noise_var, group_of, s.n_groups, rsma,
        )
        need = np.clip(s.qos_threshold - group_rates, 0.0, None)
        if rsma:
            if need.sum() > budget + 1e-12:
                continue
            rate = budget + float(group_rates.sum())
        else:
            if need.sum() > 1e-12:
                continue
            rate = float(group_rates.sum())
        power = (
            t * s.total_power_w / s.amp_efficiency
            + s.circuit_power_w
            + s.rate_power_coeff * rate
        )
        if rate / power > best_ee:
            best_ee, best_t = rate / power, t
    return best_t


def init_state(s: Scenario, stats: CsitStatistics,
               rng: np.random.Generator | None = None,
               common_power_share: float = 0.5) -> ScaState:
    """Matched-beamformer start at full power with self-consistent slacks.

    Private beams point at each group's dominant effective-channel direction,
    the common beam (if any) at the dominant direction of the user sum. The
    common-rate split covers QoS deficits; if no split works the power shares
    are reshuffled a bounded number of times before giving up.
    """
    n, m_groups = s.n_antennas, s.n_groups
    group_of = stats.group_of
    hbar = stats.hbar_mat
    p_total = s.total_power_w
    rsma = s.sic_mode == "rsma"

    v_private = np.empty((m_groups, n), dtype=complex)
    for m in range(m_groups):
        _, v_private[m] = _principal_eig(hbar[group_of == m].sum(axis=0))
    _, v_common = _principal_eig(hbar.sum(axis=0))

    if rsma:
        shares = [min(max(common_power_share, 0.01), 0.95)]
        while len(shares) < REBALANCE_TRIES:
            delta = 0.15 * ((len(shares) + 1) // 2) * (1 if len(shares) % 2 else -1)
            if rng is not None:
                delta += rng.uniform(-0.01, 0.01)
            shares.append(min(max(shares[0] + delta, 0.01), 0.95))
    else:
        shares = [0.0]

    ee_mode = s.objective_mode == "ee"
    private_weights = np.full(m_groups, 1.0 / m_groups)
    last_fail = ""
    for attempt in range(REBALANCE_TRIES):
        share = shares[attempt % len(shares)]
        w_private = np.stack([
            p_total * (1.0 - share) * private_weights[m]
            * np.outer(v_private[m], v_private[m].conj())
            for m in range(m_groups)
        ])
        w_common = (
            p_total * share * np.outer(v_common, v_common.conj()) if rsma else None
        )
        sig_c, interf_c, sig_p, interf_p = _trace_profile(
            hbar, w_common, w_private, group_of
        )
        if ee_mode:
            t_scale = _efficiency_scale(
                sig_c, interf_c, sig_p, interf_p, s, group_of, rsma
            )
            w_private = t_scale * w_private
            w_common = t_scale * w_common if w_common is not None else None
            sig_c, interf_c = t_scale * sig_c, t_scale * interf_c
            sig_p, interf_p = t_scale * sig_p, t_scale * interf_p
        eta_p, chi_p, t_p = _init_slacks(sig_p, interf_p, s.noise_var)
        group_rates = np.array([
            (eta_p[group_of == m] - chi_p[group_of == m]).min() / LN2
            for m in range(m_groups)
        ])
        if rsma:
            eta_c, chi_c, t_c = _init_slacks(sig_c, interf_c, s.noise_var)
            common_rate = float((eta_c - chi_c).min()) / LN2
            need = np.clip(s.qos_threshold - group_rates, 0.0, None)
            if need.sum() <= common_rate + 1e-12:
                c_alloc = need + (common_rate - need.sum()) / m_groups
                break
            last_fail = (
                f"common rate {common_rate:.4g} cannot cover QoS deficits "
                f"{need.sum():.4g}"
            )
        else:
            eta_c = chi_c = t_c = np.zeros(0)
            c_alloc = np.zeros(m_groups)
            need = np.clip(s.qos_threshold - group_rates, 0.0, None)
            if need.sum() <= 1e-12:
                break
            last_fail = f"group rates {group_rates} below QoS {s.qos_threshold}"
            # push power toward the failing groups and retry
            boost = 1.0 + 2.0 * need / max(s.qos_threshold, 1e-12)
            if rng is not None:
                boost *= 1.0 + rng.uniform(0.0, 0.01, size=m_groups)
            private_weights = private_weights * boost
            private_weights /= private_weights.sum()
    else:
        raise InitializationInfeasible(
            f"no QoS-feasible start after {REBALANCE_TRIES} attempts: {last_fail}"
        )

    rate_sum = float(np.sum(c_alloc + group_rates))
    trace_total = float(sum(np.real(np.trace(w)) for w in w_private))
    if w_common is not None:
        trace_total += float(np.real(np.trace(w_common)))
    power = (
        trace_total / s.amp_efficiency
        + s.circuit_power_w
        + s.rate_power_coeff * rate_sum
    )
    x0 = math.sqrt(max(rate_sum, 0.0))
    z0 = rate_sum / power if ee_mode else rate_sum
    return ScaState(
        iter=0,
        x=x0,
        y=power,
        z=z0,
        eta_c=eta_c, chi_c=chi_c, eta_p=eta_p, chi_p=chi_p,
        t_c=t_c, t_p=t_p,
        c_alloc=c_alloc,
        group_rates=group_rates,
        w_common=w_common,
        w_private=w_private,
        rho=s.penalty_init,
        v_common=v_common if rsma else None,
        v_private=v_private,
        objective_trace=[z0],
        penalty_trace=[0.0],
        qos_slack_trace=[float((c_alloc + group_rates - s.qos_threshold).min())],
        power_slack_trace=[p_total - trace_total],
    )


# ---------------------------------------------------------------------------
# subproblem construction


def build_subproblem(state: ScaState, stats: CsitStatistics,
                     s: Scenario) -> ConicProgram:
    """Convex restriction tangent at the current iterate; every feasible
    point satisfies the original (nonconvex) constraints."""
    n, m_groups, k_users = s.n_antennas, s.n_groups, s.n_users
    group_of = stats.group_of
    hbar = stats.hbar_mat
    sigma2 = s.noise_var
    rsma = s.sic_mode == "rsma"
    ee_mode = s.objective_mode == "ee"

    prog = ConicProgram()
    r_vars = [prog.scalar(f"R{m}", nonneg=True) for m in range(m_groups)]
    w_vars = [prog.hermitian(f"W{m}", n) for m in range(m_groups)]
    if rsma:
        c_vars = [prog.scalar(f"C{m}", nonneg=True) for m in range(m_groups)]
        wc_var = prog.hermitian("Wc", n)

    rate_sum = sum(r_vars, LinExpr())
    if rsma:
        rate_sum = rate_sum + sum(c_vars, LinExpr())

    trace_sum = sum((w.trace() for w in w_vars), LinExpr())
    if rsma:
        trace_sum = trace_sum + wc_var.trace()
    prog.add_ineq(s.total_power_w - trace_sum, label="power_budget")

    for m in range(m_groups):
        served = c_vars[m] + r_vars[m] if rsma else r_vars[m]
        prog.add_ineq(served - s.qos_threshold, label=f"qos{m}")

    def exp_tangent(chi_bar: float, chi_expr: LinExpr, load: LinExpr,
                    label: str) -> None:
        # tangent of exp at chi_bar upper-bounded below by the load keeps
        # chi >= log(load) for every feasible point
        e = math.exp(chi_bar)
        prog.add_ineq(e * chi_expr + (e * (1.0 - chi_bar) - sigma2) - load,
                      label=label)

    def soc_pair(t_bar: float, t_expr: LinExpr, eta_expr: LinExpr,
                 label: str) -> None:
        # rotated-cone surrogate enforcing eta <= log(t), tight at t = t_bar
        t_cap = math.log(t_bar) + 1.0
        prog.add_soc(
            [t_expr + eta_expr - t_cap, LinExpr(const=2.0 * math.sqrt(t_bar))],
            t_expr - eta_expr + t_cap,
            label=label,
        )

    for k in range(k_users):
        m = int(group_of[k])
        interf_p = sum(
            (w_vars[j].inner(hbar[k]) for j in range(m_groups) if j != m),
            LinExpr(),
        )
        sig_p = w_vars[m].inner(hbar[k])
        eta = prog.scalar(f"eta_p{k}")
        chi = prog.scalar(f"chi_p{k}")
        t_var = prog.scalar(f"t_p{k}", nonneg=True)
        exp_tangent(float(state.chi_p[k]), chi, interf_p, f"exp_p{k}")
        prog.add_ineq(sig_p + interf_p + sigma2 - t_var, label=f"tlink_p{k}")
        soc_pair(max(float(state.t_p[k]), T_FLOOR), t_var, eta, f"soc_p{k}")
        prog.add_ineq(eta - chi - LN2 * r_vars[m], label=f"chain_p{k}")

    if rsma:
        common_sum = sum(c_vars, LinExpr())
        for k in range(k_users):
            interf_c = sum(
                (w_vars[j].inner(hbar[k]) for j in range(m_groups)), LinExpr()
            )
            sig_c = wc_var.inner(hbar[k])
            eta = prog.scalar(f"eta_c{k}")
            chi = prog.scalar(f"chi_c{k}")
            t_var = prog.scalar(f"t_c{k}", nonneg=True)
            exp_tangent(float(state.chi_c[k]), chi, interf_c, f"exp_c{k}")
            prog.add_ineq(sig_c + interf_c + sigma2 - t_var, label=f"tlink_c{k}")
            soc_pair(max(float(state.t_c[k]), T_FLOOR), t_var, eta, f"soc_c{k}")
            prog.add_ineq(eta - chi - LN2 * common_sum, label=f"split_c{k}")

    if ee_mode:
        x = prog.scalar("x", nonneg=True)
        y = prog.scalar("y", nonneg=True)
        z = prog.scalar("z")
        x_bar = max(state.x, 1e-9)
        y_bar = max(state.y, 1e-9)
        ratio = x_bar / y_bar
        prog.add_ineq(2.0 * ratio * x - ratio * ratio * y - z, label="frac_bound")
        # x^2 <= rate_sum, exactly representable as a second-order cone
        prog.add_soc([2.0 * x, rate_sum - 1.0], rate_sum + 1.0, label="rate_cone")
        prog.add_ineq(
            y - (1.0 / s.amp_efficiency) * trace_sum - s.circuit_power_w
            - s.rate_power_coeff * rate_sum,
            label="power_model",
        )
        proxy = z
    else:
        proxy = rate_sum

    prog.add_ineq(proxy - (state.z - GUARD_SLACK), label="ascent_guard")

    penalty = LinExpr()
    for m in range(m_groups):
        coeff = np.eye(n) - np.outer(state.v_private[m], state.v_private[m].conj())
        penalty = penalty + w_vars[m].inner(state.rho * coeff)
    if rsma:
        coeff = np.eye(n) - np.outer(state.v_common, state.v_common.conj())
        penalty = penalty + wc_var.inner(state.rho * coeff)

    prog.maximize(proxy - penalty)
    return prog


# ---------------------------------------------------------------------------
# iteration


def _state_point(state: ScaState, s: Scenario):
    """The iterate as a (scalars, matrices) assignment of its own subproblem."""
    rsma = s.sic_mode == "rsma"
    scalars: dict[str, float] = {}
    for m in range(s.n_groups):
        scalars[f"R{m}"] = float(state.group_rates[m])
        if rsma:
            scalars[f"C{m}"] = float(state.c_alloc[m])
    for k in range(s.n_users):
        scalars[f"eta_p{k}"] = float(state.eta_p[k])
        scalars[f"chi_p{k}"] = float(state.chi_p[k])
        scalars[f"t_p{k}"] = float(state.t_p[k])
        if rsma:
            scalars[f"eta_c{k}"] = float(state.eta_c[k])
            scalars[f"chi_c{k}"] = float(state.chi_c[k])
            scalars[f"t_c{k}"] = float(state.t_c[k])
    if s.objective_mode == "ee":
        scalars["x"] = state.x
        scalars["y"] = state.y
        scalars["z"] = state.z
    matrices = {f"W{m}": state.w_private[m] for m in range(s.n_groups)}
    if rsma:
        matrices["Wc"] = state.w_common
    return scalars, matrices


def _blend_states(cur: ScaState, prev: ScaState, weight: float = 0.5) -> ScaState:
    """Pull the linearization point back toward the previous iterate."""

    def mix(a, b):
        return weight * a + (1.0 - weight) * b

    w_private = mix(cur.w_private, prev.w_private)
    w_common = (
        mix(cur.w_common, prev.w_common) if cur.w_common is not None else None
    )
    v_private = np.stack([_principal_eig(w)[1] for w in w_private])
    v_common = _principal_eig(w_common)[1] if w_common is not None else None
    return dataclasses.replace(
        cur,
        x=mix(cur.x, prev.x),
        y=mix(cur.y, prev.y),
        z=min(cur.z, prev.z),
        eta_c=mix(cur.eta_c, prev.eta_c),
        chi_c=mix(cur.chi_c, prev.chi_c),
        eta_p=mix(cur.eta_p, prev.eta_p),
        chi_p=mix(cur.chi_p, prev.chi_p),
        t_c=mix(cur.t_c, prev.t_c),
        t_p=mix(cur.t_p, prev.t_p),
        c_alloc=mix(cur.c_alloc, prev.c_alloc),
        group_rates=mix(cur.group_rates, prev.group_rates),
        w_common=w_common,
        w_private=w_private,
        v_common=v_common,
        v_private=v_private,
        prev=None,
    )


def step(state: ScaState, stats: CsitStatistics, s: Scenario) -> ScaState:
    """One outer iteration: solve the subproblem at the current linearization
    and refresh every linearization quantity from the solution. Solver
    failures retry with the linearization pulled toward the previous iterate."""
    attempt_state = state
    solution = None
    for attempt in range(RETRY_LIMIT + 1):
        prog = build_subproblem(attempt_state, stats, s)
        solution = conic.solve(prog)
        if solution.status == conic.OPTIMAL:
            break
        if state.prev is None:
            raise SubproblemError(
                f"subproblem {solution.status} at iteration {state.iter} "
                "(no previous iterate to retry from)",
                state, solution.status,
            )
        attempt_state = _blend_states(attempt_state, state.prev)
    else:
        raise SubproblemError(
            f"subproblem still {solution.status} after {RETRY_LIMIT} retries "
            f"at iteration {state.iter}",
            state, solution.status,
        )

    rsma = s.sic_mode == "rsma"
    ee_mode = s.objective_mode == "ee"
    m_groups, k_users = s.n_groups, s.n_users
    sc = solution.scalars

    w_private = np.stack([solution.matrices[f"W{m}"] for m in range(m_groups)])
    w_common = solution.matrices["Wc"] if rsma else None
    group_rates = np.array([sc[f"R{m}"] for m in range(m_groups)])
    c_alloc = (
        np.array([sc[f"C{m}"] for m in range(m_groups)])
        if rsma else np.zeros(m_groups)
    )
    eta_p = np.array([sc[f"eta_p{k}"] for k in range(k_users)])
    chi_p = np.clip([sc[f"chi_p{k}"] for k in range(k_users)], -CHI_CLIP, CHI_CLIP)
    t_p = np.maximum([sc[f"t_p{k}"] for k in range(k_users)], T_FLOOR)
    if rsma:
        eta_c = np.array([sc[f"eta_c{k}"] for k in range(k_users)])
        chi_c = np.clip([sc[f"chi_c{k}"] for k in range(k_users)], -CHI_CLIP, CHI_CLIP)
        t_c = np.maximum([sc[f"t_c{k}"] for k in range(k_users)], T_FLOOR)
    else:
        eta_c = chi_c = t_c = np.zeros(0)

    if ee_mode:
        x_val, y_val, z_val = sc["x"], sc["y"], sc["z"]
    else:
        x_val, y_val = 0.0, 0.0
        z_val = float(np.sum(group_rates) + np.sum(c_alloc))

    v_private = np.stack([_principal_eig(w)[1] for w in w_private])
    v_common = _principal_eig(w_common)[1] if rsma else None

    new_state = ScaState(
        iter=state.iter + 1,
        x=float(x_val), y=float(y_val), z=float(z_val),
        eta_c=eta_c, chi_c=chi_c, eta_p=eta_p, chi_p=chi_p,
        t_c=t_c, t_p=t_p,
        c_alloc=c_alloc, group_rates=group_rates,
        w_common=w_common, w_private=w_private,
        rho=state.rho,
        v_common=v_common, v_private=v_private,
        objective_trace=state.objective_trace + [float(z_val)],
        penalty_trace=list(state.penalty_trace),
        qos_slack_trace=state.qos_slack_trace
        + [float((c_alloc + group_rates - s.qos_threshold).min())],
        power_slack_trace=state.power_slack_trace
        + [s.total_power_w - float(
            sum(np.real(np.trace(w)) for w in w_private)
            + (np.real(np.trace(w_common)) if rsma else 0.0)
        )],
        prev=dataclasses.replace(state, prev=None),
    )
    resid = float(rank_residuals(new_state).max())
    new_state.penalty_trace.append(resid)
    if resid > RANK_TOL:
        new_state.rho = min(state.rho * s.penalty_growth, s.penalty_max)
    return new_state


def finalize(state: ScaState, stats: CsitStatistics,
             s: Scenario) -> tuple[rates.BeamformerSet, np.ndarray]:
    """Extract rank-one beamformers and re-split the common rate so the
    extracted solution is feasible on its own.

    In sum-rate mode with a common stream, leftover budget (interior-point
    complementarity slack plus the trace lost to extraction) is poured back
    into the common beam: that strictly raises every user's common rate and
    touches nothing else, so the full-power property of the sum-rate optimum
    holds exactly.
    """
    n = s.n_antennas
    w_p = np.stack([extract_rank_one(w) for w in state.w_private])
    w_c = (
        extract_rank_one(state.w_common)
        if state.w_common is not None else np.zeros(n, dtype=complex)
    )
    if s.objective_mode == "wsr" and s.sic_mode == "rsma":
        tr_c = float(np.linalg.norm(w_c) ** 2)
        leftover = s.total_power_w - tr_c - float(np.sum(np.abs(w_p) ** 2))
        if leftover > 0:
            if tr_c > 1e-12:
                w_c = w_c * np.sqrt((tr_c + leftover) / tr_c)
            else:
                _, v = _principal_eig(stats.hbar_mat.sum(axis=0))
                w_c = extract_rank_one(leftover * np.outer(v, v.conj()))
    bf = rates.BeamformerSet.from_vectors(w_c, w_p)
    group_of = stats.group_of
    rate_c = np.empty(s.n_users)
    rate_p = np.empty(s.n_users)
    for k in range(s.n_users):
        rate_c[k], rate_p[k] = rates.approx_rate(
            stats.hbar_mat[k], bf, s.noise_var, int(group_of[k])
        )
    group_rates = np.array(
        [rate_p[group_of == m].min() for m in range(s.n_groups)]
    )
    if s.sic_mode == "rsma":
        c_alloc = rebalance_common(float(rate_c.min()), group_rates,
                                   s.qos_threshold)
    else:
        c_alloc = np.zeros(s.n_groups)
    return bf, c_alloc


def _run(s: Scenario, stats: CsitStatistics,
         rng: np.random.Generator | None) -> ScaResult:
    state = init_state(s, stats, rng)
    converged = False
    for _ in range(s.max_iters):
        new_state = step(state, stats, s)
        dz = abs(new_state.z - state.z)
        state = new_state
        if dz <= s.sca_eps and rank_residuals(state).max() <= RANK_TOL:
            converged = True
            break
    bf, c_alloc = finalize(state, stats, s)
    return ScaResult(
        beamformers=bf, c_alloc=c_alloc, state=state,
        converged=converged, n_iters=state.iter,
    )


def solve_ee(s: Scenario, stats: CsitStatistics,
             rng: np.random.Generator | None = None) -> ScaResult:
    """Maximize energy efficiency (rate over consumed power)."""
    return _run(dataclasses.replace(s, objective_mode="ee"), stats, rng)


def solve_wsr(s: Scenario, stats: CsitStatistics,
              rng: np.random.Generator | None = None) -> ScaResult:
    """Maximize the plain (unit-weight) sum rate with the same machinery."""
    return _run(dataclasses.replace(s, objective_mode="wsr"), stats, rng)


def solve(s: Scenario, stats: CsitStatistics,
          rng: np.random.Generator | None = None) -> ScaResult:
    """Dispatch on the scenario's objective_mode."""
    return _run(s, stats, rng)


def format_trace(state: ScaState) -> str:
    """Per-iteration convergence log: objective proxy, rank residual,
    QoS and power slacks."""
    lines = ["iter\tobjective\trank_residual\tqos_slack\tpower_slack"]
    for i, z in enumerate(state.objective_trace):
        lines.append(
            f"{i}\t{z!r}\t{state.penalty_trace[i]!r}"
            f"\t{state.qos_slack_trace[i]!r}\t{state.power_slack_trace[i]!r}"
        )
    return "\n".join(lines) + "\n"
