import dataclasses

import numpy as np
import pytest

from rsmabeam.channel import assemble
from rsmabeam.csit import build_stats, effective_channel, qbar_closed_form
from rsmabeam.geometry import drop_users, hex_layout
from rsmabeam.rates import (
    BeamformerSet,
    approx_rate,
    check_beamformer_set,
    ergodic_rate_mc,
    evaluate,
    power_total,
    sinr_common,
    sinr_private,
)
from rsmabeam.scenario import desk_scenario


def _random_setup(rng, n=3, m=3):
    h = rng.normal(size=n) + 1j * rng.normal(size=n)
    w_c = rng.normal(size=n) + 1j * rng.normal(size=n)
    w_p = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
    return h, BeamformerSet.from_vectors(w_c, w_p)


def _power(h, w) -> float:
    """Independent |h^H w|^2 via an explicit scalar loop."""
    acc = 0.0 + 0.0j
    for hi, wi in zip(h, w):
        acc += complex(hi).conjugate() * complex(wi)
    return (acc.real ** 2 + acc.imag ** 2)


def test_common_sinr_zero_numerator():
    rng = np.random.default_rng(0)
    h, bf = _random_setup(rng)
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), bf.w_private)
    assert sinr_common(h, bf, 1.0) == 0.0


def test_common_sinr_unit_case():
    h = np.array([1.0 + 0j, 0, 0])
    bf = BeamformerSet.from_vectors(
        np.array([1.0 + 0j, 0, 0]), np.zeros((2, 3), dtype=complex)
    )
    assert sinr_common(h, bf, 1.0) == pytest.approx(1.0)


def test_sinrs_match_independent_expression():
    rng = np.random.default_rng(1)
    for _ in range(10):
        h, bf = _random_setup(rng)
        noise = 1.3
        for group in range(3):
            interf = sum(_power(h, bf.w_private[m]) for m in range(3) if m != group)
            own = _power(h, bf.w_private[group])
            expected_c = _power(h, bf.w_common) / (own + interf + noise)
            expected_p = own / (interf + noise)
            assert sinr_common(h, bf, noise) == pytest.approx(expected_c, rel=1e-12)
            assert sinr_private(h, bf, noise, group) == pytest.approx(
                expected_p, rel=1e-12
            )


def test_private_sinr_single_group_has_no_interference():
    rng = np.random.default_rng(2)
    h = rng.normal(size=3) + 1j * rng.normal(size=3)
    w = rng.normal(size=(1, 3)) + 1j * rng.normal(size=(1, 3))
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), w)
    assert sinr_private(h, bf, 2.0, 0) == pytest.approx(
        _power(h, w[0]) / 2.0, rel=1e-12
    )


def test_ergodic_rate_no_error_is_deterministic():
    rng = np.random.default_rng(3)
    h, bf = _random_setup(rng)
    rc, rp = ergodic_rate_mc(h, bf, 0.0, 1, 1.0, n_samples=10,
                             rng=np.random.default_rng(0))
    assert rc == pytest.approx(np.log2(1 + sinr_common(h, bf, 1.0)), rel=1e-12)
    assert rp == pytest.approx(np.log2(1 + sinr_private(h, bf, 1.0, 1)), rel=1e-12)


def test_ergodic_rate_two_runs_agree_within_stderr():
    rng = np.random.default_rng(4)
    h, bf = _random_setup(rng)
    n = 100_000
    r1c, r1p, se1c, se1p = ergodic_rate_mc(
        h, bf, 0.3, 0, 1.0, n, np.random.default_rng(100), return_stderr=True
    )
    r2c, r2p, se2c, se2p = ergodic_rate_mc(
        h, bf, 0.3, 0, 1.0, n, np.random.default_rng(200), return_stderr=True
    )
    assert abs(r1c - r2c) <= 3 * np.hypot(se1c, se2c)
    assert abs(r1p - r2p) <= 3 * np.hypot(se1p, se2p)


def test_expected_rate_close_to_monte_carlo():
    rng = np.random.default_rng(5)
    delta2 = 0.2
    h_est, bf = _random_setup(rng)
    hbar = effective_channel(h_est, qbar_closed_form(delta2, 3))
    ra_c, ra_p = approx_rate(hbar, bf, 1.0, 0)
    mc_c, mc_p = ergodic_rate_mc(h_est, bf, delta2, 0, 1.0, 200_000,
                                 np.random.default_rng(6))
    assert ra_c == pytest.approx(mc_c, rel=0.10)
    assert ra_p == pytest.approx(mc_p, rel=0.10)


def test_expected_rate_zero_beamformers():
    hbar = effective_channel(np.ones(3, dtype=complex), qbar_closed_form(0.2, 3))
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex),
                                    np.zeros((3, 3), dtype=complex))
    assert approx_rate(hbar, bf, 1.0, 0) == (0.0, 0.0)


def test_expected_rate_exact_without_error():
    rng = np.random.default_rng(7)
    h, bf = _random_setup(rng)
    hbar = effective_channel(h, qbar_closed_form(0.0, 3))
    ra_c, ra_p = approx_rate(hbar, bf, 1.0, 2)
    assert ra_c == pytest.approx(np.log2(1 + sinr_common(h, bf, 1.0)), rel=1e-12)
    assert ra_p == pytest.approx(np.log2(1 + sinr_private(h, bf, 1.0, 2)), rel=1e-12)


def test_power_model_idle():
    s = desk_scenario()
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex),
                                    np.zeros((3, 3), dtype=complex))
    assert power_total(bf, s, 0.0) == s.circuit_power_w


def test_power_model_linear_terms():
    s = desk_scenario(amp_efficiency=1.0, rate_power_coeff=0.0, snr_db=20.0)
    w = np.zeros((3, 3), dtype=complex)
    w[0, 0] = 10.0  # ||w_0||^2 = 100 = P_t
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), w)
    assert power_total(bf, s, 5.0) == pytest.approx(100.0 + s.circuit_power_w)


def test_power_model_amplifier_efficiency():
    s1 = desk_scenario(amp_efficiency=1.0, rate_power_coeff=0.0)
    s2 = dataclasses.replace(s1, amp_efficiency=0.5)
    w = np.zeros((3, 3), dtype=complex)
    w[0, 0] = 2.0
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), w)
    tx1 = power_total(bf, s1, 0.0) - s1.circuit_power_w
    tx2 = power_total(bf, s2, 0.0) - s2.circuit_power_w
    assert tx2 == pytest.approx(2 * tx1)


def test_power_model_rejects_negative_rate():
    s = desk_scenario()
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex),
                                    np.zeros((3, 3), dtype=complex))
    with pytest.raises(ValueError):
        power_total(bf, s, -1.0)


def _desk_stats(delta2=0.1, seed=0):
    s = desk_scenario(phase_err_var=delta2)
    rng = np.random.default_rng(seed)
    layout = hex_layout(s)
    drop = drop_users(s, layout, rng)
    chan = assemble(s, drop, rng)
    return s, chan, build_stats(s, chan)


def test_evaluate_zero_beamformers_flags_qos():
    s, chan, stats = _desk_stats()
    bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex),
                                    np.zeros((3, 3), dtype=complex))
    rep = evaluate(bf, np.zeros(3), stats, s)
    assert rep.total_rate == 0.0
    assert rep.ee == 0.0
    assert rep.qos_violations == [0, 1, 2]
    assert rep.alloc_feasible


def test_evaluate_scalar_reduction():
    """One user, one group, no phase error: the report reduces to the scalar
    efficiency formula."""
    s = desk_scenario(n_groups=1, users_per_group=1, phase_err_var=0.0,
                      qos_threshold=0.0)
    rng = np.random.default_rng(8)
    layout = hex_layout(s)
    drop = drop_users(s, layout, rng)
    chan = assemble(s, drop, rng)
    stats = build_stats(s, chan)
    w = 3.0 * chan.h_est[0] / np.linalg.norm(chan.h_est[0])
    bf = BeamformerSet.from_vectors(np.zeros(1, dtype=complex), w[None, :])
    p = float(np.linalg.norm(w) ** 2)
    g = abs(np.vdot(chan.h_true[0], w)) ** 2 / p
    rate = np.log2(1 + g * p / s.noise_var)
    expected_ee = rate / (p / s.amp_efficiency + s.circuit_power_w
                          + s.rate_power_coeff * rate)
    rep = evaluate(bf, np.zeros(1), stats, s)
    assert rep.ee == pytest.approx(expected_ee, rel=1e-9)


def test_rsma_with_silent_common_equals_sdma():
    s, chan, stats = _desk_stats()
    rng = np.random.default_rng(9)
    w_p = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rsma_bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), w_p)
    sdma_bf = BeamformerSet.from_vectors(np.zeros(3, dtype=complex), w_p)
    ra = evaluate(rsma_bf, np.zeros(3), stats, s)
    rb = evaluate(sdma_bf, np.zeros(3), stats, s)
    for name in ("common_rate", "total_rate", "total_power", "ee"):
        assert getattr(ra, name) == getattr(rb, name)
    assert np.array_equal(ra.private_sinr, rb.private_sinr)
    assert np.array_equal(ra.group_rates, rb.group_rates)


def _assert_report_identities(rep, s):
    assert rep.common_rate == pytest.approx(
        np.min(np.log2(1 + rep.common_sinr)), rel=1e-12
    )
    group_of = np.asarray(s.group_map)
    per_user = np.log2(1 + rep.private_sinr)
    for m in range(s.n_groups):
        assert rep.group_rates[m] == pytest.approx(
            per_user[group_of == m].min(), rel=1e-12
        )
    assert rep.total_rate == pytest.approx(
        float(np.sum(rep.common_alloc + rep.group_rates)), rel=1e-12
    )
    assert rep.ee == pytest.approx(rep.total_rate / rep.total_power, rel=1e-12)


def test_report_identities_hold_under_scaling():
    s, chan, stats = _desk_stats()
    rng = np.random.default_rng(10)
    w_c = rng.normal(size=3) + 1j * rng.normal(size=3)
    w_p = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    for scale in (1.0, 1.5, 3.0):
        bf = BeamformerSet.from_vectors(w_c, scale * w_p)
        for channel_or_stats in (chan, stats):
            rep = evaluate(bf, np.zeros(3), channel_or_stats, s)
            _assert_report_identities(rep, s)


def test_evaluate_flags_oversized_allocation():
    s, chan, stats = _desk_stats()
    rng = np.random.default_rng(11)
    w_c = 0.01 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    w_p = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    bf = BeamformerSet.from_vectors(w_c, w_p)
    rep = evaluate(bf, np.full(3, 10.0), stats, s)
    assert not rep.alloc_feasible


def test_beamformer_structure_checks():
    rng = np.random.default_rng(12)
    w_c = rng.normal(size=3) + 1j * rng.normal(size=3)
    w_p = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    bf = BeamformerSet.from_vectors(w_c, w_p)
    assert check_beamformer_set(bf, bf.total_trace + 1.0) == []
    assert check_beamformer_set(bf, bf.total_trace - 1.0) != []
    broken = BeamformerSet(
        w_common=w_c, w_private=w_p,
        lifted_common=np.eye(3, dtype=complex) * 5.0,
        lifted_private=bf.lifted_private,
    )
    assert any("lifted_common" in e for e in
               check_beamformer_set(broken, 1e9))
