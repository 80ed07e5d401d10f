import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsmabeam.conic import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    ConicProgram,
    LinExpr,
    dump,
    embed_hermitian,
    max_violation,
    solve,
    unembed_hermitian,
)


def _random_hermitian(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (z + z.conj().T)


# ---------------------------------------------------------------------------
# embedding


def test_embed_scalar_psd_iff_nonnegative():
    pos = embed_hermitian(np.array([[2.0 + 0j]]))
    assert pos.shape == (2, 2)
    assert np.allclose(pos, 2.0 * np.eye(2))
    assert np.linalg.eigvalsh(pos).min() >= 0
    neg = embed_hermitian(np.array([[-1.0 + 0j]]))
    assert np.linalg.eigvalsh(neg).min() < 0


def test_embed_rank_one_doubles():
    rng = np.random.default_rng(0)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    emb = embed_hermitian(np.outer(v, v.conj()))
    vals = np.linalg.eigvalsh(emb)
    assert np.sum(vals > 1e-9 * vals.max()) == 2
    assert np.trace(emb) == pytest.approx(2 * np.linalg.norm(v) ** 2, rel=1e-12)
    assert vals.min() >= -1e-10 * vals.max()


def test_embedded_trace_identity():
    rng = np.random.default_rng(1)
    for _ in range(10):
        h = _random_hermitian(rng, 3)
        w = _random_hermitian(rng, 3)
        complex_val = float(np.real(np.trace(h @ w)))
        embedded_val = float(np.trace(embed_hermitian(h) @ embed_hermitian(w))) / 2
        assert embedded_val == pytest.approx(complex_val, abs=1e-10, rel=1e-10)


def test_embed_round_trip():
    rng = np.random.default_rng(2)
    x = _random_hermitian(rng, 5)
    assert np.allclose(unembed_hermitian(embed_hermitian(x)), x, atol=1e-14)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ValueError):
        embed_hermitian(np.array([[0.0, 1.0], [2.0, 0.0]]))


# ---------------------------------------------------------------------------
# solve contract


def test_lp_sanity():
    p = ConicProgram()
    t = p.scalar("t")
    p.add_ineq(3.0 - t)
    p.maximize(t)
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(3.0, abs=1e-7)


def test_sdp_sanity():
    p = ConicProgram()
    w = p.hermitian("W", 2)
    p.add_ineq(1.0 - w.trace())
    p.maximize(w.trace())
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
    assert np.linalg.eigvalsh(sol.matrices["W"]).min() >= -1e-8


def test_soc_sanity():
    p = ConicProgram()
    x = p.scalar("x")
    p.add_soc([x, LinExpr(const=1.0)], LinExpr(const=2.0))
    p.maximize(x)
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(np.sqrt(3.0), abs=1e-6)


def test_complex_sdp_top_eigenvalue():
    rng = np.random.default_rng(3)
    c = _random_hermitian(rng, 3)
    p = ConicProgram()
    w = p.hermitian("W", 3)
    p.add_ineq(1.0 - w.trace())
    p.maximize(w.inner(c))
    sol = solve(p)
    assert sol.status == OPTIMAL
    lam = np.linalg.eigvalsh(c).max()
    assert sol.objective_value == pytest.approx(lam, abs=1e-6)


def test_equality_constraint():
    p = ConicProgram()
    x = p.scalar("x")
    y = p.scalar("y", nonneg=True)
    p.add_eq(x + y - 2.0)
    p.maximize(x)
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(2.0, abs=1e-7)
    assert sol.scalars["y"] == pytest.approx(0.0, abs=1e-7)


def test_infeasible_detected():
    p = ConicProgram()
    t = p.scalar("t")
    p.add_ineq(t - 1.0)
    p.add_ineq(-t)
    p.maximize(t)
    assert solve(p).status == INFEASIBLE


def test_unbounded_detected():
    p = ConicProgram()
    t = p.scalar("t")
    p.add_ineq(t)
    p.maximize(t)
    assert solve(p).status == UNBOUNDED


def test_round_trip_solution_recheck():
    rng = np.random.default_rng(4)
    for trial in range(5):
        p = ConicProgram()
        w = p.hermitian("W", 3)
        x = p.scalar("x", nonneg=True)
        c = _random_hermitian(rng, 3)
        p.add_ineq(5.0 - w.trace() - x)
        p.add_soc([x, LinExpr(const=0.5)], LinExpr(const=2.0))
        p.maximize(w.inner(c) + 0.3 * x)
        sol = solve(p)
        assert sol.status == OPTIMAL
        assert max_violation(p, sol.scalars, sol.matrices) <= 10 * sol.solver_tolerance


def test_solver_reports_measured_tolerance():
    p = ConicProgram()
    t = p.scalar("t")
    p.add_ineq(1.0 - t)
    p.maximize(t)
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert 0 <= sol.solver_tolerance <= 1e-7


def test_deterministic_given_identical_input():
    rng = np.random.default_rng(5)
    c = _random_hermitian(rng, 4)

    def build():
        p = ConicProgram()
        w = p.hermitian("W", 4)
        p.add_ineq(2.0 - w.trace())
        p.maximize(w.inner(c))
        return p

    s1 = solve(build())
    s2 = solve(build())
    assert s1.objective_value == s2.objective_value
    assert np.array_equal(s1.matrices["W"], s2.matrices["W"])


# ---------------------------------------------------------------------------
# program builder contracts


def test_duplicate_variable_rejected():
    p = ConicProgram()
    p.scalar("x")
    with pytest.raises(ValueError):
        p.scalar("x")
    with pytest.raises(ValueError):
        p.hermitian("x", 2)


def test_unknown_reference_rejected():
    p = ConicProgram()
    p.scalar("x")
    with pytest.raises(ValueError):
        p.add_ineq(LinExpr(scalars={"ghost": 1.0}))


def test_trace_shape_checked():
    p = ConicProgram()
    w = p.hermitian("W", 3)
    expr = w.inner(np.eye(3))
    expr.traces["W"] = np.eye(2)
    with pytest.raises(ValueError):
        p.add_ineq(expr)


def test_non_hermitian_trace_coefficient_rejected():
    p = ConicProgram()
    w = p.hermitian("W", 2)
    with pytest.raises(ValueError):
        w.inner(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_dump_lists_program():
    p = ConicProgram()
    w = p.hermitian("W", 2)
    x = p.scalar("x", nonneg=True)
    p.add_ineq(1.0 - w.trace() - x, label="budget")
    p.add_soc([x], LinExpr(const=1.0), label="cap")
    p.maximize(w.inner(np.eye(2)))
    text = dump(p)
    assert "hermitian W dim=2 psd" in text
    assert "scalar x nonneg" in text
    assert "budget" in text and "cap" in text


@given(
    a=st.floats(-5, 5, allow_nan=False),
    b=st.floats(-5, 5, allow_nan=False),
    k=st.floats(-3, 3, allow_nan=False),
)
def test_expression_algebra(a, b, k):
    x = LinExpr(scalars={"x": 1.0})
    expr = k * (a + x) - (x * k - b)
    assert expr.const == pytest.approx(k * a + b, rel=1e-12, abs=1e-12)
    assert expr.scalars["x"] == pytest.approx(0.0, abs=1e-12)
