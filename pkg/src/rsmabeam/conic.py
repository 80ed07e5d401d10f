"""Backend-agnostic conic programs over real scalars and complex Hermitian
matrix variables.

A program has a linear objective (maximized), linear equalities and
inequalities, second-order-cone memberships, and PSD constraints on the
matrix variables. Matrix variables are complex Hermitian at the model level;
`solve` lowers everything onto a real-valued cone problem through the
standard [[Re, -Im], [Im, Re]] embedding and hands it to Clarabel. Traces
pick up a factor 2 under the embedding, which the lowering divides out so
trace contracts match the complex model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import clarabel
import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"

_HERM_TOL = 1e-10
_SQRT2 = np.sqrt(2.0)


def _check_hermitian(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expected a square matrix")
    if np.linalg.norm(mat - mat.conj().T) > _HERM_TOL * max(1.0, np.linalg.norm(mat)):
        raise ValueError("matrix coefficient is not Hermitian")
    return 0.5 * (mat + mat.conj().T)


def embed_hermitian(x: np.ndarray) -> np.ndarray:
    """Real-symmetric 2n x 2n embedding [[Re X, -Im X], [Im X, Re X]].

    PSD iff X is PSD; traces double, every eigenvalue appears twice.
    """
    x = _check_hermitian(x)
    return np.block([[x.real, -x.imag], [x.imag, x.real]])


def unembed_hermitian(s: np.ndarray) -> np.ndarray:
    """Inverse of embed_hermitian (averaging the redundant blocks)."""
    n = s.shape[0] // 2
    re = 0.5 * (s[:n, :n] + s[n:, n:])
    im = 0.5 * (s[n:, :n] - s[:n, n:])
    x = re + 1j * im
    return 0.5 * (x + x.conj().T)


@dataclass
class LinExpr:
    """Affine functional: const + sum(c_i * scalar_i) + sum(Re tr(C_j @ X_j))."""

    const: float = 0.0
    scalars: dict[str, float] = field(default_factory=dict)
    traces: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "LinExpr":
        return LinExpr(self.const, dict(self.scalars),
                       {k: v.copy() for k, v in self.traces.items()})

    def __add__(self, other) -> "LinExpr":
        out = self.copy()
        if isinstance(other, LinExpr):
            out.const += other.const
            for k, v in other.scalars.items():
                out.scalars[k] = out.scalars.get(k, 0.0) + v
            for k, v in other.traces.items():
                out.traces[k] = out.traces.get(k, 0.0) + v
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return self * (-1.0)

    def __sub__(self, other) -> "LinExpr":
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other) -> "LinExpr":
        return (-self) + float(other)

    def __mul__(self, factor: float) -> "LinExpr":
        factor = float(factor)
        return LinExpr(
            self.const * factor,
            {k: v * factor for k, v in self.scalars.items()},
            {k: v * factor for k, v in self.traces.items()},
        )

    __rmul__ = __mul__


@dataclass
class ScalarVar:
    name: str
    nonneg: bool = False

    def ref(self) -> LinExpr:
        return LinExpr(scalars={self.name: 1.0})


@dataclass
class MatrixVar:
    name: str
    dim: int
    psd: bool = True

    def inner(self, coeff: np.ndarray) -> LinExpr:
        """Re tr(coeff @ X) as an affine term (coeff must be Hermitian)."""
        return LinExpr(traces={self.name: _check_hermitian(coeff)})

    def trace(self) -> LinExpr:
        return self.inner(np.eye(self.dim))


@dataclass
class LinConstraint:
    expr: LinExpr     # expr == 0 or expr >= 0
    equality: bool
    label: str = ""


@dataclass
class SocConstraint:
    members: list[LinExpr]  # ||members||_2 <= rhs
    rhs: LinExpr
    label: str = ""


class ConicProgram:
    """Mutable builder; immutable by convention once handed to solve()."""

    def __init__(self) -> None:
        self.scalar_vars: dict[str, ScalarVar] = {}
        self.matrix_vars: dict[str, MatrixVar] = {}
        self.objective: LinExpr = LinExpr()
        self.lin_constraints: list[LinConstraint] = []
        self.soc_constraints: list[SocConstraint] = []

    def scalar(self, name: str, nonneg: bool = False) -> LinExpr:
        if name in self.scalar_vars or name in self.matrix_vars:
            raise ValueError(f"duplicate variable '{name}'")
        self.scalar_vars[name] = ScalarVar(name, nonneg)
        return self.scalar_vars[name].ref()

    def hermitian(self, name: str, dim: int, psd: bool = True) -> MatrixVar:
        if name in self.scalar_vars or name in self.matrix_vars:
            raise ValueError(f"duplicate variable '{name}'")
        if dim < 1:
            raise ValueError("matrix dimension must be >= 1")
        self.matrix_vars[name] = MatrixVar(name, dim, psd)
        return self.matrix_vars[name]

    def maximize(self, expr: LinExpr) -> None:
        self._check_expr(expr)
        self.objective = expr

    def add_ineq(self, expr: LinExpr, label: str = "") -> None:
        """Constrain expr >= 0."""
        self._check_expr(expr)
        self.lin_constraints.append(LinConstraint(expr, equality=False, label=label))

    def add_eq(self, expr: LinExpr, label: str = "") -> None:
        """Constrain expr == 0."""
        self._check_expr(expr)
        self.lin_constraints.append(LinConstraint(expr, equality=True, label=label))

    def add_soc(self, members: list[LinExpr], rhs: LinExpr, label: str = "") -> None:
        """Constrain ||members||_2 <= rhs."""
        for m in members:
            self._check_expr(m)
        self._check_expr(rhs)
        self.soc_constraints.append(SocConstraint(list(members), rhs, label))

    def _check_expr(self, expr: LinExpr) -> None:
        for name in expr.scalars:
            if name not in self.scalar_vars:
                raise ValueError(f"expression references unknown scalar '{name}'")
        for name, coeff in expr.traces.items():
            mv = self.matrix_vars.get(name)
            if mv is None:
                raise ValueError(f"expression references unknown matrix '{name}'")
            if coeff.shape != (mv.dim, mv.dim):
                raise ValueError(f"trace coefficient for '{name}' has wrong shape")


@dataclass
class ConicSolution:
    status: str
    objective_value: float | None
    scalars: dict[str, float]
    matrices: dict[str, np.ndarray]
    solver_tolerance: float  # measured worst constraint violation


# ---------------------------------------------------------------------------
# lowering to Clarabel


class _Layout:
    """Flat real-variable indexing: scalars first, then per matrix the
    diagonal, the upper-triangle real parts, and the upper-triangle
    imaginary parts (column-major pair order)."""

    def __init__(self, program: ConicProgram):
        self.scalar_idx: dict[str, int] = {}
        pos = 0
        for name in program.scalar_vars:
            self.scalar_idx[name] = pos
            pos += 1
        self.mat_base: dict[str, int] = {}
        self.mat_pairs: dict[str, list[tuple[int, int]]] = {}
        for name, var in program.matrix_vars.items():
            n = var.dim
            pairs = [(i, j) for j in range(n) for i in range(j)]
            self.mat_base[name] = pos
            self.mat_pairs[name] = pairs
            pos += n + 2 * len(pairs)
        self.n_vars = pos


def _expr_coeffs(expr: LinExpr, program: ConicProgram, layout: _Layout):
    """(dense index->coeff dict, constant) of an affine expression."""
    coeffs: dict[int, float] = {}

    def bump(idx: int, val: float) -> None:
        if val != 0.0:
            coeffs[idx] = coeffs.get(idx, 0.0) + val

    for name, c in expr.scalars.items():
        bump(layout.scalar_idx[name], c)
    for name, cmat in expr.traces.items():
        n = program.matrix_vars[name].dim
        base = layout.mat_base[name]
        pairs = layout.mat_pairs[name]
        # Re tr(C X) = sum_i Cr_ii d_i + 2 sum_{i<j} (Cr_ij a_ij + Ci_ij b_ij)
        for i in range(n):
            bump(base + i, float(cmat[i, i].real))
        for p, (i, j) in enumerate(pairs):
            bump(base + n + p, 2.0 * float(cmat[i, j].real))
            bump(base + n + len(pairs) + p, 2.0 * float(cmat[i, j].imag))
    return coeffs, expr.const


def _psd_rows(name: str, var: MatrixVar, layout: _Layout):
    """Rows mapping the variable entries to svec of the embedded 2n x 2n
    matrix (upper triangle, column-major, off-diagonals scaled by sqrt(2))."""
    n = var.dim
    base = layout.mat_base[name]
    pairs = layout.mat_pairs[name]
    pair_pos = {pq: p for p, pq in enumerate(pairs)}
    m = 2 * n
    rows: list[tuple[int, float] | None] = []
    for j in range(m):
        for i in range(j + 1):
            scale = 1.0 if i == j else _SQRT2
            if j < n:                       # upper-left Re block
                if i == j:
                    rows.append((base + i, scale))
                else:
                    rows.append((base + n + pair_pos[(i, j)], scale))
            elif i >= n:                    # lower-right Re block
                ii, jj = i - n, j - n
                if ii == jj:
                    rows.append((base + ii, scale))
                else:
                    rows.append((base + n + pair_pos[(ii, jj)], scale))
            else:                           # upper-right block: -Im X
                jj = j - n
                if i == jj:
                    rows.append(None)       # diagonal of Im X is zero
                elif i < jj:
                    rows.append((base + n + len(pairs) + pair_pos[(i, jj)], -scale))
                else:
                    rows.append((base + n + len(pairs) + pair_pos[(jj, i)], scale))
    return rows


def solve(program: ConicProgram, feas_tol: float = 1e-7,
          accept_inaccurate: bool = True, max_iter: int = 200) -> ConicSolution:
    """Solve with Clarabel through the real embedding.

    Every candidate solution is re-checked against the stored constraints;
    the measured worst violation is reported as solver_tolerance and must
    stay below feas_tol, otherwise the status degrades to numerical-failure.
    Interior-point iterations can stall just short of the gap target on
    embedded PSD cones (the embedding doubles every eigenvalue, flattening
    the central path near the boundary); such near-solves pass through the
    same feasibility check instead of being trusted blindly.
    """
    layout = _Layout(program)
    a_rows: list[dict[int, float]] = []
    b_vals: list[float] = []
    cones = []

    def push(coeffs: dict[int, float], rhs: float) -> None:
        a_rows.append(coeffs)
        b_vals.append(rhs)

    # zero cone: equalities expr == 0  ->  -coeffs.x + s = const, s = 0
    n_eq = 0
    for lc in program.lin_constraints:
        if lc.equality:
            coeffs, const = _expr_coeffs(lc.expr, program, layout)
            push({k: -v for k, v in coeffs.items()}, const)
            n_eq += 1
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))

    # nonnegative cone: scalar sign constraints, then inequalities expr >= 0
    n_nn = 0
    for name, var in program.scalar_vars.items():
        if var.nonneg:
            push({layout.scalar_idx[name]: -1.0}, 0.0)
            n_nn += 1
    for lc in program.lin_constraints:
        if not lc.equality:
            coeffs, const = _expr_coeffs(lc.expr, program, layout)
            push({k: -v for k, v in coeffs.items()}, const)
            n_nn += 1
    if n_nn:
        cones.append(clarabel.NonnegativeConeT(n_nn))

    # second-order cones: s = (rhs(x), members(x))
    for sc in program.soc_constraints:
        for expr in [sc.rhs, *sc.members]:
            coeffs, const = _expr_coeffs(expr, program, layout)
            push({k: -v for k, v in coeffs.items()}, const)
        cones.append(clarabel.SecondOrderConeT(len(sc.members) + 1))

    # PSD cones: s = svec of the embedded matrix
    for name, var in program.matrix_vars.items():
        if not var.psd:
            continue
        for entry in _psd_rows(name, var, layout):
            if entry is None:
                push({}, 0.0)
            else:
                idx, scale = entry
                push({idx: -scale}, 0.0)
        cones.append(clarabel.PSDTriangleConeT(2 * var.dim))

    obj_coeffs, obj_const = _expr_coeffs(program.objective, program, layout)
    q = np.zeros(layout.n_vars)
    for idx, val in obj_coeffs.items():
        q[idx] = -val  # Clarabel minimizes

    rows_idx, cols_idx, data = [], [], []
    for r, coeffs in enumerate(a_rows):
        for cidx, val in coeffs.items():
            rows_idx.append(r)
            cols_idx.append(cidx)
            data.append(val)
    a_mat = sparse.csc_matrix(
        (data, (rows_idx, cols_idx)), shape=(len(a_rows), layout.n_vars)
    )
    p_mat = sparse.csc_matrix((layout.n_vars, layout.n_vars))

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.max_threads = 1
    settings.tol_feas = min(feas_tol / 10.0, 1e-8)
    settings.tol_gap_abs = 1e-8
    settings.tol_gap_rel = 1e-7
    try:
        solution = clarabel.DefaultSolver(
            p_mat, q, a_mat, np.array(b_vals), cones, settings
        ).solve()
    except BaseException:  # the Rust layer raises raw panics on bad input
        return ConicSolution(NUMERICAL_FAILURE, None, {}, {}, float("nan"))

    status_name = str(solution.status).rsplit(".", 1)[-1]
    if status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution(INFEASIBLE, None, {}, {}, float("nan"))
    if status_name in ("DualInfeasible", "AlmostDualInfeasible"):
        return ConicSolution(UNBOUNDED, None, {}, {}, float("nan"))
    if status_name == "AlmostSolved" and not accept_inaccurate:
        return ConicSolution(NUMERICAL_FAILURE, None, {}, {}, float("nan"))
    if status_name not in ("Solved", "AlmostSolved"):
        return ConicSolution(NUMERICAL_FAILURE, None, {}, {}, float("nan"))

    x = np.asarray(solution.x)
    scalars = {name: float(x[idx]) for name, idx in layout.scalar_idx.items()}
    matrices = {}
    for name, var in program.matrix_vars.items():
        n = var.dim
        base = layout.mat_base[name]
        pairs = layout.mat_pairs[name]
        mat = np.zeros((n, n), dtype=complex)
        for i in range(n):
            mat[i, i] = x[base + i]
        for p, (i, j) in enumerate(pairs):
            val = x[base + n + p] + 1j * x[base + n + len(pairs) + p]
            mat[i, j] = val
            mat[j, i] = val.conjugate()
        matrices[name] = mat

    achieved = max(max_violation(program, scalars, matrices), 1e-12)
    if achieved > feas_tol:
        return ConicSolution(NUMERICAL_FAILURE, None, scalars, matrices, achieved)
    objective = _eval_expr(program.objective, scalars, matrices)
    return ConicSolution(OPTIMAL, objective, scalars, matrices, achieved)


# ---------------------------------------------------------------------------
# point checking


def _eval_expr(expr: LinExpr, scalars: dict[str, float],
               matrices: dict[str, np.ndarray]) -> float:
    out = expr.const
    for name, coeff in expr.scalars.items():
        out += coeff * scalars[name]
    for name, cmat in expr.traces.items():
        out += float(np.real(np.sum(cmat * matrices[name].T)))
    return out


def _eval_expr_scaled(expr: LinExpr, scalars, matrices) -> tuple[float, float]:
    """(value, magnitude scale) of an affine expression at a point."""
    out = expr.const
    scale = abs(expr.const)
    for name, coeff in expr.scalars.items():
        term = coeff * scalars[name]
        out += term
        scale += abs(term)
    for name, cmat in expr.traces.items():
        term = float(np.real(np.sum(cmat * matrices[name].T)))
        out += term
        scale += abs(term)
    return out, scale


def max_violation(program: ConicProgram, scalars: dict[str, float],
                  matrices: dict[str, np.ndarray]) -> float:
    """Worst relative constraint violation of a candidate point (0 when
    feasible); each residual is scaled by 1 + the magnitude of the terms
    entering the constraint."""
    worst = 0.0
    for name, var in program.scalar_vars.items():
        if var.nonneg:
            x = scalars[name]
            worst = max(worst, -x / (1.0 + abs(x)))
    for name, var in program.matrix_vars.items():
        x = matrices[name]
        herm = float(np.linalg.norm(x - x.conj().T))
        size = 1.0 + float(np.linalg.norm(x))
        worst = max(worst, herm / size)
        if var.psd:
            lam_min = float(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0])
            worst = max(worst, -lam_min / size)
    for lc in program.lin_constraints:
        val, scale = _eval_expr_scaled(lc.expr, scalars, matrices)
        resid = abs(val) if lc.equality else -val
        worst = max(worst, resid / (1.0 + scale))
    for sc in program.soc_constraints:
        norm = np.sqrt(sum(_eval_expr(m, scalars, matrices) ** 2
                           for m in sc.members))
        rhs = _eval_expr(sc.rhs, scalars, matrices)
        worst = max(worst, (norm - rhs) / (1.0 + norm + abs(rhs)))
    return worst


def objective_value(program: ConicProgram, scalars, matrices) -> float:
    return _eval_expr(program.objective, scalars, matrices)


def dump(program: ConicProgram) -> str:
    """Human-readable sparse listing of a program, for cross-solver debugging."""
    lines = ["# conic program"]
    for name, var in program.scalar_vars.items():
        lines.append(f"scalar {name}{' nonneg' if var.nonneg else ''}")
    for name, var in program.matrix_vars.items():
        lines.append(f"hermitian {name} dim={var.dim}{' psd' if var.psd else ''}")

    def fmt(expr: LinExpr) -> str:
        parts = [f"{expr.const!r}"]
        for n, c in expr.scalars.items():
            parts.append(f"{c!r}*{n}")
        for n, cmat in expr.traces.items():
            nz = np.argwhere(np.abs(cmat) > 0)
            entries = ";".join(
                f"{i},{j},{cmat[i, j].real!r},{cmat[i, j].imag!r}" for i, j in nz
            )
            parts.append(f"tr[{n}:{entries}]")
        return " + ".join(parts)

    lines.append(f"maximize {fmt(program.objective)}")
    for lc in program.lin_constraints:
        op = "==" if lc.equality else ">="
        label = f"  # {lc.label}" if lc.label else ""
        lines.append(f"{fmt(lc.expr)} {op} 0{label}")
    for sc in program.soc_constraints:
        label = f"  # {sc.label}" if sc.label else ""
        members = " | ".join(fmt(m) for m in sc.members)
        lines.append(f"soc ||{members}|| <= {fmt(sc.rhs)}{label}")
    return "\n".join(lines) + "\n"
