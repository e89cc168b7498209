"""Dense two-phase revised simplex.

Problems are stated over free variables::

    minimize (or maximize)  cost @ x
    subject to              G @ x <= h
                            E @ x == f

Multiplier convention (used by every module of the package): for a
minimization the Lagrangian is ``cost @ x + y @ (G @ x - h) + w @ (E @ x - f)``
with ``y >= 0`` and ``w`` free, so at an optimum ``cost + G.T @ y + E.T @ w == 0``
and the dual objective is ``-(h @ y + f @ w)``.  A maximization is solved as
the minimization of ``-cost`` and its multipliers are reported for that
minimization (they are still nonnegative on inequality rows).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger
from scipy.sparse.linalg import splu


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Tolerances:
    pivot: float = 1e-9
    feas: float = 1e-8
    cs: float = 1e-7
    gap: float = 1e-7
    vertex: float = 1e-9


DEFAULT_TOL = Tolerances()

_REFACTOR_EVERY = 100


def _as_matrix(a, n: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    a = np.array(a, dtype=float)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, n)
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"{name} must be a matrix with {n} columns, got shape {a.shape}")
    return a


def _as_vector(a, m: int, name: str) -> np.ndarray:
    if a is None:
        a = np.zeros(m)
    a = np.array(a, dtype=float).reshape(-1)
    if a.shape[0] != m:
        raise ValueError(f"{name} must have length {m}, got {a.shape[0]}")
    return a


@dataclass(frozen=True, eq=False)
class LPProblem:
    """An LP over free variables; immutable after construction."""

    cost: np.ndarray
    G: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    sense: str = "min"

    def __post_init__(self):
        cost = np.array(self.cost, dtype=float).reshape(-1)
        n = cost.shape[0]
        G = _as_matrix(self.G, n, "G")
        h = _as_vector(self.h, G.shape[0], "h")
        E = _as_matrix(self.E, n, "E")
        f = _as_vector(self.f, E.shape[0], "f")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        for name, arr in (("cost", cost), ("G", G), ("h", h), ("E", E), ("f", f)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.cost.shape[0]


@dataclass
class LPSolution:
    status: Status
    x: Optional[np.ndarray] = None
    value: float = float("nan")
    y_ineq: Optional[np.ndarray] = None
    y_eq: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _StdForm:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    # per original variable: (kind, col, col2, shift); kind in {"lb", "free"}
    var_cols: list
    bound_row: np.ndarray       # original G row used as lower bound, or -1
    bound_coef: np.ndarray
    gen_rows: np.ndarray        # original G rows kept as general rows
    row_sign: np.ndarray
    n_eq: int
    slack_of_row: np.ndarray    # std column of slack for each std row, or -1


def _standardize(G, h, E, f, c) -> _StdForm:
    n = c.shape[0]
    m_in = G.shape[0]
    lower = np.zeros(n)
    bound_row = np.full(n, -1)
    bound_coef = np.zeros(n)
    used = np.zeros(m_in, dtype=bool)
    if m_in:
        nnz = np.count_nonzero(G, axis=1)
        for r in np.flatnonzero(nnz == 1):
            i = int(np.flatnonzero(G[r])[0])
            a = G[r, i]
            if a >= 0:
                continue
            lb = h[r] / a
            if bound_row[i] < 0 or lb > lower[i]:
                if bound_row[i] >= 0:
                    used[bound_row[i]] = False
                lower[i], bound_row[i], bound_coef[i] = lb, r, a
                used[r] = True
    gen_rows = np.flatnonzero(~used)

    cols = []
    costs = []
    var_cols = []
    shift = np.zeros(n)
    orig = np.vstack([G[gen_rows], E]) if (gen_rows.size or E.shape[0]) else np.zeros((0, n))
    for i in range(n):
        col = orig[:, i]
        if bound_row[i] >= 0:
            var_cols.append(("lb", len(cols), -1, lower[i]))
            shift[i] = lower[i]
            cols.append(col)
            costs.append(c[i])
        else:
            var_cols.append(("free", len(cols), len(cols) + 1, 0.0))
            cols.append(col)
            cols.append(-col)
            costs.extend([c[i], -c[i]])
    m_g = gen_rows.size
    m = m_g + E.shape[0]
    n_struct = len(cols)
    A = np.zeros((m, n_struct + m_g))
    if n_struct:
        A[:, :n_struct] = np.array(cols).T
    A[np.arange(m_g), n_struct + np.arange(m_g)] = 1.0
    b = np.concatenate([h[gen_rows], f]) - orig @ shift
    c_std = np.concatenate([np.array(costs, dtype=float), np.zeros(m_g)])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    slack = np.full(m, -1)
    for r in range(m_g):
        if sign[r] > 0:
            slack[r] = n_struct + r
    return _StdForm(A, b, c_std, var_cols, bound_row, bound_coef, gen_rows, sign, E.shape[0], slack)


# ---------------------------------------------------------------------------
# revised simplex core


class _Basis:
    """Explicit basis inverse with rank-one updates and periodic refactoring."""

    def __init__(self, A, b, basis):
        self.A = A
        self.b = b
        self.basis = np.array(basis, dtype=int)
        self.At = sparse.csr_matrix(A.T)
        self.Acol = sparse.csc_matrix(A)
        self.refactor()

    def refactor(self):
        m = self.basis.size
        if m == 0:
            self.Binv = np.zeros((0, 0), order="F")
        else:
            B = self.Acol[:, self.basis].tocsc()
            try:
                self.Binv = np.asfortranarray(splu(B).solve(np.eye(m)))
            except RuntimeError:
                self.Binv = np.asfortranarray(np.linalg.inv(self.A[:, self.basis]))
        self.xB = self.Binv @ self.b
        self.updates = 0

    def column(self, q):
        lo, hi = self.Acol.indptr[q], self.Acol.indptr[q + 1]
        return self.Binv[:, self.Acol.indices[lo:hi]] @ self.Acol.data[lo:hi]

    def reduced_costs(self, c):
        y = c[self.basis] @ self.Binv
        return c - self.At @ y

    def pivot(self, r, q, col):
        piv = col[r]
        self.xB = self.xB.copy()
        theta = self.xB[r] / piv
        self.xB -= theta * col
        self.xB[r] = theta
        row = self.Binv[r] / piv
        self.Binv = dger(-1.0, col, row, a=self.Binv, overwrite_a=True)
        self.Binv[r] = row
        self.basis[r] = q
        self.updates += 1
        if self.updates >= _REFACTOR_EVERY:
            self.refactor()


def _simplex(state: _Basis, c, allowed, tol: Tolerances, max_iter: int):
    """Run primal simplex from a feasible basis.  Returns (status, q, col, iterations)."""
    A = state.A
    m, ncols = A.shape
    opt_tol = tol.pivot * max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
    threshold = 3 * (m + ncols)
    degenerate_run = 0
    is_basic = np.zeros(ncols, dtype=bool)
    for it in range(max_iter):
        is_basic[:] = False
        is_basic[state.basis] = True
        d = state.reduced_costs(c)
        cand = allowed & ~is_basic & (d < -opt_tol)
        if not cand.any():
            return Status.OPTIMAL, None, None, it
        idx = np.flatnonzero(cand)
        if degenerate_run >= threshold:
            q = int(idx[0])
        else:
            q = int(idx[np.argmin(d[idx])])
        col = state.column(q)
        pos = col > tol.pivot
        if not pos.any():
            return Status.UNBOUNDED, q, col, it
        rows = np.flatnonzero(pos)
        xb = np.maximum(state.xB[rows], 0.0)
        ratios = xb / col[rows]
        theta = ratios.min()
        if degenerate_run >= threshold:
            ties = rows[ratios <= theta + tol.pivot]
            r = int(ties[np.argmin(state.basis[ties])])
        else:
            # Harris pass: among near-minimal ratios take the largest pivot
            bound = np.min((xb + tol.feas) / col[rows])
            elig = rows[ratios <= bound]
            big = col[elig]
            best = elig[big >= big.max() * (1.0 - 1e-12)]
            r = int(best[np.argmin(state.basis[best])])
            theta = max(state.xB[r], 0.0) / col[r]
        degenerate_run = degenerate_run + 1 if theta <= tol.pivot else 0
        state.pivot(r, q, col)
    raise RuntimeError(f"simplex iteration limit {max_iter} reached")


def solve_lp(lp: LPProblem, tol: Tolerances = DEFAULT_TOL) -> LPSolution:
    """Solve ``lp`` with the two-phase revised simplex method.

    Dantzig pricing is used until ``3*(m+n)`` consecutive degenerate pivots,
    after which Bland's rule takes over until a pivot makes progress.  Ties go
    to the lowest index, so the output is a deterministic function of the input.
    """
    sign = 1.0 if lp.sense == "min" else -1.0
    c = sign * lp.cost
    std = _standardize(lp.G, lp.h, lp.E, lp.f, c)
    A, b = std.A, std.b
    m, n_real = A.shape
    max_iter = 200 * (m + n_real + 10)

    # phase 1: artificials on rows without a usable slack
    art_rows = np.flatnonzero(std.slack_of_row < 0)
    n_art = art_rows.size
    A1 = np.hstack([A, np.zeros((m, n_art))])
    A1[art_rows, n_real + np.arange(n_art)] = 1.0
    basis = std.slack_of_row.copy()
    basis[art_rows] = n_real + np.arange(n_art)
    state = _Basis(A1, b, basis)
    iters = 0
    if n_art:
        c1 = np.zeros(n_real + n_art)
        c1[n_real:] = 1.0
        allowed = np.ones(n_real + n_art, dtype=bool)
        status, _, _, it = _simplex(state, c1, allowed, tol, max_iter)
        iters += it
        state.refactor()
        infeas = float(np.sum(np.maximum(state.xB[state.basis >= n_real], 0.0)))
        if infeas > tol.feas * (1.0 + float(np.max(np.abs(b), initial=0.0))):
            return LPSolution(Status.INFEASIBLE, iterations=iters,
                              info={"phase1_residual": infeas})
        # drive artificials out of the basis where possible
        for r in range(m):
            if state.basis[r] < n_real:
                continue
            row = (state.At @ state.Binv[r])[:n_real]
            is_basic = np.zeros(n_real, dtype=bool)
            is_basic[state.basis[state.basis < n_real]] = True
            mag = np.where(is_basic, 0.0, np.abs(row))
            j = int(np.argmax(mag))
            if mag[j] > 1e-7:
                state.pivot(r, j, state.column(j))
        state.refactor()

    c2 = np.concatenate([std.c, np.zeros(n_art)])
    allowed = np.concatenate([np.ones(n_real, dtype=bool), np.zeros(n_art, dtype=bool)])
    status, q, col, it = _simplex(state, c2, allowed, tol, max_iter)
    iters += it

    if status is Status.UNBOUNDED:
        d_std = np.zeros(n_real + n_art)
        d_std[q] = 1.0
        d_std[state.basis] -= col
        ray = _to_original(std, d_std, lp.n_vars, shift=False)
        return LPSolution(Status.UNBOUNDED, ray=ray, iterations=iters)

    state.refactor()
    x_std = np.zeros(n_real + n_art)
    x_std[state.basis] = state.xB
    x = _to_original(std, x_std, lp.n_vars, shift=True)
    pi = c2[state.basis] @ state.Binv
    pi_orig = pi * std.row_sign
    m_g = std.gen_rows.size
    y_ineq = np.zeros(lp.G.shape[0])
    y_ineq[std.gen_rows] = -pi_orig[:m_g]
    y_eq = -pi_orig[m_g:]
    for i, (kind, ci, _, _) in enumerate(std.var_cols):
        if kind == "lb":
            dj = std.c[ci] - pi @ A[:, ci]
            y_ineq[std.bound_row[i]] = dj / -std.bound_coef[i]
    return LPSolution(Status.OPTIMAL, x=x, value=float(lp.cost @ x),
                      y_ineq=y_ineq, y_eq=y_eq, iterations=iters)


def _to_original(std: _StdForm, x_std, n, shift: bool):
    x = np.zeros(n)
    for i, (kind, ci, cj, lb) in enumerate(std.var_cols):
        if kind == "lb":
            x[i] = x_std[ci] + (lb if shift else 0.0)
        else:
            x[i] = x_std[ci] - x_std[cj]
    return x


# ---------------------------------------------------------------------------
# certificates


def dual_value(lp: LPProblem, sol: LPSolution) -> float:
    """Multiplier-based dual objective in the sense of ``lp``."""
    val = -(lp.h @ sol.y_ineq + lp.f @ sol.y_eq)
    return float(val if lp.sense == "min" else -val)


def kkt_residuals(lp: LPProblem, sol: LPSolution) -> dict:
    """Primal feasibility, dual sign, complementarity, stationarity and gap."""
    sign = 1.0 if lp.sense == "min" else -1.0
    x = sol.x
    slack = lp.G @ x - lp.h
    feas = max(float(np.max(slack, initial=0.0)),
               float(np.max(np.abs(lp.E @ x - lp.f), initial=0.0)))
    stat = sign * lp.cost + lp.G.T @ sol.y_ineq + lp.E.T @ sol.y_eq
    return {
        "primal_feasibility": feas,
        "dual_sign": float(max(0.0, -np.min(sol.y_ineq, initial=0.0))),
        "complementarity": float(np.max(np.abs(sol.y_ineq * slack), initial=0.0)),
        "stationarity": float(np.max(np.abs(stat), initial=0.0)),
        "gap": abs(sol.value - dual_value(lp, sol)),
    }
