"""Explicit-Euler transcription of Mayer problems into linear programs.

The primal LP carries per-node states ``z[k, j] = x^(j)(t_k)``, per-interval
top derivatives ``v[k]`` (and controls ``u[k]`` for semilinear maps) plus an
epigraph scalar for the terminal cost.

The dual side is expressed through adjoint chain variables ``p[k, j]``: for
``k >= 1`` these are the multipliers of the Euler rows
``z[k, j] - z[k-1, j] - h z[k-1, j+1] = 0`` (with ``z[., kappa] := v``), and
``p[0, j]`` is the multiplier image of the initial set ``Q_j``.  The pair
``(x*, eta)`` used by :class:`DualTrajectory` is a linear reparametrization:

    x*_k = p[k, kappa-1]
    p[k, kappa-1-m] = (-1)^m D^m x*_k - eta_m,k          (m = 0..kappa-1)

where ``D^m`` is the m-th backward divided difference.  Backward differences
reach ``kappa-1`` nodes before ``t = 0``; those ghost values are produced by
polynomial extrapolation of ``x*`` so the map is invertible for any grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Optional, Tuple

import numpy as np

from .convex import INF, conjugate_value, support_function
from .dfi import MayerProblem, PolyhedralMap2, SemilinearMap, m_value
from .numerics import DEFAULT_TOL, LPProblem, LPSolution, Status, Tolerances, solve_lp

DEFAULT_N = 64


class TranscriptionError(RuntimeError):
    """A transcribed LP was infeasible or unbounded."""

    def __init__(self, message: str, status: Status):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t_k = k/N`` on ``[0, 1]``."""

    N: int = DEFAULT_N

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("grid needs an integer N >= 1")
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def t(self) -> np.ndarray:
        t = np.arange(self.N + 1) / self.N
        t[-1] = 1.0
        return t


@dataclass
class PrimalTrajectory:
    grid: Grid
    z: np.ndarray            # (N+1, kappa, n)
    v: np.ndarray            # (N, n)
    u: Optional[np.ndarray] = None  # (N, r), semilinear only

    def residuals(self, problem: MayerProblem) -> Dict[str, float]:
        """Largest violation of the Euler chain, the inclusion and the initial sets."""
        h, k = self.grid.h, problem.kappa
        nxt = np.concatenate([self.z[:-1, 1:], self.v[:, None, :]], axis=1)
        chain = self.z[1:] - self.z[:-1] - h * nxt
        F = problem.inclusion
        incl = 0.0
        for i in range(self.grid.N):
            if isinstance(F, PolyhedralMap2):
                r = F.graph_residual(self.z[i], self.v[i])
                incl = max(incl, float(np.max(r, initial=0.0)))
            else:
                ctl = self.u[i]
                incl = max(incl, float(np.max(F.U.G @ ctl - F.U.h, initial=0.0)))
                drift = sum(F.A[j] @ self.z[i, j] for j in range(k)) + F.B @ ctl
                incl = max(incl, float(np.max(np.abs(self.v[i] - drift))))
        init = 0.0
        for j, Q in enumerate(problem.Q):
            init = max(init, float(np.max(Q.G @ self.z[0, j] - Q.h, initial=0.0)))
        return {"chain": float(np.max(np.abs(chain), initial=0.0)),
                "inclusion": incl, "initial": init}

    def is_feasible(self, problem: MayerProblem, tol: float = DEFAULT_TOL.feas) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.z)))
        return max(self.residuals(problem).values()) <= tol * scale


@dataclass
class DualTrajectory:
    grid: Grid
    xstar: np.ndarray                 # (N+1, n)
    eta: np.ndarray                   # (N+1, kappa-1, n)
    lam: Optional[np.ndarray] = None  # (N, s), polyhedral only
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# difference stencils


def _weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Weights ``w`` with ``sum w_i f(s_i) = f^(order)(0)`` on polynomials of
    degree ``< len(offsets)``."""
    m = len(offsets)
    V = np.vander(offsets.astype(float), m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = factorial(order)
    return np.linalg.solve(V, rhs)


def finite_difference(samples, order: int, h: float) -> np.ndarray:
    """``order``-th derivative estimate at every node of a uniform grid.

    Interior nodes use the centred stencil of half-width ``(order+1)//2``; the
    first and last few nodes use the ``order+1`` point forward or backward
    stencil.  Every stencil differentiates polynomials of degree ``order``
    exactly.
    """
    x = np.asarray(samples, dtype=float)
    N = x.shape[0] - 1
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order == 0:
        return x.copy()
    if N < order + 1:
        raise ValueError(f"grid too short: need N >= {order + 1} for order {order}, got N={N}")
    r = (order + 1) // 2
    central = _weights(np.arange(-r, r + 1), order) / h ** order
    out = np.empty_like(x)
    for k in range(N + 1):
        if k < r:
            w = _weights(np.arange(order + 1) - k, order) / h ** order
            out[k] = np.tensordot(w, x[:order + 1], axes=(0, 0))
        elif k > N - r:
            w = _weights(np.arange(N - order, N + 1) - k, order) / h ** order
            out[k] = np.tensordot(w, x[N - order:], axes=(0, 0))
        else:
            out[k] = np.tensordot(central, x[k - r:k + r + 1], axes=(0, 0))
    return out


def _ghosts(x: np.ndarray, count: int) -> np.ndarray:
    """Values at nodes ``-count..-1`` by extrapolating through the first nodes."""
    if count == 0:
        return np.zeros((0,) + x.shape[1:])
    N = x.shape[0] - 1
    deg = min(count + 1, N)
    nodes = np.arange(deg + 1, dtype=float)
    out = []
    for g in range(-count, 0):
        # Lagrange basis at the ghost node
        w = np.array([np.prod([(g - nodes[m]) / (nodes[i] - nodes[m])
                               for m in range(deg + 1) if m != i]) for i in range(deg + 1)])
        out.append(np.tensordot(w, x[:deg + 1], axes=(0, 0)))
    return np.array(out)


def backward_derivatives(samples, h: float, top: int, ghosts: int) -> np.ndarray:
    """Backward divided differences ``D^m x_k`` for ``m = 0..top``.

    Returns an array of shape ``(top+1, N+1, ...)``; entries that would need
    more than ``ghosts`` extrapolated nodes are NaN.
    """
    x = np.asarray(samples, dtype=float)
    ext = np.concatenate([_ghosts(x, ghosts), x], axis=0)
    out = np.full((top + 1,) + x.shape, np.nan)
    cur = ext
    for m in range(top + 1):
        # cur[i] is D^m at extended index i + m
        vals = cur[ghosts - m:] if ghosts - m >= 0 else cur
        start = 0 if ghosts - m >= 0 else m - ghosts
        out[m, start:] = vals[: x.shape[0] - start]
        cur = (cur[1:] - cur[:-1]) / h
    return out


# ---------------------------------------------------------------------------
# (x*, eta) <-> adjoint chain


def adjoint_chain(problem: MayerProblem, dual: DualTrajectory) -> np.ndarray:
    """The chain variables ``p`` of shape ``(N+1, kappa, n)`` for ``dual``."""
    k = problem.kappa
    D = backward_derivatives(dual.xstar, dual.grid.h, k - 1, k - 1)
    p = np.empty((dual.grid.N + 1, k, problem.n))
    p[:, k - 1] = dual.xstar
    for m in range(1, k):
        p[:, k - 1 - m] = (-1) ** m * D[m] - dual.eta[:, m - 1]
    return p


def dual_from_chain(problem: MayerProblem, grid: Grid, p, lam=None, info=None) -> DualTrajectory:
    """Inverse of :func:`adjoint_chain`."""
    p = np.asarray(p, dtype=float)
    k = problem.kappa
    xstar = p[:, k - 1].copy()
    D = backward_derivatives(xstar, grid.h, k - 1, k - 1)
    eta = np.empty((grid.N + 1, k - 1, problem.n))
    for m in range(1, k):
        eta[:, m - 1] = (-1) ** m * D[m] - p[:, k - 1 - m]
    return DualTrajectory(grid, xstar, eta, None if lam is None else np.asarray(lam, float),
                          dict(info or {}))


@dataclass
class DualArguments:
    """Arguments of the three dual terms.

    ``terminal`` (kappa, n) feeds the conjugate of the terminal cost;
    ``interval[k]`` (kappa+1, n) stacks the graph functional on interval ``k``
    (the last row is the velocity multiplier); ``initial[j]`` feeds the
    support function of ``Q_j``.
    """

    terminal: np.ndarray
    interval: np.ndarray
    initial: np.ndarray


def chain_arguments(problem: MayerProblem, p, h: float) -> DualArguments:
    """Dual term arguments computed from the adjoint chain."""
    p = np.asarray(p, dtype=float)
    k = problem.kappa
    shifted = np.concatenate([np.zeros_like(p[1:, :1]), p[1:, :-1]], axis=1)
    w = -(p[1:] - p[:-1]) / h - shifted
    interval = np.concatenate([w, p[1:, k - 1:k]], axis=1)
    return DualArguments(-p[-1].copy(), interval, p[0].copy())


def dual_arguments(problem: MayerProblem, dual: DualTrajectory) -> DualArguments:
    """Dual term arguments built directly from ``x*`` and ``eta``.

    Interval ``k`` is evaluated at its right node with backward differences.
    """
    k, n, N, h = problem.kappa, problem.n, dual.grid.N, dual.grid.h
    D = backward_derivatives(dual.xstar, h, k, k - 1)
    eta = np.concatenate([np.zeros((N + 1, 1, n)), dual.eta], axis=1)  # eta[:, 0] == 0
    deta = (eta[1:] - eta[:-1]) / h
    interval = np.empty((N, k + 1, n))
    interval[:, 0] = (-1) ** k * D[k, 1:] + deta[:, k - 1]
    for j in range(1, k):
        interval[:, j] = eta[1:, k - j] + deta[:, k - j - 1]
    interval[:, k] = dual.xstar[1:]
    terminal = np.empty((k, n))
    initial = np.empty((k, n))
    for j in range(k):
        m = k - 1 - j
        terminal[j] = (-1) ** (m + 1) * D[m, N] + eta[N, m]
        initial[j] = (-1) ** m * D[m, 0] - eta[0, m]
    return DualArguments(terminal, interval, initial)


# ---------------------------------------------------------------------------
# LP layouts


class Layout:
    """Named, contiguous blocks of LP variables in a fixed order."""

    def __init__(self):
        self.blocks: Dict[str, Tuple[int, Tuple[int, ...]]] = {}
        self.size = 0

    def add(self, name: str, shape: Tuple[int, ...]):
        self.blocks[name] = (self.size, shape)
        self.size += int(np.prod(shape)) if len(shape) else 1

    def index(self, name: str, *idx) -> int:
        off, shape = self.blocks[name]
        return off + int(np.ravel_multi_index(idx, shape)) if shape else off

    def cols(self, name: str, *idx) -> np.ndarray:
        """Columns of the trailing axis at a fixed leading index."""
        off, shape = self.blocks[name]
        base = off + int(np.ravel_multi_index(tuple(idx) + (0,), shape))
        return base + np.arange(shape[-1])

    def take(self, name: str, x: np.ndarray) -> np.ndarray:
        off, shape = self.blocks[name]
        size = int(np.prod(shape))
        return np.asarray(x[off:off + size]).reshape(shape)

    def __contains__(self, name):
        return name in self.blocks


class _Rows:
    """Row accumulator for sparse-in-spirit dense LP assembly."""

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.rows: List[np.ndarray] = []
        self.rhs: List[float] = []
        self.tags: Dict[str, List[int]] = {}

    def add(self, tag: str, coeffs: Dict, rhs: float = 0.0):
        row = np.zeros(self.nvars)
        for cols, vals in coeffs.items() if isinstance(coeffs, dict) else coeffs:
            row[cols] += vals
        self.tags.setdefault(tag, []).append(len(self.rows))
        self.rows.append(row)
        self.rhs.append(rhs)

    def block(self, tag: str, cols_list, mats, rhs):
        """Append ``sum_i mats[i] @ x[cols_list[i]] = rhs`` (vector rows)."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        M = np.zeros((rhs.shape[0], self.nvars))
        for cols, mat in zip(cols_list, mats):
            M[:, cols] += mat
        start = len(self.rows)
        self.rows.extend(M)
        self.rhs.extend(rhs)
        self.tags.setdefault(tag, []).extend(range(start, start + rhs.shape[0]))

    def matrix(self):
        if not self.rows:
            return np.zeros((0, self.nvars)), np.zeros(0)
        return np.array(self.rows), np.array(self.rhs)


@dataclass
class Transcription:
    lp: LPProblem
    layout: Layout
    eq_tags: Dict[str, List[int]]
    ineq_tags: Dict[str, List[int]]


def primal_layout(problem: MayerProblem, grid: Grid) -> Layout:
    F, N = problem.inclusion, grid.N
    L = Layout()
    L.add("z", (N + 1, problem.kappa, problem.n))
    L.add("v", (N, problem.n))
    if isinstance(F, SemilinearMap):
        L.add("u", (N, F.r))
    L.add("tau", ())
    return L


def transcribe_primal(problem: MayerProblem, grid: Grid) -> Transcription:
    """Euler transcription with the terminal cost in epigraph form."""
    F, k, n, N, h = problem.inclusion, problem.kappa, problem.n, grid.N, grid.h
    L = primal_layout(problem, grid)
    eq, ineq = _Rows(L.size), _Rows(L.size)
    I = np.eye(n)
    for i in range(N):
        for j in range(k):
            nxt = L.cols("z", i, j + 1) if j < k - 1 else L.cols("v", i)
            eq.block(f"chain:{i}:{j}", [L.cols("z", i + 1, j), L.cols("z", i, j), nxt],
                     [I, -I, -h * I], np.zeros(n))
    if isinstance(F, SemilinearMap):
        for i in range(N):
            cols = [L.cols("v", i), L.cols("u", i)] + [L.cols("z", i, j) for j in range(k)]
            eq.block(f"dyn:{i}", cols, [I, -F.B] + [-a for a in F.A], np.zeros(n))
        for i in range(N):
            ineq.block(f"U:{i}", [L.cols("u", i)], [F.U.G], F.U.h)
    for j, Q in enumerate(problem.Q):
        ineq.block(f"Q:{j}", [L.cols("z", 0, j)], [Q.G], Q.h)
    if isinstance(F, PolyhedralMap2):
        for i in range(N):
            ineq.block(f"graph:{i}", [L.cols("z", i, 0), L.cols("z", i, 1), L.cols("v", i)],
                       [F.A, F.B, -F.C], F.d)
    zN = np.concatenate([L.cols("z", N, j) for j in range(k)])
    tau = L.index("tau")
    for q in range(problem.phi.n_pieces):
        ineq.block(f"piece:{q}", [zN, np.array([tau])],
                   [problem.phi.C[q][None, :], -np.ones((1, 1))], [-problem.phi.b[q]])
    cost = np.zeros(L.size)
    cost[tau] = 1.0
    G, hv = ineq.matrix()
    E, f = eq.matrix()
    return Transcription(LPProblem(cost, G=G, h=hv, E=E, f=f), L, eq.tags, ineq.tags)


def _raise_status(sol: LPSolution, what: str):
    if sol.status is Status.INFEASIBLE:
        raise TranscriptionError(f"{what}: LP is infeasible", sol.status)
    if sol.status is Status.UNBOUNDED:
        raise TranscriptionError(f"{what}: LP is unbounded", sol.status)


def unpack_primal(problem: MayerProblem, grid: Grid, x: np.ndarray) -> PrimalTrajectory:
    L = primal_layout(problem, grid)
    u = L.take("u", x).copy() if "u" in L else None
    return PrimalTrajectory(grid, L.take("z", x).copy(), L.take("v", x).copy(), u)


def solve_primal_full(problem: MayerProblem, grid: Grid, tol: Tolerances = DEFAULT_TOL):
    """Like :func:`solve_primal` but also returns the transcription and LP solution."""
    tr = transcribe_primal(problem, grid)
    sol = solve_lp(tr.lp, tol)
    _raise_status(sol, "primal transcription")
    traj = unpack_primal(problem, grid, sol.x)
    return traj, problem.phi(traj.z[-1].reshape(-1)), tr, sol


def solve_primal(problem: MayerProblem, grid: Grid, tol: Tolerances = DEFAULT_TOL):
    """Optimal Euler trajectory and its terminal cost."""
    traj, value, _, _ = solve_primal_full(problem, grid, tol)
    return traj, value


def extract_dual_trajectory(sol: LPSolution, problem: MayerProblem, grid: Grid,
                            transcription: Optional[Transcription] = None) -> DualTrajectory:
    """Dual trajectory read off the multipliers of an optimal primal solve."""
    if not sol.optimal:
        raise ValueError("extraction needs an optimal LP solution")
    tr = transcription or transcribe_primal(problem, grid)
    k, n, N, h = problem.kappa, problem.n, grid.N, grid.h
    p = np.empty((N + 1, k, n))
    for i in range(N):
        for j in range(k):
            p[i + 1, j] = sol.y_eq[tr.eq_tags[f"chain:{i}:{j}"]]
    for j, Q in enumerate(problem.Q):
        p[0, j] = Q.G.T @ sol.y_ineq[tr.ineq_tags[f"Q:{j}"]]
    lam = None
    if isinstance(problem.inclusion, PolyhedralMap2):
        lam = np.array([sol.y_ineq[tr.ineq_tags[f"graph:{i}"]] / h for i in range(N)])
    # more active rows than variables: the multipliers may not be unique
    slack = tr.lp.h - tr.lp.G @ sol.x
    active = int(np.sum(slack <= DEFAULT_TOL.feas * (1.0 + np.abs(tr.lp.h))))
    info = {"possibly_nonunique": bool(active + tr.lp.E.shape[0] > tr.lp.n_vars),
            "source": "primal multipliers"}
    return dual_from_chain(problem, grid, p, lam, info)


# ---------------------------------------------------------------------------
# direct dual


def transcribe_dual_direct(problem: MayerProblem, grid: Grid) -> Transcription:
    """The discretized dual as one maximization LP in adjoint chain variables.

    The conjugate of the terminal cost, the graph functional of every interval
    and the support functions of the initial sets enter through their LP
    dual representations (convex weights, multipliers of ``U`` or of the graph
    rows, multipliers of ``Q_j``).
    """
    F, k, n, N, h = problem.inclusion, problem.kappa, problem.n, grid.N, grid.h
    phi = problem.phi
    L = Layout()
    L.add("p", (N + 1, k, n))
    L.add("theta", (phi.n_pieces,))
    for j, Q in enumerate(problem.Q):
        L.add(f"sigma{j}", (Q.G.shape[0],))
    poly = isinstance(F, PolyhedralMap2)
    if poly:
        L.add("lam", (N, F.s))
    else:
        L.add("mu", (N, F.U.G.shape[0]))
    eq = _Rows(L.size)
    I = np.eye(n)
    theta = L.cols("theta")
    # terminal: sum theta_q c_q = -p_N, sum theta = 1
    for j in range(k):
        eq.block(f"terminal:{j}", [theta, L.cols("p", N, j)],
                 [phi.C[:, j * n:(j + 1) * n].T, I], np.zeros(n))
    eq.block("weights", [theta], [np.ones((1, phi.n_pieces))], [1.0])
    for j, Q in enumerate(problem.Q):
        eq.block(f"initial:{j}", [L.cols(f"sigma{j}"), L.cols("p", 0, j)], [Q.G.T, -I], np.zeros(n))
    for i in range(N):
        vstar = L.cols("p", i + 1, k - 1)
        for j in range(k):
            # h * w_j = p[i, j] - p[i+1, j] - h p[i+1, j-1]
            cols = [L.cols("p", i, j), L.cols("p", i + 1, j)]
            mats = [I, -I]
            if j > 0:
                cols.append(L.cols("p", i + 1, j - 1))
                mats.append(-h * I)
            if poly:
                other = {0: F.A, 1: F.B}[j]
                cols.append(L.cols("lam", i))
                mats.append(h * other.T)
            else:
                cols.append(vstar)
                mats.append(-h * F.A[j].T)
            eq.block(f"interval:{i}:{j}", cols, mats, np.zeros(n))
        if poly:
            eq.block(f"velocity:{i}", [vstar, L.cols("lam", i)], [I, F.C.T], np.zeros(n))
        else:
            eq.block(f"control:{i}", [L.cols("mu", i), vstar], [F.U.G.T, -F.B.T], np.zeros(F.r))
    # nonnegativity of every block except p
    nonneg = np.arange(L.blocks["theta"][0], L.size)
    G = np.zeros((nonneg.size, L.size))
    G[np.arange(nonneg.size), nonneg] = -1.0
    cost = np.zeros(L.size)
    cost[theta] = phi.b
    for j, Q in enumerate(problem.Q):
        cost[L.cols(f"sigma{j}")] = -Q.h
    if poly:
        for i in range(N):
            cost[L.cols("lam", i)] = -h * F.d
    else:
        for i in range(N):
            cost[L.cols("mu", i)] = -h * F.U.h
    E, f = eq.matrix()
    lp = LPProblem(cost, G=G, h=np.zeros(nonneg.size), E=E, f=f, sense="max")
    return Transcription(lp, L, eq.tags, {"nonneg": list(range(nonneg.size))})


def solve_dual(problem: MayerProblem, grid: Grid, tol: Tolerances = DEFAULT_TOL):
    """Optimal discretized dual trajectory and the dual optimal value."""
    tr = transcribe_dual_direct(problem, grid)
    sol = solve_lp(tr.lp, tol)
    _raise_status(sol, "dual transcription")
    p = tr.layout.take("p", sol.x)
    lam = tr.layout.take("lam", sol.x).copy() if "lam" in tr.layout else None
    dual = dual_from_chain(problem, grid, p, lam, {"source": "dual LP"})
    return dual, float(sol.value)


def polyhedral_dual_from_multipliers(problem: MayerProblem, grid: Grid, lam, xstar0=None) -> DualTrajectory:
    """Dual trajectory generated by per-interval graph multipliers ``lam``.

    ``x*_{k+1} = -C^T lam_k`` and the velocity rows fix the rest of the chain;
    ``x*_0`` defaults to a linear extrapolation.  The result is dual feasible
    exactly when ``lam`` satisfies the discrete adjoint recursion.
    """
    F = problem.inclusion
    if not isinstance(F, PolyhedralMap2):
        raise TypeError("needs a polyhedral problem")
    lam = np.asarray(lam, dtype=float)
    N, h, n = grid.N, grid.h, problem.n
    if lam.shape != (N, F.s):
        raise ValueError(f"lam must have shape ({N}, {F.s})")
    p = np.empty((N + 1, 2, n))
    p[1:, 1] = -lam @ F.C
    if xstar0 is None:
        xstar0 = 2 * p[1, 1] - p[2, 1] if N >= 2 else p[1, 1]
    p[0, 1] = xstar0
    p[1:, 0] = (p[:-1, 1] - p[1:, 1]) / h + lam @ F.B
    p[0, 0] = p[1, 0] - h * lam[0] @ F.A
    return dual_from_chain(problem, grid, p, lam, {"source": "multipliers"})


# ---------------------------------------------------------------------------
# objective evaluation


def evaluate_primal_objective(problem: MayerProblem, traj: PrimalTrajectory,
                              check: bool = True) -> float:
    if traj.z.shape != (traj.grid.N + 1, problem.kappa, problem.n):
        raise ValueError("dimension mismatch between trajectory and problem")
    if check and not traj.is_feasible(problem, 1e-7):
        raise ValueError(f"trajectory is not feasible: {traj.residuals(problem)}")
    return problem.phi(traj.z[-1].reshape(-1))


@dataclass
class DualTerms:
    conjugate: float           # phi*(terminal argument)
    graph: np.ndarray          # M_F per interval
    support: np.ndarray        # W_{Q_j} per initial set

    def total(self, h: float) -> float:
        if self.conjugate == INF or np.any(self.support == INF) or np.any(self.graph == -INF):
            return -INF
        return float(-self.conjugate + h * np.sum(self.graph) - np.sum(self.support))


def dual_terms(problem: MayerProblem, args: DualArguments) -> DualTerms:
    conj = conjugate_value(problem.phi, args.terminal.reshape(-1))
    graph = np.array([m_value(problem.inclusion, a.reshape(-1)) for a in args.interval])
    supp = np.array([support_function(Q, args.initial[j])[0] for j, Q in enumerate(problem.Q)])
    return DualTerms(conj, graph, supp)


def evaluate_dual_objective(problem: MayerProblem, dual: DualTrajectory) -> float:
    """Discrete dual objective; ``-inf`` outside the effective domain."""
    if dual.xstar.shape != (dual.grid.N + 1, problem.n):
        raise ValueError("dimension mismatch between dual trajectory and problem")
    p = adjoint_chain(problem, dual)
    return dual_terms(problem, chain_arguments(problem, p, dual.grid.h)).total(dual.grid.h)


def boundary_balance(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory) -> float:
    """Summation-by-parts bookkeeping that vanishes on Euler-consistent states.

    ``-<terminal, z_N> + h sum_k (<z_k, w_k> - <v_k, x*_{k+1}>) - sum_j <initial_j, z_j,0>``
    """
    args = chain_arguments(problem, adjoint_chain(problem, dual), dual.grid.h)
    k = problem.kappa
    total = -float(np.sum(args.terminal * traj.z[-1]))
    total += dual.grid.h * float(np.sum(args.interval[:, :k] * traj.z[:-1])
                                 - np.sum(args.interval[:, k] * traj.v))
    total -= float(np.sum(args.initial * traj.z[0]))
    return total
