"""Mayer problems for higher-order differential inclusions and the pointwise
calculus on their right-hand sides.

Two inclusion classes are supported:

* ``SemilinearMap``: ``F(x, v1, ..., v_{k-1}) = A0 x + sum_j Aj vj + B U``
  with a bounded polytope ``U``;
* ``PolyhedralMap2``: second-order maps ``F(x, v1) = {v : A x + B v1 - C v <= d}``.

A state argument ``z`` is always the tuple ``(x, v1, ..., v_{k-1})``, given as
a sequence of vectors or an array of shape ``(kappa, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from .convex import INF, PiecewiseMaxAffine, Polytope, support_function
from .numerics import DEFAULT_TOL, LPProblem, Status, Tolerances, solve_lp


def _mat(a, shape, name):
    m = np.array(a, dtype=float, ndmin=2)
    if m.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


class SemilinearMap:
    """``A0 x + A1 v1 + ... + B u``, ``u`` in the bounded polytope ``U``."""

    def __init__(self, A: Sequence, B, U: Polytope):
        if len(A) == 0:
            raise ValueError("A must hold kappa >= 1 matrices")
        A0 = np.array(A[0], dtype=float, ndmin=2)
        n = A0.shape[0]
        self.A = tuple(_mat(a, (n, n), f"A[{j}]") for j, a in enumerate(A))
        Bm = np.array(B, dtype=float, ndmin=2)
        if Bm.shape[0] != n and Bm.size == n:
            Bm = Bm.reshape(n, -1)
        self.B = _mat(Bm, (n, Bm.shape[1]), "B")
        if not isinstance(U, Polytope):
            raise TypeError("U must be a Polytope")
        if U.dim != self.B.shape[1]:
            raise ValueError(f"U has dimension {U.dim} but B has {self.B.shape[1]} columns")
        if not U.bounded:
            raise ValueError("U must be bounded")
        self.U = U

    kind = "semilinear"

    @property
    def kappa(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def r(self) -> int:
        return self.B.shape[1]


class PolyhedralMap2:
    """``F(x, v1) = {v : A x + B v1 - C v <= d}``; order two only.

    ``reference`` is an optional ``(x, v1)`` at which ``F`` must be nonempty.
    """

    kind = "polyhedral2"
    kappa = 2

    def __init__(self, A, B, C, d, reference=None):
        A = np.array(A, dtype=float, ndmin=2)
        s, n = A.shape
        self.A = _mat(A, (s, n), "A")
        self.B = _mat(B, (s, n), "B")
        self.C = _mat(C, (s, n), "C")
        dv = np.array(d, dtype=float).reshape(-1)
        if dv.shape[0] != s:
            raise ValueError(f"d must have length s={s}, got {dv.shape[0]}")
        if not np.all(np.isfinite(dv)):
            raise ValueError("d has non-finite entries")
        dv.setflags(write=False)
        self.d = dv
        if reference is not None:
            if not np.isfinite(hamiltonian(self, reference, np.zeros(n))):
                raise ValueError("F is empty at the reference point")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def s(self) -> int:
        return self.A.shape[0]

    def graph_residual(self, z, v) -> np.ndarray:
        """``A x + B v1 - C v - d``; feasible iff every entry is <= 0."""
        z = _state(self, z)
        return self.A @ z[0] + self.B @ z[1] - self.C @ np.asarray(v, dtype=float) - self.d


InclusionMap = Union[SemilinearMap, PolyhedralMap2]


@dataclass(frozen=True, eq=False)
class MayerProblem:
    """Minimize ``phi(x(1), ..., x^(k-1)(1))`` over solutions of the inclusion
    with ``x^(j)(0)`` in ``Q[j]``."""

    inclusion: InclusionMap
    Q: Tuple[Polytope, ...]
    phi: PiecewiseMaxAffine
    name: str = field(default="")

    def __post_init__(self):
        F = self.inclusion
        if not isinstance(F, (SemilinearMap, PolyhedralMap2)):
            raise TypeError("inclusion must be a SemilinearMap or PolyhedralMap2")
        Q = tuple(self.Q)
        if len(Q) != F.kappa:
            raise ValueError("Q must have κ entries")
        for j, q in enumerate(Q):
            if q.dim != F.n:
                raise ValueError(f"Q[{j}] has dimension {q.dim}, expected n={F.n}")
        if self.phi.dim != F.kappa * F.n:
            raise ValueError(f"phi acts on dimension {self.phi.dim}, expected κ·n={F.kappa * F.n}")
        object.__setattr__(self, "Q", Q)

    @property
    def kappa(self) -> int:
        return self.inclusion.kappa

    @property
    def n(self) -> int:
        return self.inclusion.n

    @property
    def kind(self) -> str:
        return self.inclusion.kind


def _state(F, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 1 and z.shape[0] == F.kappa * F.n:
        z = z.reshape(F.kappa, F.n)
    if z.shape != (F.kappa, F.n):
        raise ValueError(f"dimension mismatch: state must have shape ({F.kappa}, {F.n}), got {z.shape}")
    return z


def _vec(v, n, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise ValueError(f"dimension mismatch: {name} has length {v.shape[0]}, expected {n}")
    return v


def _drift(F: SemilinearMap, z) -> np.ndarray:
    return sum(F.A[j] @ z[j] for j in range(F.kappa))


def _polyhedral_sup(F: PolyhedralMap2, z, vstar, tol):
    rhs = F.d - F.A @ z[0] - F.B @ z[1]
    sol = solve_lp(LPProblem(vstar, G=-F.C, h=rhs, sense="max"), tol)
    if sol.status is Status.INFEASIBLE:
        return -INF
    if sol.status is Status.UNBOUNDED:
        return INF
    return float(sol.value)


def hamiltonian(F: InclusionMap, z, vstar, tol: Tolerances = DEFAULT_TOL) -> float:
    """``sup {<v, v*> : v in F(z)}``; ``-inf`` when ``F(z)`` is empty."""
    z = _state(F, z)
    vstar = _vec(vstar, F.n, "vstar")
    if isinstance(F, SemilinearMap):
        w, _ = support_function(F.U, F.B.T @ vstar, tol)
        return float(_drift(F, z) @ vstar) + w
    return _polyhedral_sup(F, z, vstar, tol)


def contains(F: InclusionMap, z, v, tol: float = DEFAULT_TOL.feas) -> bool:
    """Whether ``v`` is in ``F(z)`` up to ``tol``."""
    z = _state(F, z)
    v = _vec(v, F.n, "v")
    if isinstance(F, PolyhedralMap2):
        res = F.graph_residual(z, v)
        return bool(np.all(res <= tol * (1.0 + np.abs(F.d))))
    return control_residual(F, z, v) <= tol * (1.0 + float(np.max(np.abs(v))))


def control_residual(F: SemilinearMap, z, v) -> float:
    """``min_{u in U} ||B u - (v - drift)||_1``."""
    target = np.asarray(v, dtype=float) - _drift(F, z)
    n, r = F.B.shape
    # variables [u (r), e (n)]
    cost = np.concatenate([np.zeros(r), np.ones(n)])
    G = np.block([
        [F.B, -np.eye(n)],
        [-F.B, -np.eye(n)],
        [F.U.G, np.zeros((F.U.G.shape[0], n))],
    ])
    h = np.concatenate([target, -target, F.U.h])
    sol = solve_lp(LPProblem(cost, G=G, h=h))
    return max(float(sol.value), 0.0)


def argmax_contains(F: InclusionMap, z, v, vstar, tol: float = 1e-7) -> bool:
    """Whether ``v`` maximizes ``<., v*>`` over ``F(z)``."""
    H = hamiltonian(F, z, vstar)
    if not np.isfinite(H):
        raise ValueError("argmax undefined: Hamiltonian is not finite")
    if not contains(F, z, v):
        return False
    return float(_vec(v, F.n, "v") @ _vec(vstar, F.n, "vstar")) >= H - tol


def lam_contains(F: InclusionMap, vstar, point, candidate, tol: float = 1e-7) -> bool:
    """Membership of ``candidate = (x*, v1*, ...)`` in the locally adjoint map
    at ``point = (z, v)`` evaluated on ``v*``."""
    z, v = point
    z = _state(F, z)
    v = _vec(v, F.n, "v")
    vstar = _vec(vstar, F.n, "vstar")
    cand = _state(F, candidate)
    if not contains(F, z, v):
        raise ValueError("point is not in the graph of F")
    if isinstance(F, SemilinearMap):
        if not argmax_contains(F, z, v, vstar, tol):
            return False
        expect = np.array([a.T @ vstar for a in F.A])
        return bool(np.max(np.abs(cand - expect)) <= tol * (1.0 + float(np.max(np.abs(vstar)))))
    return _lam_residual(F, z, v, vstar, cand, tol) <= tol * (1.0 + float(np.max(np.abs(cand))) + float(np.max(np.abs(vstar))))


def _lam_residual(F: PolyhedralMap2, z, v, vstar, cand, tol):
    """l1 mismatch of the best lambda >= 0 supported on the active rows."""
    res = F.graph_residual(z, v)
    act = np.flatnonzero(res >= -tol * (1.0 + np.abs(F.d)))
    target = np.concatenate([cand[0], cand[1], vstar])
    M = -np.vstack([F.A.T, F.B.T, F.C.T])[:, act]
    k, q = M.shape[1], M.shape[0]
    cost = np.concatenate([np.zeros(k), np.ones(q)])
    G = np.block([
        [M, -np.eye(q)],
        [-M, -np.eye(q)],
        [-np.eye(k), np.zeros((k, q))],
    ])
    h = np.concatenate([target, -target, np.zeros(k)])
    sol = solve_lp(LPProblem(cost, G=G, h=h))
    return max(float(sol.value), 0.0)


def polyhedral_m_value(F: PolyhedralMap2, wstar, tol: Tolerances = DEFAULT_TOL):
    """Value of the graph LP together with its row multipliers ``lambda``.

    Returns ``(value, lambda)``; ``lambda`` is ``None`` unless the LP is optimal.
    """
    w = np.asarray(wstar, dtype=float).reshape(-1)
    n = F.n
    if w.shape[0] != 3 * n:
        raise ValueError(f"dimension mismatch: wstar must have length {3 * n}")
    cost = np.concatenate([w[:n], w[n:2 * n], -w[2 * n:]])
    G = np.hstack([F.A, F.B, -F.C])
    sol = solve_lp(LPProblem(cost, G=G, h=F.d), tol)
    if sol.status is Status.UNBOUNDED:
        return -INF, None
    if sol.status is Status.INFEASIBLE:
        return INF, None
    return float(sol.value), sol.y_ineq


def m_value(F: InclusionMap, wstar, tol: Tolerances = DEFAULT_TOL) -> float:
    """``inf`` over the graph of ``F`` of ``<x,x*> + sum <vj,vj*> - <v,v*>``.

    ``wstar`` stacks ``(x*, v1*, ..., v_{k-1}*, v*)``.
    """
    if isinstance(F, PolyhedralMap2):
        return polyhedral_m_value(F, wstar, tol)[0]
    k, n = F.kappa, F.n
    w = np.asarray(wstar, dtype=float).reshape(-1)
    if w.shape[0] != (k + 1) * n:
        raise ValueError(f"dimension mismatch: wstar must have length {(k + 1) * n}")
    zstar, vstar = w[:k * n].reshape(k, n), w[k * n:]
    m_tol = 1e-7 * (1.0 + float(np.linalg.norm(vstar)))
    for j in range(k):
        if np.linalg.norm(zstar[j] - F.A[j].T @ vstar) > m_tol:
            return -INF
    wu, _ = support_function(F.U, F.B.T @ vstar, tol)
    return -wu


# ---------------------------------------------------------------------------
# adjoint system of the semilinear class

_SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")
_SUP = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def _deriv(i: int) -> str:
    if i == 0:
        return "x*"
    if i <= 3:
        return "x*" + "′″‴"[i - 1]
    return "x*⁽" + str(i).translate(_SUP) + "⁾"


def _linear_text(terms) -> str:
    """Render ``[(sign, index, order), ...]`` as ``A₀ᵀx* − A₁ᵀx*′``."""
    out = ""
    for pos, (sgn, idx, order) in enumerate(terms):
        body = f"A{str(idx).translate(_SUB)}ᵀ{_deriv(order)}"
        if pos == 0:
            out = body if sgn > 0 else "−" + body
        else:
            out += (" + " if sgn > 0 else " − ") + body
    return out


@dataclass(frozen=True)
class AdjointSystem:
    """The adjoint ODE ``(-1)^k x*^(k) = sum_i coeffs[i] x*^(i)`` and the
    elimination formulas ``eta_j = sum_i eta_coeffs[j-1][i] x*^(i)``.

    ``coeffs[i] = (-1)^i A_i^T``; ``eta_coeffs[j-1][i] = (-1)^i A_{k-j+i}^T``
    for ``i < j``.
    """

    kappa: int
    lhs_sign: int
    coeffs: Tuple[np.ndarray, ...]
    eta_coeffs: Tuple[Tuple[np.ndarray, ...], ...]
    text: str

    def ode_residual(self, derivs: Sequence[np.ndarray]) -> np.ndarray:
        """Residual at one point; ``derivs[i]`` is ``x*^(i)``, ``i = 0..kappa``."""
        r = self.lhs_sign * np.asarray(derivs[self.kappa], dtype=float)
        for i, M in enumerate(self.coeffs):
            r = r - M @ np.asarray(derivs[i], dtype=float)
        return r

    def eta(self, derivs: Sequence[np.ndarray]) -> List[np.ndarray]:
        """``[eta_1, ..., eta_{kappa-1}]`` from ``x*`` and its derivatives."""
        return [sum(M @ np.asarray(derivs[i], dtype=float) for i, M in enumerate(row))
                for row in self.eta_coeffs]


def adjoint_system(F: SemilinearMap) -> AdjointSystem:
    if not isinstance(F, SemilinearMap):
        raise TypeError("adjoint_system needs a SemilinearMap")
    k = F.kappa
    coeffs = tuple((-1) ** i * F.A[i].T for i in range(k))
    eta_coeffs = tuple(
        tuple((-1) ** i * F.A[k - j + i].T for i in range(j)) for j in range(1, k)
    )
    parts = []
    for j in range(1, k):
        rhs = _linear_text([((-1) ** i, k - j + i, i) for i in range(j)])
        parts.append(f"η{str(j).translate(_SUB)}* = {rhs}")
    lhs = ("" if k % 2 == 0 else "−") + _deriv(k)
    parts.append(f"{lhs} = " + _linear_text([((-1) ** i, i, i) for i in range(k)]))
    return AdjointSystem(k, (-1) ** k, coeffs, eta_coeffs, "; ".join(parts))
