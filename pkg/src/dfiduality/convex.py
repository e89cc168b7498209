"""Polytopes, piecewise max-affine functions and the convex-analysis queries
the duality machinery needs: support functions, conjugates, subgradients and
normal-cone membership.  Every query reduces to one small LP."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .numerics import DEFAULT_TOL, LPProblem, Status, Tolerances, solve_lp

INF = float("inf")


def _vec(x, dim: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.shape[0] != dim:
        raise ValueError(f"dimension mismatch: {name} has length {a.shape[0]}, expected {dim}")
    return a


class Polytope:
    """The set ``{x : G x <= h}``; required nonempty, boundedness is optional."""

    def __init__(self, G, h, tol: Tolerances = DEFAULT_TOL):
        G = np.array(G, dtype=float, ndmin=2)
        h = np.array(h, dtype=float).reshape(-1)
        if G.shape[0] != h.shape[0]:
            raise ValueError(f"G has {G.shape[0]} rows but h has {h.shape[0]} entries")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
            raise ValueError("polytope data must be finite")
        G.setflags(write=False)
        h.setflags(write=False)
        self.G, self.h, self.tol = G, h, tol
        probe = solve_lp(LPProblem(np.zeros(self.dim), G=G, h=h), tol)
        if probe.status is Status.INFEASIBLE:
            raise ValueError("polytope is empty")
        self._feasible_point = probe.x

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @classmethod
    def box(cls, lo, hi) -> "Polytope":
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        eye = np.eye(lo.shape[0])
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @classmethod
    def point(cls, x) -> "Polytope":
        x = np.asarray(x, dtype=float).reshape(-1)
        return cls.box(x, x)

    @cached_property
    def bounded(self) -> bool:
        for i in range(self.dim):
            for s in (1.0, -1.0):
                c = np.zeros(self.dim)
                c[i] = s
                if solve_lp(LPProblem(c, G=self.G, h=self.h), self.tol).status is Status.UNBOUNDED:
                    return False
        return True

    def contains(self, x, tol: Optional[float] = None) -> bool:
        x = _vec(x, self.dim, "x")
        t = self.tol.feas if tol is None else tol
        return bool(np.all(self.G @ x <= self.h + t * (1.0 + np.abs(self.h))))

    def feasible_point(self) -> np.ndarray:
        return self._feasible_point.copy()

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return (self.G.shape == other.G.shape and np.array_equal(self.G, other.G)
                and np.array_equal(self.h, other.h))

    def __repr__(self):
        return f"Polytope(dim={self.dim}, rows={self.G.shape[0]})"


@dataclass(frozen=True, eq=False)
class PiecewiseMaxAffine:
    """phi(z) = max_i (<c_i, z> + b_i).  Rows of ``C`` are the slopes."""

    C: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        C = np.array(self.C, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        if C.shape[0] == 0:
            raise ValueError("phi needs at least one piece")
        if C.shape[0] != b.shape[0]:
            raise ValueError("phi: slope and offset counts differ")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(b))):
            raise ValueError("phi pieces must be finite")
        C.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_pieces(cls, pieces) -> "PiecewiseMaxAffine":
        cs, bs = zip(*pieces)
        return cls(np.array([np.atleast_1d(c) for c in cs], dtype=float), np.array(bs, dtype=float))

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.C.shape[0]

    def __call__(self, z) -> float:
        z = _vec(z, self.dim, "z")
        return float(np.max(self.C @ z + self.b))

    def active(self, z, tol: Optional[float] = None) -> np.ndarray:
        """Indices of pieces within ``tol`` of the max (default scale-aware)."""
        z = _vec(z, self.dim, "z")
        vals = self.C @ z + self.b
        top = float(np.max(vals))
        if tol is None:
            tol = 1e-7 * (1.0 + abs(top))
        return np.flatnonzero(vals >= top - tol)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseMaxAffine):
            return NotImplemented
        return np.array_equal(self.C, other.C) and np.array_equal(self.b, other.b)


def support_function(Q: Polytope, p, tol: Tolerances = DEFAULT_TOL) -> Tuple[float, Optional[np.ndarray]]:
    """``W_Q(p) = sup{<x,p> : x in Q}`` with a maximizer, or ``(inf, None)``."""
    p = _vec(p, Q.dim, "p")
    scale = float(np.max(np.abs(p), initial=0.0))
    # pricing tolerances are absolute, so a tiny p must be rescaled to be seen
    direction = p / scale if scale > 0.0 else p
    sol = solve_lp(LPProblem(direction, G=Q.G, h=Q.h, sense="max"), tol)
    if sol.status is Status.UNBOUNDED:
        return INF, None
    if not sol.optimal:
        raise RuntimeError(f"support LP ended with status {sol.status.value}")
    return float(p @ sol.x), sol.x


def _hull_lp(C: np.ndarray, target: np.ndarray, cost: np.ndarray) -> LPProblem:
    # variables: weights lam >= 0 with sum 1 and C^T lam = target
    P = C.shape[0]
    E = np.vstack([C.T, np.ones((1, P))])
    f = np.concatenate([target, [1.0]])
    return LPProblem(cost, G=-np.eye(P), h=np.zeros(P), E=E, f=f)


def conjugate_value(phi: PiecewiseMaxAffine, zstar, tol: Tolerances = DEFAULT_TOL) -> float:
    """phi*(z*) via the weight LP over the slopes; ``inf`` off their convex hull."""
    zstar = _vec(zstar, phi.dim, "zstar")
    sol = solve_lp(_hull_lp(phi.C, zstar, -phi.b), tol)
    if sol.status is Status.INFEASIBLE:
        return INF
    if not sol.optimal:
        raise RuntimeError(f"conjugate LP ended with status {sol.status.value}")
    return float(sol.value)


def hull_distance(C: np.ndarray, g, tol: Tolerances = DEFAULT_TOL) -> float:
    """l1 distance from ``g`` to the convex hull of the rows of ``C``."""
    C = np.asarray(C, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    P, d = C.shape
    # variables: [lam (P), e (d)] ; minimize sum e with |C^T lam - g| <= e
    cost = np.concatenate([np.zeros(P), np.ones(d)])
    G = np.block([
        [C.T, -np.eye(d)],
        [-C.T, -np.eye(d)],
        [-np.eye(P), np.zeros((P, d))],
    ])
    h = np.concatenate([g, -g, np.zeros(P)])
    E = np.concatenate([np.ones(P), np.zeros(d)])[None, :]
    sol = solve_lp(LPProblem(cost, G=G, h=h, E=E, f=[1.0]), tol)
    if not sol.optimal:
        raise RuntimeError(f"hull-distance LP ended with status {sol.status.value}")
    return max(float(sol.value), 0.0)


def subdifferential_contains(phi: PiecewiseMaxAffine, z, g, tol: float = 1e-7) -> bool:
    """Whether ``g`` lies in the subdifferential of ``phi`` at ``z``, within ``tol``."""
    z = _vec(z, phi.dim, "z")
    g = _vec(g, phi.dim, "g")
    act = phi.active(z)
    return hull_distance(phi.C[act], g) <= tol


def young_gap(phi: PiecewiseMaxAffine, z, zstar) -> float:
    """``phi(z) + phi*(z*) - <z, z*>``; nonnegative, zero exactly on subgradients."""
    z = _vec(z, phi.dim, "z")
    zstar = _vec(zstar, phi.dim, "zstar")
    cv = conjugate_value(phi, zstar)
    if cv == INF:
        return INF
    return phi(z) + cv - float(z @ zstar)


def dual_cone_contains(Q: Polytope, x, p, tol: float = 1e-7) -> bool:
    """True iff ``<p, y - x> >= -tol`` for every ``y`` in ``Q``.

    ``x`` must belong to ``Q``.
    """
    x = _vec(x, Q.dim, "x")
    p = _vec(p, Q.dim, "p")
    if not Q.contains(x):
        raise ValueError("point is not in the polytope")
    w, _ = support_function(Q, -p)
    if w == INF:
        return False
    # inf_Q <p, y> = -W_Q(-p)
    return -w - float(p @ x) >= -tol
