"""Brute-force vertex enumeration, used as an independent LP oracle."""
from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .lp import DEFAULT_TOL, LPProblem, LPSolution, Status, Tolerances

GUARD = 10**6
_CHUNK = 20000


class EnumerationError(ValueError):
    pass


def _unpack(p, h):
    if h is None:
        G, h = p.G, p.h
    else:
        G = p
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float).reshape(-1)
    if G.ndim != 2 or G.shape[0] != h.shape[0]:
        raise ValueError("G and h have inconsistent shapes")
    return G, h


def _combos(m, k):
    it = itertools.combinations(range(m), k)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=int).reshape(len(block), k)


def _raw_vertices(G, h, tol):
    m, d = G.shape
    found = []
    for idx in _combos(m, d):
        M = G[idx]
        # |det| against the Hadamard bound is a scale-free singularity test
        bound = np.prod(np.maximum(np.linalg.norm(M, axis=2), 1e-300), axis=1)
        ok = np.abs(np.linalg.det(M)) > 1e-10 * bound
        if not ok.any():
            continue
        X = np.linalg.solve(M[ok], h[idx[ok]][..., None])[..., 0]
        scale = 1.0 + np.abs(h)
        feas = np.all(X @ G.T <= h + tol * scale, axis=1)
        found.append(X[feas])
    if not found:
        return np.zeros((0, d))
    return np.vstack(found)


def _merge(X, tol):
    if X.shape[0] == 0:
        return X
    order = np.lexsort(X.T[::-1])
    X = X[order]
    keep = np.empty_like(X)
    size = np.empty(X.shape[0])
    n = 0
    for x in X:
        K = keep[:n]
        if n and np.any(np.max(np.abs(K - x), axis=1) <= tol * (1.0 + size[:n])):
            continue
        keep[n] = x
        size[n] = np.max(np.abs(x))
        n += 1
    return keep[:n].copy()


def _has_ray(G, tol):
    """True when the cone {r : G r <= 0} contains a nonzero direction."""
    m, d = G.shape
    if m == 0 or np.linalg.matrix_rank(G) < d:
        return True
    if d == 1:
        return bool(np.all(G[:, 0] <= tol) or np.all(G[:, 0] >= -tol))
    for idx in _combos(m, d - 1):
        M = G[idx]
        # null direction of M as the generalized cross product of its rows
        R = np.stack([(-1) ** i * np.linalg.det(np.delete(M, i, axis=2)) for i in range(d)], axis=1)
        bound = np.prod(np.maximum(np.linalg.norm(M, axis=2), 1e-300), axis=1)
        norm = np.linalg.norm(R, axis=1)
        rank_ok = norm > 1e-10 * bound
        if not rank_ok.any():
            continue
        R = R[rank_ok] / norm[rank_ok, None]
        GR = R @ G.T
        if np.any(np.all(GR <= tol, axis=1)) or np.any(np.all(GR >= -tol, axis=1)):
            return True
    return False


def enumerate_vertices(p, h=None, tol: float = DEFAULT_TOL.vertex, guard: int = GUARD) -> np.ndarray:
    """All vertices of ``{x : G x <= h}`` as rows of an array.

    ``p`` is either a polytope-like object with ``G``/``h`` attributes or the
    matrix ``G`` itself (then pass ``h``).  Every ``d``-subset of rows is tried;
    duplicates are merged within ``tol``.
    """
    G, h = _unpack(p, h)
    m, d = G.shape
    if comb(m, d) > guard:
        raise EnumerationError(f"too large for enumeration: C({m},{d}) > {guard}")
    V = _merge(_raw_vertices(G, h, tol), 1e3 * tol)
    if V.shape[0] == 0:
        # no vertex: empty when the rows have full rank, otherwise a lineality space
        if d > 0 and (m == 0 or np.linalg.matrix_rank(G) < d):
            raise EnumerationError("unbounded")
        return V
    if _has_ray(G, 1e-10):
        raise EnumerationError("unbounded")
    return V


def _eliminate_equalities(lp: LPProblem, tol):
    """Return (x0, N) with {x : E x = f} = {x0 + N y}, or None if inconsistent."""
    n = lp.n_vars
    if lp.E.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    x0, *_ = np.linalg.lstsq(lp.E, lp.f, rcond=None)
    if np.max(np.abs(lp.E @ x0 - lp.f)) > tol * (1.0 + np.max(np.abs(lp.f))):
        return None
    _, s, vt = np.linalg.svd(lp.E)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1.0))) if s.size else 0
    return x0, vt[rank:].T


def solve_lp_by_enumeration(lp: LPProblem, tol: Tolerances = DEFAULT_TOL) -> LPSolution:
    """Optimize over the enumerated vertices of the (bounded) feasible region.

    Equality rows are removed by substitution first.  Multipliers are not
    produced; the oracle checks status and value only.
    """
    elim = _eliminate_equalities(lp, tol.feas)
    if elim is None:
        return LPSolution(Status.INFEASIBLE)
    x0, N = elim
    G = lp.G @ N
    h = lp.h - lp.G @ x0
    sign = 1.0 if lp.sense == "min" else -1.0
    if N.shape[1] == 0:
        if np.all(lp.G @ x0 <= lp.h + tol.feas * (1.0 + np.abs(lp.h))):
            return LPSolution(Status.OPTIMAL, x=x0, value=float(lp.cost @ x0))
        return LPSolution(Status.INFEASIBLE)
    m, d = G.shape
    if comb(m, d) > GUARD:
        raise EnumerationError(f"too large for enumeration: C({m},{d}) > {GUARD}")
    V = _merge(_raw_vertices(G, h, tol.feas), 1e3 * tol.vertex)
    if V.shape[0] == 0:
        if m and np.linalg.matrix_rank(G) == d:
            return LPSolution(Status.INFEASIBLE)
        raise EnumerationError("unbounded")
    if _has_ray(G, 1e-10):
        raise EnumerationError("unbounded")
    X = x0 + V @ N.T
    vals = X @ lp.cost
    k = int(np.argmin(sign * vals))
    return LPSolution(Status.OPTIMAL, x=X[k], value=float(vals[k]))
