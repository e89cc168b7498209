"""Grid certificates of optimality for a primal/dual trajectory pair.

Each check returns a :class:`CheckEntry` whose residual is a sup over grid
nodes of Euclidean norms (or of nonnegative gaps).  The default tolerance is
``max(1e-6, 5h)``: finite-difference residuals of a smooth adjoint are O(h).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .convex import INF, dual_cone_contains, hull_distance, subdifferential_contains, support_function, young_gap
from .dfi import MayerProblem, PolyhedralMap2, adjoint_system, lam_contains
from .transcription import (
    DualTrajectory,
    Grid,
    PrimalTrajectory,
    adjoint_chain,
    chain_arguments,
    dual_arguments,
    evaluate_dual_objective,
    evaluate_primal_objective,
    finite_difference,
    solve_dual,
    solve_primal,
)


def default_tolerance(grid: Grid) -> float:
    return max(1e-6, 5.0 * grid.h)


@dataclass
class CheckEntry:
    name: str
    residual: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)


@dataclass
class CertificateReport:
    entries: List[CheckEntry]
    gap: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failing(self) -> List[str]:
        return [e.name for e in self.entries if not e.passed]

    def entry(self, name: str) -> CheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "gap": self.gap,
                "entries": [asdict(e) for e in self.entries]}


def _same_grid(traj: PrimalTrajectory, dual: DualTrajectory):
    if traj.grid != dual.grid:
        raise ValueError(f"grid mismatch: primal N={traj.grid.N}, dual N={dual.grid.N}")


def _tol(tol, grid):
    return default_tolerance(grid) if tol is None else float(tol)


def _sup_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(a.reshape(a.shape[0], -1), axis=1)))


def _interior(values: np.ndarray, order: int) -> np.ndarray:
    r = max((order + 1) // 2, 1)
    return values[r:values.shape[0] - r]


# ---------------------------------------------------------------------------


def adjoint_ode_residual(problem: MayerProblem, dual: DualTrajectory,
                         window: Optional[Tuple[float, float]] = None) -> float:
    """Sup of the adjoint ODE residual of ``x*`` at interior nodes.

    ``window = (a, b)`` further restricts the sup to nodes with ``a <= t <= b``;
    convergence studies need a window that does not move with ``h``.
    """
    sys = adjoint_system(problem.inclusion)
    k, h = problem.kappa, dual.grid.h
    D = [finite_difference(dual.xstar, i, h) for i in range(k + 1)]
    res = np.array([sys.ode_residual([d[i] for d in D]) for i in range(dual.grid.N + 1)])
    keep = _interior(np.arange(dual.grid.N + 1), k)
    if window is not None:
        t = dual.grid.t[keep]
        eps = 1e-12
        keep = keep[(t >= window[0] - eps) & (t <= window[1] + eps)]
        if keep.size == 0:
            raise ValueError(f"window {window} holds no interior node on N={dual.grid.N}")
    return _sup_norm(res[keep])


def _semilinear_euler_lagrange(problem, dual, args):
    F = problem.inclusion
    k, h = problem.kappa, dual.grid.h
    sys = adjoint_system(F)
    D = [finite_difference(dual.xstar, i, h) for i in range(k + 1)]
    ode = adjoint_ode_residual(problem, dual)
    eta_dev = 0.0
    for j in range(1, k):
        formula = np.array([sys.eta([d[i] for d in D])[j - 1] for i in range(dual.grid.N + 1)])
        eta_dev = max(eta_dev, _sup_norm(_interior(formula - dual.eta[:, j - 1], k)))
    expect = np.stack([dual.xstar[1:] @ F.A[j] for j in range(k)], axis=1)
    discrete = _sup_norm(args.interval[:, :k] - expect)
    return {"ode": ode, "eta": eta_dev, "discrete": discrete}


def _polyhedral_euler_lagrange(problem, dual, args):
    F = problem.inclusion
    lam = dual.lam
    if lam is None:
        raise ValueError("polyhedral certificates need the multipliers lambda")
    h = dual.grid.h
    if lam.shape[0] >= 4:
        d2 = finite_difference(lam, 2, h)
        d1 = finite_difference(lam, 1, h)
        ode = _sup_norm(_interior(d2 @ F.C + d1 @ F.B - lam @ F.A, 2))
    else:
        ode = 0.0
    consistency = max(_sup_norm(dual.xstar[1:] + lam @ F.C),
                      _sup_norm(dual.eta[1:, 0] + lam @ F.B))
    discrete = _sup_norm(args.interval[:, 0] + lam @ F.A)
    return {"ode": ode, "consistency": consistency, "discrete": discrete}


def check_euler_lagrange(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
                         tol: Optional[float] = None) -> CheckEntry:
    """Adjoint equation of the inclusion, with finite differences on interior
    nodes, plus the exact discrete adjoint relations on every interval."""
    _same_grid(traj, dual)
    tol = _tol(tol, dual.grid)
    args = chain_arguments(problem, adjoint_chain(problem, dual), dual.grid.h)
    if isinstance(problem.inclusion, PolyhedralMap2):
        parts = _polyhedral_euler_lagrange(problem, dual, args)
    else:
        parts = _semilinear_euler_lagrange(problem, dual, args)
    res = max(parts.values())
    return CheckEntry("euler_lagrange", res, tol, bool(res <= tol), parts)


def check_euler_lagrange_generic(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
                                 tol: Optional[float] = None) -> CheckEntry:
    """Interval-by-interval membership in the locally adjoint map."""
    _same_grid(traj, dual)
    tol = _tol(tol, dual.grid)
    args = dual_arguments(problem, dual)
    k = problem.kappa
    bad = []
    for i in range(dual.grid.N):
        ok = lam_contains(problem.inclusion, args.interval[i, k], (traj.z[i], traj.v[i]),
                          args.interval[i, :k], tol)
        if not ok:
            bad.append(i)
    return CheckEntry("euler_lagrange_generic", float(len(bad)), 0.0, not bad,
                      {"failing_intervals": bad})


def check_transversality(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
                         tol: Optional[float] = None) -> Tuple[CheckEntry, CheckEntry]:
    """Normal-cone conditions at ``t = 0`` and the subgradient condition at ``t = 1``."""
    _same_grid(traj, dual)
    tol = _tol(tol, dual.grid)
    args = dual_arguments(problem, dual)
    gaps, members = [], []
    for j, Q in enumerate(problem.Q):
        x0 = traj.z[0, j]
        w, _ = support_function(Q, args.initial[j])
        gaps.append(w - float(args.initial[j] @ x0))
        members.append(dual_cone_contains(Q, x0, -args.initial[j], tol))
    res0 = max(max(gaps), 0.0)
    start = CheckEntry("transversality_t0", res0, tol, all(members),
                       {"support_gaps": gaps})

    zN = traj.z[-1].reshape(-1)
    g = args.terminal.reshape(-1)
    act = problem.phi.active(zN)
    dist = hull_distance(problem.phi.C[act], g)
    yg = young_gap(problem.phi, zN, g)
    end = CheckEntry("transversality_t1", dist, tol, subdifferential_contains(problem.phi, zN, g, tol),
                     {"young_gap": yg if math.isfinite(yg) else "inf"})
    return start, end


def check_maximum_condition(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
                            tol: Optional[float] = None) -> CheckEntry:
    """The control (or velocity) maximizes the Hamiltonian on each interval."""
    _same_grid(traj, dual)
    tol = _tol(tol, dual.grid)
    F = problem.inclusion
    if isinstance(F, PolyhedralMap2):
        if dual.lam is None:
            raise ValueError("polyhedral certificates need the multipliers lambda")
        comp = max(abs(float(F.graph_residual(traj.z[i], traj.v[i]) @ dual.lam[i]))
                   for i in range(dual.grid.N))
        neg = float(max(-np.min(dual.lam), 0.0))
        res = max(comp, neg)
        return CheckEntry("maximum_condition", res, tol, bool(res <= tol),
                          {"complementarity": comp, "negativity": neg})
    worst = 0.0
    for i in range(dual.grid.N):
        y = dual.xstar[i + 1]
        w, _ = support_function(F.U, F.B.T @ y)
        worst = max(worst, w - float((F.B @ traj.u[i]) @ y))
    return CheckEntry("maximum_condition", worst, tol, bool(worst <= tol))


def check_weak_duality(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
                       tight: Optional[float] = None) -> Tuple[float, bool]:
    """``primal - dual`` and whether it is nonnegative up to rounding.

    With ``tight`` the gap must also be at most ``tight``.
    """
    primal = evaluate_primal_objective(problem, traj)
    dv = evaluate_dual_objective(problem, dual)
    if dv == -INF:
        return INF, tight is None
    gap = primal - dv
    ok = gap >= -1e-6 * (1.0 + max(abs(primal), abs(dv)))
    if tight is not None:
        ok = ok and gap <= tight
    return gap, bool(ok)


def duality_gap(problem: MayerProblem, grid: Grid) -> float:
    """``|primal optimum - dual optimum|`` of the two transcriptions."""
    _, pv = solve_primal(problem, grid)
    _, dv = solve_dual(problem, grid)
    return abs(pv - dv)


def certify(problem: MayerProblem, traj: PrimalTrajectory, dual: DualTrajectory,
            tol: Optional[float] = None, tight: Optional[float] = None) -> CertificateReport:
    """Run every check; ``tight`` additionally bounds the duality gap."""
    tol = _tol(tol, dual.grid)
    entries = [check_euler_lagrange(problem, traj, dual, tol)]
    entries.extend(check_transversality(problem, traj, dual, tol))
    entries.append(check_maximum_condition(problem, traj, dual, tol))
    gap, ok = check_weak_duality(problem, traj, dual, tight)
    entries.append(CheckEntry("weak_duality", max(0.0, -gap) if math.isfinite(gap) else 0.0,
                              1e-6, ok, {"gap": gap if math.isfinite(gap) else "inf"}))
    return CertificateReport(entries, gap)
