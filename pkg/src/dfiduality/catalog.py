"""Small problems with known Euler-discretized optima."""
from __future__ import annotations

import numpy as np

from .convex import PiecewiseMaxAffine, Polytope
from .dfi import MayerProblem, PolyhedralMap2, SemilinearMap


def first_order_drift(sign: float = 1.0) -> MayerProblem:
    """``x' = u``, ``|u| <= 1``, ``x(0) = 1``, minimize ``sign * x(1)``.

    With ``sign = 1`` every grid gives optimum 0 (``u = -1``) and ``x* = -1``;
    with ``sign = -1`` the optimum is -2.
    """
    F = SemilinearMap([[[0.0]]], [[1.0]], Polytope.box([-1.0], [1.0]))
    phi = PiecewiseMaxAffine([[sign]], [0.0])
    return MayerProblem(F, (Polytope.point([1.0]),), phi, name="first_order_drift")


def second_order_polyhedral() -> MayerProblem:
    """``|x''| <= 1`` written as graph rows, at rest at 0, minimize ``x(1)``.

    Explicit Euler gives the optimum ``-(N-1)/(2N)``.
    """
    F = PolyhedralMap2(A=[[0.0], [0.0]], B=[[0.0], [0.0]], C=[[-1.0], [1.0]], d=[1.0, 1.0])
    Q = (Polytope.point([0.0]), Polytope.point([0.0]))
    phi = PiecewiseMaxAffine([[1.0, 0.0]], [0.0])
    return MayerProblem(F, Q, phi, name="second_order_polyhedral")


def second_order_semilinear() -> MayerProblem:
    """The same dynamics as :func:`second_order_polyhedral` with a control."""
    F = SemilinearMap([[[0.0]], [[0.0]]], [[1.0]], Polytope.box([-1.0], [1.0]))
    Q = (Polytope.point([0.0]), Polytope.point([0.0]))
    phi = PiecewiseMaxAffine([[1.0, 0.0]], [0.0])
    return MayerProblem(F, Q, phi, name="second_order_semilinear")


def second_order_polyhedral_hand_multipliers(N: int) -> np.ndarray:
    """Graph multipliers ``(0, 1 - t_{k+1})`` that are optimal on ``N`` steps."""
    t = np.arange(1, N + 1) / N
    return np.stack([np.zeros(N), 1.0 - t], axis=1)


CATALOG = {
    "first_order_drift": first_order_drift,
    "second_order_polyhedral": second_order_polyhedral,
    "second_order_semilinear": second_order_semilinear,
}
