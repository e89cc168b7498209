"""Random bounded LPs small enough for the enumeration oracle."""
import numpy as np

from dfiduality.numerics import LPProblem


def random_bounded_lp(rng, max_vars=8, max_rows=16):
    """Box-bounded LP with random cuts, sometimes infeasible or with an equality.

    The box rows keep every instance bounded, so enumeration applies.
    """
    n = int(rng.integers(1, max_vars + 1))
    lo = rng.uniform(-2.0, 0.0, n)
    hi = lo + rng.uniform(0.2, 3.0, n)
    G = [np.eye(n), -np.eye(n)]
    h = [hi, -lo]
    extra = int(rng.integers(0, max_rows - 2 * n + 1)) if max_rows > 2 * n else 0
    n_eq = int(rng.integers(0, 2)) if n > 1 else 0
    extra = max(0, min(extra, max_rows - 2 * n - n_eq))
    if extra:
        Gx = rng.normal(size=(extra, n))
        if rng.random() < 0.3:
            # integer data makes ties and degenerate vertices common
            Gx = np.round(Gx)
        G.append(Gx)
        centre = (lo + hi) / 2
        slack = rng.uniform(-0.5, 1.0, extra)
        h.append(Gx @ centre + slack)
    E = f = None
    if n_eq:
        E = rng.normal(size=(1, n))
        f = E @ rng.uniform(lo, hi)
    cost = rng.normal(size=n)
    if rng.random() < 0.2:
        cost[rng.integers(0, n)] = 0.0
    return LPProblem(cost, G=np.vstack(G), h=np.concatenate(h), E=E, f=f,
                     sense="max" if rng.random() < 0.25 else "min")


def agree(a, b, rel=1e-8):
    if a.status != b.status:
        return False
    return not a.optimal or abs(a.value - b.value) <= rel * (1.0 + abs(a.value))


def capped(transcription, cap):
    """The primal LP with the epigraph variable bounded above by ``cap``."""
    lp = transcription.lp
    row = np.zeros(lp.n_vars)
    row[transcription.layout.index("tau")] = 1.0
    return LPProblem(lp.cost, G=np.vstack([lp.G, row]), h=np.append(lp.h, cap), E=lp.E, f=lp.f)
