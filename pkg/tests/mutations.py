"""Systematic single-component mutations of a dual trajectory."""
import copy


def _nodes(N):
    return sorted({0, 1, N // 2, N - 1, N})


def dual_mutations(dual, eps):
    """Yield ``(label, mutated dual)``: every array field, several nodes, both signs."""
    N = dual.grid.N
    for sign in (1.0, -1.0):
        for k in _nodes(N):
            for i in range(dual.xstar.shape[1]):
                d = copy.deepcopy(dual)
                d.xstar[k, i] += sign * eps
                yield f"xstar[{k},{i}]{sign:+.0f}", d
            for j in range(dual.eta.shape[1]):
                d = copy.deepcopy(dual)
                d.eta[k, j] += sign * eps
                yield f"eta[{k},{j}]{sign:+.0f}", d
        if dual.lam is not None:
            for k in _nodes(N - 1):
                for q in range(dual.lam.shape[1]):
                    d = copy.deepcopy(dual)
                    d.lam[k, q] += sign * eps
                    yield f"lam[{k},{q}]{sign:+.0f}", d

