"""Strict JSON problem documents and deterministic report encoding."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .convex import PiecewiseMaxAffine, Polytope
from .dfi import MayerProblem, PolyhedralMap2, SemilinearMap
from .numerics import DEFAULT_TOL, Tolerances
from .transcription import DualTrajectory, Grid


class ProblemFormatError(ValueError):
    """Raised with the JSON path of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class Options:
    N: Optional[int] = None
    certificate_tol: Optional[float] = None
    lp_tol: Tolerances = field(default_factory=lambda: DEFAULT_TOL)


_TOP_SEMILINEAR = {"kind", "name", "kappa", "n", "r", "A", "B", "U", "Q", "phi", "N", "tolerances"}
_TOP_POLYHEDRAL = {"kind", "name", "kappa", "n", "s", "A", "B", "C", "d", "Q", "phi", "reference",
                   "N", "tolerances"}
_TOL_KEYS = {"certificate", "pivot", "feas", "cs", "gap", "vertex"}


def _keys(doc, allowed, path, required=()):
    if not isinstance(doc, dict):
        raise ProblemFormatError(path, "expected an object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ProblemFormatError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
    for key in required:
        if key not in doc:
            raise ProblemFormatError(f"{path}.{key}" if path else key, "missing required field")


def _int(doc, key, path, minimum=1):
    val = doc.get(key)
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise ProblemFormatError(path, f"expected an integer >= {minimum}")
    return val


def _array(val, path, shape):
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(path, "expected a numeric array") from None
    if arr.shape != shape:
        raise ProblemFormatError(path, f"expected shape {list(shape)}, got {list(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise ProblemFormatError(path, "entries must be finite")
    return arr


def _polytope(doc, path, dim) -> Polytope:
    _keys(doc, {"G", "h"}, path, ("G", "h"))
    h = np.array(doc["h"], dtype=float) if isinstance(doc["h"], list) else None
    if h is None or h.ndim != 1:
        raise ProblemFormatError(f"{path}.h", "expected a vector")
    G = _array(doc["G"], f"{path}.G", (h.shape[0], dim))
    try:
        return Polytope(G, h)
    except ValueError as exc:
        raise ProblemFormatError(path, str(exc)) from None


def _phi(doc, path, dim) -> PiecewiseMaxAffine:
    _keys(doc, {"pieces"}, path, ("pieces",))
    pieces = doc["pieces"]
    if not isinstance(pieces, list) or not pieces:
        raise ProblemFormatError(f"{path}.pieces", "expected a nonempty list")
    C, b = [], []
    for i, pc in enumerate(pieces):
        p = f"{path}.pieces[{i}]"
        _keys(pc, {"c", "b"}, p, ("c", "b"))
        C.append(_array(pc["c"], f"{p}.c", (dim,)))
        b.append(float(_array(pc["b"], f"{p}.b", ())))
    return PiecewiseMaxAffine(np.array(C), np.array(b))


def _tolerances(doc, path, opts: Options):
    _keys(doc, _TOL_KEYS, path)
    vals = {}
    for key, val in doc.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            raise ProblemFormatError(f"{path}.{key}", "expected a positive number")
        vals[key] = float(val)
    if "certificate" in vals:
        opts.certificate_tol = vals.pop("certificate")
    if vals:
        base = {k: getattr(DEFAULT_TOL, k) for k in ("pivot", "feas", "cs", "gap", "vertex")}
        base.update(vals)
        opts.lp_tol = Tolerances(**base)


def parse_problem_document(doc: Dict[str, Any]):
    """Validate a decoded document into ``(MayerProblem, Options)``."""
    if not isinstance(doc, dict):
        raise ProblemFormatError("", "document must be a JSON object")
    kind = doc.get("kind")
    if kind not in ("semilinear", "polyhedral2"):
        raise ProblemFormatError("kind", "expected 'semilinear' or 'polyhedral2'")
    opts = Options()
    if kind == "semilinear":
        _keys(doc, _TOP_SEMILINEAR, "", ("kind", "kappa", "n", "r", "A", "B", "U", "Q", "phi"))
        kappa = _int(doc, "kappa", "kappa")
        n = _int(doc, "n", "n")
        r = _int(doc, "r", "r")
        if not isinstance(doc["A"], list) or len(doc["A"]) != kappa:
            raise ProblemFormatError("A", "A must have κ matrices")
        A = [_array(a, f"A[{j}]", (n, n)) for j, a in enumerate(doc["A"])]
        B = _array(doc["B"], "B", (n, r))
        U = _polytope(doc["U"], "U", r)
        try:
            F = SemilinearMap(A, B, U)
        except ValueError as exc:
            raise ProblemFormatError("U", str(exc)) from None
    else:
        _keys(doc, _TOP_POLYHEDRAL, "", ("kind", "n", "s", "A", "B", "C", "d", "Q", "phi"))
        kappa = 2
        if "kappa" in doc and doc["kappa"] != 2:
            raise ProblemFormatError("kappa", "polyhedral2 problems have κ = 2")
        n = _int(doc, "n", "n")
        s = _int(doc, "s", "s")
        mats = {key: _array(doc[key], key, (s, n)) for key in ("A", "B", "C")}
        d = _array(doc["d"], "d", (s,)) if isinstance(doc["d"], list) and len(doc["d"]) == s else None
        if d is None:
            got = len(doc["d"]) if isinstance(doc["d"], list) else "a non-list"
            raise ProblemFormatError("d", f"d must have length s={s}, got {got}")
        ref = None
        if "reference" in doc:
            _keys(doc["reference"], {"x", "v1"}, "reference", ("x", "v1"))
            ref = np.stack([_array(doc["reference"]["x"], "reference.x", (n,)),
                            _array(doc["reference"]["v1"], "reference.v1", (n,))])
        try:
            F = PolyhedralMap2(mats["A"], mats["B"], mats["C"], d, reference=ref)
        except ValueError as exc:
            raise ProblemFormatError("reference", str(exc)) from None
    if not isinstance(doc["Q"], list) or len(doc["Q"]) != kappa:
        raise ProblemFormatError("Q", "Q must have κ entries")
    Q = tuple(_polytope(q, f"Q[{j}]", n) for j, q in enumerate(doc["Q"]))
    phi = _phi(doc["phi"], "phi", kappa * n)
    if "N" in doc:
        opts.N = _int(doc, "N", "N")
    if "tolerances" in doc:
        _tolerances(doc["tolerances"], "tolerances", opts)
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ProblemFormatError("name", "expected a string")
    return MayerProblem(F, Q, phi, name=name), opts


def parse_problem_file(path):
    """Read and validate a UTF-8 JSON problem document."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError("", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_problem_document(doc)


def _poly_doc(P: Polytope):
    return {"G": P.G.tolist(), "h": P.h.tolist()}


def serialize_problem(problem: MayerProblem, opts: Optional[Options] = None) -> Dict[str, Any]:
    F = problem.inclusion
    doc: Dict[str, Any] = {"kind": F.kind}
    if problem.name:
        doc["name"] = problem.name
    if isinstance(F, SemilinearMap):
        doc.update(kappa=F.kappa, n=F.n, r=F.r, A=[a.tolist() for a in F.A], B=F.B.tolist(),
                   U=_poly_doc(F.U))
    else:
        doc.update(kappa=2, n=F.n, s=F.s, A=F.A.tolist(), B=F.B.tolist(), C=F.C.tolist(),
                   d=F.d.tolist())
    doc["Q"] = [_poly_doc(q) for q in problem.Q]
    doc["phi"] = {"pieces": [{"c": c.tolist(), "b": float(b)}
                             for c, b in zip(problem.phi.C, problem.phi.b)]}
    if opts is not None and opts.N is not None:
        doc["N"] = opts.N
    if opts is not None and opts.certificate_tol is not None:
        doc["tolerances"] = {"certificate": opts.certificate_tol}
    return doc


def problems_equal(a: MayerProblem, b: MayerProblem) -> bool:
    Fa, Fb = a.inclusion, b.inclusion
    if type(Fa) is not type(Fb) or a.kappa != b.kappa or a.n != b.n:
        return False
    if isinstance(Fa, SemilinearMap):
        same_F = (all(np.array_equal(x, y) for x, y in zip(Fa.A, Fb.A))
                  and np.array_equal(Fa.B, Fb.B) and Fa.U == Fb.U)
    else:
        same_F = all(np.array_equal(getattr(Fa, k), getattr(Fb, k)) for k in "ABCd")
    return same_F and all(p == q for p, q in zip(a.Q, b.Q)) and a.phi == b.phi


# ---------------------------------------------------------------------------
# dual trajectories


def serialize_dual(dual: DualTrajectory) -> Dict[str, Any]:
    doc = {"N": dual.grid.N, "xstar": dual.xstar.tolist(), "eta": dual.eta.tolist()}
    if dual.lam is not None:
        doc["lam"] = dual.lam.tolist()
    return doc


def parse_dual_document(doc, problem: MayerProblem) -> DualTrajectory:
    """Accept a bare dual document or a report holding one under ``dual``."""
    if isinstance(doc, dict) and "dual" in doc and "xstar" not in doc:
        doc = doc["dual"]
    _keys(doc, {"N", "xstar", "eta", "lam"}, "dual", ("N", "xstar"))
    N = _int(doc, "N", "dual.N")
    n, k = problem.n, problem.kappa
    xstar = _array(doc["xstar"], "dual.xstar", (N + 1, n))
    eta = np.zeros((N + 1, k - 1, n))
    if "eta" in doc and k == 1:
        # JSON cannot carry the trailing axis of an empty array
        if not (isinstance(doc["eta"], list) and len(doc["eta"]) == N + 1
                and all(e == [] for e in doc["eta"])):
            raise ProblemFormatError("dual.eta", f"first-order duals carry {N + 1} empty lists")
    elif "eta" in doc:
        eta = _array(doc["eta"], "dual.eta", (N + 1, k - 1, n))
    lam = None
    if isinstance(problem.inclusion, PolyhedralMap2):
        if "lam" not in doc:
            raise ProblemFormatError("dual.lam", "polyhedral duals need lam")
        lam = _array(doc["lam"], "dual.lam", (N, problem.inclusion.s))
    return DualTrajectory(Grid(N), xstar, eta, lam, {"source": "file"})


# ---------------------------------------------------------------------------
# deterministic encoding


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(x, indent, level + 1) for x in obj) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        text = format(x, ".17g")
        if text == "-0":
            text = "0"
        return text
    return json.dumps(str(obj), ensure_ascii=False)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"
