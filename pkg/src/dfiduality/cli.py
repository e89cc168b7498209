"""Command-line front end.

    dfi-duality solve-primal problem.json --grid 64
    dfi-duality gap problem.json --grid 16 32 64 --out gap.json
    dfi-duality certify problem.json --dual-in dual.json

Exit codes: 0 success, 1 parse or solver failure, 2 certificate failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .catalog import CATALOG
from .certify import certify, default_tolerance
from .dfi import PolyhedralMap2, adjoint_system
from .numerics import EnumerationError, LPProblem, solve_lp, solve_lp_by_enumeration
from .problem_io import (
    Options,
    ProblemFormatError,
    dumps,
    parse_dual_document,
    parse_problem_file,
    serialize_dual,
    serialize_problem,
)
from .transcription import (
    DEFAULT_N,
    Grid,
    TranscriptionError,
    extract_dual_trajectory,
    solve_dual,
    solve_primal_full,
    transcribe_primal,
    unpack_primal,
)

EXIT_OK, EXIT_FAILURE, EXIT_CERTIFICATE = 0, 1, 2


class CommandError(RuntimeError):
    pass


def _primal_doc(traj):
    doc = {"t": traj.grid.t, "z": traj.z, "v": traj.v}
    if traj.u is not None:
        doc["u"] = traj.u
    return doc


def _primal_rows(traj):
    k, n = traj.z.shape[1], traj.z.shape[2]
    head = ["t"] + [f"z{j}_{i}" for j in range(k) for i in range(n)] + [f"v_{i}" for i in range(n)]
    if traj.u is not None:
        head += [f"u_{i}" for i in range(traj.u.shape[1])]
    rows = []
    for kk, t in enumerate(traj.grid.t):
        row = [t] + list(traj.z[kk].reshape(-1))
        last = kk == traj.grid.N
        row += [""] * n if last else list(traj.v[kk])
        if traj.u is not None:
            row += [""] * traj.u.shape[1] if last else list(traj.u[kk])
        rows.append(row)
    return head, rows


def _dual_rows(dual):
    n = dual.xstar.shape[1]
    km1 = dual.eta.shape[1]
    head = ["t"] + [f"xstar_{i}" for i in range(n)] + [f"eta{j + 1}_{i}" for j in range(km1) for i in range(n)]
    s = 0 if dual.lam is None else dual.lam.shape[1]
    head += [f"lam_{i}" for i in range(s)]
    rows = []
    for kk, t in enumerate(dual.grid.t):
        row = [t] + list(dual.xstar[kk]) + list(dual.eta[kk].reshape(-1))
        if s:
            # interval multipliers are attached to the right node of their interval
            row += [""] * s if kk == 0 else list(dual.lam[kk - 1])
        rows.append(row)
    return head, rows


def _csv(head, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for r in rows:
        w.writerow([x if isinstance(x, str) else format(float(x), ".17g") for x in r])
    return buf.getvalue()


def _single_grid(args, opts: Options) -> Grid:
    if args.grid and len(args.grid) > 1:
        raise CommandError("this command takes a single --grid value")
    N = args.grid[0] if args.grid else (opts.N or DEFAULT_N)
    return Grid(N)


def run_command(cmd: str, problem, opts: Options, args) -> Tuple[dict, int, List[Tuple[str, str]]]:
    """Execute one subcommand; returns (report, exit code, [(suffix, csv text)])."""
    report = {"command": cmd, "problem": problem.name or None, "kind": problem.kind,
              "kappa": problem.kappa, "n": problem.n}
    tables: List[Tuple[str, str]] = []
    code = EXIT_OK

    if cmd == "adjoint":
        F = problem.inclusion
        if isinstance(F, PolyhedralMap2):
            report["text"] = "Cᵀλ″ + Bᵀλ′ − Aᵀλ = 0; x* = −Cᵀλ; η₁* = −Bᵀλ; λ ≥ 0"
            report["coefficients"] = {"lambda''": F.C.T, "lambda'": F.B.T, "lambda": -F.A.T}
        else:
            sys_ = adjoint_system(F)
            report["text"] = sys_.text
            report["lhs_sign"] = sys_.lhs_sign
            report["coefficients"] = {f"x*^({i})": M for i, M in enumerate(sys_.coeffs)}
            report["eta"] = [{f"x*^({i})": M for i, M in enumerate(row)} for row in sys_.eta_coeffs]
        return report, code, tables

    if cmd == "gap":
        Ns = args.grid or [opts.N or DEFAULT_N]
        rows = []
        for N in Ns:
            g = Grid(N)
            _, pv, _, _ = solve_primal_full(problem, g, opts.lp_tol)
            _, dv = solve_dual(problem, g, opts.lp_tol)
            gap = abs(pv - dv)
            ok = gap <= 1e-6 * (1.0 + abs(pv))
            rows.append({"N": N, "primal": pv, "dual": dv, "gap": gap, "pass": ok})
            if not ok:
                code = EXIT_CERTIFICATE
        report["results"] = rows
        if len(rows) == 1:
            report.update({k: rows[0][k] for k in ("primal", "dual", "gap", "pass")})
        tables.append(("gap", _csv(["N", "primal", "dual", "gap"],
                                   [[r["N"], r["primal"], r["dual"], r["gap"]] for r in rows])))
        return report, code, tables

    g = _single_grid(args, opts)
    report["N"] = g.N

    if cmd == "solve-primal":
        traj, value, _, _ = solve_primal_full(problem, g, opts.lp_tol)
        report.update(status="Optimal", value=value, trajectory=_primal_doc(traj))
        tables.append(("primal", _csv(*_primal_rows(traj))))
    elif cmd == "solve-dual":
        dual, value = solve_dual(problem, g, opts.lp_tol)
        report.update(status="Optimal", value=value, dual=serialize_dual(dual))
        tables.append(("dual", _csv(*_dual_rows(dual))))
    elif cmd == "certify":
        traj, value, tr, sol = solve_primal_full(problem, g, opts.lp_tol)
        if args.dual_in:
            doc = json.loads(Path(args.dual_in).read_text(encoding="utf-8"))
            dual = parse_dual_document(doc, problem)
            if dual.grid != g:
                raise CommandError(f"dual file has N={dual.grid.N} but the grid has N={g.N}")
        else:
            dual = extract_dual_trajectory(sol, problem, g, tr)
        tol = args.tol if args.tol is not None else (opts.certificate_tol or default_tolerance(g))
        rep = certify(problem, traj, dual, tol)
        report.update(primal_value=value, tolerance=tol, dual_source=dual.info.get("source"),
                      passed=rep.passed, failing=rep.failing(), gap=rep.gap,
                      entries=[e.__dict__ for e in rep.entries], dual=serialize_dual(dual))
        if not rep.passed:
            code = EXIT_CERTIFICATE
        tables.append(("primal", _csv(*_primal_rows(traj))))
        tables.append(("dual", _csv(*_dual_rows(dual))))
    elif cmd == "oracle":
        lp = _bounded_epigraph(problem, g)
        a = solve_lp(lp, opts.lp_tol)
        try:
            b = solve_lp_by_enumeration(lp, opts.lp_tol)
        except EnumerationError as exc:
            raise CommandError(f"oracle: {exc}") from None
        agree = a.status == b.status and (not a.optimal or abs(a.value - b.value) <= 1e-8 * (1 + abs(a.value)))
        report.update(simplex={"status": a.status.value, "value": a.value if a.optimal else None},
                      enumeration={"status": b.status.value, "value": b.value if b.optimal else None},
                      agree=agree)
        if not agree:
            code = EXIT_CERTIFICATE
    else:
        raise CommandError(f"unknown command {cmd}")
    return report, code, tables


def _bounded_epigraph(problem, g: Grid) -> LPProblem:
    """Primal transcription with the epigraph variable capped from above.

    The cap is the cost of a feasible point found with a zero objective, so it
    never cuts off the optimum but makes the feasible set bounded.
    """
    tr = transcribe_primal(problem, g)
    lp = tr.lp
    probe = solve_lp(LPProblem(np.zeros(lp.n_vars), G=lp.G, h=lp.h, E=lp.E, f=lp.f))
    if not probe.optimal:
        raise CommandError("oracle: primal transcription is infeasible")
    cap = problem.phi(unpack_primal(problem, g, probe.x).z[-1].reshape(-1))
    row = np.zeros(lp.n_vars)
    row[tr.layout.index("tau")] = 1.0
    return LPProblem(lp.cost, G=np.vstack([lp.G, row]), h=np.append(lp.h, cap + 1.0), E=lp.E, f=lp.f)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfi-duality", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("solve-primal", "solve the Euler transcription of the problem"),
        ("solve-dual", "solve the discretized dual problem"),
        ("gap", "primal and dual optimal values and their gap"),
        ("certify", "check the optimality conditions for a primal/dual pair"),
        ("adjoint", "print the adjoint equation of the inclusion"),
        ("oracle", "cross-check the primal LP against vertex enumeration"),
    ]:
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("problem", nargs="?", help="problem JSON file")
        src.add_argument("--example", choices=sorted(CATALOG), help="use a built-in problem")
        p.add_argument("--grid", type=int, nargs="+", metavar="N", help="number of grid steps")
        p.add_argument("--tol", type=float, help="certificate tolerance")
        p.add_argument("--out", help="write the JSON report here (CSV tables go alongside)")
        p.add_argument("--dual-in", help="dual trajectory JSON for certify")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.example:
            problem, opts = CATALOG[args.example](), Options()
        else:
            problem, opts = parse_problem_file(args.problem)
        report, code, tables = run_command(args.command, problem, opts, args)
    except (ProblemFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (TranscriptionError, CommandError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    text = dumps(report)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        for suffix, body in tables:
            out.with_name(f"{out.stem}_{suffix}.csv").write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if code == EXIT_CERTIFICATE and report.get("failing"):
        print("certificate failed: " + ", ".join(report["failing"]), file=sys.stderr)
    return code


def export_problem(problem, path) -> None:
    """Write ``problem`` as a JSON document."""
    Path(path).write_text(dumps(serialize_problem(problem)), encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
