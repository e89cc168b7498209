import json
from pathlib import Path

import numpy as np
import pytest

from dfiduality.catalog import CATALOG, first_order_drift, second_order_polyhedral
from dfiduality.cli import export_problem, main
from dfiduality.problem_io import (
    Options,
    ProblemFormatError,
    dumps,
    parse_dual_document,
    parse_problem_document,
    parse_problem_file,
    problems_equal,
    serialize_dual,
    serialize_problem,
)
from dfiduality.transcription import Grid, solve_dual

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture
def e2_doc():
    return serialize_problem(second_order_polyhedral())


class TestDocuments:
    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_round_trip_of_catalog(self, name):
        P = CATALOG[name]()
        Q, _ = parse_problem_document(serialize_problem(P))
        assert problems_equal(P, Q)

    @pytest.mark.parametrize("path", sorted(PROBLEMS.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_files_match_catalog(self, path):
        P, _ = parse_problem_file(path)
        assert problems_equal(P, CATALOG[path.stem]())

    def test_e1_document(self):
        P, opts = parse_problem_file(PROBLEMS / "first_order_drift.json")
        assert P.kind == "semilinear" and P.kappa == 1 and opts.N is None

    def test_options_round_trip(self):
        doc = serialize_problem(first_order_drift(), Options(N=12, certificate_tol=0.01))
        P, opts = parse_problem_document(doc)
        assert opts.N == 12 and opts.certificate_tol == 0.01

    def test_lp_tolerances(self):
        doc = serialize_problem(first_order_drift())
        doc["tolerances"] = {"feas": 1e-6}
        _, opts = parse_problem_document(doc)
        assert opts.lp_tol.feas == 1e-6 and opts.lp_tol.pivot == 1e-9

    def test_q_count(self):
        doc = serialize_problem(CATALOG["second_order_semilinear"]())
        doc["Q"] = doc["Q"][:1]
        with pytest.raises(ProblemFormatError, match="Q must have κ entries"):
            parse_problem_document(doc)

    def test_d_length(self, e2_doc):
        e2_doc["d"] = [1.0]
        with pytest.raises(ProblemFormatError, match="d must have length"):
            parse_problem_document(e2_doc)

    @pytest.mark.parametrize("mutate, where", [
        (lambda d: d.update(extra=1), "extra: unknown field"),
        (lambda d: d["phi"]["pieces"][0].pop("b"), r"phi.pieces\[0\].b: missing"),
        (lambda d: d.update(kind="cubic"), "kind"),
        (lambda d: d.update(n=0), "n: expected an integer"),
        (lambda d: d["Q"][0].update(G=[[1.0, 2.0], [1.0, 2.0]]), r"Q\[0\].G: expected shape"),
        (lambda d: d.update(tolerances={"feas": -1}), "tolerances.feas"),
    ])
    def test_field_paths_in_errors(self, e2_doc, mutate, where):
        mutate(e2_doc)
        with pytest.raises(ProblemFormatError, match=where):
            parse_problem_document(e2_doc)

    def test_bad_json_position(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"kind": "semilinear",\n  "kappa": }', encoding="utf-8")
        with pytest.raises(ProblemFormatError, match="line 2"):
            parse_problem_file(p)

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_dual_round_trip(self, name):
        P = CATALOG[name]()
        dual, _ = solve_dual(P, Grid(4))
        back = parse_dual_document(json.loads(dumps(serialize_dual(dual))), P)
        assert np.array_equal(back.xstar, dual.xstar)
        assert np.array_equal(back.eta, dual.eta)
        if dual.lam is not None:
            assert np.array_equal(back.lam, dual.lam)


class TestDumps:
    def test_special_values(self):
        text = dumps({"a": float("inf"), "b": float("-inf"), "c": float("nan"), "d": -0.0})
        assert json.loads(text) == {"a": "inf", "b": "-inf", "c": None, "d": 0}

    def test_seventeen_digits(self):
        assert json.loads(dumps({"x": 0.1}))["x"] == 0.1
        assert "0.10000000000000001" in dumps({"x": 0.1})

    def test_arrays(self):
        assert json.loads(dumps({"m": np.eye(2)})) == {"m": [[1, 0], [0, 1]]}


class TestCommands:
    def test_gap_on_e1(self, capsys):
        code, out, _ = run(capsys, "gap", PROBLEMS / "first_order_drift.json", "--grid", 32)
        rep = json.loads(out)
        assert code == 0
        assert rep["primal"] == 0 and rep["dual"] == 0 and rep["gap"] <= 1e-6

    def test_gap_table(self, capsys, tmp_path):
        out = tmp_path / "gap.json"
        code, _, _ = run(capsys, "gap", "--example", "second_order_polyhedral", "--grid", 4, 8, "--out", out)
        assert code == 0
        rows = (tmp_path / "gap_gap.csv").read_text().splitlines()
        assert rows[0] == "N,primal,dual,gap"
        assert len(rows) == 3
        assert float(rows[1].split(",")[1]) == pytest.approx(-3 / 8)

    def test_adjoint_text(self, capsys):
        code, out, _ = run(capsys, "adjoint", PROBLEMS / "second_order_semilinear.json")
        assert code == 0
        assert json.loads(out)["text"] == "η₁* = A₁ᵀx*; x*″ = A₀ᵀx* − A₁ᵀx*′"

    def test_solve_primal_and_dual(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve-primal", "--example", "second_order_polyhedral", "--grid", 4)
        assert code == 0 and json.loads(out)["value"] == pytest.approx(-3 / 8)
        out_path = tmp_path / "d.json"
        code, _, _ = run(capsys, "solve-dual", "--example", "second_order_polyhedral", "--grid", 4,
                         "--out", out_path)
        assert code == 0
        assert json.loads(out_path.read_text())["value"] == pytest.approx(-3 / 8)
        assert (tmp_path / "d_dual.csv").read_text().startswith("t,xstar_0,eta1_0,lam_0,lam_1")

    def test_certify_passes(self, capsys, tmp_path):
        code, out, _ = run(capsys, "certify", PROBLEMS / "second_order_polyhedral.json", "--grid", 16)
        rep = json.loads(out)
        assert code == 0 and rep["passed"] and rep["failing"] == []

    def test_certify_with_mutated_dual(self, capsys, tmp_path):
        report = tmp_path / "r.json"
        run(capsys, "certify", "--example", "second_order_polyhedral", "--grid", 16, "--out", report)
        doc = json.loads(report.read_text())
        doc["dual"]["lam"][5][1] += 50.0
        dual_file = write_json(tmp_path / "mut.json", doc)
        code, out, err = run(capsys, "certify", PROBLEMS / "second_order_polyhedral.json", "--grid", 16,
                             "--dual-in", dual_file)
        assert code == 2
        assert "certificate failed:" in err
        assert json.loads(out)["failing"]

    def test_certify_grid_mismatch(self, capsys, tmp_path):
        report = tmp_path / "r.json"
        run(capsys, "certify", "--example", "first_order_drift", "--grid", 8, "--out", report)
        code, _, err = run(capsys, "certify", "--example", "first_order_drift", "--grid", 4, "--dual-in", report)
        assert code == 1 and "N=8" in err

    def test_oracle(self, capsys):
        code, out, _ = run(capsys, "oracle", "--example", "first_order_drift", "--grid", 2)
        rep = json.loads(out)
        assert code == 0 and rep["agree"]
        assert rep["simplex"]["value"] == pytest.approx(0.0, abs=1e-12)

    def test_oracle_refuses_large_grids(self, capsys):
        code, _, err = run(capsys, "oracle", "--example", "second_order_polyhedral", "--grid", 64)
        assert code == 1 and "too large" in err

    def test_single_grid_only(self, capsys):
        code, _, err = run(capsys, "solve-primal", "--example", "first_order_drift", "--grid", 2, 4)
        assert code == 1 and "single --grid" in err

    @pytest.mark.parametrize("doc_change, message", [
        (lambda d: d.update(d=[1.0]), "d must have length"),
        (lambda d: d.update(bogus=True), "bogus: unknown field"),
    ])
    def test_parse_failures_exit_1(self, capsys, tmp_path, e2_doc, doc_change, message):
        doc_change(e2_doc)
        code, _, err = run(capsys, "gap", write_json(tmp_path / "p.json", e2_doc))
        assert code == 1 and message in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "gap", tmp_path / "none.json")
        assert code == 1 and err.startswith("error:")

    def test_reports_are_byte_identical(self, capsys):
        argv = ("certify", PROBLEMS / "second_order_semilinear.json", "--grid", 8)
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b

    def test_export_round_trip(self, tmp_path):
        P = second_order_polyhedral()
        export_problem(P, tmp_path / "e2.json")
        assert problems_equal(parse_problem_file(tmp_path / "e2.json")[0], P)
