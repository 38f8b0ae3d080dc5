"""Command-line front end: document handling, exit codes, determinism."""

import json
import pathlib

import pytest

from kapranov.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent
INSTANCES = ROOT / "instances"
FIXTURES = pathlib.Path(__file__).resolve().parent / "fixtures"

SHIPPED = ["sl2_borel", "affine_pair", "abelian_trivial",
           "adjoint_linear_map", "double_adjoint_linear_map"]


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    @pytest.mark.parametrize("name", SHIPPED)
    def test_validate_shipped_documents(self, capsys, name):
        code, out, _ = run(capsys, "validate",
                           "--input", str(INSTANCES / f"{name}.json"))
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_missing_file_is_a_usage_error(self, capsys):
        code, out, err = run(capsys, "validate", "--input", "/no/such.json")
        assert code == 2
        assert out == ""
        assert "cannot read" in err

    def test_invalid_json_reports_location(self, capsys, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{"field": "rational",}')
        code, _, err = run(capsys, "validate", "--input", str(p))
        assert code == 2
        assert "line 1" in err

    def test_schema_violation_reports_path(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({
            "field": "rational",
            "lie_pair": {"basis": ["x"], "brackets": {"0,1": {"1": "one"}},
                         "subalgebra": [0]}}))
        code, _, err = run(capsys, "validate", "--input", str(p))
        assert code == 2
        assert "lie_pair/brackets/0,1/1" in err

    def test_homotopy_needs_second_splitting(self, capsys):
        code, _, err = run(capsys, "homotopy", "--input",
                           str(INSTANCES / "abelian_trivial.json"))
        assert code == 2
        assert "second_splitting" in err


class TestCorruptedFixtures:
    def test_jacobi_violation_is_located(self, capsys):
        code, out, _ = run(capsys, "validate",
                           "--input", str(FIXTURES / "bad_jacobi.json"))
        assert code == 1
        rep = json.loads(out)
        bad = {c["name"]: c for c in rep["checks"] if not c["passed"]}
        assert "jacobi" in bad
        assert "(x,y,z)" in bad["jacobi"]["failures"][0]

    def test_d_squared_violation_is_located(self, capsys):
        code, out, _ = run(capsys, "validate",
                           "--input", str(FIXTURES / "bad_d_squared.json"))
        assert code == 1
        rep = json.loads(out)
        bad = {c["name"]: c for c in rep["checks"] if not c["passed"]}
        assert "d^2(a)" in bad["cdga_d_squared"]["failures"][0]

    def test_incompatible_delta_is_located(self, capsys):
        code, out, _ = run(capsys, "validate",
                           "--input", str(FIXTURES / "bad_delta.json"))
        assert code == 1
        rep = json.loads(out)
        bad = {c["name"]: c for c in rep["checks"] if not c["passed"]}
        assert "delta(d(u))" in bad["derivation_compatibility"]["failures"][0]


class TestCommands:
    def test_atiyah_sl2(self, capsys):
        code, out, _ = run(capsys, "atiyah",
                           "--input", str(INSTANCES / "sl2_borel.json"))
        rep = json.loads(out)
        assert code == 0
        assert rep["class_zero"] is False
        assert rep["flat_connection_found"] is False
        names = [c["name"] for c in rep["checks"]]
        assert "cocycle_difference_exact" in names
        assert "class_connection_independent" in names

    def test_atiyah_abelian_is_flat(self, capsys):
        code, out, _ = run(capsys, "atiyah",
                           "--input", str(INSTANCES / "abelian_trivial.json"))
        rep = json.loads(out)
        assert code == 0
        assert rep["class_zero"] is True
        assert rep["flat_connection_found"] is True

    def test_brackets_report_tables(self, capsys):
        code, out, _ = run(capsys, "brackets",
                           "--input", str(INSTANCES / "affine_pair.json"))
        rep = json.loads(out)
        assert code == 0
        assert rep["nonzero_arities"] == [1, 2, 3, 4, 5]
        entry = rep["tables"]["2"][0]
        assert entry["args"] == ["y~", "y~"]

    def test_check_leibniz_counts(self, capsys):
        code, out, _ = run(capsys, "check-leibniz", "--max-arity", "3",
                           "--input", str(INSTANCES / "sl2_borel.json"))
        rep = json.loads(out)
        assert code == 0
        weights = {w["n"]: w for w in rep["weights"]}
        # 4 monomial-basis elements (1, h^, e^, h^e^ over f~) in 3 slots
        assert weights[3]["tuples"] == 64
        assert all(not w["failures"] for w in rep["weights"])

    def test_morphism_identity_kind(self, capsys):
        code, out, _ = run(capsys, "morphism",
                           "--input", str(INSTANCES / "affine_pair.json"))
        rep = json.loads(out)
        assert code == 0
        assert rep["kind"] == "identity"
        assert rep["map_arities"] == [1]

    def test_homotopy_sl2(self, capsys):
        code, out, _ = run(capsys, "homotopy",
                           "--input", str(INSTANCES / "sl2_borel.json"))
        rep = json.loads(out)
        assert code == 0
        assert rep["iso_arities"] == [1, 3]
        assert rep["homotopy_values"] == {"e^": {"f~^": {"1": "-1/1"}}}

    def test_cohomology_degree_filter(self, capsys):
        code, out, _ = run(capsys, "cohomology", "--degree", "0",
                           "--input", str(INSTANCES / "double_adjoint_linear_map.json"))
        rep = json.loads(out)
        assert code == 0
        assert list(rep["betti"]) == ["0"]
        assert rep["cochain_nonskew_witness"] is not None

    def test_output_flag_writes_file(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run(capsys, "validate", "--output", str(out_path),
                           "--input", str(INSTANCES / "abelian_trivial.json"))
        assert code == 0
        assert out == ""
        assert json.loads(out_path.read_text())["passed"] is True


class TestDeterminism:
    @pytest.mark.parametrize("command,extra", [
        ("check-leibniz", ["--max-arity", "5"]),
        ("brackets", []),
        ("cohomology", []),
    ])
    def test_reports_identical_across_runs_and_threads(self, tmp_path, capsys,
                                                       command, extra):
        blobs = []
        for i, threads in enumerate(["1", "1", "4"]):
            p = tmp_path / f"r{i}.json"
            code = main([command, "--input",
                         str(INSTANCES / "affine_pair.json"),
                         "--threads", threads, "--output", str(p)] + extra)
            capsys.readouterr()
            assert code == 0
            blobs.append(p.read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]

    def test_thread_env_var_override(self, tmp_path, capsys, monkeypatch):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        main(["check-leibniz", "--input", str(INSTANCES / "sl2_borel.json"),
              "--output", str(p1)])
        monkeypatch.setenv("KAPRANOV_THREADS", "4")
        main(["check-leibniz", "--input", str(INSTANCES / "sl2_borel.json"),
              "--output", str(p2)])
        capsys.readouterr()
        assert p1.read_bytes() == p2.read_bytes()

    def test_no_timing_in_report_body(self, capsys):
        _, out, err = run(capsys, "validate",
                          "--input", str(INSTANCES / "abelian_trivial.json"))
        assert "elapsed" not in out
        assert "elapsed" in err
