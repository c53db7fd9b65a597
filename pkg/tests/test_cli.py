import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from algqm import matrix_to_literal, tau
from algqm.cli import ProblemError, cmd_demo_spin_half, load_problem, main, parse_problem

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"
DATA = Path(__file__).parent / "data"

SPIN_HALF = {
    "dim": 2,
    "observables": {"tau1": [[0, 1], [1, 0]], "tau3": [[1, 0], [0, -1]]},
    "hamiltonian": {"H": [[1, 0], [0, -1]], "ground_index": 0},
    "state": {"vector": [0, 1]},
    "devices": [
        {"label": "x", "generator": [[0, 1], [1, 0]]},
        {"label": "z", "generator": [[1, 0], [0, -1]]},
    ],
    "run": {"observable": "tau1", "device": "x", "n": 20000, "seed": 0},
}


def write(tmp_path, obj, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestDemo:
    def test_passes(self):
        buf = io.StringIO()
        assert cmd_demo_spin_half(out=buf) == 0
        lines = buf.getvalue().splitlines()
        assert "Ψ₀(A) = -3 = d : PASS" in lines
        assert "Ā = diag(2, -3) : PASS" in lines
        assert lines[-1] == "demo: PASS"

    def test_radius_matches_arithmetic(self):
        buf = io.StringIO()
        cmd_demo_spin_half(out=buf)
        line = next(l for l in buf.getvalue().splitlines() if l.startswith("r = "))
        b = 0.5 + 0.25j
        expected = ((2 - (-3)) ** 2 / 4 + abs(b) ** 2) ** 0.5
        assert float(line.split("=")[-1]) == pytest.approx(expected, abs=1e-10)

    def test_other_inputs(self):
        assert cmd_demo_spin_half(a=-1.0, b=2 - 1j, d=0.5, e0=3.0, out=io.StringIO()) == 0

    def test_main(self, capsys):
        code, out, _ = run(["demo"], capsys)
        assert code == 0 and "FAIL" not in out


class TestExitCodes:
    def test_average_pass(self, tmp_path, capsys):
        code, out, _ = run(["run", write(tmp_path, SPIN_HALF), "average"], capsys)
        report = json.loads(out)
        assert code == 0 and report["pass"] is True
        assert abs(report["mean"]) <= 5 / np.sqrt(report["n"])
        assert report["schema_version"] == 1

    def test_average_fail(self, tmp_path, capsys):
        # odd n makes a nonzero mean certain, so a zero-width band fails
        code, out, _ = run(
            ["run", write(tmp_path, SPIN_HALF), "average", "--n", "51", "--tol-override", "sigmas=0"], capsys
        )
        assert code == 1 and json.loads(out)["pass"] is False

    def test_malformed_json(self, tmp_path, capsys):
        code, out, err = run(["run", write(tmp_path, '{"dim": 2,\n  "run": }'), "average"], capsys)
        assert code == 2 and out == ""
        assert "line 2" in err and "column" in err

    @pytest.mark.parametrize(
        "patch,where",
        [
            ({"bogus": 1}, "problem"),
            ({"observables": {"x": [[0, 1], [2, 0]]}}, "observables.x"),
            ({"state": {"density": [[0.5, 0], [0, 0.6]]}}, "state"),
            ({"devices": [{"label": "x", "generator": [[1, 0], [0, 1]]}]}, "devices[0].generator"),
            ({"devices": [{"label": "x", "generator": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]}]}, "devices[0]"),
            ({"run": {"observable": "tau1", "speed": 3}}, "run"),
            ({"run": {"observable": "tau1", "tolerances": {"nope": 1}}}, "run.tolerances"),
        ],
    )
    def test_invalid_fields(self, tmp_path, capsys, patch, where):
        code, out, err = run(["run", write(tmp_path, {**SPIN_HALF, **patch}), "average"], capsys)
        assert code == 2 and out == ""
        assert where in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(["run", str(tmp_path / "absent.json"), "gns"], capsys)
        assert code == 2 and "absent.json" in err

    def test_incompatible_device(self, tmp_path, capsys):
        code, _, err = run(["run", write(tmp_path, SPIN_HALF), "average", "--device", "z"], capsys)
        assert code == 2 and "not compatible" in err

    def test_bad_override(self, tmp_path, capsys):
        code, _, err = run(["run", write(tmp_path, SPIN_HALF), "average", "--tol-override", "sigmas"], capsys)
        assert code == 2


class TestSubcommands:
    def test_gns(self, tmp_path, capsys):
        code, out, _ = run(["run", write(tmp_path, SPIN_HALF), "gns"], capsys)
        report = json.loads(out)
        assert code == 0 and report["rep_dim"] == 2
        assert set(report["representation"]["operators"]) == {"tau1", "tau3"}

    def test_ks_dim2_witness(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        dirs = [v / np.linalg.norm(v) for v in rng.normal(size=(3, 3))]
        devices = [
            {"label": f"n{i}{'+-'[j]}", "generator": matrix_to_literal(tau(s * n))}
            for i, n in enumerate(dirs)
            for j, s in enumerate((1, -1))
        ]
        code, out, _ = run(["run", write(tmp_path, {"dim": 2, "devices": devices}), "ks"], capsys)
        report = json.loads(out)
        assert code == 0 and report["result"] == "WITNESS"
        assert set(report["assignment"]) == {d["label"] for d in devices}

    def test_ks_obstruction(self, tmp_path, capsys):
        bases = json.loads((DATA / "ks_dim3_family.json").read_text())["bases"]
        devices = [{"label": f"b{i}", "basis": b} for i, b in enumerate(bases)]
        code, out, _ = run(["run", write(tmp_path, {"dim": 3, "devices": devices}), "ks"], capsys)
        assert code == 1 and json.loads(out)["result"] == "OBSTRUCTION"

    def test_timeavg(self, tmp_path, capsys):
        code, out, _ = run(["run", write(tmp_path, SPIN_HALF), "timeavg"], capsys)
        report = json.loads(out)
        assert code == 0 and report["L"] == 100.0 and report["residual"] <= 0.05

    def test_timeavg_step_guard(self, tmp_path, capsys):
        code, _, err = run(["run", write(tmp_path, SPIN_HALF), "timeavg", "--steps", "10"], capsys)
        assert code == 2 and "step" in err

    def test_ergodicity(self, tmp_path, capsys):
        code, out, _ = run(["run", write(tmp_path, SPIN_HALF), "ergodicity"], capsys)
        report = json.loads(out)
        assert code == 0 and report["time_averaged_value"] == report["compression"] == 0.0

    def test_representativity(self, capsys):
        code, out, _ = run(["run", str(PROBLEMS / "degenerate_dim3.json"), "representativity"], capsys)
        report = json.loads(out)
        assert code == 0 and len(report["pairwise"]) == 3

    @pytest.mark.parametrize("name", ["spin_half.json", "degenerate_dim3.json", "mub_dim2.json"])
    def test_bundled_problems_load(self, name):
        prob = load_problem(str(PROBLEMS / name))
        assert prob.dim in (2, 3)


class TestPrecedence:
    def test_defaults(self):
        prob = parse_problem({"dim": 2})
        assert prob.run["n"] == 100000 and prob.run["seed"] == 0
        assert prob.tolerances["sigmas"] == 5.0

    def test_file_overrides_defaults(self):
        prob = parse_problem({"dim": 2, "run": {"n": 7, "tolerances": {"sigmas": 3}}})
        assert prob.run["n"] == 7 and prob.tolerances["sigmas"] == 3.0

    def test_flags_override_file(self, tmp_path, capsys):
        code, out, _ = run(["run", write(tmp_path, SPIN_HALF), "average", "--n", "123", "--seed", "9"], capsys)
        report = json.loads(out)
        assert report["n"] == 123 and report["seed"] == 9

    def test_problem_error_names_field(self):
        with pytest.raises(ProblemError) as info:
            parse_problem({"dim": 0})
        assert info.value.where == "dim"


class TestDeterminism:
    @pytest.mark.parametrize("sub", ["average", "timeavg", "ergodicity", "gns"])
    def test_byte_identical(self, tmp_path, sub):
        path = write(tmp_path, SPIN_HALF)
        outs = []
        for i in range(2):
            target = tmp_path / f"out{i}.json"
            assert main(["run", path, sub, "--out", str(target)]) == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]

    def test_module_entry_point(self, tmp_path):
        path = write(tmp_path, SPIN_HALF)
        runs = [
            subprocess.run([sys.executable, "-m", "algqm", "run", path, "average"], capture_output=True)
            for _ in range(2)
        ]
        assert runs[0].returncode == 0 and runs[0].stdout == runs[1].stdout
