import json

import pytest

from ccsmcp.cli import main
from ccsmcp.model import Instance, verify, write_instance, write_solution


@pytest.fixture
def example_file(tmp_path, running_example):
    path = tmp_path / "inst.json"
    write_instance(running_example, path)
    return path


def test_solve_oa2(example_file, capsys):
    assert main(["solve", str(example_file), "--method", "oa2", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["objective"] == 3.0 and doc["verified_feasible"]


def test_solve_saa_reports_verified_flag(example_file, capsys):
    code = main(["solve", str(example_file), "--method", "saa", "--n-scenarios", "200", "--alpha", "0.05", "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert "verified_feasible" in doc
    assert code == (0 if doc["verified_feasible"] else 1)


def test_output_is_byte_reproducible(example_file, tmp_path):
    outs = []
    for r in range(2):
        out = tmp_path / f"out{r}.json"
        assert main(["solve", str(example_file), "--method", "is", "--n-scenarios", "100",
                     "--seed", "4", "--json", "--out", str(out)]) in (0, 1)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_exit_codes(example_file, running_example, tmp_path, capsys):
    good, bad = tmp_path / "good.json", tmp_path / "bad.json"
    write_solution(verify(running_example, [1, 1, 1]), good)
    doc = verify(running_example, [1, 1, 0]).to_json()
    doc["feasible"] = True  # a false claim in the file must not matter
    bad.write_text(json.dumps(doc))
    assert main(["verify", str(example_file), str(good)]) == 0
    assert main(["verify", str(example_file), str(bad)]) == 1
    assert "violated rows: 0" in capsys.readouterr().err


def test_infeasible_instance_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    write_instance(Instance.from_dense([1, 1, 1], [[0.1, 0.1, 0.1]], [2], [0.01]), path)
    assert main(["solve", str(path)]) == 1
    assert main(["presolve", str(path)]) == 1


def test_usage_errors(example_file, tmp_path):
    assert main([]) == 64
    assert main(["solve", str(example_file), "--method", "bogus"]) == 64
    assert main(["solve", str(example_file), "--method", "saa"]) == 64
    assert main(["solve", str(tmp_path / "missing.json")]) == 64


def test_time_limit_exit_code(tmp_path):
    path = tmp_path / "big.json"
    assert main(["generate", "--n", "60", "--m", "30", "--seed", "1", "--out", str(path)]) == 0
    assert main(["solve", str(path), "--method", "oa1", "--time-limit", "1e-6"]) == 2


def test_generate_presolve_export(tmp_path, capsys):
    inst = tmp_path / "g.json"
    assert main(["generate", "--n", "20", "--m", "5", "--seed", "3", "--out", str(inst)]) == 0
    assert main(["presolve", str(inst), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["rows"]) == 5
    lp = tmp_path / "m.lp"
    assert main(["export-lp", str(inst), "--variant", "1", "--out", str(lp)]) == 0
    assert lp.read_text().startswith("\\ full-I")


def test_epsilon_override(example_file, capsys):
    assert main(["solve", str(example_file), "--method", "exact", "--epsilon-override", "0.2", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["objective"] == 2.0  # [DERIVED] 0.81 >= 0.8


def test_experiment_convergence(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    assert main(["experiment", "convergence", "--out", str(out)]) == 0
    assert out.read_text().startswith("t,bound,exact")
