import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gmmd.cli import main
from gmmd.io import ParseError, ValidationError, parse_grouped_csv
from gmmd.streams import Stream


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _clouds_csv(shift, size=200, seed=1):
    x = Stream(seed, 0, 0).normal(2 * size).reshape(size, 2)
    y = shift + Stream(seed, 0, 1).normal(2 * size).reshape(size, 2)
    rows = ["group,x1,x2"]
    rows += [f"1,{float(a)!r},{float(b)!r}" for a, b in x]
    rows += [f"2,{float(a)!r},{float(b)!r}" for a, b in y]
    return "\n".join(rows) + "\n"


# CSV input


def test_parse_minimal():
    table = parse_grouped_csv(b"group,x1\n1,0.0\n2,2.0")
    assert table.s == 2 and table.d == 1
    assert table.to_sample().sizes == (1, 1)


def test_parse_errors():
    with pytest.raises(ValidationError, match="labels must be contiguous 1..s"):
        parse_grouped_csv("group,x1\n1,0\n3,1\n")
    with pytest.raises(ParseError) as info:
        parse_grouped_csv("group,x1,x2\n1,0,1\n2,1\n")
    assert info.value.line == 3
    with pytest.raises(ParseError) as info:
        parse_grouped_csv("1,0.0\n2,1.0\n")
    assert info.value.line == 1
    with pytest.raises(ParseError):
        parse_grouped_csv("group,x1\n1,abc\n2,1\n")
    with pytest.raises(ValidationError):
        parse_grouped_csv("group,x1\n1,0\n1,1\n")


def test_csv_round_trip():
    rng = np.random.default_rng(3)
    rows = ["group,x1,x2,x3"]
    for _ in range(50):
        rows.append(",".join([str(int(rng.integers(1, 4)))] + [repr(float(v)) for v in rng.normal(size=3) * 1e3]))
    rows += ["1,0.1,1e-300,-2.5", "2,3,4,5", "3,7,8,9"]
    text = "\n".join(rows) + "\n"
    table = parse_grouped_csv(text)
    back = parse_grouped_csv(table.to_csv())
    assert np.array_equal(back.labels, table.labels)
    assert np.array_equal(back.coords, table.coords)
    assert back.to_csv() == table.to_csv()


# estimate


def test_estimate_singletons(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,0.0\n2,2.0\n")
    code, out, err = _run(capsys, "estimate", data, "--bandwidth", "1", "--gamma", "0.5")
    assert code == 0
    rep = json.loads(out)
    assert rep["naive"] == pytest.approx(2 * (1 - math.exp(-2)), abs=1e-15)
    assert rep["weighted"] == pytest.approx(2 - math.exp(-2), abs=1e-15)
    assert rep["naive"] == pytest.approx(1.7293295, abs=1e-7)
    assert rep["weighted"] == pytest.approx(1.8646647, abs=1e-7)
    assert (rep["gamma"], rep["n"], rep["sizes"], rep["bandwidth_used"]) == (0.5, 2, [1, 1], 1.0)
    assert rep["schema_version"] == 1


def test_estimate_identical_groups(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,0.5\n1,0.5\n2,0.5\n")
    code, out, _ = _run(capsys, "estimate", data, "--bandwidth", "1")
    assert code == 0 and json.loads(out)["naive"] == 0.0


def test_estimate_median_bandwidth(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,0\n1,1\n2,3\n")
    code, out, _ = _run(capsys, "estimate", data)
    assert code == 0 and json.loads(out)["bandwidth_used"] == 2.0


def test_estimate_shuffle_is_seeded(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", _clouds_csv(0.5, size=20))
    runs = [_run(capsys, "estimate", data, "--shuffle", "--seed", "5")[1] for _ in range(2)]
    other = _run(capsys, "estimate", data, "--shuffle", "--seed", "6")[1]
    plain = _run(capsys, "estimate", data)[1]
    assert runs[0] == runs[1]
    assert json.loads(other)["naive"] == pytest.approx(json.loads(plain)["naive"], abs=1e-12)
    assert json.loads(runs[0])["weighted"] != json.loads(plain)["weighted"]


@pytest.mark.parametrize(
    "text,kind",
    [("group,x1\n1,0\n3,1\n", "invalid_input"), ("group,x1,x2\n1,0,1\n2,1\n", "parse")],
)
def test_estimate_bad_input(tmp_path, capsys, text, kind):
    code, out, err = _run(capsys, "estimate", _write(tmp_path, "d.csv", text))
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == kind


def test_bad_flags_and_missing_file(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,0\n2,1\n")
    for argv in (["estimate", data, "--bandwidth", "-1"], ["estimate", data, "--kernel", "cosine"],
                 ["estimate", data, "--gamma", "0"], ["estimate", data, "--threads", "0"], ["frobnicate"]):
        code, _, err = _run(capsys, *argv)
        assert code == 2, argv
        assert "error" in json.loads(err)
    code, _, err = _run(capsys, "estimate", str(tmp_path / "missing.csv"))
    assert code == 2 and json.loads(err)["error"] == "io"


def test_internal_failure_exit_code(monkeypatch, capsys, tmp_path):
    import gmmd.cli as cli

    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "estimate", boom)
    code, _, err = _run(capsys, "estimate", "x.csv")
    assert code == 1 and json.loads(err)["error"] == "internal"


# test


def test_test_separated_clouds(tmp_path, capsys):
    out_path = tmp_path / "r.json"
    data = _write(tmp_path, "d.csv", _clouds_csv(3.0))
    code, out, _ = _run(capsys, "test", data, "--out", str(out_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["reject"] is True and rep["p_value"] < 1e-3
    for key in ("statistic_raw", "sigma_hat", "z_score", "alpha", "n", "gamma", "config"):
        assert key in rep
    assert rep["config"]["variance_variant"] == "theorem"
    assert "p=" in out or "reject" in out


def test_test_degenerate_exit_2(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,1\n1,1\n2,1\n2,1\n")
    code, out, err = _run(capsys, "test", data)
    assert code == 2 and json.loads(err)["error"] == "degenerate_variance"


def test_test_small_group_exit_2(tmp_path, capsys):
    data = _write(tmp_path, "d.csv", "group,x1\n1,1\n1,2\n2,1\n")
    code, _, err = _run(capsys, "test", data)
    assert code == 2 and json.loads(err)["error"] == "invalid_input"


@pytest.mark.xfail(
    strict=True,
    reason="the diagonal-inclusive estimator is biased upward at n_j = 200, so the "
    "asymptotic level is not reached (observed rejection rate about 0.13)",
)
def test_test_duplicated_group_level(tmp_path, capsys):
    rejects = []
    for r in range(200):
        x = Stream(99, r, 0).normal(200)
        text = "group,x1\n" + "".join(f"{g},{float(v)!r}\n" for g in (1, 2) for v in x)
        code, out, _ = _run(capsys, "test", _write(tmp_path, "d.csv", text))
        assert code == 0
        rejects.append(json.loads(out)["reject"])
    assert 0.02 <= np.mean(rejects) <= 0.09


# validate-weights


def test_validate_weights(capsys):
    code, out, _ = _run(capsys, "validate-weights", "--gamma", "0.5", "--r-max", "10000")
    rep = json.loads(out)
    assert code == 0 and rep["k_sq_limit"] == 1.25
    assert rep["all_pass"] and rep["pass_mean_bound"] and rep["pass_k_sq_limit"]
    code, out, _ = _run(capsys, "validate-weights", "--gamma", "1", "--r-max", "99")
    assert code == 0 and json.loads(out)["tau_observed"] == 1.0
    code, _, err = _run(capsys, "validate-weights", "--gamma", "0")
    assert code == 2 and json.loads(err)["error"] == "invalid_input"


# simulate

SCENARIO = """
[scenario]
study = {study}
n = 60
rho = 0.5, 0.5
replications = {reps}
seed = 4
side_draws = 500
mc_draws = 2000
shift_grid = 0, 2

[group 1]
mean = 0

[group 2]
mean = {mean}
"""


def _scenario(tmp_path, study="null", reps=1, mean=0):
    return _write(tmp_path, "s.ini", SCENARIO.format(study=study, reps=reps, mean=mean))


def test_simulate_single_replication(tmp_path, capsys):
    out_path = tmp_path / "rep.json"
    csv_path = tmp_path / "rep.csv"
    code, out, _ = _run(capsys, "simulate", _scenario(tmp_path), "--out", str(out_path), "--csv", str(csv_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["kind"] == "null" and len(rep["records"]) == 1
    assert rep["aggregates"]["mean_z"] == rep["records"][0]["z"]
    assert "R=1" in out
    assert len(csv_path.read_text().splitlines()) == 2


def test_simulate_rerun_byte_identical(tmp_path, capsys):
    scn = _scenario(tmp_path, reps=4)
    paths = [tmp_path / f"r{i}.json" for i in range(3)]
    _run(capsys, "simulate", scn, "--out", str(paths[0]))
    _run(capsys, "simulate", scn, "--out", str(paths[1]), "--threads", "4")
    _run(capsys, "simulate", scn, "--out", str(paths[2]), "--seed", "5")
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()


def test_simulate_alternative_and_power(tmp_path, capsys):
    code, out, _ = _run(capsys, "simulate", _scenario(tmp_path, "alternative", 2, 1.0))
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "alternative" and rep["reference"]["population_T"] > 0
    code, out, _ = _run(capsys, "simulate", _scenario(tmp_path, "power", 5))
    rep = json.loads(out)
    assert code == 0 and [p["shift"] for p in rep["curve"]] == [0.0, 2.0]


def test_simulate_invalid_scenario(tmp_path, capsys):
    code, _, err = _run(capsys, "simulate", _scenario(tmp_path, "null", 0))
    body = json.loads(err)
    assert code == 2 and body["error"] == "scenario"
    assert any("replications" in e for e in body["errors"])
    code, _, err = _run(capsys, "simulate", _scenario(tmp_path, "null", 2, 1.0))
    assert code == 2


def test_module_entry_point(tmp_path):
    data = _write(tmp_path, "d.csv", "group,x1\n1,0.0\n2,2.0\n")
    proc = subprocess.run([sys.executable, "-m", "gmmd", "estimate", data, "--bandwidth", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["naive"] == pytest.approx(1.7293294335267746, abs=1e-15)
