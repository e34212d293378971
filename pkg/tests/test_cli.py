import csv
import io
import json
import math

import pytest

from hdmax import cli
from hdmax.cli import RunManifest


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- parsing ---------------------------------------------------------------------

def test_parse_r_spec_inclusive():
    assert cli.parse_r_spec("0:0.05:0.2") == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
    assert cli.parse_r_spec("0") == [0.0]
    assert cli.parse_r_spec("1,2.5") == [1.0, 2.5]


@pytest.mark.parametrize("bad", ["", "1:0:3", "3:1:1", "a", "-1"])
def test_parse_r_spec_rejects(bad):
    with pytest.raises(cli.UsageError):
        cli.parse_r_spec(bad)


def test_parse_int_list():
    assert cli.parse_int_list("3,10, 30") == [3, 10, 30]
    with pytest.raises(cli.UsageError):
        cli.parse_int_list("")
    with pytest.raises(cli.UsageError):
        cli.parse_int_list("2", minimum=3)


def test_manifest_roundtrip():
    man = RunManifest("mc chisq", {"d": "100", "alpha": 0.3, "n": 10 ** 6}, seed=2 ** 64 - 1, wall_time_ms=12)
    again = RunManifest.from_json(man.to_json())
    assert again == man
    assert again.to_json() == man.to_json()


# --- symbols -------------------------------------------------------------------------

def test_symbols_d3_row(capsys):
    code, out, _ = run(capsys, "symbols", "--d", "3", "--r", "0:0.05:10", "--which", "mu")
    assert code == 0
    recs = rows(out)
    assert len(recs) == 201
    hit = [r for r in recs if float(r["r"]) == 0.25]
    assert len(hit) == 1 and hit[0]["symbol"] == "mu"
    assert float(hit[0]["value"]) == pytest.approx(2 / math.pi, abs=1e-12)


def test_symbols_at_zero(capsys):
    code, out, _ = run(capsys, "symbols", "--d", "10", "--r", "0", "--which", "mu,m,g")
    assert code == 0
    recs = rows(out)
    assert [r["symbol"] for r in recs] == ["g", "m", "mu"]
    assert all(float(r["value"]) == 1.0 for r in recs)


def test_symbols_canonical_order(capsys):
    _, out, _ = run(capsys, "symbols", "--d", "10,3", "--r", "1,0.5", "--which", "differences,mu")
    keys = [(int(r["d"]), float(r["r"]), r["symbol"]) for r in rows(out)]
    assert keys == sorted(keys)
    assert {"g_minus_m", "mu_minus_g", "mu_minus_m", "mu"} == {k[2] for k in keys}


def test_symbols_json(capsys):
    _, out, _ = run(capsys, "symbols", "--d", "3", "--r", "0.25", "--which", "mu", "--format", "json")
    recs = json.loads(out)
    assert recs[0]["d"] == 3 and recs[0]["value"] == pytest.approx(2 / math.pi)


def test_csv_uses_17_digits(capsys):
    _, out, _ = run(capsys, "symbols", "--d", "3", "--r", "0.25", "--which", "mu")
    v = rows(out)[0]["value"]
    assert float(v) == float(format(float(v), ".17g"))
    assert len(v.replace("0.", "").lstrip("0")) >= 15


@pytest.mark.parametrize("argv", [
    ["symbols", "--d", "", "--r", "1"],
    ["symbols", "--d", "3", "--r", "5:1:1"],
    ["symbols", "--d", "3", "--r", "1", "--which", "bogus"],
    ["bounds", "--d", "2"],
    ["mc", "sphere", "--r", "1", "--d", "5", "--n", "10"],
    ["mc", "chisq", "--d", "100", "--alpha", "0.3", "--n", "100"],
    ["mc", "sphere", "--r", "1", "--d", "5", "--seed", "-3"],
    ["nosuchcommand"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_named_domain_condition(capsys):
    code, _, err = run(capsys, "radial", "indicator", "--p", "1.2", "--d", "3")
    assert code == 2
    assert "d(p-1) > p" in err


# --- bounds -----------------------------------------------------------------------

def test_bounds_small_sweep(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "3,10", "--pairs", "mu_minus_m")
    assert code == 0
    recs = rows(out)
    near = [r for r in recs if r["name"] == "mu_near_one"]
    assert len(near) == 2 and all(r["violated"] == "false" for r in near)
    assert {r["kind"] for r in recs} == {"report", "sup"}


def test_bounds_fit_slope(capsys):
    code, out, _ = run(capsys, "bounds", "--d", "10,30,100,300,1000", "--pairs", "mu_minus_m", "--fit")
    assert code == 0
    slope = [r for r in rows(out) if r["kind"] == "fit" and r["name"] == "slope"]
    assert float(slope[0]["value"]) <= -0.75


def test_bounds_fit_needs_four_dims(capsys):
    code, _, _ = run(capsys, "bounds", "--d", "3,10,30", "--pairs", "mu_minus_m", "--fit")
    assert code == 2


# --- Monte Carlo ----------------------------------------------------------------------

def test_mc_sphere_at_zero(capsys):
    code, out, _ = run(capsys, "mc", "sphere", "--r", "0", "--d", "5", "--n", "1000", "--seed", "3")
    assert code == 0
    rec = rows(out)[0]
    assert float(rec["mean"]) == 1.0 and rec["seed"] == "3"


def test_mc_deterministic_and_seed_env(capsys, monkeypatch):
    argv = ["mc", "gauss", "--r", "0.5,1", "--d", "4", "--n", "20000"]
    monkeypatch.setenv(cli.SEED_ENV, "17")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--seed", "17")
    _, c, _ = run(capsys, *argv, "--seed", "18")
    assert a == b != c
    assert all(r["seed"] == "17" for r in rows(a))


def test_mc_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "abc")
    code, _, err = run(capsys, "mc", "gauss", "--r", "1", "--d", "4", "--n", "1000")
    assert code == 2 and cli.SEED_ENV in err


def test_mc_chisq(capsys):
    argv = ["mc", "chisq", "--d", "100", "--alpha", "0.3", "--n", "1000000", "--seed", "7"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    rec = rows(out)[0]
    assert float(rec["threshold"]) == pytest.approx(0.9813, abs=1e-4)
    assert float(rec["frequency"]) >= float(rec["threshold"]) - 3 * float(rec["stderr"])
    _, again, _ = run(capsys, *argv)
    assert again == out


# --- radial ---------------------------------------------------------------------------

def test_radial_constants(capsys):
    code, out, _ = run(capsys, "radial", "constants")
    assert code == 0
    vals = {r["name"]: float(r["value"]) for r in rows(out)}
    assert 0.4 < vals["c_infimum"] <= 1.0
    assert 0.198 < vals["x1_root"] < 0.2


def test_radial_spd(capsys):
    code, out, _ = run(capsys, "radial", "spd", "--p", "4", "--d", "4")
    assert code == 0
    assert float(rows(out)[0]["s"]) == pytest.approx(1.0, abs=5e-4)


def test_radial_indicator(capsys):
    code, out, _ = run(capsys, "radial", "indicator", "--p", "2", "--d", "3")
    assert code == 0
    rec = rows(out)[0]
    assert 1.0 + float(rec["ratio_p_minus_one"]) <= 1.375
    assert rec["respects_bound"] == "true"


def test_radial_ratio_tables(capsys):
    for argv in (["gauss1d", "--p", "1.2,2"], ["homog", "--p", "1.5,4"], ["gaussdd", "--p", "2", "--d", "1,5,200"]):
        code, out, _ = run(capsys, "radial", *argv)
        assert code == 0, argv
        assert len(rows(out)) >= 2


# --- manifests and replay -----------------------------------------------------------------

def test_manifest_written_with_out(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = cli.main(["mc", "gauss", "--r", "1", "--d", "3", "--n", "5000", "--out", str(out)])
    assert code == 0
    man = RunManifest.from_json((tmp_path / "t.csv.manifest.json").read_text())
    assert man.command == "mc gauss" and man.seed == 0
    assert man.tolerance_set == cli.TOLERANCES
    assert man.parameters["n"] == 5000


def test_replay_byte_identical(tmp_path, capsys):
    out = tmp_path / "a.csv"
    cli.main(["symbols", "--d", "3,7", "--r", "0:0.5:3", "--which", "mu,differences", "--out", str(out)])
    replayed = tmp_path / "b.csv"
    code = cli.main(["replay", str(out) + ".manifest.json", "--out", str(replayed)])
    assert code == 0
    assert replayed.read_bytes() == out.read_bytes()


def test_replay_to_stdout(tmp_path, capsys):
    man = tmp_path / "m.json"
    cli.main(["radial", "gauss1d", "--p", "2", "--format", "json", "--manifest", str(man)])
    first = capsys.readouterr().out
    assert cli.main(["replay", str(man)]) == 0
    assert capsys.readouterr().out == first


def test_replay_rejects_foreign_version(tmp_path, capsys):
    man = RunManifest("radial constants", {"format": "csv"}, 0, tool_version="9.9.9")
    path = tmp_path / "m.json"
    path.write_text(man.to_json())
    code, _, err = run(capsys, "replay", str(path))
    assert code == 2 and "9.9.9" in err


def test_replay_rejects_changed_tolerances(tmp_path, capsys):
    tol = dict(cli.TOLERANCES, mc_sigmas=2.0)
    man = RunManifest("radial constants", {"format": "csv"}, 0, tolerance_set=tol)
    path = tmp_path / "m.json"
    path.write_text(man.to_json())
    code, _, _ = run(capsys, "replay", str(path))
    assert code == 2


def test_exit_code_on_violation(monkeypatch, capsys):
    monkeypatch.setattr(cli.bounds, "VIOLATION_TOL", -1.0)
    monkeypatch.setattr(cli.bounds, "EXPLICIT_NEAR_CONSTANT", 1e-6)
    code, _, _ = run(capsys, "bounds", "--d", "3", "--pairs", "mu_minus_m")
    assert code == 1


def test_exit_code_on_nonconvergence(monkeypatch, capsys):
    def boom(*a, **k):
        raise cli.ConvergenceError("no", 1.0)

    monkeypatch.setattr(cli.radial, "compute_constants", boom)
    code, _, err = run(capsys, "radial", "constants")
    assert code == 3 and "numerical" in err
