import json

import numpy as np
import pytest

from levyhk.cli import EXIT_FAIL, EXIT_INVALID, EXIT_NUMERICAL, EXIT_PASS, run
from levyhk.serialize import triplet_to_dict
from levyhk.zoo import parse_zoo


def report(capsys, argv, code=EXIT_PASS):
    assert run(argv) == code
    out = capsys.readouterr().out
    body = json.loads(out)
    assert body["schema"] == 1 and body["exit_code"] == code
    return body


# -- static commands ---------------------------------------------------------------------------
def test_zoo_list(capsys):
    assert run(["zoo", "list"]) == EXIT_PASS
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7
    assert lines[0].startswith("gaussian")


def test_zoo_list_json(capsys):
    body = report(capsys, ["zoo", "list", "--json"])
    assert len(body["zoo"]) == 7


def test_triplet_validate_from_file(tmp_path, capsys):
    p = tmp_path / "t.json"
    p.write_text(json.dumps(triplet_to_dict(parse_zoo("one_sided_1_stable"))))
    body = report(capsys, ["triplet", "validate", "--triplet", str(p)])
    assert body["triplet"]["N"]["type"] == "one_sided"


# -- evaluation commands with tables ------------------------------------------------------------
def test_h_eval_csv(tmp_path, capsys):
    csv = tmp_path / "h.csv"
    body = report(capsys, ["h", "eval", "--zoo", "gaussian:1", "--r", "0.5,2", "--csv", str(csv)])
    assert np.allclose(body["h"], [2.0, 0.125], rtol=1e-14)
    lines = csv.read_text().splitlines()
    assert lines[0] == "r,h,K"
    assert lines[1].split(",")[0] == "0.5"


def test_h_invert(capsys):
    body = report(capsys, ["h", "invert", "--zoo", "one_sided_1_stable", "--u", "1,4"])
    assert np.allclose(body["h_inverse"], [2.0, 0.5], rtol=1e-9)


def test_exponent_eval(capsys):
    body = report(capsys, ["exponent", "eval", "--zoo", "gaussian:2", "--x", "1,0,0,2"])
    assert np.allclose(body["re_psi"], [0.5, 2.0], rtol=1e-14)
    assert np.allclose(body["im_psi"], 0.0)


def test_exponent_eval_needs_whole_points(capsys):
    assert run(["exponent", "eval", "--zoo", "gaussian:2", "--x", "1,0,0"]) == EXIT_INVALID


def test_density_fft_tables(tmp_path, capsys):
    csv, gp = tmp_path / "p.csv", tmp_path / "p.dat"
    body = report(capsys, ["density", "fft", "--zoo", "gaussian:2", "--t", "1", "--n", "64",
                           "--csv", str(csv), "--gnuplot", str(gp)])
    assert body["grid"]["pass_grade"]
    rows = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert rows.shape == (64 * 64, 3)
    text = gp.read_text()
    assert text.startswith("# x1 x2 p\n")
    assert "\n\n" in text  # gnuplot surface blocks
    x = rows[:, :2]
    assert np.allclose(rows[:, 2], np.exp(-0.5 * np.sum(x**2, axis=1)) / (2 * np.pi), atol=1e-10)


def test_density_point(capsys):
    body = report(capsys, ["density", "point", "--zoo", "cauchy", "--t", "1", "--x", "0,1"])
    assert np.allclose(body["p"], [1 / np.pi, 0.5 / np.pi], rtol=1e-8)


def test_density_numerical_failure(capsys):
    assert run(["density", "fft", "--zoo", "isotropic_stable:2,0.2", "--t", "1e-3"]) == EXIT_NUMERICAL
    assert "NotIntegrable" in capsys.readouterr().err


# -- verdicts and exit codes ----------------------------------------------------------------------
def test_upper_bound_cauchy(tmp_path, capsys):
    gp = tmp_path / "ratio.dat"
    body = report(capsys, ["bounds", "verify-upper", "--zoo", "cauchy", "--tmin", "2e-3", "--tmax", "1",
                           "--gnuplot", str(gp)])
    cert = body["certificate"]
    assert cert["verdict"] == "pass"
    assert max(cert["ratios"]) / min(cert["ratios"]) <= 1.5
    assert gp.read_text().startswith("#")


def test_lower_bound_subordinator_fails(capsys):
    body = report(capsys, ["bounds", "verify-lower", "--zoo", "stable_subordinator:0.5", "--tmin", "0.015625",
                           "--tmax", "0.0625", "--theta", "20", "--variant", "symmetric-minorant", "--force"],
                  code=EXIT_FAIL)
    assert body["certificate"]["verdict"] == "fail"


def test_audit_subset_exit_codes(capsys):
    ok = report(capsys, ["conditions", "audit", "--zoo", "cauchy", "--include", "C2,C3,C4"])
    assert ok["audit"]["conditions"]["C2"]["constants"]["c2"] == pytest.approx(8 / np.pi, rel=1e-8)
    bad = report(capsys, ["conditions", "audit", "--zoo", "product_stable:0.5,1.0,1.5", "--include", "C2,C4"],
                 code=EXIT_FAIL)
    assert {c["verdict"] for c in bad["audit"]["conditions"].values()} == {"fail"}


def test_decompose_diag(capsys):
    body = report(capsys, ["decompose", "diag", "--zoo", "cauchy", "--nu", "cauchy", "--a1", "1", "--a0", "2"])
    assert body["diagnostics"]["ball_mass"]["inf"] > 0
    assert body["diagnostics"]["members"] == 128


@pytest.mark.parametrize("argv", [
    ["zoo", "nope"],
    ["h", "eval", "--zoo", "nope:1", "--r", "1"],
    ["h", "eval", "--r", "1"],
    ["h", "eval", "--zoo", "cauchy", "--triplet", "x.json", "--r", "1"],
    ["h", "eval", "--zoo", "cauchy", "--r", "a,b"],
    ["simulate", "half-line", "--zoo", "cauchy:2", "--t", "1", "--paths", "100"],
    ["simulate", "cone", "--zoo", "cauchy:2", "--t", "1", "--paths", "0"],
])
def test_invalid_input(argv, capsys):
    assert run(argv) == EXIT_INVALID
    assert capsys.readouterr().err


# -- simulation and determinism -----------------------------------------------------------------------
def test_simulate_half_line_is_byte_identical(tmp_path):
    outs = []
    for k, workers in enumerate((1, 2)):
        p = tmp_path / f"run{k}.json"
        argv = ["simulate", "half-line", "--zoo", "one_sided_1_stable", "--t", "0.25,0.0625", "--paths", "40000",
                "--seed", "5", "--workers", str(workers), "--out", str(p)]
        assert run(argv) == EXIT_PASS
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    body = json.loads(outs[0])
    assert body["config"] == {"eps": 0.1, "paths": 40000, "policy": "gaussian-substitute", "seed": 5}


def test_simulate_exit_and_cone(capsys):
    body = report(capsys, ["simulate", "exit-time", "--zoo", "gaussian:1", "--r", "1", "--paths", "4000"])
    e = body["exit_time"][0]
    assert e["ci"][0] <= 0.5 <= e["ci"][1]
    body = report(capsys, ["simulate", "cone", "--zoo", "cauchy:2", "--t", "1,0.25", "--paths", "20000",
                           "--rotation", "random:3"])
    assert np.allclose(body["cone"]["estimates"], 0.25, atol=0.02)


# -- configuration files -------------------------------------------------------------------------------
def test_config_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"zoo": "gaussian:1", "params": {"r": [1.0]}}))
    body = report(capsys, ["h", "eval", "--config", str(cfg)])
    assert body["h"] == [0.5]
    # flags override the configuration
    body = report(capsys, ["h", "eval", "--config", str(cfg), "--r", "2"])
    assert body["h"] == [0.125]


def test_config_inline_triplet(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"triplet": triplet_to_dict(parse_zoo("cauchy")), "params": {"u": [1.0]}}))
    body = report(capsys, ["h", "invert", "--config", str(cfg)])
    assert body["h_inverse"][0] == pytest.approx(4 / np.pi, rel=1e-9)


@pytest.mark.parametrize("doc", [
    {"zoo": "cauchy", "colour": "red"},
    {"zoo": "cauchy", "tolerances": {"fuzz": 1}},
    {"zoo": "cauchy", "triplet": {"zoo": "cauchy"}},
    {"zoo": "cauchy", "params": {"nonsense": 1}},
    [1, 2],
])
def test_config_rejects_bad_documents(tmp_path, doc, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(doc))
    assert run(["h", "eval", "--config", str(cfg), "--r", "1"]) == EXIT_INVALID
