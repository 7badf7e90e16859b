import csv
import json

import numpy as np
import pytest

from odba_gaudin import __version__
from odba_gaudin.bench_cli import (CSV_HEADER, ConfigError, Context, RunConfig, main, parse_complex,
                                   report_digest, run)
from odba_gaudin.gaudin_ops import GaudinBoundary, hamiltonians
from odba_gaudin.spectra import gaudin_exact_spectrum, match_spectra
from odba_gaudin.tq_ansatz import BetheRoots, gaudin_bae_residual, gaudin_energies

SOLVER = {"starts": 256}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_parse_complex():
    assert parse_complex([1, -2]) == 1 - 2j
    assert parse_complex("0.5+1j") == 0.5 + 1j
    assert parse_complex(3) == 3
    with pytest.raises(ConfigError):
        parse_complex([1, 2, 3])


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mode": "dance"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mode": "match", "chain": {"N": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mode": "match", "colour": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mode": "sweep"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mode": "match", "solver": {"bogus": 1}})


def test_verify_algebra_report(tmp_path):
    out = tmp_path / "r.json"
    cfg = write(tmp_path, {"chain": {"N": 2, "theta": "random", "eta": "random"}, "draws": 20})
    assert main(["verify-algebra", "--config", cfg, "--seed", "7", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert set(rep) == {"config", "version", "checks", "roots", "spectra", "matches", "timings"}
    assert rep["version"] == __version__
    names = {c["name"]: c for c in rep["checks"]["results"]}
    for key in ("qybe", "re", "dual_re", "transfer_commutator", "gaudin_commutator"):
        assert names[key]["passed"] and names[key]["value"] <= 1e-10
    assert "r_identity" in rep["checks"]["tolerances"]
    assert rep["spectra"]["dual_re_literal_shift_residual"] > 1e-3


def test_match_mode_end_to_end(tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "t.csv"
    cfg = write(tmp_path, {"chain": {"N": 2, "theta": [[0.7, 0.1], -1.1]}, "solver": SOLVER})
    assert main(["match", "--config", cfg, "--out", str(out), "--csv", str(table)]) == 0
    rep = json.loads(out.read_text())
    m = rep["matches"]["gaudin"]
    assert m["matched"] == m["total"] == 4 and m["max_error"] <= 1e-8
    rows = list(csv.reader(table.open()))
    assert rows[0] == CSV_HEADER and len(rows) == 1 + 4 * 2


def test_report_is_recomputable(tmp_path):
    """Energies and residuals in the report follow from the stored roots alone."""
    cfg = RunConfig.from_dict({"mode": "match", "chain": {"N": 2, "theta": [0.6, [-1.2, 0.2]]},
                               "boundary": {"xi": [0.4, 0.3], "xi1": 0.7, "h1": [0, 0, 1],
                                            "h21": [0.5, 0.2, 0]},
                               "solver": SOLVER})
    rep, status = run(cfg)
    assert status == 0
    g = GaudinBoundary(0.4 + 0.3j, 0.7, [0, 0, 1], [0.5, 0.2, 0])
    theta = (0.6, -1.2 + 0.2j)
    c = lambda v: complex(*v)  # noqa: E731
    bethe = []
    for rec in rep["roots"]:
        r = BetheRoots([c(z) for z in rec["lambda"]], n_infinite=rec["n_infinite"])
        assert np.max(np.abs(gaudin_bae_residual(r, g, theta)), initial=0) <= 1e-12
        e = gaudin_energies(r, g, theta)
        np.testing.assert_allclose(e, [c(z) for z in rec["energies"]], rtol=1e-12)
        bethe.append((r, e))
    assert match_spectra(bethe, gaudin_exact_spectrum(theta, g)).complete
    assert len(hamiltonians(theta, g)) == 2


def test_duplicate_theta_is_usage_error(tmp_path, capsys):
    cfg = write(tmp_path, {"chain": {"N": 2, "theta": [0.5, 0.5]}})
    assert main(["solve-gaudin", "--config", cfg]) == 2
    assert "coincide" in capsys.readouterr().err


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"chain": {"N": 2, "theta": [0.5]}}'])
def test_bad_config_files(tmp_path, content):
    p = tmp_path / "c.json"
    p.write_text(content)
    assert main(["match", "--config", str(p)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["match", "--config", str(tmp_path / "nope.json")]) == 2


def test_tolerance_failure_exit_one(tmp_path, capsys):
    cfg = write(tmp_path, {"chain": {"N": 1, "theta": "random", "eta": 0.3}, "draws": 5})
    assert main(["verify-algebra", "--config", cfg, "--tol-scale", "1e-30"]) == 1
    assert "FAILED" in capsys.readouterr().err


def test_determinism_digest():
    cfg = RunConfig.from_dict({"mode": "solve-gaudin", "chain": {"N": 2}, "seed": 11, "solver": SOLVER})
    a, _ = run(cfg)
    b, _ = run(cfg)
    assert a["timings"] is not b["timings"]
    assert report_digest(a) == report_digest(b)
    c, _ = run(RunConfig.from_dict({"mode": "solve-gaudin", "chain": {"N": 2}, "seed": 12,
                                    "solver": SOLVER}))
    assert report_digest(c) != report_digest(a)


def test_sweep_single_point_equals_match():
    base = {"chain": {"N": 2, "theta": [0.8, -1.3]}, "seed": 4, "solver": SOLVER}
    single, s1 = run(RunConfig.from_dict({**base, "mode": "match"}))
    # pin the one grid value to the xi1 the match run drew
    ctx = Context(RunConfig.from_dict({**base, "mode": "match"}))
    ctx.theta()
    xi1 = ctx.gaudin_boundary().xi1
    sweep, s2 = run(RunConfig.from_dict({**base, "mode": "sweep", "grid": {"xi1": [[xi1.real, xi1.imag]]}}))
    assert s1 == s2 == 0
    assert sweep["matches"]["sweep"][0]["matched_fraction"] == 1.0
    e1 = np.array(sorted(tuple(map(tuple, r["exact"])) for r in single["matches"]["gaudin"]["records"]))
    e2 = np.array(sorted(tuple(map(tuple, r["exact"])) for r in sweep["matches"]["gaudin@0"]["records"]))
    np.testing.assert_allclose(e1, e2, rtol=1e-10)


def test_sweep_to_parallel_endpoint():
    cfg = RunConfig.from_dict({"mode": "sweep", "chain": {"N": 2, "theta": [0.8, -1.3]}, "seed": 2,
                               "grid": {"h21_norm": [0.6, 0.3, 0.0]}, "solver": SOLVER})
    rep, status = run(cfg)
    assert status == 0
    assert [p["matched_fraction"] for p in rep["matches"]["sweep"]] == [1.0, 1.0, 1.0]
    end = [r for r in rep["roots"] if r["point"] == "@2"]
    assert sorted(r["n_infinite"] for r in end) == [0, 1, 1, 2]


def test_sweep_records_bad_point():
    cfg = RunConfig.from_dict({"mode": "sweep", "chain": {"N": 1, "theta": [0.8]}, "seed": 2,
                               "boundary": {"xi": 0.8, "xi1": 0.3, "h1": [0, 0, 1], "h21": [0.5, 0, 0]},
                               "grid": {"xi": [0.8, 0.5]}, "solver": SOLVER})
    rep, status = run(cfg)
    fr = [p["matched_fraction"] for p in rep["matches"]["sweep"]]
    assert status == 1 and fr[0] == 0.0 and fr[1] == 1.0


def test_solve_chain_mode(tmp_path):
    cfg = write(tmp_path, {"chain": {"N": 2, "theta": [0.7, -1.1], "eta": [0.3, 0.1]}, "seed": 5,
                           "solver": SOLVER})
    out = tmp_path / "r.json"
    assert main(["solve-chain", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["matches"]["chain"]["matched"] == 4


def test_build_operators_mode(tmp_path):
    cfg = write(tmp_path, {"chain": {"N": 2}, "seed": 1})
    out = tmp_path / "r.json"
    assert main(["build-operators", "--config", cfg, "--out", str(out)]) == 0
    names = {c["name"] for c in json.loads(out.read_text())["checks"]["results"]}
    assert {"gaudin_fd", "h22_insensitivity", "gaudin_commutator"} <= names
