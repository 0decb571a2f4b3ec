import json

import numpy as np
import pytest

from pdmph.cli import main
from pdmph.report import payload_bytes, resolve_config
from pdmph.errors import ConfigError


def run(argv):
    return main(argv)


def test_catalog_lists_five_families(capsys):
    assert run(["catalog", "list"]) == 0
    out = capsys.readouterr().out
    rows = [l for l in out.splitlines() if l.strip() and not l.startswith("family")]
    assert len(rows) == 5
    assert any("morse" in r and "exp(-alpha*mu)" in r for r in rows)


def test_catalog_single_family(capsys):
    assert run(["catalog", "list", "--family", "morse"]) == 0
    out = capsys.readouterr().out
    assert "morse" in out and "harmonic3d" not in out


def test_catalog_unknown_family_exits_nonzero(capsys):
    assert run(["catalog", "list", "--family", "unknown"]) == 3


def test_generate_morse_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code = run(["generate", "--family", "morse", "--alpha", "2",
                "--xmin", "-1", "--xmax", "11", "--n", "1201", "--out", str(out)])
    assert code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    i0 = np.argmin(np.abs(data[:, 0]))
    assert data[i0, 0] == 0.0
    assert data[i0, 8] == pytest.approx(4.0, abs=1e-12)   # V_im = 2 alpha at mu = 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["printed_form_max_rel_delta"] < 1e-10


def test_generate_domain_violation_exit(capsys):
    code = run(["generate", "--family", "harmonic3d", "--xmin", "-8",
                "--xmax", "8", "--n", "201"])
    assert code == 6


def test_generate_rejects_presets(tmp_path):
    assert run(["generate", "--family", "free", "--xmin", "-1", "--xmax", "1",
                "--n", "101"]) == 2


def test_spectrum_budget_exceeded():
    assert run(["spectrum", "--family", "free", "--xmin", "-8", "--xmax", "8",
                "--n", "100000"]) == 8


def test_spectrum_free_particle(tmp_path, capsys):
    code = run(["spectrum", "--family", "free", "--xmin", "-8", "--xmax", "8",
                "--n", "301"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    E = payload["spectral"]["eigenvalues_re"]
    L = 16.0
    assert E[0] == pytest.approx((np.pi / L) ** 2, rel=1e-6)
    assert payload["spectral"]["counts"]["real"] == payload["spectral"]["total"]


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "morse", "bogus": 1}))
    assert run(["verify", "--config", str(cfg)]) == 2


def test_config_strict_nested():
    with pytest.raises(ConfigError):
        resolve_config({"grid": {"xmin": 0, "xmax": 1, "points": 100}})
    with pytest.raises(ConfigError):
        resolve_config({"checks": ["eq25", "nope"]})
    with pytest.raises(ConfigError):
        resolve_config({"refine": [101, 201]})


def test_config_defaults_written_back():
    cfg = resolve_config({"family": "scarf2"})
    assert cfg["grid"]["xmin"] == -8.0
    assert cfg["checks"]
    assert cfg["tolerances"]["residual"] == 1e-6


def test_verify_small_run_and_determinism(tmp_path):
    out = tmp_path / "rep.json"
    argv = ["verify", "--family", "morse", "--refine", "301,501,1001",
            "--checks", "eq25,eq26,eta-hermiticity,eq28", "--out", str(out)]
    assert run(argv) == 0
    first = payload_bytes(out)
    assert run(argv) == 0
    assert payload_bytes(out) == first
    doc = json.loads(out.read_text())
    assert set(doc) == {"payload", "sidecar"}
    assert "generated_at" in doc["sidecar"]
    payload = doc["payload"]
    assert payload["toolkit"]["name"] == "pdmph"
    assert payload["conventions"]["mu_anchor"] == "mu(0) = 0 (closed form)"
    names = [c["name"] for c in payload["checks"]]
    assert names == ["eq25", "eq26", "eq28", "eta-hermiticity", "eta-dual"]
    assert all(c["verdict"] in ("pass", "reported-only") for c in payload["checks"])


def test_verify_corrupted_fixture_fails(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "family": "scarf2",
        "refine": [301, 501, 1001],
        "checks": ["eq25"],
        "corruption": {"target": "v-imag-flip", "amount": 0.0},
        "out": str(tmp_path / "rep.json"),
    }))
    assert run(["verify", "--config", str(cfg)]) == 7
    doc = json.loads((tmp_path / "rep.json").read_text())
    assert doc["payload"]["checks"][0]["verdict"] == "fail"


def test_verify_jobs_flag_deterministic(tmp_path):
    out = tmp_path / "rep.json"
    base = ["verify", "--family", "morse", "--refine", "301,501,1001",
            "--checks", "eq25,eq26,eq28", "--out", str(out)]
    assert run(base + ["--jobs", "1"]) == 0
    b1 = payload_bytes(out)
    assert run(base + ["--jobs", "3"]) == 0
    b2 = payload_bytes(out)
    # payloads differ only in the echoed jobs value
    assert b1.replace(b'"jobs":1', b'"jobs":3') == b2


def test_verify_gauge_flag(tmp_path):
    out = tmp_path / "rep.json"
    code = run(["verify", "--family", "scarf2", "--mass", "rational:beta=1",
                "--gauge", "scaled-g:scale=1.0", "--xmin", "-5", "--xmax", "5",
                "--refine", "301,501,1001", "--checks", "gauge,tau",
                "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["payload"]["config"]["gauge"]["mode"] == "scaled-g"
    assert all(c["verdict"] == "pass" for c in doc["payload"]["checks"])


def test_verify_mass_flag_rational(tmp_path):
    out = tmp_path / "rep.json"
    code = run(["verify", "--family", "morse", "--mass", "rational:beta=1",
                "--xmin", "-3", "--xmax", "4", "--refine", "301,501,1001",
                "--checks", "eq25,eq26", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["payload"]["config"]["mass"]["kind"] == "rational"


def test_verify_hermitian_limit_preset(tmp_path):
    out = tmp_path / "rep.json"
    code = run(["verify", "--family", "hermitian-limit", "--g-const", "1.3",
                "--xmin", "-2", "--xmax", "10", "--refine", "301,501,1001",
                "--checks", "eq25,intertwining", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    checks = {c["name"]: c for c in doc["payload"]["checks"]}
    assert checks["eq25"]["verdict"] == "pass"
    assert checks["intertwining"]["notes"]["defect_regime"] == "vanishing"


def test_verify_free_preset_runs_operator_checks(tmp_path):
    out = tmp_path / "rep.json"
    code = run(["verify", "--family", "free", "--xmin", "-8", "--xmax", "8",
                "--refine", "301,501,1001", "--checks",
                "intertwining,eta-hermiticity,eq29", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    checks = {c["name"]: c for c in doc["payload"]["checks"]}
    assert checks["eq29"]["notes"]["exact_regime"] is True
    assert checks["intertwining"]["levels"][-1]["residual"] == 0.0


def test_mass_table_csv(tmp_path):
    mpath = tmp_path / "m.csv"
    xs = np.linspace(-5, 5, 2001)
    np.savetxt(mpath, np.column_stack([xs, 1.0 / (2.0 * (1.0 + xs**2) ** 2)]),
               delimiter=",")
    out = tmp_path / "sys.csv"
    code = run(["generate", "--family", "morse", "--mass", f"table:path={mpath}",
                "--xmin", "-3", "--xmax", "4", "--n", "401", "--out", str(out)])
    assert code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    # mu approximates arctan anchored at the grid node nearest 0, since the
    # table samples the rational mass
    i = np.argmin(np.abs(data[:, 0] - 1.0))
    k = np.argmin(np.abs(data[:, 0]))
    expected = np.arctan(data[i, 0]) - np.arctan(data[k, 0])
    assert data[i, 3] == pytest.approx(expected, abs=1e-8)


def test_gauge_table_mode(tmp_path):
    from pdmph import GeneratingSpec, MassProfile, make_family, make_grid
    g = make_grid(-4.0, 4.0, 401)
    xs = np.linspace(-5, 5, 2001)
    ref = make_family(GeneratingSpec("scarf2", gauge_a=("scaled-g", 0.5)),
                      MassProfile.constant(), g)
    tab = make_family(
        GeneratingSpec("scarf2", gauge_a=("table", xs, 0.5 / np.cosh(xs))),
        MassProfile.constant(), g)
    assert np.abs(tab.a - ref.a).max() < 1e-9
    assert np.abs(tab.xi - ref.xi).max() < 1e-8


def test_custom_g_table_flag(tmp_path):
    gpath = tmp_path / "g.csv"
    xs = np.linspace(-5, 5, 2001)
    np.savetxt(gpath, np.column_stack([xs, np.exp(-xs)]), delimiter=",")
    out = tmp_path / "sys.csv"
    code = run(["generate", "--family", "custom-table", "--g-table", str(gpath),
                "--xmin", "-4", "--xmax", "4", "--n", "401", "--out", str(out)])
    assert code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (401, 16)


def test_trace_dir(tmp_path):
    out = tmp_path / "rep.json"
    tr = tmp_path / "traces"
    code = run(["verify", "--family", "morse", "--refine", "301,501,1001",
                "--checks", "eq25,eq28", "--out", str(out),
                "--trace-dir", str(tr)])
    assert code == 0
    data = np.loadtxt(tr / "eq25.csv", delimiter=",", skiprows=1)
    assert data.shape == (1001, 2)
    from pdmph import residual_trace, SystemBuilder, GeneratingSpec, MassProfile
    from pdmph.errors import InvalidDomainError
    b = SystemBuilder("family", MassProfile.constant(), -2.0, 10.0,
                      spec=GeneratingSpec("morse"))
    with pytest.raises(InvalidDomainError):
        residual_trace(b, "spectrum", 301, tmp_path / "x.csv")


def test_no_color_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PDMPH_NO_COLOR", "1")
    out = tmp_path / "rep.json"
    run(["verify", "--family", "morse", "--refine", "301,501,1001",
         "--checks", "eq25", "--out", str(out)])
    assert "\x1b[" not in capsys.readouterr().out
