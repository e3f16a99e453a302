import csv
import filecmp
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin_qudits.chain import HardwareParams
from timebin_qudits.cli import main
from timebin_qudits.config import (
    DEFAULT_CONFIG,
    config_hash,
    hardware_from_config,
    load_config,
    noise_from_config,
    parse_value,
)
from timebin_qudits.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_default_config_matches_reference_hardware():
    cfg = load_config()
    assert hardware_from_config(cfg) == HardwareParams(extra_phases=(0.0, 0.0))
    assert noise_from_config(cfg).mu == 0.14


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text('dimension = 8\n[hardware]\ncoarse_delays_ns = [2.6, 5.6, 11.6]\ndelta_phi_deg = 162.0\n')
    cfg = load_config(str(path), {"noise.mu": 0.5, "hardware.theta_deg": 40})
    assert cfg["dimension"] == 8
    hw = hardware_from_config(cfg)
    assert hw.coarse_delays_ps == (2600, 5600, 11600)
    assert hw.delta_phi == pytest.approx(0.9 * math.pi)
    assert cfg["noise"]["mu"] == 0.5


@pytest.mark.parametrize(
    "overrides",
    [
        {"bogus": 1},
        {"hardware.bogus": 1},
        {"dimension": 8},  # two delays given for three stages
        {"noise.mu": -1},
        {"hardware.theta_deg": 100},
    ],
)
def test_invalid_configs(overrides):
    if overrides == {"dimension": 8}:
        overrides = {"dimension": 8, "hardware.coarse_delays_ns": [2.6, 5.6]}
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("dimension = \n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.toml"))


def test_config_hash_ignores_output():
    a = load_config(None, {"output.dir": "x"})
    b = load_config(None, {"output.dir": "y", "output.format": "json"})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(load_config(None, {"seed": 1}))


@settings(max_examples=100, deadline=None)
@given(
    st.one_of(
        st.integers(-10**6, 10**6),
        st.floats(-1e6, 1e6, allow_nan=False),
        st.lists(st.integers(0, 10), max_size=4),
        st.booleans(),
    )
)
def test_parse_value_round_trip(value):
    text = json.dumps(value).replace("true", "true").replace("false", "false")
    assert parse_value(text) == value


def test_parse_value_falls_back_to_string():
    assert parse_value("hardware.delta_phi_deg") == "hardware.delta_phi_deg"


@settings(max_examples=25, deadline=None)
@given(st.floats(90, 180), st.floats(0, 90), st.sampled_from(["H", "V"]))
def test_hardware_config_round_trip(dphi, theta, pol):
    cfg = load_config(None, {"hardware.delta_phi_deg": dphi, "hardware.theta_deg": theta, "hardware.delayed_pol": pol})
    hw = hardware_from_config(cfg)
    assert HardwareParams.from_dict(json.loads(json.dumps(hw.to_dict()))) == hw


def test_simulate_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        code, _ = run(capsys, "simulate", "--seed", "42", "--shots", "5000", "--out", str(tmp_path / name))
        assert code == 0
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert sorted(cmp.same_files) == sorted(p.name for p in (tmp_path / "a").iterdir())
    assert not cmp.diff_files
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 42 and report["schema_version"] == 1
    assert report["qber"] == 0.0 and report["rate"] == 2.0
    lines = (tmp_path / "a" / "counts_01.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1" and lines[3] == "alpha,beta,i,j,count"


def test_simulate_json_format(tmp_path, capsys):
    code, _ = run(capsys, "simulate", "--shots", "100", "--format", "json", "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "counts_11.json").read_text())
    assert len(data["counts"]) == 4 and len(data["counts"][0]) == 5


def test_analytic(tmp_path, capsys):
    code, _ = run(capsys, "analytic", "--param", "hardware.delta_phi_deg=162", "--out", str(tmp_path))
    assert code == 0
    probs = json.loads((tmp_path / "probabilities_11.json").read_text())
    assert probs["raw"][0][0] == pytest.approx(0.97269387, abs=1e-8)
    app = json.loads((tmp_path / "apparatus_0.json").read_text())
    assert [w["center_ns"] for w in app["windows"]] == [0.0, 2.6, 5.6, 8.2]


def test_sweep(tmp_path, capsys):
    code, _ = run(capsys, "sweep", "--param", "sweep.num=4", "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader(l for l in (tmp_path / "sweep.csv").read_text().splitlines() if not l.startswith("#")))
    assert len(rows) == 4
    qbers = [float(r["qber"]) for r in rows]
    assert qbers == sorted(qbers, reverse=True)


def test_sweep_unknown_parameter(tmp_path, capsys):
    code, out = run(capsys, "sweep", "--param", "sweep.parameter=hardware.nope", "--out", str(tmp_path))
    assert code == 2
    assert json.loads(out.err)["code"] == "config"


def test_validate(tmp_path, capsys):
    code, _ = run(capsys, "validate", "--param", "hardware.extra_phases_deg=[180, 0]", "--out", str(tmp_path))
    assert code == 0
    results = json.loads((tmp_path / "validate.json").read_text())["results"]
    assert all(r["passed"] for r in results)


def test_rates(tmp_path, capsys):
    code, _ = run(capsys, "rates", "--format", "json", "--out", str(tmp_path))
    assert code == 0
    thresholds = json.loads((tmp_path / "thresholds.json").read_text())["rows"]
    assert thresholds[0]["d"] == 2 and thresholds[0]["threshold"] == pytest.approx(0.1100, abs=1e-4)


@pytest.mark.parametrize(
    "argv, code_name",
    [
        (["analytic", "--param", "dimension=3"], "unsupported_dimension"),
        (["analytic", "--param", "hardware.coarse_delays_ns=[2.6, 2.6]"], "degenerate_routing"),
        (["analytic", "--param", "nonsense"], "config"),
        (["analytic", "--param", "unknown.key=1"], "config"),
    ],
)
def test_errors_are_structured(tmp_path, capsys, argv, code_name):
    code, out = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 2
    err = json.loads(out.err)
    assert err["code"] == code_name
    assert set(err) == {"code", "message", "context"}


def test_default_config_is_not_mutated():
    before = json.dumps(DEFAULT_CONFIG, sort_keys=True)
    load_config(None, {"hardware.theta_deg": 10, "noise.transmissions": {}})
    assert json.dumps(DEFAULT_CONFIG, sort_keys=True) == before
