"""
End-to-end tests for the gaussmac command line
"""

import csv
import json

import pytest

from gaussmac.api import commands
from gaussmac.core.exceptions import GaussMacError
from gaussmac.main import main
from gaussmac.services.capacities import ea_bgc_capacity

THERMAL_LOSS = {"s": 1, "w": [0.7745966692414834], "delta": [0], "nb": 0.2}  # |w|² = 0.6
THIRDS_LOSS = {"interference": {"eta": [1 / 3, 2 / 3], "bgc": {"class": "thermal-loss", "w2": 0.1, "nb": 0.1}}}


def _run(tmp_path, command, config, *extra, out="out.csv"):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    out_path = tmp_path / out
    code = main([command, "--config", str(config_path), "--out", str(out_path), *extra])
    return code, out_path


def _rows(path):
    with path.open() as f:
        return list(csv.DictReader(f))


def test_point_capacity(tmp_path):
    code, out = _run(tmp_path, "point-capacity", {**THERMAL_LOSS, "ns": [1.0]})
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 1
    assert float(rows[0]["ea_capacity"]) == pytest.approx(ea_bgc_capacity(0, 1.0, 0.6, 0.2), rel=1e-11)
    assert float(rows[0]["ratio"]) > 1


def test_point_capacity_with_oracle_column(tmp_path):
    config = {**THERMAL_LOSS, "ns": [0.5], "sweep": {"log10_min": -1, "log10_max": 1, "points": 2}}
    code, out = _run(tmp_path, "point-capacity", config, "--oracle")
    assert code == 0
    rows = _rows(out)
    # N_S = 0.1 fits the default truncation, N_S = 10 does not
    assert abs(float(rows[0]["fock_oracle"]) - float(rows[0]["ea_capacity"])) <= 1e-3
    assert rows[1]["fock_oracle"] == ""


def test_coherent_region_sweep(tmp_path):
    config = {**THIRDS_LOSS, "sweep": {"fractions": [1 / 3, 2 / 3], "log10_min": -3, "log10_max": 0, "points": 4}}
    code, out = _run(tmp_path, "coherent-region", config)
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 4
    assert set(rows[0]) == {"N_S", "C_1", "C_2", "C_1-2"}
    totals = [float(row["C_1-2"]) for row in rows]
    assert totals == sorted(totals)


def test_outer_bounds_json(tmp_path):
    code, out = _run(tmp_path, "outer-bounds", {**THIRDS_LOSS, "ns": [1.0, 2.0]}, "--format", "json", out="bounds.json")
    assert code == 0
    records = json.loads(out.read_text())
    assert [r["kind"] for r in records] == ["unassisted", "ea"]
    assert records[0]["condition"] == "A"
    assert records[0]["individual"][0] == pytest.approx(0.29659, abs=1e-5)


def test_ea_total(tmp_path):
    config = {**THIRDS_LOSS, "ns": [0.9, 0.1], "sweep": {"log10_min": -5, "log10_max": -2, "points": 3}}
    code, out = _run(tmp_path, "ea-total", config)
    assert code == 0
    rows = _rows(out)
    ratios = [float(row["ratio"]) for row in rows]
    # smaller N_S first: the EA advantage shrinks as the brightness grows
    assert ratios == sorted(ratios, reverse=True)
    assert all(float(row["ea_total"]) >= float(row["coherent_total"]) for row in rows)


def test_gaussian_region(tmp_path):
    config = {**THIRDS_LOSS, "ns": [1.0, 2.0], "optimizer": {"starts": 1}}
    code, out = _run(tmp_path, "gaussian-region", config, "--rays", "2", "--seed", "3")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 2
    assert {"phi", "R1", "R2", "r1", "r2", "theta2", "iterations"} <= set(rows[0])
    hull = json.loads((tmp_path / "out.hull.json").read_text())
    assert [0.0, 0.0] in hull


def test_gaussian_region_json_report(tmp_path):
    config = {**THIRDS_LOSS, "ns": [1.0, 2.0], "optimizer": {"starts": 1}}
    code, out = _run(tmp_path, "gaussian-region", config, "--rays", "2", "--format", "json", out="region.json")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["s"] == 2
    assert len(report["rays"]) == 2
    assert set(report["tmsv_constraints"]) == {"{}", "{1}", "{2}", "{1,2}"}


def test_memory(tmp_path):
    config = {"epsilon": 0.5, "gamma": 0.5, "n": 2, "nb": 0.1, "eta": [0.9, 0.1], "ns": [0.009, 0.001]}
    code, out = _run(tmp_path, "memory", config)
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 1
    row = {k: float(v) for k, v in rows[0].items()}
    assert row["coherent_rate"] <= row["ea_rate"] * (1 + 1e-7)
    assert row["ea_rate"] <= row["ea_bottleneck"] * (1 + 1e-7)


def test_oracle_check(tmp_path):
    code, out = _run(tmp_path, "oracle-check", {**THERMAL_LOSS, "ns": [0.5]})
    assert code == 0
    assert abs(float(_rows(out)[0]["difference"])) <= 1e-3


def test_eta_sweep(tmp_path):
    config = {**THIRDS_LOSS, "ns": [9e-4, 1e-4], "sweep": {"etas": [0.0, 0.5, 1.0]}}
    code, out = _run(tmp_path, "eta-sweep", config)
    assert code == 0
    assert [float(row["eta1"]) for row in _rows(out)] == [0.0, 0.5, 1.0]


# ============= Exit Codes =============

def test_invalid_json_is_a_config_error(tmp_path):
    config_path = tmp_path / "broken.json"
    config_path.write_text("{not json")
    assert main(["ea-total", "--config", str(config_path)]) == 2
    assert main(["ea-total", "--config", str(tmp_path / "missing.json")]) == 2


def test_schema_violations_are_config_errors(tmp_path):
    code, _ = _run(tmp_path, "ea-total", {**THIRDS_LOSS, "ns": [1.0]})
    assert code == 2
    code, _ = _run(tmp_path, "eta-sweep", {**THERMAL_LOSS, "ns": [1.0]})
    assert code == 2
    code, _ = _run(tmp_path, "point-capacity", {**THIRDS_LOSS, "ns": [1.0, 1.0]})
    assert code == 2


def test_unphysical_channel_exit_code(tmp_path):
    code, out = _run(tmp_path, "ea-total", {"s": 1, "w": [1.5], "delta": [0], "nb": 0.0, "ns": [1.0]})
    assert code == 3
    assert not out.exists()


def test_check_sandwich_tolerates_round_off_only():
    commands.check_sandwich(1.0, 1.0 - 1e-12, "total")
    commands.check_sandwich(1e4, 1e4 * (1 - 1e-10), "total")
    with pytest.raises(GaussMacError, match="exceeds its upper bound"):
        commands.check_sandwich(1.0, 0.99, "total")


@pytest.mark.parametrize(
    "command, config",
    [
        ("point-capacity", {**THERMAL_LOSS, "ns": [1.0]}),
        ("outer-bounds", {**THIRDS_LOSS, "ns": [1.0, 2.0]}),
        ("ea-total", {**THIRDS_LOSS, "ns": [0.9, 0.1]}),
    ],
)
def test_rows_above_their_upper_bound_are_not_written(tmp_path, monkeypatch, command, config):
    monkeypatch.setattr(commands, "coherent_bound", lambda *args, **kwargs: 100.0)
    code, out = _run(tmp_path, command, config)
    assert code == 1
    assert not out.exists()


def test_outer_bounds_of_lenient_channel_skip_the_achievable_rates(tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise AssertionError("achievable rate evaluated for a lenient channel")

    monkeypatch.setattr(commands, "ea_total_rate_capacity", fail)
    monkeypatch.setattr(commands, "coherent_bound", fail)
    monkeypatch.setattr(commands, "ea_outer", lambda *args, **kwargs: None)
    config = {"s": 1, "w": [1.5], "delta": [0], "nb": 0.0, "ns": [1.0], "strict": False}
    code, _ = _run(tmp_path, "outer-bounds", config)
    assert code == 0
