import csv
import io
import json
import math
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from geophase.cli import main
from geophase.errors import GaugeError, ScenarioError
from geophase.harness import (
    CSV_COLUMNS,
    RunReport,
    Scenario,
    emit,
    load_report,
    load_scenario,
    noise_sweep,
    run_scenario,
    to_csv,
    to_json,
)
from geophase.noise import NoiseModel

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name):
    return FIXTURES / name


def small_sweep(kind="axis-tilt", samples=6, strength=0.05, steps=200):
    sc = load_scenario(fixture("tilt_sweep.json"))
    return replace(sc, noise=NoiseModel(kind, strength, samples, 17), integrator={"steps_per_segment": steps})


class TestScenario:
    def test_states_normalized(self):
        sc = load_scenario(fixture("orange_quarter.json"))
        s = sc.states[0]
        assert abs(s.a) ** 2 + abs(s.b) ** 2 == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "name, path",
        [("missing_duration.json", "$.schedule.params.segments[0]"), ("unknown_field.json", "$"), ("not_json.json", "$")],
    )
    def test_schema_errors_name_path(self, name, path):
        with pytest.raises(ScenarioError) as info:
            load_scenario(fixture(name))
        assert info.value.path == path

    def test_missing_duration_names_field(self):
        with pytest.raises(ScenarioError, match="duration"):
            load_scenario(fixture("missing_duration.json"))

    @pytest.mark.parametrize(
        "patch, path",
        [
            ({"version": 2}, "$.version"),
            ({"analyses": ["holonomy"]}, "$.analyses[0]"),
            ({"states": [{"a": [0, 0], "b": [0, 0]}]}, "$.states[0]"),
            ({"noise": {"kind": "axis-tilt", "strength": 0.1, "samples": 3}}, "$.noise"),
            ({"schedule": {"kind": "orange-slice", "params": {"phi": 1.0, "psi": 2}}}, "$.schedule.params"),
            ({"schedule": {"kind": "orange-slice", "params": {"phi": 9.0}}}, "$.schedule.params"),
        ],
    )
    def test_rejections(self, patch, path):
        data = json.loads(fixture("orange_quarter.json").read_text())
        data.update(patch)
        with pytest.raises(ScenarioError) as info:
            sc = Scenario.from_dict(data)
            sc.build_schedule()
        assert info.value.path == path

    def test_overrides(self):
        sc = load_scenario(fixture("reparam_sweep.json")).with_overrides(steps=50, tol=1e-6, seed=5)
        assert sc.integrator["steps_per_segment"] == 50
        assert sc.integrator["refine"] is True
        assert sc.noise.seed == 5
        with pytest.raises(ScenarioError):
            load_scenario(fixture("orange_quarter.json")).with_overrides(seed=1)

    def test_roundtrip_dict(self):
        sc = load_scenario(fixture("reparam_sweep.json"))
        assert Scenario.from_dict(sc.to_dict()) == sc


class TestRun:
    def test_orange_quarter(self):
        r = run_scenario(fixture("orange_quarter.json")).results
        for d in r["decompose"]:
            assert abs(d["dynamical"]) < 1e-9
        assert abs(r["relative-phase"]) == pytest.approx(math.pi, abs=1e-9)
        assert r["delta"][0]["direct"] == pytest.approx(-math.pi / 2, abs=1e-9)
        assert all(g["discrepancy"] < 1e-9 for g in r["gamma-omega"])

    def test_zero_field(self):
        r = run_scenario(fixture("explicit_zero.json")).results
        for d in r["decompose"]:
            for key in ("total", "dynamical", "geometric", "solid_angle"):
                assert d[key] == 0.0
        assert r["relative-phase"] == 0.0
        assert r["delta"][0]["direct"] == 0.0

    def test_gauge_violation(self):
        with pytest.raises(GaugeError):
            run_scenario(fixture("gauge_violation.json"))

    def test_traceless_gauge_default(self):
        data = json.loads(fixture("gauge_violation.json").read_text())
        del data["gauge"]
        r = run_scenario(Scenario.from_dict(data)).results
        assert r["delta"][0]["discrepancy"] < 1e-10

    def test_refinement_block(self):
        sc = load_scenario(fixture("orange_quarter.json")).with_overrides(steps=10, tol=1e-9)
        r = run_scenario(sc).results
        assert r["refinement"]["converged"]

    def test_tuned(self):
        r = run_scenario(fixture("tuned.json")).results
        assert all(g["discrepancy"] < 1e-3 for g in r["gamma-omega"])
        assert abs(r["relative-phase"]) == pytest.approx(math.pi / 2, abs=1e-6)


class TestSweep:
    def test_statistics_cover_samples(self):
        rep = noise_sweep(small_sweep())
        assert len(rep.noise["samples"]) == 6
        assert [s["sample"] for s in rep.noise["samples"]] == list(range(6))
        st = rep.noise["statistics"]
        vals = [s["relative_phase"] for s in rep.noise["samples"]]
        assert st["relative_phase"]["mean"] == pytest.approx(np.mean(vals))
        assert st["relative_phase"]["std"] == pytest.approx(np.std(vals))
        assert set(st) == {"relative_phase", "delta[0]"}

    def test_zero_strength_matches_baseline(self):
        rep = noise_sweep(small_sweep(strength=0.0))
        base = rep.results["relative-phase"]
        for s in rep.noise["samples"]:
            assert s["relative_phase"] == base or abs(abs(s["relative_phase"]) - abs(base)) == 0.0
            assert s["delta"][0] == rep.results["delta"][0]["direct_unwrapped"]

    def test_workers_do_not_change_output(self):
        a = noise_sweep(small_sweep(), workers=1).comparable()
        b = noise_sweep(small_sweep(), workers=4).comparable()
        assert a == b

    def test_requires_noise(self):
        with pytest.raises(ScenarioError):
            noise_sweep(fixture("orange_quarter.json"))


class TestEmit:
    def test_decompose_csv_rows(self):
        rep = run_scenario(fixture("orange_quarter.json"))
        rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
        dec = [r for r in rows if r["analysis"] == "decompose"]
        assert [r["label"] for r in dec] == ["0", "1"]
        for r in dec:
            for col in ("phi", "delta", "gamma", "omega"):
                float(r[col])
        assert tuple(rows[0].keys()) == CSV_COLUMNS

    def test_sweep_cardinality(self):
        rep = noise_sweep(small_sweep(samples=200, steps=20))
        rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
        assert sum(r["analysis"] == "noise:relative-phase" for r in rows) == 200
        assert sum(r["analysis"] == "noise:delta" for r in rows) == 200
        assert all(r["seed"] == "17" for r in rows)

    def test_csv_is_lossless(self):
        rep = run_scenario(fixture("orange_quarter.json"))
        rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
        rel = [r for r in rows if r["analysis"] == "relative-phase"][0]
        assert float(rel["value_radians"]) == rep.results["relative-phase"]

    def test_json_roundtrip(self, tmp_path):
        rep = noise_sweep(small_sweep(samples=3))
        path = tmp_path / "r.json"
        emit(rep, path)
        back = load_report(path)
        assert back.to_dict() == rep.to_dict()
        assert to_json(back) == path.read_text()

    def test_emit_by_suffix(self, tmp_path):
        rep = run_scenario(fixture("explicit_zero.json"))
        emit(rep, tmp_path / "r.csv")
        assert (tmp_path / "r.csv").read_text().startswith("scenario_id,")
        with pytest.raises(ValueError):
            emit(rep, tmp_path / "r.txt", fmt="xml")

    def test_determinism(self):
        a = run_scenario(fixture("orange_quarter.json"))
        b = run_scenario(fixture("orange_quarter.json"))
        assert a.comparable() == b.comparable()
        assert "timestamp" in a.provenance


class TestCli:
    def test_validate_ok(self, capsys):
        assert main(["validate", str(fixture("orange_quarter.json"))]) == 0
        assert "ok" in capsys.readouterr().out

    @pytest.mark.parametrize(
        "argv, code",
        [
            (["validate", "missing_duration.json"], 2),
            (["run", "missing_duration.json"], 2),
            (["run", "unknown_field.json"], 2),
            (["run", "not_json.json"], 2),
            (["sweep", "orange_quarter.json"], 2),
            (["run", "gauge_violation.json"], 3),
            (["run", "no_such_file.json"], 4),
        ],
    )
    def test_exit_codes(self, argv, code, capsys):
        argv = [argv[0], str(fixture(argv[1]))]
        assert main(argv) == code
        assert capsys.readouterr().err.startswith("geophase:")

    def test_unwritable_output(self, tmp_path):
        out = tmp_path / "missing" / "r.json"
        assert main(["run", str(fixture("explicit_zero.json")), "--out", str(out)]) == 4

    def test_run_writes_report(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["run", str(fixture("orange_quarter.json")), "--out", str(out), "--steps", "100"]) == 0
        rep = load_report(out)
        assert rep.provenance["integrator"]["steps_per_segment"] == 100

    def test_sweep_seed_flag(self, tmp_path):
        data = json.loads(fixture("tilt_sweep.json").read_text())
        data["noise"]["samples"] = 3
        src = tmp_path / "s.json"
        src.write_text(json.dumps(data))
        out = tmp_path / "r.json"
        assert main(["sweep", str(src), "--seed", "3", "--steps", "100", "--out", str(out)]) == 0
        assert load_report(out).provenance["seed"] == 3

    def test_console_script(self, tmp_path):
        out = subprocess.run(
            [sys.executable, "-m", "geophase.cli", "validate", str(fixture("missing_duration.json"))],
            capture_output=True, text=True,
        )
        assert out.returncode == 2
        assert "duration" in out.stderr
