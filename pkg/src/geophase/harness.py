"""Scenario files, experiment runs, Monte-Carlo sweeps and report output.

A scenario is one JSON document::

    {
      "version": 1,
      "id": "orange-quarter",
      "schedule": {"kind": "orange-slice", "params": {"phi": 1.5707963267948966}},
      "analyses": ["decompose", "relative-phase", "delta"],
      "states": [{"a": [1, 0], "b": [1, 0], "basis": "cyclic"}],
      "integrator": {"steps_per_segment": 10000},
      "gauge": "traceless",
      "noise": {"kind": "axis-tilt", "strength": 0.05, "samples": 200, "seed": 7}
    }

Unknown fields are rejected everywhere.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Optional

import jsonschema
import numpy as np

from . import __version__, kernels
from .errors import GaugeError, ScenarioError
from .gates import (
    OrangeSliceParams,
    RotatingFieldParams,
    SpinEchoParams,
    orange_slice_schedule,
    parameter_tuned_schedule,
    spin_echo_schedule,
)
from .noise import NOISE_KINDS, NoiseModel
from .phases import check_gamma_omega, cyclic_basis, decompose, dynamical_phase_state, relative_phase
from .propagator import IntegratorConfig, evolve, refine_until_converged
from .schedule import HamiltonianSchedule, make_traceless, segment_from_dict
from .su2 import wrap_phase

SCENARIO_VERSION = 1
ANALYSES = ("decompose", "delta", "gamma-omega", "relative-phase")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_COMPLEX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_SEGMENT = {
    "oneOf": [
        _obj(
            {
                "kind": {"const": "constant"},
                "duration": _POS,
                "coeffs": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
            },
            ("kind", "duration", "coeffs"),
        ),
        _obj(
            {
                "kind": {"const": "rotating"},
                "duration": _POS,
                "amplitude": _NUM,
                "omega": _NUM,
                "phase": _NUM,
                "cz": _NUM,
                "c0": _NUM,
            },
            ("kind", "duration", "amplitude", "omega"),
        ),
        _obj(
            {
                "kind": {"const": "sampled"},
                "duration": _POS,
                "samples": {
                    "type": "array",
                    "minItems": 2,
                    "items": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                },
            },
            ("kind", "duration", "samples"),
        ),
    ]
}

SCHEDULE_PARAMS = {
    "explicit-segments": _obj({"segments": {"type": "array", "minItems": 1, "items": _SEGMENT}}, ("segments",)),
    "orange-slice": _obj({"phi": _NUM, "t1": _POS, "t2": _POS}, ("phi",)),
    "parameter-tuned": _obj(
        {
            "target_omega": _POS,
            "n": {"type": "integer"},
            "omega": _POS,
            "seed_omega0": _NUM,
            "seed_omega1": _NUM,
            "loops": {"type": "integer", "minimum": 1},
        },
        ("target_omega", "n"),
    ),
    "spin-echo": _obj(
        {
            "theta": _NUM,
            "omega_larmor": _POS,
            "ratio": _POS,
            "pulse_axis": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            "pulse_duration": _POS,
            "zero_point": _NUM,
            "steps_per_larmor": {"type": "integer", "minimum": 2},
        },
        ("theta", "ratio"),
    ),
}

SCENARIO_SCHEMA = _obj(
    {
        "version": {"const": SCENARIO_VERSION},
        "id": {"type": "string", "minLength": 1},
        "schedule": _obj(
            {"kind": {"enum": sorted(SCHEDULE_PARAMS)}, "params": {"type": "object"}},
            ("kind", "params"),
        ),
        "analyses": {"type": "array", "minItems": 1, "items": {"enum": list(ANALYSES)}},
        "states": {
            "type": "array",
            "items": _obj(
                {"a": _COMPLEX, "b": _COMPLEX, "basis": {"enum": ["computational", "cyclic"]}},
                ("a", "b"),
            ),
        },
        "integrator": _obj(
            {
                "steps_per_segment": {"type": "integer", "minimum": 1},
                "max_step": _POS,
                "refine": {"type": "boolean"},
                "refinement_tolerance": _POS,
                "max_refinements": {"type": "integer", "minimum": 0},
            }
        ),
        "gauge": {"enum": ["traceless", "as-given"]},
        "noise": _obj(
            {
                "kind": {"enum": list(NOISE_KINDS)},
                "strength": {"type": "number", "minimum": 0},
                "samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            },
            ("kind", "strength", "samples", "seed"),
        ),
    },
    ("version", "id", "schedule", "analyses"),
)


def _path(prefix, err) -> str:
    out = prefix
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _check(instance, schema, prefix="$"):
    validator = jsonschema.Draft202012Validator(schema)
    err = jsonschema.exceptions.best_match(validator.iter_errors(instance))
    if err is not None:
        # oneOf failures hide the useful message one level down
        if err.validator == "oneOf" and err.context:
            kind = instance
            for p in err.absolute_path:
                kind = kind[p]
            ctx = [e for e in err.context if not _kind_mismatch(e, kind)] or list(err.context)
            sub = jsonschema.exceptions.best_match(ctx)
            # context errors carry the full path from the document root
            raise ScenarioError(sub.message, _path(prefix, sub))
        raise ScenarioError(err.message, _path(prefix, err))


def _kind_mismatch(err, instance):
    return list(err.absolute_path) == ["kind"] or (
        isinstance(instance, dict) and err.validator == "required" and "kind" not in instance
    )


@dataclass(frozen=True)
class InputState:
    a: complex
    b: complex
    basis: str = "computational"

    def vector(self, cyclic) -> np.ndarray:
        if self.basis == "cyclic":
            return cyclic.state(self.a, self.b)
        return np.array([self.a, self.b], dtype=complex)

    def to_dict(self):
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag], "basis": self.basis}


@dataclass(frozen=True)
class Scenario:
    id: str
    schedule_kind: str
    schedule_params: dict
    analyses: tuple
    states: tuple = ()
    integrator: dict = field(default_factory=dict)
    gauge: str = "traceless"
    noise: Optional[NoiseModel] = None

    @classmethod
    def from_dict(cls, data) -> "Scenario":
        _check(data, SCENARIO_SCHEMA)
        kind = data["schedule"]["kind"]
        params = data["schedule"]["params"]
        _check(params, SCHEDULE_PARAMS[kind], "$.schedule.params")
        states = []
        for k, s in enumerate(data.get("states", [])):
            a, b = complex(*s["a"]), complex(*s["b"])
            norm = math.hypot(abs(a), abs(b))
            if not (norm > 0 and math.isfinite(norm)):
                raise ScenarioError("state amplitudes must not all vanish", f"$.states[{k}]")
            if abs(norm - 1) > 1e-15:  # already normalized input is kept bit-exact
                a, b = a / norm, b / norm
            states.append(InputState(a, b, s.get("basis", "computational")))
        noise = None
        if "noise" in data:
            n = data["noise"]
            try:
                noise = NoiseModel(n["kind"], float(n["strength"]), int(n["samples"]), int(n["seed"]))
            except ValueError as exc:
                raise ScenarioError(str(exc), "$.noise") from None
        return cls(
            data["id"],
            kind,
            dict(params),
            tuple(data["analyses"]),
            tuple(states),
            dict(data.get("integrator", {})),
            data.get("gauge", "traceless"),
            noise,
        )

    def to_dict(self) -> dict:
        out = {
            "version": SCENARIO_VERSION,
            "id": self.id,
            "schedule": {"kind": self.schedule_kind, "params": self.schedule_params},
            "analyses": list(self.analyses),
            "states": [s.to_dict() for s in self.states],
            "integrator": self.integrator,
            "gauge": self.gauge,
        }
        if self.noise is not None:
            out["noise"] = self.noise.to_dict()
        return out

    def with_overrides(self, steps=None, tol=None, seed=None) -> "Scenario":
        """Command-line flags take precedence over the file."""
        integ = dict(self.integrator)
        if steps is not None:
            integ["steps_per_segment"] = int(steps)
        if tol is not None:
            integ["refine"] = True
            integ["refinement_tolerance"] = float(tol)
        noise = self.noise
        if seed is not None:
            if noise is None:
                raise ScenarioError("--seed given but the scenario has no noise block", "$.noise")
            noise = replace(noise, seed=int(seed))
        return replace(self, integrator=integ, noise=noise)

    def build_schedule(self) -> HamiltonianSchedule:
        p = self.schedule_params
        try:
            if self.schedule_kind == "explicit-segments":
                return HamiltonianSchedule(tuple(segment_from_dict(s) for s in p["segments"]))
            if self.schedule_kind == "orange-slice":
                return orange_slice_schedule(OrangeSliceParams(p["phi"], p.get("t1", 1.0), p.get("t2", 1.0)))
            if self.schedule_kind == "parameter-tuned":
                seed = RotatingFieldParams(
                    p.get("omega", 1.0), p.get("seed_omega1", 1.0), p.get("seed_omega0", 1.0), p.get("loops", 1)
                )
                sched, _ = parameter_tuned_schedule(p["target_omega"], p["n"], seed=seed)
                return sched
            return spin_echo_schedule(self.spin_echo_params())
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), "$.schedule.params") from None

    def spin_echo_params(self) -> SpinEchoParams:
        p = self.schedule_params
        return SpinEchoParams.with_ratio(
            p["theta"],
            p["ratio"],
            p.get("omega_larmor", 1.0),
            pulse_axis=tuple(p.get("pulse_axis", (0.0, 1.0, 0.0))),
            pulse_duration=p.get("pulse_duration"),
            zero_point=p.get("zero_point", 0.0),
        )

    def integrator_config(self) -> IntegratorConfig:
        i = self.integrator
        kw = {}
        if self.schedule_kind == "spin-echo":
            base = self.spin_echo_params().integrator(self.schedule_params.get("steps_per_larmor", 20))
            kw = {"steps_per_segment": base.steps_per_segment, "max_step": base.max_step}
        for key in ("steps_per_segment", "max_step", "refinement_tolerance", "max_refinements"):
            if key in i:
                kw[key] = i[key]
        return IntegratorConfig(**kw)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises ``OSError`` when the file cannot be read and :class:`ScenarioError`
    for malformed JSON or schema violations.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "$") from None
    return Scenario.from_dict(data)


@dataclass
class RunReport:
    scenario_id: str
    results: dict
    provenance: dict
    noise: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {"scenario_id": self.scenario_id, "results": self.results, "provenance": self.provenance}
        if self.noise is not None:
            out["noise"] = self.noise
        return out

    @classmethod
    def from_dict(cls, data) -> "RunReport":
        return cls(data["scenario_id"], data["results"], data["provenance"], data.get("noise"))

    def comparable(self) -> dict:
        """Report content with the timestamp removed."""
        d = json.loads(to_json(self))
        d["provenance"].pop("timestamp", None)
        return d


def _prepare(schedule, scenario):
    if scenario.gauge == "traceless":
        return make_traceless(schedule)
    return schedule


def _evolve(schedule, scenario, config):
    if scenario.integrator.get("refine", False):
        res = refine_until_converged(schedule, config)
        return res.propagation, {
            "converged": res.converged,
            "error_estimate": res.error_estimate,
            "refinements": res.refinements,
        }
    return evolve(schedule, config), None


def _analyze(scenario, prop, state_basis=None):
    """Requested analyses on one propagation.

    ``state_basis`` fixes the cyclic basis used to build input states; by
    default the basis of this propagation is used.
    """
    basis = cyclic_basis(prop.final)
    state_basis = basis if state_basis is None else state_basis
    out = {}
    for name in scenario.analyses:
        if name == "decompose":
            out[name] = [d.to_dict() for d in decompose(prop, basis)]
        elif name == "gamma-omega":
            out[name] = [check_gamma_omega(x, basis, prop).to_dict() for x in (0, 1)]
        elif name == "relative-phase":
            out[name] = relative_phase(prop.final, basis)
        elif name == "delta":
            enforce = scenario.gauge == "as-given"
            out[name] = [
                dynamical_phase_state(s.vector(state_basis), basis, prop, enforce_gauge=enforce).to_dict()
                for s in scenario.states
            ]
    return out


def _provenance(scenario, config):
    return {
        "seed": None if scenario.noise is None else scenario.noise.seed,
        "scenario": scenario.to_dict(),
        "integrator": {
            "steps_per_segment": config.steps_per_segment,
            "max_step": config.max_step,
            "refinement_tolerance": config.refinement_tolerance,
            "max_refinements": config.max_refinements,
        },
        "tool_version": __version__,
        "backend": kernels.BACKEND,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def run_scenario(scenario, schedule: HamiltonianSchedule | None = None) -> RunReport:
    """Build the schedule, evolve it and run every requested analysis.

    ``scenario`` may be a :class:`Scenario` or a path. Numerical failures
    propagate as :class:`~geophase.errors.NumericalError`.
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if "delta" in scenario.analyses and not scenario.states:
        raise ScenarioError("the delta analysis needs at least one input state", "$.states")
    config = scenario.integrator_config()
    schedule = _prepare(scenario.build_schedule() if schedule is None else schedule, scenario)
    prop, refinement = _evolve(schedule, scenario, config)
    results = _analyze(scenario, prop)
    if refinement is not None:
        results["refinement"] = refinement
    return RunReport(scenario.id, results, _provenance(scenario, config))


def _stats(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std()), "min": float(v.min()), "max": float(v.max())}


def _sample(scenario, base_schedule, base_basis, config, index):
    sched = _prepare(scenario.noise.perturb(base_schedule, index), scenario)
    prop = evolve(sched, config)
    basis = cyclic_basis(prop.final)
    rel = relative_phase(prop.final, basis)
    deltas = [
        dynamical_phase_state(
            s.vector(base_basis), basis, prop, enforce_gauge=scenario.gauge == "as-given"
        ).direct_unwrapped
        for s in scenario.states
    ]
    return {"sample": index, "relative_phase": rel, "delta": deltas}


def noise_sweep(scenario, workers: int = 1) -> RunReport:
    """Baseline run plus one re-run per noise sample.

    Samples are independent and may run on a thread pool; results are merged
    in sample order. Relative phases are unwrapped against the baseline so a
    value sitting on the branch cut does not inflate the spread. Dynamical
    phases are reported unwrapped as integrals.
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if scenario.noise is None:
        raise ScenarioError("a sweep needs a noise block", "$.noise")
    config = scenario.integrator_config()
    base_schedule = scenario.build_schedule()
    report = run_scenario(scenario, base_schedule)
    base_prop = evolve(_prepare(base_schedule, scenario), config)
    base_basis = cyclic_basis(base_prop.final)
    base_rel = relative_phase(base_prop.final, base_basis)

    def job(i):
        return _sample(scenario, base_schedule, base_basis, config, i)

    indices = range(scenario.noise.samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(job, indices))
    else:
        samples = [job(i) for i in indices]
    samples.sort(key=lambda s: s["sample"])
    for s in samples:
        s["relative_phase"] = base_rel + wrap_phase(s["relative_phase"] - base_rel)
    stats = {"relative_phase": _stats([s["relative_phase"] for s in samples])}
    for k in range(len(scenario.states)):
        stats[f"delta[{k}]"] = _stats([s["delta"][k] for s in samples])
    report.noise = {
        "model": scenario.noise.to_dict(),
        "baseline_relative_phase": base_rel,
        "samples": samples,
        "statistics": stats,
    }
    return report


def to_json(report: RunReport) -> str:
    # floats use the shortest repr that round-trips exactly
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=True) + "\n"


CSV_COLUMNS = (
    "scenario_id",
    "analysis",
    "label",
    "sample",
    "seed",
    "value_radians",
    "phi",
    "delta",
    "gamma",
    "omega",
)


def _g(x):
    return "" if x is None else format(float(x), ".17g")


def csv_rows(report: RunReport):
    seed = report.provenance.get("seed")
    sid = report.scenario_id

    def row(analysis, label, value, sample=None, phi=None, delta=None, gamma=None, omega=None):
        return [sid, analysis, str(label), "" if sample is None else str(sample), "" if seed is None else str(seed),
                _g(value), _g(phi), _g(delta), _g(gamma), _g(omega)]

    r = report.results
    for d in r.get("decompose", []):
        yield row("decompose", d["label"], d["geometric"], None, d["total"], d["dynamical"], d["geometric"],
                  d["solid_angle"])
    for g in r.get("gamma-omega", []):
        yield row("gamma-omega", g["label"], g["discrepancy"], gamma=g["geometric"], omega=g["solid_angle"])
    if "relative-phase" in r:
        yield row("relative-phase", "relative", r["relative-phase"])
    for k, d in enumerate(r.get("delta", [])):
        yield row("delta", f"state{k}", d["direct"], delta=d["direct_unwrapped"])
    if report.noise:
        for s in report.noise["samples"]:
            yield row("noise:relative-phase", "relative", s["relative_phase"], s["sample"])
        for s in report.noise["samples"]:
            for k, v in enumerate(s["delta"]):
                yield row("noise:delta", f"state{k}", v, s["sample"], delta=v)


def to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(csv_rows(report))
    return buf.getvalue()


def emit(report: RunReport, path, fmt: str | None = None) -> None:
    """Write ``report`` as JSON or CSV; the format defaults to the file suffix."""
    if fmt is None:
        fmt = "csv" if os.fspath(path).lower().endswith(".csv") else "json"
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    text = to_csv(report) if fmt == "csv" else to_json(report)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_report(path) -> RunReport:
    with open(path, encoding="utf-8") as fh:
        return RunReport.from_dict(json.load(fh))


__all__ = [
    "ANALYSES",
    "CSV_COLUMNS",
    "GaugeError",
    "InputState",
    "RunReport",
    "SCENARIO_SCHEMA",
    "Scenario",
    "emit",
    "load_report",
    "load_scenario",
    "noise_sweep",
    "run_scenario",
    "to_csv",
    "to_json",
]
