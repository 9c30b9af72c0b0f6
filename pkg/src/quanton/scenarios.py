"""Pre-wired interferometer experiments.

* ``bmzi``  -- biased Mach-Zehnder interferometer with tunable splitters.
* ``wdce``  -- Wheeler's delayed choice: the bmzi with the second splitter
  balanced (present) or fully transmissive (absent).
* ``pqe``   -- partial quantum eraser on path x polarization.
* ``unruh`` -- two chained balanced interferometers with an optional blocker
  in the first one.

Each run returns a :class:`StageTrace` with a report per stage, detector
statistics, and a dict of named identity checks the run must satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from . import elements as el
from .elements import INV_SQRT2, Pipeline, StageRecord
from .measures import (DEFAULT_GRID, MeasureReport, VisibilityUndefined,
                       gy_visibility_analytic_bmzi, phase_grid, report_for,
                       visibility_from_samples)
from .qstate import ModeSpace, PureState, phase_aligned_distance, state_to_json

GOLDEN_TOL = 1e-12
VISIBILITY_TOL = 1e-9

PATH = "path"
POL = "pol"


class ScenarioError(ValueError):
    """Invalid scenario name or parameters."""


PARAMETERS = {
    "bmzi": ("t1", "t2", "phi"),
    "wdce": ("t1", "bs2", "phi"),
    "pqe": ("qwp", "phi"),
    "unruh": ("block", "phi"),
}
SWEEPABLE = {"bmzi": ("t1", "t2", "phi"), "wdce": ("t1", "phi"), "pqe": ("phi",), "unruh": ()}
DEFAULTS = {
    "bmzi": {"t1": INV_SQRT2, "t2": INV_SQRT2, "phi": 0.0},
    "wdce": {"t1": INV_SQRT2, "bs2": "present", "phi": 0.0},
    "pqe": {"qwp": "out", "phi": 0.0},
    "unruh": {"block": "none", "phi": 0.0},
}
CHOICES = {"bs2": ("present", "absent"), "qwp": ("in", "out"), "block": ("none", "path1", "path2")}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    parameters: Mapping[str, object]

    @classmethod
    def build(cls, name: str, **params) -> "ScenarioConfig":
        if name not in PARAMETERS:
            raise ScenarioError(f"unknown scenario {name!r}; choose from {sorted(PARAMETERS)}")
        unknown = set(params) - set(PARAMETERS[name])
        if unknown:
            raise ScenarioError(f"unknown parameter(s) for {name}: {sorted(unknown)}")
        merged = dict(DEFAULTS[name])
        merged.update({k: v for k, v in params.items() if v is not None})
        for key, value in merged.items():
            if key in CHOICES:
                if value not in CHOICES[key]:
                    raise ScenarioError(f"{key} must be one of {CHOICES[key]}, got {value!r}")
            else:
                value = float(value)
                if not math.isfinite(value):
                    raise ScenarioError(f"{key} must be finite, got {value!r}")
                if key in ("t1", "t2") and not 0.0 <= value <= 1.0:
                    raise ScenarioError(f"T out of range [0,1]: {key}={value!r}")
                merged[key] = value
        if name == "unruh" and merged["phi"] != 0.0:
            raise ScenarioError("unruh has no phase shifter; phi is fixed at 0")
        return cls(name, {k: merged[k] for k in PARAMETERS[name]})


@dataclass(frozen=True)
class TraceStage:
    label: str
    state: PureState
    survival: float
    report: MeasureReport


@dataclass(frozen=True)
class StageTrace:
    scenario: str
    config: Mapping[str, object]
    stages: tuple[TraceStage, ...]
    detector_probabilities: Mapping[str, float]
    conditional_probabilities: Optional[Mapping[str, float]] = None
    visibility: Mapping[str, Optional[float]] = field(default_factory=dict)
    regions: Mapping[str, str] = field(default_factory=dict)
    checks: Mapping[str, bool] = field(default_factory=dict)

    @property
    def survival(self) -> float:
        return self.stages[-1].survival

    @property
    def final_state(self) -> PureState:
        return self.stages[-1].state

    def stage(self, label: str) -> TraceStage:
        for s in self.stages:
            if s.label == label:
                return s
        raise KeyError(label)

    def region(self, name: str) -> TraceStage:
        return self.stage(self.regions[name])

    @property
    def max_abs_residual(self) -> float:
        return max(abs(s.report.budget.raw_residual) for s in self.stages)


def detector_distribution(state: PureState) -> np.ndarray:
    """Born distribution over the levels of the first subsystem."""
    return state.marginal(state.space.labels[0])


def _detectors(probs, survival: float) -> tuple[dict, Optional[dict]]:
    unconditional = {f"D{k}": float(p) * survival for k, p in enumerate(probs)}
    conditional = {f"D{k}": float(p) for k, p in enumerate(probs)} if survival < 1.0 else None
    return unconditional, conditional


def _sweep_visibilities(build, grid: int = DEFAULT_GRID) -> dict[str, Optional[float]]:
    """Visibility per detector from re-running ``build(phi)`` over a phase grid."""
    samples = []
    for phi in phase_grid(grid):
        pipeline, initial = build(float(phi))
        samples.append(detector_distribution(el.run_pipeline(pipeline, initial)[-1].state))
    samples = np.array(samples)
    out = {}
    for k in range(samples.shape[1]):
        try:
            out[f"D{k}"] = float(visibility_from_samples(samples[:, k]))
        except VisibilityUndefined:
            out[f"D{k}"] = None
    return out


def trace_pipeline(name: str, config: Mapping[str, object], pipeline: Pipeline,
                   initial: PureState, **extra) -> StageTrace:
    """Run a pipeline and attach a report to every stage."""
    return _trace(name, config, el.run_pipeline(pipeline, initial), **extra)


def _trace(name, config, records: list[StageRecord], part: Optional[str] = None,
           gy_stage: Optional[str] = None, gy_visibility: Optional[float] = None,
           **extra) -> StageTrace:
    stages = []
    for rec in records:
        v = gy_visibility if rec.label == gy_stage else None
        stages.append(TraceStage(rec.label, rec.state, rec.survival,
                                 report_for(rec.state, part, gy_visibility=v)))
    final = records[-1]
    unconditional, conditional = _detectors(detector_distribution(final.state), final.survival)
    return StageTrace(name, dict(config), tuple(stages), unconditional, conditional, **extra)


# -- biased Mach-Zehnder -----------------------------------------------------

def bmzi_pipeline(t1: float, t2: float, phi: float) -> tuple[Pipeline, PureState]:
    space = ModeSpace.of((PATH, 2))
    stages = (
        el.bbs(PATH, t1, label="after_BBS1"),
        el.mirror(PATH, label="after_M"),
        el.phase_shifter(PATH, phi, label="after_M_PS"),
        el.bbs(PATH, t2, label="after_BBS2"),
    )
    return Pipeline(space, stages), PureState.basis(space, path=0)


def bmzi_closed_form(t1: float, t2: float, phi: float) -> dict:
    """Closed-form states and detector probabilities of the biased interferometer."""
    r1, r2 = el.reflectance(t1), el.reflectance(t2)
    e = np.exp(1j * phi)
    psi1 = np.array([t1, 1j * r1])
    psi2 = np.array([-r1, 1j * e * t1])
    psi3 = np.array([-(e * t1 * r2 + r1 * t2), 1j * (e * t1 * t2 - r1 * r2)])
    c = 2 * t1 * r1 * t2 * r2 * math.cos(phi)
    p0 = t1 ** 2 * r2 ** 2 + r1 ** 2 * t2 ** 2 + c
    p1 = t1 ** 2 * t2 ** 2 + r1 ** 2 * r2 ** 2 - c
    return {"psi1": psi1, "psi2": psi2, "psi3": psi3, "D0": p0, "D1": p1,
            "coherence": 2 * t1 * r1, "predictability": 1 - 2 * t1 * r1}


def _phase_close(state: PureState, amplitudes, tol: float = GOLDEN_TOL) -> bool:
    ref = PureState(state.space, np.asarray(amplitudes, dtype=np.complex128))
    return phase_aligned_distance(state, ref) <= tol


def _bmzi_trace(name: str, config: dict, t1: float, t2: float, phi: float) -> StageTrace:
    pipeline, initial = bmzi_pipeline(t1, t2, phi)
    records = el.run_pipeline(pipeline, initial)
    vis = _sweep_visibilities(lambda p: bmzi_pipeline(t1, t2, p))
    trace = _trace(name, config, records, gy_stage="after_M_PS", gy_visibility=vis["D0"],
                   visibility=vis, regions={"interior": "after_M_PS"})
    ref = bmzi_closed_form(t1, t2, phi)
    interior = trace.region("interior").report.budget
    checks = {
        "psi1_closed_form": _phase_close(trace.stage("after_BBS1").state, ref["psi1"]),
        "psi2_closed_form": _phase_close(trace.stage("after_M_PS").state, ref["psi2"]),
        "psi3_closed_form": _phase_close(trace.final_state, ref["psi3"]),
        "detector_probabilities_closed_form": (
            abs(trace.detector_probabilities["D0"] - ref["D0"]) <= GOLDEN_TOL
            and abs(trace.detector_probabilities["D1"] - ref["D1"]) <= GOLDEN_TOL),
        "probabilities_sum_to_one": abs(sum(trace.detector_probabilities.values()) - 1) <= GOLDEN_TOL,
        "interior_coherence": abs(interior.coherence - ref["coherence"]) <= GOLDEN_TOL,
        "interior_predictability": abs(interior.predictability - ref["predictability"]) <= GOLDEN_TOL,
    }
    for k in (0, 1):
        try:
            analytic = gy_visibility_analytic_bmzi(t1, t2, k)
        except VisibilityUndefined:
            analytic = None
        sweep = vis[f"D{k}"]
        checks[f"visibility_D{k}_analytic"] = (
            (analytic is None and sweep is None)
            or (analytic is not None and sweep is not None and abs(sweep - analytic) <= VISIBILITY_TOL))
    return replace(trace, checks=checks)


def run_bmzi(t1: float, t2: float, phi: float = 0.0) -> StageTrace:
    cfg = ScenarioConfig.build("bmzi", t1=t1, t2=t2, phi=phi).parameters
    return _bmzi_trace("bmzi", cfg, cfg["t1"], cfg["t2"], cfg["phi"])


def run_wdce(t1: float, bs2: str = "present", phi: float = 0.0) -> StageTrace:
    """Delayed choice: the second splitter is balanced (present) or has T2 = 1 (absent)."""
    cfg = ScenarioConfig.build("wdce", t1=t1, bs2=bs2, phi=phi).parameters
    t2 = INV_SQRT2 if cfg["bs2"] == "present" else 1.0
    trace = _bmzi_trace("wdce", cfg, cfg["t1"], t2, cfg["phi"])
    checks = dict(trace.checks)
    interior_c = trace.region("interior").report.budget.coherence
    if cfg["bs2"] == "absent":
        # An undefined visibility (no light at that detector) also shows no fringe.
        checks["visibility_null"] = all(v is None or abs(v) <= GOLDEN_TOL for v in trace.visibility.values())
    else:
        checks["visibility_equals_coherence"] = all(
            v is not None and abs(v - interior_c) <= VISIBILITY_TOL for v in trace.visibility.values())
    return replace(trace, checks=checks)


# -- partial quantum eraser --------------------------------------------------

def pqe_pipeline(qwp: str, phi: float) -> tuple[Pipeline, PureState]:
    space = ModeSpace.of((PATH, 2), (POL, 2))
    stages = [
        el.bs(PATH, label="after_BS1"),
        el.hwp(POL, arm=(PATH, 1), label="after_HWP"),
        el.mirror(PATH, label="after_M"),
        el.phase_shifter(PATH, phi, label="after_M_PS"),
        el.bs(PATH, label="after_BS2"),
    ]
    if qwp == "in":
        stages.append(el.qwp(POL, arm=(PATH, 0), label="after_QWP"))
    stages.append(el.pbs(PATH, POL, label="after_PBS"))
    return Pipeline(space, tuple(stages)), PureState.basis(space, path=0, pol=0)


def pqe_closed_form(qwp: str, phi: float) -> dict:
    """Reference kets (path x pol, then detector x pol) and detector laws."""
    e = np.exp(1j * phi)
    s = INV_SQRT2
    psi1 = s * np.array([1, 0, 1j, 0])
    psi2 = s * np.array([1, 0, 0, 1j])
    # -1/2 [ |0>(e|H> + |V>) - i|1>(e|H> - |V>) ]
    psi3 = -0.5 * np.array([e, 1, -1j * e, 1j])
    out = np.zeros((4, 2), dtype=np.complex128)
    if qwp == "out":
        out[0, 0] = -0.5 * e
        out[2, 1] = -0.5j
        out[1, 0] = 0.5j * e
        out[3, 1] = 0.5
        probs = [0.25, 0.25, 0.25, 0.25]
    else:
        k = -1 / (2 * math.sqrt(2))
        out[0, 0] = k * (e + 1)
        out[2, 1] = -k * (e - 1)
        out[1, 0] = k * (-1j * math.sqrt(2) * e)
        out[3, 1] = k * (-math.sqrt(2))
        probs = [(1 + math.cos(phi)) / 4, 0.25, (1 - math.cos(phi)) / 4, 0.25]
    return {"psi1": psi1, "psi2": psi2, "psi3": psi3, "psi4": out.reshape(-1), "detectors": probs}


def run_pqe(qwp: str = "out", phi: float = 0.0) -> StageTrace:
    cfg = ScenarioConfig.build("pqe", qwp=qwp, phi=phi).parameters
    qwp, phi = cfg["qwp"], cfg["phi"]
    pipeline, initial = pqe_pipeline(qwp, phi)
    records = el.run_pipeline(pipeline, initial)
    vis = _sweep_visibilities(lambda p: pqe_pipeline(qwp, p))
    trace = _trace("pqe", cfg, records, visibility=vis)
    ref = pqe_closed_form(qwp, phi)

    def budget_is(label, c, p, e):
        b = trace.stage(label).report.budget
        return all(abs(x - y) <= GOLDEN_TOL for x, y in
                   ((b.coherence, c), (b.predictability, p), (b.entanglement, e)))

    checks = {
        "psi1_state": _phase_close(trace.stage("after_BS1").state, ref["psi1"]),
        "psi2_state": _phase_close(trace.stage("after_HWP").state, ref["psi2"]),
        "psi3_state": _phase_close(trace.stage("after_BS2").state, ref["psi3"]),
        "psi4_state": _phase_close(trace.final_state, ref["psi4"]),
        "psi1_budget": budget_is("after_BS1", 1.0, 0.0, 0.0),
        "psi2_budget": budget_is("after_HWP", 0.0, 0.0, 1.0),
        "detector_law": all(abs(trace.detector_probabilities[f"D{k}"] - p) <= GOLDEN_TOL
                            for k, p in enumerate(ref["detectors"])),
    }
    return replace(trace, checks=checks)


# -- Unruh's two-interferometer chain ----------------------------------------

# Path 1 of the first interferometer carries |0>, path 2 carries |1>.
_BLOCKED = {"path1": 0, "path2": 1}


def unruh_pipeline(block: str = "none") -> tuple[Pipeline, PureState]:
    space = ModeSpace.of((PATH, 2))
    stages = [el.bs(PATH, label="after_BS1")]
    if block != "none":
        stages.append(el.blocker(PATH, _BLOCKED[block], label="after_block"))
    stages += [
        el.mirror(PATH, label="after_M1"),
        el.bs(PATH, label="after_BS2"),
        el.mirror(PATH, label="after_M2"),
        el.bs(PATH, label="after_BS3"),
    ]
    return Pipeline(space, tuple(stages)), PureState.basis(space, path=0)


def run_unruh(block: str = "none", phi: float = 0.0) -> StageTrace:
    cfg = ScenarioConfig.build("unruh", block=block, phi=phi).parameters
    block = cfg["block"]
    pipeline, initial = unruh_pipeline(block)
    records = el.run_pipeline(pipeline, initial)
    trace = _trace("unruh", cfg, records, regions={"MZI1": "after_M1", "MZI2": "after_BS2"})
    s = INV_SQRT2
    mzi1 = trace.region("MZI1").report.budget
    mzi2 = trace.region("MZI2").report.budget

    def cp(b, c, p):
        return abs(b.coherence - c) <= GOLDEN_TOL and abs(b.predictability - p) <= GOLDEN_TOL

    checks = {"psi1_state": _phase_close(trace.stage("after_BS1").state, [s, 1j * s])}
    if block == "none":
        checks.update({
            "psi2_state": _phase_close(trace.stage("after_BS2").state, [-1, 0]),
            "psi3_state": _phase_close(trace.final_state, [s, -1j * s]),
            "survival": trace.survival == 1.0,
            "detectors_balanced": all(abs(p - 0.5) <= GOLDEN_TOL
                                      for p in trace.detector_probabilities.values()),
            "region_budgets": cp(mzi1, 1.0, 0.0) and cp(mzi2, 0.0, 1.0),
        })
    else:
        blocked_ket = [1, 0] if block == "path2" else [0, 1j]
        final_ket = [0, -1j] if block == "path2" else [1, 0]
        fired = "D1" if block == "path2" else "D0"
        checks.update({
            "blocked_state": _phase_close(trace.stage("after_block").state, blocked_ket),
            "psi3_state": _phase_close(trace.final_state, final_ket),
            "survival": abs(trace.survival - 0.5) <= GOLDEN_TOL,
            "conditional_detector": abs(trace.conditional_probabilities[fired] - 1.0) <= GOLDEN_TOL,
            "region_budgets": cp(mzi1, 0.0, 1.0) and cp(mzi2, 1.0, 0.0),
        })
    return replace(trace, checks=checks)


RUNNERS = {"bmzi": run_bmzi, "wdce": run_wdce, "pqe": run_pqe, "unruh": run_unruh}


def run_scenario(name: str, **params) -> StageTrace:
    config = ScenarioConfig.build(name, **params)
    return RUNNERS[name](**config.parameters)


def trace_to_dict(trace: StageTrace) -> dict:
    return {
        "scenario": trace.scenario,
        "config": dict(trace.config),
        "stages": [{"label": s.label, "state": state_to_json(s.state), "survival": s.survival,
                    "report": s.report.to_dict()} for s in trace.stages],
        "detectors": dict(trace.detector_probabilities),
        "conditional_detectors": (dict(trace.conditional_probabilities)
                                  if trace.conditional_probabilities is not None else None),
        "visibility": dict(trace.visibility),
        "regions": dict(trace.regions),
        "checks": dict(trace.checks),
    }
