"""Declarative experiment scenarios: parsing, validation and execution.

A scenario is a JSON document::

    {
      "name": "logistic-counterexample",
      "seed": 1,
      "initial_state": {"mixture": [{"weight": 0.5, "state": "z+"},
                                    {"weight": 0.5, "state": "I/2"}]},
      "rule": {"type": "logistic", "lambda": 4},
      "stages": ["computational", "computational"],
      "analyses": ["marginal", "linearity"],
      "options": {"linearity": {"trials": 200, "outcome": "z+"}},
      "sweep": {"parameter": "w", "start": 0, "stop": 1, "step": 0.05}
    }

State specs are a name (``z+``, ``z-``, ``x+``, ``x-``, ``y+``, ``y-``,
``I/2``), ``{"bloch": [x, y, z]}``, ``{"mixture": [...]}`` or
``{"matrix": rows}`` where complex entries are written ``[re, im]``.
POVM specs are a name (``computational``, ``x``, ``y``, ``trivial``) or
``{"labels": [...], "effects": [matrix, ...]}``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from measurelab import analysis
from measurelab.errors import MeasureLabError
from measurelab.measurement import Povm, named_povm
from measurelab.sequential import TwoStageExperiment, joint_distribution
from measurelab.statekit import (
    DensityMatrix,
    EnsembleDecomposition,
    bloch_to_density,
    density_to_bloch,
    mix,
    named_state,
    pauli_coefficients,
)
from measurelab.tables import ResultTable
from measurelab.temporal import (
    Channel,
    build_pdm,
    depolarizing_channel,
    identity_channel,
    negativity,
    unitary_channel,
)
from measurelab.update_rules import (
    LogisticBlochRule,
    LudersRule,
    ProbabilityDependentRule,
    UpdateRule,
)

ANALYSES = ("joint", "marginal", "linearity", "effect_fit", "heralded_fit", "discrimination", "pdm")
EXPERIMENT_ANALYSES = set(ANALYSES) - {"pdm"}
SWEEP_PARAMETERS = ("w", "lambda")
DEFAULT_TOL = 1e-10
DEFAULT_TRIALS = 200


class ScenarioError(MeasureLabError):
    """A scenario file failed to parse or validate; ``where`` names the field or line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class Sweep:
    parameter: str
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        """Grid from ``start`` to ``stop`` that always contains both endpoints."""
        span = self.stop - self.start
        n = span / self.step
        k = int(round(n))
        if abs(n - k) < 1e-9:
            return np.linspace(self.start, self.stop, k + 1)
        grid = self.start + self.step * np.arange(int(np.floor(n)) + 1)
        return np.append(grid, self.stop)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    analyses: tuple[str, ...]
    state_spec: Any
    rule_spec: Optional[dict] = None
    stage_specs: tuple = ()
    options: dict = field(default_factory=dict)
    sweep: Optional[Sweep] = None

    # resolved objects, derived from the specs above
    @property
    def initial_state(self) -> DensityMatrix:
        return parse_state(self.state_spec, "initial_state")

    @property
    def rule(self) -> UpdateRule:
        return parse_rule(self.rule_spec, "rule")

    def experiment(self) -> TwoStageExperiment:
        first = parse_povm(self.stage_specs[0], "stages[0]")
        second = parse_povm(self.stage_specs[1], "stages[1]")
        rule = self.rule
        try:
            return TwoStageExperiment(first, second, rule)
        except MeasureLabError as exc:
            raise ScenarioError("stages", str(exc)) from None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _matrix(spec: Any, where: str) -> np.ndarray:
    if not isinstance(spec, list) or not spec or not all(isinstance(r, list) for r in spec):
        raise ScenarioError(where, "matrix must be a non-empty list of rows")
    rows = []
    for r, row in enumerate(spec):
        out = []
        for c, entry in enumerate(row):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                out.append(complex(entry))
            elif (
                isinstance(entry, list)
                and len(entry) == 2
                and all(isinstance(v, (int, float)) for v in entry)
            ):
                out.append(complex(entry[0], entry[1]))
            else:
                raise ScenarioError(f"{where}[{r}][{c}]", "entry must be a number or [re, im]")
        rows.append(out)
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ScenarioError(where, "matrix must be square")
    return np.array(rows, dtype=complex)


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(where, f"expected a number, got {value!r}")
    return float(value)


def parse_ensemble(spec: Any, where: str) -> EnsembleDecomposition:
    if not isinstance(spec, list) or not spec:
        raise ScenarioError(where, "mixture must be a non-empty list")
    members = []
    for k, m in enumerate(spec):
        if not isinstance(m, dict) or "weight" not in m or "state" not in m:
            raise ScenarioError(f"{where}[{k}]", "member needs 'weight' and 'state'")
        members.append(
            (_number(m["weight"], f"{where}[{k}].weight"), parse_state(m["state"], f"{where}[{k}].state"))
        )
    try:
        return EnsembleDecomposition(tuple(members))
    except MeasureLabError as exc:
        raise ScenarioError(where, str(exc)) from None


def parse_state(spec: Any, where: str) -> DensityMatrix:
    try:
        if isinstance(spec, str):
            return named_state(spec)
        if isinstance(spec, dict) and len(spec) == 1:
            (kind, body), = spec.items()
            if kind == "named":
                return named_state(body)
            if kind == "bloch":
                if not isinstance(body, list) or len(body) != 3:
                    raise ScenarioError(f"{where}.bloch", "expected [x, y, z]")
                return bloch_to_density([_number(v, f"{where}.bloch") for v in body])
            if kind == "mixture":
                return mix(parse_ensemble(body, f"{where}.mixture"))
            if kind == "matrix":
                return DensityMatrix(_matrix(body, f"{where}.matrix"))
        raise ScenarioError(where, "state must be a name or one of {bloch, mixture, matrix, named}")
    except ScenarioError:
        raise
    except MeasureLabError as exc:
        raise ScenarioError(where, str(exc)) from None


def parse_rule(spec: Any, where: str) -> UpdateRule:
    if spec is None:
        raise ScenarioError(where, "missing update rule")
    if not isinstance(spec, dict) or "type" not in spec:
        raise ScenarioError(where, "rule must be an object with a 'type'")
    kind = spec["type"]
    try:
        if kind in ("lueders", "luders", "kraus"):
            kraus = spec.get("kraus")
            if kraus is None:
                return LudersRule()
            fams = tuple(
                tuple(_matrix(k, f"{where}.kraus[{a}][{b}]") for b, k in enumerate(fam))
                for a, fam in enumerate(kraus)
            )
            return LudersRule(fams)
        if kind == "logistic":
            if "lambda" not in spec:
                raise ScenarioError(f"{where}.lambda", "logistic rule needs 'lambda'")
            return LogisticBlochRule(_number(spec["lambda"], f"{where}.lambda"))
        if kind == "probability_dependent":
            return ProbabilityDependentRule()
    except ScenarioError:
        raise
    except MeasureLabError as exc:
        raise ScenarioError(where, str(exc)) from None
    raise ScenarioError(f"{where}.type", f"unknown rule type {kind!r}")


def parse_povm(spec: Any, where: str) -> Povm:
    try:
        if isinstance(spec, str):
            return named_povm(spec)
        if isinstance(spec, dict) and "effects" in spec:
            effects = [_matrix(m, f"{where}.effects[{k}]") for k, m in enumerate(spec["effects"])]
            labels = spec.get("labels", [str(k) for k in range(len(effects))])
            return Povm.from_operators(effects, labels)
    except ScenarioError:
        raise
    except MeasureLabError as exc:
        raise ScenarioError(where, str(exc)) from None
    raise ScenarioError(where, "POVM must be a name or {labels, effects}")


def parse_channel(spec: Any, where: str) -> Channel:
    try:
        if spec == "identity":
            return identity_channel()
        if spec in ("depolarizing", "fully_depolarizing"):
            return depolarizing_channel(1.0)
        if isinstance(spec, dict) and len(spec) == 1:
            (kind, body), = spec.items()
            if kind == "depolarizing":
                return depolarizing_channel(_number(body, f"{where}.depolarizing"))
            if kind == "unitary":
                return unitary_channel(_matrix(body, f"{where}.unitary"))
            if kind == "kraus":
                return Channel(tuple(_matrix(k, f"{where}.kraus[{i}]") for i, k in enumerate(body)))
    except ScenarioError:
        raise
    except MeasureLabError as exc:
        raise ScenarioError(where, str(exc)) from None
    raise ScenarioError(where, "channel must be 'identity', 'depolarizing' or {depolarizing|unitary|kraus}")


def parse_sweep(spec: Any) -> Sweep:
    if not isinstance(spec, dict):
        raise ScenarioError("sweep", "must be an object")
    for key in ("parameter", "start", "stop", "step"):
        if key not in spec:
            raise ScenarioError(f"sweep.{key}", "missing")
    if spec["parameter"] not in SWEEP_PARAMETERS:
        raise ScenarioError("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}")
    s = Sweep(
        spec["parameter"],
        _number(spec["start"], "sweep.start"),
        _number(spec["stop"], "sweep.stop"),
        _number(spec["step"], "sweep.step"),
    )
    if s.step <= 0:
        raise ScenarioError("sweep.step", "must be positive")
    if s.stop < s.start:
        raise ScenarioError("sweep", "empty range (stop < start)")
    lo, hi = (0.0, 1.0) if s.parameter == "w" else (0.0, 4.0)
    if s.start < lo or s.stop > hi:
        raise ScenarioError("sweep", f"{s.parameter} must stay within [{lo}, {hi}]")
    return s


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    known = {"name", "seed", "initial_state", "rule", "stages", "analyses", "options", "sweep", "description"}
    extra = sorted(set(doc) - known)
    if extra:
        raise ScenarioError(extra[0], "unknown field")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "missing or not a string")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError("seed", "must be an integer")
    analyses = doc.get("analyses")
    if not isinstance(analyses, list) or not analyses:
        raise ScenarioError("analyses", "must be a non-empty list")
    for a in analyses:
        if a not in ANALYSES:
            raise ScenarioError("analyses", f"unknown analysis {a!r}; known: {list(ANALYSES)}")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ScenarioError("options", "must be an object")
    if "initial_state" not in doc:
        raise ScenarioError("initial_state", "missing")
    stages = doc.get("stages", [])
    needs_experiment = bool(EXPERIMENT_ANALYSES & set(analyses)) or "sweep" in doc
    if needs_experiment and (not isinstance(stages, list) or len(stages) != 2):
        raise ScenarioError("stages", "exactly two stages are required")
    scen = Scenario(
        name=name,
        seed=seed,
        analyses=tuple(analyses),
        state_spec=doc["initial_state"],
        rule_spec=doc.get("rule"),
        stage_specs=tuple(stages),
        options=options,
        sweep=parse_sweep(doc["sweep"]) if "sweep" in doc else None,
    )
    # resolve everything once so validation errors surface before any output
    scen.initial_state
    if needs_experiment:
        scen.experiment()
        if scen.sweep is not None:
            _check_sweepable(scen)
    if "pdm" in analyses:
        parse_channel(options.get("pdm", {}).get("channel", "identity"), "options.pdm.channel")
    return scen


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("measurelab") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_path(path: str | os.PathLike) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if str(path) in bundled:
        return bundled[str(path)]
    raise FileNotFoundError(f"no scenario file {str(path)!r} (bundled: {sorted(bundled)})")


def load_scenario(path: str | os.PathLike) -> Scenario:
    text = resolve_path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _describe_ensemble(e: Optional[EnsembleDecomposition]) -> str:
    if e is None:
        return ""
    parts = []
    for p, s in e.members:
        if s.dim == 2:
            v = density_to_bloch(s)
            parts.append(f"{p:.6g}@({v.x:.6g},{v.y:.6g},{v.z:.6g})")
        else:
            parts.append(f"{p:.6g}@dim{s.dim}")
    return " ".join(parts)


def _target_opf(scen: Scenario, x: TwoStageExperiment, key: str) -> analysis.Opf:
    """Second-stage marginal of ``outcome``, or the joint ``P(first, outcome)`` if ``first`` is set."""
    opts = scen.options.get(key, {})
    outcome = opts.get("outcome", x.second.labels[0])
    if outcome not in x.second.labels:
        raise ScenarioError(f"options.{key}.outcome", f"unknown second-stage outcome {outcome!r}")
    if "first" not in opts:
        return analysis.second_stage_opf(x, outcome)
    if opts["first"] not in x.first.labels:
        raise ScenarioError(f"options.{key}.first", f"unknown first-stage outcome {opts['first']!r}")
    return analysis.joint_opf(x, opts["first"], outcome)


def table_joint(scen: Scenario) -> ResultTable:
    x, rho = scen.experiment(), scen.initial_state
    t = ResultTable("joint", ["first", "second", "probability"])
    for (i, j), p in joint_distribution(x, rho).as_dict().items():
        t.add_row(i, j, p)
    return t


def table_marginal(scen: Scenario) -> ResultTable:
    x, rho = scen.experiment(), scen.initial_state
    dist = joint_distribution(x, rho).second_marginal()
    t = ResultTable("marginal", ["outcome", "probability"])
    for lab, p in zip(dist.labels, dist.probabilities):
        t.add_row(lab, p)
    return t


def table_linearity(scen: Scenario, tol: float) -> ResultTable:
    x = scen.experiment()
    opf = _target_opf(scen, x, "linearity")
    trials = int(scen.options.get("linearity", {}).get("trials", DEFAULT_TRIALS))
    rep = analysis.convex_linearity_check(opf, trials, scen.seed, tol)
    t = ResultTable(
        "linearity",
        ["opf", "passed", "canonical_gap", "worst_gap", "tol", "trials", "seed", "witness"],
    )
    t.add_row(
        opf.label, rep.passed, rep.canonical_gap, rep.worst_gap, tol, trials, scen.seed,
        _describe_ensemble(rep.witness),
    )
    return t


def table_effect_fit(scen: Scenario) -> ResultTable:
    x = scen.experiment()
    opf = _target_opf(scen, x, "effect_fit")
    e, residual = analysis.fit_effect_from_opf(opf)
    c = pauli_coefficients(e.operator)
    t = ResultTable("effect_fit", ["opf", "residual", "valid_effect", "c_I", "c_x", "c_y", "c_z"])
    t.add_row(opf.label, residual, e.is_valid(), *c)
    return t


def table_heralded_fit(scen: Scenario) -> ResultTable:
    fit = analysis.fit_heralded_povm(scen.experiment())
    t = ResultTable(
        "heralded_fit",
        ["first", "second", "c_I", "c_x", "c_y", "c_z", "fit_residual", "completeness_defect"],
    )
    for (i, j), h in fit.effects.items():
        t.add_row(i, j, *pauli_coefficients(h), fit.fit_residual, fit.completeness_defect)
    return t


def table_discrimination(scen: Scenario) -> ResultTable:
    opts = scen.options.get("discrimination", {})
    if "a" in opts:
        a = parse_ensemble(opts["a"], "options.discrimination.a")
    else:
        a = EnsembleDecomposition(((1.0, scen.initial_state),))
    if "b" in opts:
        b = parse_ensemble(opts["b"], "options.discrimination.b")
    elif isinstance(scen.state_spec, dict) and "mixture" in scen.state_spec:
        b = parse_ensemble(scen.state_spec["mixture"], "initial_state.mixture")
    else:
        raise ScenarioError("options.discrimination", "give ensembles 'a' and 'b' or a mixture initial state")
    try:
        gap = analysis.ensemble_discrimination_gap(a, b, scen.experiment())
    except MeasureLabError as exc:
        raise ScenarioError("options.discrimination", str(exc)) from None
    t = ResultTable("discrimination", ["ensemble_a", "ensemble_b", "tv_gap"])
    t.add_row(_describe_ensemble(a), _describe_ensemble(b), gap)
    return t


def table_pdm(scen: Scenario) -> ResultTable:
    ch = parse_channel(scen.options.get("pdm", {}).get("channel", "identity"), "options.pdm.channel")
    try:
        pdm = build_pdm(scen.initial_state, ch)
    except MeasureLabError as exc:
        raise ScenarioError("initial_state", str(exc)) from None
    t = ResultTable("pdm", ["quantity", "value"])
    t.add_row("trace", float(np.trace(pdm.matrix).real))
    t.add_row("min_eigenvalue", pdm.min_eigenvalue)
    t.add_row("negativity", negativity(pdm))
    for k, ev in enumerate(pdm.eigenvalues):
        t.add_row(f"eigenvalue_{k}", float(ev))
    return t


def run_analyses(scen: Scenario, tol: float = DEFAULT_TOL) -> list[ResultTable]:
    """Evaluate every requested analysis at the scenario's fixed point (no sweep)."""
    builders = {
        "joint": table_joint,
        "marginal": table_marginal,
        "linearity": lambda s: table_linearity(s, tol),
        "effect_fit": table_effect_fit,
        "heralded_fit": table_heralded_fit,
        "discrimination": table_discrimination,
        "pdm": table_pdm,
    }
    return [builders[a](scen) for a in scen.analyses]


def _check_sweepable(scen: Scenario) -> None:
    if scen.sweep.parameter == "w":
        spec = scen.state_spec
        if not (isinstance(spec, dict) and "mixture" in spec and len(spec["mixture"]) == 2):
            raise ScenarioError("sweep.parameter", "sweeping 'w' needs a two-member mixture initial state")
    elif not isinstance(scen.rule, LogisticBlochRule):
        raise ScenarioError("sweep.parameter", "sweeping 'lambda' needs a logistic rule")


def at_parameter(scen: Scenario, value: float) -> Scenario:
    """The scenario with its sweep parameter fixed to ``value``."""
    if scen.sweep.parameter == "w":
        first, second = scen.state_spec["mixture"]
        members = [dict(first, weight=value), dict(second, weight=1.0 - value)]
        return replace(scen, state_spec={"mixture": members}, sweep=None)
    return replace(scen, rule_spec=dict(scen.rule_spec, **{"lambda": value}), sweep=None)


def linear_fit_residuals(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Absolute residuals of the least-squares line through ``(xs, ys)``."""
    design = np.column_stack([np.ones_like(xs), xs])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return np.abs(ys - design @ coef)


def run_sweep(scen: Scenario) -> ResultTable:
    """Second-stage marginals (and joints, if requested) across the sweep grid.

    One ``fit_residual_<label>`` column per marginal holds each point's
    distance from the least-squares line over the whole sweep.
    """
    if scen.sweep is None:
        raise ScenarioError("sweep", "scenario has no sweep section")
    xs = scen.sweep.values()
    x0 = scen.experiment()
    pairs = x0.outcome_pairs()
    with_joint = "joint" in scen.analyses
    marginals, joints = [], []
    for v in xs:
        point = at_parameter(scen, float(v))
        jd = joint_distribution(point.experiment(), point.initial_state)
        marginals.append(jd.table.sum(axis=0))
        joints.append(jd.as_vector())
    marginals = np.array(marginals)
    residuals = np.column_stack(
        [linear_fit_residuals(xs, marginals[:, b]) for b in range(marginals.shape[1])]
    )
    labels = x0.second.labels
    columns = [scen.sweep.parameter] + [f"marginal_{lab}" for lab in labels]
    if with_joint:
        columns += [f"joint_{i}_{j}" for i, j in pairs]
    columns += [f"fit_residual_{lab}" for lab in labels]
    t = ResultTable("sweep", columns)
    for k, v in enumerate(xs):
        row = [float(v), *marginals[k]]
        if with_joint:
            row += list(joints[k])
        row += list(residuals[k])
        t.add_row(*row)
    return t
