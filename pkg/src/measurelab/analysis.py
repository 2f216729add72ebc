"""Executable linearity diagnostics for outcome probability functions.

An outcome probability function (OPF) maps density matrices to [0, 1]. In
standard quantum theory every OPF is ``rho -> tr(rho E)`` for some effect
``E``, which is the case exactly when it is convex-linear. The helpers here
probe that property from the outside:

* :func:`convex_linearity_check` compares ``f(mix)`` with the weighted
  average of ``f`` on random ensembles (plus a fixed canonical ensemble);
* :func:`fit_effect_from_opf` reconstructs the only candidate effect from
  four tomographic states and measures how badly it predicts held-out states;
* :func:`fit_heralded_povm` does the same for every outcome pair of a
  two-stage experiment, testing whether one single-shot POVM reproduces it;
* :func:`ensemble_discrimination_gap` evaluates a two-stage experiment
  member-by-member on two decompositions of one mixed state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from measurelab.errors import InvalidComparisonError, InvalidInputError
from measurelab.measurement import Effect, born_probability, expectation, is_effect
from measurelab.sequential import TwoStageExperiment, joint_table
from measurelab.statekit import (
    IDENTITY,
    PAULIS,
    DensityMatrix,
    EnsembleDecomposition,
    bloch_to_density,
    check_qubit,
    maximally_mixed,
    mix,
    random_ensemble,
    random_mixed_state,
    random_pure_state,
)

TOL_EQUAL_MIX = 1e-9
HELDOUT_SEED = 20_221_206
HELDOUT_SIZE = 100


@dataclass(frozen=True)
class Opf:
    """An outcome probability function: a pure callable ``DensityMatrix -> [0, 1]``."""

    func: Callable[[DensityMatrix], float]
    label: str = "opf"
    dim: int = 2

    def __call__(self, rho: DensityMatrix) -> float:
        return float(self.func(rho))


@dataclass(frozen=True)
class LinearityReport:
    passed: bool
    worst_gap: float
    witness: Optional[EnsembleDecomposition]
    tol: float
    trials: int
    canonical_gap: Optional[float] = None


@dataclass(frozen=True)
class HeraldedPovmFit:
    """Candidate single-shot effects for each (first, second) outcome pair.

    ``effects`` is keyed by ``(first_label, second_label)``. Operators are
    returned whether or not they are valid effects.
    """

    effects: dict[tuple[str, str], np.ndarray] = field(repr=False)
    fit_residual: float
    completeness_defect: float

    def __getitem__(self, pair: tuple[str, str]) -> np.ndarray:
        return self.effects[pair]

    def all_valid(self, tol: float = 1e-9) -> bool:
        return all(is_effect(h, tol_herm=tol, tol_spec=tol) for h in self.effects.values())


# ---------------------------------------------------------------------------
# OPF constructors
# ---------------------------------------------------------------------------


def born_opf(q: Effect | np.ndarray, label: str = "born") -> Opf:
    e = q if isinstance(q, Effect) else Effect(q)
    return Opf(lambda rho: born_probability(e, rho), label, e.dim)


def constant_opf(value: float, dim: int = 2) -> Opf:
    if not 0.0 <= value <= 1.0:
        raise InvalidInputError("a constant OPF must lie in [0, 1]")
    return Opf(lambda rho: value, f"constant {value}", dim)


def purity_opf(dim: int = 2) -> Opf:
    return Opf(lambda rho: rho.purity(), "purity", dim)


def joint_opf(x: TwoStageExperiment, first_label: str, second_label: str) -> Opf:
    a = x.first.labels.index(first_label)
    b = x.second.labels.index(second_label)
    return Opf(lambda rho: joint_table(x, rho)[a, b], f"P({first_label},{second_label})", x.dim)


def second_stage_opf(x: TwoStageExperiment, second_label: str) -> Opf:
    """Probability of ``second_label`` at stage two, summed over stage one."""
    b = x.second.labels.index(second_label)
    return Opf(lambda rho: joint_table(x, rho)[:, b].sum(), f"P2({second_label})", x.dim)


def mix_opfs(p: float, f: Opf, g: Opf) -> Opf:
    """Convex combination ``rho -> p f(rho) + (1 - p) g(rho)``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"mixing weight must lie in [0, 1], got {p!r}")
    if f.dim != g.dim:
        raise InvalidInputError("cannot mix OPFs on different dimensions")
    return Opf(lambda rho: p * f(rho) + (1.0 - p) * g(rho), f"{p}*{f.label}+{1 - p}*{g.label}", f.dim)


# ---------------------------------------------------------------------------
# Convex-linearity
# ---------------------------------------------------------------------------


def canonical_witness() -> EnsembleDecomposition:
    """``{(1/2, I/2), (1/2, |z+><z+|)}``."""
    return EnsembleDecomposition(((0.5, maximally_mixed(2)), (0.5, bloch_to_density((0, 0, 1)))))


def linearity_gap(f: Opf, e: EnsembleDecomposition) -> float:
    """``|f(sum p_i rho_i) - sum p_i f(rho_i)|`` for one ensemble."""
    avg = sum(p * f(s) for p, s in e.members)
    return abs(f(mix(e)) - avg)


def convex_linearity_check(
    f: Opf, trials: int = 200, seed: int = 0, tol: float = 1e-10
) -> LinearityReport:
    """Search for a violation of ``f(sum p_i rho_i) = sum p_i f(rho_i)``.

    ``trials`` random ensembles of 2-4 members are drawn from ``seed``. For
    qubit OPFs the canonical witness is always evaluated first, so a failure
    there is reproducible regardless of the seed.
    """
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst, witness, canonical = -1.0, None, None
    if f.dim == 2:
        e = canonical_witness()
        canonical = linearity_gap(f, e)
        worst, witness = canonical, e
    for _ in range(trials):
        e = random_ensemble(rng, f.dim)
        gap = linearity_gap(f, e)
        if gap > worst:
            worst, witness = gap, e
    passed = worst <= tol
    return LinearityReport(passed, worst, None if passed else witness, tol, trials, canonical)


# ---------------------------------------------------------------------------
# Effect reconstruction
# ---------------------------------------------------------------------------


def tomographic_states() -> list[DensityMatrix]:
    """``I/2`` and the three ``(I + sigma_k)/2``: affinely independent, so a 4x4 solve suffices."""
    return [DensityMatrix((IDENTITY + p) / 2) if k else maximally_mixed(2) for k, p in enumerate(PAULIS)]


_TOMO = tomographic_states()
# row m, column n: tr(rho_m sigma_n); the unknowns are E's Pauli coefficients
_TOMO_SYSTEM = np.array([[expectation(p, rho.matrix) for p in PAULIS] for rho in _TOMO])


def heldout_states(n: int = HELDOUT_SIZE, seed: int = HELDOUT_SEED) -> list[DensityMatrix]:
    """Fixed validation set: alternating Haar-pure and partially mixed qubit states."""
    rng = np.random.default_rng(seed)
    return [random_pure_state(rng) if k % 2 == 0 else random_mixed_state(rng) for k in range(n)]


_HELDOUT = heldout_states()


def _solve_effect(values: np.ndarray) -> np.ndarray:
    coeffs = np.linalg.solve(_TOMO_SYSTEM, values)
    return sum(c * p for c, p in zip(coeffs, PAULIS))


def fit_effect_from_opf(f: Opf) -> tuple[Effect, float]:
    """Reconstruct the effect ``E`` with ``f(rho) = tr(rho E)`` on the tomographic states.

    Returns ``(E, residual)`` where ``residual`` is the worst disagreement
    between ``f`` and ``tr(rho E)`` over the held-out states. ``E`` is
    returned unchecked; use ``E.is_valid()``. A nonzero residual means no
    effect reproduces ``f``.
    """
    if f.dim != 2:
        raise InvalidInputError("effect fitting is implemented for qubit OPFs only")
    e = _solve_effect(np.array([f(rho) for rho in _TOMO]))
    e = (e + e.conj().T) / 2
    residual = max(abs(f(rho) - expectation(e, rho.matrix)) for rho in _HELDOUT)
    return Effect(e, check=False), float(residual)


def fit_heralded_povm(x: TwoStageExperiment) -> HeraldedPovmFit:
    """Fit one candidate effect ``H(i, j)`` per outcome pair of a qubit two-stage experiment."""
    check_qubit(x.first.effects[0].operator, "first stage")
    tomo = np.array([joint_table(x, rho) for rho in _TOMO])  # (4, n_first, n_second)
    effects = {}
    for a, i in enumerate(x.first.labels):
        for b, j in enumerate(x.second.labels):
            h = _solve_effect(tomo[:, a, b])
            effects[(i, j)] = (h + h.conj().T) / 2
    residual = 0.0
    for rho in _HELDOUT:
        table = joint_table(x, rho)
        for a, i in enumerate(x.first.labels):
            for b, j in enumerate(x.second.labels):
                residual = max(residual, abs(table[a, b] - expectation(effects[(i, j)], rho.matrix)))
    defect = float(np.max(np.abs(sum(effects.values()) - IDENTITY)))
    return HeraldedPovmFit(effects, float(residual), defect)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return float(0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum())


# ---------------------------------------------------------------------------
# Ensemble discrimination
# ---------------------------------------------------------------------------


def ensemble_joint_table(e: EnsembleDecomposition, x: TwoStageExperiment) -> np.ndarray:
    """Member-wise statistics: ``sum_k p_k P(i, j | rho_k)``."""
    return sum(p * joint_table(x, s) for p, s in e.members)


def ensemble_discrimination_gap(
    a: EnsembleDecomposition, b: EnsembleDecomposition, x: TwoStageExperiment
) -> float:
    """Total-variation distance between the member-wise joint statistics of two ensembles.

    Both ensembles must average to the same density matrix; for any linear
    update rule the result is then zero.
    """
    diff = np.max(np.abs(mix(a).matrix - mix(b).matrix))
    if diff > TOL_EQUAL_MIX:
        raise InvalidComparisonError(
            f"ensembles average to different states (max entry difference {diff:.3g})"
        )
    return total_variation(ensemble_joint_table(a, x), ensemble_joint_table(b, x))
