"""Post-measurement state-update rules.

Three rule families are provided:

* :class:`LudersRule` -- the standard linear rule ``sqrt(F) rho sqrt(F) / tr(F rho)``,
  or a general Kraus instrument when Kraus families are supplied.
* :class:`LogisticBlochRule` -- a qubit rule that keeps the Bloch direction
  and sends the radius through the logistic map ``r -> lam * r * (1 - r)``.
  The post-state does not depend on which outcome occurred.
* :class:`ProbabilityDependentRule` -- Lüders followed by depolarization whose
  strength equals the probability of the outcome just seen.

The last two are deliberately nonlinear in the pre-measurement state. The
outcome probabilities themselves always follow the Born rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from measurelab.errors import InvalidInputError, UndefinedPostStateError
from measurelab.measurement import TOL_COMPLETE, Effect, born_probability, effect_defects
from measurelab.statekit import (
    TOL_HERM,
    TOL_PSD,
    PAULIS,
    BlochVector,
    DensityMatrix,
    as_matrix,
    bloch_to_density,
    check_qubit,
    check_same_dim,
    density_to_bloch,
)

# Outcomes at or below this Born probability have no post-measurement state.
ZERO_PROBABILITY = 1e-12


@dataclass(frozen=True, eq=False)
class LudersRule:
    """Standard update. ``kraus`` optionally lists one Kraus family per outcome.

    With Kraus families, the family whose ``sum K^dagger K`` equals the
    measured effect is used, giving ``sum K rho K^dagger / p``.
    """

    kraus: Optional[tuple[tuple[np.ndarray, ...], ...]] = None

    def __post_init__(self) -> None:
        if self.kraus is None:
            return
        families = tuple(tuple(as_matrix(k) for k in fam) for fam in self.kraus)
        if not families or any(not fam for fam in families):
            raise InvalidInputError("Kraus families must be non-empty")
        dim = families[0][0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for fam in families:
            for k in fam:
                if k.shape != (dim, dim):
                    raise InvalidInputError("Kraus operators must share one square shape")
            e = _family_effect(fam)
            d = effect_defects(e)
            if d["hermiticity"] > TOL_HERM or d["above_one"] > TOL_PSD:
                raise InvalidInputError("a Kraus family has sum K^dagger K > I")
            total += e
        defect = float(np.max(np.abs(total - np.eye(dim))))
        if defect > TOL_COMPLETE:
            raise InvalidInputError(
                f"Kraus families do not sum to the identity (defect {defect:.3g})"
            )
        object.__setattr__(self, "kraus", families)

    def family_for(self, f: Effect, atol: float = 1e-10) -> tuple[np.ndarray, ...]:
        for fam in self.kraus:
            e = _family_effect(fam)
            if e.shape == f.operator.shape and np.allclose(e, f.operator, rtol=0, atol=atol):
                return fam
        raise InvalidInputError("no Kraus family of this rule implements the given effect")


@dataclass(frozen=True)
class LogisticBlochRule:
    lam: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lam <= 4.0):
            raise InvalidInputError(f"logistic parameter must lie in [0, 4], got {self.lam!r}")


@dataclass(frozen=True)
class ProbabilityDependentRule:
    base: LudersRule = LudersRule()


UpdateRule = Union[LudersRule, LogisticBlochRule, ProbabilityDependentRule]


@dataclass(frozen=True)
class UpdateOutcome:
    post_state: DensityMatrix
    probability: float


def _family_effect(fam: Sequence[np.ndarray]) -> np.ndarray:
    return sum(k.conj().T @ k for k in fam)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    evals, evecs = np.linalg.eigh((m + m.conj().T) / 2)
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def _luders_sandwich(rule: LudersRule, f: Effect, rho: np.ndarray) -> np.ndarray:
    if rule.kraus is None:
        s = psd_sqrt(f.operator)
        return s @ rho @ s
    return sum(k @ rho @ k.conj().T for k in rule.family_for(f))


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def logistic_bloch(v: np.ndarray, lam: float) -> np.ndarray:
    """Rescale Bloch vector ``v`` so its radius becomes ``lam * r * (1 - r)``.

    The direction is kept; the origin is a fixed point.
    """
    r = float(np.linalg.norm(v))
    if r == 0.0:
        return np.zeros(3)
    return v * (lam * (1.0 - r))


def _post_state(rule: UpdateRule, f: Effect, rho: DensityMatrix, p: float) -> DensityMatrix:
    if isinstance(rule, LudersRule):
        return DensityMatrix(_hermitize(_luders_sandwich(rule, f, rho.matrix)) / p)
    if isinstance(rule, LogisticBlochRule):
        check_qubit(rho.matrix, "logistic rule state")
        v = density_to_bloch(rho).as_array()
        w = logistic_bloch(v, rule.lam)
        # r (1 - r) <= 1/4 keeps the image inside the ball; guard rounding only
        n = np.linalg.norm(w)
        if n > 1.0:
            w = w / n
        return bloch_to_density(BlochVector.from_array(w))
    if isinstance(rule, ProbabilityDependentRule):
        dim = rho.dim
        collapsed = _hermitize(_luders_sandwich(rule.base, f, rho.matrix)) / p
        return DensityMatrix((1.0 - p) * collapsed + p * np.eye(dim) / dim)
    raise TypeError(f"unknown update rule {rule!r}")


def apply_update(rule: UpdateRule, f: Effect, rho: DensityMatrix) -> UpdateOutcome:
    """Outcome probability and post-measurement state for effect ``f`` on ``rho``.

    Raises
    ------
    UndefinedPostStateError
        If ``tr(f rho)`` is zero (to within 1e-12).
    UnsupportedDimensionError
        If a Bloch-based rule is applied to a non-qubit.
    """
    check_same_dim(f.operator, rho.matrix)
    p = born_probability(f, rho)
    if p <= ZERO_PROBABILITY:
        raise UndefinedPostStateError(f"outcome has probability {p!r}; no post-measurement state")
    return UpdateOutcome(_post_state(rule, f, rho, p), p)


def unnormalized_map(rule: UpdateRule, f: Effect, rho: DensityMatrix) -> np.ndarray:
    """Post-measurement state times its probability; zero for impossible outcomes."""
    check_same_dim(f.operator, rho.matrix)
    if isinstance(rule, LogisticBlochRule):
        check_qubit(rho.matrix, "logistic rule state")
    p = born_probability(f, rho)
    if p <= ZERO_PROBABILITY:
        return np.zeros_like(rho.matrix)
    if isinstance(rule, LudersRule):
        # direct sandwich keeps the map linear to rounding error
        return _hermitize(_luders_sandwich(rule, f, rho.matrix))
    return p * _post_state(rule, f, rho, p).matrix


def depolarizing_kraus_rule(strength: float) -> LudersRule:
    """Computational-basis measurement followed by qubit depolarization.

    Handy as a non-trivial linear instrument: each outcome ``z±`` carries the
    Kraus family ``sqrt(1 - 3s/4) P, sqrt(s/4) sigma_k P``.
    """
    if not (0.0 <= strength <= 1.0):
        raise InvalidInputError("depolarizing strength must lie in [0, 1]")
    weights = [np.sqrt(1 - 3 * strength / 4)] + [np.sqrt(strength / 4)] * 3
    fams = []
    for proj in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])):
        fams.append(tuple(w * p @ proj for w, p in zip(weights, PAULIS)))
    return LudersRule(tuple(fams))
