"""Effects, POVMs, the Born rule and single-stage outcome statistics."""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from typing import Mapping, Sequence

import numpy as np

from measurelab.errors import InvalidInputError, InvalidProbabilityError
from measurelab.statekit import (
    TOL_HERM,
    TOL_PSD,
    ArrayLike,
    DensityMatrix,
    as_matrix,
    check_same_dim,
    hermiticity_defect,
)

TOL_COMPLETE = 1e-10
TOL_CLAMP = 1e-12
TOL_DIST = 1e-10


def effect_defects(m: np.ndarray) -> dict[str, float]:
    """Measured distance of ``m`` from the effect conditions ``0 <= m <= I``.

    Returns the hermiticity defect and how far the spectrum leaves [0, 1]
    (zero when it does not).
    """
    herm = hermiticity_defect(m)
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return {
        "hermiticity": herm,
        "below_zero": float(max(0.0, -evals[0])),
        "above_one": float(max(0.0, evals[-1] - 1.0)),
    }


def is_effect(m: ArrayLike, tol_herm: float = TOL_HERM, tol_spec: float = TOL_PSD) -> bool:
    d = effect_defects(np.asarray(m, dtype=complex))
    return d["hermiticity"] <= tol_herm and d["below_zero"] <= tol_spec and d["above_one"] <= tol_spec


@dataclass(frozen=True, eq=False)
class Effect:
    """An operator ``Q`` with ``0 <= Q <= I``.

    Pass ``check=False`` to hold a candidate operator that may fail the
    conditions (fitted operators are returned this way); ``is_valid`` then
    reports whether it actually is an effect.
    """

    operator: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        m = as_matrix(self.operator)
        if check:
            d = effect_defects(m)
            if d["hermiticity"] > TOL_HERM:
                raise InvalidInputError(f"effect not Hermitian (defect {d['hermiticity']:.3g})")
            if d["below_zero"] > TOL_PSD or d["above_one"] > TOL_PSD:
                raise InvalidInputError(
                    f"effect spectrum leaves [0, 1] (below {d['below_zero']:.3g}, "
                    f"above {d['above_one']:.3g})"
                )
        object.__setattr__(self, "operator", m)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    def is_valid(self) -> bool:
        return is_effect(self.operator)


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered effects with string outcome labels, summing to the identity."""

    effects: tuple[Effect, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        effects = tuple(e if isinstance(e, Effect) else Effect(e) for e in self.effects)
        labels = tuple(str(lab) for lab in self.labels)
        if not effects:
            raise InvalidInputError("a POVM needs at least one effect")
        if len(labels) != len(effects):
            raise InvalidInputError(f"{len(effects)} effects but {len(labels)} labels")
        if len(set(labels)) != len(labels):
            raise InvalidInputError(f"duplicate outcome labels {labels}")
        for e in effects[1:]:
            check_same_dim(effects[0].operator, e.operator)
        total = sum(e.operator for e in effects)
        defect = float(np.max(np.abs(total - np.eye(effects[0].dim))))
        if defect > TOL_COMPLETE:
            raise InvalidInputError(f"effects do not sum to the identity (defect {defect:.3g})")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    def __len__(self) -> int:
        return len(self.effects)

    def __getitem__(self, label: str) -> Effect:
        try:
            return self.effects[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None

    def items(self):
        return zip(self.labels, self.effects)

    @classmethod
    def from_operators(cls, operators: Sequence[ArrayLike], labels: Sequence[str]) -> "Povm":
        return cls(tuple(Effect(m) for m in operators), tuple(labels))


@dataclass(frozen=True)
class OutcomeDistribution:
    labels: tuple
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probabilities)
        if len(probs) != len(self.labels):
            raise InvalidInputError("labels and probabilities differ in length")
        for lab, p in zip(self.labels, probs):
            if not (-TOL_CLAMP <= p <= 1 + TOL_CLAMP):
                raise InvalidProbabilityError(f"P({lab}) = {p!r} outside [0, 1]")
        total = sum(probs)
        if abs(total - 1.0) > TOL_DIST:
            raise InvalidProbabilityError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "probabilities", probs)

    def __getitem__(self, label) -> float:
        return self.probabilities[self.labels.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probabilities))

    def as_array(self) -> np.ndarray:
        return np.array(self.probabilities)


def clamp_probability(p: float, what: str = "probability") -> float:
    """Snap ``p`` into [0, 1] if it is within 1e-12 of the interval; otherwise raise."""
    if p < 0.0:
        if p < -TOL_CLAMP:
            raise InvalidProbabilityError(f"{what} {p!r} is negative")
        return 0.0
    if p > 1.0:
        if p > 1.0 + TOL_CLAMP:
            raise InvalidProbabilityError(f"{what} {p!r} exceeds 1")
        return 1.0
    return p


def expectation(q: np.ndarray, rho: np.ndarray) -> float:
    """Real part of ``tr(rho q)`` without forming the product."""
    return float(np.real(np.sum(rho * q.T)))


def born_probability(q: Effect, rho: DensityMatrix) -> float:
    """Born rule: probability ``tr(rho Q)`` of effect ``q`` on state ``rho``."""
    check_same_dim(q.operator, rho.matrix)
    return clamp_probability(expectation(q.operator, rho.matrix), "Born probability")


def outcome_distribution(m: Povm, rho: DensityMatrix) -> OutcomeDistribution:
    return OutcomeDistribution(m.labels, tuple(born_probability(e, rho) for e in m.effects))


def computational_basis_povm() -> Povm:
    """``{|z+><z+|, |z-><z-|}`` with labels ``z+`` and ``z-``."""
    return Povm.from_operators([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], ("z+", "z-"))


def x_basis_povm() -> Povm:
    plus = np.array([[1, 1], [1, 1]]) / 2
    return Povm.from_operators([plus, np.eye(2) - plus], ("x+", "x-"))


def y_basis_povm() -> Povm:
    plus = np.array([[1, -1j], [1j, 1]]) / 2
    return Povm.from_operators([plus, np.eye(2) - plus], ("y+", "y-"))


def trivial_povm(dim: int = 2, label: str = "I") -> Povm:
    """Single-outcome measurement ``{I}``: learns nothing, disturbs nothing."""
    return Povm.from_operators([np.eye(dim)], (label,))


NAMED_POVMS: Mapping[str, callable] = {
    "computational": computational_basis_povm,
    "z": computational_basis_povm,
    "x": x_basis_povm,
    "y": y_basis_povm,
    "trivial": trivial_povm,
}


def named_povm(name: str) -> Povm:
    try:
        return NAMED_POVMS[name]()
    except KeyError:
        raise InvalidInputError(f"unknown POVM {name!r}; known: {sorted(NAMED_POVMS)}") from None


def sample_outcomes(m: Povm, rho: DensityMatrix, n: int, seed: int) -> list[str]:
    """Draw ``n`` independent outcome labels; the same seed gives the same list."""
    dist = outcome_distribution(m, rho).as_array()
    dist = dist / dist.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(dist), size=n, p=dist)
    return [m.labels[k] for k in idx]


def sample_outcome(m: Povm, rho: DensityMatrix, seed: int) -> str:
    return sample_outcomes(m, rho, 1, seed)[0]
