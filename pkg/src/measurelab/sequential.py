"""Two measurements in succession, with an arbitrary update rule in between."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from measurelab.errors import InvalidInputError, InvalidProbabilityError, UndefinedPostStateError
from measurelab.measurement import (
    TOL_DIST,
    OutcomeDistribution,
    Povm,
    born_probability,
    clamp_probability,
)
from measurelab.statekit import DensityMatrix, check_same_dim
from measurelab.update_rules import ZERO_PROBABILITY, UpdateRule, apply_update


@dataclass(frozen=True, eq=False)
class TwoStageExperiment:
    first: Povm
    second: Povm
    rule: UpdateRule

    def __post_init__(self) -> None:
        if self.first.dim != self.second.dim:
            raise InvalidInputError(
                f"stages act on different dimensions ({self.first.dim} vs {self.second.dim})"
            )

    @property
    def dim(self) -> int:
        return self.first.dim

    def outcome_pairs(self) -> list[tuple[str, str]]:
        return [(i, j) for i in self.first.labels for j in self.second.labels]

    def with_rule(self, rule: UpdateRule) -> "TwoStageExperiment":
        return TwoStageExperiment(self.first, self.second, rule)


@dataclass(frozen=True)
class JointDistribution:
    """``P(i, j)`` over (first-stage label, second-stage label), first-major order."""

    first_labels: tuple[str, ...]
    second_labels: tuple[str, ...]
    table: np.ndarray  # shape (len(first), len(second))

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        if t.shape != (len(self.first_labels), len(self.second_labels)):
            raise InvalidInputError(f"table shape {t.shape} does not match the labels")
        if np.any(t < 0) or np.any(t > 1):
            raise InvalidProbabilityError("joint probabilities must lie in [0, 1]")
        if abs(t.sum() - 1.0) > TOL_DIST:
            raise InvalidProbabilityError(f"joint distribution sums to {t.sum()!r}")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i, j = pair
        return float(self.table[self.first_labels.index(i), self.second_labels.index(j)])

    def as_dict(self) -> dict[tuple[str, str], float]:
        return {
            (i, j): float(self.table[a, b])
            for a, i in enumerate(self.first_labels)
            for b, j in enumerate(self.second_labels)
        }

    def as_vector(self) -> np.ndarray:
        return self.table.reshape(-1).copy()

    def first_marginal(self) -> OutcomeDistribution:
        return OutcomeDistribution(self.first_labels, tuple(self.table.sum(axis=1)))

    def second_marginal(self) -> OutcomeDistribution:
        return OutcomeDistribution(self.second_labels, tuple(self.table.sum(axis=0)))


def joint_table(x: TwoStageExperiment, rho: DensityMatrix) -> np.ndarray:
    """Raw ``P(i, j) = tr[G_j sigma(F_i, rho)] tr[F_i rho]`` as an array."""
    check_same_dim(x.first.effects[0].operator, rho.matrix)
    table = np.zeros((len(x.first), len(x.second)))
    for a, f in enumerate(x.first.effects):
        p = born_probability(f, rho)
        if p <= ZERO_PROBABILITY:
            continue
        post = apply_update(x.rule, f, rho).post_state
        for b, g in enumerate(x.second.effects):
            table[a, b] = born_probability(g, post) * p
    return table


def joint_distribution(x: TwoStageExperiment, rho: DensityMatrix) -> JointDistribution:
    return JointDistribution(x.first.labels, x.second.labels, joint_table(x, rho))


def first_stage_marginal(x: TwoStageExperiment, rho: DensityMatrix) -> OutcomeDistribution:
    return joint_distribution(x, rho).first_marginal()


def second_stage_marginal(x: TwoStageExperiment, rho: DensityMatrix) -> OutcomeDistribution:
    """Statistics of the second measurement, summed over the first outcome."""
    return joint_distribution(x, rho).second_marginal()


def conditional_distribution(
    x: TwoStageExperiment, rho: DensityMatrix, first_label: str
) -> OutcomeDistribution:
    """``P(j | i)`` for the given first-stage outcome ``i``."""
    try:
        a = x.first.labels.index(first_label)
    except ValueError:
        raise InvalidInputError(f"unknown first-stage outcome {first_label!r}") from None
    row = joint_table(x, rho)[a]
    p_first = row.sum()
    if p_first <= ZERO_PROBABILITY:
        raise UndefinedPostStateError(f"cannot condition on {first_label!r}: probability {p_first!r}")
    cond = tuple(clamp_probability(v / p_first, "conditional probability") for v in row)
    return OutcomeDistribution(x.second.labels, cond)
