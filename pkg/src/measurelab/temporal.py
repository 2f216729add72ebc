"""Two-time pseudo-density matrices for a qubit.

For a state ``rho`` measured (Lüders, Pauli ``sigma_i``) at time 1, sent
through a channel, and measured again (Pauli ``sigma_j``) at time 2, the
correlators ``c_ij`` assemble into

    R = 1/4 sum_{i,j} c_ij sigma_i (x) sigma_j

Tensor slot 1 is time 1, slot 2 is time 2. ``R`` is Hermitian with unit trace
and has the right single-time marginals, but it need not be positive:
``rho = I/2`` with the identity channel gives half the SWAP operator,
with eigenvalue -1/2.

Only two times are modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from measurelab.errors import InvalidInputError, UnsupportedDimensionError
from measurelab.measurement import expectation
from measurelab.statekit import (
    IDENTITY,
    PAULIS,
    TOL_HERM,
    TOL_PSD,
    TOL_TRACE,
    ArrayLike,
    DensityMatrix,
    as_matrix,
    check_qubit,
    hermiticity_defect,
)

TOL_CHANNEL = 1e-10


@dataclass(frozen=True, eq=False)
class Channel:
    """A CPTP map in Kraus form, ``rho -> sum_k K rho K^dagger``."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ks = tuple(as_matrix(k) for k in self.kraus)
        if not ks:
            raise InvalidInputError("a channel needs at least one Kraus operator")
        dim = ks[0].shape[0]
        if any(k.shape != (dim, dim) for k in ks):
            raise InvalidInputError("Kraus operators must share one square shape")
        defect = float(np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(dim))))
        if defect > TOL_CHANNEL:
            raise InvalidInputError(f"Kraus operators are not trace preserving (defect {defect:.3g})")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, m: np.ndarray) -> np.ndarray:
        """Act on any operator, not only normalized states."""
        return sum(k @ m @ k.conj().T for k in self.kraus)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        out = self.apply(rho.matrix)
        return DensityMatrix((out + out.conj().T) / 2)


def identity_channel(dim: int = 2) -> Channel:
    return Channel((np.eye(dim),))


def unitary_channel(u: ArrayLike) -> Channel:
    return Channel((np.asarray(u, dtype=complex),))


def depolarizing_channel(p: float) -> Channel:
    """Qubit depolarizing channel ``rho -> (1 - p) rho + p I/2``; ``p = 1`` is fully depolarizing."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError("depolarizing strength must lie in [0, 1]")
    w = [np.sqrt(1 - 3 * p / 4)] + [np.sqrt(p / 4)] * 3
    return Channel(tuple(c * s for c, s in zip(w, PAULIS)))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(rng: np.random.Generator, n_kraus: int = 2, dim: int = 2) -> Channel:
    """Random channel from a Haar isometry ``C^d -> C^d (x) C^n``."""
    u = random_unitary(rng, dim * n_kraus)
    iso = u[:, :dim]
    return Channel(tuple(iso[k * dim:(k + 1) * dim, :] for k in range(n_kraus)))


def _projector(i: int, sign: int) -> np.ndarray:
    return (IDENTITY + sign * PAULIS[i]) / 2


def two_time_correlator(i: int, j: int, rho: DensityMatrix, ch: Channel) -> float:
    """``<sigma_i(t1) sigma_j(t2)>`` with a Lüders measurement of ``sigma_i`` at time 1.

    Index 0 stands for the identity, so ``c_00 = 1``, ``c_i0 = tr(sigma_i rho)``
    and ``c_0j = tr(sigma_j ch(rho))``.
    """
    check_qubit(rho.matrix, "state")
    if ch.dim != 2:
        raise UnsupportedDimensionError("two-time correlators are defined for qubit channels")
    if not (0 <= i <= 3 and 0 <= j <= 3):
        raise InvalidInputError(f"Pauli indices must lie in 0..3, got ({i}, {j})")
    m = rho.matrix
    if i == 0 and j == 0:
        return 1.0
    if j == 0:
        return expectation(PAULIS[i], m)
    if i == 0:
        return expectation(PAULIS[j], ch.apply(m))
    total = 0.0
    for a in (1, -1):
        proj = _projector(i, a)
        total += a * expectation(PAULIS[j], ch.apply(proj @ m @ proj))
    return float(total)


def correlator_table(rho: DensityMatrix, ch: Channel) -> np.ndarray:
    return np.array([[two_time_correlator(i, j, rho, ch) for j in range(4)] for i in range(4)])


@dataclass(frozen=True, eq=False)
class PseudoDensityMatrix:
    """Hermitian, unit-trace 4x4 operator; positivity is not required."""

    matrix: np.ndarray
    eigenvalues: np.ndarray

    @classmethod
    def from_matrix(cls, m: ArrayLike) -> "PseudoDensityMatrix":
        a = as_matrix(m)
        if a.shape != (4, 4):
            raise UnsupportedDimensionError(f"two-qubit-time operator must be 4x4, got {a.shape}")
        herm = hermiticity_defect(a)
        if herm > TOL_HERM:
            raise InvalidInputError(f"pseudo-density matrix not Hermitian (defect {herm:.3g})")
        tr = float(np.trace(a).real)
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidInputError(f"pseudo-density matrix has trace {tr!r}")
        evals = np.linalg.eigvalsh((a + a.conj().T) / 2)
        evals.flags.writeable = False
        return cls(a, evals)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def is_positive(self, tol: float = TOL_PSD) -> bool:
        return self.min_eigenvalue >= -tol

    def marginal(self, slot: int) -> np.ndarray:
        """Partial trace keeping tensor ``slot`` (1 = time 1, 2 = time 2)."""
        return partial_trace(self.matrix, keep=slot)


def partial_trace(m: np.ndarray, keep: int) -> np.ndarray:
    t = np.asarray(m).reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ajbj->ab", t)
    if keep == 2:
        return np.einsum("iaib->ab", t)
    raise InvalidInputError("keep must be 1 or 2")


def pdm_from_correlators(c: np.ndarray) -> PseudoDensityMatrix:
    c = np.asarray(c, dtype=float)
    r = sum(c[i, j] * np.kron(PAULIS[i], PAULIS[j]) for i in range(4) for j in range(4)) / 4
    return PseudoDensityMatrix.from_matrix(r)


def build_pdm(rho: DensityMatrix, ch: Channel) -> PseudoDensityMatrix:
    """Two-time pseudo-density matrix of ``rho`` evolving under ``ch``."""
    return pdm_from_correlators(correlator_table(rho, ch))


def product_pdm(rho_a: DensityMatrix, rho_b: DensityMatrix) -> PseudoDensityMatrix:
    """Same construction with spatial correlators ``tr(sigma_i rho_a) tr(sigma_j rho_b)``."""
    check_qubit(rho_a.matrix)
    check_qubit(rho_b.matrix)
    ca = np.array([expectation(p, rho_a.matrix) for p in PAULIS])
    cb = np.array([expectation(p, rho_b.matrix) for p in PAULIS])
    return pdm_from_correlators(np.outer(ca, cb))


def lift_state(m: ArrayLike) -> PseudoDensityMatrix:
    """View an ordinary two-qubit density matrix as a (positive) pseudo-density matrix."""
    return PseudoDensityMatrix.from_matrix(DensityMatrix(m).matrix)


def negativity(p: PseudoDensityMatrix) -> float:
    """Sum of the magnitudes of the negative eigenvalues (0 if positive within 1e-9)."""
    neg = p.eigenvalues[p.eigenvalues < -TOL_PSD]
    return float(np.abs(neg).sum())
