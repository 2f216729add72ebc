"""Density matrices, Bloch-ball geometry, ensembles and distances.

Everything here is dense ``numpy`` linear algebra on d x d complex matrices.
Matrices held by the value types are copied and frozen (``writeable=False``)
so a state can be shared freely once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from measurelab.errors import (
    DimensionMismatchError,
    InvalidInputError,
    UnsupportedDimensionError,
)

TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_TRACE = 1e-10
TOL_RADIUS = 1e-9
TOL_WEIGHTS = 1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in PAULIS:
    _m.flags.writeable = False

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def as_matrix(m: ArrayLike) -> np.ndarray:
    """Return a frozen complex copy of a square, finite matrix."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    a.flags.writeable = False
    return a


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def check_qubit(m: np.ndarray, what: str = "operand") -> None:
    if m.shape != (2, 2):
        raise UnsupportedDimensionError(f"{what} must be a qubit (2x2), got {m.shape}")


@dataclass(frozen=True)
class Violation:
    """Why a matrix is not a density matrix.

    ``invariant`` is one of ``"shape"``, ``"hermiticity"``, ``"positivity"``
    or ``"trace"``; ``defect`` is the measured quantity (max anti-Hermitian
    entry, minimum eigenvalue, or trace respectively).
    """

    invariant: str
    defect: float
    message: str

    def __bool__(self) -> bool:
        # a report is falsy so `if validate_density(m):` reads naturally
        return False


def _density_violation(m: np.ndarray) -> Violation | None:
    herm = hermiticity_defect(m)
    if herm > TOL_HERM:
        return Violation("hermiticity", herm, f"max |M - M^dagger| = {herm:.3g}")
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if evals[0] < -TOL_PSD:
        return Violation("positivity", float(evals[0]), f"min eigenvalue {evals[0]:.6g}")
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > TOL_TRACE:
        return Violation("trace", tr, f"trace {tr:.12g}")
    return None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A Hermitian, positive semidefinite, unit-trace operator."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = as_matrix(self.matrix)
        bad = _density_violation(m)
        if bad is not None:
            raise InvalidInputError(f"not a density matrix ({bad.invariant}): {bad.message}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def allclose(self, other: "DensityMatrix", atol: float = 1e-12) -> bool:
        return self.matrix.shape == other.matrix.shape and np.allclose(
            self.matrix, other.matrix, rtol=0, atol=atol
        )

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, matrix={np.array2string(self.matrix, precision=4)})"


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        comps = (self.x, self.y, self.z)
        if not all(np.isfinite(c) for c in comps):
            raise InvalidInputError("Bloch vector has non-finite components")
        if self.radius > 1 + TOL_RADIUS:
            raise InvalidInputError(f"Bloch radius {self.radius:.12g} exceeds 1")

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, v: Iterable[float]) -> "BlochVector":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)


@dataclass(frozen=True)
class EnsembleDecomposition:
    """A weighted list of states ``[(p_i, rho_i), ...]`` with ``sum p_i = 1``."""

    members: tuple[tuple[float, DensityMatrix], ...]

    def __post_init__(self) -> None:
        members = tuple((float(p), s) for p, s in self.members)
        if not members:
            raise InvalidInputError("ensemble must have at least one member")
        weights = np.array([p for p, _ in members])
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidInputError(f"ensemble weights must be non-negative, got {weights}")
        if abs(weights.sum() - 1.0) > TOL_WEIGHTS:
            raise InvalidInputError(f"ensemble weights sum to {weights.sum():.12g}, not 1")
        dims = {s.dim for _, s in members}
        if len(dims) != 1:
            raise DimensionMismatchError(f"ensemble mixes dimensions {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    @property
    def states(self) -> list[DensityMatrix]:
        return [s for _, s in self.members]

    @property
    def dim(self) -> int:
        return self.members[0][1].dim

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def ensemble(*members: tuple[float, DensityMatrix]) -> EnsembleDecomposition:
    """Shorthand: ``ensemble((0.5, rho), (0.5, sigma))``."""
    return EnsembleDecomposition(tuple(members))


def validate_density(m: ArrayLike) -> DensityMatrix | Violation:
    """Return the typed state, or a :class:`Violation` naming the first broken invariant.

    Checks run in the order hermiticity, positivity, trace.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        return Violation("shape", float("nan"), f"not a square matrix: shape {a.shape}")
    if not np.all(np.isfinite(a)):
        return Violation("shape", float("nan"), "non-finite entries")
    bad = _density_violation(a)
    if bad is not None:
        return bad
    return DensityMatrix(a)


def maximally_mixed(dim: int = 2) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def pure_state(psi: Sequence[complex]) -> DensityMatrix:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidInputError("zero vector is not a state")
    v = v / norm
    return DensityMatrix(np.outer(v, v.conj()))


def bloch_to_density(v: BlochVector | Sequence[float]) -> DensityMatrix:
    """Embed a Bloch vector as ``(I + v . sigma) / 2``."""
    if not isinstance(v, BlochVector):
        v = BlochVector.from_array(v)
    m = (IDENTITY + v.x * SIGMA_X + v.y * SIGMA_Y + v.z * SIGMA_Z) / 2
    return DensityMatrix(m)


def density_to_bloch(rho: DensityMatrix) -> BlochVector:
    check_qubit(rho.matrix, "state")
    m = rho.matrix
    # tr(rho sigma_k), written out to avoid three full matrix products
    x = 2 * m[0, 1].real
    y = -2 * m[0, 1].imag
    z = (m[0, 0] - m[1, 1]).real
    return BlochVector(float(x), float(y), float(z))


def mix(e: EnsembleDecomposition) -> DensityMatrix:
    acc = np.zeros_like(e.members[0][1].matrix)
    for p, s in e.members:
        acc = acc + p * s.matrix
    return DensityMatrix(acc)


def trace_norm(m: np.ndarray) -> float:
    """Schatten-1 norm of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    check_same_dim(rho.matrix, sigma.matrix)
    d = 0.5 * trace_norm(rho.matrix - sigma.matrix)
    return min(max(d, 0.0), 1.0)


def pauli_coefficients(m: np.ndarray) -> np.ndarray:
    """Real coefficients ``c`` with ``m = sum_k c_k sigma_k`` for Hermitian 2x2 ``m``."""
    check_qubit(np.asarray(m))
    return np.array([np.trace(p @ m).real / 2 for p in PAULIS])


def from_pauli_coefficients(c: Sequence[float]) -> np.ndarray:
    return sum(ck * p for ck, p in zip(c, PAULIS))


# Named states used by the scenario runner and the tests.
def named_state(name: str) -> DensityMatrix:
    table = {
        "z+": (0, 0, 1),
        "z-": (0, 0, -1),
        "x+": (1, 0, 0),
        "x-": (-1, 0, 0),
        "y+": (0, 1, 0),
        "y-": (0, -1, 0),
        "I/2": (0, 0, 0),
        "mixed": (0, 0, 0),
    }
    try:
        return bloch_to_density(table[name])
    except KeyError:
        raise InvalidInputError(f"unknown state name {name!r}; known: {sorted(table)}") from None


# ---------------------------------------------------------------------------
# Seeded sampling. Pure states are Haar-random (uniform on the Bloch sphere for
# qubits); mixed states blend a Haar pure state with I/d at a uniform weight.
# ---------------------------------------------------------------------------


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> DensityMatrix:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure_state(v)


def random_mixed_state(rng: np.random.Generator, dim: int = 2) -> DensityMatrix:
    w = rng.uniform()
    psi = random_pure_state(rng, dim).matrix
    return DensityMatrix(w * psi + (1 - w) * np.eye(dim) / dim)


def random_state(rng: np.random.Generator, dim: int = 2) -> DensityMatrix:
    """A pure or mixed state, each with probability one half."""
    if rng.uniform() < 0.5:
        return random_pure_state(rng, dim)
    return random_mixed_state(rng, dim)


def random_ensemble(
    rng: np.random.Generator, dim: int = 2, size: int | None = None
) -> EnsembleDecomposition:
    """Random ensemble of 2-4 members (or ``size``) with Dirichlet weights."""
    n = int(rng.integers(2, 5)) if size is None else size
    weights = rng.dirichlet(np.ones(n))
    weights = weights / weights.sum()
    return EnsembleDecomposition(tuple((float(p), random_state(rng, dim)) for p in weights))


def random_pure_decomposition(
    rho: DensityMatrix, rng: np.random.Generator
) -> EnsembleDecomposition:
    """Split a qubit state into two pure states along a random chord through its Bloch point.

    Different draws give different decompositions of the same ``rho``.
    """
    v = density_to_bloch(rho).as_array()
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    # solve |v + t n| = 1
    b = v @ n
    c = v @ v - 1.0
    disc = np.sqrt(max(b * b - c, 0.0))
    t1, t2 = -b + disc, -b - disc
    if t1 - t2 < 1e-15:
        return EnsembleDecomposition(((1.0, rho),))
    alpha = min(max(-t2 / (t1 - t2), 0.0), 1.0)
    a = v + t1 * n
    c_ = v + t2 * n
    a /= max(np.linalg.norm(a), 1.0)
    c_ /= max(np.linalg.norm(c_), 1.0)
    return EnsembleDecomposition(
        ((float(alpha), bloch_to_density(a)), (float(1 - alpha), bloch_to_density(c_)))
    )


def spectral_decomposition(rho: DensityMatrix) -> EnsembleDecomposition:
    evals, evecs = np.linalg.eigh(rho.matrix)
    evals = np.clip(evals, 0.0, None)
    evals = evals / evals.sum()
    return EnsembleDecomposition(
        tuple((float(p), pure_state(evecs[:, k])) for k, p in enumerate(evals))
    )
