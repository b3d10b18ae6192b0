"""
Dense state-vector and density-matrix kernel.

Qubits are numbered from 1 and qubit 1 is the most significant bit of the
basis-state index. Every operation returns a new value; the arrays held by
Ket and DensityMatrix are read-only.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import InitVar, dataclass, field

import numpy as np

from .gates import is_unitary

logger = logging.getLogger(__name__)

MAX_QUBITS = 12
NORM_TOLERANCE = 1e-12
ZERO_PROBABILITY = 1e-14
HERMITIAN_TOLERANCE = 1e-12
EIGENVALUE_FLOOR = -1e-10


class StateError(Exception):
    """Raised when a state or operator violates the kernel's invariants."""

    def __init__(self, message: str, qubit: int | None = None):
        self.message = message
        self.qubit = qubit
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        if self.qubit is not None:
            return f"{self.message} (qubit: {self.qubit})"
        return self.message


class ZeroProbabilityError(StateError):
    """Raised when a projection has probability below ZERO_PROBABILITY."""


def _qubit_count(dimension: int) -> int:
    n_qubits = int(round(math.log2(dimension))) if dimension > 0 else 0
    if dimension < 2 or 2**n_qubits != dimension:
        raise StateError(f"Dimension {dimension} is not a power of two >= 2")
    if n_qubits > MAX_QUBITS:
        raise StateError(f"{n_qubits} qubits exceeds the limit of {MAX_QUBITS}")
    return n_qubits


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state on 1..MAX_QUBITS qubits."""

    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n_qubits = _qubit_count(amplitudes.size)
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1) > NORM_TOLERANCE:
            raise StateError(f"Ket norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", _read_only(amplitudes))
        object.__setattr__(self, "n_qubits", n_qubits)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex] | np.ndarray) -> Ket:
        """Build a ket after rescaling the amplitudes to unit norm."""
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amplitudes)
        if norm < math.sqrt(ZERO_PROBABILITY):
            raise StateError("Cannot normalize a zero vector")
        return cls(amplitudes / norm)

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> Ket:
        """Computational basis state, e.g. ``Ket.basis("0101")``."""
        bits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in bits):
            raise StateError(f"Basis label {bits} must contain only 0 and 1")
        amplitudes = np.zeros(2 ** len(bits), dtype=complex)
        amplitudes[int("".join(map(str, bits)), 2)] = 1
        return cls(amplitudes)

    @classmethod
    def product(cls, *factors: np.ndarray) -> Ket:
        """Tensor product of single-qubit vectors, first factor is qubit 1."""
        vector = np.ones(1, dtype=complex)
        for factor in factors:
            vector = np.kron(vector, np.asarray(factor, dtype=complex))
        return cls(vector)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.n_qubits)

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def same_state(self, other: Ket, tol: float = 1e-9) -> bool:
        """True if the kets agree up to a global phase."""
        if other.n_qubits != self.n_qubits:
            return False
        return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1) < tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    matrix: np.ndarray
    n_qubits: int = field(init=False)
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StateError(f"Density matrix must be square, got {matrix.shape}")
        n_qubits = _qubit_count(matrix.shape[0])
        if validate:
            if not np.allclose(matrix, matrix.conj().T, atol=HERMITIAN_TOLERANCE, rtol=0):
                raise StateError("Density matrix is not Hermitian")
            trace = np.trace(matrix).real
            if abs(trace - 1) > HERMITIAN_TOLERANCE * matrix.shape[0]:
                raise StateError(f"Density matrix trace {trace!r} differs from 1")
            smallest = float(np.linalg.eigvalsh(matrix).min())
            if smallest < EIGENVALUE_FLOOR:
                raise StateError(f"Density matrix has eigenvalue {smallest!r}")
        object.__setattr__(self, "matrix", _read_only(matrix))
        object.__setattr__(self, "n_qubits", n_qubits)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> DensityMatrix:
        dimension = 2**n_qubits
        return cls(np.eye(dimension, dtype=complex) / dimension)

    def tensor(self) -> np.ndarray:
        return self.matrix.reshape([2] * (2 * self.n_qubits))


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 1 <= qubit <= n_qubits:
        raise StateError(f"Qubit index out of range 1..{n_qubits}", qubit=qubit)


def _check_vector(onto: np.ndarray) -> np.ndarray:
    onto = np.asarray(onto, dtype=complex).reshape(-1)
    if onto.shape != (2,):
        raise StateError(f"Projection vector must have 2 entries, got {onto.shape}")
    if abs(np.linalg.norm(onto) - 1) > NORM_TOLERANCE:
        raise StateError("Projection vector is not normalized")
    return onto


def _apply_axis(tensor: np.ndarray, gate: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(gate, tensor, axes=([1], [axis])), 0, axis)


def apply_1q(state: Ket, gate: np.ndarray, qubit: int, *, validate: bool = True) -> Ket:
    """
    Apply a single-qubit unitary.

    Args:
        state: Input ket
        gate: 2x2 unitary
        qubit: Target qubit (1-based)
        validate: Check unitarity of the gate

    Returns:
        New ket

    Raises:
        StateError: If the qubit is out of range or the gate is not unitary
    """
    _check_qubit(state.n_qubits, qubit)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise StateError(f"Single-qubit gate must be 2x2, got {gate.shape}", qubit=qubit)
    if validate and not is_unitary(gate):
        raise StateError("Gate is not unitary", qubit=qubit)
    tensor = _apply_axis(state.tensor(), gate, qubit - 1)
    return Ket(tensor.reshape(-1))


def apply_2q(
    state: Ket, gate: np.ndarray, first: int, second: int, *, validate: bool = True
) -> Ket:
    """Apply a 4x4 unitary to (first, second), first being its high bit."""
    _check_qubit(state.n_qubits, first)
    _check_qubit(state.n_qubits, second)
    if first == second:
        raise StateError("Two-qubit gate needs distinct qubits", qubit=first)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4):
        raise StateError(f"Two-qubit gate must be 4x4, got {gate.shape}")
    if validate and not is_unitary(gate):
        raise StateError("Gate is not unitary")
    axes = [first - 1, second - 1]
    tensor = np.tensordot(gate.reshape(2, 2, 2, 2), state.tensor(), axes=([2, 3], axes))
    tensor = np.moveaxis(tensor, [0, 1], axes)
    return Ket(tensor.reshape(-1))


def apply_cz(state: Ket, i: int, j: int) -> Ket:
    """Controlled-Z between qubits i and j (symmetric)."""
    _check_qubit(state.n_qubits, i)
    _check_qubit(state.n_qubits, j)
    if i == j:
        raise StateError("CZ needs distinct qubits", qubit=i)
    tensor = np.array(state.tensor())
    index: list[slice | int] = [slice(None)] * state.n_qubits
    index[i - 1] = 1
    index[j - 1] = 1
    tensor[tuple(index)] *= -1
    return Ket(tensor.reshape(-1))


def project(
    state: Ket, qubit: int, onto: np.ndarray, *, force: bool = False
) -> tuple[float, Ket | None]:
    """
    Project one qubit onto a single-qubit vector and renormalize.

    The measured qubit stays in the register, now in the state ``onto``.

    Args:
        state: Input ket
        qubit: Measured qubit (1-based)
        onto: Normalized 2-vector
        force: Return (p, None) instead of raising when p is negligible

    Returns:
        Tuple of (probability, collapsed ket or None)

    Raises:
        ZeroProbabilityError: If p < ZERO_PROBABILITY and force is False
    """
    _check_qubit(state.n_qubits, qubit)
    onto = _check_vector(onto)
    axis = qubit - 1
    reduced = np.tensordot(onto.conj(), state.tensor(), axes=([0], [axis]))
    probability = float(np.vdot(reduced, reduced).real)
    if probability < ZERO_PROBABILITY:
        if force:
            return probability, None
        raise ZeroProbabilityError(
            f"Projection probability {probability!r} is negligible", qubit=qubit
        )
    collapsed = np.moveaxis(np.multiply.outer(onto, reduced), 0, axis)
    return probability, Ket(collapsed.reshape(-1) / math.sqrt(probability))


def contract(state: Ket, qubit: int, onto: np.ndarray) -> Ket:
    """Remove a qubit by contracting it with ``onto``; the result has n-1 qubits."""
    if state.n_qubits < 2:
        raise StateError("Cannot contract the last qubit", qubit=qubit)
    _check_qubit(state.n_qubits, qubit)
    onto = _check_vector(onto)
    reduced = np.tensordot(onto.conj(), state.tensor(), axes=([0], [qubit - 1]))
    norm = float(np.linalg.norm(reduced))
    if norm**2 < ZERO_PROBABILITY:
        raise ZeroProbabilityError("Contraction leaves a zero vector", qubit=qubit)
    return Ket(reduced.reshape(-1) / norm)


def permute(state: Ket, order: Sequence[int]) -> Ket:
    """New qubit k is old qubit ``order[k-1]``."""
    order = list(order)
    if sorted(order) != list(range(1, state.n_qubits + 1)):
        raise StateError(f"Invalid qubit permutation {order}")
    tensor = np.transpose(state.tensor(), [q - 1 for q in order])
    return Ket(tensor.reshape(-1))


def permute_dm(rho: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    order = list(order)
    n = rho.n_qubits
    if sorted(order) != list(range(1, n + 1)):
        raise StateError(f"Invalid qubit permutation {order}")
    axes = [q - 1 for q in order]
    tensor = np.transpose(rho.tensor(), axes + [n + a for a in axes])
    return DensityMatrix(tensor.reshape(2**n, 2**n), validate=False)


def overlap_fidelity(a: Ket, b: Ket) -> float:
    """|<a|b>|^2 for kets of equal size."""
    if a.n_qubits != b.n_qubits:
        raise StateError(f"Qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def fidelity_dm(rho: DensityMatrix, target: Ket) -> float:
    """<target| rho |target>."""
    if rho.n_qubits != target.n_qubits:
        raise StateError(f"Qubit counts differ: {rho.n_qubits} vs {target.n_qubits}")
    value = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes).real
    return max(0.0, float(value))


def purity(rho: DensityMatrix) -> float:
    return float(np.einsum("ij,ji->", rho.matrix, rho.matrix).real)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """
    Trace out every qubit not in ``keep``.

    Kept qubits retain their relative order.
    """
    keep = sorted(set(keep))
    n = rho.n_qubits
    for qubit in keep:
        _check_qubit(n, qubit)
    if not keep:
        raise StateError("Partial trace must keep at least one qubit")
    tensor = rho.tensor()
    remaining = n
    # Descending order keeps the lower axis numbers valid.
    for qubit in sorted(set(range(1, n + 1)) - set(keep), reverse=True):
        tensor = np.trace(tensor, axis1=qubit - 1, axis2=remaining + qubit - 1)
        remaining -= 1
    dimension = 2 ** len(keep)
    return DensityMatrix(tensor.reshape(dimension, dimension), validate=False)


def _evolve(tensor: np.ndarray, operator: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    tensor = _apply_axis(tensor, operator, qubit - 1)
    return _apply_axis(tensor, operator.conj(), n_qubits + qubit - 1)


def evolve_dm(
    rho: DensityMatrix, gate: np.ndarray, qubit: int, *, validate: bool = True
) -> DensityMatrix:
    """U rho U^dagger for a single-qubit unitary U."""
    _check_qubit(rho.n_qubits, qubit)
    gate = np.asarray(gate, dtype=complex)
    if validate and not is_unitary(gate):
        raise StateError("Gate is not unitary", qubit=qubit)
    tensor = _evolve(rho.tensor(), gate, qubit, rho.n_qubits)
    dimension = 2**rho.n_qubits
    return DensityMatrix(tensor.reshape(dimension, dimension), validate=False)


def project_dm(
    rho: DensityMatrix, qubit: int, onto: np.ndarray, *, force: bool = False
) -> tuple[float, DensityMatrix | None]:
    """
    Density-matrix analogue of ``project``: P rho P / p with P = |onto><onto|.

    Raises:
        ZeroProbabilityError: If p < ZERO_PROBABILITY and force is False
    """
    _check_qubit(rho.n_qubits, qubit)
    onto = _check_vector(onto)
    projector = np.outer(onto, onto.conj())
    tensor = _evolve(rho.tensor(), projector, qubit, rho.n_qubits)
    dimension = 2**rho.n_qubits
    matrix = tensor.reshape(dimension, dimension)
    probability = float(np.trace(matrix).real)
    if probability < ZERO_PROBABILITY:
        if force:
            return probability, None
        raise ZeroProbabilityError(
            f"Projection probability {probability!r} is negligible", qubit=qubit
        )
    return probability, DensityMatrix(matrix / probability, validate=False)


def expectation(state: Ket, operator: np.ndarray) -> complex:
    """<state| O |state> for a full-register operator O."""
    operator = np.asarray(operator, dtype=complex)
    dimension = state.amplitudes.size
    if operator.shape != (dimension, dimension):
        raise StateError(f"Operator shape {operator.shape} does not match the state")
    return complex(np.vdot(state.amplitudes, operator @ state.amplitudes))


__all__ = [
    "DensityMatrix",
    "Ket",
    "StateError",
    "ZeroProbabilityError",
    "apply_1q",
    "apply_2q",
    "apply_cz",
    "contract",
    "evolve_dm",
    "expectation",
    "fidelity_dm",
    "overlap_fidelity",
    "partial_trace",
    "permute",
    "permute_dm",
    "project",
    "project_dm",
    "purity",
]
