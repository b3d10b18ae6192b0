"""
Graph specifications, cluster-state preparation and the photonic encoding.

A four-qubit chain is encoded on two photons, A and B, each carrying a
polarization qubit (pi) and a momentum qubit (k). An OrderingMap says which
physical qubit plays each logical chain position and which local unitary
turns the chain cluster into the state emitted by the source.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .sim.gates import PAULIS, PLUS, gate_word, kron_all
from .sim.statevec import (
    DensityMatrix,
    Ket,
    StateError,
    apply_1q,
    apply_cz,
    expectation,
    permute,
)

logger = logging.getLogger(__name__)

PHASE_TOLERANCE = 1e-9


class ClusterError(Exception):
    """Raised for invalid graphs, orderings or stabilizer requests."""

    def __init__(self, message: str, ordering: str | None = None):
        self.message = message
        self.ordering = ordering
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        if self.ordering is not None:
            return f"{self.message} (ordering: {self.ordering})"
        return self.message


@dataclass(frozen=True)
class GraphSpec:
    """Simple undirected graph on qubits 1..n_qubits."""

    n_qubits: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple((int(i), int(j)) for i, j in self.edges)
        )
        errors = self.validate()
        if errors:
            raise ClusterError("Invalid graph: " + "; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        if not 1 <= self.n_qubits <= 12:
            errors.append(f"n_qubits must be in 1..12, got {self.n_qubits}")
        seen: set[frozenset[int]] = set()
        for i, j in self.edges:
            if i == j:
                errors.append(f"self-loop on qubit {i}")
            elif not (1 <= i <= self.n_qubits and 1 <= j <= self.n_qubits):
                errors.append(f"edge ({i}, {j}) references a missing qubit")
            elif frozenset((i, j)) in seen:
                errors.append(f"duplicate edge ({i}, {j})")
            seen.add(frozenset((i, j)))
        return errors

    @classmethod
    def chain(cls, n_qubits: int) -> GraphSpec:
        return cls(n_qubits, tuple((q, q + 1) for q in range(1, n_qubits)))

    def neighbors(self, qubit: int) -> tuple[int, ...]:
        found = [j for i, j in self.edges if i == qubit]
        found += [i for i, j in self.edges if j == qubit]
        return tuple(sorted(found))

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n_qubits, "edges": [list(edge) for edge in self.edges]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GraphSpec:
        if not isinstance(data, Mapping) or "n" not in data:
            raise ClusterError("Graph document must be a mapping with an 'n' key")
        try:
            edges = tuple(tuple(edge) for edge in data.get("edges", []))
            if any(len(edge) != 2 for edge in edges):
                raise ClusterError("Every edge must have exactly two endpoints")
            return cls(int(data["n"]), edges)
        except (TypeError, ValueError) as e:
            raise ClusterError(f"Malformed graph document: {e}") from e


def build_cluster(spec: GraphSpec) -> Ket:
    """|+>^n followed by CZ on every edge."""
    state = Ket.product(*([PLUS] * spec.n_qubits))
    for i, j in spec.edges:
        state = apply_cz(state, i, j)
    return state


class PhysicalLabel(str, Enum):
    PI_A = "pi_A"
    K_A = "k_A"
    PI_B = "pi_B"
    K_B = "k_B"

    @property
    def is_polarization(self) -> bool:
        return self in (PhysicalLabel.PI_A, PhysicalLabel.PI_B)


# Photon A then photon B, polarization before momentum.
PHYSICAL_ORDER = (
    PhysicalLabel.PI_A,
    PhysicalLabel.K_A,
    PhysicalLabel.PI_B,
    PhysicalLabel.K_B,
)

# Basis letters: H/V for polarization, l/r for momentum; first letter is bit 0.
_LETTERS = {True: "HV", False: "lr"}

# Amplitude and letters (in PHYSICAL_ORDER) of each term of the source state.
_SOURCE_TERMS = (
    (+0.5, "HlHr"),
    (-0.5, "HrHl"),
    (+0.5, "VrVl"),
    (+0.5, "VlVr"),
)


@dataclass(frozen=True)
class OrderingMap:
    """
    Assignment of physical qubits to chain positions plus local unitaries.

    ``assignment[j-1]`` is the physical qubit at logical position j and
    ``local_words[j-1]`` spells U_j as a gate word.
    """

    name: str
    assignment: tuple[PhysicalLabel, ...]
    local_words: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "assignment", tuple(PhysicalLabel(label) for label in self.assignment)
        )
        object.__setattr__(self, "local_words", tuple(self.local_words))
        if sorted(self.assignment) != sorted(PHYSICAL_ORDER):
            raise ClusterError(
                "Assignment must use each physical qubit once", ordering=self.name
            )
        if len(self.local_words) != len(self.assignment):
            raise ClusterError("One local unitary per position required", ordering=self.name)
        try:
            for word in self.local_words:
                gate_word(word)
        except ValueError as e:
            raise ClusterError(str(e), ordering=self.name) from e

    def local_unitary(self, position: int) -> np.ndarray:
        return gate_word(self.local_words[position - 1])

    def local_unitaries(self) -> tuple[np.ndarray, ...]:
        return tuple(gate_word(word) for word in self.local_words)

    def label_of(self, position: int) -> PhysicalLabel:
        return self.assignment[position - 1]

    def position_of(self, label: PhysicalLabel | str) -> int:
        return self.assignment.index(PhysicalLabel(label)) + 1

    def compensated(self, position: int, word: str) -> OrderingMap:
        """Ordering with ``word`` applied after U at ``position``."""
        words = list(self.local_words)
        words[position - 1] = word + words[position - 1]
        return OrderingMap(f"{self.name}+{word}@{position}", self.assignment, tuple(words))

    def global_phase(self) -> complex:
        """
        Phase c with to_physical(to_lab(chain)) = c * lab_cluster().

        Raises:
            ClusterError: If the two states are not equal up to a phase
        """
        produced = to_physical(to_lab(build_cluster(GraphSpec.chain(4)), self), self)
        phase = complex(np.vdot(lab_cluster().amplitudes, produced.amplitudes))
        if abs(abs(phase) - 1) > PHASE_TOLERANCE:
            raise ClusterError(
                f"Ordering does not reproduce the source state (overlap {abs(phase):.6f})",
                ordering=self.name,
            )
        logger.debug(f"Ordering {self.name} global phase {phase:.6f}")
        return phase


ORDERINGS: dict[str, OrderingMap] = {
    "a": OrderingMap(
        "a",
        (PhysicalLabel.K_B, PhysicalLabel.K_A, PhysicalLabel.PI_A, PhysicalLabel.PI_B),
        ("XH", "Z", "I", "H"),
    ),
    "b": OrderingMap(
        "b",
        (PhysicalLabel.PI_B, PhysicalLabel.PI_A, PhysicalLabel.K_A, PhysicalLabel.K_B),
        ("H", "Z", "X", "ZH"),
    ),
    "c": OrderingMap(
        "c",
        (PhysicalLabel.K_A, PhysicalLabel.K_B, PhysicalLabel.PI_B, PhysicalLabel.PI_A),
        ("ZH", "X", "I", "H"),
    ),
    "d": OrderingMap(
        "d",
        (PhysicalLabel.PI_A, PhysicalLabel.PI_B, PhysicalLabel.K_B, PhysicalLabel.K_A),
        ("H", "I", "X", "ZH"),
    ),
}


def get_ordering(name: str) -> OrderingMap:
    try:
        return ORDERINGS[name]
    except KeyError:
        raise ClusterError(
            f"Unknown ordering, expected one of {sorted(ORDERINGS)}", ordering=name
        ) from None


def to_lab(state: Ket, ordering: OrderingMap) -> Ket:
    """Apply U_j to logical qubit j; the result stays in logical order."""
    if state.n_qubits != len(ordering.assignment):
        raise ClusterError(
            f"Lab mapping needs {len(ordering.assignment)} qubits, got {state.n_qubits}",
            ordering=ordering.name,
        )
    for position, unitary in enumerate(ordering.local_unitaries(), start=1):
        state = apply_1q(state, unitary, position)
    return state


def to_physical(state: Ket, ordering: OrderingMap) -> Ket:
    """Reorder a logical-order ket into PHYSICAL_ORDER."""
    if state.n_qubits != len(PHYSICAL_ORDER):
        raise ClusterError("Physical reordering needs 4 qubits", ordering=ordering.name)
    return permute(state, [ordering.position_of(label) for label in PHYSICAL_ORDER])


def lab_cluster() -> Ket:
    """The source state written directly in PHYSICAL_ORDER."""
    amplitudes = np.zeros(16, dtype=complex)
    for amplitude, letters in _SOURCE_TERMS:
        bits = [
            _LETTERS[label.is_polarization].index(letter)
            for label, letter in zip(PHYSICAL_ORDER, letters)
        ]
        amplitudes[int("".join(map(str, bits)), 2)] += amplitude
    return Ket(amplitudes)


def describe_lab_ket(
    state: Ket, labels: Sequence[PhysicalLabel] = PHYSICAL_ORDER, tol: float = 1e-9
) -> str:
    """Format the non-zero amplitudes with H/V and l/r basis letters."""
    labels = [PhysicalLabel(label) for label in labels]
    if len(labels) != state.n_qubits:
        raise ClusterError(f"Need {state.n_qubits} labels, got {len(labels)}")
    terms = []
    for index, amplitude in enumerate(state.amplitudes):
        if abs(amplitude) < tol:
            continue
        bits = format(index, f"0{state.n_qubits}b")
        letters = "".join(
            _LETTERS[label.is_polarization][int(bit)] for label, bit in zip(labels, bits)
        )
        if abs(amplitude.imag) < tol:
            coefficient = f"{amplitude.real:+.4f}"
        else:
            coefficient = f"({amplitude.real:+.4f}{amplitude.imag:+.4f}j)"
        terms.append(f"{coefficient}|{letters}>")
    return " ".join(terms)


# i-power and letter of single-qubit Pauli products, e.g. X*Y = i Z.
_PRODUCTS = {
    ("X", "Y"): (1, "Z"),
    ("Y", "Z"): (1, "X"),
    ("Z", "X"): (1, "Y"),
    ("Y", "X"): (3, "Z"),
    ("Z", "Y"): (3, "X"),
    ("X", "Z"): (3, "Y"),
}


def _letter_product(a: str, b: str) -> tuple[int, str]:
    if a == "I":
        return 0, b
    if b == "I":
        return 0, a
    if a == b:
        return 0, "I"
    return _PRODUCTS[(a, b)]


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of I, X, Y, Z, e.g. ``PauliString(-1, "XZII")``."""

    sign: int
    letters: str

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ClusterError(f"Pauli sign must be +1 or -1, got {self.sign}")
        if not self.letters or set(self.letters) - set(PAULIS):
            raise ClusterError(f"Invalid Pauli letters '{self.letters}'")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def __mul__(self, other: PauliString) -> PauliString:
        if other.n_qubits != self.n_qubits:
            raise ClusterError("Pauli strings act on different qubit counts")
        power = 0
        letters = []
        for a, b in zip(self.letters, other.letters):
            p, letter = _letter_product(a, b)
            power += p
            letters.append(letter)
        if power % 2:
            raise ClusterError(f"{self} and {other} anticommute")
        sign = self.sign * other.sign * (-1 if power % 4 == 2 else 1)
        return PauliString(sign, "".join(letters))

    def __str__(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.letters

    def to_matrix(self) -> np.ndarray:
        return self.sign * kron_all(*(PAULIS[letter] for letter in self.letters))

    def expectation(self, state: Ket) -> float:
        return expectation(state, self.to_matrix()).real

    def conjugated(self, unitaries: Sequence[np.ndarray]) -> PauliString:
        """
        (U_1 x ... x U_n) P (U_1 x ... x U_n)^dagger as a Pauli string.

        Raises:
            ClusterError: If some U_j maps the letter outside the Pauli group
        """
        if len(unitaries) != self.n_qubits:
            raise ClusterError("One unitary per qubit required")
        sign = self.sign
        letters = []
        for letter, unitary in zip(self.letters, unitaries):
            image = unitary @ PAULIS[letter] @ unitary.conj().T
            for candidate, pauli in PAULIS.items():
                coefficient = np.trace(pauli @ image) / 2
                if abs(abs(coefficient) - 1) < PHASE_TOLERANCE:
                    if abs(coefficient.imag) > PHASE_TOLERANCE:
                        raise ClusterError("Conjugation produced a non-Hermitian image")
                    sign *= 1 if coefficient.real > 0 else -1
                    letters.append(candidate)
                    break
            else:
                raise ClusterError(f"Unitary is not Clifford on letter {letter}")
        return PauliString(sign, "".join(letters))


@dataclass(frozen=True)
class StabilizerGroup:
    elements: tuple[PauliString, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.elements)

    @property
    def n_qubits(self) -> int:
        return self.elements[0].n_qubits

    def is_closed(self) -> bool:
        keys = {(s.sign, s.letters) for s in self.elements}
        for a in self.elements:
            for b in self.elements:
                product = a * b
                if (product.sign, product.letters) not in keys:
                    return False
        return True

    def stabilizes(self, state: Ket, tol: float = 1e-9) -> bool:
        return all(abs(s.expectation(state) - 1) < tol for s in self.elements)

    def conjugated(self, unitaries: Sequence[np.ndarray]) -> StabilizerGroup:
        return StabilizerGroup(tuple(s.conjugated(unitaries) for s in self.elements))


def stabilizer_generators(spec: GraphSpec) -> tuple[PauliString, ...]:
    """X on qubit i times Z on each neighbor, for i = 1..n."""
    generators = []
    for qubit in range(1, spec.n_qubits + 1):
        letters = ["I"] * spec.n_qubits
        letters[qubit - 1] = "X"
        for neighbor in spec.neighbors(qubit):
            letters[neighbor - 1] = "Z"
        generators.append(PauliString(1, "".join(letters)))
    return tuple(generators)


def stabilizer_group(
    spec: GraphSpec, local: OrderingMap | Sequence[np.ndarray] | None = None
) -> StabilizerGroup:
    """
    All 2^n products of the generators, optionally conjugated by local unitaries.

    Elements are ordered by the bitmask of generators used, bit i for
    generator i+1, so the identity comes first.
    """
    if spec.n_qubits != 4:
        raise ClusterError(f"Full stabilizer group requires 4 qubits, got {spec.n_qubits}")
    generators = stabilizer_generators(spec)
    elements = []
    for mask in range(2 ** len(generators)):
        element = PauliString(1, "I" * spec.n_qubits)
        for index, generator in enumerate(generators):
            if mask >> index & 1:
                element = element * generator
        elements.append(element)
    group = StabilizerGroup(tuple(elements))
    if local is None:
        return group
    unitaries = local.local_unitaries() if isinstance(local, OrderingMap) else local
    return group.conjugated(list(unitaries))


def stabilizer_fidelity(rho: DensityMatrix, group: StabilizerGroup) -> float:
    """(1 / 2^n) * sum of tr(rho S) over the group."""
    if rho.n_qubits != group.n_qubits:
        raise StateError(f"Group acts on {group.n_qubits} qubits, state has {rho.n_qubits}")
    total = sum(np.einsum("ij,ji->", rho.matrix, s.to_matrix()).real for s in group)
    return float(total) / 2**rho.n_qubits
