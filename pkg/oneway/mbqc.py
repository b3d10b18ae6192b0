"""
Adaptive measurement patterns.

A Pattern measures qubits one at a time in the equatorial plane or the
computational basis. Angles may flip sign on the parity of earlier outcomes
(feed-forward of the first kind) and output qubits carry Pauli byproducts
whose exponents are outcome parities (feed-forward of the second kind).

Outcome s = 0 always means the "+" vector |0> + e^{-i angle}|1>.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .cluster import OrderingMap
from .sim.gates import X, Z, conjugation_exponents, equatorial_ket, gate_word, z_ket
from .sim.statevec import (
    ZERO_PROBABILITY,
    Ket,
    apply_1q,
    contract,
    permute,
    project,
)

logger = logging.getLogger(__name__)

ANGLE_TOLERANCE = 1e-9
TWO_PI = 2 * math.pi


class PatternError(Exception):
    """Raised for malformed patterns or frames."""

    def __init__(self, message: str, step: int | None = None):
        self.message = message
        self.step = step
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        if self.step is not None:
            return f"{self.message} (step: {self.step})"
        return self.message


class ImpossibleBranchError(PatternError):
    """A forced outcome sequence has negligible probability."""

    def __init__(self, message: str, outcomes: tuple[int, ...], step: int | None = None):
        self.outcomes = tuple(outcomes)
        super().__init__(f"{message} (outcomes: {''.join(map(str, outcomes))})", step)


class Plane(str, Enum):
    EQUATORIAL = "equatorial"
    Z_BASIS = "z_basis"


def wrap_angle(angle: float) -> float:
    """Map an angle onto [0, 2*pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    if TWO_PI - wrapped < ANGLE_TOLERANCE:
        return 0.0
    return wrapped


def same_angle(a: float, b: float) -> bool:
    difference = math.fmod(a - b, TWO_PI)
    return min(abs(difference), TWO_PI - abs(difference)) < ANGLE_TOLERANCE


def basis_kets(
    plane: Plane, angle: float = 0.0, local: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """The (s=0, s=1) measurement vectors, rotated by the ``local`` gate word."""
    if plane is Plane.Z_BASIS:
        kets = (z_ket(0), z_ket(1))
    else:
        kets = (equatorial_ket(angle, 0), equatorial_ket(angle, 1))
    if local is None:
        return kets
    unitary = gate_word(local)
    return unitary @ kets[0], unitary @ kets[1]


@dataclass(frozen=True)
class MeasurementSpec:
    """One measurement of a pattern."""

    qubit: int
    plane: Plane = Plane.EQUATORIAL
    angle: float = 0.0
    sign_deps: frozenset[int] = frozenset()
    label: str = ""
    local: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "plane", Plane(self.plane))
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "sign_deps", frozenset(int(q) for q in self.sign_deps))

    def effective_angle(self, outcomes: Mapping[int, int], adaptive: bool = True) -> float:
        """(-1)^parity(sign_deps) * angle; the parity is skipped when not adaptive."""
        if not adaptive:
            return self.angle
        parity = sum(outcomes[q] for q in self.sign_deps) % 2
        return -self.angle if parity else self.angle

    def basis(
        self, outcomes: Mapping[int, int], adaptive: bool = True
    ) -> tuple[np.ndarray, np.ndarray]:
        return basis_kets(self.plane, self.effective_angle(outcomes, adaptive), self.local)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "qubit": self.qubit,
            "plane": self.plane.value,
            "angle": self.angle,
            "sign_deps": sorted(self.sign_deps),
            "label": self.label,
        }
        if self.local is not None:
            data["local"] = self.local
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MeasurementSpec:
        return cls(
            qubit=int(data["qubit"]),
            plane=Plane(data.get("plane", Plane.EQUATORIAL.value)),
            angle=float(data.get("angle", 0.0)),
            sign_deps=frozenset(data.get("sign_deps", ())),
            label=str(data.get("label", "")),
            local=data.get("local"),
        )


@dataclass(frozen=True)
class ByproductRule:
    """Measured qubits whose outcome parities give the X and Z exponents."""

    qubit: int
    x: frozenset[int] = frozenset()
    z: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "x", frozenset(int(q) for q in self.x))
        object.__setattr__(self, "z", frozenset(int(q) for q in self.z))


@dataclass(frozen=True)
class Pattern:
    """Ordered measurements, output qubits and byproduct rules."""

    steps: tuple[MeasurementSpec, ...]
    outputs: tuple[int, ...]
    byproduct_rules: tuple[ByproductRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "outputs", tuple(int(q) for q in self.outputs))
        object.__setattr__(self, "byproduct_rules", tuple(self.byproduct_rules))

    @property
    def n_qubits(self) -> int:
        return len(self.steps) + len(self.outputs)

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(step.qubit for step in self.steps)

    def rule_for(self, qubit: int) -> ByproductRule:
        for rule in self.byproduct_rules:
            if rule.qubit == qubit:
                return rule
        return ByproductRule(qubit)

    def validate(self, n_qubits: int | None = None) -> list[str]:
        """
        Check the pattern's structural invariants.

        Args:
            n_qubits: Register size the pattern must match, if known

        Returns:
            List of error messages, empty when the pattern is valid
        """
        errors = []
        qubits = list(self.measured) + list(self.outputs)
        expected = set(range(1, (n_qubits or self.n_qubits) + 1))
        if not self.outputs:
            errors.append("pattern needs at least one output qubit")
        if len(qubits) != len(set(qubits)) or set(qubits) != expected:
            errors.append(
                f"measured {sorted(self.measured)} and outputs {sorted(self.outputs)} "
                f"must partition qubits 1..{len(expected)}"
            )
        earlier: set[int] = set()
        for index, step in enumerate(self.steps, start=1):
            if step.plane is Plane.Z_BASIS and step.sign_deps:
                errors.append(f"step {index}: z_basis measurement cannot have sign_deps")
            if not step.sign_deps <= earlier:
                late = sorted(step.sign_deps - earlier)
                errors.append(f"step {index}: sign_deps {late} are not measured earlier")
            if step.local is not None:
                try:
                    gate_word(step.local)
                except ValueError as e:
                    errors.append(f"step {index}: {e}")
            earlier.add(step.qubit)
        seen_rules: set[int] = set()
        for rule in self.byproduct_rules:
            if rule.qubit not in self.outputs:
                errors.append(f"byproduct rule for non-output qubit {rule.qubit}")
            if rule.qubit in seen_rules:
                errors.append(f"duplicate byproduct rule for qubit {rule.qubit}")
            seen_rules.add(rule.qubit)
            if not (rule.x | rule.z) <= set(self.measured):
                errors.append(f"byproduct rule for qubit {rule.qubit} uses unmeasured qubits")
        return errors

    def check(self, n_qubits: int | None = None) -> None:
        errors = self.validate(n_qubits)
        if errors:
            for error in errors:
                logger.warning(f"Pattern validation: {error}")
            raise PatternError("Invalid pattern: " + "; ".join(errors))

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": [step.to_dict() for step in self.steps],
            "outputs": list(self.outputs),
            "byproduct_rules": {
                str(rule.qubit): {"x": sorted(rule.x), "z": sorted(rule.z)}
                for rule in self.byproduct_rules
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Pattern:
        if not isinstance(data, Mapping):
            raise PatternError("Pattern document must be a mapping")
        try:
            steps = tuple(MeasurementSpec.from_dict(s) for s in data.get("steps", []))
            rules = tuple(
                ByproductRule(int(qubit), frozenset(r.get("x", ())), frozenset(r.get("z", ())))
                for qubit, r in dict(data.get("byproduct_rules", {})).items()
            )
            pattern = cls(steps, tuple(data.get("outputs", ())), rules)
        except (KeyError, TypeError, ValueError) as e:
            raise PatternError(f"Malformed pattern document: {e}") from e
        pattern.check()
        return pattern


def load_pattern(path: Path) -> Pattern:
    """Read a Pattern JSON document."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PatternError(f"Invalid pattern JSON at line {e.lineno}: {e.msg}") from e
    return Pattern.from_dict(data)


@dataclass(frozen=True)
class PauliFrame:
    """X and Z exponents per output qubit, in output order."""

    qubits: tuple[int, ...]
    x: tuple[int, ...]
    z: tuple[int, ...]

    @classmethod
    def identity(cls, qubits: Iterable[int]) -> PauliFrame:
        qubits = tuple(qubits)
        return cls(qubits, (0,) * len(qubits), (0,) * len(qubits))

    @classmethod
    def from_rules(cls, pattern: Pattern, outcomes: Mapping[int, int]) -> PauliFrame:
        rules = [pattern.rule_for(q) for q in pattern.outputs]
        return cls(
            pattern.outputs,
            tuple(sum(outcomes[q] for q in rule.x) % 2 for rule in rules),
            tuple(sum(outcomes[q] for q in rule.z) % 2 for rule in rules),
        )

    @property
    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    def describe(self) -> str:
        """E.g. ``"4:XZ"``; identity positions are written as ``I``."""
        parts = []
        for qubit, x, z in zip(self.qubits, self.x, self.z):
            letters = ("X" if x else "") + ("Z" if z else "")
            parts.append(f"{qubit}:{letters or 'I'}")
        return " ".join(parts)


@dataclass
class BranchResult:
    outcomes: dict[int, int]
    probability: float
    output_state: Ket | None
    frame: PauliFrame
    count: int | None = None

    @property
    def bits(self) -> tuple[int, ...]:
        """Outcomes in step order."""
        return tuple(self.outcomes.values())


@dataclass(frozen=True)
class Enumerate:
    """Every one of the 2^m branches, in lexicographic outcome order."""


@dataclass(frozen=True)
class Sample:
    seed: int = 0
    shots: int = 100_000

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise PatternError(f"Seed must be in [0, 2^64), got {self.seed}")
        if self.shots < 1:
            raise PatternError(f"Shots must be positive, got {self.shots}")


@dataclass(frozen=True)
class Force:
    outcomes: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(int(s) for s in self.outcomes))
        if any(s not in (0, 1) for s in self.outcomes):
            raise PatternError(f"Forced outcomes must be bits, got {self.outcomes}")


RunMode = Enumerate | Sample | Force


@dataclass(frozen=True)
class _Node:
    bits: tuple[int, ...]
    probability: float
    state: Ket | None
    kets: tuple[np.ndarray, ...]


def outcome_map(pattern: Pattern, bits: Iterable[int]) -> dict[int, int]:
    return dict(zip(pattern.measured, bits))


def _children(node: _Node, pattern: Pattern, index: int, adaptive: bool) -> list[_Node]:
    step = pattern.steps[index]
    kets = step.basis(outcome_map(pattern, node.bits), adaptive)
    children = []
    for s, ket in enumerate(kets):
        if node.state is None:
            children.append(_Node(node.bits + (s,), 0.0, None, node.kets + (ket,)))
            continue
        probability, collapsed = project(node.state, step.qubit, ket, force=True)
        if collapsed is None:
            logger.debug(f"Branch {node.bits + (s,)} has negligible probability")
        children.append(
            _Node(node.bits + (s,), node.probability * probability, collapsed, node.kets + (ket,))
        )
    return children


def _output_state(pattern: Pattern, node: _Node) -> Ket | None:
    if node.state is None:
        return None
    state = node.state
    # Descending so that lower qubit numbers stay valid.
    for qubit, ket in sorted(zip(pattern.measured, node.kets), key=lambda p: -p[0]):
        state = contract(state, qubit, ket)
    ascending = sorted(pattern.outputs)
    if list(pattern.outputs) != ascending:
        state = permute(state, [ascending.index(q) + 1 for q in pattern.outputs])
    return state


def _result(pattern: Pattern, node: _Node, count: int | None = None) -> BranchResult:
    outcomes = outcome_map(pattern, node.bits)
    return BranchResult(
        outcomes=outcomes,
        probability=node.probability,
        output_state=_output_state(pattern, node),
        frame=PauliFrame.from_rules(pattern, outcomes),
        count=count,
    )


def measure_equatorial(
    state: Ket,
    qubit: int,
    angle: float,
    *,
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[int, float, Ket]:
    """
    Measure one qubit in the equatorial basis at ``angle``.

    The outcome is forced when given, otherwise drawn from ``rng``.

    Returns:
        Tuple of (s, probability of s, collapsed ket)

    Raises:
        ImpossibleBranchError: If the forced outcome has negligible probability
    """
    kets = basis_kets(Plane.EQUATORIAL, angle)
    if outcome is None:
        rng = rng if rng is not None else np.random.default_rng()
        p0, _ = project(state, qubit, kets[0], force=True)
        outcome = 0 if rng.random() < p0 else 1
    probability, collapsed = project(state, qubit, kets[outcome], force=True)
    if collapsed is None:
        raise ImpossibleBranchError("Forced outcome is impossible", (outcome,))
    return outcome, probability, collapsed


def run_pattern(
    state: Ket, pattern: Pattern, mode: RunMode | None = None, *, adaptive: bool = True
) -> list[BranchResult]:
    """
    Execute a pattern.

    Args:
        state: Input ket on pattern.n_qubits qubits
        pattern: Pattern to run
        mode: Enumerate (default), Sample or Force
        adaptive: Apply sign dependencies; False simulates missing feed-forward

    Returns:
        Branch results in lexicographic outcome order. Enumerate includes
        zero-probability branches with ``output_state`` None; Sample only
        returns branches that received shots.

    Raises:
        PatternError: If the pattern does not fit the state
        ImpossibleBranchError: If a forced branch has negligible probability
    """
    mode = mode if mode is not None else Enumerate()
    pattern.check(state.n_qubits)
    logger.debug(
        f"Running pattern: {state.n_qubits} qubits, {len(pattern.steps)} steps, "
        f"mode {type(mode).__name__}"
    )
    root = _Node((), 1.0, state, ())
    if isinstance(mode, Force):
        return [_run_forced(root, pattern, mode, adaptive)]
    if isinstance(mode, Sample):
        return _run_sampled(root, pattern, mode, adaptive)
    nodes = [root]
    for index in range(len(pattern.steps)):
        nodes = [child for node in nodes for child in _children(node, pattern, index, adaptive)]
    return [_result(pattern, node) for node in nodes]


def _run_forced(root: _Node, pattern: Pattern, mode: Force, adaptive: bool) -> BranchResult:
    if len(mode.outcomes) != len(pattern.steps):
        raise PatternError(
            f"Forced {len(mode.outcomes)} outcomes for {len(pattern.steps)} measurements"
        )
    node = root
    for index, s in enumerate(mode.outcomes):
        node = _children(node, pattern, index, adaptive)[s]
        if node.state is None or node.probability < ZERO_PROBABILITY:
            raise ImpossibleBranchError(
                "Forced branch has negligible probability", mode.outcomes, step=index + 1
            )
    return _result(pattern, node)


def _run_sampled(root: _Node, pattern: Pattern, mode: Sample, adaptive: bool) -> list[BranchResult]:
    m = len(pattern.steps)
    rng = np.random.Generator(np.random.Philox(key=mode.seed))
    # Row i belongs to shot i, so results do not depend on expansion order.
    draws = rng.random((mode.shots, m))
    prefixes = np.zeros(mode.shots, dtype=np.int64)
    frontier = {(): root}
    for index in range(m):
        thresholds = np.empty(mode.shots)
        expanded: dict[tuple[int, ...], _Node] = {}
        for code in np.unique(prefixes):
            node = frontier[_code_bits(int(code), index)]
            children = _children(node, pattern, index, adaptive)
            for child in children:
                expanded[child.bits] = child
            thresholds[prefixes == code] = children[0].probability / node.probability
        prefixes = prefixes * 2 + (draws[:, index] >= thresholds)
        frontier = expanded
    counts = np.bincount(prefixes, minlength=2**m)
    return [
        _result(pattern, frontier[_code_bits(code, m)], count=int(counts[code]))
        for code in range(2**m)
        if counts[code]
    ]


def _code_bits(code: int, length: int) -> tuple[int, ...]:
    return tuple((code >> (length - 1 - k)) & 1 for k in range(length))


def _check_frame(state: Ket, frame: PauliFrame) -> None:
    if len(frame.qubits) != state.n_qubits:
        raise PatternError(
            f"Frame covers {len(frame.qubits)} qubits, state has {state.n_qubits}"
        )


def apply_frame(state: Ket, frame: PauliFrame) -> Ket:
    """Correct an output: X^x then Z^z on each output position."""
    _check_frame(state, frame)
    for position, (x, z) in enumerate(zip(frame.x, frame.z), start=1):
        if x:
            state = apply_1q(state, X, position)
        if z:
            state = apply_1q(state, Z, position)
    return state


def apply_byproduct(state: Ket, frame: PauliFrame) -> Ket:
    """Inverse of apply_frame: Z^z then X^x."""
    _check_frame(state, frame)
    for position, (x, z) in enumerate(zip(frame.x, frame.z), start=1):
        if z:
            state = apply_1q(state, Z, position)
        if x:
            state = apply_1q(state, X, position)
    return state


def _plane_of(ket: np.ndarray) -> tuple[Plane, float] | None:
    """Recognize a ket as |0> (Z basis, s=0) or an equatorial "+" vector."""
    a0, a1 = ket
    if abs(a1) < ANGLE_TOLERANCE:
        return Plane.Z_BASIS, 0.0
    if abs(abs(a0) ** 2 - 0.5) < ANGLE_TOLERANCE:
        return Plane.EQUATORIAL, wrap_angle(-float(np.angle(a1 / a0)))
    return None


def _lab_step(step: MeasurementSpec, ordering: OrderingMap) -> MeasurementSpec:
    word = ordering.local_words[step.qubit - 1]
    label = ordering.label_of(step.qubit).value
    if step.local is not None:
        return replace(step, local=word + step.local, label=label)
    unitary = gate_word(word)
    target = _plane_of(unitary @ basis_kets(step.plane, step.angle)[0])
    if target is not None and step.sign_deps:
        mirrored = _plane_of(unitary @ basis_kets(step.plane, -step.angle)[0])
        if (
            mirrored is None
            or target[0] is not Plane.EQUATORIAL
            or mirrored[0] is not Plane.EQUATORIAL
            or not same_angle(mirrored[1], -target[1])
        ):
            target = None
    if target is None:
        return replace(step, local=word, label=label)
    plane, angle = target
    return replace(step, plane=plane, angle=angle, label=label)


def _lab_rule(rule: ByproductRule, unitary: np.ndarray) -> ByproductRule:
    (a, b), (c, d) = conjugation_exponents(unitary)
    empty: frozenset[int] = frozenset()
    x = (rule.x if a else empty) ^ (rule.z if c else empty)
    z = (rule.x if b else empty) ^ (rule.z if d else empty)
    return ByproductRule(rule.qubit, x, z)


def lab_pattern(pattern: Pattern, ordering: OrderingMap) -> Pattern:
    """
    Rewrite a pattern written for the chain cluster so that it runs on the
    lab state ``to_lab(chain, ordering)``.

    Each basis becomes U_j|m_s>. Steps whose rotated basis is again
    equatorial or computational get a new plane and angle; any other basis
    keeps its plane and angle and records U_j as a ``local`` gate word.
    Byproduct rules are conjugated through U_j of their output qubit.

    Raises:
        PatternError: If the pattern size does not match the ordering
    """
    if pattern.n_qubits != len(ordering.assignment):
        raise PatternError(
            f"Pattern has {pattern.n_qubits} qubits, ordering {ordering.name} "
            f"has {len(ordering.assignment)}"
        )
    steps = tuple(_lab_step(step, ordering) for step in pattern.steps)
    try:
        rules = tuple(
            _lab_rule(pattern.rule_for(q), ordering.local_unitary(q)) for q in pattern.outputs
        )
    except ValueError as e:
        raise PatternError(str(e)) from e
    return Pattern(steps, pattern.outputs, rules)


__all__ = [
    "BranchResult",
    "ByproductRule",
    "Enumerate",
    "Force",
    "ImpossibleBranchError",
    "MeasurementSpec",
    "Pattern",
    "PatternError",
    "PauliFrame",
    "Plane",
    "RunMode",
    "Sample",
    "apply_byproduct",
    "apply_frame",
    "basis_kets",
    "lab_pattern",
    "load_pattern",
    "measure_equatorial",
    "outcome_map",
    "run_pattern",
    "same_angle",
    "wrap_angle",
]
