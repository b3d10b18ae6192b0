"""
Noise models and the density-matrix pattern path.

White noise mixes a pure state with the maximally mixed state; the local
depolarizing channel acts on one qubit at a time. Noisy states run through
the same Pattern objects as pure ones.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from .mbqc import (
    Enumerate,
    Force,
    ImpossibleBranchError,
    Pattern,
    PatternError,
    PauliFrame,
    RunMode,
    outcome_map,
)
from .sim.gates import X, Y, Z
from .sim.statevec import (
    ZERO_PROBABILITY,
    DensityMatrix,
    Ket,
    evolve_dm,
    partial_trace,
    permute_dm,
    project_dm,
)

logger = logging.getLogger(__name__)


class NoiseError(Exception):
    """Raised for out-of-range noise parameters."""

    def __init__(self, message: str, parameter: str | None = None):
        self.message = message
        self.parameter = parameter
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        if self.parameter is not None:
            return f"{self.message} (parameter: {self.parameter})"
        return self.message


def _check_probability(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise NoiseError(f"{name} must be in [0, 1], got {value}", parameter=name)


def apply_white_noise(state: Ket, p: float) -> DensityMatrix:
    """p |psi><psi| + (1 - p) I / 2^n."""
    _check_probability(p, "white_p")
    dimension = state.amplitudes.size
    pure = np.outer(state.amplitudes, state.amplitudes.conj())
    return DensityMatrix(p * pure + (1 - p) * np.eye(dimension) / dimension)


def depolarize(rho: DensityMatrix, qubit: int, lam: float) -> DensityMatrix:
    """(1 - lam) rho + lam / 3 (X rho X + Y rho Y + Z rho Z) on one qubit."""
    _check_probability(lam, "depolarizing")
    if lam == 0:
        return rho
    mixed = sum(evolve_dm(rho, pauli, qubit).matrix for pauli in (X, Y, Z))
    return DensityMatrix((1 - lam) * rho.matrix + lam / 3 * mixed)


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise visibility and optional per-qubit depolarizing strengths."""

    white_p: float = 1.0
    depolarizing: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "white_p", float(self.white_p))
        _check_probability(self.white_p, "white_p")
        if self.depolarizing is not None:
            object.__setattr__(
                self, "depolarizing", tuple(float(lam) for lam in self.depolarizing)
            )
            for lam in self.depolarizing:
                _check_probability(lam, "depolarizing")

    @property
    def is_ideal(self) -> bool:
        return self.white_p == 1.0 and not any(self.depolarizing or ())

    def apply(self, state: Ket) -> DensityMatrix:
        """
        Noisy version of a pure state: white noise first, then depolarizing.

        Raises:
            NoiseError: If the depolarizing list does not match the qubit count
        """
        if self.depolarizing is not None and len(self.depolarizing) != state.n_qubits:
            raise NoiseError(
                f"Need {state.n_qubits} depolarizing strengths, got {len(self.depolarizing)}",
                parameter="depolarizing",
            )
        rho = apply_white_noise(state, self.white_p)
        for qubit, lam in enumerate(self.depolarizing or (), start=1):
            rho = depolarize(rho, qubit, lam)
        return rho

    def to_dict(self) -> dict[str, Any]:
        return {
            "white_p": self.white_p,
            "depolarizing": list(self.depolarizing) if self.depolarizing is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NoiseSpec:
        if not isinstance(data, Mapping):
            raise NoiseError("Noise document must be a mapping")
        depolarizing = data.get("depolarizing")
        return cls(
            white_p=float(data.get("white_p", 1.0)),
            depolarizing=tuple(depolarizing) if depolarizing is not None else None,
        )


@dataclass
class DensityBranch:
    outcomes: dict[int, int]
    probability: float
    output_state: DensityMatrix | None
    frame: PauliFrame


def _reduce(pattern: Pattern, rho: DensityMatrix) -> DensityMatrix:
    reduced = partial_trace(rho, pattern.outputs)
    ascending = sorted(pattern.outputs)
    if list(pattern.outputs) != ascending:
        reduced = permute_dm(reduced, [ascending.index(q) + 1 for q in pattern.outputs])
    return reduced


def run_pattern_dm(
    rho: DensityMatrix,
    pattern: Pattern,
    mode: RunMode | None = None,
    *,
    adaptive: bool = True,
) -> list[DensityBranch]:
    """
    Density-matrix analogue of ``run_pattern``.

    Supports Enumerate and Force; measured qubits are traced out of the
    returned output state.

    Raises:
        PatternError: For sampling requests or a pattern that does not fit
    """
    mode = mode if mode is not None else Enumerate()
    if not isinstance(mode, (Enumerate, Force)):
        raise PatternError("Density-matrix runs support enumerate and force modes only")
    pattern.check(rho.n_qubits)
    if isinstance(mode, Force) and len(mode.outcomes) != len(pattern.steps):
        raise PatternError(
            f"Forced {len(mode.outcomes)} outcomes for {len(pattern.steps)} measurements"
        )
    branches: list[tuple[tuple[int, ...], float, DensityMatrix | None]] = [((), 1.0, rho)]
    for index, step in enumerate(pattern.steps):
        expanded = []
        for bits, probability, state in branches:
            kets = step.basis(outcome_map(pattern, bits), adaptive)
            choices = (mode.outcomes[index],) if isinstance(mode, Force) else (0, 1)
            for s in choices:
                if state is None:
                    expanded.append((bits + (s,), 0.0, None))
                    continue
                p, collapsed = project_dm(state, step.qubit, kets[s], force=True)
                if collapsed is None:
                    logger.debug(f"Branch {bits + (s,)} has negligible probability")
                expanded.append((bits + (s,), probability * p, collapsed))
        branches = expanded
    if isinstance(mode, Force):
        _, probability, state = branches[0]
        if state is None or probability < ZERO_PROBABILITY:
            raise ImpossibleBranchError("Forced branch has negligible probability", mode.outcomes)
    results = []
    for bits, probability, state in branches:
        outcomes = outcome_map(pattern, bits)
        results.append(
            DensityBranch(
                outcomes=outcomes,
                probability=probability,
                output_state=_reduce(pattern, state) if state is not None else None,
                frame=PauliFrame.from_rules(pattern, outcomes),
            )
        )
    return results


def apply_frame_dm(rho: DensityMatrix, frame: PauliFrame) -> DensityMatrix:
    """X^x then Z^z on each output position, conjugating rho."""
    if len(frame.qubits) != rho.n_qubits:
        raise PatternError(f"Frame covers {len(frame.qubits)} qubits, state has {rho.n_qubits}")
    for position, (x, z) in enumerate(zip(frame.x, frame.z), start=1):
        if x:
            rho = evolve_dm(rho, X, position)
        if z:
            rho = evolve_dm(rho, Z, position)
    return rho
