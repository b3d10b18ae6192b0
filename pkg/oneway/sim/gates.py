"""
Operator library for the simulator.

Single-qubit operators are 2x2 complex arrays, two-qubit operators are 4x4
with the first factor on the most significant bit. Gate words spell local
unitaries as matrix products read left to right, so ``"XH"`` is ``X @ H``.
"""

from __future__ import annotations

import math
from functools import reduce

import numpy as np

UNITARY_TOLERANCE = 1e-10

_SQRT2_INV = 1 / math.sqrt(2)


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    matrix.setflags(write=False)
    return matrix


I2 = _frozen(np.eye(2))
X = _frozen([[0, 1], [1, 0]])
Y = _frozen([[0, -1j], [1j, 0]])
Z = _frozen([[1, 0], [0, -1]])
H = _frozen(np.array([[1, 1], [1, -1]]) * _SQRT2_INV)
CZ = _frozen(np.diag([1, 1, 1, -1]))
CNOT = _frozen([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
_WORD_LETTERS = {"I": I2, "X": X, "Z": Z, "H": H}

ZERO = _frozen([1, 0])
ONE = _frozen([0, 1])
PLUS = _frozen(np.array([1, 1]) * _SQRT2_INV)
MINUS = _frozen(np.array([1, -1]) * _SQRT2_INV)


def rz(alpha: float) -> np.ndarray:
    """R_z(alpha) = exp(-i alpha Z / 2)."""
    return np.array(
        [[np.exp(-0.5j * alpha), 0], [0, np.exp(0.5j * alpha)]], dtype=complex
    )


def rx(beta: float) -> np.ndarray:
    """R_x(beta) = exp(-i beta X / 2)."""
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def equatorial_ket(angle: float, outcome: int = 0) -> np.ndarray:
    """
    Equatorial measurement ket (|0> + (-1)^outcome e^{-i angle} |1>) / sqrt(2).

    Args:
        angle: Measurement angle in radians
        outcome: 0 for the "+" vector, 1 for the "-" vector

    Returns:
        Normalized 2-vector
    """
    sign = -1 if outcome else 1
    return np.array([1, sign * np.exp(-1j * angle)], dtype=complex) * _SQRT2_INV


def z_ket(outcome: int) -> np.ndarray:
    return np.array(ONE if outcome else ZERO)


def kron_all(*operators: np.ndarray) -> np.ndarray:
    """Kronecker product of the operators, first argument most significant."""
    return reduce(np.kron, operators, np.ones((1, 1), dtype=complex)).astype(complex)


def is_unitary(operator: np.ndarray, tol: float = UNITARY_TOLERANCE) -> bool:
    operator = np.asarray(operator)
    if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:
        return False
    identity = np.eye(operator.shape[0])
    return bool(np.allclose(operator @ operator.conj().T, identity, atol=tol, rtol=0))


def gate_word(word: str) -> np.ndarray:
    """
    Build the 2x2 operator spelled by a gate word.

    Letters are I, X, Z and H; the word is a matrix product read left to
    right, e.g. ``"ZH"`` means ``Z @ H`` (H acts first). The empty word is
    the identity.

    Raises:
        ValueError: If the word contains an unknown letter
    """
    matrix = np.array(I2)
    for letter in word.upper():
        if letter not in _WORD_LETTERS:
            raise ValueError(f"Unknown gate letter '{letter}' in word '{word}'")
        matrix = matrix @ _WORD_LETTERS[letter]
    return matrix


def pauli_exponents(operator: np.ndarray, tol: float = 1e-9) -> tuple[int, int] | None:
    """
    Find (x, z) with operator proportional to X^x Z^z, up to a unit phase.

    Returns:
        The exponent pair, or None if the operator is not a Pauli
    """
    for x in (0, 1):
        for z in (0, 1):
            pauli = np.linalg.matrix_power(X, x) @ np.linalg.matrix_power(Z, z)
            overlap = abs(np.trace(pauli.conj().T @ operator)) / 2
            if abs(overlap - 1) < tol:
                return x, z
    return None


def conjugation_exponents(
    unitary: np.ndarray,
) -> tuple[tuple[int, int], tuple[int, int]]:
    """
    Exponents of U X U^dagger and U Z U^dagger as Pauli products.

    Returns:
        ((a, b), (c, d)) with U X U^dagger ~ X^a Z^b and U Z U^dagger ~ X^c Z^d

    Raises:
        ValueError: If U does not map Paulis to Paulis
    """
    images = []
    for pauli in (X, Z):
        exponents = pauli_exponents(unitary @ pauli @ unitary.conj().T)
        if exponents is None:
            raise ValueError("Operator does not normalize the Pauli group")
        images.append(exponents)
    return images[0], images[1]
