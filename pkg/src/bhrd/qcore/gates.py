"""Standard gate matrices. Qubit 0 of a multi-qubit gate is its most significant bit."""

from __future__ import annotations

from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase(phi: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * phi)]).astype(complex)


def controlled(gate: np.ndarray, n_controls: int = 1, ctrl_values: Sequence[int] | None = None) -> np.ndarray:
    """Block matrix applying `gate` when the control qubits equal `ctrl_values` (default all ones)."""
    if ctrl_values is None:
        ctrl_values = [1] * n_controls
    if len(ctrl_values) != n_controls:
        raise ValueError("ctrl_values length must match n_controls")
    d = gate.shape[0]
    active = 0
    for v in ctrl_values:
        active = (active << 1) | int(v)
    out = np.eye(d << n_controls, dtype=complex)
    lo = active * d
    out[lo:lo + d, lo:lo + d] = gate
    return out


def mcx(n_controls: int, ctrl_values: Sequence[int] | None = None) -> np.ndarray:
    return controlled(X, n_controls, ctrl_values)


def permutation(fn, n_in: int) -> np.ndarray:
    """Reversible gate |i>|b> -> |i>|b xor fn(i)> on n_in + 1 qubits."""
    dim = 1 << (n_in + 1)
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(1 << n_in):
        f = int(fn(i)) & 1
        for b in (0, 1):
            out[(i << 1) | (b ^ f), (i << 1) | b] = 1.0
    return out


def pauli(x: int, z: int) -> np.ndarray:
    """The operator X^x Z^z (Z acts first)."""
    return np.linalg.matrix_power(X, x) @ np.linalg.matrix_power(Z, z)
