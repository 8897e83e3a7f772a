"""Distances and distinguishing advantage.

``trace_distance`` is half the trace norm of the difference, so that it equals
the best advantage any two-outcome measurement achieves.
"""

from __future__ import annotations

import numpy as np

from .channel import Distinguisher
from .state import DensityMatrix, LayoutError, as_matrix

EPR = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def _pair(rho0, rho1) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_matrix(rho0), as_matrix(rho1)
    if a.shape != b.shape:
        raise LayoutError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def trace_distance(rho0, rho1) -> float:
    a, b = _pair(rho0, rho1)
    ev = np.linalg.eigvalsh((b - a + (b - a).conj().T) / 2)
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def advantage(d: Distinguisher, rho0, rho1) -> float:
    """Signed advantage Tr[O (rho1 - rho0)], computed exactly from the induced operator."""
    a, b = _pair(rho0, rho1)
    if a.shape[0] != 1 << d.n_in:
        raise LayoutError(f"distinguisher takes {d.n_in} qubits, states have {a.shape[0]} dims")
    return float(np.real(np.trace(d.operator @ (b - a))))


def accept_probability(d: Distinguisher, rho) -> float:
    return float(np.real(np.trace(d.operator @ as_matrix(rho))))


def epr_overlap(rho_bd) -> float:
    m = as_matrix(rho_bd)
    if m.shape != (4, 4):
        raise LayoutError(f"epr_overlap needs a 2-qubit density matrix, got {m.shape}")
    return float(np.real(EPR.conj() @ m @ EPR))


def helstrom_projector(rho0, rho1, atol: float = 1e-12) -> np.ndarray:
    """Projector onto the positive eigenspace of rho1 - rho0."""
    a, b = _pair(rho0, rho1)
    w, v = np.linalg.eigh((b - a + (b - a).conj().T) / 2)
    pos = v[:, w > atol]
    return pos @ pos.conj().T


def pure_density(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return DensityMatrix(np.outer(v, v.conj()))
