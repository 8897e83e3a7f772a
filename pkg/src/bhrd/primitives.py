"""EPR pairs, Pauli masks, Bell-basis readout and teleportation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .qcore import (
    PureState,
    RegisterLayout,
    SeededRng,
    apply_unitary,
    gates,
    init_state,
    measure,
    probabilities,
)
from .qcore.state import LayoutError


@dataclass(frozen=True, order=True)
class PauliKey:
    """The pair of bits selecting the mask X^x Z^z."""

    x: int
    z: int

    def __post_init__(self):
        if self.x not in (0, 1) or self.z not in (0, 1):
            raise ValueError(f"PauliKey bits must be 0/1, got ({self.x}, {self.z})")

    @property
    def index(self) -> int:
        return 2 * self.x + self.z

    @classmethod
    def from_index(cls, i: int) -> "PauliKey":
        return cls((i >> 1) & 1, i & 1)

    def matrix(self) -> np.ndarray:
        return gates.pauli(self.x, self.z)


ALL_KEYS: tuple[PauliKey, ...] = tuple(PauliKey.from_index(i) for i in range(4))


def keys() -> Iterator[PauliKey]:
    return iter(ALL_KEYS)


def _pair_layout() -> RegisterLayout:
    return RegisterLayout.sequential(("A", 1), ("B", 1))


def make_epr() -> PureState:
    s = init_state(_pair_layout())
    s = apply_unitary(s, gates.H, 0)
    return apply_unitary(s, gates.CNOT, (0, 1))


def make_epr_xz(k: PauliKey) -> PureState:
    return pauli_mask(make_epr(), 1, k)


def pauli_mask(state: PureState, qubit: int, k: PauliKey) -> PureState:
    """Apply Z^z then X^x to ``qubit``."""
    if k.z:
        state = apply_unitary(state, gates.Z, qubit)
    if k.x:
        state = apply_unitary(state, gates.X, qubit)
    return state


def bell_rotation(state: PureState, q_b: int, q_d: int) -> PureState:
    """(H_B (x) I_D) CNOT_{BD}: maps the Bell basis onto the computational basis."""
    if q_b == q_d:
        raise LayoutError("Bell readout needs two distinct qubits")
    state = apply_unitary(state, gates.CNOT, (q_b, q_d))
    return apply_unitary(state, gates.H, q_b)


def calibrate_readout() -> dict[tuple[int, int], PauliKey]:
    """Map (bit on B, bit on D) after the Bell rotation to the key of |epr_xz>."""
    table: dict[tuple[int, int], PauliKey] = {}
    for k in ALL_KEYS:
        p = probabilities(bell_rotation(make_epr_xz(k), 0, 1), (0, 1))
        outcome = int(np.argmax(p))
        if not np.isclose(p[outcome], 1.0, atol=1e-12):
            raise RuntimeError(f"Bell rotation of key {k} is not deterministic")
        table[(outcome >> 1, outcome & 1)] = k
    return table


# Frozen result of calibrate_readout(): the rotated pair reads (z, x).
READOUT: dict[tuple[int, int], PauliKey] = {
    (0, 0): PauliKey(0, 0),
    (0, 1): PauliKey(1, 0),
    (1, 0): PauliKey(0, 1),
    (1, 1): PauliKey(1, 1),
}


def readout_wires(q_b, q_d):
    """Return (wire carrying x, wire carrying z) after the Bell rotation on (q_b, q_d)."""
    x_on_d = READOUT[(0, 1)] == PauliKey(1, 0)
    return (q_d, q_b) if x_on_d else (q_b, q_d)


@dataclass(frozen=True)
class BellOutcome:
    key: PauliKey
    raw: tuple[int, int]


def bell_distribution(state: PureState, q_b: int, q_d: int) -> dict[PauliKey, float]:
    """Exact distribution of the Bell-basis readout on (q_b, q_d)."""
    p = probabilities(bell_rotation(state, q_b, q_d), (q_b, q_d))
    return {READOUT[(i >> 1, i & 1)]: float(p[i]) for i in range(4)}


def bell_readout(state: PureState, q_b: int, q_d: int, rng: SeededRng) -> tuple[BellOutcome, PureState]:
    rotated = bell_rotation(state, q_b, q_d)
    raw, post = measure(rotated, (q_b, q_d), rng)
    return BellOutcome(READOUT[raw], raw), post


def teleport(
    state: PureState, data: int, epr_a: int, epr_b: int, rng: SeededRng
) -> tuple[PauliKey, PureState]:
    """Teleport ``data`` into ``epr_b`` through the pair (epr_a, epr_b).

    The pair must hold |epr>; that is not checked.
    """
    if len({data, epr_a, epr_b}) != 3:
        raise LayoutError("teleport needs three distinct qubits")
    outcome, post = bell_readout(state, data, epr_a, rng)
    k = outcome.key
    # correction Z^z X^x: X first
    if k.x:
        post = apply_unitary(post, gates.X, epr_b)
    if k.z:
        post = apply_unitary(post, gates.Z, epr_b)
    return k, post


def teleport_branches(state: PureState, data: int, epr_a: int, epr_b: int) -> dict[PauliKey, tuple[float, PureState]]:
    """Every measurement branch of ``teleport`` with its probability and corrected post-state."""
    rotated = bell_rotation(state, data, epr_a)
    out: dict[PauliKey, tuple[float, PureState]] = {}
    psi = rotated.tensor
    for (b0, b1), k in READOUT.items():
        proj = np.zeros_like(psi)
        idx = [slice(None)] * rotated.n
        idx[data], idx[epr_a] = b0, b1
        proj[tuple(idx)] = psi[tuple(idx)]
        prob = float(np.sum(np.abs(proj) ** 2))
        post = rotated.with_tensor(proj / np.sqrt(prob)) if prob > 0 else rotated.with_tensor(proj)
        if k.x:
            post = apply_unitary(post, gates.X, epr_b)
        if k.z:
            post = apply_unitary(post, gates.Z, epr_b)
        out[k] = (prob, post)
    return out
