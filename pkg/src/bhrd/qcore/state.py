"""Register layouts, pure states and density matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ops import apply_gate

MAX_PURE_QUBITS = 20
MAX_DENSITY_QUBITS = 10

# Tolerances shared by the whole package.
ATOL_ALGEBRA = 1e-12
ATOL_SPECTRAL = 1e-10
ATOL_REDUCTION = 1e-9


class LayoutError(ValueError):
    pass


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterLayout:
    """Named registers over ``n`` global qubits; each qubit belongs to exactly one register."""

    registers: Mapping[str, tuple[int, ...]]
    n: int

    def __post_init__(self):
        seen: set[int] = set()
        for name, wires in self.registers.items():
            for w in wires:
                if not 0 <= w < self.n:
                    raise LayoutError(f"register {name!r}: index {w} out of range [0, {self.n})")
                if w in seen:
                    raise LayoutError(f"qubit {w} appears in more than one register")
                seen.add(w)
        if len(seen) != self.n:
            missing = sorted(set(range(self.n)) - seen)
            raise LayoutError(f"qubits {missing} belong to no register")
        object.__setattr__(self, "registers", {k: tuple(v) for k, v in self.registers.items()})

    @classmethod
    def sequential(cls, *spec: tuple[str, int]) -> "RegisterLayout":
        """Layout with registers laid out left to right, e.g. ``sequential(("H", 1), ("B", 1))``."""
        regs: dict[str, tuple[int, ...]] = {}
        pos = 0
        for name, width in spec:
            if name in regs:
                raise LayoutError(f"duplicate register {name!r}")
            regs[name] = tuple(range(pos, pos + width))
            pos += width
        return cls(regs, pos)

    def __getitem__(self, name: str) -> tuple[int, ...]:
        return self.registers[name]

    def __contains__(self, name: str) -> bool:
        return name in self.registers

    def wires(self, *names: str) -> tuple[int, ...]:
        out: list[int] = []
        for name in names:
            out.extend(self.registers[name])
        return tuple(out)

    def resolve(self, target: str | Sequence[int] | int) -> tuple[int, ...]:
        if isinstance(target, str):
            return self.registers[target]
        if isinstance(target, (int, np.integer)):
            return (int(target),)
        return tuple(int(w) for w in target)


@dataclass(frozen=True, eq=False)
class PureState:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.layout.n:
            raise LayoutError(
                f"{amps.size} amplitudes do not fit {self.layout.n} qubits"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __getitem__(self, name: str) -> tuple[int, ...]:
        return self.layout[name]

    def with_tensor(self, psi: np.ndarray, layout: RegisterLayout | None = None) -> "PureState":
        return PureState(layout or self.layout, psi.reshape(-1))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise LayoutError(f"not a 2^n square matrix: shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def validate(self, atol: float = ATOL_ALGEBRA) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")


def as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def init_state(layout: RegisterLayout) -> PureState:
    if layout.n > MAX_PURE_QUBITS:
        raise SizeLimitError(f"{layout.n} qubits exceeds the pure-state limit {MAX_PURE_QUBITS}")
    amps = np.zeros(1 << layout.n, dtype=complex)
    amps[0] = 1.0
    return PureState(layout, amps)


def from_vector(vec: Sequence[complex], layout: RegisterLayout | None = None) -> PureState:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    n = vec.size.bit_length() - 1
    if layout is None:
        layout = RegisterLayout({f"q{i}": (i,) for i in range(n)}, n)
    return PureState(layout, vec)


def _check_targets(state: PureState, targets: Sequence[int]) -> None:
    if len(set(targets)) != len(targets):
        raise LayoutError(f"repeated target qubits {tuple(targets)}")
    for t in targets:
        if not 0 <= t < state.n:
            raise LayoutError(f"target qubit {t} out of range for {state.n} qubits")


def apply_unitary(
    state: PureState,
    gate: np.ndarray,
    targets: str | Sequence[int] | int,
    validate: bool = False,
) -> PureState:
    wires = state.layout.resolve(targets)
    _check_targets(state, wires)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (1 << len(wires),) * 2:
        raise ValueError(f"gate shape {gate.shape} does not match {len(wires)} targets")
    if validate and not np.allclose(gate.conj().T @ gate, np.eye(gate.shape[0]), atol=ATOL_SPECTRAL):
        raise ValueError("gate is not unitary")
    return state.with_tensor(apply_gate(state.tensor, gate, wires))


def probabilities(state: PureState, targets: str | Sequence[int]) -> np.ndarray:
    """Born distribution of a computational-basis measurement on ``targets``."""
    wires = state.layout.resolve(targets)
    _check_targets(state, wires)
    p = np.abs(state.tensor) ** 2
    rest = tuple(w for w in range(state.n) if w not in wires)
    p = p.sum(axis=rest) if rest else p
    # remaining axes are in increasing wire order; reorder to `wires`
    order = sorted(wires)
    p = np.transpose(p, [order.index(w) for w in wires]) if wires else p
    return np.asarray(p).reshape(-1)


def measure(state: PureState, targets: str | Sequence[int], rng) -> tuple[tuple[int, ...], PureState]:
    """Computational-basis measurement; returns the bits and the collapsed, renormalized state."""
    wires = state.layout.resolve(targets)
    probs = probabilities(state, wires)
    probs = probs / probs.sum()
    outcome = int(rng.choice(len(probs), p=probs))
    bits = tuple((outcome >> (len(wires) - 1 - j)) & 1 for j in range(len(wires)))
    psi = state.tensor.copy()
    for w, b in zip(wires, bits):
        idx = [slice(None)] * state.n
        idx[w] = 1 - b
        psi[tuple(idx)] = 0
    psi /= np.sqrt(probs[outcome])
    return bits, state.with_tensor(psi)


def reduced_density(state: PureState, keep: str | Sequence[int]) -> DensityMatrix:
    """Partial trace onto ``keep`` (kept qubits appear in the given order)."""
    wires = state.layout.resolve(keep)
    _check_targets(state, wires)
    if len(wires) > MAX_DENSITY_QUBITS:
        raise SizeLimitError(
            f"{len(wires)}-qubit density matrix exceeds the limit {MAX_DENSITY_QUBITS}"
        )
    rest = [w for w in range(state.n) if w not in wires]
    m = np.transpose(state.tensor, list(wires) + rest).reshape(1 << len(wires), -1)
    return DensityMatrix(m @ m.conj().T)


def overlap(a: PureState, b: PureState) -> complex:
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity_pure(a: PureState | np.ndarray, b: PureState | np.ndarray) -> float:
    va = a.amplitudes if isinstance(a, PureState) else np.asarray(a).reshape(-1)
    vb = b.amplitudes if isinstance(b, PureState) else np.asarray(b).reshape(-1)
    return float(abs(np.vdot(va, vb)) ** 2)


def tensor_product(*states: PureState, names: Iterable[str] | None = None) -> PureState:
    """Kronecker product; register names are taken from each factor (must not clash)."""
    regs: dict[str, tuple[int, ...]] = {}
    amps = np.ones(1, dtype=complex)
    offset = 0
    for st in states:
        for name, wires in st.layout.registers.items():
            if name in regs:
                raise LayoutError(f"register {name!r} appears in two factors")
            regs[name] = tuple(w + offset for w in wires)
        offset += st.n
        amps = np.kron(amps, st.amplitudes)
    return PureState(RegisterLayout(regs, offset), amps)
